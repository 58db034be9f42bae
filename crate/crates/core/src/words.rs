//! Words over the alphabet `1..=d` and the index sets `Λ_N` (length `≤ N`)
//! and `∂Λ_N` (length exactly `N`).
//!
//! All block layouts in the crate use length-lexicographic order: shorter
//! words first, ties broken lexicographically on the letters.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite word `i₁⋯i_k`; the empty word is the neutral element `∅`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, checking every letter against the alphabet `1..=d`.
    pub fn new(letters: Vec<usize>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroAlphabet);
        }
        if let Some(&letter) = letters.iter().find(|&&l| l == 0 || l > d) {
            return Err(Error::LetterOutOfRange { letter, d });
        }
        Ok(Word(letters))
    }

    /// Builds a word without an alphabet check.
    pub fn from_letters(letters: impl Into<Vec<usize>>) -> Self {
        Word(letters.into())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `αi`
    pub fn append(&self, letter: usize) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    /// `iα`
    pub fn prepend(&self, letter: usize) -> Word {
        let mut letters = Vec::with_capacity(self.0.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.0);
        Word(letters)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    pub fn max_letter(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Splits `αi` into `(α, i)`; `None` for the empty word.
    pub fn split_last(&self) -> Option<(Word, usize)> {
        let (&last, rest) = self.0.split_last()?;
        Some((Word(rest.to_vec()), last))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        let sep = if self.0.iter().any(|&l| l > 9) { "." } else { "" };
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

impl From<&[usize]> for Word {
    fn from(letters: &[usize]) -> Self {
        Word(letters.to_vec())
    }
}

/// `α̃ = i_k⋯i₁` for `α = i₁⋯i_k`.
pub fn reverse_word(w: &Word) -> Word {
    let mut letters = w.0.clone();
    letters.reverse();
    Word(letters)
}

/// `|Λ_N|`: `(d^{N+1} − 1)/(d − 1)` for `d ≥ 2`, `N + 1` for `d = 1`.
pub fn lambda_count(d: usize, level: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::ZeroAlphabet);
    }
    let overflow = Error::Overflow { d, level };
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for n in 0..=level {
        total = total.checked_add(layer).ok_or_else(|| overflow.clone())?;
        if n < level {
            layer = layer.checked_mul(d).ok_or_else(|| overflow.clone())?;
        }
    }
    Ok(total)
}

/// Canonically ordered `Λ_N` over `d` letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSet {
    d: usize,
    max_len: usize,
    words: Vec<Word>,
}

impl WordSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Word> {
        self.words.iter()
    }

    /// Number of words of length `≤ level`; these form a prefix of the set.
    pub fn prefix_len(&self, level: usize) -> usize {
        if level >= self.max_len {
            return self.words.len();
        }
        // lambda_count(d, level) <= len, cannot overflow
        lambda_count(self.d, level).expect("prefix of an enumerated set")
    }

    /// Words of length `≤ level`.
    pub fn up_to(&self, level: usize) -> &[Word] {
        &self.words[..self.prefix_len(level)]
    }

    /// `∂Λ_n`: words of length exactly `n`.
    pub fn boundary(&self, n: usize) -> &[Word] {
        if n > self.max_len {
            return &[];
        }
        let start = if n == 0 { 0 } else { self.prefix_len(n - 1) };
        &self.words[start..self.prefix_len(n)]
    }

    /// Position of `w` in the canonical order, computed arithmetically.
    pub fn index_of(&self, w: &Word) -> Option<usize> {
        let n = w.len();
        if n > self.max_len {
            return None;
        }
        let mut lex = 0usize;
        for &letter in w.letters() {
            if letter == 0 || letter > self.d {
                return None;
            }
            lex = lex * self.d + (letter - 1);
        }
        let offset = if n == 0 { 0 } else { self.prefix_len(n - 1) };
        Some(offset + lex)
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.index_of(w).is_some()
    }
}

/// Enumerates `Λ_{max_len}` in length-lexicographic order.
pub fn enumerate_words(d: usize, max_len: usize) -> Result<WordSet> {
    let count = lambda_count(d, max_len)?;
    let mut words = Vec::with_capacity(count);
    words.push(Word::empty());
    let mut layer_start = 0;
    for _ in 0..max_len {
        let layer_end = words.len();
        for k in layer_start..layer_end {
            for letter in 1..=d {
                let next = words[k].append(letter);
                words.push(next);
            }
        }
        layer_start = layer_end;
    }
    debug_assert_eq!(words.len(), count);
    Ok(WordSet { d, max_len, words })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[usize]) -> Word {
        Word::from(letters)
    }

    #[test]
    fn lambda_two_over_two_letters() {
        let set = enumerate_words(2, 2).unwrap();
        let expected: Vec<Word> = [
            &[][..],
            &[1],
            &[2],
            &[1, 1],
            &[1, 2],
            &[2, 1],
            &[2, 2],
        ]
        .iter()
        .map(|l| w(l))
        .collect();
        assert_eq!(set.words(), expected.as_slice());
        assert_eq!(set.boundary(2), &expected[3..]);
        assert_eq!(set.up_to(1), &expected[..3]);
    }

    #[test]
    fn level_zero_is_neutral_element() {
        let set = enumerate_words(2, 0).unwrap();
        assert_eq!(set.words(), &[Word::empty()]);
    }

    #[test]
    fn three_letters_level_one() {
        let set = enumerate_words(3, 1).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.words()[3], w(&[3]));
    }

    #[test]
    fn rejects_empty_alphabet() {
        assert_eq!(enumerate_words(0, 2), Err(Error::ZeroAlphabet));
        assert_eq!(lambda_count(0, 1), Err(Error::ZeroAlphabet));
        assert!(Word::new(vec![1], 0).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(lambda_count(2, 2), Ok(7));
        assert_eq!(lambda_count(1, 5), Ok(6));
        assert_eq!(lambda_count(2, 0), Ok(1));
        assert!(matches!(
            lambda_count(2, 200),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn reversal() {
        assert_eq!(reverse_word(&Word::empty()), Word::empty());
        assert_eq!(reverse_word(&w(&[1, 2])), w(&[2, 1]));
        let x = w(&[1, 2, 2, 1]);
        assert_eq!(reverse_word(&reverse_word(&x)), x);
    }

    #[test]
    fn counts_match_enumeration() {
        for d in 1..=3 {
            for n in 0..=4 {
                assert_eq!(enumerate_words(d, n).unwrap().len(), lambda_count(d, n).unwrap());
            }
        }
    }

    #[test]
    fn boundary_is_one_letter_extension_of_previous_boundary() {
        for d in 1..=3 {
            for n in 1..=4 {
                let set = enumerate_words(d, n).unwrap();
                let mut grown: Vec<Word> = set
                    .boundary(n - 1)
                    .iter()
                    .flat_map(|a| (1..=d).map(move |i| a.append(i)))
                    .collect();
                grown.sort();
                grown.dedup();
                assert_eq!(grown.as_slice(), set.boundary(n));
            }
        }
    }

    #[test]
    fn reversal_is_a_bijection_on_each_boundary() {
        let set = enumerate_words(3, 4).unwrap();
        for n in 0..=4 {
            let mut reversed: Vec<Word> = set.boundary(n).iter().map(reverse_word).collect();
            reversed.sort();
            assert_eq!(reversed.as_slice(), set.boundary(n));
        }
    }

    #[test]
    fn index_matches_position() {
        let set = enumerate_words(3, 3).unwrap();
        for (k, word) in set.iter().enumerate() {
            assert_eq!(set.index_of(word), Some(k));
        }
        assert_eq!(set.index_of(&w(&[1, 1, 1, 1])), None);
        assert_eq!(set.index_of(&w(&[4])), None);
    }

    #[test]
    fn large_alphabet_display() {
        let word = Word::new(vec![12, 3], 12).unwrap();
        assert_eq!(word.to_string(), "12.3");
        assert_eq!(w(&[1, 2]).to_string(), "12");
        assert_eq!(Word::empty().to_string(), "∅");
    }
}
