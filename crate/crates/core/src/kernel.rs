//! Truncated kernels `K: Λ_N × Λ_N → L(ℂ^m)`, their Gram matrices, the
//! one-step shifted kernel `K_Σ(α, β) = Σᵢ K(αi, βi)` and the dominance test
//! `K_Σ ≤ K` on the interior `Λ_{N−1}`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{check_psd, eigh, psd_verdict, CMat, HermitianMatrix, PsdCheck, ToleranceConfig};
use crate::words::{enumerate_words, Word, WordSet};

/// Absolute tolerance for `K(β, α) = K(α, β)*`.
pub const KERNEL_SYMMETRY_TOL: f64 = 1e-12;

/// One supplied block `K(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEntry {
    pub row: Word,
    pub col: Word,
    pub block: CMat,
}

/// Kernel data as supplied, possibly only for canonical pairs `row ≤ col`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawKernel {
    pub d: usize,
    pub level: usize,
    pub dim_h: usize,
    pub entries: Vec<KernelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub d: usize,
    pub level: usize,
    pub dim_h: usize,
    pub words: usize,
    pub supplied_blocks: usize,
    /// Blocks obtained as adjoints of supplied ones.
    pub filled_blocks: usize,
    pub max_symmetry_deviation: f64,
    pub symmetry_tolerance: f64,
}

/// A validated kernel on `Λ_N × Λ_N`, stored for every ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedKernel {
    d: usize,
    level: usize,
    dim_h: usize,
    words: WordSet,
    blocks: Vec<CMat>,
}

/// Checks completeness, block shapes and Hermitian symmetry, filling adjoints
/// for pairs given in one orientation only.
pub fn validate_kernel(raw: &RawKernel) -> Result<(TruncatedKernel, ValidationReport)> {
    let words = enumerate_words(raw.d, raw.level)?;
    let n = words.len();
    let m = raw.dim_h;
    let mut slots: Vec<Option<CMat>> = vec![None; n * n];
    for entry in &raw.entries {
        let a = locate(&words, &entry.row)?;
        let b = locate(&words, &entry.col)?;
        if entry.block.shape() != (m, m) {
            return Err(Error::ShapeMismatch {
                row: entry.row.clone(),
                col: entry.col.clone(),
                rows: entry.block.nrows(),
                cols: entry.block.ncols(),
                expected: m,
            });
        }
        let slot = &mut slots[a * n + b];
        if slot.is_some() {
            return Err(Error::DuplicateEntry {
                row: entry.row.clone(),
                col: entry.col.clone(),
            });
        }
        *slot = Some(entry.block.clone());
    }

    let mut max_dev: f64 = 0.0;
    let mut filled = 0;
    let mut blocks = vec![CMat::zeros(m, m); n * n];
    for a in 0..n {
        for b in a..n {
            let upper = slots[a * n + b].take();
            let lower = slots[b * n + a].take();
            let block = match (upper, lower) {
                (None, None) => {
                    return Err(Error::MissingEntry {
                        row: words.words()[a].clone(),
                        col: words.words()[b].clone(),
                    })
                }
                (Some(u), Some(l)) => {
                    let dev = max_abs(&(&u - l.adjoint()));
                    max_dev = max_dev.max(dev);
                    if dev > KERNEL_SYMMETRY_TOL {
                        return Err(Error::SymmetryViolation {
                            row: words.words()[a].clone(),
                            col: words.words()[b].clone(),
                            deviation: dev,
                        });
                    }
                    (u + l.adjoint()).scale(0.5)
                }
                (Some(u), None) => {
                    if a != b {
                        filled += 1;
                    }
                    u
                }
                (None, Some(l)) => {
                    filled += 1;
                    l.adjoint()
                }
            };
            if a == b {
                let dev = max_abs(&(&block - block.adjoint()));
                max_dev = max_dev.max(dev);
                if dev > KERNEL_SYMMETRY_TOL {
                    return Err(Error::SymmetryViolation {
                        row: words.words()[a].clone(),
                        col: words.words()[a].clone(),
                        deviation: dev,
                    });
                }
                blocks[a * n + a] = (&block + block.adjoint()).scale(0.5);
            } else {
                blocks[b * n + a] = block.adjoint();
                blocks[a * n + b] = block;
            }
        }
    }
    let report = ValidationReport {
        d: raw.d,
        level: raw.level,
        dim_h: m,
        words: n,
        supplied_blocks: raw.entries.len(),
        filled_blocks: filled,
        max_symmetry_deviation: max_dev,
        symmetry_tolerance: KERNEL_SYMMETRY_TOL,
    };
    let kernel = TruncatedKernel {
        d: raw.d,
        level: raw.level,
        dim_h: m,
        words,
        blocks,
    };
    Ok((kernel, report))
}

fn locate(words: &WordSet, w: &Word) -> Result<usize> {
    words.index_of(w).ok_or_else(|| Error::WordOutsideDomain {
        word: w.clone(),
        level: words.max_len(),
    })
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

impl TruncatedKernel {
    /// Kernel with `K(α, β) = f(α, β)` for every ordered pair, validated.
    pub fn from_fn(
        d: usize,
        level: usize,
        dim_h: usize,
        f: impl Fn(&Word, &Word) -> CMat,
    ) -> Result<Self> {
        let words = enumerate_words(d, level)?;
        let mut entries = Vec::with_capacity(words.len() * words.len());
        for a in words.iter() {
            for b in words.iter() {
                entries.push(KernelEntry {
                    row: a.clone(),
                    col: b.clone(),
                    block: f(a, b),
                });
            }
        }
        let raw = RawKernel {
            d,
            level,
            dim_h,
            entries,
        };
        validate_kernel(&raw).map(|(k, _)| k)
    }

    /// Gram kernel `K(α, β) = V_α* V_β` of a vector family; each `V_α` is an
    /// `ambient × dim_h` matrix.
    pub fn from_vectors(
        d: usize,
        level: usize,
        dim_h: usize,
        vectors: impl Fn(&Word) -> CMat,
    ) -> Result<Self> {
        let words = enumerate_words(d, level)?;
        let vs: Vec<CMat> = words.iter().map(&vectors).collect();
        let ambient = vs.first().map(|v| v.nrows()).unwrap_or(0);
        for (w, v) in words.iter().zip(&vs) {
            if v.shape() != (ambient, dim_h) {
                return Err(Error::DimensionMismatch(format!(
                    "vector V_{w} has shape {:?}, expected ({ambient}, {dim_h})",
                    v.shape()
                )));
            }
        }
        let n = words.len();
        Self::from_fn(d, level, dim_h, |a, b| {
            let ia = words.index_of(a).expect("enumerated");
            let ib = words.index_of(b).expect("enumerated");
            debug_assert!(ia < n && ib < n);
            vs[ia].adjoint() * &vs[ib]
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn words(&self) -> &WordSet {
        &self.words
    }

    /// `K(α, β)`; `None` outside `Λ_N`.
    pub fn get(&self, a: &Word, b: &Word) -> Option<&CMat> {
        let ia = self.words.index_of(a)?;
        let ib = self.words.index_of(b)?;
        Some(&self.blocks[ia * self.words.len() + ib])
    }

    pub(crate) fn block_at(&self, ia: usize, ib: usize) -> &CMat {
        &self.blocks[ia * self.words.len() + ib]
    }

    /// Every ordered pair with its block, in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (&Word, &Word, &CMat)> {
        let n = self.words.len();
        self.blocks.iter().enumerate().map(move |(k, block)| {
            (&self.words.words()[k / n], &self.words.words()[k % n], block)
        })
    }

    /// Same data restricted to `Λ_level`.
    pub fn restrict(&self, level: usize) -> Result<TruncatedKernel> {
        if level > self.level {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.level,
            });
        }
        let words = enumerate_words(self.d, level)?;
        let n = words.len();
        let mut blocks = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                blocks.push(self.block_at(a, b).clone());
            }
        }
        Ok(TruncatedKernel {
            d: self.d,
            level,
            dim_h: self.dim_h,
            words,
            blocks,
        })
    }

    /// `K − other` on a common index set.
    pub fn sub(&self, other: &TruncatedKernel) -> Result<TruncatedKernel> {
        if (self.d, self.level, self.dim_h) != (other.d, other.level, other.dim_h) {
            return Err(Error::DimensionMismatch(format!(
                "kernel (d={}, N={}, m={}) vs (d={}, N={}, m={})",
                self.d, self.level, self.dim_h, other.d, other.level, other.dim_h
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a - b)
            .collect();
        Ok(TruncatedKernel {
            blocks,
            ..self.clone()
        })
    }

    pub fn scale(&self, factor: f64) -> TruncatedKernel {
        TruncatedKernel {
            blocks: self.blocks.iter().map(|b| b.scale(factor)).collect(),
            ..self.clone()
        }
    }

    /// Canonical blocks `K(α, β)` with `α ≤ β`, keyed by pair.
    pub fn upper_entries(&self) -> BTreeMap<(Word, Word), CMat> {
        let n = self.words.len();
        let mut out = BTreeMap::new();
        for a in 0..n {
            for b in a..n {
                out.insert(
                    (self.words.words()[a].clone(), self.words.words()[b].clone()),
                    self.block_at(a, b).clone(),
                );
            }
        }
        out
    }
}

/// Block Gram matrix `[K(wⱼ, wₖ)]` over an ordered word list.
pub fn gram(k: &TruncatedKernel, words: &[Word]) -> Result<HermitianMatrix> {
    let idx: Vec<usize> = words
        .iter()
        .map(|w| locate(&k.words, w))
        .collect::<Result<_>>()?;
    Ok(gram_by_index(k, &idx))
}

pub(crate) fn gram_by_index(k: &TruncatedKernel, idx: &[usize]) -> HermitianMatrix {
    let m = k.dim_h;
    let size = idx.len() * m;
    let mut g = CMat::zeros(size, size);
    for (j, &a) in idx.iter().enumerate() {
        for (l, &b) in idx.iter().enumerate() {
            g.view_mut((j * m, l * m), (m, m)).copy_from(k.block_at(a, b));
        }
    }
    HermitianMatrix::new(g).expect("validated kernel blocks are Hermitian-symmetric")
}

/// Gram over the whole of `Λ_level`.
pub fn gram_level(k: &TruncatedKernel, level: usize) -> Result<HermitianMatrix> {
    if level > k.level {
        return Err(Error::LevelOutOfRange {
            level,
            max: k.level,
        });
    }
    let idx: Vec<usize> = (0..k.words.prefix_len(level)).collect();
    Ok(gram_by_index(k, &idx))
}

/// `K_Σ(α, β) = Σᵢ K(αi, βi)` on `Λ_{N−1}`.
pub fn shifted_kernel(k: &TruncatedKernel) -> Result<TruncatedKernel> {
    if k.level == 0 {
        return Err(Error::NoRoomToShift);
    }
    let words = enumerate_words(k.d, k.level - 1)?;
    let n = words.len();
    let m = k.dim_h;
    let mut blocks = Vec::with_capacity(n * n);
    for a in words.iter() {
        for b in words.iter() {
            let mut sum = CMat::zeros(m, m);
            for i in 1..=k.d {
                sum += k.get(&a.append(i), &b.append(i)).expect("αi ∈ Λ_N");
            }
            blocks.push(sum);
        }
    }
    Ok(TruncatedKernel {
        d: k.d,
        level: k.level - 1,
        dim_h: m,
        words,
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    /// Positivity of `Gram(K, Λ_N)`.
    pub pd_full: PsdCheck,
    /// Positivity of `Gram(K − K_Σ, Λ_{N−1})`.
    pub dominance: PsdCheck,
    /// Eigenvalues of `Gram(K − K_Σ, Λ_{N−1})`, ascending.
    pub difference_spectrum: Vec<f64>,
}

impl DominanceReport {
    pub fn passes(&self) -> bool {
        self.pd_full.is_psd && self.dominance.is_psd
    }
}

pub fn check_dominance(k: &TruncatedKernel, cfg: &ToleranceConfig) -> Result<DominanceReport> {
    let shifted = shifted_kernel(k)?;
    let pd_full = check_psd(&gram_level(k, k.level)?, cfg);
    let difference = k.restrict(k.level - 1)?.sub(&shifted)?;
    let diff_gram = gram_level(&difference, difference.level)?;
    let spectrum = eigh(&diff_gram).values;
    Ok(DominanceReport {
        pd_full,
        dominance: psd_verdict(&spectrum, cfg),
        difference_spectrum: spectrum,
    })
}
