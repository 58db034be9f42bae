//! Reference kernels rebuilt from their defining vectors, plus generators for
//! randomized kernels that satisfy the dominance hypothesis.
//!
//! The generators take a uniform `[0, 1)` sampler instead of an RNG so the
//! library carries no RNG dependency; callers wrap whatever generator they use.

use crate::error::Result;
use crate::hausdorff::{hankel_kernel, moments, AtomicMeasure};
use crate::kernel::{check_dominance, TruncatedKernel};
use crate::numerics::{c, column_gram_lambda_max, CMat, ToleranceConfig, C64};
use crate::words::{enumerate_words, Word};

fn basis(dim: usize, k: usize, scale: f64) -> CMat {
    let mut v = CMat::zeros(dim, 1);
    v[(k, 0)] = c(scale);
    v
}

/// Vectors `V_α` on `Λ_level` generated by `V_∅` and `V_{αi} = T_i V_α`.
fn model_vectors(d: usize, level: usize, v_empty: &CMat, ts: &[CMat]) -> Vec<(Word, CMat)> {
    let words = enumerate_words(d, level).expect("d >= 1");
    let mut out: Vec<(Word, CMat)> = Vec::with_capacity(words.len());
    for w in words.iter() {
        let v = match w.split_last() {
            None => v_empty.clone(),
            Some((prefix, i)) => {
                let k = words.index_of(&prefix).expect("prefix enumerated earlier");
                &ts[i - 1] * &out[k].1
            }
        };
        out.push((w.clone(), v));
    }
    out
}

fn lookup(vectors: &[(Word, CMat)], w: &Word) -> CMat {
    vectors
        .iter()
        .find(|(x, _)| x == w)
        .map(|(_, v)| v.clone())
        .expect("word in fixture")
}

/// The `T` operators of the shift-consistent reference example on `ℂ³`:
/// `T_i e₀ = ½ e_i`, `T_i e_j = 0` for `j ≥ 1`.
pub fn example_d1_operators() -> Vec<CMat> {
    (1..=2)
        .map(|i| {
            let mut t = CMat::zeros(3, 3);
            t[(i, 0)] = c(0.5);
            t
        })
        .collect()
}

/// Shift-consistent reference kernel: `d = 2`, `N = 2`, scalar, with
/// `V_∅ = e₀`, `V_i = ½ e_i` and level-2 vectors `V_{αi} = T_i V_α`.
pub fn example_d1() -> TruncatedKernel {
    let ts = example_d1_operators();
    let vectors = model_vectors(2, 2, &basis(3, 0, 1.0), &ts);
    TruncatedKernel::from_vectors(2, 2, 1, |w| lookup(&vectors, w)).expect("fixture is valid")
}

/// Reference kernel whose boundary is not shift-consistent: on `ℂ⁴`,
/// `V_∅ = e₀`, `V_i = ½ e_i`, `V₁₂ = ¼ e₃` and the other level-2 vectors zero.
pub fn example_d2() -> TruncatedKernel {
    TruncatedKernel::from_vectors(2, 2, 1, |w| match w.letters() {
        [] => basis(4, 0, 1.0),
        [1] => basis(4, 1, 0.5),
        [2] => basis(4, 2, 0.5),
        [1, 2] => basis(4, 3, 0.25),
        _ => CMat::zeros(4, 1),
    })
    .expect("fixture is valid")
}

/// Hankel kernel of the point mass at `1/2`, `d = 1`, `N = 2`.
pub fn delta_half() -> TruncatedKernel {
    let mu = AtomicMeasure::new(vec![(0.5, 1.0)]).expect("valid measure");
    hankel_kernel(&moments(&mu, 4), 2).expect("five moments")
}

pub fn zero_kernel(d: usize, level: usize, dim_h: usize) -> TruncatedKernel {
    TruncatedKernel::from_fn(d, level, dim_h, |_, _| CMat::zeros(dim_h, dim_h))
        .expect("zero kernel is valid")
}

/// How a randomized kernel is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomFamily {
    /// Independent random vectors, level `n` scaled by `s^n`; `s` is halved
    /// until dominance holds.
    Generic,
    /// `V_{αi} = T_i V_α` for a random strict row contraction in a small
    /// ambient space; shift-consistent and typically rank deficient.
    Model,
    /// [`RandomFamily::Model`] in a large ambient space with boundary vectors
    /// pushed into fresh directions, scaled down until dominance holds.
    PerturbedModel,
}

fn random_matrix(rows: usize, cols: usize, sample: &mut dyn FnMut() -> f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(2.0 * sample() - 1.0, 2.0 * sample() - 1.0)
    })
}

/// Random kernel on `Λ_level` with `K_Σ ≤ K` on `Λ_{level−1}` (checked with
/// `cfg`). Returns `None` if no admissible scaling was found.
pub fn random_dominated_kernel(
    family: RandomFamily,
    d: usize,
    level: usize,
    dim_h: usize,
    sample: &mut dyn FnMut() -> f64,
    cfg: &ToleranceConfig,
) -> Result<Option<TruncatedKernel>> {
    let words = enumerate_words(d, level)?;
    let interior = enumerate_words(d, level.saturating_sub(1))?.len() * dim_h;
    match family {
        RandomFamily::Generic => {
            let ambient = interior + 1 + (sample() * 3.0) as usize;
            let raw: Vec<(Word, CMat)> = words
                .iter()
                .map(|w| (w.clone(), random_matrix(ambient, dim_h, sample)))
                .collect();
            let mut s: f64 = 1.0;
            for _ in 0..40 {
                let k = TruncatedKernel::from_vectors(d, level, dim_h, |w| {
                    lookup(&raw, w).scale(s.powi(w.len() as i32))
                })?;
                if level == 0 || check_dominance(&k, cfg)?.passes() {
                    return Ok(Some(k));
                }
                s *= 0.5;
            }
            Ok(None)
        }
        RandomFamily::Model => {
            let ambient = 1 + (sample() * (interior.min(4)) as f64) as usize;
            let base = model_base(d, level, dim_h, ambient, sample)?;
            Ok(Some(base.0))
        }
        RandomFamily::PerturbedModel => {
            let ambient = interior + 1;
            let (_, vectors) = model_base(d, level, dim_h, ambient, sample)?;
            let boundary: Vec<Word> = words.boundary(level).to_vec();
            let extra = boundary.len() * dim_h;
            let fresh = random_matrix(extra, extra, sample);
            let mut s: f64 = 1.0;
            for _ in 0..40 {
                let k = TruncatedKernel::from_vectors(d, level, dim_h, |w| {
                    let mut v = CMat::zeros(ambient + extra, dim_h);
                    v.view_mut((0, 0), (ambient, dim_h)).copy_from(&lookup(&vectors, w));
                    if let Some(pos) = boundary.iter().position(|b| b == w) {
                        let block = fresh.columns(pos * dim_h, dim_h).scale(s);
                        v.view_mut((ambient, 0), (extra, dim_h)).copy_from(&block);
                    }
                    v
                })?;
                if level == 0 || check_dominance(&k, cfg)?.passes() {
                    return Ok(Some(k));
                }
                s *= 0.5;
            }
            Ok(None)
        }
    }
}

fn model_base(
    d: usize,
    level: usize,
    dim_h: usize,
    ambient: usize,
    sample: &mut dyn FnMut() -> f64,
) -> Result<(TruncatedKernel, Vec<(Word, CMat)>)> {
    let mut ts: Vec<CMat> = (0..d).map(|_| random_matrix(ambient, ambient, sample)).collect();
    let lambda = column_gram_lambda_max(&ts);
    let target = 0.2 + 0.75 * sample();
    if lambda > 0.0 {
        let factor = (target / lambda).sqrt();
        for t in &mut ts {
            *t = t.scale(factor);
        }
    }
    let v_empty = random_matrix(ambient, dim_h, sample);
    let vectors = model_vectors(d, level, &v_empty, &ts);
    let k = TruncatedKernel::from_vectors(d, level, dim_h, |w| lookup(&vectors, w))?;
    Ok((k, vectors))
}
