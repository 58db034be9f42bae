//! The one-letter case: atomic measures on `[0, 1]`, their moments, Hankel
//! kernels `K(m, n) = s_{m+n}` and complete monotonicity of finite sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TruncatedKernel;
use crate::numerics::{c, CMat, ToleranceConfig};

/// A finite positive combination of point masses in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure {
    /// `atoms` are `(location, weight)` pairs with distinct locations in
    /// `[0, 1]` and strictly positive weights.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(x, w)) in atoms.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k} at {x} lies outside [0, 1]"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k} has non-positive weight {w}"
                )));
            }
            if atoms[..k].iter().any(|&(y, _)| y == x) {
                return Err(Error::InvalidMeasure(format!("duplicate location {x}")));
            }
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentSequence(pub Vec<f64>);

impl MomentSequence {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `s_k = Σ w·x^k` for `k = 0..=k_max`, with `0⁰ = 1`.
pub fn moments(mu: &AtomicMeasure, k_max: usize) -> MomentSequence {
    MomentSequence(
        (0..=k_max)
            .map(|k| {
                mu.atoms
                    .iter()
                    .map(|&(x, w)| w * x.powi(k as i32))
                    .sum()
            })
            .collect(),
    )
}

/// Scalar kernel on `{0, …, N}` with `K(m, n) = s_{m+n}`.
pub fn hankel_kernel(s: &MomentSequence, level: usize) -> Result<TruncatedKernel> {
    let needed = 2 * level + 1;
    if s.len() < needed {
        return Err(Error::InsufficientMoments {
            level,
            needed,
            got: s.len(),
        });
    }
    TruncatedKernel::from_fn(1, level, 1, |a, b| {
        CMat::from_element(1, 1, c(s.0[a.len() + b.len()]))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneWorst {
    pub k: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub ok: bool,
    /// Smallest `(−1)^k Δ^k s_j`; ties resolve to the first in `(k, j)` order.
    pub worst: Option<MonotoneWorst>,
    pub tolerance: f64,
}

/// Tests `(−1)^k Δ^k s_j ≥ −psd_tol · max(1, s₀)` for all `k + j ≤ M`.
pub fn check_complete_monotone(s: &MomentSequence, cfg: &ToleranceConfig) -> MonotoneCheck {
    let tolerance = cfg.psd_tol * s.0.first().copied().unwrap_or(0.0).max(1.0);
    let mut worst: Option<MonotoneWorst> = None;
    // row k holds Δ^k s_j for j = 0..=M−k
    let mut row = s.0.clone();
    let mut k = 0;
    while !row.is_empty() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (j, &delta) in row.iter().enumerate() {
            let value = sign * delta;
            if worst.is_none_or(|w| value < w.value) {
                worst = Some(MonotoneWorst { k, j, value });
            }
        }
        row = row.windows(2).map(|p| p[1] - p[0]).collect();
        k += 1;
    }
    MonotoneCheck {
        ok: worst.is_none_or(|w| w.value >= -tolerance),
        worst,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_simple_measures() {
        let one = AtomicMeasure::new(vec![(1.0, 1.0)]).unwrap();
        assert_eq!(moments(&one, 4).0, vec![1.0; 5]);

        let split = AtomicMeasure::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(moments(&split, 3).0, vec![1.0, 0.5, 0.5, 0.5]);

        let half = AtomicMeasure::new(vec![(0.5, 1.0)]).unwrap();
        assert_eq!(moments(&half, 4).0, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn invalid_measures() {
        assert!(AtomicMeasure::new(vec![(1.5, 1.0)]).is_err());
        assert!(AtomicMeasure::new(vec![(0.5, 0.0)]).is_err());
        assert!(AtomicMeasure::new(vec![(0.5, 1.0), (0.5, 2.0)]).is_err());
    }

    #[test]
    fn hankel_layouts() {
        let half = AtomicMeasure::new(vec![(0.5, 1.0)]).unwrap();
        let k = hankel_kernel(&moments(&half, 4), 2).unwrap();
        let expected = [
            [1.0, 0.5, 0.25],
            [0.5, 0.25, 0.125],
            [0.25, 0.125, 0.0625],
        ];
        for (a, wa) in k.words().iter().enumerate() {
            for (b, wb) in k.words().iter().enumerate() {
                assert_eq!(k.get(wa, wb).unwrap()[(0, 0)], c(expected[a][b]));
            }
        }

        let ones = hankel_kernel(&MomentSequence(vec![1.0; 5]), 2).unwrap();
        assert!(ones.entries().all(|(_, _, b)| b[(0, 0)] == c(1.0)));

        assert_eq!(
            hankel_kernel(&MomentSequence(vec![1.0; 3]), 2).unwrap_err(),
            Error::InsufficientMoments {
                level: 2,
                needed: 5,
                got: 3
            }
        );
    }

    #[test]
    fn monotone_constant_sequence() {
        let r = check_complete_monotone(&MomentSequence(vec![1.0; 3]), &ToleranceConfig::default());
        assert!(r.ok);
        assert_eq!(r.worst.unwrap().value, 0.0);
    }

    #[test]
    fn monotone_geometric_sequence() {
        let s = MomentSequence((0..=4).map(|j| 0.5f64.powi(j)).collect());
        let r = check_complete_monotone(&s, &ToleranceConfig::default());
        assert!(r.ok);
        // closed form: (−1)^k Δ^k s_j = 2^{−j−k}, smallest at k + j = 4
        let worst = r.worst.unwrap();
        assert_eq!(worst.k + worst.j, 4);
        assert_eq!(worst.value, 0.0625);
    }

    #[test]
    fn monotone_rejects_concave_triple() {
        let r = check_complete_monotone(
            &MomentSequence(vec![1.0, 0.9, 0.5]),
            &ToleranceConfig::default(),
        );
        assert!(!r.ok);
        let worst = r.worst.unwrap();
        assert_eq!((worst.k, worst.j), (2, 0));
        assert!((worst.value + 0.3).abs() < 1e-12);
    }
}
