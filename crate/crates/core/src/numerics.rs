//! Dense complex Hermitian linear algebra with an explicit tolerance policy.
//!
//! Every routine is spectral: Gram matrices in this crate are routinely rank
//! deficient, so factorizations and solves go through a Hermitian
//! eigendecomposition with relative cutoffs instead of Cholesky.
//!
//! Scales are anchored at `max(1, ·)` so that tiny kernels and the zero kernel
//! are judged against absolute tolerances.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;

/// Construction-time tolerance for Hermitian symmetry, relative to
/// `max(1, max |entry|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative slack for PSD tests.
    pub psd_tol: f64,
    /// Relative eigenvalue cutoff for numerical rank.
    pub rank_tol: f64,
    /// Relative bound on linear-system residuals.
    pub residual_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            psd_tol: 1e-10,
            rank_tol: 1e-12,
            residual_tol: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("psd_tol", self.psd_tol),
            ("rank_tol", self.rank_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// A square complex matrix equal to its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Validates symmetry and stores the exact Hermitian part `(M + M*)/2`.
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let dev = hermitian_deviation(&m);
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if dev > SYMMETRY_TOL * scale {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(HermitianMatrix(sym))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix(CMat::from_fn(n, n, |j, k| {
            if j == k {
                C64::new(diag[j], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMat::zeros(n, n))
    }

    /// `X* X`, Hermitian by construction.
    pub fn gram_of(x: &CMat) -> Self {
        let g = x.adjoint() * x;
        HermitianMatrix((&g + g.adjoint()).scale(0.5))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(self).values
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(HermitianMatrix(&self.0 - &other.0))
    }
}

/// `max |M[j,k] − conj(M[k,j])|`.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for k in j..n {
            dev = dev.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    dev
}

/// Hermitian eigendecomposition, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: CMat,
}

pub fn eigh(m: &HermitianMatrix) -> Eigh {
    let n = m.dim();
    if n == 0 {
        return Eigh {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |row, col| eig.eigenvectors[(row, order[col])]);
    Eigh { values, vectors }
}

fn spectral_radius(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eig: f64,
    /// The negative slack `psd_tol · max(1, spectral radius)` actually used.
    pub tolerance: f64,
}

/// PSD test: `min_eig ≥ −psd_tol · max(1, ρ(M))`.
pub fn check_psd(m: &HermitianMatrix, cfg: &ToleranceConfig) -> PsdCheck {
    let values = eigh(m).values;
    psd_verdict(&values, cfg)
}

pub(crate) fn psd_verdict(values: &[f64], cfg: &ToleranceConfig) -> PsdCheck {
    let min_eig = values.first().copied().unwrap_or(0.0);
    let tolerance = cfg.psd_tol * spectral_radius(values).max(1.0);
    PsdCheck {
        is_psd: min_eig >= -tolerance,
        min_eig,
        tolerance,
    }
}

/// Rank-revealing factor `G ≈ V* V` with `V` of shape `rank × n`.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub rank: usize,
    pub factor: CMat,
    /// Kept eigenvalues, descending; row `k` of `factor` has squared norm `kept[k]`.
    pub kept: Vec<f64>,
}

/// Factors a PSD matrix as `V* V`, keeping eigenvalues above `rank_tol · λ_max`.
pub fn psd_factor(g: &HermitianMatrix, cfg: &ToleranceConfig) -> Result<PsdFactor> {
    let n = g.dim();
    let eig = eigh(g);
    let verdict = psd_verdict(&eig.values, cfg);
    if !verdict.is_psd {
        return Err(Error::NotPsd {
            min_eig: verdict.min_eig,
            tolerance: verdict.tolerance,
        });
    }
    let lambda_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = cfg.rank_tol * lambda_max;
    let keep: Vec<usize> = (0..n)
        .rev()
        .filter(|&k| eig.values[k] > cutoff && eig.values[k] > 0.0)
        .collect();
    let rank = keep.len();
    let mut factor = CMat::zeros(rank, n);
    let mut kept = Vec::with_capacity(rank);
    for (row, &k) in keep.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for col in 0..n {
            factor[(row, col)] = eig.vectors[(col, k)].conj() * s;
        }
        kept.push(eig.values[k]);
    }
    Ok(PsdFactor { rank, factor, kept })
}

/// Orthonormal basis of the column span of `x`, using the same relative
/// cutoff rule as [`psd_factor`] against `reference_scale`.
pub fn column_span_basis(x: &CMat, reference_scale: f64, cfg: &ToleranceConfig) -> CMat {
    let rows = x.nrows();
    let outer = HermitianMatrix::gram_of(&x.adjoint());
    let eig = eigh(&outer);
    let cutoff = cfg.rank_tol * reference_scale.max(0.0);
    let keep: Vec<usize> = (0..rows)
        .rev()
        .filter(|&k| eig.values[k] > cutoff && eig.values[k] > 0.0)
        .collect();
    CMat::from_fn(rows, keep.len(), |row, col| eig.vectors[(row, keep[col])])
}

/// PSD square root; eigenvalues within the negative slack, and those below
/// `rank_tol` relative to the largest, are clamped to 0.
pub fn psd_sqrt(m: &HermitianMatrix, cfg: &ToleranceConfig) -> Result<HermitianMatrix> {
    let n = m.dim();
    let eig = eigh(m);
    let verdict = psd_verdict(&eig.values, cfg);
    if !verdict.is_psd {
        return Err(Error::NotPsd {
            min_eig: verdict.min_eig,
            tolerance: verdict.tolerance,
        });
    }
    let floor = cfg.rank_tol * eig.values.last().copied().unwrap_or(0.0).max(1.0);
    let roots = DVector::from_iterator(
        n,
        eig.values
            .iter()
            .map(|&v| C64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0)),
    );
    let scaled = CMat::from_fn(n, n, |row, col| eig.vectors[(row, col)] * roots[col]);
    HermitianMatrix::new(&scaled * eig.vectors.adjoint())
}

/// Minimal-norm least squares for `G c = t` through the pseudo-inverse of a
/// PSD Gram matrix, reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct GramSolver {
    gram: CMat,
    pinv: CMat,
}

impl GramSolver {
    pub fn new(g: &HermitianMatrix, cfg: &ToleranceConfig) -> Self {
        let n = g.dim();
        let eig = eigh(g);
        let lambda_max = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let cutoff = cfg.rank_tol * lambda_max;
        let mut pinv = CMat::zeros(n, n);
        for k in 0..n {
            let value = eig.values[k];
            if value.abs() > cutoff && value.abs() > 0.0 {
                let u = eig.vectors.column(k);
                pinv += (u * u.adjoint()).unscale(value);
            }
        }
        GramSolver {
            gram: g.matrix().clone(),
            pinv,
        }
    }

    pub fn pinv(&self) -> &CMat {
        &self.pinv
    }

    /// `(c, ‖G c − t‖_F)` for one or several right-hand sides (columns of `t`).
    pub fn solve(&self, t: &CMat) -> (CMat, f64) {
        let c = &self.pinv * t;
        let residual = (&self.gram * &c - t).norm();
        (c, residual)
    }
}

/// One-shot [`GramSolver`] for a single right-hand side.
pub fn gram_solve(g: &HermitianMatrix, t: &DVector<C64>, cfg: &ToleranceConfig) -> (DVector<C64>, f64) {
    let solver = GramSolver::new(g, cfg);
    let rhs = CMat::from_column_slice(t.len(), 1, t.as_slice());
    let (c, residual) = solver.solve(&rhs);
    (DVector::from_column_slice(c.as_slice()), residual)
}

/// Largest eigenvalue of `Σᵢ opᵢ* opᵢ`.
pub fn column_gram_lambda_max(ops: &[CMat]) -> f64 {
    let Some(first) = ops.first() else {
        return 0.0;
    };
    let n = first.ncols();
    let mut sum = CMat::zeros(n, n);
    for op in ops {
        sum += op.adjoint() * op;
    }
    let sum = HermitianMatrix((&sum + sum.adjoint()).scale(0.5));
    eigh(&sum).values.last().copied().unwrap_or(0.0)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}
