//! Kolmogorov space of a truncated kernel and the operators it carries.
//!
//! The space `H_K^(N)` is realized as `ℂ^r` through a rank-revealing factor of
//! `Gram(K, Λ_N)`: `V_α` is the `r × m` column block of word `α`, so that
//! `K(α, β) = V_α* V_β`. The graded subspaces `H_K^(k)` are column spans of
//! `{V_α : |α| ≤ k}`, each stored through an orthonormal basis.
//!
//! Operators on the interior space `H_K^(N−1)` (compressed shifts, boundary
//! operators, densities) are `r₁ × r₁` matrices in the coordinates of that
//! basis, with `r₁ = dim H_K^(N−1)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{gram_level, TruncatedKernel};
use crate::numerics::{
    column_gram_lambda_max, column_span_basis, eigh, psd_factor, CMat, GramSolver,
    HermitianMatrix, ToleranceConfig,
};
use crate::words::{Word, WordSet};

/// Relative bound for identities asserted at build time.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct KolmogorovSpace {
    d: usize,
    level: usize,
    dim_h: usize,
    words: WordSet,
    factor: CMat,
    graded_bases: Vec<CMat>,
    graded_ranks: Vec<usize>,
    gram_scale: f64,
}

impl KolmogorovSpace {
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

    pub fn rank(&self) -> usize {
        self.factor.nrows()
    }

    /// The full factor, `r × (|Λ_N|·m)`, columns in canonical word order.
    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    /// `dim H_K^(k)` for `k = 0..=N`.
    pub fn graded_ranks(&self) -> &[usize] {
        &self.graded_ranks
    }

    /// Orthonormal basis of `H_K^(k)` in `H_K^(N)` coordinates.
    pub fn graded_basis(&self, k: usize) -> Result<&CMat> {
        self.graded_bases.get(k).ok_or(Error::LevelOutOfRange {
            level: k,
            max: self.level,
        })
    }

    /// `max(1, ‖Gram(K, Λ_N)‖_F)`, the scale for relative checks.
    pub fn gram_scale(&self) -> f64 {
        self.gram_scale
    }

    /// `V_α` as an `r × m` block.
    pub fn v(&self, w: &Word) -> Result<CMat> {
        let k = self.words.index_of(w).ok_or_else(|| Error::WordOutsideDomain {
            word: w.clone(),
            level: self.level,
        })?;
        Ok(self.v_at(k))
    }

    fn v_at(&self, k: usize) -> CMat {
        self.factor.columns(k * self.dim_h, self.dim_h).into_owned()
    }

    /// `[V_α]_{|α| ≤ k}` side by side.
    pub fn v_prefix(&self, k: usize) -> CMat {
        let count = self.words.prefix_len(k) * self.dim_h;
        self.factor.columns(0, count).into_owned()
    }

    /// Basis of the interior space `H_K^(N−1)`.
    pub fn interior_basis(&self) -> Result<&CMat> {
        if self.level == 0 {
            return Err(Error::NoRoomToShift);
        }
        self.graded_basis(self.level - 1)
    }

    pub fn interior_dim(&self) -> usize {
        self.interior_basis().map(|q| q.ncols()).unwrap_or(0)
    }

    /// Coordinates of `P_{N−1} V_α` in the interior basis, `r₁ × m`.
    pub fn interior_coords(&self, w: &Word) -> Result<CMat> {
        let q = self.interior_basis()?;
        Ok(q.adjoint() * self.v(w)?)
    }

    /// Orthogonal projector onto `H_K^(k)` expressed in interior coordinates
    /// (`k ≤ N − 1`).
    pub fn interior_projector(&self, k: usize) -> Result<CMat> {
        let q = self.interior_basis()?;
        if k + 1 > self.level {
            return Err(Error::LevelOutOfRange {
                level: k,
                max: self.level - 1,
            });
        }
        let sub = q.adjoint() * self.graded_basis(k)?;
        Ok(&sub * sub.adjoint())
    }
}

/// Factors `Gram(K, Λ_N)` and computes the graded subspaces.
pub fn build_space(k: &TruncatedKernel, cfg: &ToleranceConfig) -> Result<KolmogorovSpace> {
    cfg.validate()?;
    let g = gram_level(k, k.level())?;
    let pf = psd_factor(&g, cfg)?;
    let lambda_max = pf.kept.first().copied().unwrap_or(0.0);
    let r = pf.rank;
    let mut space = KolmogorovSpace {
        d: k.d(),
        level: k.level(),
        dim_h: k.dim_h(),
        words: k.words().clone(),
        factor: pf.factor,
        graded_bases: Vec::with_capacity(k.level() + 1),
        graded_ranks: Vec::with_capacity(k.level() + 1),
        gram_scale: g.frobenius().max(1.0),
    };
    for level in 0..=k.level() {
        let basis = if level == k.level() {
            CMat::identity(r, r)
        } else {
            column_span_basis(&space.v_prefix(level), lambda_max, cfg)
        };
        space.graded_ranks.push(basis.ncols());
        space.graded_bases.push(basis);
    }

    let n = space.words.len();
    let tol = IDENTITY_TOL * space.gram_scale;
    for a in 0..n {
        let va = space.v_at(a);
        for b in a..n {
            let dev = (va.adjoint() * space.v_at(b) - k.block_at(a, b)).norm();
            if dev > tol {
                return Err(Error::IdentityMismatch {
                    identity: "factorization V_a* V_b = K(a, b)",
                    location: format!("({}, {})", space.words.words()[a], space.words.words()[b]),
                    magnitude: dev,
                });
            }
        }
    }
    Ok(space)
}

/// Projector `P_k` onto `H_K^(k)` in `H_K^(N)` coordinates.
pub fn graded_projector(space: &KolmogorovSpace, k: usize) -> Result<HermitianMatrix> {
    let q = space.graded_basis(k)?;
    Ok(HermitianMatrix::gram_of(&q.adjoint()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    CompressedB,
    BoundaryT,
}

/// A `d`-tuple of operators on interior coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem {
    kind: ShiftKind,
    ops: Vec<CMat>,
    column_norm: f64,
}

impl ShiftSystem {
    pub fn new(kind: ShiftKind, ops: Vec<CMat>) -> Result<Self> {
        let n = ops.first().map(|o| o.nrows()).unwrap_or(0);
        if ops.iter().any(|o| o.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(
                "shift operators must be square and of equal size".into(),
            ));
        }
        let column_norm = column_gram_lambda_max(&ops).max(0.0).sqrt();
        Ok(ShiftSystem {
            kind,
            ops,
            column_norm,
        })
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn d(&self) -> usize {
        self.ops.len()
    }

    pub fn dim(&self) -> usize {
        self.ops.first().map(|o| o.nrows()).unwrap_or(0)
    }

    /// `λ_max(Σᵢ opᵢ* opᵢ)^{1/2}`.
    pub fn column_norm(&self) -> f64 {
        self.column_norm
    }

    /// `Σᵢ opᵢ* opᵢ`.
    pub fn column_gram(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut sum = CMat::zeros(n, n);
        for op in &self.ops {
            sum += op.adjoint() * op;
        }
        HermitianMatrix::new(sum).expect("sum of Gram matrices")
    }

    /// `op^{γ̃} = op_{i_k} ⋯ op_{i_1}` for `γ = i_1 ⋯ i_k`.
    pub fn reversed_power(&self, w: &Word) -> CMat {
        let mut out = CMat::identity(self.dim(), self.dim());
        for &i in w.letters() {
            out = &self.ops[i - 1] * out;
        }
        out
    }
}

/// Compressed shifts `B_i = B_i⁰ ∘ P_{N−2}` on `H_K^(N−1)`, where `B_i⁰` sends
/// `V_α` to `V_{αi}` for `α ∈ Λ_{N−2}`.
pub fn compressed_shifts(
    space: &KolmogorovSpace,
    k: &TruncatedKernel,
    cfg: &ToleranceConfig,
) -> Result<ShiftSystem> {
    check_same_shape(space, k)?;
    let level = space.level;
    let q = space.interior_basis()?;
    let r1 = q.ncols();
    let d = space.d;
    let m = space.dim_h;
    if level == 1 {
        return ShiftSystem::new(ShiftKind::CompressedB, vec![CMat::zeros(r1, r1); d]);
    }
    let tol = IDENTITY_TOL * space.gram_scale;
    let inner = space.words.up_to(level - 2);
    let u = q.adjoint() * space.v_prefix(level - 2);
    let solver = GramSolver::new(&gram_level(k, level - 2)?, cfg);
    let (coeffs, solve_residual) = solver.solve(&u.adjoint());
    if solve_residual > cfg.residual_tol * u.norm().max(1.0) {
        return Err(Error::WellDefinednessFailure {
            letter: 0,
            residual: solve_residual,
        });
    }
    let range_projector = solver.pinv() * gram_level(k, level - 2)?.matrix();
    let p_inner = space.interior_projector(level - 2)?;
    let identity = CMat::identity(r1, r1);

    let mut ops = Vec::with_capacity(d);
    for i in 1..=d {
        let mut images = CMat::zeros(r1, inner.len() * m);
        for (col, alpha) in inner.iter().enumerate() {
            let target = space.v(&alpha.append(i))?;
            let projected = q.adjoint() * &target;
            let leak = (q * &projected - &target).norm();
            if leak > tol {
                return Err(Error::IdentityMismatch {
                    identity: "P_{N-1} V_{ai} = V_{ai}",
                    location: format!("a = {alpha}, i = {i}"),
                    magnitude: leak,
                });
            }
            images.columns_mut(col * m, m).copy_from(&projected);
        }
        let defect = (&images - &images * &range_projector).norm();
        if defect > cfg.residual_tol * images.norm().max(1.0) {
            return Err(Error::WellDefinednessFailure {
                letter: i,
                residual: defect,
            });
        }
        let b = &images * &coeffs;

        let anchor = (&b * &u - &images).norm();
        if anchor > tol {
            return Err(Error::IdentityMismatch {
                identity: "B_i V_a = P_{N-1} V_{ai}",
                location: format!("i = {i}"),
                magnitude: anchor,
            });
        }
        let annihilated = (&b * (&identity - &p_inner)).norm();
        if annihilated > tol {
            return Err(Error::IdentityMismatch {
                identity: "B_i (I - P_{N-2}) = 0",
                location: format!("i = {i}"),
                magnitude: annihilated,
            });
        }
        ops.push(b);
    }
    ShiftSystem::new(ShiftKind::CompressedB, ops)
}

fn check_same_shape(space: &KolmogorovSpace, k: &TruncatedKernel) -> Result<()> {
    if (space.d, space.level, space.dim_h) != (k.d(), k.level(), k.dim_h()) {
        return Err(Error::DimensionMismatch(format!(
            "space (d={}, N={}, m={}) does not belong to kernel (d={}, N={}, m={})",
            space.d,
            space.level,
            space.dim_h,
            k.d(),
            k.level(),
            k.dim_h()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct InteriorDensity {
    /// `A_{N−1} = Σᵢ B_i* B_i` in interior coordinates.
    pub a: HermitianMatrix,
    /// Eigenvalues of `A`, ascending.
    pub spectrum: Vec<f64>,
    /// `max ‖V_α* A V_β − K_Σ(α, β)‖_F` over `α, β ∈ Λ_{N−2}`.
    pub identity_deviation: f64,
}

/// `A_{N−1} = Σ B_i* B_i`, checked against `0 ≤ A ≤ I` and
/// `V_α* A V_β = K_Σ(α, β)` on `Λ_{N−2}`.
pub fn interior_density(
    shifts: &ShiftSystem,
    space: &KolmogorovSpace,
    k_sigma: &TruncatedKernel,
    cfg: &ToleranceConfig,
) -> Result<InteriorDensity> {
    if shifts.dim() != space.interior_dim() || shifts.d() != space.d {
        return Err(Error::DimensionMismatch(
            "shift system does not act on this interior space".into(),
        ));
    }
    if k_sigma.level() + 1 != space.level || k_sigma.d() != space.d {
        return Err(Error::DimensionMismatch(
            "shifted kernel must live on Λ_{N-1}".into(),
        ));
    }
    let a = shifts.column_gram();
    let spectrum = eigh(&a).values;
    let lo = spectrum.first().copied().unwrap_or(0.0);
    let hi = spectrum.last().copied().unwrap_or(0.0);
    if lo < -cfg.psd_tol {
        return Err(Error::NotPsd {
            min_eig: lo,
            tolerance: cfg.psd_tol,
        });
    }
    if hi > 1.0 + cfg.psd_tol {
        return Err(Error::ContractivityFailure {
            lambda_max: hi,
            tolerance: cfg.psd_tol,
        });
    }
    let mut worst: f64 = 0.0;
    if space.level >= 2 {
        let inner = space.words.up_to(space.level - 2);
        let coords: Vec<CMat> = inner
            .iter()
            .map(|w| space.interior_coords(w))
            .collect::<Result<_>>()?;
        let tol = IDENTITY_TOL * space.gram_scale;
        for (x, wa) in inner.iter().enumerate() {
            let left = coords[x].adjoint() * a.matrix();
            for (y, wb) in inner.iter().enumerate() {
                let target = k_sigma.get(wa, wb).expect("Λ_{N-2} ⊂ Λ_{N-1}");
                let dev = (&left * &coords[y] - target).norm();
                if dev > tol {
                    return Err(Error::IdentityMismatch {
                        identity: "V_a* A V_b = K_sigma(a, b)",
                        location: format!("({wa}, {wb})"),
                        magnitude: dev,
                    });
                }
                worst = worst.max(dev);
            }
        }
    }
    Ok(InteriorDensity {
        a,
        spectrum,
        identity_deviation: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kernel::shifted_kernel;
    use crate::numerics::c;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn ranks_of_examples() {
        let s1 = build_space(&fixtures::example_d1(), &cfg()).unwrap();
        assert_eq!(s1.rank(), 3);
        assert_eq!(s1.graded_ranks(), &[1, 3, 3]);
        let s2 = build_space(&fixtures::example_d2(), &cfg()).unwrap();
        assert_eq!(s2.rank(), 4);
        assert_eq!(s2.graded_ranks(), &[1, 3, 4]);
        let s0 = build_space(&fixtures::zero_kernel(2, 2, 1), &cfg()).unwrap();
        assert_eq!(s0.rank(), 0);
        assert_eq!(s0.graded_ranks(), &[0, 0, 0]);
    }

    #[test]
    fn projectors_of_examples() {
        let s1 = build_space(&fixtures::example_d1(), &cfg()).unwrap();
        let p = graded_projector(&s1, 1).unwrap();
        assert!((p.matrix() - CMat::identity(3, 3)).norm() < 1e-12);

        let s2 = build_space(&fixtures::example_d2(), &cfg()).unwrap();
        let p = graded_projector(&s2, 1).unwrap();
        assert_eq!(p.eigenvalues().iter().filter(|&&v| v > 0.5).count(), 3);
        let v12 = s2.v(&Word::from(&[1, 2][..])).unwrap();
        assert!((p.matrix() * &v12).norm() < 1e-12);
        let top = graded_projector(&s2, 2).unwrap();
        assert!((top.matrix() - CMat::identity(4, 4)).norm() < 1e-14);
        assert!(graded_projector(&s2, 3).is_err());
    }

    #[test]
    fn grading_is_nested() {
        let s2 = build_space(&fixtures::example_d2(), &cfg()).unwrap();
        for a in 0..=2 {
            for b in 0..=2 {
                let pa = graded_projector(&s2, a).unwrap();
                let pb = graded_projector(&s2, b).unwrap();
                let pm = graded_projector(&s2, a.min(b)).unwrap();
                assert!((pa.matrix() * pb.matrix() - pm.matrix()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shifts_of_example_one() {
        let k = fixtures::example_d1();
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        assert_eq!(b.kind(), ShiftKind::CompressedB);
        let spectrum = b.column_gram().eigenvalues();
        assert!(close(&spectrum, &[0.0, 0.0, 0.5], 1e-12));
        let dens = interior_density(&b, &space, &shifted_kernel(&k).unwrap(), &cfg()).unwrap();
        assert!(close(&dens.spectrum, &[0.0, 0.0, 0.5], 1e-12));
    }

    #[test]
    fn shifts_of_point_mass_at_half() {
        // Gram [[1, 1/2, 1/4], ...] has rank one; V₁ = ½ V₀ and B is
        // multiplication by 1/2 on the one-dimensional interior space.
        let k = fixtures::delta_half();
        let space = build_space(&k, &cfg()).unwrap();
        assert_eq!(space.graded_ranks(), &[1, 1, 1]);
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        assert_eq!(b.dim(), 1);
        assert!((b.ops()[0][(0, 0)] - c(0.5)).norm() < 1e-12);
        let dens = interior_density(&b, &space, &shifted_kernel(&k).unwrap(), &cfg()).unwrap();
        assert!((dens.a.matrix()[(0, 0)] - c(0.25)).norm() < 1e-12);
    }

    #[test]
    fn zero_boundary_gives_zero_shifts() {
        let k = fixtures::zero_kernel(2, 2, 1);
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        assert!(b.ops().iter().all(|o| o.norm() == 0.0));
        let dens = interior_density(&b, &space, &shifted_kernel(&k).unwrap(), &cfg()).unwrap();
        assert_eq!(dens.identity_deviation, 0.0);
    }

    #[test]
    fn level_one_shifts_vanish() {
        let k = fixtures::example_d1().restrict(1).unwrap();
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        assert_eq!(b.dim(), 1);
        assert!(b.ops().iter().all(|o| o.norm() == 0.0));
    }

    #[test]
    fn ill_defined_shift_is_reported() {
        // V₀ = V₁ = e but V₂ = 0: the rule V₀ ↦ V₁, V₁ ↦ V₂ is contradictory,
        // which is only possible without dominance.
        let k = TruncatedKernel::from_vectors(1, 3, 1, |w| match w.len() {
            0 | 1 => CMat::from_element(1, 1, c(1.0)),
            2 => CMat::from_element(1, 1, c(0.0)),
            _ => CMat::from_element(1, 1, c(0.0)),
        })
        .unwrap();
        let space = build_space(&k, &cfg()).unwrap();
        assert!(matches!(
            compressed_shifts(&space, &k, &cfg()),
            Err(Error::WellDefinednessFailure { letter: 1, .. })
        ));
    }
}
