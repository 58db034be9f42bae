//! Shift-consistency of level-N boundary data.
//!
//! For each letter `i` and interior word `β`, the pairings
//! `⟨V_α, T_i V_β⟩ = K(α, βi)` over `α ∈ Λ_{N−1}` pin down `T_i V_β` inside
//! `H_K^(N−1)`. The resulting operators are then checked against the interior
//! anchors `T_i V_α = V_{αi}` (`α ∈ Λ_{N−2}`), the boundary Gram
//! `⟨T_i V_α, T_j V_β⟩ = K(αi, βj)`, the row-contraction bound and the
//! compression identity `P_{N−2} (Σ T_i* T_i) P_{N−2} = A_{N−1}`.
//!
//! Checks run in that order and every violation is collected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{gram_level, TruncatedKernel};
use crate::kolmogorov::{compressed_shifts, KolmogorovSpace, ShiftKind, ShiftSystem};
use crate::numerics::{CMat, GramSolver, ToleranceConfig};
use crate::words::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    B2Residual,
    InteriorAnchor,
    B3Mismatch,
    Contraction,
    Compression,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationLocation {
    pub words: Vec<Word>,
    pub letters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: ViolationLocation,
    pub magnitude: f64,
}

/// Largest deviation seen in one check family, violating or not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMax {
    pub magnitude: f64,
    pub tolerance: f64,
    pub location: Option<ViolationLocation>,
}

impl FamilyMax {
    fn new(tolerance: f64) -> Self {
        FamilyMax {
            magnitude: 0.0,
            tolerance,
            location: None,
        }
    }

    fn record(&mut self, magnitude: f64, location: impl FnOnce() -> ViolationLocation) {
        if magnitude > self.magnitude || self.location.is_none() {
            self.magnitude = magnitude;
            self.location = Some(location());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowContraction {
    pub ok: bool,
    pub lambda_max: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub feasible: bool,
    /// The boundary operators; present only when feasible.
    pub ts: Option<ShiftSystem>,
    pub violations: Vec<Violation>,
    pub b2: FamilyMax,
    pub anchors: FamilyMax,
    pub b3: FamilyMax,
    pub contraction: RowContraction,
    /// `‖P_{N−2} (Σ T_i* T_i) P_{N−2} − A_{N−1}‖_F`.
    pub compression: FamilyMax,
}

/// `λ_max(Σ opᵢ* opᵢ) ≤ 1 + psd_tol`.
pub fn check_row_contraction(s: &ShiftSystem, cfg: &ToleranceConfig) -> RowContraction {
    let lambda_max = s.column_gram().eigenvalues().last().copied().unwrap_or(0.0);
    RowContraction {
        ok: lambda_max <= 1.0 + cfg.psd_tol,
        lambda_max,
        tolerance: cfg.psd_tol,
    }
}

fn loc(words: &[&Word], letters: &[usize]) -> ViolationLocation {
    ViolationLocation {
        words: words.iter().map(|&w| w.clone()).collect(),
        letters: letters.to_vec(),
    }
}

/// Solves for the boundary operators and runs every consistency check.
pub fn solve_boundary_shifts(
    k: &TruncatedKernel,
    space: &KolmogorovSpace,
    cfg: &ToleranceConfig,
) -> Result<ConsistencyReport> {
    if (space.d(), space.level(), space.dim_h()) != (k.d(), k.level(), k.dim_h()) {
        return Err(Error::DimensionMismatch(
            "Kolmogorov space was not built from this kernel".into(),
        ));
    }
    let level = k.level();
    if level == 0 {
        return Err(Error::NoRoomToShift);
    }
    let d = k.d();
    let m = k.dim_h();
    let q = space.interior_basis()?;
    let r1 = q.ncols();
    let interior = k.words().up_to(level - 1);
    let n1 = interior.len();
    let scale = space.gram_scale();
    let tol = cfg.residual_tol * scale;

    // X = [Q* V_α]_{α ∈ Λ_{N−1}}, the interior vectors in interior coordinates
    let x = q.adjoint() * space.v_prefix(level - 1);
    let solver = GramSolver::new(&gram_level(k, level - 1)?, cfg);
    let x_pinv = pseudo_inverse_wide(&x, cfg);

    let mut violations = Vec::new();
    let mut b2 = FamilyMax::new(tol);
    let mut ops = Vec::with_capacity(d);
    for i in 1..=d {
        // images[:, β] = T_i V_β from the pairing system
        let mut images = CMat::zeros(r1, n1 * m);
        let mut solve_residuals = Vec::with_capacity(n1);
        for (col, beta) in interior.iter().enumerate() {
            let target = pairing_column(k, interior, &beta.append(i));
            let (coeffs, residual) = solver.solve(&target);
            images.columns_mut(col * m, m).copy_from(&(&x * coeffs));
            solve_residuals.push(residual);
        }
        let t = &images * &x_pinv;
        for (col, beta) in interior.iter().enumerate() {
            // re-check the pairings with the assembled operator
            let applied = &t * x.columns(col * m, m);
            let target = pairing_column(k, interior, &beta.append(i));
            let pairing_dev = (x.adjoint() * applied - target).norm();
            let magnitude = solve_residuals[col].max(pairing_dev);
            b2.record(magnitude, || loc(&[beta], &[i]));
            if magnitude > tol {
                violations.push(Violation {
                    kind: ViolationKind::B2Residual,
                    location: loc(&[beta], &[i]),
                    magnitude,
                });
            }
        }
        ops.push(t);
    }
    let ts = ShiftSystem::new(ShiftKind::BoundaryT, ops)?;
    let coords: Vec<CMat> = (0..n1).map(|c| x.columns(c * m, m).into_owned()).collect();

    let mut anchors = FamilyMax::new(tol);
    if level >= 2 {
        for (col, alpha) in k.words().up_to(level - 2).iter().enumerate() {
            for i in 1..=d {
                let target = space.interior_coords(&alpha.append(i))?;
                let dev = (&ts.ops()[i - 1] * &coords[col] - target).norm();
                anchors.record(dev, || loc(&[alpha], &[i]));
                if dev > tol {
                    violations.push(Violation {
                        kind: ViolationKind::InteriorAnchor,
                        location: loc(&[alpha], &[i]),
                        magnitude: dev,
                    });
                }
            }
        }
    }

    // boundary Gram over pairs (αi, βj) with αi ≤ βj canonically
    let mut b3 = FamilyMax::new(tol);
    let applied: Vec<Vec<CMat>> = (0..d)
        .map(|i| coords.iter().map(|c| &ts.ops()[i] * c).collect())
        .collect();
    let mut grown: Vec<(usize, usize, Word)> = Vec::with_capacity(n1 * d);
    for (a, alpha) in interior.iter().enumerate() {
        for i in 1..=d {
            grown.push((a, i, alpha.append(i)));
        }
    }
    grown.sort_by(|x, y| x.2.cmp(&y.2));
    for (p, (a, i, ai)) in grown.iter().enumerate() {
        for (b, j, bj) in &grown[p..] {
            let lhs = applied[i - 1][*a].adjoint() * &applied[j - 1][*b];
            let dev = (lhs - k.get(ai, bj).expect("αi ∈ Λ_N")).norm();
            let place = || loc(&[&interior[*a], &interior[*b]], &[*i, *j]);
            b3.record(dev, place);
            if dev > tol {
                violations.push(Violation {
                    kind: ViolationKind::B3Mismatch,
                    location: place(),
                    magnitude: dev,
                });
            }
        }
    }

    let contraction = check_row_contraction(&ts, cfg);
    if !contraction.ok {
        violations.push(Violation {
            kind: ViolationKind::Contraction,
            location: loc(&[], &[]),
            magnitude: contraction.lambda_max - 1.0,
        });
    }

    let mut compression = FamilyMax::new(tol);
    if level >= 2 {
        let b = compressed_shifts(space, k, cfg)?;
        let p = space.interior_projector(level - 2)?;
        let a = b.column_gram();
        let dev = (&p * ts.column_gram().matrix() * &p - a.matrix()).norm();
        compression.record(dev, || loc(&[], &[]));
        if dev > tol {
            violations.push(Violation {
                kind: ViolationKind::Compression,
                location: loc(&[], &[]),
                magnitude: dev,
            });
        }
    }

    let feasible = violations.is_empty();
    Ok(ConsistencyReport {
        feasible,
        ts: feasible.then_some(ts),
        violations,
        b2,
        anchors,
        b3,
        contraction,
        compression,
    })
}

/// `[K(α, target)]_{α ∈ words}` stacked vertically.
fn pairing_column(k: &TruncatedKernel, words: &[Word], target: &Word) -> CMat {
    let m = k.dim_h();
    let mut out = CMat::zeros(words.len() * m, m);
    for (row, alpha) in words.iter().enumerate() {
        out.rows_mut(row * m, m)
            .copy_from(k.get(alpha, target).expect("pairing inside Λ_N"));
    }
    out
}

/// Right inverse `X⁺ = X* (X X*)⁻¹` of a matrix with full row rank.
fn pseudo_inverse_wide(x: &CMat, cfg: &ToleranceConfig) -> CMat {
    let outer = crate::numerics::HermitianMatrix::gram_of(&x.adjoint());
    let solver = GramSolver::new(&outer, cfg);
    x.adjoint() * solver.pinv()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kolmogorov::build_space;
    use crate::numerics::c;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn run(k: &TruncatedKernel) -> ConsistencyReport {
        let space = build_space(k, &cfg()).unwrap();
        solve_boundary_shifts(k, &space, &cfg()).unwrap()
    }

    #[test]
    fn example_one_is_consistent() {
        let k = fixtures::example_d1();
        let report = run(&k);
        assert!(report.feasible, "{:?}", report.violations);
        assert!((report.contraction.lambda_max - 0.5).abs() < 1e-12);
        let ts = report.ts.unwrap();
        let space = build_space(&k, &cfg()).unwrap();
        for i in 0..2 {
            for beta in [[1usize], [2]] {
                let v = space.interior_coords(&Word::from(&beta[..])).unwrap();
                assert!((&ts.ops()[i] * v).norm() < 1e-12);
            }
        }
        assert!(report.b2.magnitude < 1e-12);
        assert!(report.b3.magnitude < 1e-12);
    }

    #[test]
    fn example_two_fails_on_the_boundary_gram() {
        let report = run(&fixtures::example_d2());
        assert!(!report.feasible);
        assert!(report.ts.is_none());
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::B3Mismatch);
        let one = Word::from(&[1][..]);
        assert_eq!(v.location.words, vec![one.clone(), one]);
        assert_eq!(v.location.letters, vec![2, 2]);
        assert!((v.magnitude - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_boundary_matches_compressed_shifts() {
        let k = TruncatedKernel::from_fn(2, 2, 1, |a, b| {
            if a.len() == 2 || b.len() == 2 {
                CMat::zeros(1, 1)
            } else {
                fixtures::example_d1().get(a, b).unwrap().clone()
            }
        })
        .unwrap();
        let report = run(&k);
        assert!(report.feasible);
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        for (t, b) in report.ts.unwrap().ops().iter().zip(b.ops()) {
            assert!((t - b).norm() < 1e-12);
        }
    }

    #[test]
    fn point_mass_hankel_is_consistent() {
        let report = run(&fixtures::delta_half());
        assert!(report.feasible);
        let ts = report.ts.unwrap();
        let t = &ts.ops()[0];
        assert!((t[(0, 0)] - c(0.5)).norm() < 1e-12);
    }

    #[test]
    fn row_contraction_checks() {
        let k = fixtures::example_d1();
        let t = ShiftSystem::new(ShiftKind::BoundaryT, fixtures::example_d1_operators()).unwrap();
        let r = check_row_contraction(&t, &cfg());
        assert!(r.ok);
        assert!((r.lambda_max - 0.5).abs() < 1e-15);
        let _ = k;

        let zero = ShiftSystem::new(ShiftKind::BoundaryT, vec![CMat::zeros(2, 2); 3]).unwrap();
        assert_eq!(check_row_contraction(&zero, &cfg()).lambda_max, 0.0);

        let big = ShiftSystem::new(ShiftKind::BoundaryT, vec![CMat::identity(2, 2).scale(2.0)]).unwrap();
        let r = check_row_contraction(&big, &cfg());
        assert!(!r.ok);
        assert!((r.lambda_max - 4.0).abs() < 1e-14);

        assert!(ShiftSystem::new(
            ShiftKind::BoundaryT,
            vec![CMat::zeros(2, 2), CMat::zeros(3, 3)]
        )
        .is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run(&fixtures::example_d2());
        let b = run(&fixtures::example_d2());
        assert_eq!(a, b);
    }
}
