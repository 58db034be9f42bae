use fsk_core::dilation::{build_dilation, extend_kernel, verify_extension, ExtensionMode, ExtensionTable};
use fsk_core::fixtures::{random_dominated_kernel, RandomFamily};
use fsk_core::hausdorff::{check_complete_monotone, hankel_kernel, moments, AtomicMeasure};
use fsk_core::kernel::{check_dominance, shifted_kernel};
use fsk_core::kolmogorov::{build_space, compressed_shifts, interior_density};
use fsk_core::numerics::{
    check_psd, gram_solve, psd_factor, psd_sqrt, CMat, HermitianMatrix, ToleranceConfig, C64,
};
use fsk_core::words::{enumerate_words, Word};
use fsk_core::TruncatedKernel;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Twenty dominated kernels cycling through the generator families.
fn population(seed: u64) -> Vec<TruncatedKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families = [
        RandomFamily::Generic,
        RandomFamily::Model,
        RandomFamily::PerturbedModel,
    ];
    let mut out = Vec::new();
    let mut attempt = 0;
    while out.len() < 20 {
        let family = families[attempt % families.len()];
        attempt += 1;
        let d = rng.random_range(1..=3);
        let level = rng.random_range(1..=3);
        let m = rng.random_range(1..=2);
        let mut sample = || rng.random::<f64>();
        if let Some(k) = random_dominated_kernel(family, d, level, m, &mut sample, &cfg()).unwrap() {
            out.push(k);
        }
    }
    out
}

#[test]
fn psd_factor_reassembles_random_grams() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.random_range(1..=12);
        let rank = rng.random_range(1..=n);
        let x = random_matrix(&mut rng, rank, n);
        let g = HermitianMatrix::gram_of(&x);
        let f = psd_factor(&g, &cfg()).unwrap();
        assert_eq!(f.rank, rank);
        let dev = (f.factor.adjoint() * &f.factor - g.matrix()).norm();
        assert!(dev <= 1e-9 * g.frobenius().max(1.0), "deviation {dev}");
    }
}

#[test]
fn square_root_of_a_projection_is_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let n = rng.random_range(2..=8);
        let rank = rng.random_range(1..n);
        let qr = random_matrix(&mut rng, n, rank).qr();
        let q = qr.q();
        let p = HermitianMatrix::new(&q * q.adjoint()).unwrap();
        let root = psd_sqrt(&p, &cfg()).unwrap();
        let dev = (root.matrix() - p.matrix()).norm();
        assert!(dev < 1e-10, "n={n} rank={rank} deviation {dev}");
    }
}

#[test]
fn gram_solve_has_zero_residual_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let rank = rng.random_range(1..=n);
        let x = random_matrix(&mut rng, rank, n);
        let g = HermitianMatrix::gram_of(&x);
        let y = random_matrix(&mut rng, rank, 1);
        let t: DVector<C64> = (x.adjoint() * y).column(0).into_owned();
        let (sol, residual) = gram_solve(&g, &t, &cfg());
        assert!(residual <= 1e-12, "residual {residual}");
        assert!((g.matrix() * sol - t).norm() <= 1e-12);
    }
}

#[test]
fn interior_density_is_a_contraction_reproducing_the_shift() {
    for k in population(10) {
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        let ks = shifted_kernel(&k).unwrap();
        let a = interior_density(&b, &space, &ks, &cfg()).unwrap();
        let top = a.spectrum.last().copied().unwrap_or(0.0);
        assert!(top <= 1.0 + 1e-9, "λ_max = {top}");
        assert!(a.identity_deviation <= 1e-9 * space.gram_scale());
    }
}

#[test]
fn dilation_invariants_and_depth_stability() {
    for k in population(11) {
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        let depth = k.level() + 2;
        let near = build_dilation(&b, depth, &cfg()).unwrap();
        let far = build_dilation(&b, depth + 2, &cfg()).unwrap();
        for dil in [&near, &far] {
            let inv = dil.invariants();
            assert!(inv.intertwining <= 1e-10 && inv.isometry <= 1e-10, "{inv:?}");
        }
        let short = enumerate_words(k.d(), depth.min(3)).unwrap();
        let pairs: Vec<(Word, Word)> = short
            .iter()
            .flat_map(|a| short.iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        let at_near = extend_kernel(&near, &space, &pairs).unwrap();
        let at_far = extend_kernel(&far, &space, &pairs).unwrap();
        for pair in &pairs {
            assert!((&at_near[pair] - &at_far[pair]).norm() <= 1e-12);
        }
    }
}

#[test]
fn adjoint_words_reproduce_interior_vectors() {
    for k in population(12) {
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        let dil = build_dilation(&b, k.level() + 2, &cfg()).unwrap();
        let table = ExtensionTable::build(&dil, &space, k.level() - 1).unwrap();
        for gamma in k.words().up_to(k.level() - 1) {
            let lhs = table.base_block(gamma).unwrap();
            let rhs = space.interior_coords(gamma).unwrap();
            assert!((lhs - rhs).norm() <= 1e-9 * space.gram_scale(), "word {gamma}");
        }
    }
}

#[test]
fn extension_preserves_interior_and_stays_dominated() {
    for k in population(13) {
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        let depth = k.level() + 2;
        let dil = build_dilation(&b, depth, &cfg()).unwrap();
        let tests = enumerate_words(k.d(), depth - 1).unwrap();
        let report =
            verify_extension(&k, &dil, &space, ExtensionMode::Interior, tests.words(), &cfg())
                .unwrap();
        assert!(report.passes(), "{report:?}");
        assert!(report.e1_max_dev.value <= 1e-9);
        assert!(report.e2.min_eig >= -1e-9);
    }
}

fn random_measure(rng: &mut ChaCha8Rng) -> AtomicMeasure {
    let n = rng.random_range(1..=4);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    while atoms.len() < n {
        let x: f64 = rng.random();
        if atoms.iter().all(|&(y, _)| y != x) {
            atoms.push((x, rng.random_range(0.01..1.0)));
        }
    }
    AtomicMeasure::new(atoms).unwrap()
}

#[test]
fn hankel_kernels_of_measures_are_dominated() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let mu = random_measure(&mut rng);
        let level = rng.random_range(1..=4);
        let s = moments(&mu, 2 * level);
        let k = hankel_kernel(&s, level).unwrap();
        let report = check_dominance(&k, &cfg()).unwrap();
        assert!(report.passes(), "{report:?}");
        assert!(check_complete_monotone(&s, &cfg()).ok);

        let shifted = shifted_kernel(&k).unwrap();
        for (a, b, block) in shifted.entries() {
            let expect = s.values()[a.len() + b.len() + 2];
            assert!((block[(0, 0)].re - expect).abs() < 1e-15);
        }
    }
}

#[test]
fn hankel_pipeline_recovers_interior_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let mu = random_measure(&mut rng);
        let level = rng.random_range(1..=4);
        let s = moments(&mu, 2 * level);
        let k = hankel_kernel(&s, level).unwrap();
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        let dil = build_dilation(&b, level + 2, &cfg()).unwrap();
        let interior = k.words().up_to(level - 1);
        let pairs: Vec<(Word, Word)> = interior
            .iter()
            .flat_map(|a| interior.iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        let values = extend_kernel(&dil, &space, &pairs).unwrap();
        for ((a, b), v) in &values {
            assert!((v[(0, 0)].re - s.values()[a.len() + b.len()]).abs() <= 1e-9);
        }
    }
}

#[test]
fn extension_gram_is_positive() {
    for k in population(14).into_iter().take(8) {
        let space = build_space(&k, &cfg()).unwrap();
        let b = compressed_shifts(&space, &k, &cfg()).unwrap();
        let dil = build_dilation(&b, k.level() + 1, &cfg()).unwrap();
        let table = ExtensionTable::build(&dil, &space, k.level() + 1).unwrap();
        let words = enumerate_words(k.d(), k.level() + 1).unwrap();
        let m = k.dim_h();
        let n = words.len() * m;
        let mut g = CMat::zeros(n, n);
        for (a, wa) in words.iter().enumerate() {
            for (b, wb) in words.iter().enumerate() {
                g.view_mut((a * m, b * m), (m, m))
                    .copy_from(&table.value(wa, wb).unwrap());
            }
        }
        assert!(check_psd(&HermitianMatrix::new(g).unwrap(), &cfg()).is_psd);
    }
}

proptest! {
    #[test]
    fn word_order_matches_enumeration_index(d in 1usize..4, n in 0usize..4) {
        let words = enumerate_words(d, n).unwrap();
        for (k, w) in words.iter().enumerate() {
            prop_assert_eq!(words.index_of(w), Some(k));
        }
        prop_assert!(words.words().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn measure_moments_are_completely_monotone(
        atoms in prop::collection::btree_map(0u32..=1000, 0.01f64..1.0, 1..5),
        k_max in 0usize..9,
    ) {
        let mu = AtomicMeasure::new(
            atoms.into_iter().map(|(x, w)| (f64::from(x) / 1000.0, w)).collect(),
        ).unwrap();
        let s = moments(&mu, k_max);
        prop_assert!(check_complete_monotone(&s, &cfg()).ok);
        prop_assert!(s.values().windows(2).all(|p| p[1] <= p[0] + 1e-15));
    }

    #[test]
    fn psd_sqrt_squares_back(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
        let x = CMat::from_fn(4, 4, |i, j| C64::new(entries[4 * i + j], 0.0));
        let g = HermitianMatrix::gram_of(&x);
        let root = psd_sqrt(&g, &cfg()).unwrap();
        let back = root.matrix() * root.matrix();
        prop_assert!((back - g.matrix()).norm() <= 1e-9 * g.frobenius().max(1.0));
    }
}
