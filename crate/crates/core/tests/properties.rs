//! Property tests for the invariants every module promises.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fuzzyspec::deficiency::{cayley_transform, deficiency_spaces};
use fuzzyspec::extensions::{extend_by_boundary, extend_by_cayley, isospinor_ket, parent_defect, ExtensionParameter};
use fuzzyspec::flows::{flow_unitary, generated_algebra_dimension_seeded, FlowBackend};
use fuzzyspec::hilbert::{
    complement, eigh, inner, orthonormalize, reconstruct, weighted_gram, ComplexMatrix, Grid, Measure, C64,
};
use fuzzyspec::ops::{build_interval_derivative, build_matrix_model, build_matrix_model_seeded, check_symmetry, random_hermitian, Backend};
use fuzzyspec::uncertainty::{mean_and_spread, min_uncertainty, VarianceProblem};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Grid with increasing points and random positive weights.
fn random_grid(n: usize, seed: u64) -> Arc<Grid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let points: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
    Arc::new(Grid::new(points, weights, Measure::Lebesgue).unwrap())
}

/// `exp(iH)` for a seeded Hermitian `H`, assembled from its eigenpairs.
fn random_unitary(r: usize, seed: u64) -> ComplexMatrix {
    let h = random_hermitian(r, seed);
    let s = eigh(&h, &Grid::counting(r).unwrap()).unwrap();
    let d: Vec<C64> = s.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)).collect();
    &(&s.eigenvectors * &ComplexMatrix::from_diag(&d)) * &s.eigenvectors.adjoint()
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn orthonormalized_bases_are_orthonormal(n in 2usize..24, k in 1usize..8, seed in any::<u64>()) {
        let g = random_grid(n, seed);
        let s = orthonormalize(&gaussian_matrix(n, k.min(n), seed), &g, 1e-8);
        prop_assert_eq!(s.dim(), k.min(n));
        prop_assert!(weighted_gram(s.basis(), s.basis(), &g).identity_defect() < 1e-10);
    }

    #[test]
    fn complement_twice_restores_the_dimension(n in 2usize..24, k in 0usize..10, seed in any::<u64>()) {
        let g = random_grid(n, seed);
        let s = orthonormalize(&gaussian_matrix(n, k.min(n), seed), &g, 1e-8);
        let c = complement(&s);
        prop_assert_eq!(c.dim(), n - s.dim());
        prop_assert!(c.orthonormality_defect() < 1e-10);
        prop_assert_eq!(complement(&c).dim(), s.dim());
    }

    #[test]
    fn eigh_reconstructs_weighted_hermitian_matrices(n in 1usize..20, seed in any::<u64>()) {
        let g = random_grid(n, seed);
        // W^{-1/2} H W^{1/2} is Hermitian in the W-weighted inner product.
        let sq: Vec<f64> = g.ambient_weights().iter().map(|w| w.sqrt()).collect();
        let isq: Vec<f64> = sq.iter().map(|s| 1.0 / s).collect();
        let m = random_hermitian(n, seed).scale_rows_cols(&isq, &sq);
        let s = eigh(&m, &g).unwrap();
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let err = fuzzyspec::hilbert::operator_norm(&(&m - &reconstruct(&s, &g)), &g);
        prop_assert!(err <= 1e-8 * fuzzyspec::hilbert::operator_norm(&m, &g).max(1e-300));
        prop_assert!(weighted_gram(&s.eigenvectors, &s.eigenvectors, &g).identity_defect() < 1e-10);
    }

    #[test]
    fn matrix_models_obey_the_codimension_identity(n in 4usize..10, codim in 0usize..3, seed in any::<u64>()) {
        prop_assume!(n >= 2 * codim + 2);
        let op = build_matrix_model_seeded(&random_hermitian(n, seed), codim, seed).unwrap();
        prop_assert!(check_symmetry(&op) < 1e-8);
        let rep = deficiency_spaces(&op).unwrap();
        prop_assert_eq!((rep.r_plus, rep.r_minus), (codim, codim));
        prop_assert_eq!(rep.r_plus, op.ambient_dim() - op.domain().dim());
        if codim > 0 {
            let s = cayley_transform(&op).unwrap();
            prop_assert!(complement(&s.initial_space).max_angle_sine(&rep.basis_plus) < 1e-8);
        }
    }

    #[test]
    fn matrix_models_are_deterministic(n in 4usize..10, seed in any::<u64>()) {
        let m = random_hermitian(n, seed);
        let a = build_matrix_model_seeded(&m, 1, seed).unwrap();
        let b = build_matrix_model_seeded(&m, 1, seed).unwrap();
        let bits = |x: &ComplexMatrix| x.row_major().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect::<Vec<_>>();
        prop_assert_eq!(bits(a.domain().basis()), bits(b.domain().basis()));
    }

    #[test]
    fn overlaps_decay_like_two_over_distance(xi in -20.0f64..20.0, gap in 1.0f64..30.0) {
        let g = Arc::new(Grid::trapezoid(0.0, 1.0, 512).unwrap());
        let a = isospinor_ket(&g, xi, 0);
        let b = isospinor_ket(&g, xi + gap, 0);
        prop_assert!(inner(&a, &b, &g).norm() <= 2.0 / gap);
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn interval_models_are_symmetric_and_block_diagonal(r in 1usize..4, n in 16usize..48, spectral in any::<bool>()) {
        let backend = if spectral { Backend::Spectral } else { Backend::FiniteDifference };
        let op = build_interval_derivative(r, n, backend).unwrap();
        prop_assert!(check_symmetry(&op) < 1e-8);
        let m = op.matrix();
        let block = m.nrows() / r;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i / block != j / block {
                    prop_assert_eq!(m.get(i, j), C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn boundary_extensions_extend_the_parent(r in 1usize..3, seed in any::<u64>()) {
        let op = build_interval_derivative(r, 64, Backend::FiniteDifference).unwrap();
        let u = ExtensionParameter::new(random_unitary(r, seed), "random").unwrap();
        let ext = extend_by_boundary(&op, &u).unwrap();
        prop_assert!(ext.hermitian_defect() < 1e-10);
        prop_assert!(parent_defect(&ext, &op).unwrap() < 1e-8);
    }

    #[test]
    fn cayley_extensions_extend_the_parent(n in 6usize..10, codim in 1usize..3, seed in any::<u64>()) {
        let op = build_matrix_model_seeded(&random_hermitian(n, seed), codim, seed).unwrap();
        let ext = extend_by_cayley(&op, &random_unitary(codim, seed.wrapping_add(1))).unwrap();
        prop_assert!(ext.hermitian_defect() < 1e-9);
        prop_assert!(parent_defect(&ext, &op).unwrap() < 1e-8);
    }

    #[test]
    fn flows_are_unitary_and_obey_the_group_law(theta in -PI..PI, a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let op = build_interval_derivative(1, 65, Backend::Spectral).unwrap();
        let ext = extend_by_boundary(&op, &ExtensionParameter::phase(theta)).unwrap();
        let sa = flow_unitary(&ext, a, FlowBackend::SpectralExponential).unwrap();
        let sb = flow_unitary(&ext, b, FlowBackend::SpectralExponential).unwrap();
        let sab = flow_unitary(&ext, a + b, FlowBackend::SpectralExponential).unwrap();
        prop_assert!(sa.unitary_defect() < 1e-8);
        prop_assert!((&(&sa.matrix * &sb.matrix) - &sab.matrix).max_abs() < 1e-8);
    }

    #[test]
    fn algebra_span_grows_monotonically(seed in any::<u64>(), n in 4usize..7) {
        let op = build_matrix_model(&random_hermitian(n, seed), 1).unwrap();
        let rep = generated_algebra_dimension_seeded(&op, 4, 2, seed).unwrap();
        prop_assert!(rep.by_length.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(rep.dimension <= n * n);
    }

    #[test]
    fn minimizers_satisfy_their_constraints(xi in -6.0f64..6.0) {
        let op = build_interval_derivative(1, 128, Backend::FiniteDifference).unwrap();
        let m = min_uncertainty(&op, xi).unwrap();
        let (mean, spread) = mean_and_spread(&op, m.minimizer.components());
        prop_assert!((m.minimizer.norm() - 1.0).abs() < 1e-10);
        prop_assert!((mean - xi).abs() < 1e-8);
        prop_assert!((spread - m.dx_min).abs() < 1e-6);
    }
}

/// Random domain states never beat the minimum for their own mean.
#[test]
fn random_domain_states_respect_the_lower_bound() {
    let op = build_interval_derivative(1, 64, Backend::FiniteDifference).unwrap();
    let problem = VarianceProblem::new(&op).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let d = op.domain();
    for _ in 0..100 {
        let c: Vec<C64> = (0..d.dim()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let phi = d.combine(&c);
        let (mean, spread) = mean_and_spread(&op, &phi);
        let best = problem.solve(mean).unwrap();
        assert!(spread * spread >= best.dx_min * best.dx_min - 1e-6, "{spread} < {}", best.dx_min);
    }
}

#[test]
fn doubling_the_grid_moves_the_minimum_by_under_one_percent() {
    for xi in [-3.0, 0.0, 4.5] {
        let coarse = min_uncertainty(&build_interval_derivative(1, 128, Backend::FiniteDifference).unwrap(), xi).unwrap();
        let fine = min_uncertainty(&build_interval_derivative(1, 256, Backend::FiniteDifference).unwrap(), xi).unwrap();
        assert!((coarse.dx_min / fine.dx_min - 1.0).abs() < 0.01);
    }
}

/// Spectral boundary extensions agree with the parent only to spectral accuracy on smooth functions.
#[test]
fn spectral_extension_defect_shrinks_with_the_grid() {
    for theta in [0.3, 2.9] {
        let defect = |n| {
            let op = build_interval_derivative(1, n, Backend::Spectral).unwrap();
            parent_defect(&extend_by_boundary(&op, &ExtensionParameter::phase(theta)).unwrap(), &op).unwrap()
        };
        let (coarse, fine) = (defect(64), defect(256));
        assert!(fine < coarse / 100.0 && fine < 1e-6, "{coarse} -> {fine}");
    }
}
