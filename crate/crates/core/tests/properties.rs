use proptest::prelude::*;
use udrd::analysis::{self, RateLossMode};
use udrd::linalg::{self, SquareMatrix, SymmetricMatrix};
use udrd::process::{self, QuadratureGrid, SpectrumModel};
use udrd::validation;
use udrd::vector::{self, SourceCovariance};

fn rel_frobenius(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

fn eigenvalues(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1_f64..100.0, 1..=max_n)
}

/// Orthogonal matrix from the eigenvectors of a random symmetric matrix.
fn orthogonal(n: usize, entries: &[f64]) -> SquareMatrix {
    let m = SquareMatrix::from_fn(n, |i, j| entries[i * n + j] + entries[j * n + i]);
    linalg::eigh(&SymmetricMatrix::symmetrize(&m).unwrap())
        .unwrap()
        .eigenvectors
}

fn rotated_source(lambdas: &[f64], entries: &[f64]) -> SourceCovariance {
    let n = lambdas.len();
    let u = orthogonal(n, entries);
    let m = u
        .matmul(&SquareMatrix::from_diagonal(lambdas))
        .matmul(&u.transpose());
    SourceCovariance::new(SymmetricMatrix::symmetrize(&m).unwrap()).unwrap()
}

fn source_and_rotation(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    eigenvalues(max_n).prop_flat_map(|l| {
        let n = l.len();
        (Just(l), prop::collection::vec(-1.0_f64..1.0, n * n))
    })
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_polynomial_matches_explicit((l, e) in source_and_rotation(6), c in prop::array::uniform3(-2.0_f64..2.0)) {
        let src = rotated_source(&l, &e);
        let m = src.matrix().matrix();
        let n = m.order();
        let explicit = SquareMatrix::identity(n)
            .scale(c[0])
            .add(&m.scale(c[1]))
            .add(&m.matmul(m).scale(c[2]));
        let f = linalg::matrix_function(src.matrix(), |x| c[0] + c[1] * x + c[2] * x * x).unwrap();
        prop_assert!(rel_frobenius(f.matrix(), &explicit) <= 1e-9);
    }

    #[test]
    fn square_root_squares_back((l, e) in source_and_rotation(8)) {
        let src = rotated_source(&l, &e);
        let r = linalg::matrix_function(src.matrix(), f64::sqrt).unwrap();
        prop_assert!(rel_frobenius(&r.matrix().matmul(r.matrix()), src.matrix().matrix()) <= 1e-9);
    }

    #[test]
    fn solvers_agree_on_spectra((l, e) in source_and_rotation(8)) {
        let src = rotated_source(&l, &e);
        let reference = linalg::eigensolvers().create("jacobi").unwrap().decompose(src.matrix()).unwrap();
        let other = linalg::eigensolvers().create("householder-ql").unwrap().decompose(src.matrix()).unwrap();
        for (a, b) in reference.eigenvalues.iter().zip(&other.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-10 * src.max_eigenvalue());
        }
    }

    #[test]
    fn toeplitz_spectrum_lies_within_ess_range(a in -0.95_f64..0.95, order in 2_usize..48) {
        let model = SpectrumModel::ar(vec![a], 1.0).unwrap();
        let grid = QuadratureGrid::default_simpson();
        let src = process::toeplitz_truncation(&model, order, &grid).unwrap();
        let lo = 1.0 / (1.0 + a.abs()).powi(2);
        let hi = 1.0 / (1.0 - a.abs()).powi(2);
        prop_assert!(src.min_eigenvalue() >= lo - 1e-8);
        prop_assert!(src.max_eigenvalue() <= hi + 1e-8);
    }

    #[test]
    fn distortion_strictly_increases_in_alpha(l in eigenvalues(8), mut alphas in prop::collection::vec(log_uniform(1e-3, 1e3), 2..20)) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let d: Vec<f64> = alphas.iter().map(|&a| vector::distortion_of_alpha(&src, a).unwrap()).collect();
        prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn alternative_rate_form_agrees(l in 0.1_f64..100.0, a in log_uniform(1e-4, 1e4)) {
        let x = vector::band_rate(l, a);
        prop_assert!((x - vector::band_rate_alt(l, a)).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn optimal_law_commutes_and_meets_budget((l, e) in source_and_rotation(6), a in log_uniform(1e-3, 1e3)) {
        let src = rotated_source(&l, &e);
        let law = vector::optimal_distortion_law(&src, a).unwrap();
        let kx = src.matrix().matrix();
        let kz = law.covariance.matrix();
        let commutator = kx.matmul(kz).sub(&kz.matmul(kx));
        prop_assert!(commutator.frobenius_norm() <= 1e-10 * kx.frobenius_norm() * kz.frobenius_norm());
        let d = vector::distortion_of_alpha(&src, a).unwrap();
        prop_assert!((law.covariance.trace() / l.len() as f64 - d).abs() <= 1e-12 * d);
    }

    #[test]
    fn rate_is_rotation_invariant((l, e) in source_and_rotation(6), a in log_uniform(1e-3, 1e3)) {
        let diag = SourceCovariance::from_eigenvalues(&l).unwrap();
        let rotated = rotated_source(&l, &e);
        let r = vector::rate_perp(&diag, a).unwrap();
        prop_assert!((vector::rate_perp(&rotated, a).unwrap() - r).abs() <= 1e-10);
    }

    #[test]
    fn alpha_round_trip(l in eigenvalues(8), a in log_uniform(1e-3, 1e3)) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        let d = vector::distortion_of_alpha(&src, a).unwrap();
        let back = vector::solve_alpha(&src, d).unwrap().alpha;
        prop_assert!((back - a).abs() <= 1e-8 * a);
    }

    #[test]
    fn rate_is_positive(l in eigenvalues(8), a in log_uniform(1e-6, 1e8)) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        prop_assert!(vector::rate_perp(&src, a).unwrap() > 0.0);
    }

    #[test]
    fn spectral_scaling_law(a in -0.9_f64..0.9, c in log_uniform(1e-2, 1e2), d in log_uniform(1e-2, 1e1)) {
        let grid = QuadratureGrid::default_simpson();
        let base = SpectrumModel::ar(vec![a], 1.0).unwrap().sample(&grid).unwrap();
        let scaled = SpectrumModel::ar(vec![a], c).unwrap().sample(&grid).unwrap();
        let s1 = process::solve_alpha_sampled(&base, d).unwrap();
        let s2 = process::solve_alpha_sampled(&scaled, c * d).unwrap();
        prop_assert!((s2.alpha - c * s1.alpha).abs() <= 1e-9 * c * s1.alpha);
        prop_assert!((scaled.rate(s2.alpha) - base.rate(s1.alpha)).abs() <= 1e-9);
    }

    #[test]
    fn spectral_distortion_strictly_increases(a in -0.9_f64..0.9, mut alphas in prop::collection::vec(log_uniform(1e-3, 1e3), 2..12)) {
        let grid = QuadratureGrid::simpson(512).unwrap();
        let s = SpectrumModel::ar(vec![a], 1.0).unwrap().sample(&grid).unwrap();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let d: Vec<f64> = alphas.iter().map(|&x| s.distortion(x)).collect();
        prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rate_curve_is_convex(l in eigenvalues(6), d0 in log_uniform(1e-3, 1e2), r1 in 1.01_f64..3.0, r2 in 1.01_f64..3.0) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        let ds = [d0, d0 * r1, d0 * r1 * r2];
        let r: Vec<f64> = ds
            .iter()
            .map(|&d| vector::rate_perp(&src, vector::solve_alpha(&src, d).unwrap().alpha).unwrap())
            .collect();
        // Second divided difference on the nonuniform triple.
        let s1 = (r[1] - r[0]) / (ds[1] - ds[0]);
        let s2 = (r[2] - r[1]) / (ds[2] - ds[1]);
        prop_assert!(s2 - s1 >= -1e-9 * s1.abs().max(1.0));
    }

    #[test]
    fn rate_loss_increases_in_exact_regime(l in eigenvalues(6), f1 in 0.01_f64..0.99, f2 in 0.01_f64..0.99) {
        prop_assume!((f1 - f2).abs() > 1e-3);
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let min = src.min_eigenvalue();
        let loss = |d: f64| {
            let alpha = vector::solve_alpha(&src, d).unwrap().alpha;
            let r = analysis::rate_loss(&src, alpha).unwrap();
            assert_eq!(r.mode, RateLossMode::Exact);
            r.value
        };
        prop_assert!(loss(hi * min) > loss(lo * min));
    }

    #[test]
    fn shannon_all_active_closed_form(l in eigenvalues(8), f in 0.01_f64..1.0) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        let d = f * src.min_eigenvalue();
        let expect = l.iter().map(|&x| 0.5 * (x / d).ln()).sum::<f64>() / l.len() as f64;
        let got = analysis::shannon_rd(&src, d).unwrap().rate;
        prop_assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn gap_is_positive(l in eigenvalues(6), f in log_uniform(1e-3, 1e3)) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        prop_assert!(analysis::gap_at_distortion(&src, f * src.mean_variance()).unwrap() > 0.0);
    }

    #[test]
    fn wiener_ratio_exceeds_one(l in eigenvalues(8), a in log_uniform(1e-3, 1e3)) {
        let src = SourceCovariance::from_eigenvalues(&l).unwrap();
        prop_assert!(analysis::wiener_ratio(&src, a).unwrap().ratio > 1.0);
    }

    #[test]
    fn log_det_mi_equals_rate((l, e) in source_and_rotation(8), a in log_uniform(1e-3, 1e3)) {
        let src = rotated_source(&l, &e);
        let law = vector::optimal_distortion_law(&src, a).unwrap();
        let mi = validation::gaussian_mi(&src, &law.covariance).unwrap();
        prop_assert!((mi - vector::rate_perp(&src, a).unwrap()).abs() <= 1e-10);
    }
}
