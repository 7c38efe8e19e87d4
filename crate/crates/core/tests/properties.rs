use nalgebra::DMatrix;
use proptest::prelude::*;

use statvar::forecast::{crps_sample, crps_sample_quadratic, energy_score, log_score_mixture, stationarity_probability};
use statvar::linalg::{singular_values, spectral_radius, sym_sqrt};
use statvar::model::companion_matrix;
use statvar::process::is_stationary;
use statvar::reparam::{a_to_p, forward_map, orthogonal_conjugate, p_to_a, reverse_map, MatrixSequence};
use statvar::{Matrix, PacfSequence, SpdMatrix, VarModel};

fn matrix(m: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0..1.0f64, m * m).prop_map(move |v| Matrix::from_vec(m, m, v).scale(scale))
}

fn spd(m: usize) -> impl Strategy<Value = SpdMatrix> {
    matrix(m, 1.0).prop_map(move |b| {
        let mut s = b.matmul_t(&b);
        for i in 0..m {
            s[(i, i)] += 0.5;
        }
        SpdMatrix::new(s).unwrap()
    })
}

/// Orthogonal factor of the QR decomposition of a random matrix.
fn orthogonal(m: usize) -> impl Strategy<Value = Matrix> {
    matrix(m, 1.0).prop_map(move |b| {
        let mut shifted = b.clone();
        for i in 0..m {
            shifted[(i, i)] += 2.0;
        }
        let q = shifted.to_nalgebra().qr().q();
        Matrix::from_nalgebra(&DMatrix::from_fn(m, m, |i, j| q[(i, j)]))
    })
}

fn case() -> impl Strategy<Value = (SpdMatrix, Vec<Matrix>, Matrix)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(m, p)| {
        (spd(m), prop::collection::vec(matrix(m, 2.0), p), orthogonal(m))
    })
}

fn pacf_of(a: &[Matrix]) -> PacfSequence {
    PacfSequence::new(a.iter().map(|x| a_to_p(x).unwrap()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn a_to_p_lands_inside_unit_ball((_, a, _) in case()) {
        for x in &a {
            let p = a_to_p(x).unwrap();
            prop_assert!(singular_values(&p)[0] < 1.0);
            prop_assert!(p_to_a(&p).unwrap().max_abs_diff(x) < 1e-9 * x.max_abs().max(1.0));
        }
    }

    #[test]
    fn p_to_a_is_orthogonally_equivariant((_, a, h) in case()) {
        for x in &a {
            let p = a_to_p(x).unwrap();
            let lhs = p_to_a(&p.conjugate_by(&h)).unwrap();
            let rhs = p_to_a(&p).unwrap().conjugate_by(&h);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9 * rhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn reverse_map_is_stationary_and_invertible((sigma, a, _) in case()) {
        let pacf = pacf_of(&a);
        let (model, _) = reverse_map(&sigma, &pacf).unwrap();
        prop_assert!(is_stationary(model.phi()).0);
        let (back, _) = forward_map(&model).unwrap();
        for (x, y) in pacf.matrices().iter().zip(back.matrices()) {
            prop_assert!(x.max_abs_diff(y) < 1e-8);
        }
    }

    #[test]
    fn forward_map_commutes_with_rotation((sigma, a, h) in case()) {
        let pacf = pacf_of(&a);
        let (model, _) = reverse_map(&sigma, &pacf).unwrap();
        let rotated = VarModel::new(
            SpdMatrix::new(sigma.as_matrix().conjugate_by(&h)).unwrap(),
            model.phi().iter().map(|f| f.conjugate_by(&h)).collect(),
        ).unwrap();
        let (got, _) = forward_map(&rotated).unwrap();
        let want = orthogonal_conjugate(&pacf, &h).unwrap();
        for (x, y) in got.matrices().iter().zip(want.matrices()) {
            prop_assert!(x.max_abs_diff(y) < 1e-7);
        }
    }

    #[test]
    fn companion_radius_matches_is_stationary((sigma, a, _) in case()) {
        let (model, _) = reverse_map(&sigma, &pacf_of(&a)).unwrap();
        let radius = spectral_radius(&companion_matrix(model.phi()));
        prop_assert_eq!(is_stationary(model.phi()).1, radius);
        prop_assert_eq!(stationarity_probability(std::slice::from_ref(&model)).unwrap(), 1.0);
    }

    #[test]
    fn sym_sqrt_squares_back(s in (1usize..=4).prop_flat_map(spd)) {
        let r = sym_sqrt(s.as_matrix()).unwrap();
        prop_assert!(r.matmul(&r).max_abs_diff(s.as_matrix()) < 1e-10 * s.as_matrix().max_abs().max(1.0));
        prop_assert!(r.max_abs_diff(&r.transpose()) < 1e-12);
    }

    #[test]
    fn crps_forms_agree(xs in prop::collection::vec(-10.0..10.0f64, 2..80), y in -10.0..10.0f64) {
        let a = crps_sample(&xs, y).unwrap();
        prop_assert!((a - crps_sample_quadratic(&xs, y).unwrap()).abs() < 1e-10);
        prop_assert!(a >= -1e-12);
        let col: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        prop_assert!((energy_score(&col, &[y]).unwrap() - a).abs() < 1e-10);
    }

    #[test]
    fn energy_score_ignores_sample_order(
        pts in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 2..30),
        y in prop::collection::vec(-5.0..5.0f64, 3),
        shift in 0usize..30,
    ) {
        let mut rotated = pts.clone();
        let k = shift % pts.len();
        rotated.rotate_left(k);
        rotated.reverse();
        let a = energy_score(&pts, &y).unwrap();
        prop_assert!((a - energy_score(&rotated, &y).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn mixture_log_score_is_bounded_by_components(
        comps in prop::collection::vec((-3.0..3.0f64, 0.1..4.0f64), 1..10),
        y in -5.0..5.0f64,
    ) {
        let (mu, var): (Vec<f64>, Vec<f64>) = comps.iter().copied().unzip();
        let mix = log_score_mixture(&mu, &var, y).unwrap();
        let single: Vec<f64> = comps.iter().map(|(m, v)| log_score_mixture(&[*m], &[*v], y).unwrap()).collect();
        let lo = single.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = single.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(mix >= lo - 1e-12 && mix <= hi + 1e-12);
    }
}
