//! VAR process utilities: stationarity, autocovariances and simulation.
//!
//! Autocovariances follow `Γᵢ = Cov(y_t, y_{t+i}) = E(y_t y_{t+i}ᵀ)` with
//! `Γ₋ᵢ = Γᵢᵀ`. Under this convention the Yule–Walker recursion reads
//! `Γⱼᵀ = Σᵢ φᵢ Γⱼ₋ᵢᵀ` and `Σ = Γ₀ − Σᵢ φᵢ Γᵢ`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_discrete_lyapunov, spectral_radius, Mat, Matrix};
use crate::model::{companion_matrix, Trajectory, VarModel};
use crate::scalar::Real;

/// Margin below one that the computed spectral radius must clear; absorbs the
/// eigenvalue solver's rounding at unit roots.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Companion-form stationarity check; also reports the spectral radius.
pub fn is_stationary(phi: &[Matrix]) -> (bool, f64) {
    if phi.is_empty() {
        return (true, 0.0);
    }
    let radius = spectral_radius(&companion_matrix(phi));
    (radius < 1.0 - STATIONARY_TOL, radius)
}

/// `Γ₀ … Γ_{max_lag}` of a stationary model.
pub fn autocovariances(model: &VarModel, max_lag: usize) -> Result<Vec<Matrix>> {
    let m = model.dim();
    let p = model.order();
    let f = model.companion();
    let mut q = Matrix::zeros(m * p, m * p);
    q.set_block(0, 0, model.sigma().as_matrix());
    let x = solve_discrete_lyapunov(&f, &q)?;

    // Block (i, 0) of the stacked-state covariance is E(y_{t-i} y_tᵀ) = Γᵢ.
    let mut gammas: Vec<Matrix> = (0..p.min(max_lag + 1)).map(|i| x.block(i * m, 0, m, m)).collect();
    for j in p..=max_lag {
        // Γⱼᵀ = Σᵢ φᵢ Γⱼ₋ᵢᵀ
        let mut gt = Matrix::zeros(m, m);
        for (i, phi) in model.phi().iter().enumerate() {
            gt = &gt + &phi.matmul_t(&gammas[j - i - 1]);
        }
        gammas.push(gt.transpose());
    }
    gammas.truncate(max_lag + 1);
    Ok(gammas)
}

/// Block-Toeplitz covariance of `k` consecutive observations: block `(i, j)` is `Γ_{j−i}`.
pub fn block_toeplitz<T: Real>(gammas: &[Mat<T>], k: usize) -> Mat<T> {
    let m = gammas[0].rows();
    let mut g = Mat::zeros(m * k, m * k);
    for i in 0..k {
        for j in 0..k {
            let block = if j >= i {
                gammas[j - i].clone()
            } else {
                gammas[i - j].transpose()
            };
            g.set_block(i * m, j * m, &block);
        }
    }
    g
}

/// Cholesky factor with a single jittered retry (`1e-10·tr(G)/dim` on the diagonal).
pub(crate) fn jittered_cholesky(g: &Matrix) -> Result<Matrix> {
    match cholesky(g) {
        Ok(l) => Ok(l),
        Err(_) => {
            let n = g.rows();
            let jitter = 1e-10 * g.trace() / n as f64;
            let mut gj = g.clone();
            for i in 0..n {
                gj[(i, i)] += jitter;
            }
            cholesky(&gj)
        }
    }
}

/// Draws a length-`n` trajectory started from the stationary distribution.
pub fn simulate(model: &VarModel, n: usize, seed: u64) -> Result<Trajectory> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    simulate_with(model, n, &mut rng)
}

pub(crate) fn simulate_with<R: rand::Rng>(model: &VarModel, n: usize, rng: &mut R) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::DimensionMismatch("trajectory length must be at least 1".into()));
    }
    let m = model.dim();
    let p = model.order();
    model.check_strictly_stationary()?;
    let gammas = autocovariances(model, p - 1)?;
    let g = block_toeplitz(&gammas, p);
    let lg = jittered_cholesky(&g)?;
    let ls = cholesky(model.sigma().as_matrix())?;

    let mut values = Vec::with_capacity(n.max(p) * m);
    let z: Vec<f64> = (0..m * p).map(|_| StandardNormal.sample(rng)).collect();
    values.extend(lg.mat_vec(&z));
    for t in p..n {
        let mut y = vec![0.0; m];
        for (i, phi) in model.phi().iter().enumerate() {
            let lagged = &values[(t - i - 1) * m..(t - i) * m];
            for (yk, v) in y.iter_mut().zip(phi.mat_vec(lagged)) {
                *yk += v;
            }
        }
        let e: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        for (yk, v) in y.iter_mut().zip(ls.mat_vec(&e)) {
            *yk += v;
        }
        values.extend(y);
    }
    values.truncate(n * m);
    Trajectory::new(m, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;

    fn scalar_model(phi: &[f64], sigma2: f64) -> VarModel {
        VarModel::new(
            SpdMatrix::new(Matrix::from_rows(&[&[sigma2]])).unwrap(),
            phi.iter().map(|&f| Matrix::from_rows(&[&[f]])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn stationarity_examples() {
        let unit = [Matrix::from_rows(&[&[1.5]]), Matrix::from_rows(&[&[-0.5]])];
        let (ok, radius) = is_stationary(&unit);
        assert!(!ok);
        assert!((radius - 1.0).abs() < 1e-12);
        let (ok, radius) = is_stationary(&[Matrix::zeros(2, 2), Matrix::zeros(2, 2)]);
        assert!(ok && radius < 1e-14);
        let (ok, radius) = is_stationary(&[Matrix::from_rows(&[&[0.9]])]);
        assert!(ok && (radius - 0.9).abs() < 1e-15);
    }

    #[test]
    fn ar1_autocovariances_decay_geometrically() {
        let g = autocovariances(&scalar_model(&[0.5], 1.0), 2).unwrap();
        let want = [4.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0];
        for (gi, w) in g.iter().zip(want) {
            assert!((gi[(0, 0)] - w).abs() < 1e-13);
        }
    }

    #[test]
    fn decoupled_and_white_noise_autocovariances() {
        let model = VarModel::new(SpdMatrix::identity(2), vec![Matrix::identity(2).scale(0.5)]).unwrap();
        let g = autocovariances(&model, 3).unwrap();
        for (j, gj) in g.iter().enumerate() {
            let want = Matrix::identity(2).scale(4.0 / 3.0 * 0.5f64.powi(j as i32));
            assert!(gj.max_abs_diff(&want) < 1e-13);
        }
        let sigma = SpdMatrix::new(Matrix::from_rows(&[&[2.0, 0.3], &[0.3, 1.0]])).unwrap();
        let white = VarModel::new(sigma.clone(), vec![Matrix::zeros(2, 2); 2]).unwrap();
        let g = autocovariances(&white, 3).unwrap();
        assert!(g[0].max_abs_diff(sigma.as_matrix()) < 1e-14);
        assert!(g[1..].iter().all(|gj| gj.max_abs() < 1e-14));
    }

    #[test]
    fn yule_walker_identity_recovers_sigma() {
        let sigma = SpdMatrix::new(Matrix::from_rows(&[&[1.0, 0.4], &[0.4, 2.0]])).unwrap();
        let phi = vec![
            Matrix::from_rows(&[&[0.5, 0.1], &[-0.2, 0.3]]),
            Matrix::from_rows(&[&[-0.2, 0.05], &[0.1, 0.2]]),
        ];
        let model = VarModel::new(sigma.clone(), phi.clone()).unwrap();
        let g = autocovariances(&model, 2).unwrap();
        let mut s = g[0].clone();
        for (i, f) in phi.iter().enumerate() {
            s = &s - &f.matmul(&g[i + 1]);
        }
        assert!(s.max_abs_diff(sigma.as_matrix()) < 1e-12);
        let gmat = block_toeplitz(&g, 3);
        let (lam, _) = crate::linalg::eigh(&gmat);
        assert!(lam[0] > 0.0);
    }

    #[test]
    fn white_noise_simulation_and_determinism() {
        let model = VarModel::new(SpdMatrix::identity(2), vec![Matrix::zeros(2, 2)]).unwrap();
        let a = simulate(&model, 3, 7).unwrap();
        let b = simulate(&model, 3, 7).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, b);
        assert_ne!(a, simulate(&model, 3, 8).unwrap());
    }

    #[test]
    fn ar1_lag_one_autocovariance_matches_theory() {
        let n = 100_000;
        let y = simulate(&scalar_model(&[0.5], 1.0), n, 11).unwrap();
        let v = y.values();
        let c1 = v.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64;
        // Loose bound: the standard error here is about 0.008.
        assert!((c1 - 2.0 / 3.0).abs() < 0.03, "c1 = {c1}");
    }

    #[test]
    fn simulate_refuses_explosive_models() {
        let sigma = SpdMatrix::identity(1);
        let explosive = VarModel::unrestricted(sigma, vec![Matrix::from_rows(&[&[1.5]])]).unwrap();
        assert!(matches!(simulate(&explosive, 10, 1), Err(Error::NotStationary { .. })));
    }
}
