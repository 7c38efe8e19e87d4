//! Exact stationary Gaussian likelihood: the first `p` observations are
//! `N_{mp}(0, G)` with block-Toeplitz `G`, the rest are `N_m(Σφᵢy_{t−i}, Σ)`.

use crate::error::{Error, Result};
use crate::linalg::{chol_log_det, cholesky, forward_subst, Mat, Matrix};
use crate::model::{Trajectory, VarModel};
use crate::prior::LN_2PI;
use crate::process::{autocovariances, block_toeplitz, jittered_cholesky};
use crate::scalar::Real;

/// Data reduced to what the likelihood needs: the first `p` observations and
/// the cross-product `Σ_{t≥p} z_t z_tᵀ` of `z_t = (y_t, y_{t−1}, …, y_{t−p})`.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodData {
    m: usize,
    p: usize,
    n: usize,
    head: Vec<f64>,
    cross: Matrix,
}

impl LikelihoodData {
    pub fn new(data: &Trajectory, p: usize) -> Result<Self> {
        let (n, m) = (data.len(), data.dim());
        if p == 0 {
            return Err(Error::DimensionMismatch("VAR order must be at least 1".into()));
        }
        if n < p {
            return Err(Error::DimensionMismatch(format!("need n ≥ p, got n = {n}, p = {p}")));
        }
        let k = m * (p + 1);
        let mut cross = Matrix::zeros(k, k);
        let mut z = vec![0.0; k];
        for t in p..n {
            for l in 0..=p {
                z[l * m..(l + 1) * m].copy_from_slice(data.row(t - l));
            }
            for i in 0..k {
                for j in 0..k {
                    cross[(i, j)] += z[i] * z[j];
                }
            }
        }
        Ok(Self {
            m,
            p,
            n,
            head: data.values()[..p * m].to_vec(),
            cross,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

fn gaussian_head<T: Real>(gammas: &[Mat<T>], head: &[f64]) -> Result<T> {
    let p = gammas.len();
    let g = block_toeplitz(gammas, p);
    let l = cholesky(&g)?;
    let x: Vec<T> = head.iter().map(|&v| T::from_f64(v)).collect();
    let w = forward_subst(&l, &x);
    let q = w.iter().fold(T::zero(), |acc, &v| acc + v * v);
    Ok(q * -0.5 - chol_log_det(&l) * 0.5 - 0.5 * head.len() as f64 * LN_2PI)
}

/// Log-likelihood from `Φ`, `Γ₀..Γ_{p−1}` and the Cholesky factor of `Σ`.
pub(crate) fn log_likelihood_generic<T: Real>(
    data: &LikelihoodData,
    phi: &[Mat<T>],
    gammas: &[Mat<T>],
    sigma_chol: &Mat<T>,
) -> Result<T> {
    if gammas.len() < data.p {
        return Err(Error::DimensionMismatch("need Γ₀..Γ_{p−1}".into()));
    }
    Ok(gaussian_head(&gammas[..data.p], &data.head)? + conditional_log_likelihood(data, phi, sigma_chol)?)
}

/// `Σ_{t≥p} log N_m(y_t; Σφᵢy_{t−i}, Σ)`, i.e. the likelihood given the first `p` observations.
pub(crate) fn conditional_log_likelihood<T: Real>(data: &LikelihoodData, phi: &[Mat<T>], sigma_chol: &Mat<T>) -> Result<T> {
    let (m, p) = (data.m, data.p);
    if phi.len() != p || sigma_chol.rows() != m || phi.iter().any(|f| f.rows() != m || f.cols() != m) {
        return Err(Error::DimensionMismatch("model does not match the likelihood data".into()));
    }
    let count = data.n - p;
    if count == 0 {
        return Ok(T::zero());
    }
    // e_t = B z_t with B = [I, −φ₁, …, −φₚ]; Σ_t e_tᵀΣ⁻¹e_t = tr(M S Mᵀ), M = L⁻¹B.
    let k = m * (p + 1);
    let mut b = Mat::<T>::zeros(m, k);
    for i in 0..m {
        b[(i, i)] = T::one();
    }
    for (s, f) in phi.iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                b[(i, (s + 1) * m + j)] = -f[(i, j)];
            }
        }
    }
    let mut mmat = Mat::<T>::zeros(m, k);
    for c in 0..k {
        let col: Vec<T> = (0..m).map(|i| b[(i, c)]).collect();
        for (i, v) in forward_subst(sigma_chol, &col).into_iter().enumerate() {
            mmat[(i, c)] = v;
        }
    }
    let mut q = T::zero();
    for i in 0..m {
        for a in 0..k {
            let mut ms = T::zero();
            for c in 0..k {
                ms += mmat[(i, c)] * data.cross[(c, a)];
            }
            q += ms * mmat[(i, a)];
        }
    }
    Ok(q * -0.5 - chol_log_det(sigma_chol) * (0.5 * count as f64) - 0.5 * (count * m) as f64 * LN_2PI)
}

/// Exact log-likelihood of a stationary model, one conditional term per time point.
pub fn log_likelihood_exact(model: &VarModel, data: &Trajectory) -> Result<f64> {
    let (m, p, n) = (model.dim(), model.order(), data.len());
    if data.dim() != m {
        return Err(Error::DimensionMismatch(format!("model has m = {m}, data has {} columns", data.dim())));
    }
    if n < p {
        return Err(Error::DimensionMismatch(format!("need n ≥ p, got n = {n}, p = {p}")));
    }
    let (stationary, radius) = crate::process::is_stationary(model.phi());
    if !stationary {
        return Err(Error::NotStationary { radius });
    }
    let gammas = autocovariances(model, p - 1)?;
    let lg = jittered_cholesky(&block_toeplitz(&gammas, p))?;
    let head = &data.values()[..p * m];
    let w = forward_subst(&lg, head);
    let mut total = -0.5 * w.iter().map(|v| v * v).sum::<f64>() - 0.5 * chol_log_det(&lg) - 0.5 * (p * m) as f64 * LN_2PI;

    let ls = cholesky(model.sigma().as_matrix())?;
    let log_det = chol_log_det(&ls);
    for t in p..n {
        let mut e = data.row(t).to_vec();
        for (i, f) in model.phi().iter().enumerate() {
            for (ek, v) in e.iter_mut().zip(f.mat_vec(data.row(t - i - 1))) {
                *ek -= v;
            }
        }
        let w = forward_subst(&ls, &e);
        total += -0.5 * w.iter().map(|v| v * v).sum::<f64>() - 0.5 * log_det - 0.5 * m as f64 * LN_2PI;
    }
    Ok(total)
}
