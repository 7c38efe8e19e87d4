//! Unconstrained comparison priors: the conjugate Minnesota posterior and the
//! semi-conjugate normal / inverse-Wishart posterior.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::inference::{
    ad_value_and_gradient, conditional_log_likelihood, log_cholesky, log_cholesky_names, LikelihoodData, LogDensity,
};
use crate::linalg::{Mat, Matrix, SpdMatrix};
use crate::model::{Trajectory, VarModel};
use crate::prior::{
    normal_logpdf, sample_prior_with, InverseWishart, MinnesotaHyper, PriorSpec, SemiConjugateHyper, SemiConjugateLag,
};
use crate::reparam::{a_to_p, reverse_map, MatrixSequence, PacfSequence};
use crate::scalar::Real;

fn check_order(data: &Trajectory, p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::DimensionMismatch("VAR order must be at least 1".into()));
    }
    if data.len() <= 2 * p {
        return Err(Error::RankDeficientDesign);
    }
    Ok(())
}

/// `(XᵀX, Xᵀy)` for regressing `y_{t,target}` on `regressors(t)`, `t = p..n`.
fn normal_equations(
    data: &Trajectory,
    p: usize,
    target: usize,
    regressors: impl Fn(usize) -> Vec<f64>,
) -> (DMatrix<f64>, DVector<f64>, f64, usize) {
    let k = regressors(p).len();
    let mut xtx = DMatrix::zeros(k, k);
    let mut xty = DVector::zeros(k);
    let mut yty = 0.0;
    for t in p..data.len() {
        let x = DVector::from_vec(regressors(t));
        let y = data.row(t)[target];
        xtx += &x * x.transpose();
        xty += &x * y;
        yty += y * y;
    }
    (xtx, xty, yty, data.len() - p)
}

fn lagged(data: &Trajectory, p: usize, t: usize) -> Vec<f64> {
    (1..=p).flat_map(|s| data.row(t - s).iter().copied()).collect()
}

/// Residual variance `RSS / (n − 2p)` of the univariate AR(p) least-squares
/// fit for each variable, conditioning on the first `p` observations.
pub fn univariate_residual_variances(data: &Trajectory, p: usize) -> Result<Vec<f64>> {
    check_order(data, p)?;
    (0..data.dim())
        .map(|j| {
            let (xtx, xty, yty, n) = normal_equations(data, p, j, |t| (1..=p).map(|s| data.row(t - s)[j]).collect());
            let chol = xtx.clone().cholesky().ok_or(Error::RankDeficientDesign)?;
            let beta = chol.solve(&xty);
            let rss = yty - beta.dot(&xty);
            let dof = (n - p) as f64;
            let s2 = rss / dof;
            if !(s2 > 0.0) || !s2.is_finite() {
                return Err(Error::RankDeficientDesign);
            }
            Ok(s2)
        })
        .collect()
}

/// Independent normal priors on each equation's coefficients, ordered
/// `(φ_{1,i·}, …, φ_{p,i·})`, with diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationPrior {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// The Litterman prior: own lags `(λ₁/s)²`, cross lags `(λ₁λ₂/s)²(sᵢ/sⱼ)²`.
pub fn minnesota_prior(hyper: &MinnesotaHyper, sigma2: &[f64], p: usize) -> Vec<EquationPrior> {
    let m = sigma2.len();
    (0..m)
        .map(|i| {
            let mut mean = vec![0.0; m * p];
            let mut var = vec![0.0; m * p];
            mean[i] = hyper.own_lag_mean;
            for s in 1..=p {
                for j in 0..m {
                    let base = hyper.lambda1 / s as f64;
                    var[(s - 1) * m + j] = if i == j {
                        base * base
                    } else {
                        (base * hyper.lambda2).powi(2) * sigma2[i] / sigma2[j]
                    };
                }
            }
            EquationPrior { mean, var }
        })
        .collect()
}

/// Closed-form posterior of `Φ` with `Σ` fixed at `diag(s₁² … s_m²)`.
#[derive(Clone, Debug)]
pub struct MinnesotaPosterior {
    m: usize,
    p: usize,
    sigma2: Vec<f64>,
    means: Vec<DVector<f64>>,
    /// Lower Cholesky factors of each equation's posterior precision.
    prec_chol: Vec<DMatrix<f64>>,
}

/// Conjugate Minnesota fit with `Σ̂` from univariate AR(p) residual variances.
pub fn fit_minnesota(data: &Trajectory, p: usize, hyper: &MinnesotaHyper) -> Result<MinnesotaPosterior> {
    let sigma2 = univariate_residual_variances(data, p)?;
    let prior = minnesota_prior(hyper, &sigma2, p);
    fit_conjugate(data, p, sigma2, &prior)
}

/// Per-equation conjugate regression under a known diagonal `Σ`.
pub fn fit_conjugate(
    data: &Trajectory,
    p: usize,
    sigma2: Vec<f64>,
    prior: &[EquationPrior],
) -> Result<MinnesotaPosterior> {
    check_order(data, p)?;
    let m = data.dim();
    if sigma2.len() != m || prior.len() != m || prior.iter().any(|e| e.mean.len() != m * p || e.var.len() != m * p) {
        return Err(Error::DimensionMismatch("prior does not match the data dimensions".into()));
    }
    for (i, e) in prior.iter().enumerate() {
        if e.var.iter().any(|v| !(*v > 0.0)) || !(sigma2[i] > 0.0) {
            return Err(Error::NonPositiveHyper(format!("equation {} prior or error variance", i + 1)));
        }
    }
    let mut means = Vec::with_capacity(m);
    let mut prec_chol = Vec::with_capacity(m);
    for i in 0..m {
        let (xtx, xty, _, _) = normal_equations(data, p, i, |t| lagged(data, p, t));
        let e = &prior[i];
        let mut prec = xtx / sigma2[i];
        let mut rhs = xty / sigma2[i];
        for k in 0..m * p {
            prec[(k, k)] += 1.0 / e.var[k];
            rhs[k] += e.mean[k] / e.var[k];
        }
        let chol = prec.cholesky().ok_or(Error::RankDeficientDesign)?;
        means.push(chol.solve(&rhs));
        prec_chol.push(chol.l());
    }
    Ok(MinnesotaPosterior {
        m,
        p,
        sigma2,
        means,
        prec_chol,
    })
}

impl MinnesotaPosterior {
    pub fn sigma_hat(&self) -> &[f64] {
        &self.sigma2
    }

    fn phi_from(&self, rows: &[DVector<f64>]) -> Vec<Matrix> {
        let m = self.m;
        (0..self.p)
            .map(|s| Matrix::from_fn(m, m, |i, j| rows[i][s * m + j]))
            .collect()
    }

    /// Posterior mean of `φ₁ … φₚ`.
    pub fn mean_phi(&self) -> Vec<Matrix> {
        self.phi_from(&self.means)
    }

    fn sigma(&self) -> SpdMatrix {
        SpdMatrix::new(Matrix::from_diag(&self.sigma2)).expect("positive residual variances")
    }

    /// `k` independent posterior draws.
    pub fn sample(&self, k: usize, seed: u64) -> Result<Vec<VarModel>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sigma = self.sigma();
        (0..k)
            .map(|_| {
                let rows: Vec<DVector<f64>> = self
                    .means
                    .iter()
                    .zip(&self.prec_chol)
                    .map(|(mu, l)| {
                        let z = DVector::from_fn(mu.len(), |_, _| StandardNormal.sample(&mut rng));
                        // L Lᵀ = precision, so L⁻ᵀ z has the posterior covariance.
                        let dev = l.transpose().solve_upper_triangular(&z).expect("positive diagonal");
                        mu + dev
                    })
                    .collect();
                VarModel::unrestricted(sigma.clone(), self.phi_from(&rows))
            })
            .collect()
    }
}

fn is_diag_index(k: usize, m: usize) -> bool {
    let r = k % (m * m);
    r / m == r % m
}

/// Log posterior of `(Φ, Σ)` under independent normal priors on the entries
/// of `φ_s` and an inverse-Wishart `Σ`, conditioning on the first `p`
/// observations. Coordinates: the `p·m²` entries of `Φ` (lag-major,
/// row-major), then the log-Cholesky coordinates of `Σ`.
#[derive(Clone, Debug)]
pub struct SemiConjugatePosterior {
    m: usize,
    p: usize,
    hyper: SemiConjugateHyper,
    sigma: InverseWishart,
    data: LikelihoodData,
}

impl SemiConjugatePosterior {
    pub fn new(data: &Trajectory, p: usize, hyper: SemiConjugateHyper, sigma: InverseWishart) -> Result<Self> {
        let m = data.dim();
        if hyper.lags.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "semi-conjugate prior has {} lags, model has p = {p}",
                hyper.lags.len()
            )));
        }
        if sigma.dim() != m {
            return Err(Error::DimensionMismatch("inverse Wishart scale does not match m".into()));
        }
        for (s, l) in hyper.lags.iter().enumerate() {
            let finite = [l.diag_mean, l.offdiag_mean].iter().all(|v| v.is_finite());
            if !(l.diag_var > 0.0 && l.offdiag_var > 0.0 && finite) {
                return Err(Error::NonPositiveHyper(format!("semi-conjugate lag {} variances", s + 1)));
            }
        }
        Ok(Self {
            m,
            p,
            hyper,
            sigma,
            data: LikelihoodData::new(data, p)?,
        })
    }

    fn n_coefs(&self) -> usize {
        self.p * self.m * self.m
    }

    fn eval<T: Real>(&self, theta: &[T]) -> Result<T> {
        if theta.len() != LogDensity::dim(self) {
            return Err(Error::DimensionMismatch("θ has the wrong length".into()));
        }
        if theta.iter().any(|v| !v.value().is_finite()) {
            return Err(Error::NonFinite("θ".into()));
        }
        let (m, k) = (self.m, self.n_coefs());
        let mut lp = T::zero();
        for (idx, &x) in theta[..k].iter().enumerate() {
            let lag = &self.hyper.lags[idx / (m * m)];
            lp += if is_diag_index(idx, m) {
                normal_logpdf(x, lag.diag_mean, lag.diag_var)
            } else {
                normal_logpdf(x, lag.offdiag_mean, lag.offdiag_var)
            };
        }
        let phi: Vec<Mat<T>> = theta[..k].chunks(m * m).map(|c| Mat::from_vec(m, m, c.to_vec())).collect();
        let (chol, log_jacobian) = log_cholesky(&theta[k..], m);
        lp += self.sigma.log_pdf_chol(&chol) + log_jacobian;
        lp += conditional_log_likelihood(&self.data, &phi, &chol)?;
        if !lp.value().is_finite() {
            return Err(Error::NonFinite("log posterior".into()));
        }
        Ok(lp)
    }

    /// `(Σ, Φ)` at `θ`; `Φ` may lie outside the stationary region.
    pub fn decode(&self, theta: &[f64]) -> Result<VarModel> {
        let (m, k) = (self.m, self.n_coefs());
        let phi = theta[..k].chunks(m * m).map(|c| Matrix::from_vec(m, m, c.to_vec())).collect();
        let (l, _) = log_cholesky(&theta[k..], m);
        VarModel::unrestricted(SpdMatrix::new(l.matmul_t(&l))?, phi)
    }
}

impl LogDensity for SemiConjugatePosterior {
    fn dim(&self) -> usize {
        self.n_coefs() + self.m * (self.m + 1) / 2
    }

    fn log_density(&self, q: &[f64]) -> Result<f64> {
        self.eval(q)
    }

    fn log_density_and_gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
        ad_value_and_gradient(|x| self.eval(x), q)
    }

    fn coordinate_names(&self) -> Vec<String> {
        let m = self.m;
        let mut names: Vec<String> = (0..self.n_coefs())
            .map(|k| {
                let r = k % (m * m);
                format!("phi{}_{}_{}", k / (m * m) + 1, r / m + 1, r % m + 1)
            })
            .collect();
        names.extend(log_cholesky_names(m));
        names
    }
}

/// Semi-conjugate hyperparameters whose means and variances match, by
/// simulation, those the stationary prior `spec` induces on the entries of
/// `Φ`, pooled over the diagonal and the off-diagonal of each lag.
pub fn match_semi_conjugate(spec: &PriorSpec, m: usize, p: usize, n_draws: usize, seed: u64) -> Result<SemiConjugateHyper> {
    if n_draws < 2 {
        return Err(Error::TooFewDraws("moment matching needs at least 2 prior draws".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // Per lag: (diag values, off-diagonal values).
    let mut pools = vec![(Vec::new(), Vec::new()); p];
    for _ in 0..n_draws {
        let point = sample_prior_with(spec, m, p, &mut rng)?;
        let pacf = point.aseq.matrices().iter().map(a_to_p).collect::<Result<Vec<_>>>()?;
        let (model, _) = reverse_map(&point.sigma, &PacfSequence::new(pacf)?)?;
        for (s, f) in model.phi().iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    if i == j {
                        pools[s].0.push(f[(i, j)]);
                    } else {
                        pools[s].1.push(f[(i, j)]);
                    }
                }
            }
        }
    }
    let moments = |xs: &[f64]| -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
    };
    let lags = pools
        .iter()
        .map(|(d, o)| {
            let (diag_mean, diag_var) = moments(d);
            // With m = 1 there are no off-diagonal entries; the values are unused.
            let (offdiag_mean, offdiag_var) = if o.is_empty() { (0.0, diag_var) } else { moments(o) };
            SemiConjugateLag {
                diag_mean,
                diag_var,
                offdiag_mean,
                offdiag_var,
            }
        })
        .collect();
    Ok(SemiConjugateHyper { lags })
}
