//! Log densities written against [`Real`] so they can be differentiated, and
//! the inverse Wishart sampler.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{chol_inverse, chol_log_det, cholesky, inverse, Mat, Matrix, SpdMatrix};
use crate::scalar::Real;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log N(x; mean, 1/precision)` summed over `xs`, sharing one precision.
pub(crate) fn normal_sum<T: Real>(xs: impl Iterator<Item = T>, mean: T, precision: T) -> T {
    let mut n = 0usize;
    let mut ss = T::zero();
    for x in xs {
        let d = x - mean;
        ss += d * d;
        n += 1;
    }
    let nf = n as f64;
    precision.ln() * (0.5 * nf) - ss * precision * 0.5 - 0.5 * nf * LN_2PI
}

/// `log N(x; mean, var)` with constant mean and variance.
pub(crate) fn normal_logpdf<T: Real>(x: T, mean: f64, var: f64) -> T {
    let d = x - mean;
    -(d * d) / (2.0 * var) - 0.5 * (LN_2PI + var.ln())
}

/// `log Gamma(x; shape, rate)`.
pub(crate) fn gamma_logpdf<T: Real>(x: T, shape: f64, rate: f64) -> T {
    x.ln() * (shape - 1.0) - x * rate + (shape * rate.ln() - ln_gamma(shape))
}

/// `log InvGamma(x; shape, scale)`.
pub(crate) fn inv_gamma_logpdf<T: Real>(x: T, shape: f64, scale: f64) -> T {
    -(x.ln() * (shape + 1.0)) - T::one() / x * scale + (shape * scale.ln() - ln_gamma(shape))
}

/// `log Γ_m(a)`.
pub fn ln_multigamma(m: usize, a: f64) -> f64 {
    let mf = m as f64;
    mf * (mf - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (1..=m).map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0)).sum::<f64>()
}

/// Inverse Wishart `IW(ν, Ψ)` with density ∝ `|Σ|^{-(ν+m+1)/2} exp(−½ tr(ΨΣ⁻¹))`.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseWishart {
    df: f64,
    scale: SpdMatrix,
    log_norm: f64,
    scale_inv_chol: Matrix,
}

impl InverseWishart {
    pub fn new(df: f64, scale: SpdMatrix) -> Result<Self> {
        let m = scale.dim();
        if !(df > m as f64 - 1.0) || !df.is_finite() {
            return Err(Error::NonPositiveHyper(format!(
                "inverse Wishart degrees of freedom {df} must exceed m - 1 = {}",
                m - 1
            )));
        }
        let mf = m as f64;
        let log_det = chol_log_det(&cholesky(scale.as_matrix())?);
        let log_norm = 0.5 * df * log_det - 0.5 * df * mf * std::f64::consts::LN_2 - ln_multigamma(m, 0.5 * df);
        let scale_inv_chol = cholesky(&inverse(scale.as_matrix())?.symmetrize())?;
        Ok(Self {
            df,
            scale,
            log_norm,
            scale_inv_chol,
        })
    }

    /// `IW(m + 4, I_m)`.
    pub fn default_for(m: usize) -> Self {
        Self::new(m as f64 + 4.0, SpdMatrix::identity(m)).expect("valid default")
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn scale(&self) -> &SpdMatrix {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }

    /// Log density given the lower Cholesky factor of `Σ`.
    pub fn log_pdf_chol<T: Real>(&self, l: &Mat<T>) -> T {
        let m = self.dim() as f64;
        let sigma_inv = chol_inverse(l);
        let psi = self.scale.as_matrix();
        let mut tr = T::zero();
        for i in 0..psi.rows() {
            for j in 0..psi.cols() {
                tr += sigma_inv[(j, i)] * psi[(i, j)];
            }
        }
        chol_log_det(l) * (-0.5 * (self.df + m + 1.0)) - tr * 0.5 + self.log_norm
    }

    pub fn log_pdf<T: Real>(&self, sigma: &Mat<T>) -> Result<T> {
        Ok(self.log_pdf_chol(&cholesky(sigma)?))
    }

    /// Bartlett draw: `Σ⁻¹ = L B Bᵀ Lᵀ ~ W(ν, Ψ⁻¹)` with `L = chol(Ψ⁻¹)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpdMatrix {
        let m = self.dim();
        loop {
            let mut b = Matrix::zeros(m, m);
            for i in 0..m {
                let chi = ChiSquared::new(self.df - i as f64).expect("df > m - 1");
                b[(i, i)] = chi.sample(rng).sqrt();
                for j in 0..i {
                    b[(i, j)] = StandardNormal.sample(rng);
                }
            }
            let lb = self.scale_inv_chol.matmul(&b);
            let precision = lb.matmul_t(&lb);
            if let Ok(chol) = cholesky(&precision) {
                if let Ok(s) = SpdMatrix::new(chol_inverse(&chol).symmetrize()) {
                    return s;
                }
            }
        }
    }
}
