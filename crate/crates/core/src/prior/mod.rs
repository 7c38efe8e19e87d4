//! Priors over `{Σ, A₁..Aₚ, ϑ}` and their ancestral samplers.
//!
//! Densities include every normalising constant, so values are comparable
//! across calls and across specs. Hyperparameters `ϑ` are stored on their
//! natural scale (precisions and mixing variances positive); the log
//! transform to unconstrained coordinates lives in the inference layer.

mod density;
mod moments;

pub use density::{ln_multigamma, InverseWishart};
pub use moments::{elicit_from_structure, marginal_moments, GroupMoments};

pub(crate) use density::{gamma_logpdf, inv_gamma_logpdf, normal_logpdf, normal_sum, LN_2PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{chol_log_det, cholesky, inverse, Mat, Matrix, SpdMatrix};
use crate::reparam::{a_to_p, ak_from_rml_generic, p_to_a, rml_from_pacf, UnconstrainedSequence};
use crate::scalar::Real;

/// `μ ~ N(e, f²)` and `ω ~ Gam(g, h)` (shape `g`, rate `h`) for one
/// group of entries with `a | μ, ω ~ N(μ, 1/ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalGamma {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl NormalGamma {
    /// Marginal variance 1, correlation 0.7.
    pub const PRIOR1: Self = Self {
        e: 0.0,
        f: 0.836_660_026_534_075_6,
        g: 2.1,
        h: 0.33,
    };
    /// Marginal variance 10, correlation 0.7.
    pub const PRIOR2: Self = Self {
        e: 0.0,
        f: 2.645_751_311_064_590_6,
        g: 21.0,
        h: 60.0,
    };

    fn validate(&self, what: &str) -> Result<()> {
        if !self.e.is_finite() {
            return Err(Error::InvalidConfig(format!("{what}: mean must be finite")));
        }
        positive(self.f, &format!("{what}: f"))?;
        positive(self.g, &format!("{what}: g"))?;
        positive(self.h, &format!("{what}: h"))
    }
}

/// `ω ~ Gam(g, h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaHyper {
    pub g: f64,
    pub h: f64,
}

impl GammaHyper {
    fn validate(&self, what: &str) -> Result<()> {
        positive(self.g, &format!("{what}: g"))?;
        positive(self.h, &format!("{what}: h"))
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveHyper(format!("{what} = {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExchangeableLag {
    pub diag: NormalGamma,
    pub offdiag: NormalGamma,
}

/// Hierarchical exchangeable prior, one entry per lag.
#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeableHyper {
    pub lags: Vec<ExchangeableLag>,
}

impl ExchangeableHyper {
    pub fn uniform(p: usize, diag: NormalGamma, offdiag: NormalGamma) -> Self {
        Self {
            lags: vec![ExchangeableLag { diag, offdiag }; p],
        }
    }

    pub fn prior1(p: usize) -> Self {
        Self::uniform(p, NormalGamma::PRIOR1, NormalGamma::PRIOR1)
    }

    pub fn prior2(p: usize) -> Self {
        Self::uniform(p, NormalGamma::PRIOR2, NormalGamma::PRIOR2)
    }
}

/// Prior on the diagonal of `A_s` in the diagonal-centred prior.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagonalMean {
    /// Shared `μ_{s1}, ω_{s1}` as in the exchangeable prior.
    Hierarchical(NormalGamma),
    /// `(a_{s,11} … a_{s,mm})ᵀ ~ N_m(mean, cov)` with fixed hyperparameters.
    Fixed { mean: Vec<f64>, cov: SpdMatrix },
}

/// Diagonal-centred lag: off-diagonals `N(0, 1/ω_{s2})`, so `μ_{s2} ≡ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalCentredLag {
    pub diag: DiagonalMean,
    pub offdiag_precision: GammaHyper,
}

/// All-ones-centred lag: every entry shares `μ_s ~ N(e, f²)`. With
/// `offdiag_precision = None` a single precision is shared as well.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllOnesCentredLag {
    pub e: f64,
    pub f: f64,
    pub diag_precision: GammaHyper,
    pub offdiag_precision: Option<GammaHyper>,
}

/// Zero-mean scale mixture: `a | ψ ~ N(0, ψ)` with `ψ ~ InvGamma(ν/2, ν/2)`,
/// i.e. Student-t marginals; separate `ν` for diagonal and off-diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseHyper {
    pub nu_diag: f64,
    pub nu_offdiag: f64,
}

impl Default for SparseHyper {
    fn default() -> Self {
        Self {
            nu_diag: 3.0,
            nu_offdiag: 3.0,
        }
    }
}

/// Litterman-style shrinkage for the Minnesota baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinnesotaHyper {
    /// Overall tightness.
    pub lambda1: f64,
    /// Relative tightness of cross-variable lags.
    pub lambda2: f64,
    /// Prior mean of the first own lag; other coefficients have prior mean 0.
    pub own_lag_mean: f64,
}

impl Default for MinnesotaHyper {
    fn default() -> Self {
        Self {
            lambda1: 0.2,
            lambda2: 0.5,
            own_lag_mean: 0.0,
        }
    }
}

/// Independent normal prior on the entries of `φ_s` for the semi-conjugate baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemiConjugateLag {
    pub diag_mean: f64,
    pub diag_var: f64,
    pub offdiag_mean: f64,
    pub offdiag_var: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemiConjugateHyper {
    pub lags: Vec<SemiConjugateLag>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PriorKind {
    ExchangeableHierarchical(ExchangeableHyper),
    DiagonalCentred(Vec<DiagonalCentredLag>),
    AllOnesCentred(Vec<AllOnesCentredLag>),
    SparseScaleMixture(SparseHyper),
    /// `C_s` entries iid `N(0, 1)`.
    RmlVague,
    MinnesotaBaseline(MinnesotaHyper),
    SemiConjugateBaseline(SemiConjugateHyper),
}

impl PriorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ExchangeableHierarchical(_) => "exchangeable",
            Self::DiagonalCentred(_) => "diagonal-centred",
            Self::AllOnesCentred(_) => "all-ones-centred",
            Self::SparseScaleMixture(_) => "sparse",
            Self::RmlVague => "rml-vague",
            Self::MinnesotaBaseline(_) => "minnesota",
            Self::SemiConjugateBaseline(_) => "semi-conjugate",
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self, Self::MinnesotaBaseline(_) | Self::SemiConjugateBaseline(_))
    }

    fn lag_count(&self) -> Option<usize> {
        match self {
            Self::ExchangeableHierarchical(h) => Some(h.lags.len()),
            Self::DiagonalCentred(l) => Some(l.len()),
            Self::AllOnesCentred(l) => Some(l.len()),
            Self::SemiConjugateBaseline(h) => Some(h.lags.len()),
            _ => None,
        }
    }
}

/// How a hyperparameter maps to an unconstrained coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HyperTransform {
    Identity,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperCoord {
    pub name: String,
    pub transform: HyperTransform,
}

impl HyperCoord {
    fn identity(name: String) -> Self {
        Self {
            name,
            transform: HyperTransform::Identity,
        }
    }

    fn log(name: String) -> Self {
        Self {
            name,
            transform: HyperTransform::Log,
        }
    }
}

/// A prior over the coefficients together with `Σ ~ IW(ν, Ψ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub sigma: InverseWishart,
}

impl PriorSpec {
    pub fn new(kind: PriorKind, sigma: InverseWishart) -> Self {
        Self { kind, sigma }
    }

    /// Exchangeable Prior 1 with `Σ ~ IW(m + 4, I)`.
    pub fn prior1(m: usize, p: usize) -> Self {
        Self::new(
            PriorKind::ExchangeableHierarchical(ExchangeableHyper::prior1(p)),
            InverseWishart::default_for(m),
        )
    }

    /// Exchangeable Prior 2 with `Σ ~ IW(m + 4, I)`.
    pub fn prior2(m: usize, p: usize) -> Self {
        Self::new(
            PriorKind::ExchangeableHierarchical(ExchangeableHyper::prior2(p)),
            InverseWishart::default_for(m),
        )
    }

    pub fn validate(&self, m: usize, p: usize) -> Result<()> {
        if self.sigma.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "inverse Wishart scale is {0}x{0}, data has m = {m}",
                self.sigma.dim()
            )));
        }
        if let Some(lags) = self.kind.lag_count() {
            if lags != p {
                return Err(Error::DimensionMismatch(format!(
                    "prior specifies {lags} lags, model order is {p}"
                )));
            }
        }
        match &self.kind {
            PriorKind::ExchangeableHierarchical(h) => {
                for (s, lag) in h.lags.iter().enumerate() {
                    lag.diag.validate(&format!("lag {} diagonal", s + 1))?;
                    lag.offdiag.validate(&format!("lag {} off-diagonal", s + 1))?;
                }
            }
            PriorKind::DiagonalCentred(lags) => {
                for (s, lag) in lags.iter().enumerate() {
                    match &lag.diag {
                        DiagonalMean::Hierarchical(ng) => ng.validate(&format!("lag {} diagonal", s + 1))?,
                        DiagonalMean::Fixed { mean, cov } => {
                            if mean.len() != m || cov.dim() != m {
                                return Err(Error::DimensionMismatch(format!(
                                    "lag {} diagonal mean/covariance must have dimension {m}",
                                    s + 1
                                )));
                            }
                        }
                    }
                    lag.offdiag_precision.validate(&format!("lag {} off-diagonal precision", s + 1))?;
                }
            }
            PriorKind::AllOnesCentred(lags) => {
                for (s, lag) in lags.iter().enumerate() {
                    positive(lag.f, &format!("lag {} mean sd", s + 1))?;
                    lag.diag_precision.validate(&format!("lag {} diagonal precision", s + 1))?;
                    if let Some(o) = &lag.offdiag_precision {
                        o.validate(&format!("lag {} off-diagonal precision", s + 1))?;
                    }
                }
            }
            PriorKind::SparseScaleMixture(h) => {
                positive(h.nu_diag, "sparse nu_diag")?;
                positive(h.nu_offdiag, "sparse nu_offdiag")?;
            }
            PriorKind::RmlVague => {}
            PriorKind::MinnesotaBaseline(h) => {
                positive(h.lambda1, "minnesota lambda1")?;
                positive(h.lambda2, "minnesota lambda2")?;
                if !h.own_lag_mean.is_finite() {
                    return Err(Error::InvalidConfig("minnesota own_lag_mean must be finite".into()));
                }
            }
            PriorKind::SemiConjugateBaseline(h) => {
                for (s, lag) in h.lags.iter().enumerate() {
                    positive(lag.diag_var, &format!("lag {} diagonal variance", s + 1))?;
                    positive(lag.offdiag_var, &format!("lag {} off-diagonal variance", s + 1))?;
                }
            }
        }
        Ok(())
    }

    /// Names and transforms of the latent hyperparameters `ϑ`, in storage order.
    pub fn hyper_layout(&self, m: usize, p: usize) -> Vec<HyperCoord> {
        let mut out = Vec::new();
        match &self.kind {
            PriorKind::ExchangeableHierarchical(_) => {
                for s in 1..=p {
                    out.push(HyperCoord::identity(format!("mu1_{s}")));
                    out.push(HyperCoord::identity(format!("mu2_{s}")));
                    out.push(HyperCoord::log(format!("omega1_{s}")));
                    out.push(HyperCoord::log(format!("omega2_{s}")));
                }
            }
            PriorKind::DiagonalCentred(lags) => {
                for (s, lag) in (1..=p).zip(lags) {
                    if let DiagonalMean::Hierarchical(_) = lag.diag {
                        out.push(HyperCoord::identity(format!("mu1_{s}")));
                        out.push(HyperCoord::log(format!("omega1_{s}")));
                    }
                    out.push(HyperCoord::log(format!("omega2_{s}")));
                }
            }
            PriorKind::AllOnesCentred(lags) => {
                for (s, lag) in (1..=p).zip(lags) {
                    out.push(HyperCoord::identity(format!("mu_{s}")));
                    if lag.offdiag_precision.is_some() {
                        out.push(HyperCoord::log(format!("omega1_{s}")));
                        out.push(HyperCoord::log(format!("omega2_{s}")));
                    } else {
                        out.push(HyperCoord::log(format!("omega_{s}")));
                    }
                }
            }
            PriorKind::SparseScaleMixture(_) => {
                for s in 1..=p {
                    for i in 1..=m {
                        for j in 1..=m {
                            out.push(HyperCoord::log(format!("psi{s}_{i}_{j}")));
                        }
                    }
                }
            }
            PriorKind::RmlVague | PriorKind::MinnesotaBaseline(_) | PriorKind::SemiConjugateBaseline(_) => {}
        }
        out
    }
}

/// A point `(Σ, A₁..Aₚ, ϑ)` in the prior's parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPoint {
    pub sigma: SpdMatrix,
    pub aseq: UnconstrainedSequence,
    /// Latent hyperparameters on their natural scale, ordered as in
    /// [`PriorSpec::hyper_layout`].
    pub hyper: Vec<f64>,
}

/// Prior log density split by factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorTerms<T> {
    /// `Σ_s log π(A_s | ϑ)` (or of `C_s` for the RML prior).
    pub coefficients: T,
    /// `log π(ϑ)`.
    pub hyper: T,
    /// `log π(Σ)`.
    pub sigma: T,
}

impl<T: Real> PriorTerms<T> {
    pub fn total(&self) -> T {
        self.coefficients + self.hyper + self.sigma
    }
}

fn split_entries<T: Real>(a: &Mat<T>) -> (Vec<T>, Vec<T>) {
    let m = a.rows();
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        for j in 0..m {
            if i == j {
                diag.push(a[(i, j)]);
            } else {
                off.push(a[(i, j)]);
            }
        }
    }
    (diag, off)
}

fn normal_gamma_hyper<T: Real>(mu: T, omega: T, ng: &NormalGamma) -> T {
    normal_logpdf(mu, ng.e, ng.f * ng.f) + gamma_logpdf(omega, ng.g, ng.h)
}

fn fixed_mvn_logpdf<T: Real>(x: &[T], mean: &[f64], cov: &SpdMatrix) -> Result<T> {
    let m = x.len();
    let l = cholesky(cov.as_matrix())?;
    let prec = inverse(cov.as_matrix())?;
    let d: Vec<T> = x.iter().zip(mean).map(|(&xi, &mi)| xi - mi).collect();
    let mut q = T::zero();
    for i in 0..m {
        for j in 0..m {
            q += d[i] * d[j] * prec[(i, j)];
        }
    }
    Ok(q * -0.5 - 0.5 * (m as f64 * LN_2PI + chol_log_det(&l)))
}

/// Coefficient and hyperparameter terms in the spec's native coordinates
/// (`A_s`, or `C_s` for the RML prior), with `Σ` given by its Cholesky factor.
pub(crate) fn log_prior_native<T: Real>(
    spec: &PriorSpec,
    sigma_chol: &Mat<T>,
    coefs: &[Mat<T>],
    hyper: &[T],
) -> Result<PriorTerms<T>> {
    let mut coef = T::zero();
    let mut hyp = T::zero();
    let mut k = 0;
    let mut take = |n: usize| {
        let slice = &hyper[k..k + n];
        k += n;
        slice
    };
    match &spec.kind {
        PriorKind::ExchangeableHierarchical(h) => {
            for (a, lag) in coefs.iter().zip(&h.lags) {
                let v = take(4);
                let (diag, off) = split_entries(a);
                coef += normal_sum(diag.into_iter(), v[0], v[2]);
                coef += normal_sum(off.into_iter(), v[1], v[3]);
                hyp += normal_gamma_hyper(v[0], v[2], &lag.diag);
                hyp += normal_gamma_hyper(v[1], v[3], &lag.offdiag);
            }
        }
        PriorKind::DiagonalCentred(lags) => {
            for (a, lag) in coefs.iter().zip(lags) {
                let (diag, off) = split_entries(a);
                match &lag.diag {
                    DiagonalMean::Hierarchical(ng) => {
                        let v = take(2);
                        coef += normal_sum(diag.into_iter(), v[0], v[1]);
                        hyp += normal_gamma_hyper(v[0], v[1], ng);
                    }
                    DiagonalMean::Fixed { mean, cov } => {
                        coef += fixed_mvn_logpdf(&diag, mean, cov)?;
                    }
                }
                let w = take(1)[0];
                coef += normal_sum(off.into_iter(), T::zero(), w);
                hyp += gamma_logpdf(w, lag.offdiag_precision.g, lag.offdiag_precision.h);
            }
        }
        PriorKind::AllOnesCentred(lags) => {
            for (a, lag) in coefs.iter().zip(lags) {
                let (diag, off) = split_entries(a);
                let mu = take(1)[0];
                hyp += normal_logpdf(mu, lag.e, lag.f * lag.f);
                let g1 = lag.diag_precision;
                match lag.offdiag_precision {
                    Some(g2) => {
                        let v = take(2);
                        coef += normal_sum(diag.into_iter(), mu, v[0]);
                        coef += normal_sum(off.into_iter(), mu, v[1]);
                        hyp += gamma_logpdf(v[0], g1.g, g1.h) + gamma_logpdf(v[1], g2.g, g2.h);
                    }
                    None => {
                        let w = take(1)[0];
                        coef += normal_sum(diag.into_iter().chain(off), mu, w);
                        hyp += gamma_logpdf(w, g1.g, g1.h);
                    }
                }
            }
        }
        PriorKind::SparseScaleMixture(h) => {
            for a in coefs {
                let m = a.rows();
                let psi = take(m * m);
                for i in 0..m {
                    for j in 0..m {
                        let v = psi[i * m + j];
                        let x = a[(i, j)];
                        coef += -(x * x) / (v * 2.0) - (v.ln() + LN_2PI) * 0.5;
                        let nu = if i == j { h.nu_diag } else { h.nu_offdiag };
                        hyp += inv_gamma_logpdf(v, 0.5 * nu, 0.5 * nu);
                    }
                }
            }
        }
        PriorKind::RmlVague => {
            for c in coefs {
                coef += normal_sum(c.as_slice().iter().copied(), T::zero(), T::one());
            }
        }
        PriorKind::MinnesotaBaseline(_) | PriorKind::SemiConjugateBaseline(_) => {
            return Err(Error::InvalidConfig(format!(
                "the {} baseline prior is defined over Φ, not the unconstrained coordinates",
                spec.kind.name()
            )));
        }
    }
    Ok(PriorTerms {
        coefficients: coef,
        hyper: hyp,
        sigma: spec.sigma.log_pdf_chol(sigma_chol),
    })
}

fn check_point(point: &ParameterPoint, spec: &PriorSpec) -> Result<(usize, usize)> {
    let m = point.sigma.dim();
    let p = point.aseq.matrices().len();
    if point.aseq.matrices()[0].rows() != m {
        return Err(Error::DimensionMismatch("Σ and A's have different dimensions".into()));
    }
    spec.validate(m, p)?;
    let want = spec.hyper_layout(m, p).len();
    if point.hyper.len() != want {
        return Err(Error::DimensionMismatch(format!(
            "{} prior needs {want} hyperparameters, got {}",
            spec.kind.name(),
            point.hyper.len()
        )));
    }
    for (c, &v) in spec.hyper_layout(m, p).iter().zip(&point.hyper) {
        if c.transform == HyperTransform::Log && !(v > 0.0) {
            return Err(Error::NonPositiveHyper(format!("{} = {v}", c.name)));
        }
    }
    Ok((m, p))
}

use crate::reparam::MatrixSequence;

/// `C₁..Cₚ` as a function of `A₁..Aₚ` at fixed `Σ`.
fn c_from_a(sigma: &Matrix, aseq: &[Matrix]) -> Result<Vec<Matrix>> {
    let pacf = aseq.iter().map(a_to_p).collect::<Result<Vec<_>>>()?;
    rml_from_pacf(sigma, &pacf)
}

/// `log |det ∂vec(C)/∂vec(A)|` at fixed `Σ` by central differences.
fn rml_log_jacobian(sigma: &Matrix, aseq: &[Matrix]) -> Result<f64> {
    let m = sigma.rows();
    let d = aseq.len() * m * m;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        let (s, idx) = (k / (m * m), k % (m * m));
        let x = aseq[s].as_slice()[idx];
        let h = 1e-6 * x.abs().max(1.0);
        let mut plus = aseq.to_vec();
        plus[s].as_mut_slice()[idx] = x + h;
        let mut minus = aseq.to_vec();
        minus[s].as_mut_slice()[idx] = x - h;
        let cp: Vec<f64> = c_from_a(sigma, &plus)?.into_iter().flat_map(Mat::into_vec).collect();
        let cm: Vec<f64> = c_from_a(sigma, &minus)?.into_iter().flat_map(Mat::into_vec).collect();
        for (r, (a, b)) in cp.iter().zip(&cm).enumerate() {
            jac[(r, k)] = (a - b) / (2.0 * h);
        }
    }
    let lu = jac.lu();
    let u = lu.u();
    Ok((0..d).map(|i| u[(i, i)].abs().ln()).sum())
}

/// Prior log density split by factor, in `(Σ, A, ϑ)` coordinates.
///
/// For the RML prior the coefficient term includes the finite-difference
/// log-Jacobian of `A → C`; it is meant for diagnostics, the sampler works in
/// `C` directly.
pub fn log_prior_terms(point: &ParameterPoint, spec: &PriorSpec) -> Result<PriorTerms<f64>> {
    check_point(point, spec)?;
    let l = cholesky(point.sigma.as_matrix())?;
    let aseq = point.aseq.matrices();
    if let PriorKind::RmlVague = spec.kind {
        let c = c_from_a(point.sigma.as_matrix(), aseq)?;
        let mut terms = log_prior_native(spec, &l, &c, &point.hyper)?;
        terms.coefficients += rml_log_jacobian(point.sigma.as_matrix(), aseq)?;
        return Ok(terms);
    }
    log_prior_native(spec, &l, aseq, &point.hyper)
}

pub fn log_prior(point: &ParameterPoint, spec: &PriorSpec) -> Result<f64> {
    Ok(log_prior_terms(point, spec)?.total())
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("validated sd").sample(rng)
}

fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("validated gamma").sample(rng)
}

/// Draw in native coordinates: `(Σ, coefficients, ϑ)`.
pub(crate) fn sample_native<R: Rng + ?Sized>(
    spec: &PriorSpec,
    m: usize,
    p: usize,
    rng: &mut R,
) -> Result<(SpdMatrix, Vec<Matrix>, Vec<f64>)> {
    spec.validate(m, p)?;
    let mut hyper = Vec::new();
    let mut coefs = Vec::with_capacity(p);
    let fill = |rng: &mut R, diag: &mut dyn FnMut(&mut R) -> f64, off: &mut dyn FnMut(&mut R) -> f64| {
        let mut a = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = if i == j { diag(rng) } else { off(rng) };
            }
        }
        a
    };
    match &spec.kind {
        PriorKind::ExchangeableHierarchical(h) => {
            for lag in &h.lags {
                let mu1 = normal(rng, lag.diag.e, lag.diag.f);
                let mu2 = normal(rng, lag.offdiag.e, lag.offdiag.f);
                let w1 = gamma(rng, lag.diag.g, lag.diag.h);
                let w2 = gamma(rng, lag.offdiag.g, lag.offdiag.h);
                hyper.extend([mu1, mu2, w1, w2]);
                let (s1, s2) = (w1.recip().sqrt(), w2.recip().sqrt());
                coefs.push(fill(rng, &mut |r| normal(r, mu1, s1), &mut |r| normal(r, mu2, s2)));
            }
        }
        PriorKind::DiagonalCentred(lags) => {
            for lag in lags {
                let diag_draw: Vec<f64> = match &lag.diag {
                    DiagonalMean::Hierarchical(ng) => {
                        let mu = normal(rng, ng.e, ng.f);
                        let w = gamma(rng, ng.g, ng.h);
                        hyper.extend([mu, w]);
                        (0..m).map(|_| normal(rng, mu, w.recip().sqrt())).collect()
                    }
                    DiagonalMean::Fixed { mean, cov } => {
                        let l = cholesky(cov.as_matrix())?;
                        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
                        l.mat_vec(&z).iter().zip(mean).map(|(a, b)| a + b).collect()
                    }
                };
                let w2 = gamma(rng, lag.offdiag_precision.g, lag.offdiag_precision.h);
                hyper.push(w2);
                let s2 = w2.recip().sqrt();
                let mut it = diag_draw.into_iter();
                coefs.push(fill(rng, &mut |_| it.next().expect("m entries"), &mut |r| normal(r, 0.0, s2)));
            }
        }
        PriorKind::AllOnesCentred(lags) => {
            for lag in lags {
                let mu = normal(rng, lag.e, lag.f);
                hyper.push(mu);
                let w1 = gamma(rng, lag.diag_precision.g, lag.diag_precision.h);
                let w2 = match lag.offdiag_precision {
                    Some(g2) => {
                        let w2 = gamma(rng, g2.g, g2.h);
                        hyper.extend([w1, w2]);
                        w2
                    }
                    None => {
                        hyper.push(w1);
                        w1
                    }
                };
                let (s1, s2) = (w1.recip().sqrt(), w2.recip().sqrt());
                coefs.push(fill(rng, &mut |r| normal(r, mu, s1), &mut |r| normal(r, mu, s2)));
            }
        }
        PriorKind::SparseScaleMixture(h) => {
            for _ in 0..p {
                let mut a = Matrix::zeros(m, m);
                for i in 0..m {
                    for j in 0..m {
                        let nu = if i == j { h.nu_diag } else { h.nu_offdiag };
                        let psi = gamma(rng, 0.5 * nu, 0.5 * nu).recip();
                        hyper.push(psi);
                        a[(i, j)] = normal(rng, 0.0, psi.sqrt());
                    }
                }
                coefs.push(a);
            }
        }
        PriorKind::RmlVague => {
            for _ in 0..p {
                coefs.push(Matrix::from_fn(m, m, |_, _| StandardNormal.sample(rng)));
            }
        }
        PriorKind::MinnesotaBaseline(_) | PriorKind::SemiConjugateBaseline(_) => {
            return Err(Error::InvalidConfig(format!(
                "the {} baseline has no prior over the unconstrained coordinates",
                spec.kind.name()
            )));
        }
    }
    let sigma = spec.sigma.sample(rng);
    Ok((sigma, coefs, hyper))
}

/// Ancestral draw `ϑ → A's → Σ`; deterministic given `seed`.
pub fn sample_prior(spec: &PriorSpec, m: usize, p: usize, seed: u64) -> Result<ParameterPoint> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_prior_with(spec, m, p, &mut rng)
}

pub(crate) fn sample_prior_with<R: Rng + ?Sized>(
    spec: &PriorSpec,
    m: usize,
    p: usize,
    rng: &mut R,
) -> Result<ParameterPoint> {
    loop {
        let (sigma, coefs, hyper) = sample_native(spec, m, p, rng)?;
        let aseq = match spec.kind {
            PriorKind::RmlVague => {
                // A C-draw can land numerically on the unit-singular-value
                // boundary; such draws have probability zero and are redrawn.
                let pacf = ak_from_rml_generic(sigma.as_matrix(), &coefs)?;
                match pacf.iter().map(p_to_a).collect::<Result<Vec<_>>>() {
                    Ok(a) => a,
                    Err(Error::NotInVm { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            _ => coefs,
        };
        return Ok(ParameterPoint {
            sigma,
            aseq: UnconstrainedSequence::new(aseq)?,
            hyper,
        });
    }
}
