use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{Trajectory, VarModel};
use crate::prior::{log_prior_native, sample_prior_with, ParameterPoint, PriorSpec};
use crate::reparam::{a_to_p, ak_from_rml_generic, reverse_map_generic, PacfSequence};
use crate::scalar::{Dual, Real};

use super::layout::{CoefficientCoords, ThetaLayout, UnconstrainedVector};
use super::likelihood::{log_likelihood_generic, LikelihoodData};

/// Tangent directions per forward-mode pass.
const AD_WIDTH: usize = 8;

/// A differentiable log density on `ℝᵈ`, as consumed by the sampler.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, q: &[f64]) -> Result<f64>;

    fn log_density_and_gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Centre of the chain's initial distribution (jitter is added by the sampler).
    fn initial_point(&self, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
        let _ = rng;
        Ok(vec![0.0; self.dim()])
    }

    fn coordinate_names(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("x{i}")).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientMode {
    /// Forward-mode dual numbers through the whole pipeline.
    #[default]
    Automatic,
    /// Central finite differences.
    FiniteDifference,
}

/// Per-coordinate step `1e-5·max(1, |θᵢ|)`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> Result<f64>, theta: &[f64]) -> Result<Vec<f64>> {
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let h = 1e-5 * theta[i].abs().max(1.0);
        x[i] = theta[i] + h;
        let up = f(&x)?;
        x[i] = theta[i] - h;
        let down = f(&x)?;
        x[i] = theta[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Value and gradient of `f` by forward-mode passes of [`AD_WIDTH`] tangents.
pub(crate) fn ad_value_and_gradient(
    f: impl Fn(&[Dual<AD_WIDTH>]) -> Result<Dual<AD_WIDTH>>,
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let d = theta.len();
    let mut grad = vec![0.0; d];
    let mut value = f64::NAN;
    for start in (0..d.max(1)).step_by(AD_WIDTH) {
        let x: Vec<Dual<AD_WIDTH>> = theta
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual::variable(v, i.wrapping_sub(start)))
            .collect();
        let y = f(&x)?;
        value = y.re;
        for k in 0..AD_WIDTH.min(d.saturating_sub(start)) {
            grad[start + k] = y.du[k];
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok((value, grad))
}

/// `log π(θ | y)` up to the evidence, in the coordinates of [`ThetaLayout`].
#[derive(Clone, Debug)]
pub struct Posterior {
    spec: PriorSpec,
    layout: ThetaLayout,
    data: Option<LikelihoodData>,
    gradient_mode: GradientMode,
    init_shrink: f64,
}

impl Posterior {
    pub fn new(data: &Trajectory, spec: PriorSpec, p: usize) -> Result<Self> {
        let layout = ThetaLayout::new(&spec, data.dim(), p)?;
        Ok(Self {
            spec,
            layout,
            data: Some(LikelihoodData::new(data, p)?),
            gradient_mode: GradientMode::Automatic,
            init_shrink: 0.1,
        })
    }

    /// The prior alone, in the same coordinates.
    pub fn prior_only(spec: PriorSpec, m: usize, p: usize) -> Result<Self> {
        Ok(Self {
            layout: ThetaLayout::new(&spec, m, p)?,
            spec,
            data: None,
            gradient_mode: GradientMode::Automatic,
            init_shrink: 0.1,
        })
    }

    pub fn with_gradient_mode(mut self, mode: GradientMode) -> Self {
        self.gradient_mode = mode;
        self
    }

    pub fn layout(&self) -> &ThetaLayout {
        &self.layout
    }

    pub fn spec(&self) -> &PriorSpec {
        &self.spec
    }

    fn eval<T: Real>(&self, theta: &[T]) -> Result<T> {
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("θ".into()));
        }
        let u = self.layout.unpack(theta)?;
        if !u.chol.is_finite() || u.hyper.iter().any(|h| !h.is_finite()) {
            return Err(Error::NonFinite("transformed θ".into()));
        }
        let terms = log_prior_native(&self.spec, &u.chol, &u.coefs, &u.hyper)?;
        let mut total = terms.total() + u.log_jacobian;
        if let Some(data) = &self.data {
            let sigma = u.chol.matmul_t(&u.chol).symmetrize();
            let pacf = self.pacf(&sigma, &u.coefs)?;
            let out = reverse_map_generic(&sigma, &pacf)?;
            total += log_likelihood_generic(data, &out.phi, &out.gammas[..self.layout.p()], &u.chol)?;
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("log posterior".into()));
        }
        Ok(total)
    }

    fn pacf<T: Real>(&self, sigma: &Mat<T>, coefs: &[Mat<T>]) -> Result<Vec<Mat<T>>> {
        match self.layout.coefficient_coords() {
            CoefficientCoords::Unconstrained => coefs
                .iter()
                .map(|a| {
                    if !a.is_finite() {
                        return Err(Error::NonFinite("A".into()));
                    }
                    let p = a_to_p(a)?;
                    if !p.is_finite() {
                        return Err(Error::NonFinite("P".into()));
                    }
                    Ok(p)
                })
                .collect(),
            CoefficientCoords::Rml => ak_from_rml_generic(sigma, coefs),
        }
    }

    /// Log posterior, or the failure that makes `θ` a rejection.
    pub fn try_log_density(&self, theta: &[f64]) -> Result<f64> {
        self.eval(theta)
    }

    /// Log posterior with numerical failures mapped to `−∞`.
    pub fn log_posterior(&self, theta: &[f64]) -> f64 {
        self.eval(theta).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(theta)?.1)
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self.gradient_mode {
            GradientMode::Automatic => self.ad_value_and_gradient(theta),
            GradientMode::FiniteDifference => {
                let v = self.eval(theta)?;
                Ok((v, self.fd_gradient(theta)?))
            }
        }
    }

    pub fn ad_value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        ad_value_and_gradient(|x| self.eval(x), theta)
    }

    pub fn fd_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        finite_difference_gradient(|x| self.eval(x), theta)
    }

    /// `log |det ∂(Σ, ϑ)/∂θ|`, the part of the log posterior that is not
    /// invariant under relabelling the series.
    pub fn log_jacobian(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.layout.unpack(theta)?.log_jacobian)
    }

    pub fn point(&self, theta: &[f64]) -> Result<ParameterPoint> {
        self.layout.decode(theta)
    }

    /// `(Σ, Φ)` and the partial autocorrelations at `θ`.
    pub fn transformed(&self, theta: &[f64]) -> Result<TransformedDraw> {
        transformed_draw(&self.layout, theta)
    }
}

/// A draw mapped back to the model's natural parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedDraw {
    pub model: VarModel,
    pub pacf: PacfSequence,
}

pub(crate) fn transformed_draw(layout: &ThetaLayout, theta: &[f64]) -> Result<TransformedDraw> {
    let point = layout.decode(theta)?;
    let pacf = point.aseq.matrices().iter().map(a_to_p).collect::<Result<Vec<_>>>()?;
    let pacf = PacfSequence::new(pacf)?;
    let (model, _) = crate::reparam::reverse_map(&point.sigma, &pacf)?;
    Ok(TransformedDraw { model, pacf })
}

use crate::reparam::MatrixSequence;

impl LogDensity for Posterior {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density(&self, q: &[f64]) -> Result<f64> {
        self.eval(q)
    }

    fn log_density_and_gradient(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.value_and_gradient(q)
    }

    /// A prior draw shrunk toward the origin.
    fn initial_point(&self, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
        let (m, p) = (self.layout.m(), self.layout.p());
        for _ in 0..100 {
            let point = sample_prior_with(&self.spec, m, p, rng)?;
            if let Ok(theta) = self.layout.encode(&point) {
                return Ok(theta.as_slice().iter().map(|v| v * self.init_shrink).collect());
            }
        }
        Err(Error::NonFinite("no encodable prior draw for initialisation".into()))
    }

    fn coordinate_names(&self) -> Vec<String> {
        self.layout.names()
    }
}

/// Log posterior at `θ`, `−∞` where the pipeline fails numerically.
pub fn log_posterior(theta: &UnconstrainedVector, data: &Trajectory, spec: &PriorSpec, p: usize) -> Result<f64> {
    Ok(Posterior::new(data, spec.clone(), p)?.log_posterior(theta.as_slice()))
}

/// Gradient of [`log_posterior`] by forward-mode differentiation.
pub fn gradient(theta: &UnconstrainedVector, data: &Trajectory, spec: &PriorSpec, p: usize) -> Result<Vec<f64>> {
    Posterior::new(data, spec.clone(), p)?.gradient(theta.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::likelihood::log_likelihood_exact;
    use crate::linalg::Matrix;
    use crate::prior::{
        log_prior, ExchangeableHyper, GammaHyper, InverseWishart, NormalGamma, PriorKind, SparseHyper,
        AllOnesCentredLag, DiagonalCentredLag, DiagonalMean,
    };
    use crate::process::simulate;
    use crate::linalg::SpdMatrix;
    use rand::{Rng, SeedableRng};

    fn data_m2(n: usize, seed: u64) -> Trajectory {
        let model = VarModel::new(
            SpdMatrix::new(Matrix::from_rows(&[&[1.0, 0.3], &[0.3, 0.8]])).unwrap(),
            vec![Matrix::from_rows(&[&[0.5, 0.1], &[-0.2, 0.3]])],
        )
        .unwrap();
        simulate(&model, n, seed).unwrap()
    }

    #[test]
    fn composition_at_zero() {
        let data = Trajectory::new(2, vec![0.0; 20]).unwrap();
        let spec = PriorSpec::prior1(2, 1);
        let post = Posterior::new(&data, spec.clone(), 1).unwrap();
        let theta = vec![0.0; post.layout().dim()];
        let point = post.point(&theta).unwrap();
        let model = post.transformed(&theta).unwrap().model;
        let jac = 2.0 * std::f64::consts::LN_2;
        let want = log_prior(&point, &spec).unwrap() + log_likelihood_exact(&model, &data).unwrap() + jac;
        assert!((post.log_posterior(&theta) - want).abs() < 1e-10);
    }

    #[test]
    fn overflow_is_a_rejection() {
        let data = data_m2(20, 1);
        let post = Posterior::new(&data, PriorSpec::prior1(2, 1), 1).unwrap();
        for k in 0..post.layout().dim() {
            let mut theta = vec![0.0; post.layout().dim()];
            theta[k] = 1e308;
            assert_eq!(post.log_posterior(&theta), f64::NEG_INFINITY, "coordinate {k}");
            assert!(post.try_log_density(&theta).is_err());
        }
    }

    #[test]
    fn gaussian_prior_gradient_is_exact() {
        // With m = 1 the fixed diagonal branch leaves a single Gaussian coefficient.
        let spec = PriorSpec::new(
            PriorKind::DiagonalCentred(vec![DiagonalCentredLag {
                diag: DiagonalMean::Fixed {
                    mean: vec![0.3],
                    cov: SpdMatrix::new(Matrix::from_rows(&[&[0.5]])).unwrap(),
                },
                offdiag_precision: GammaHyper { g: 2.0, h: 1.0 },
            }]),
            InverseWishart::default_for(1),
        );
        let post = Posterior::prior_only(spec, 1, 1).unwrap();
        // θ = (a, log L, log ω₂); only a is Gaussian.
        for a in [-1.0, 0.0, 0.7, 2.5] {
            let g = post.gradient(&[a, 0.1, 0.2]).unwrap();
            assert!((g[0] + (a - 0.3) / 0.5).abs() < 1e-12);
        }
    }

    fn specs(m: usize, p: usize) -> Vec<PriorSpec> {
        let gh = GammaHyper { g: 2.0, h: 1.0 };
        let iw = InverseWishart::default_for(m);
        vec![
            PriorSpec::prior1(m, p),
            PriorSpec::new(
                PriorKind::DiagonalCentred(vec![
                    DiagonalCentredLag { diag: DiagonalMean::Hierarchical(NormalGamma::PRIOR1), offdiag_precision: gh };
                    p
                ]),
                iw.clone(),
            ),
            PriorSpec::new(
                PriorKind::AllOnesCentred(vec![
                    AllOnesCentredLag { e: 0.0, f: 0.5, diag_precision: gh, offdiag_precision: None };
                    p
                ]),
                iw.clone(),
            ),
            PriorSpec::new(PriorKind::SparseScaleMixture(SparseHyper::default()), iw.clone()),
            PriorSpec::new(PriorKind::RmlVague, iw),
        ]
    }

    #[test]
    fn ad_gradient_matches_finite_differences() {
        let data = data_m2(40, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for spec in specs(2, 2) {
            let post = Posterior::new(&data, spec, 2).unwrap();
            for _ in 0..3 {
                let theta: Vec<f64> = (0..post.layout().dim()).map(|_| rng.random_range(-0.8..0.8)).collect();
                let (v, ad) = post.ad_value_and_gradient(&theta).unwrap();
                assert!((v - post.log_posterior(&theta)).abs() < 1e-10);
                let fd = post.fd_gradient(&theta).unwrap();
                for (a, f) in ad.iter().zip(&fd) {
                    assert!((a - f).abs() <= 1e-4 * f.abs().max(1.0), "{}: {a} vs {f}", post.spec().kind.name());
                }
            }
        }
    }

    #[test]
    fn permutation_invariance_for_exchangeable_prior() {
        let data = data_m2(30, 4);
        let spec = PriorSpec::new(
            PriorKind::ExchangeableHierarchical(ExchangeableHyper::prior1(1)),
            InverseWishart::default_for(2),
        );
        let post = Posterior::new(&data, spec.clone(), 1).unwrap();
        let swapped = Posterior::new(&data.select_columns(&[1, 0]), spec, 1).unwrap();
        let h = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..5 {
            let theta: Vec<f64> = (0..post.layout().dim()).map(|_| rng.random_range(-0.5..0.5)).collect();
            let pt = post.point(&theta).unwrap();
            let moved = ParameterPoint {
                sigma: SpdMatrix::new(pt.sigma.as_matrix().conjugate_by(&h)).unwrap(),
                aseq: crate::reparam::orthogonal_conjugate(&pt.aseq, &h).unwrap(),
                hyper: pt.hyper.clone(),
            };
            let theta2 = post.layout().encode(&moved).unwrap();
            // The log-Cholesky Jacobian depends on the ordering; the density of (Σ, A, ϑ) does not.
            let a = post.log_posterior(&theta) - post.log_jacobian(&theta).unwrap();
            let b = swapped.log_posterior(theta2.as_slice()) - swapped.log_jacobian(theta2.as_slice()).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn free_functions_agree_with_posterior() {
        let data = data_m2(25, 6);
        let spec = PriorSpec::prior1(2, 1);
        let post = Posterior::new(&data, spec.clone(), 1).unwrap();
        let theta = UnconstrainedVector::new(vec![0.1; post.layout().dim()]).unwrap();
        assert_eq!(log_posterior(&theta, &data, &spec, 1).unwrap(), post.log_posterior(theta.as_slice()));
        assert_eq!(gradient(&theta, &data, &spec, 1).unwrap(), post.gradient(theta.as_slice()).unwrap());
        let fd = post.with_gradient_mode(GradientMode::FiniteDifference);
        let g = fd.gradient(theta.as_slice()).unwrap();
        let ad = gradient(&theta, &data, &spec, 1).unwrap();
        for (a, b) in g.iter().zip(&ad) {
            assert!((a - b).abs() < 1e-4 * b.abs().max(1.0));
        }
    }
}
