use crate::error::{Error, Result};
use crate::linalg::{cholesky, Mat, Matrix, SpdMatrix};
use crate::prior::{HyperCoord, HyperTransform, ParameterPoint, PriorKind, PriorSpec};
use crate::reparam::{a_to_p, ak_from_rml, p_to_a, rml_from_ak, MatrixSequence, PacfSequence, RmlSequence, UnconstrainedSequence};
use crate::scalar::Real;

/// Which matrices the coefficient block of `θ` holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientCoords {
    /// `A₁..Aₚ`.
    Unconstrained,
    /// `C₁..Cₚ` (the RML prior is defined directly on them).
    Rml,
}

/// A finite point in the sampler's coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct UnconstrainedVector(Vec<f64>);

impl UnconstrainedVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("unconstrained vector".into()));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coordinate layout of `θ`:
///
/// 1. `p·m²` coefficient entries, lag-major then row-major (`a{s}_{i}_{j}`,
///    or `c{s}_{i}_{j}` for the RML prior);
/// 2. `m(m+1)/2` log-Cholesky entries of `Σ = LLᵀ`, row-major over the lower
///    triangle: `log_chol_{i}_{i}` holds `log Lᵢᵢ`, `chol_{i}_{j}` holds `Lᵢⱼ`;
/// 3. hyperparameters in [`PriorSpec::hyper_layout`] order, log-transformed
///    where the layout says so (`log_omega1_1`, ...).
///
/// Indices in names are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaLayout {
    m: usize,
    p: usize,
    coefs: CoefficientCoords,
    hyper: Vec<HyperCoord>,
}

pub(crate) struct Unpacked<T: Real> {
    pub chol: Mat<T>,
    pub coefs: Vec<Mat<T>>,
    /// Hyperparameters on their natural scale.
    pub hyper: Vec<T>,
    /// `log |det ∂(Σ, ϑ)/∂θ|`.
    pub log_jacobian: T,
}

/// `θ ↦ L` for `Σ = LLᵀ` (row-major lower triangle, log diagonal) and
/// `log |det ∂vech(Σ)/∂θ| = m·log 2 + Σᵢ (m − i + 2)·log Lᵢᵢ` (i 1-based).
pub(crate) fn log_cholesky<T: Real>(theta: &[T], m: usize) -> (Mat<T>, T) {
    let mut chol = Mat::<T>::zeros(m, m);
    let mut log_jacobian = T::from_f64(m as f64 * std::f64::consts::LN_2);
    let mut k = 0;
    for i in 0..m {
        for j in 0..=i {
            if i == j {
                chol[(i, i)] = theta[k].exp();
                log_jacobian += theta[k] * (m - i + 1) as f64;
            } else {
                chol[(i, j)] = theta[k];
            }
            k += 1;
        }
    }
    (chol, log_jacobian)
}

/// Inverse of [`log_cholesky`] for an SPD matrix.
pub(crate) fn log_cholesky_coords(sigma: &SpdMatrix) -> Result<Vec<f64>> {
    let l = cholesky(sigma.as_matrix())?;
    let m = l.rows();
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in 0..=i {
            out.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
        }
    }
    Ok(out)
}

/// Names of the log-Cholesky coordinates.
pub(crate) fn log_cholesky_names(m: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 1..=m {
        for j in 1..=i {
            out.push(if i == j {
                format!("log_chol_{i}_{j}")
            } else {
                format!("chol_{i}_{j}")
            });
        }
    }
    out
}

impl ThetaLayout {
    pub fn new(spec: &PriorSpec, m: usize, p: usize) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::DimensionMismatch("need m ≥ 1 and p ≥ 1".into()));
        }
        spec.validate(m, p)?;
        if spec.kind.is_baseline() {
            return Err(Error::InvalidConfig(format!(
                "the {} baseline is not sampled in unconstrained coordinates",
                spec.kind.name()
            )));
        }
        let coefs = match spec.kind {
            PriorKind::RmlVague => CoefficientCoords::Rml,
            _ => CoefficientCoords::Unconstrained,
        };
        Ok(Self {
            m,
            p,
            coefs,
            hyper: spec.hyper_layout(m, p),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coefficient_coords(&self) -> CoefficientCoords {
        self.coefs
    }

    pub fn dim(&self) -> usize {
        self.n_coefs() + self.n_chol() + self.hyper.len()
    }

    fn n_coefs(&self) -> usize {
        self.p * self.m * self.m
    }

    fn n_chol(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        let letter = match self.coefs {
            CoefficientCoords::Unconstrained => 'a',
            CoefficientCoords::Rml => 'c',
        };
        for s in 1..=self.p {
            for i in 1..=self.m {
                for j in 1..=self.m {
                    out.push(format!("{letter}{s}_{i}_{j}"));
                }
            }
        }
        out.extend(log_cholesky_names(self.m));
        for c in &self.hyper {
            out.push(match c.transform {
                HyperTransform::Identity => c.name.clone(),
                HyperTransform::Log => format!("log_{}", c.name),
            });
        }
        out
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch(format!("θ has {n} entries, layout needs {}", self.dim())));
        }
        Ok(())
    }

    pub(crate) fn unpack<T: Real>(&self, theta: &[T]) -> Result<Unpacked<T>> {
        self.check_len(theta.len())?;
        let (m, mm) = (self.m, self.m * self.m);
        let coefs = (0..self.p)
            .map(|s| Mat::from_vec(m, m, theta[s * mm..(s + 1) * mm].to_vec()))
            .collect();
        let mut k = self.n_coefs();
        let (chol, mut log_jacobian) = log_cholesky(&theta[k..k + self.n_chol()], m);
        k += self.n_chol();
        let mut hyper = Vec::with_capacity(self.hyper.len());
        for c in &self.hyper {
            let x = theta[k];
            hyper.push(match c.transform {
                HyperTransform::Identity => x,
                HyperTransform::Log => {
                    log_jacobian += x;
                    x.exp()
                }
            });
            k += 1;
        }
        Ok(Unpacked {
            chol,
            coefs,
            hyper,
            log_jacobian,
        })
    }

    /// `θ → (Σ, A's, ϑ)`.
    pub fn decode(&self, theta: &[f64]) -> Result<ParameterPoint> {
        let u = self.unpack(theta)?;
        if !u.chol.is_finite() || u.hyper.iter().any(|h| !h.is_finite()) || u.coefs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("decoded θ".into()));
        }
        let sigma = SpdMatrix::new(u.chol.matmul_t(&u.chol).symmetrize())?;
        let aseq = match self.coefs {
            CoefficientCoords::Unconstrained => u.coefs,
            CoefficientCoords::Rml => {
                let pacf = ak_from_rml(&sigma, &RmlSequence::new(u.coefs)?)?;
                pacf.matrices().iter().map(p_to_a).collect::<Result<Vec<_>>>()?
            }
        };
        Ok(ParameterPoint {
            sigma,
            aseq: UnconstrainedSequence::new(aseq)?,
            hyper: u.hyper,
        })
    }

    /// `(Σ, A's, ϑ) → θ`.
    pub fn encode(&self, point: &ParameterPoint) -> Result<UnconstrainedVector> {
        let m = self.m;
        if point.sigma.dim() != m || point.aseq.order() != self.p || point.hyper.len() != self.hyper.len() {
            return Err(Error::DimensionMismatch("parameter point does not match the layout".into()));
        }
        let mut out = Vec::with_capacity(self.dim());
        match self.coefs {
            CoefficientCoords::Unconstrained => {
                for a in point.aseq.matrices() {
                    out.extend_from_slice(a.as_slice());
                }
            }
            CoefficientCoords::Rml => {
                let pacf: Vec<Matrix> = point.aseq.matrices().iter().map(a_to_p).collect::<Result<_>>()?;
                let c = rml_from_ak(&point.sigma, &PacfSequence::new(pacf)?)?;
                for ci in c.matrices() {
                    out.extend_from_slice(ci.as_slice());
                }
            }
        }
        out.extend(log_cholesky_coords(&point.sigma)?);
        for (c, &v) in self.hyper.iter().zip(&point.hyper) {
            out.push(match c.transform {
                HyperTransform::Identity => v,
                HyperTransform::Log => {
                    if !(v > 0.0) {
                        return Err(Error::NonPositiveHyper(format!("{} = {v}", c.name)));
                    }
                    v.ln()
                }
            });
        }
        UnconstrainedVector::new(out)
    }
}
