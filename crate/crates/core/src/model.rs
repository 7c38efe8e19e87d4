use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Matrix, SpdMatrix, RHO_TOL};

/// A zero-mean VAR(p): innovation variance `sigma` and lag matrices `phi[0..p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarModel {
    sigma: SpdMatrix,
    phi: Vec<Matrix>,
}

impl VarModel {
    /// Builds a stationary model; rejects coefficients outside the stationary region.
    pub fn new(sigma: SpdMatrix, phi: Vec<Matrix>) -> Result<Self> {
        let model = Self::unrestricted(sigma, phi)?;
        let (stationary, radius) = crate::process::is_stationary(&model.phi);
        if !stationary {
            return Err(Error::NotStationary { radius });
        }
        Ok(model)
    }

    /// Builds a model without the stationarity check (baseline posteriors
    /// put mass outside the stationary region).
    pub fn unrestricted(sigma: SpdMatrix, phi: Vec<Matrix>) -> Result<Self> {
        let m = sigma.dim();
        if phi.is_empty() {
            return Err(Error::DimensionMismatch("VAR order must be at least 1".into()));
        }
        for (s, f) in phi.iter().enumerate() {
            if f.rows() != m || f.cols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "phi[{}] is {}x{}, expected {m}x{m}",
                    s + 1,
                    f.rows(),
                    f.cols()
                )));
            }
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("phi[{}]", s + 1)));
            }
        }
        Ok(Self { sigma, phi })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    pub fn phi(&self) -> &[Matrix] {
        &self.phi
    }

    pub fn companion(&self) -> Matrix {
        companion_matrix(&self.phi)
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.companion())
    }

    /// Stationary with the margin required by the forward mapping.
    pub(crate) fn check_strictly_stationary(&self) -> Result<()> {
        let radius = self.spectral_radius();
        if !(radius < 1.0 - RHO_TOL) {
            return Err(Error::NotStationary { radius });
        }
        Ok(())
    }
}

/// Companion matrix: `(φ₁ … φₚ)` on the top block row, identities below the diagonal.
pub fn companion_matrix(phi: &[Matrix]) -> Matrix {
    let p = phi.len();
    let m = phi.first().map_or(0, |f| f.rows());
    let mut c = Matrix::zeros(m * p, m * p);
    for (s, f) in phi.iter().enumerate() {
        c.set_block(0, s * m, f);
    }
    for s in 1..p {
        for i in 0..m {
            c[(s * m + i, (s - 1) * m + i)] = 1.0;
        }
    }
    c
}

/// `n` equally spaced `m`-variate observations, time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not split into rows of {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory values".into()));
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged trajectory rows".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First `n` observations.
    pub fn head(&self, n: usize) -> Self {
        Self {
            dim: self.dim,
            values: self.values[..n * self.dim].to_vec(),
        }
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let values = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        Self {
            dim: cols.len(),
            values,
        }
    }
}
