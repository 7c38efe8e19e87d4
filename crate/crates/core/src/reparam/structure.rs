//! Closed-form `P ↔ A` maps for structured matrices.
//!
//! The same variant describes either side: on the P-side its fields are the
//! `r` parameters, on the A-side the matching `c` parameters.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::SV_TOL;

#[derive(Clone, Debug, PartialEq)]
pub enum StructuredForm {
    /// `r·J_m`.
    ScaledAllOnes { m: usize, r: f64 },
    /// `diag(r₁..r_m)`.
    Diagonal(Vec<f64>),
    /// `r·I_m`.
    ScaledIdentity { m: usize, r: f64 },
    Zero { m: usize },
    /// `(r₁ − r₂)·I_m + r₂·J_m`: `r₁` on the diagonal, `r₂` off it.
    TwoParamExchangeable { m: usize, r1: f64, r2: f64 },
}

impl StructuredForm {
    pub fn dim(&self) -> usize {
        match self {
            Self::ScaledAllOnes { m, .. }
            | Self::ScaledIdentity { m, .. }
            | Self::Zero { m }
            | Self::TwoParamExchangeable { m, .. } => *m,
            Self::Diagonal(r) => r.len(),
        }
    }

    pub fn assemble(&self) -> Matrix {
        let m = self.dim();
        match self {
            Self::ScaledAllOnes { r, .. } => Matrix::from_fn(m, m, |_, _| *r),
            Self::Diagonal(r) => Matrix::from_diag(r),
            Self::ScaledIdentity { r, .. } => Matrix::identity(m).scale(*r),
            Self::Zero { .. } => Matrix::zeros(m, m),
            Self::TwoParamExchangeable { r1, r2, .. } => {
                Matrix::from_fn(m, m, |i, j| if i == j { *r1 } else { *r2 })
            }
        }
    }

    /// Largest singular value of the assembled P-side matrix.
    fn sigma_max(&self) -> f64 {
        let m = self.dim() as f64;
        match self {
            Self::ScaledAllOnes { r, .. } => m * r.abs(),
            Self::Diagonal(r) => r.iter().fold(0.0, |a, v| a.max(v.abs())),
            Self::ScaledIdentity { r, .. } => r.abs(),
            Self::Zero { .. } => 0.0,
            Self::TwoParamExchangeable { r1, r2, .. } => (r1 - r2).abs().max((r1 + (m - 1.0) * r2).abs()),
        }
    }
}

fn out_of_bounds(form: &StructuredForm, sigma_max: f64) -> Error {
    Error::OutOfBounds(format!(
        "{form:?}: largest singular value {sigma_max} is not below 1"
    ))
}

/// Rotated coordinates `(r₁′, r₂′)` of a two-parameter exchangeable matrix;
/// the singular-value bounds become `|r₁′| < √2/2` and `|r₂′| < √2/m`.
pub fn exchangeable_rotated(m: usize, r1: f64, r2: f64) -> (f64, f64) {
    let s2 = std::f64::consts::SQRT_2;
    let mf = m as f64;
    (s2 * (r1 - r2) / 2.0, s2 * (r1 + (mf - 1.0) * r2) / mf)
}

/// `(c₁, c₂)` in closed form from the rotated coordinates.
fn exchangeable_p_to_a(m: usize, r1: f64, r2: f64) -> (f64, f64) {
    let (r1p, r2p) = exchangeable_rotated(m, r1, r2);
    let s2 = std::f64::consts::SQRT_2;
    let mf = m as f64;
    let u = (2.0 - mf * mf * r2p * r2p).sqrt();
    let w = (1.0 - 2.0 * r1p * r1p).sqrt();
    let c = |i: f64| {
        ((s2 * mf * r1p * u) * (2.0 - i) - s2 * r1p * u + mf * r2p * w) / (mf * u * w)
    };
    (c(1.0), c(2.0))
}

/// A-side parameters of a structured P.
pub fn structure_p_to_a(form: &StructuredForm) -> Result<StructuredForm> {
    let sigma_max = form.sigma_max();
    if !sigma_max.is_finite() || sigma_max >= 1.0 - SV_TOL {
        return Err(out_of_bounds(form, sigma_max));
    }
    let f = |r: f64| r / (1.0 - r * r).sqrt();
    Ok(match form {
        StructuredForm::ScaledAllOnes { m, r } => {
            let mr = *m as f64 * r;
            StructuredForm::ScaledAllOnes {
                m: *m,
                r: r / (1.0 - mr * mr).sqrt(),
            }
        }
        StructuredForm::Diagonal(r) => StructuredForm::Diagonal(r.iter().map(|&v| f(v)).collect()),
        StructuredForm::ScaledIdentity { m, r } => StructuredForm::ScaledIdentity { m: *m, r: f(*r) },
        StructuredForm::Zero { m } => StructuredForm::Zero { m: *m },
        StructuredForm::TwoParamExchangeable { m, r1, r2 } => {
            let (c1, c2) = exchangeable_p_to_a(*m, *r1, *r2);
            StructuredForm::TwoParamExchangeable { m: *m, r1: c1, r2: c2 }
        }
    })
}

/// P-side parameters of a structured A; total on finite input.
pub fn structure_a_to_p(form: &StructuredForm) -> StructuredForm {
    let g = |c: f64| c / (1.0 + c * c).sqrt();
    match form {
        StructuredForm::ScaledAllOnes { m, r } => {
            let mc = *m as f64 * r;
            StructuredForm::ScaledAllOnes {
                m: *m,
                r: r / (1.0 + mc * mc).sqrt(),
            }
        }
        StructuredForm::Diagonal(c) => StructuredForm::Diagonal(c.iter().map(|&v| g(v)).collect()),
        StructuredForm::ScaledIdentity { m, r } => StructuredForm::ScaledIdentity { m: *m, r: g(*r) },
        StructuredForm::Zero { m } => StructuredForm::Zero { m: *m },
        StructuredForm::TwoParamExchangeable { m, r1, r2 } => {
            // Eigenvalues c₁ − c₂ (multiplicity m − 1) and c₁ + (m − 1)c₂.
            let mf = *m as f64;
            let ga = g(r1 - r2);
            let gb = g(r1 + (mf - 1.0) * r2);
            let p2 = (gb - ga) / mf;
            StructuredForm::TwoParamExchangeable {
                m: *m,
                r1: ga + p2,
                r2: p2,
            }
        }
    }
}
