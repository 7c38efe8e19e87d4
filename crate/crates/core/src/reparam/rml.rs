//! The RML parameterisation: `C_s = P_sᵀ Σ_{s−1}^{1/2} = Q_sᵀ V_s^{1/2}` with
//! `V_s = Σ_{s−1} − Σ_s = C_sᵀ C_s`.

use crate::error::{Error, Result};
use crate::linalg::{sym_sqrt_inv, Mat, Matrix, SpdMatrix};
use crate::scalar::Real;

use super::maps::variance_chain;
use super::{PacfSequence, RmlSequence};

/// `C₁..Cₚ` from `(Σ, P₁..Pₚ)` for any scalar type.
pub fn rml_from_pacf<T: Real>(sigma: &Mat<T>, pacf: &[Mat<T>]) -> Result<Vec<Mat<T>>> {
    let chain = variance_chain(sigma, pacf)?;
    Ok(pacf
        .iter()
        .zip(&chain.roots)
        .map(|(p, root)| p.t_matmul(root))
        .collect())
}

pub fn rml_from_ak(sigma: &SpdMatrix, pacf: &PacfSequence) -> Result<RmlSequence> {
    Ok(RmlSequence::from_unchecked(rml_from_pacf(sigma.as_matrix(), &pacf.0)?))
}

/// `P₁..Pₚ` from `(Σ, C₁..Cₚ)` for any scalar type, via the upward chain
/// `Σ_{s−1} = Σ_s + C_sᵀC_s` and `P_s = Σ_{s−1}^{-1/2} C_sᵀ`.
pub fn ak_from_rml_generic<T: Real>(sigma: &Mat<T>, cmats: &[Mat<T>]) -> Result<Vec<Mat<T>>> {
    let m = sigma.rows();
    let mut sigma_s = sigma.symmetrize();
    let mut pacf = vec![Mat::zeros(m, m); cmats.len()];
    for (s, c) in cmats.iter().enumerate().rev() {
        if c.rows() != m || c.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "C_{} is {}x{}, expected {m}x{m}",
                s + 1,
                c.rows(),
                c.cols()
            )));
        }
        sigma_s = (&sigma_s + &c.t_matmul(c)).symmetrize();
        pacf[s] = sym_sqrt_inv(&sigma_s)?.matmul_t(c);
    }
    Ok(pacf)
}

pub fn ak_from_rml(sigma: &SpdMatrix, cmats: &RmlSequence) -> Result<PacfSequence> {
    Ok(PacfSequence::from_unchecked(ak_from_rml_generic(sigma.as_matrix(), &cmats.0)?))
}

/// Right polar decomposition `C = U·H` with `U` orthogonal and `H = (CᵀC)^{1/2}`.
///
/// `U` is not unique when `C` is rank deficient; the SVD's choice is returned.
pub fn polar_decomposition(c: &Matrix) -> Result<(Matrix, Matrix)> {
    if !c.is_square() {
        return Err(Error::DimensionMismatch("polar decomposition needs a square matrix".into()));
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("polar decomposition input".into()));
    }
    let svd = c.to_nalgebra().svd(true, true);
    let (w, vt) = match (svd.u, svd.v_t) {
        (Some(w), Some(vt)) => (Matrix::from_nalgebra(&w), Matrix::from_nalgebra(&vt)),
        _ => return Err(Error::SingularSystem),
    };
    let u = w.matmul(&vt);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let h = vt.t_matmul(&Matrix::from_diag(&s)).matmul(&vt).symmetrize();
    Ok((u, h))
}
