use crate::error::{Error, Result};
use crate::linalg::{singular_values, sym_sqrt_inv, Mat};
use crate::scalar::Real;

/// `P` is rejected by [`p_to_a`] once `σ_max(P) ≥ 1 − SV_TOL`.
pub const SV_TOL: f64 = 1e-9;

fn check_square<T: Real>(m: &Mat<T>) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.rows())
}

/// `A = (I − PPᵀ)^{-1/2} P`.
pub fn p_to_a<T: Real>(p: &Mat<T>) -> Result<Mat<T>> {
    let m = check_square(p)?;
    let pv = p.values();
    if !pv.is_finite() {
        return Err(Error::NonFinite("partial autocorrelation matrix".into()));
    }
    let sigma_max = singular_values(&pv)[0];
    if sigma_max >= 1.0 - SV_TOL {
        return Err(Error::NotInVm { sigma_max });
    }
    let k = &Mat::identity(m) - &p.matmul_t(p);
    Ok(sym_sqrt_inv(&k)?.matmul(p))
}

/// `P = (I + AAᵀ)^{-1/2} A`; total on finite input.
pub fn a_to_p<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let m = check_square(a)?;
    let k = &Mat::identity(m) + &a.matmul_t(a);
    if !k.is_finite() {
        return Err(Error::NonFinite("unconstrained matrix".into()));
    }
    Ok(sym_sqrt_inv(&k)?.matmul(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::scalar::Dual;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[&[v]])
    }

    #[test]
    fn scalar_examples() {
        assert!((p_to_a(&scalar(0.6)).unwrap()[(0, 0)] - 0.75).abs() < 1e-14);
        assert!((a_to_p(&scalar(0.75)).unwrap()[(0, 0)] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = Matrix::zeros(3, 3);
        assert_eq!(p_to_a(&z).unwrap().max_abs(), 0.0);
        assert_eq!(a_to_p(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn scaled_all_ones() {
        let p = Matrix::from_fn(2, 2, |_, _| 0.25);
        let a = p_to_a(&p).unwrap();
        let c = 0.25 / (1.0f64 - 4.0 * 0.0625).sqrt();
        assert!(a.max_abs_diff(&Matrix::from_fn(2, 2, |_, _| c)) < 1e-14);
    }

    #[test]
    fn diagonal_inverse() {
        let c = [1.5, -0.3, 4.0];
        let p = a_to_p(&Matrix::from_diag(&c)).unwrap();
        let want: Vec<f64> = c.iter().map(|v| v / (1.0 + v * v).sqrt()).collect();
        assert!(p.max_abs_diff(&Matrix::from_diag(&want)) < 1e-14);
    }

    #[test]
    fn boundary_is_rejected() {
        assert!(matches!(p_to_a(&Matrix::identity(2)), Err(Error::NotInVm { .. })));
        assert!(matches!(p_to_a(&scalar(-1.0)), Err(Error::NotInVm { .. })));
    }

    #[test]
    fn dual_tangent_matches_finite_difference() {
        let a = Matrix::from_rows(&[&[0.4, -1.2], &[0.7, 0.3]]);
        let dir = Matrix::from_rows(&[&[0.2, 0.5], &[-0.1, 0.9]]);
        let ad: Mat<Dual<1>> = Mat::from_fn(2, 2, |i, j| Dual {
            re: a[(i, j)],
            du: [dir[(i, j)]],
        });
        let p = a_to_p(&ad).unwrap();
        let h = 1e-6;
        let plus = a_to_p(&(&a + &dir.scale(h))).unwrap();
        let minus = a_to_p(&(&a - &dir.scale(h))).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let fd = (plus[(i, j)] - minus[(i, j)]) / (2.0 * h);
                assert!((p[(i, j)].du[0] - fd).abs() < 1e-8);
            }
        }
    }
}
