//! Dense linear algebra: the generic matrix type, symmetric matrix square
//! roots (with tangent propagation), Cholesky, the discrete Lyapunov solve and
//! spectral utilities.

mod decomp;
mod mat;

pub use decomp::{
    check_orthogonal, chol_inverse, chol_log_det, cholesky, eigh, forward_subst, inverse, kron,
    singular_values, solve_discrete_lyapunov, spectral_radius, sym_sqrt, sym_sqrt_inv,
    sym_sqrt_pair, vec_rows, SpdMatrix, RHO_TOL, SPD_REL_TOL, SYM_REL_TOL,
};
pub use mat::{Mat, Matrix};
