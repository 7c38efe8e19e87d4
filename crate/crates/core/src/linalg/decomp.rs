use nalgebra::{DMatrix, SymmetricEigen};

use super::mat::{Mat, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues at or below this fraction of the largest one count as non-positive.
pub const SPD_REL_TOL: f64 = 1e-12;
/// Relative asymmetry tolerated by [`SpdMatrix::new`].
pub const SYM_REL_TOL: f64 = 1e-10;
/// Stationarity margin: spectral radii at or above `1 - RHO_TOL` are rejected.
pub const RHO_TOL: f64 = 1e-8;

/// Symmetric positive definite matrix, stored symmetrised.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(Matrix);

impl SpdMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "SPD matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("SPD matrix entries".into()));
        }
        let asym = m.max_abs_diff(&m.transpose());
        if asym > SYM_REL_TOL * m.max_abs().max(1e-300) {
            return Err(Error::NotSpd {
                min_eigenvalue: f64::NAN,
            });
        }
        let sym = m.symmetrize();
        let (lam, _) = eigh(&sym);
        check_positive(&lam)?;
        Ok(Self(sym))
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl AsRef<Matrix> for SpdMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix.
pub fn eigh(m: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(m.to_nalgebra());
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lam = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (lam, vecs)
}

fn check_positive(lam: &[f64]) -> Result<()> {
    let lmax = lam.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmax > 0.0) || !lmin.is_finite() || lmin <= SPD_REL_TOL * lmax {
        return Err(Error::NotSpd {
            min_eigenvalue: lmin,
        });
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Spectral {
    Sqrt,
    InvSqrt,
}

impl Spectral {
    fn apply(self, root: f64) -> f64 {
        match self {
            Spectral::Sqrt => root,
            Spectral::InvSqrt => 1.0 / root,
        }
    }

    /// First divided difference of the function on eigenvalues `rᵢ²`, `rⱼ²`.
    fn divided_difference(self, ri: f64, rj: f64) -> f64 {
        match self {
            Spectral::Sqrt => 1.0 / (ri + rj),
            Spectral::InvSqrt => -1.0 / (ri * rj * (ri + rj)),
        }
    }
}

/// Applies spectral functions to a symmetric positive definite matrix.
///
/// Tangents propagate through the Daleckii–Krein formula
/// `dF = V (D ∘ Vᵀ dX V) Vᵀ`; for the square root this is the eigenbasis
/// solution of the Sylvester equation `X½ dS + dS X½ = dX`.
fn spectral<T: Real>(x: &Mat<T>, funcs: &[Spectral]) -> Result<Vec<Mat<T>>> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix function needs a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let n = x.rows();
    let xs = x.symmetrize();
    let val = xs.values();
    if !val.is_finite() {
        return Err(Error::NonFinite("matrix function input".into()));
    }
    let (lam, v) = eigh(&val);
    check_positive(&lam)?;
    let roots: Vec<f64> = lam.iter().map(|l| l.sqrt()).collect();

    let tangents: Vec<Matrix> = (0..T::TANGENTS)
        .map(|k| Mat::from_fn(n, n, |i, j| xs[(i, j)].tangent(k)))
        .map(|dx| v.t_matmul(&dx).matmul(&v))
        .collect();

    let mut out = Vec::with_capacity(funcs.len());
    let mut buf = vec![0.0; T::TANGENTS];
    for &f in funcs {
        let fv: Vec<f64> = roots.iter().map(|&r| f.apply(r)).collect();
        let value = Mat::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)]).sum::<f64>()
        })
        .symmetrize();
        if T::TANGENTS == 0 {
            out.push(value.lift());
            continue;
        }
        let dd = Mat::from_fn(n, n, |i, j| f.divided_difference(roots[i], roots[j]));
        let dfs: Vec<Matrix> = tangents
            .iter()
            .map(|y| {
                let scaled = Mat::from_fn(n, n, |i, j| y[(i, j)] * dd[(i, j)]);
                v.matmul(&scaled).matmul_t(&v).symmetrize()
            })
            .collect();
        out.push(Mat::from_fn(n, n, |i, j| {
            for (b, df) in buf.iter_mut().zip(&dfs) {
                *b = df[(i, j)];
            }
            T::from_parts(value[(i, j)], &buf)
        }));
    }
    Ok(out)
}

/// Unique SPD square root `R` with `R·R = M`.
pub fn sym_sqrt<T: Real>(m: &Mat<T>) -> Result<Mat<T>> {
    Ok(spectral(m, &[Spectral::Sqrt])?.remove(0))
}

/// `M^{-1/2}`, the inverse of [`sym_sqrt`].
pub fn sym_sqrt_inv<T: Real>(m: &Mat<T>) -> Result<Mat<T>> {
    Ok(spectral(m, &[Spectral::InvSqrt])?.remove(0))
}

/// `(M^{1/2}, M^{-1/2})` from a single eigendecomposition.
pub fn sym_sqrt_pair<T: Real>(m: &Mat<T>) -> Result<(Mat<T>, Mat<T>)> {
    let mut v = spectral(m, &[Spectral::Sqrt, Spectral::InvSqrt])?;
    let inv = v.pop().expect("two outputs");
    let sqrt = v.pop().expect("two outputs");
    Ok((sqrt, inv))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let mut l = Mat::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d.value() > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd {
                min_eigenvalue: d.value(),
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `log det A` from its Cholesky factor.
pub fn chol_log_det<T: Real>(l: &Mat<T>) -> T {
    l.diag().into_iter().fold(T::zero(), |acc, d| acc + d.ln()) * 2.0
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_subst<T: Real>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// `A⁻¹` from the Cholesky factor of `A`.
pub fn chol_inverse<T: Real>(l: &Mat<T>) -> Mat<T> {
    let n = l.rows();
    // Columns of L⁻¹, then A⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = Mat::<T>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = forward_subst(l, &e);
        for (i, c) in col.into_iter().enumerate() {
            linv[(i, j)] = c;
        }
    }
    linv.t_matmul(&linv)
}

/// General inverse of a square `f64` matrix.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    m.to_nalgebra()
        .try_inverse()
        .map(|inv| Matrix::from_nalgebra(&inv))
        .ok_or(Error::SingularSystem)
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest eigenvalue modulus of a square matrix (NaN if the Schur iteration fails).
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.rows() == 1 {
        return m[(0, 0)].abs();
    }
    if !m.is_finite() {
        return f64::NAN;
    }
    match nalgebra::Schur::try_new(m.to_nalgebra(), f64::EPSILON, 100_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        None => f64::NAN,
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    Matrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Row-major vectorisation; with this convention `vec(F X Fᵀ) = (F ⊗ F) vec(X)`.
pub fn vec_rows(m: &Matrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Solves `X = F X Fᵀ + Q` through the dense system `(I − F⊗F)·vec(X) = vec(Q)`.
pub fn solve_discrete_lyapunov(f: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = f.rows();
    if !f.is_square() || q.rows() != n || q.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "lyapunov: F is {}x{}, Q is {}x{}",
            f.rows(),
            f.cols(),
            q.rows(),
            q.cols()
        )));
    }
    let radius = spectral_radius(f);
    if !(radius < 1.0 - RHO_TOL) {
        return Err(Error::NotStationary { radius });
    }
    let k = kron(f, f);
    let system = DMatrix::from_fn(n * n, n * n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - k[(i, j)]
    });
    let rhs = nalgebra::DVector::from_vec(vec_rows(q));
    let lu = system.clone().lu();
    let mut sol = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    // One step of iterative refinement.
    let resid = &rhs - &system * &sol;
    if let Some(delta) = lu.solve(&resid) {
        sol += delta;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(Matrix::from_vec(n, n, sol.iter().copied().collect()).symmetrize())
}

/// Checks `HᵀH = I` to `tol`.
pub fn check_orthogonal(h: &Matrix, tol: f64) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch("orthogonal matrix must be square".into()));
    }
    let deviation = h.t_matmul(h).max_abs_diff(&Matrix::identity(h.rows()));
    if deviation > tol {
        return Err(Error::NotOrthogonal { deviation });
    }
    Ok(())
}
