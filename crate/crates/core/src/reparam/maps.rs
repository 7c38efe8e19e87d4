use std::iter::once;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, sym_sqrt_pair, Mat, Matrix, SpdMatrix};
use crate::model::VarModel;
use crate::process::autocovariances;
use crate::scalar::Real;

use super::PacfSequence;

/// Intermediate quantities of [`forward_map`].
#[derive(Clone, Debug)]
pub struct ForwardMapTrace {
    /// `Γ₀ … Γₚ`.
    pub gammas: Vec<Matrix>,
    /// Forward conditional variances `Σ₀ … Σₚ`.
    pub sigmas: Vec<Matrix>,
    /// Backward conditional variances `Σ*₀ … Σ*ₚ`.
    pub sigmas_rev: Vec<Matrix>,
    /// `phi_tri[s]` holds `φ_{s+1,1} … φ_{s+1,s+1}`.
    pub phi_tri: Vec<Vec<Matrix>>,
    /// Backward coefficients `φ*`, same layout as `phi_tri`.
    pub phi_tri_rev: Vec<Vec<Matrix>>,
}

/// Maps a stationary model to its partial autocorrelation matrices.
pub fn forward_map(model: &VarModel) -> Result<(PacfSequence, ForwardMapTrace)> {
    model.check_strictly_stationary()?;
    let p = model.order();
    let gammas = autocovariances(model, p)?;
    let gammas_t: Vec<Matrix> = gammas.iter().map(Matrix::transpose).collect();
    let g0 = &gammas[0];

    let mut sigmas = vec![g0.clone()];
    let mut sigmas_rev = vec![g0.clone()];
    let mut phi_tri: Vec<Vec<Matrix>> = Vec::with_capacity(p);
    let mut phi_tri_rev: Vec<Vec<Matrix>> = Vec::with_capacity(p);
    let mut pacf = Vec::with_capacity(p);

    for s in 0..p {
        let (_, root_inv) = sym_sqrt_pair(&sigmas[s])?;
        let (root_rev, root_rev_inv) = sym_sqrt_pair(&sigmas_rev[s])?;
        let sigma_inv = root_inv.matmul(&root_inv);
        let sigma_rev_inv = root_rev_inv.matmul(&root_rev_inv);
        let empty = Vec::new();
        let (phi, phi_rev) = if s == 0 {
            (&empty, &empty)
        } else {
            (&phi_tri[s - 1], &phi_tri_rev[s - 1])
        };

        let mut num = gammas_t[s + 1].clone();
        let mut num_rev = gammas[s + 1].clone();
        for i in 1..=s {
            num = &num - &phi[i - 1].matmul(&gammas_t[s + 1 - i]);
            num_rev = &num_rev - &phi_rev[i - 1].matmul(&gammas[s + 1 - i]);
        }
        let lead = num.matmul(&sigma_rev_inv);
        let lead_rev = num_rev.matmul(&sigma_inv);
        pacf.push(root_inv.matmul(&lead).matmul(&root_rev));

        let next: Vec<Matrix> = (1..=s)
            .map(|i| &phi[i - 1] - &lead.matmul(&phi_rev[s - i]))
            .chain(once(lead.clone()))
            .collect();
        let next_rev: Vec<Matrix> = (1..=s)
            .map(|i| &phi_rev[i - 1] - &lead_rev.matmul(&phi[s - i]))
            .chain(once(lead_rev.clone()))
            .collect();

        let mut sigma = g0.clone();
        let mut sigma_rev = g0.clone();
        for i in 1..=s + 1 {
            sigma = &sigma - &next[i - 1].matmul(&gammas[i]);
            sigma_rev = &sigma_rev - &next_rev[i - 1].matmul(&gammas_t[i]);
        }
        sigmas.push(sigma.symmetrize());
        sigmas_rev.push(sigma_rev.symmetrize());
        phi_tri.push(next);
        phi_tri_rev.push(next_rev);
    }

    let trace = ForwardMapTrace {
        gammas,
        sigmas,
        sigmas_rev,
        phi_tri,
        phi_tri_rev,
    };
    Ok((PacfSequence::from_unchecked(pacf), trace))
}

/// Output of the generic reverse mapping.
#[derive(Clone, Debug)]
pub struct ReverseMapOutput<T: Real> {
    /// `φ₁ … φₚ`.
    pub phi: Vec<Mat<T>>,
    /// `Γ₀ … Γₚ`.
    pub gammas: Vec<Mat<T>>,
    /// `Σ₀ … Σₚ` from the downward recursion; `Σₚ` is the input.
    pub sigmas: Vec<Mat<T>>,
    /// `Σ*₀ … Σ*ₚ`.
    pub sigmas_rev: Vec<Mat<T>>,
    /// `Σₚ` rebuilt by the upward recursion; equals the input up to rounding.
    pub sigma_rebuilt: Mat<T>,
}

/// Downward recursion `Σ_s → S_s` for `s = p−1, …, 0`, where `S_s` is the
/// symmetric positive definite solution of `S (I − PPᵀ) S = Σ_{s+1}`.
pub(crate) struct VarianceChain<T: Real> {
    /// `Σ₀ … Σₚ`.
    pub sigmas: Vec<Mat<T>>,
    /// `S_s = Σ_s^{1/2}` for `s < p`.
    pub roots: Vec<Mat<T>>,
    pub root_invs: Vec<Mat<T>>,
}

pub(crate) fn variance_chain<T: Real>(sigma: &Mat<T>, pacf: &[Mat<T>]) -> Result<VarianceChain<T>> {
    let p = pacf.len();
    let m = sigma.rows();
    let eye = Mat::<T>::identity(m);
    let mut sigmas = vec![Mat::zeros(m, m); p + 1];
    let mut roots = vec![Mat::zeros(m, m); p];
    let mut root_invs = vec![Mat::zeros(m, m); p];
    sigmas[p] = sigma.symmetrize();
    for s in (0..p).rev() {
        let ps = &pacf[s];
        if ps.rows() != m || ps.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "P_{} is {}x{}, expected {m}x{m}",
                s + 1,
                ps.rows(),
                ps.cols()
            )));
        }
        let k = &eye - &ps.matmul_t(ps);
        let (l, l_inv) = sym_sqrt_pair(&k).map_err(|e| match e {
            Error::NotSpd { .. } => Error::NotInVm {
                sigma_max: singular_values(&ps.values())[0],
            },
            other => other,
        })?;
        let inner = sigmas[s + 1].conjugate_by(&l);
        let (inner_root, inner_root_inv) = sym_sqrt_pair(&inner)?;
        let root = l_inv.matmul(&inner_root).matmul(&l_inv).symmetrize();
        let root_inv = l.matmul(&inner_root_inv).matmul(&l).symmetrize();
        sigmas[s] = root.matmul(&root).symmetrize();
        roots[s] = root;
        root_invs[s] = root_inv;
    }
    Ok(VarianceChain {
        sigmas,
        roots,
        root_invs,
    })
}

/// Maps `(Σ, P₁..Pₚ)` to `(Φ, Γ₀..Γₚ)` for any scalar type.
pub fn reverse_map_generic<T: Real>(sigma: &Mat<T>, pacf: &[Mat<T>]) -> Result<ReverseMapOutput<T>> {
    if pacf.is_empty() {
        return Err(Error::DimensionMismatch("VAR order must be at least 1".into()));
    }
    let p = pacf.len();
    let chain = variance_chain(sigma, pacf)?;

    let mut gammas = vec![chain.sigmas[0].clone()];
    let mut gammas_t = vec![chain.sigmas[0].clone()];
    let mut sigmas_rev = vec![chain.sigmas[0].clone()];
    let mut rev_root = chain.roots[0].clone();
    let mut rev_root_inv = chain.root_invs[0].clone();
    let mut phi: Vec<Mat<T>> = Vec::new();
    let mut phi_rev: Vec<Mat<T>> = Vec::new();
    let mut sigma_rebuilt = chain.sigmas[0].clone();

    for s in 0..p {
        let ps = &pacf[s];
        let sigma_s = &chain.sigmas[s];
        let sigma_rev_s = &sigmas_rev[s];
        let lead = chain.roots[s].matmul(ps).matmul(&rev_root_inv);
        let lead_rev = rev_root.matmul_t(ps).matmul(&chain.root_invs[s]);

        let mut gt = lead.matmul(sigma_rev_s);
        for i in 1..=s {
            gt = &gt + &phi[i - 1].matmul(&gammas_t[s + 1 - i]);
        }
        gammas.push(gt.transpose());
        gammas_t.push(gt);

        let next: Vec<Mat<T>> = (1..=s)
            .map(|i| &phi[i - 1] - &lead.matmul(&phi_rev[s - i]))
            .chain(once(lead.clone()))
            .collect();
        let next_rev: Vec<Mat<T>> = (1..=s)
            .map(|i| &phi_rev[i - 1] - &lead_rev.matmul(&phi[s - i]))
            .chain(once(lead_rev.clone()))
            .collect();

        sigma_rebuilt = (sigma_s - &lead.matmul(sigma_rev_s).matmul_t(&lead)).symmetrize();
        let sigma_rev_next = (sigma_rev_s - &lead_rev.matmul(sigma_s).matmul_t(&lead_rev)).symmetrize();
        if s + 1 < p {
            let (r, ri) = sym_sqrt_pair(&sigma_rev_next)?;
            rev_root = r;
            rev_root_inv = ri;
        }
        sigmas_rev.push(sigma_rev_next);
        phi = next;
        phi_rev = next_rev;
    }

    Ok(ReverseMapOutput {
        phi,
        gammas,
        sigmas: chain.sigmas,
        sigmas_rev,
        sigma_rebuilt,
    })
}

/// Maps `(Σ, P₁..Pₚ)` to a stationary model and its autocovariances `Γ₀..Γₚ`.
pub fn reverse_map(sigma: &SpdMatrix, pacf: &PacfSequence) -> Result<(VarModel, Vec<Matrix>)> {
    let out = reverse_map_generic(sigma.as_matrix(), &pacf.0)?;
    // Stationary by construction; the eigenvalue check would only add rounding noise.
    let model = VarModel::unrestricted(sigma.clone(), out.phi)?;
    Ok((model, out.gammas))
}
