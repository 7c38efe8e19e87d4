//! Bijections between `(Σ, Φ)`, partial autocorrelation matrices `P₁..Pₚ`,
//! the unconstrained matrices `A₁..Aₚ` and the RML matrices `C₁..Cₚ`.
//!
//! Every factorisation uses the symmetric matrix square root, which is what
//! makes the maps equivariant under orthogonal conjugation.

mod maps;
mod pacf;
mod rml;
mod structure;

pub use maps::{forward_map, reverse_map, reverse_map_generic, ForwardMapTrace, ReverseMapOutput};
pub use pacf::{a_to_p, p_to_a, SV_TOL};
pub use rml::{ak_from_rml, ak_from_rml_generic, polar_decomposition, rml_from_ak, rml_from_pacf};
pub use structure::{structure_a_to_p, structure_p_to_a, StructuredForm};

pub use crate::model::VarModel;

use crate::error::{Error, Result};
use crate::linalg::{check_orthogonal, singular_values, Matrix};

/// Common access to the three `p`-long matrix sequences.
pub trait MatrixSequence: Sized {
    fn matrices(&self) -> &[Matrix];

    /// Rebuilds the sequence, re-validating its invariants.
    fn with_matrices(mats: Vec<Matrix>) -> Result<Self>;

    fn order(&self) -> usize {
        self.matrices().len()
    }

    fn dim(&self) -> usize {
        self.matrices()[0].rows()
    }
}

fn check_square_sequence(mats: &[Matrix]) -> Result<usize> {
    let m = mats
        .first()
        .ok_or_else(|| Error::DimensionMismatch("matrix sequence must have at least one lag".into()))?
        .rows();
    for (s, a) in mats.iter().enumerate() {
        if a.rows() != m || a.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "lag {} is {}x{}, expected {m}x{m}",
                s + 1,
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite(format!("lag {} matrix", s + 1)));
        }
    }
    Ok(m)
}

macro_rules! sequence_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Vec<Matrix>);

        impl $name {
            pub fn into_matrices(self) -> Vec<Matrix> {
                self.0
            }

            #[allow(dead_code)]
            pub(crate) fn from_unchecked(mats: Vec<Matrix>) -> Self {
                Self(mats)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = Matrix;
            fn index(&self, s: usize) -> &Matrix {
                &self.0[s]
            }
        }
    };
}

sequence_type!(
    /// `P₁..Pₚ`, each with every singular value below one.
    PacfSequence
);
sequence_type!(
    /// `A₁..Aₚ`, unrestricted real matrices.
    UnconstrainedSequence
);
sequence_type!(
    /// `C₁..Cₚ` of the RML parameterisation.
    RmlSequence
);

impl PacfSequence {
    pub fn new(mats: Vec<Matrix>) -> Result<Self> {
        check_square_sequence(&mats)?;
        for p in &mats {
            let sigma_max = singular_values(p)[0];
            if sigma_max >= 1.0 - SV_TOL {
                return Err(Error::NotInVm { sigma_max });
            }
        }
        Ok(Self(mats))
    }
}

impl UnconstrainedSequence {
    pub fn new(mats: Vec<Matrix>) -> Result<Self> {
        check_square_sequence(&mats)?;
        Ok(Self(mats))
    }
}

impl RmlSequence {
    /// Rank-deficient matrices are accepted; see [`RmlSequence::is_full_rank`].
    pub fn new(mats: Vec<Matrix>) -> Result<Self> {
        check_square_sequence(&mats)?;
        Ok(Self(mats))
    }

    /// Whether every `C_s` has full rank, i.e. its polar factor is unique.
    pub fn is_full_rank(&self, tol: f64) -> bool {
        self.0.iter().all(|c| {
            let sv = singular_values(c);
            sv[sv.len() - 1] > tol * sv[0].max(1.0)
        })
    }
}

macro_rules! impl_sequence {
    ($($name:ident),*) => {$(
        impl MatrixSequence for $name {
            fn matrices(&self) -> &[Matrix] {
                &self.0
            }
            fn with_matrices(mats: Vec<Matrix>) -> Result<Self> {
                Self::new(mats)
            }
        }
    )*};
}
impl_sequence!(PacfSequence, UnconstrainedSequence, RmlSequence);

/// Tolerance on `HᵀH = I` for [`orthogonal_conjugate`].
pub const ORTHO_TOL: f64 = 1e-10;

/// Conjugates every matrix of the sequence as `H·M·Hᵀ`.
pub fn orthogonal_conjugate<S: MatrixSequence>(seq: &S, h: &Matrix) -> Result<S> {
    check_orthogonal(h, ORTHO_TOL)?;
    if h.rows() != seq.dim() {
        return Err(Error::DimensionMismatch(format!(
            "H is {}x{}, sequence matrices are {}x{}",
            h.rows(),
            h.rows(),
            seq.dim(),
            seq.dim()
        )));
    }
    S::with_matrices(seq.matrices().iter().map(|m| m.conjugate_by(h)).collect())
}
