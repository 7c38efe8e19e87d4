use crate::error::{Error, Result};
use crate::reparam::{structure_p_to_a, StructuredForm};

use super::{ExchangeableHyper, NormalGamma};

/// Marginal moments of one group (diagonal or off-diagonal) of `A_s` entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupMoments {
    pub mean: f64,
    pub variance: f64,
    /// Correlation between two distinct entries of the group.
    pub correlation: f64,
}

impl NormalGamma {
    /// Moments after integrating out `μ ~ N(e, f²)` and `ω ~ Gam(g, h)`.
    pub fn marginal_moments(&self) -> Result<GroupMoments> {
        if !(self.g > 1.0) {
            return Err(Error::InfiniteVariance { shape: self.g });
        }
        let shared = self.f * self.f;
        let variance = shared + self.h / (self.g - 1.0);
        Ok(GroupMoments {
            mean: self.e,
            variance,
            correlation: shared * (self.g - 1.0) / (shared * (self.g - 1.0) + self.h),
        })
    }
}

/// `(diagonal, off-diagonal)` moments at lag index `s` (zero-based).
pub fn marginal_moments(hyper: &ExchangeableHyper, s: usize) -> Result<(GroupMoments, GroupMoments)> {
    let lag = hyper
        .lags
        .get(s)
        .ok_or_else(|| Error::DimensionMismatch(format!("lag {} not in a {}-lag prior", s + 1, hyper.lags.len())))?;
    Ok((lag.diag.marginal_moments()?, lag.offdiag.marginal_moments()?))
}

/// A-side `(c₁, c₂)` of the two-parameter exchangeable `P` with diagonal `r1`
/// and off-diagonal `r2`; usable as the prior means `(e_{s1}, e_{s2})`.
pub fn elicit_from_structure(r1: f64, r2: f64, m: usize) -> Result<(f64, f64)> {
    match structure_p_to_a(&StructuredForm::TwoParamExchangeable { m, r1, r2 })? {
        StructuredForm::TwoParamExchangeable { r1, r2, .. } => Ok((r1, r2)),
        _ => unreachable!("kind is preserved"),
    }
}
