//! Log posterior in unconstrained coordinates, its gradient, the HMC sampler
//! and convergence diagnostics.

pub mod diagnostics;
mod hmc;
mod layout;
mod likelihood;
mod posterior;

pub use diagnostics::{diagnostics, ess, ess_bulk, split_rhat, ParameterSummary};
pub use hmc::{leapfrog, run_hmc, sample, sample_posterior, ChainDraws, Draws, HmcConfig, DIVERGENCE_THRESHOLD};
pub use layout::{CoefficientCoords, ThetaLayout, UnconstrainedVector};
pub(crate) use layout::{log_cholesky, log_cholesky_names};
pub use likelihood::{log_likelihood_exact, LikelihoodData};
pub(crate) use likelihood::conditional_log_likelihood;
pub(crate) use posterior::ad_value_and_gradient;
pub use posterior::{
    finite_difference_gradient, gradient, log_posterior, GradientMode, LogDensity, Posterior, TransformedDraw,
};
