//! Deterministic inputs shared by the benchmarks.

use statvar::inference::{Posterior, ThetaLayout};
use statvar::prior::{sample_prior, PriorSpec};
use statvar::process::simulate;
use statvar::reparam::{a_to_p, reverse_map, MatrixSequence};
use statvar::{PacfSequence, Trajectory, VarModel};

/// A stationary model drawn from the Prior-1 specification.
pub fn model(m: usize, p: usize, seed: u64) -> VarModel {
    let point = sample_prior(&PriorSpec::prior1(m, p), m, p, seed).expect("prior draw");
    let pacf: Vec<_> = point.aseq.matrices().iter().map(|a| a_to_p(a).expect("finite A")).collect();
    reverse_map(&point.sigma, &PacfSequence::new(pacf).expect("pacf")).expect("reverse map").0
}

pub fn series(m: usize, p: usize, n: usize) -> Trajectory {
    simulate(&model(m, p, 11), n, 12).expect("simulate")
}

/// Prior-1 posterior on `n` simulated points and an encodable `θ`.
pub fn posterior(m: usize, p: usize, n: usize) -> (Posterior, Vec<f64>) {
    let spec = PriorSpec::prior1(m, p);
    let post = Posterior::new(&series(m, p, n), spec.clone(), p).expect("posterior");
    let layout = ThetaLayout::new(&spec, m, p).expect("layout");
    let point = sample_prior(&spec, m, p, 13).expect("prior draw");
    let theta = layout.encode(&point).expect("encode").into_vec();
    (post, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_usable() {
        let (post, theta) = posterior(2, 2, 50);
        assert!(post.try_log_density(&theta).unwrap().is_finite());
        assert!(model(3, 1, 1).spectral_radius() < 1.0);
    }
}
