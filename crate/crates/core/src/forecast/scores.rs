//! Sample-based proper scoring rules, negatively oriented.

use crate::error::{Error, Result};
use crate::prior::LN_2PI;

fn check_samples(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k });
    }
    Ok(())
}

/// `mean|xᵢ − y| − (1/2K²) Σᵢⱼ |xᵢ − xⱼ|`, with the double sum taken from the
/// order statistics: `Σᵢⱼ |xᵢ − xⱼ| = 2 Σᵢ (2i − K − 1) x₍ᵢ₎`.
pub fn crps_sample(samples: &[f64], y: f64) -> Result<f64> {
    check_samples(samples.len())?;
    let k = samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let abs_err = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / k;
    let spread: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - k - 1.0) * x)
        .sum();
    Ok(abs_err - spread / (k * k))
}

/// The same estimator by the direct double sum.
pub fn crps_sample_quadratic(samples: &[f64], y: f64) -> Result<f64> {
    check_samples(samples.len())?;
    let k = samples.len() as f64;
    let abs_err = samples.iter().map(|x| (x - y).abs()).sum::<f64>() / k;
    let mut pairs = 0.0;
    for a in samples {
        for b in samples {
            pairs += (a - b).abs();
        }
    }
    Ok(abs_err - pairs / (2.0 * k * k))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `mean‖Yᵢ − y‖ − (1/2K²) Σᵢⱼ ‖Yᵢ − Yⱼ‖` over all ordered pairs.
pub fn energy_score(samples: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    check_samples(samples.len())?;
    if samples.iter().any(|s| s.len() != y.len()) {
        return Err(Error::DimensionMismatch("sample and observation dimensions differ".into()));
    }
    let k = samples.len() as f64;
    let abs_err = samples.iter().map(|s| dist(s, y)).sum::<f64>() / k;
    let mut pairs = 0.0;
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            pairs += dist(a, b);
        }
    }
    // Each unordered pair appears twice among the ordered pairs.
    Ok(abs_err - pairs / (k * k))
}

/// `−log f(y)` for the equally weighted mixture `f = (1/K) Σ N(μₖ, vₖ)`.
pub fn log_score_mixture(means: &[f64], variances: &[f64], y: f64) -> Result<f64> {
    if means.is_empty() || means.len() != variances.len() {
        return Err(Error::DimensionMismatch("need one variance per mixture component".into()));
    }
    let logs: Vec<f64> = means
        .iter()
        .zip(variances)
        .map(|(mu, v)| {
            if *v > 0.0 {
                -0.5 * (LN_2PI + v.ln()) - 0.5 * (y - mu).powi(2) / v
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroDensity);
    }
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Ok(-(max + (sum / means.len() as f64).ln()))
}
