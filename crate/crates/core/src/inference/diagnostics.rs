//! Convergence diagnostics: rank-normalised split-R̂ and effective sample
//! size with Geyer's initial monotone sequence truncation.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::hmc::Draws;

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Maximum of the rank-normalised split-R̂ for the draws and for their
    /// distance from the median.
    pub rhat: f64,
    /// ESS of the rank-normalised split chains.
    pub ess_bulk: f64,
    /// ESS of the raw split chains.
    pub ess: f64,
}

fn check(chains: &[Vec<f64>]) -> Result<usize> {
    if chains.is_empty() {
        return Err(Error::TooFewDraws("no chains".into()));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::TooFewDraws("chains have different lengths".into()));
    }
    if n < 4 {
        return Err(Error::TooFewDraws(format!("{n} draws per chain, need at least 4")));
    }
    Ok(n)
}

/// Each chain cut into two halves (the middle draw of an odd chain is dropped).
fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let half = chains[0].len() / 2;
    let n = chains[0].len();
    chains
        .iter()
        .flat_map(|c| [c[..half].to_vec(), c[n - half..].to_vec()])
        .collect()
}

/// Replaces pooled draws by normal scores of their average ranks.
fn rank_normalise(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut flat: Vec<(f64, usize)> = chains.iter().flatten().copied().zip(0..).collect();
    let s = flat.len();
    flat.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && flat[j + 1].0 == flat[i].0 {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for item in &flat[i..=j] {
            ranks[item.1] = avg;
        }
        i = j + 1;
    }
    let z = Normal::new(0.0, 1.0).expect("standard normal");
    let mut k = 0;
    chains
        .iter()
        .map(|c| {
            c.iter()
                .map(|_| {
                    let r = ranks[k];
                    k += 1;
                    z.inverse_cdf((r - 0.375) / (s as f64 + 0.25))
                })
                .collect()
        })
        .collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let mu = mean(x);
    x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Classic R̂ of already-split chains.
fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let b = n * variance(&means);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Rank-normalised split-R̂, folded and unfolded, whichever is larger.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    let halves = split(chains);
    let bulk = rhat_basic(&rank_normalise(&halves));
    let mut pooled: Vec<f64> = halves.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let median = if pooled.len() % 2 == 1 {
        pooled[pooled.len() / 2]
    } else {
        0.5 * (pooled[pooled.len() / 2 - 1] + pooled[pooled.len() / 2])
    };
    let folded: Vec<Vec<f64>> = halves.iter().map(|c| c.iter().map(|v| (v - median).abs()).collect()).collect();
    let tail = rhat_basic(&rank_normalise(&folded));
    Ok(bulk.max(tail))
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mu = mean(x);
    (0..n - lag).map(|t| (x[t] - mu) * (x[t + lag] - mu)).sum::<f64>() / n as f64
}

/// Multi-chain ESS of already-split chains.
fn ess_of(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len();
    let total = m * n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let var_plus = (n as f64 - 1.0) / n as f64 * w + if chains.len() > 1 { variance(&means) } else { 0.0 };
    if !(var_plus > 0.0) {
        return total;
    }
    let rho = |lag: usize| {
        let acov = mean(&chains.iter().map(|c| autocovariance(c, lag)).collect::<Vec<_>>());
        1.0 - (w - acov) / var_plus
    };
    // Sum pairs Γ_k = ρ_{2k} + ρ_{2k+1} while positive, forced non-increasing.
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let mut pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        if pair > prev_pair {
            pair = prev_pair;
        }
        sum += pair;
        prev_pair = pair;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / total.log10());
    total / tau
}

/// Effective sample size of the split chains without rank normalisation.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    Ok(ess_of(&split(chains)))
}

/// Effective sample size of the rank-normalised split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    Ok(ess_of(&rank_normalise(&split(chains))))
}

/// Per-coordinate summaries; needs at least two chains.
pub fn diagnostics(draws: &Draws) -> Result<Vec<ParameterSummary>> {
    if draws.n_chains() < 2 {
        return Err(Error::TooFewDraws(format!("{} chain(s), need at least 2", draws.n_chains())));
    }
    (0..draws.dim())
        .map(|k| {
            let chains = draws.coordinate(k);
            let flat: Vec<f64> = chains.concat();
            Ok(ParameterSummary {
                name: draws.names[k].clone(),
                mean: mean(&flat),
                sd: variance(&flat).sqrt(),
                rhat: split_rhat(&chains)?,
                ess_bulk: ess_bulk(&chains)?,
                ess: ess(&chains)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn iid(chains: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..chains).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
    }

    fn ar1(chains: usize, n: usize, phi: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sd = (1.0 - phi * phi).sqrt();
        (0..chains)
            .map(|_| {
                let mut x: f64 = StandardNormal.sample(&mut rng);
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x = phi * x + sd * z;
                        x
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_chains() {
        let one = iid(1, 2000, 1).remove(0);
        let chains = vec![one.clone(), one.clone(), one];
        // Split halves still differ, so R̂ is one only up to sampling noise.
        let r = split_rhat(&chains).unwrap();
        assert!((r - 1.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn iid_ess_close_to_draw_count() {
        let chains = iid(4, 1000, 2);
        for e in [ess(&chains).unwrap(), ess_bulk(&chains).unwrap()] {
            assert!((e / 4000.0 - 1.0).abs() < 0.15, "{e}");
        }
        assert!(split_rhat(&chains).unwrap() < 1.01);
    }

    #[test]
    fn ar1_ess_matches_theory() {
        let chains = ar1(4, 5000, 0.9, 3);
        let want = 20000.0 * 0.1 / 1.9;
        let e = ess(&chains).unwrap();
        assert!((e / want - 1.0).abs() < 0.3, "{e} vs {want}");
    }

    #[test]
    fn shifted_chain_inflates_rhat() {
        let mut chains = iid(4, 500, 4);
        for v in chains[0].iter_mut() {
            *v += 3.0;
        }
        assert!(split_rhat(&chains).unwrap() > 1.1);
        let mut scaled = iid(4, 500, 5);
        for v in scaled[1].iter_mut() {
            *v *= 10.0;
        }
        // Same location, different scale: only the folded version notices.
        assert!(split_rhat(&scaled).unwrap() > 1.05);
    }

    #[test]
    fn too_few_draws() {
        assert!(matches!(split_rhat(&[vec![1.0, 2.0]]), Err(Error::TooFewDraws(_))));
        assert!(matches!(ess(&[]), Err(Error::TooFewDraws(_))));
        let draws = Draws::new(vec!["x".into()], vec![], None);
        assert!(matches!(diagnostics(&draws), Err(Error::TooFewDraws(_))));
    }

    #[test]
    fn constant_chains() {
        let chains = vec![vec![1.0; 10], vec![1.0; 10]];
        assert_eq!(split_rhat(&chains).unwrap(), 1.0);
        assert_eq!(ess(&chains).unwrap(), 20.0);
    }
}
