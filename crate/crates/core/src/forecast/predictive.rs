use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::Draws;
use crate::linalg::{cholesky, Matrix};
use crate::model::{Trajectory, VarModel};

/// How held-back points are forecast.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ForecastMode {
    /// One step ahead, conditioning on the realised history before each point.
    #[default]
    Rolling,
    /// `1..H` steps ahead from the end of the training window.
    FixedOrigin,
}

impl ForecastMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rolling => "rolling",
            Self::FixedOrigin => "fixed-origin",
        }
    }
}

/// Forecast samples for the points `origin .. origin + H`, one per posterior
/// draw, plus each draw's Gaussian conditional predictive (mean and marginal
/// variances) for mixture log scores.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveSamples {
    pub mode: ForecastMode,
    pub origin: usize,
    /// `samples[h][k]`: draw `k`'s sample for time `origin + h`.
    samples: Vec<Vec<Vec<f64>>>,
    means: Vec<Vec<Vec<f64>>>,
    variances: Vec<Vec<Vec<f64>>>,
}

impl PredictiveSamples {
    pub fn horizon(&self) -> usize {
        self.samples.len()
    }

    pub fn n_draws(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.samples.first().and_then(|s| s.first()).map_or(0, Vec::len)
    }

    /// Samples for the `h`-th held-back point.
    pub fn at(&self, h: usize) -> &[Vec<f64>] {
        &self.samples[h]
    }

    /// Samples of variable `j` at the `h`-th held-back point.
    pub fn marginal(&self, h: usize, j: usize) -> Vec<f64> {
        self.samples[h].iter().map(|s| s[j]).collect()
    }

    /// Per-draw conditional means and variances of variable `j` at point `h`.
    pub fn components(&self, h: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.means[h].iter().map(|m| m[j]).collect(),
            self.variances[h].iter().map(|v| v[j]).collect(),
        )
    }

    /// Samples restricted to the listed variables.
    pub fn subset(&self, h: usize, cols: &[usize]) -> Vec<Vec<f64>> {
        self.samples[h].iter().map(|s| cols.iter().map(|&c| s[c]).collect()).collect()
    }
}

fn check_models(models: &[VarModel], m: usize) -> Result<usize> {
    let first = models
        .first()
        .ok_or_else(|| Error::TooFewDraws("no posterior draws to forecast from".into()))?;
    let p = first.order();
    if models.iter().any(|md| md.dim() != m || md.order() != p) {
        return Err(Error::DimensionMismatch("posterior draws disagree with the data dimensions".into()));
    }
    Ok(p)
}

fn conditional_mean(model: &VarModel, history: &[&[f64]]) -> Vec<f64> {
    // history[i] is y_{t−1−i}.
    let mut mean = vec![0.0; model.dim()];
    for (f, y) in model.phi().iter().zip(history) {
        for (mk, v) in mean.iter_mut().zip(f.mat_vec(y)) {
            *mk += v;
        }
    }
    mean
}

fn shock(l: &Matrix, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..l.rows()).map(|_| StandardNormal.sample(rng)).collect();
    l.mat_vec(&z)
}

/// Predictive samples for `horizon` points after `origin`.
///
/// Rolling mode needs the realised values up to `origin + horizon − 1`;
/// fixed-origin mode uses `data[..origin]` only.
pub fn predictive_from_models(
    models: &[VarModel],
    data: &Trajectory,
    origin: usize,
    horizon: usize,
    mode: ForecastMode,
    seed: u64,
) -> Result<PredictiveSamples> {
    let m = data.dim();
    let p = check_models(models, m)?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("forecast horizon must be at least 1".into()));
    }
    if origin < p {
        return Err(Error::DimensionMismatch(format!("forecast origin {origin} precedes the first {p} lags")));
    }
    let needed = match mode {
        ForecastMode::Rolling => origin + horizon - 1,
        ForecastMode::FixedOrigin => origin,
    };
    if data.len() < needed {
        return Err(Error::DimensionMismatch(format!("need {needed} observations, got {}", data.len())));
    }
    let chols = models
        .iter()
        .map(|md| cholesky(md.sigma().as_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let diag: Vec<Vec<f64>> = models.iter().map(|md| md.sigma().as_matrix().diag()).collect();

    match mode {
        ForecastMode::Rolling => {
            let per_point: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = (0..horizon)
                .into_par_iter()
                .map(|h| {
                    let t = origin + h;
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream(h as u64);
                    let history: Vec<&[f64]> = (1..=p).map(|i| data.row(t - i)).collect();
                    let means: Vec<Vec<f64>> = models.iter().map(|md| conditional_mean(md, &history)).collect();
                    let samples = means
                        .iter()
                        .zip(&chols)
                        .map(|(mu, l)| mu.iter().zip(shock(l, &mut rng)).map(|(a, b)| a + b).collect())
                        .collect();
                    (samples, means)
                })
                .collect();
            let (samples, means): (Vec<_>, Vec<_>) = per_point.into_iter().unzip();
            Ok(PredictiveSamples {
                mode,
                origin,
                samples,
                means,
                variances: vec![diag; horizon],
            })
        }
        ForecastMode::FixedOrigin => {
            let per_draw: Vec<[Vec<Vec<f64>>; 3]> = models
                .par_iter()
                .zip(&chols)
                .enumerate()
                .map(|(k, (md, l))| {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    fixed_origin_paths(md, l, data, origin, horizon, &mut rng)
                })
                .collect();
            let mut samples = vec![Vec::with_capacity(models.len()); horizon];
            let mut means = vec![Vec::with_capacity(models.len()); horizon];
            let mut variances = vec![Vec::with_capacity(models.len()); horizon];
            for [s, mu, v] in per_draw {
                for h in 0..horizon {
                    samples[h].push(s[h].clone());
                    means[h].push(mu[h].clone());
                    variances[h].push(v[h].clone());
                }
            }
            Ok(PredictiveSamples {
                mode,
                origin,
                samples,
                means,
                variances,
            })
        }
    }
}

/// Predictive samples from the `(Σ, Φ)` of every stored posterior draw.
pub fn predictive_draws(
    draws: &Draws,
    data: &Trajectory,
    origin: usize,
    horizon: usize,
    mode: ForecastMode,
    seed: u64,
) -> Result<PredictiveSamples> {
    let models: Vec<VarModel> = draws.transformed_all()?.into_iter().map(|d| d.model).collect();
    predictive_from_models(&models, data, origin, horizon, mode, seed)
}

/// One simulated path plus the exact `h`-step conditional mean and marginal
/// variances (`V_h = F V_{h−1} Fᵀ + Q` in companion form).
fn fixed_origin_paths(
    model: &VarModel,
    l: &Matrix,
    data: &Trajectory,
    origin: usize,
    horizon: usize,
    rng: &mut ChaCha20Rng,
) -> [Vec<Vec<f64>>; 3] {
    let (m, p) = (model.dim(), model.order());
    let mut sim: Vec<Vec<f64>> = (origin - p..origin).map(|t| data.row(t).to_vec()).collect();
    let mut det = sim.clone();
    let f = model.companion();
    let mut v = Matrix::zeros(m * p, m * p);
    let mut q = Matrix::zeros(m * p, m * p);
    q.set_block(0, 0, model.sigma().as_matrix());
    let (mut samples, mut means, mut vars) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..horizon {
        let hist: Vec<&[f64]> = sim.iter().rev().take(p).map(Vec::as_slice).collect();
        let mu_sim = conditional_mean(model, &hist);
        let y: Vec<f64> = mu_sim.iter().zip(shock(l, rng)).map(|(a, b)| a + b).collect();
        sim.push(y.clone());
        samples.push(y);

        let hist: Vec<&[f64]> = det.iter().rev().take(p).map(Vec::as_slice).collect();
        let mu = conditional_mean(model, &hist);
        det.push(mu.clone());
        means.push(mu);
        v = &f.matmul(&v).matmul_t(&f) + &q;
        vars.push((0..m).map(|i| v[(i, i)]).collect());
    }
    [samples, means, vars]
}
