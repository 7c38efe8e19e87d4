//! Posterior predictive simulation, proper scoring rules, the unconstrained
//! baselines and the held-back-data comparison harness.

mod baselines;
mod predictive;
mod scores;

pub use baselines::{
    fit_conjugate, fit_minnesota, match_semi_conjugate, minnesota_prior, univariate_residual_variances, EquationPrior,
    MinnesotaPosterior, SemiConjugatePosterior,
};
pub use predictive::{predictive_draws, predictive_from_models, ForecastMode, PredictiveSamples};
pub use scores::{crps_sample, crps_sample_quadratic, energy_score, log_score_mixture};

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{sample, sample_posterior, Draws, HmcConfig, Posterior};
use crate::model::{Trajectory, VarModel};
use crate::prior::{InverseWishart, MinnesotaHyper, PriorSpec, SemiConjugateHyper};
use crate::process::is_stationary;

/// Fraction of draws whose companion spectral radius is below one.
pub fn stationarity_probability(models: &[VarModel]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::TooFewDraws("no draws".into()));
    }
    let n = models.iter().filter(|m| is_stationary(m.phi()).0).count();
    Ok(n as f64 / models.len() as f64)
}

/// Scores averaged over the held-back points.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub label: String,
    pub mode: ForecastMode,
    pub stationarity_probability: f64,
    /// Variables of interest (0-based) for the per-variable and subset scores.
    pub subset: Vec<usize>,
    /// Mean CRPS of each variable in `subset`.
    pub crps: Vec<f64>,
    /// Mean log score of each variable in `subset`; `+∞` where the mixture
    /// density underflowed at some point.
    pub log_score: Vec<f64>,
    /// Held-back points at which a log score underflowed.
    pub log_score_underflows: usize,
    /// Mean energy score over all `m` variables.
    pub es_all: f64,
    /// Mean energy score over `subset`.
    pub es_subset: f64,
    pub dim: usize,
    pub n_points: usize,
}

impl ScoreReport {
    pub fn csv_header(subset: &[usize], m: usize) -> Vec<String> {
        let mut h = vec!["Prior".to_string(), "Mode".into(), "Pr(Stat.)".into()];
        h.extend(subset.iter().map(|i| format!("CRPS_{}", i + 1)));
        h.extend(subset.iter().map(|i| format!("logS_{}", i + 1)));
        h.push(format!("ES_{m}"));
        h.push(format!("ES_{}", subset.len()));
        h
    }

    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![
            self.label.clone(),
            self.mode.name().to_string(),
            format!("{:.4}", self.stationarity_probability),
        ];
        row.extend(self.crps.iter().chain(&self.log_score).map(|v| format!("{v:.6}")));
        row.push(format!("{:.6}", self.es_all));
        row.push(format!("{:.6}", self.es_subset));
        row
    }
}

/// Writes reports sharing one variable subset as CSV.
pub fn write_reports_csv<W: Write>(reports: &[ScoreReport], out: W) -> Result<()> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidConfig("no score reports to write".into()))?;
    if reports.iter().any(|r| r.subset != first.subset || r.dim != first.dim) {
        return Err(Error::DimensionMismatch("reports use different variable subsets".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidConfig(format!("writing CSV: {e}"));
    w.write_record(ScoreReport::csv_header(&first.subset, first.dim)).map_err(io)?;
    for r in reports {
        w.write_record(r.csv_row()).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidConfig(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Fixed-width table with the CSV columns.
pub struct ReportTable<'a>(pub &'a [ScoreReport]);

impl fmt::Display for ReportTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(first) = self.0.first() else {
            return Ok(());
        };
        let header = ScoreReport::csv_header(&first.subset, first.dim);
        let rows: Vec<Vec<String>> = self.0.iter().map(ScoreReport::csv_row).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            for (c, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if c == 0 {
                    write!(f, "{cell:<w$}")?;
                } else {
                    write!(f, "  {cell:>w$}")?;
                }
            }
            writeln!(f)
        };
        line(f, &header)?;
        for r in &rows {
            line(f, r)?;
        }
        Ok(())
    }
}

/// Scores `pred` against the realised `data[origin + h]`.
pub fn score_predictive(
    pred: &PredictiveSamples,
    data: &Trajectory,
    subset: &[usize],
    label: &str,
    stationarity_probability: f64,
) -> Result<ScoreReport> {
    let m = data.dim();
    if pred.dim() != m {
        return Err(Error::DimensionMismatch("predictive and data dimensions differ".into()));
    }
    if subset.is_empty() || subset.iter().any(|&i| i >= m) {
        return Err(Error::InvalidConfig(format!("variable subset {subset:?} is not within 1..={m}")));
    }
    let h = pred.horizon();
    if data.len() < pred.origin + h {
        return Err(Error::DimensionMismatch("data end before the held-back points".into()));
    }
    let per_point: Vec<(Vec<f64>, Vec<Option<f64>>, f64, f64)> = (0..h)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let y = data.row(pred.origin + k);
            let crps = subset
                .iter()
                .map(|&j| crps_sample(&pred.marginal(k, j), y[j]))
                .collect::<Result<Vec<_>>>()?;
            let logs = subset
                .iter()
                .map(|&j| {
                    let (mu, var) = pred.components(k, j);
                    match log_score_mixture(&mu, &var, y[j]) {
                        Ok(v) => Ok(Some(v)),
                        Err(Error::ZeroDensity) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let es_all = energy_score(pred.at(k), y)?;
            let ys: Vec<f64> = subset.iter().map(|&j| y[j]).collect();
            let es_sub = energy_score(&pred.subset(k, subset), &ys)?;
            Ok((crps, logs, es_all, es_sub))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = h as f64;
    let q = subset.len();
    let mut crps = vec![0.0; q];
    let mut log_score = vec![0.0; q];
    let mut underflows = 0;
    let (mut es_all, mut es_subset) = (0.0, 0.0);
    for (c, l, ea, es) in &per_point {
        for i in 0..q {
            crps[i] += c[i] / n;
            log_score[i] += l[i].map_or(f64::INFINITY, |v| v / n);
        }
        if l.iter().any(Option::is_none) {
            underflows += 1;
        }
        es_all += ea / n;
        es_subset += es / n;
    }
    Ok(ScoreReport {
        label: label.to_string(),
        mode: pred.mode,
        stationarity_probability,
        subset: subset.to_vec(),
        crps,
        log_score,
        log_score_underflows: underflows,
        es_all,
        es_subset,
        dim: m,
        n_points: h,
    })
}

/// A model-prior combination to compare on held-back data.
#[derive(Clone, Debug)]
pub enum Method {
    /// A stationary prior fitted by HMC on the full likelihood.
    Stationary(PriorSpec),
    /// Closed-form conjugate posterior with `Σ` fixed at its estimate.
    Minnesota(MinnesotaHyper),
    /// Unconstrained `Φ` and inverse-Wishart `Σ`, fitted by HMC on the
    /// likelihood conditional on the first `p` observations.
    SemiConjugate {
        hyper: SemiConjugateHyper,
        sigma: InverseWishart,
    },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Self::Stationary(spec) => spec.kind.name().to_string(),
            Self::Minnesota(_) => "minnesota".into(),
            Self::SemiConjugate { .. } => "semi-conjugate".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvaluationConfig {
    pub p: usize,
    /// Trailing observations held back from fitting.
    pub holdout: usize,
    pub mode: ForecastMode,
    /// Variables of interest (0-based).
    pub subset: Vec<usize>,
    pub hmc: HmcConfig,
    /// Independent draws taken from the Minnesota posterior.
    pub minnesota_draws: usize,
    /// Posterior draws used for scoring, evenly thinned (the energy score
    /// costs `O(K²)` per point).
    pub max_score_draws: usize,
    pub seed: u64,
}

impl EvaluationConfig {
    pub fn new(p: usize, holdout: usize, m: usize) -> Self {
        Self {
            p,
            holdout,
            mode: ForecastMode::Rolling,
            subset: (0..m.min(3)).collect(),
            hmc: HmcConfig::default(),
            minnesota_draws: 4000,
            max_score_draws: 1000,
            seed: 1,
        }
    }
}

/// Posterior draws of `(Σ, Φ)` from a fitted method.
#[derive(Clone, Debug)]
pub struct FittedMethod {
    pub label: String,
    pub models: Vec<VarModel>,
    /// Sampler output for the HMC-fitted methods.
    pub draws: Option<Draws>,
}

pub fn fit_method(method: &Method, train: &Trajectory, cfg: &EvaluationConfig) -> Result<FittedMethod> {
    let label = method.label();
    match method {
        Method::Stationary(spec) => {
            let post = Posterior::new(train, spec.clone(), cfg.p)?;
            let draws = sample_posterior(&post, &cfg.hmc)?;
            let models = draws.transformed_all()?.into_iter().map(|d| d.model).collect();
            Ok(FittedMethod {
                label,
                models,
                draws: Some(draws),
            })
        }
        Method::Minnesota(hyper) => {
            let post = fit_minnesota(train, cfg.p, hyper)?;
            Ok(FittedMethod {
                label,
                models: post.sample(cfg.minnesota_draws, cfg.seed)?,
                draws: None,
            })
        }
        Method::SemiConjugate { hyper, sigma } => {
            let post = SemiConjugatePosterior::new(train, cfg.p, hyper.clone(), sigma.clone())?;
            let draws = sample(&post, &cfg.hmc)?;
            let models = draws.iter().map(|t| post.decode(t)).collect::<Result<Vec<_>>>()?;
            Ok(FittedMethod {
                label,
                models,
                draws: Some(draws),
            })
        }
    }
}

/// Every `⌈n / k⌉`-th element, at most `k` of them.
fn thin<T: Clone>(xs: &[T], k: usize) -> Vec<T> {
    if xs.len() <= k || k == 0 {
        return xs.to_vec();
    }
    (0..k).map(|i| xs[i * xs.len() / k].clone()).collect()
}

/// Scores fitted draws on the last `cfg.holdout` points of `data`.
pub fn score_fitted(fitted: &FittedMethod, data: &Trajectory, cfg: &EvaluationConfig) -> Result<ScoreReport> {
    let origin = holdout_origin(data, cfg)?;
    let pr = stationarity_probability(&fitted.models)?;
    let models = if fitted.models.len() == 1 {
        // The sample scores need two predictive draws; one model gives as many as asked.
        vec![fitted.models[0].clone(); cfg.max_score_draws.max(2)]
    } else {
        thin(&fitted.models, cfg.max_score_draws)
    };
    let pred = predictive_from_models(&models, data, origin, cfg.holdout, cfg.mode, cfg.seed)?;
    score_predictive(&pred, data, &cfg.subset, &fitted.label, pr)
}

fn holdout_origin(data: &Trajectory, cfg: &EvaluationConfig) -> Result<usize> {
    if cfg.holdout == 0 || cfg.holdout + cfg.p >= data.len() {
        return Err(Error::InvalidConfig(format!(
            "holdout {} must be in 1..{} for n = {}",
            cfg.holdout,
            data.len().saturating_sub(cfg.p),
            data.len()
        )));
    }
    Ok(data.len() - cfg.holdout)
}

/// Fits `method` to all but the last `cfg.holdout` points, then scores the
/// held-back points.
pub fn evaluate(method: &Method, data: &Trajectory, cfg: &EvaluationConfig) -> Result<ScoreReport> {
    let origin = holdout_origin(data, cfg)?;
    let fitted = fit_method(method, &data.head(origin), cfg)?;
    score_fitted(&fitted, data, cfg)
}
