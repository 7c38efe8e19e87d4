use std::path::PathBuf;

use clap::Args;
use statvar::forecast::{
    fit_method, match_semi_conjugate, score_fitted, write_reports_csv, EvaluationConfig, FittedMethod, Method,
    ReportTable, ScoreReport,
};
use statvar::inference::Posterior;
use statvar::prior::InverseWishart;
use statvar::{Error, Trajectory};

use super::{Outcome, Overrides};
use crate::config::RunConfig;
use crate::data::{preprocess, Table};
use crate::draws::{DrawsMeta, DrawsTable};
use crate::error::{CliError, CliResult};
use crate::io::write_atomic;

#[derive(Args, Clone, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// The full series; the last `holdout` points are scored.
    #[arg(long)]
    pub data: PathBuf,
    /// Draws written by `statvar fit` on the same config and data.
    #[arg(long)]
    pub draws: PathBuf,
    /// Report CSV, one row per prior and baseline.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn mismatch(msg: String) -> CliError {
    Error::DimensionMismatch(msg).into()
}

/// Scores the stationary-prior draws and every configured baseline.
pub fn score_reports(cfg: &RunConfig, z: &Trajectory, draws: &DrawsTable) -> CliResult<Vec<ScoreReport>> {
    cfg.validate_length(z.len())?;
    if cfg.data.holdout == 0 {
        return Err(CliError::ConfigInvalid("scoring needs data.holdout (or --holdout) of at least 1".into()));
    }
    let (m, p) = (z.dim(), cfg.model.p);
    let spec = cfg.prior.to_spec(m, p)?;
    let post = Posterior::prior_only(spec.clone(), m, p)?;
    let names = post.layout().names();
    if draws.names != names {
        return Err(mismatch(format!(
            "draws have {} coordinates ({}...), the {} prior with m = {m}, p = {p} has {} ({}...)",
            draws.names.len(),
            draws.names.first().map_or("", String::as_str),
            spec.kind.name(),
            names.len(),
            names[0]
        )));
    }
    let models = draws
        .theta
        .iter()
        .map(|t| post.transformed(t).map(|d| d.model))
        .collect::<statvar::Result<Vec<_>>>()?;

    let eval = EvaluationConfig {
        p,
        holdout: cfg.data.holdout,
        mode: cfg.mode()?,
        subset: cfg.subset(m)?,
        hmc: cfg.hmc_config()?,
        minnesota_draws: cfg.score.minnesota_draws,
        max_score_draws: cfg.score.max_score_draws,
        seed: cfg.score.seed,
    };
    let stationary = FittedMethod {
        label: spec.kind.name().into(),
        models,
        draws: None,
    };
    let mut reports = vec![score_fitted(&stationary, z, &eval)?];
    let train = z.head(z.len() - eval.holdout);
    for name in &cfg.score.baselines {
        let method = match name.as_str() {
            "minnesota" => Method::Minnesota(cfg.minnesota()),
            _ => Method::SemiConjugate {
                hyper: match_semi_conjugate(&spec, m, p, cfg.score.match_draws, cfg.score.seed)?,
                sigma: InverseWishart::default_for(m),
            },
        };
        let fitted = fit_method(&method, &train, &eval)?;
        reports.push(score_fitted(&fitted, z, &eval)?);
    }
    Ok(reports)
}

pub fn cmd_score(args: &ScoreArgs) -> CliResult<Outcome> {
    let (mut cfg, _) = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg)?;
    let table = Table::read(&args.data)?;
    let (z, _) = preprocess(&table, &cfg.data)?;
    let draws = DrawsTable::read(&args.draws)?;
    if let Some(meta) = DrawsMeta::read_for(&args.draws)? {
        let n_train = z.len().saturating_sub(cfg.data.holdout);
        if (meta.m, meta.p, meta.n_train) != (z.dim(), cfg.model.p, n_train) {
            return Err(mismatch(format!(
                "draws were fitted with m = {}, p = {} on {} points; this run has m = {}, p = {} and {n_train} points",
                meta.m,
                meta.p,
                meta.n_train,
                z.dim(),
                cfg.model.p
            )));
        }
    }
    let reports = score_reports(&cfg, &z, &draws)?;
    let mut csv = Vec::new();
    write_reports_csv(&reports, &mut csv)?;
    write_atomic(&args.out, |w| w.write_all(&csv))?;
    print!("{}", ReportTable(&reports));
    let underflows: usize = reports.iter().map(|r| r.log_score_underflows).sum();
    if underflows > 0 {
        eprintln!("warning: {underflows} log scores underflowed and are reported as inf");
        return Ok(Outcome::Warnings);
    }
    Ok(Outcome::Success)
}
