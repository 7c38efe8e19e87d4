use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use statvar::forecast::stationarity_probability;
use statvar::inference::{diagnostics, sample_posterior, GradientMode, ParameterSummary, Posterior};

use super::{Outcome, Overrides};
use crate::config::RunConfig;
use crate::data::{preprocess, Table};
use crate::draws::{write_draws, DrawsMeta, VERSION};
use crate::error::CliResult;
use crate::io::{sha256_hex, write_atomic};

/// R̂ above this is reported and turns the exit status into 3.
pub const RHAT_WARN: f64 = 1.05;

#[derive(Args, Clone, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Draws CSV; `.meta.toml` and `.summary.csv` siblings are written too.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn write_summary(rows: &[ParameterSummary], w: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["name", "mean", "sd", "rhat", "ess_bulk", "ess"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.mean.to_string(),
            r.sd.to_string(),
            r.rhat.to_string(),
            r.ess_bulk.to_string(),
            r.ess.to_string(),
        ])?;
    }
    w.flush()
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<Outcome> {
    let (mut cfg, config_text) = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg)?;
    let data_bytes = std::fs::read(&args.data).map_err(|e| crate::error::CliError::io(&args.data, e))?;
    let table = Table::parse(&data_bytes, &args.data)?;
    let (z, pre) = preprocess(&table, &cfg.data)?;
    cfg.validate_length(z.len())?;
    let (m, p) = (z.dim(), cfg.model.p);
    let train = z.head(z.len() - cfg.data.holdout);
    let spec = cfg.prior.to_spec(m, p)?;
    let hmc = cfg.hmc_config()?;
    let gradient = cfg.gradient()?;

    let post = Posterior::new(&train, spec.clone(), p)?.with_gradient_mode(gradient);
    let draws = sample_posterior(&post, &hmc)?;
    let summary = diagnostics(&draws)?;
    let models = draws.transformed_all()?.into_iter().map(|d| d.model).collect::<Vec<_>>();
    let pr_stat = stationarity_probability(&models)?;
    let max_rhat = summary.iter().map(|s| s.rhat).fold(f64::NEG_INFINITY, f64::max);
    let min_ess = summary.iter().map(|s| s.ess_bulk).fold(f64::INFINITY, f64::min);

    let meta = DrawsMeta {
        version: VERSION.into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        data_sha256: sha256_hex(&data_bytes),
        seed: hmc.seed,
        prior: spec.kind.name().into(),
        m,
        p,
        n_train: train.len(),
        holdout: cfg.data.holdout,
        chains: hmc.chains,
        iterations: hmc.iterations,
        warmup: hmc.warmup,
        gradient: match gradient {
            GradientMode::Automatic => "ad",
            GradientMode::FiniteDifference => "fd",
        }
        .into(),
        divergences: draws.divergences(),
        max_rhat,
        min_ess_bulk: min_ess,
        stationarity_probability: pr_stat,
        preprocess: pre,
    };
    write_atomic(&args.out, |w| write_draws(&draws, w))?;
    write_atomic(&DrawsMeta::path_for(&args.out), |w| w.write_all(meta.to_toml().as_bytes()))?;
    write_atomic(&args.out.with_extension("summary.csv"), |w| write_summary(&summary, w))?;

    println!(
        "{} chains x {} draws, {} coordinates; divergences {}, mean accept {:.3}",
        draws.n_chains(),
        draws.n_draws(),
        draws.dim(),
        draws.divergences(),
        draws.mean_accept_stat()
    );
    println!("max R-hat {max_rhat:.4}, min bulk ESS {min_ess:.0}, Pr(stationary) {pr_stat:.4}");
    let bad: Vec<&ParameterSummary> = summary.iter().filter(|s| !(s.rhat <= RHAT_WARN)).collect();
    if bad.is_empty() {
        return Ok(Outcome::Success);
    }
    eprintln!("warning: {} coordinates have R-hat above {RHAT_WARN}:", bad.len());
    for s in bad {
        eprintln!("  {} R-hat {:.4} ESS {:.0}", s.name, s.rhat, s.ess_bulk);
    }
    eprintln!("warning: run longer chains (--iters, --warmup) before using these draws");
    Ok(Outcome::Warnings)
}
