use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use statvar::prior::sample_prior;
use statvar::process::simulate;
use statvar::reparam::{a_to_p, reverse_map, MatrixSequence};
use statvar::{PacfSequence, SpdMatrix, VarModel};

use super::Outcome;
use crate::config::{matrix_from_rows, matrix_to_rows, RunConfig, SimulateSection};
use crate::data::write_trajectory;
use crate::error::{CliError, CliResult};
use crate::io::write_atomic;

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Trajectory CSV; the model used goes to a `.model.toml` sibling.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct ModelFile {
    sigma: Vec<Vec<f64>>,
    phi: Vec<Vec<Vec<f64>>>,
}

/// The explicit model in `sim`, or a draw from the configured prior.
pub fn simulation_model(cfg: &RunConfig, sim: &SimulateSection) -> CliResult<VarModel> {
    match (&sim.sigma, &sim.phi) {
        (Some(sigma), Some(phi)) => {
            let sigma = SpdMatrix::new(matrix_from_rows(sigma, "simulate.sigma")?)?;
            let phi = phi
                .iter()
                .enumerate()
                .map(|(s, rows)| matrix_from_rows(rows, &format!("simulate.phi[{s}]")))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(VarModel::new(sigma, phi)?)
        }
        (None, None) => {
            let m = sim
                .m
                .ok_or_else(|| CliError::ConfigInvalid("simulate.m is needed to draw a model from the prior".into()))?;
            let p = cfg.model.p;
            let spec = cfg.prior.to_spec(m, p)?;
            let point = sample_prior(&spec, m, p, sim.seed)?;
            let pacf = point.aseq.matrices().iter().map(a_to_p).collect::<statvar::Result<Vec<_>>>()?;
            Ok(reverse_map(&point.sigma, &PacfSequence::new(pacf)?)?.0)
        }
        _ => Err(CliError::ConfigInvalid("simulate.sigma and simulate.phi go together".into())),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Outcome> {
    let (mut cfg, _) = RunConfig::load(&args.config)?;
    let mut sim = cfg
        .simulate
        .take()
        .ok_or_else(|| CliError::ConfigInvalid("a [simulate] section is required".into()))?;
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }
    let model = simulation_model(&cfg, &sim)?;
    let y = simulate(&model, sim.n, sim.seed.wrapping_add(1))?;
    write_atomic(&args.out, |w| write_trajectory(&y, w))?;
    let file = ModelFile {
        sigma: matrix_to_rows(model.sigma().as_matrix()),
        phi: model.phi().iter().map(matrix_to_rows).collect(),
    };
    let text = toml::to_string(&file).expect("model serialises");
    write_atomic(&args.out.with_extension("model.toml"), |w| w.write_all(text.as_bytes()))?;
    println!("{} observations of {} series, spectral radius {:.4}", y.len(), y.dim(), model.spectral_radius());
    Ok(Outcome::Success)
}
