mod fit;
mod score;
mod simulate;
mod transform;

use clap::{Args, ValueEnum};

pub use fit::{cmd_fit, FitArgs};
pub use score::{cmd_score, ScoreArgs};
pub use simulate::{cmd_simulate, SimulateArgs};
pub use transform::{cmd_transform, transform_table, Direction, TransformArgs};

use crate::config::RunConfig;
use crate::error::CliResult;

/// How a successful command finished.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Finished, but the output deserves a second look.
    Warnings,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::Warnings => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rolling,
    FixedOrigin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GradArg {
    Ad,
    Fd,
}

/// Command-line values that take precedence over the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Iterations per chain, warmup included.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub holdout: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub grad: Option<GradArg>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(seed) = self.seed {
            cfg.hmc.seed = Some(seed);
            cfg.score.seed = seed;
            if let Some(sim) = &mut cfg.simulate {
                sim.seed = seed;
            }
        }
        if let Some(c) = self.chains {
            cfg.hmc.chains = Some(c);
        }
        if let Some(i) = self.iters {
            cfg.hmc.iterations = Some(i);
        }
        if let Some(w) = self.warmup {
            cfg.hmc.warmup = Some(w);
        }
        if let Some(h) = self.holdout {
            cfg.data.holdout = h;
        }
        if let Some(mode) = self.mode {
            cfg.score.mode = match mode {
                ModeArg::Rolling => "rolling",
                ModeArg::FixedOrigin => "fixed-origin",
            }
            .into();
        }
        if let Some(g) = self.grad {
            cfg.hmc.gradient = Some(
                match g {
                    GradArg::Ad => "ad",
                    GradArg::Fd => "fd",
                }
                .into(),
            );
        }
        cfg.validate()
    }
}
