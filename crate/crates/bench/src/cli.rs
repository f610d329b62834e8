//! Command-line parsing and config resolution.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, PlantChoice};
use crate::error::{BenchError, Result};
use crate::variant::Variant;

#[derive(Debug, Parser)]
#[command(name = "deepc-bench", version, about = "Equivalence checks, Monte Carlo benchmarks and sweeps for the DeePC variants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Certify that equivalent formulations return the same solution.
    Equivalence,
    /// Realized cost of every variant over seeded trials.
    Benchmark,
    /// Realized cost over the lambda1 x lambda2 grids.
    Sweep,
    /// Benchmark on the Lotka-Volterra plant for each nonlinearity level.
    Nonlinearity,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON config file; defaults to the preset of the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated variant names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub lambda1: Option<f64>,
    #[arg(long, global = true)]
    pub lambda2: Option<f64>,
    #[arg(long = "lambda-y", alias = "lambday", global = true)]
    pub lambda_y: Option<f64>,
    #[arg(long, global = true)]
    pub noise_var: Option<f64>,
    /// Comma-separated Lotka-Volterra interpolation weights.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(names) = &self.variants {
            cfg.variants = names.iter().map(|n| n.parse()).collect::<Result<Vec<Variant>>>()?;
        }
        if let Some(v) = self.lambda1 {
            cfg.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            cfg.lambda2 = v;
        }
        if let Some(v) = self.lambda_y {
            cfg.lambda_y = v;
        }
        if let Some(v) = self.noise_var {
            cfg.noise_var = v;
        }
        if let Some(list) = &self.eps {
            let first = *list.first().ok_or_else(|| BenchError::Config("--eps needs at least one value".into()))?;
            cfg.eps_list = list.clone();
            if let PlantChoice::LotkaVolterra { .. } = cfg.plant {
                cfg.plant = PlantChoice::LotkaVolterra { eps: first };
            }
        }
        Ok(cfg)
    }
}

/// Config file or command preset, then flag overrides, then validation.
pub fn resolve(command: Command, overrides: &Overrides) -> Result<ExperimentConfig> {
    let base = match &overrides.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if command == Command::Nonlinearity => ExperimentConfig::lotka_volterra(),
        None => ExperimentConfig::triple_mass(),
    };
    let cfg = overrides.apply(base)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("deepc-bench").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_the_preset() {
        let cli = parse(&["benchmark", "--seed", "9", "--trials", "3", "--variants", "hybrid,svd-iter", "--lambda-y", "50", "--noise-var", "0"]);
        assert_eq!(cli.command, Command::Benchmark);
        let cfg = resolve(cli.command, &cli.overrides).unwrap();
        assert_eq!((cfg.seed, cfg.trials, cfg.lambda_y, cfg.noise_var), (9, 3, 50.0, 0.0));
        assert_eq!(cfg.variants, vec![Variant::Hybrid, Variant::SvdIter]);
    }

    #[test]
    fn nonlinearity_uses_the_lotka_volterra_preset() {
        let cli = parse(&["nonlinearity", "--eps", "0.5,1"]);
        let cfg = resolve(cli.command, &cli.overrides).unwrap();
        assert_eq!(cfg.plant, PlantChoice::LotkaVolterra { eps: 0.5 });
        assert_eq!(cfg.eps_list, vec![0.5, 1.0]);
        assert_eq!(cfg.horizon, 60);
    }

    #[test]
    fn invalid_overrides_are_rejected() {
        let cli = parse(&["sweep", "--variants", "nope"]);
        assert!(resolve(cli.command, &cli.overrides).is_err());
        let cli = parse(&["sweep", "--trials", "0"]);
        assert!(resolve(cli.command, &cli.overrides).is_err());
    }
}
