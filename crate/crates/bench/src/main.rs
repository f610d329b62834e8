use std::process::ExitCode;

use clap::Parser;

use deepc_bench::cli::{self, Cli, Command};
use deepc_bench::commands;
use deepc_bench::ExperimentConfig;

fn run(command: Command, cfg: &ExperimentConfig) -> deepc_bench::Result<bool> {
    let dir = cfg.out.as_path();
    match command {
        Command::Equivalence => {
            let report = commands::equivalence(cfg)?;
            commands::write_equivalence(cfg, &report, dir)?;
            for regime in ["noise-free", "hybrid-svd", "large-ridge", "spc-predictor", "svd-reduction"] {
                let failed = report.regime(regime).filter(|c| !c.passed()).count();
                println!("{regime:14} worst deviation {:.3e}  failed {failed}", report.worst(regime));
            }
            Ok(report.passed())
        }
        Command::Benchmark => {
            let report = commands::benchmark(cfg)?;
            commands::write_benchmark(cfg, &report, dir)?;
            print!("{}", commands::benchmark_csv(cfg, &report));
            Ok(true)
        }
        Command::Sweep => {
            let report = commands::sweep(cfg)?;
            commands::write_sweep(cfg, &report, dir)?;
            println!("{} cells written to {}", report.cells.len(), dir.join("sweep.csv").display());
            Ok(true)
        }
        Command::Nonlinearity => {
            let report = commands::nonlinearity(cfg)?;
            commands::write_nonlinearity(cfg, &report, dir)?;
            print!("{}", commands::nonlinearity_csv(cfg, &report));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let outcome = cli::resolve(args.command, &args.overrides).and_then(|cfg| run(args.command, &cfg));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("equivalence check failed; see equivalence.csv");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
