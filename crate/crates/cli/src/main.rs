use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use qrpolicy::config::{Experiment, ExperimentConfig, Scale};
use qrpolicy::plotdata::plotdata;
use qrpolicy_core::{Architecture, DistributionSpec};

#[derive(Parser)]
#[command(name = "qrpolicy", version, about = "Quantile-regression policy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    scale: Option<Scale>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit monotonic nets to the benchmark distributions.
    Fitbench {
        #[command(flatten)]
        run: RunArgs,
        /// Learning rates to sweep.
        #[arg(long, value_delimiter = ',')]
        lr: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        arch: Option<Vec<Architecture>>,
        #[arg(long, value_delimiter = ',')]
        dist: Option<Vec<DistributionSpec>>,
    },
    /// Continuous Rock-Paper-Scissors against a retrained counter policy.
    Rps {
        #[command(flatten)]
        run: RunArgs,
    },
    /// The Choice memory game, QRDRL against PPO.
    Choice {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Mean/std bands from a finished results directory.
    Plotdata { dir: PathBuf },
}

fn load(experiment: Experiment, args: RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let mut c = ExperimentConfig::from_json_file(path)?;
            c.experiment = experiment;
            c
        }
        None => ExperimentConfig::new(experiment),
    };
    if let Some(seeds) = args.seeds {
        config.seeds = seeds;
    }
    if let Some(scale) = args.scale {
        config.scale = scale;
    }
    config.out = args.out.unwrap_or_else(|| PathBuf::from("results").join(experiment.name()));
    Ok(config)
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    let config = match cli.command {
        Command::Plotdata { dir } => {
            let report = plotdata(&dir).with_context(|| format!("building plot data in {}", dir.display()))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            return Ok(0);
        }
        Command::Fitbench { run, lr, arch, dist } => {
            let mut config = load(Experiment::Fitbench, run)?;
            if let Some(lr) = lr {
                config.fitbench.lrs = lr;
            }
            if let Some(arch) = arch {
                config.fitbench.architectures = arch;
            }
            if let Some(dist) = dist {
                config.fitbench.distributions = dist;
            }
            config
        }
        Command::Rps { run } => load(Experiment::Rps, run)?,
        Command::Choice { run } => load(Experiment::Choice, run)?,
    };
    println!(
        "{} on seeds {:?} -> {}",
        config.experiment,
        config.seeds,
        config.out.display()
    );
    let report = qrpolicy::run(&config)?;
    for (series, mean) in &report.summary.mean {
        println!("{series}: {mean:.4} ± {:.4}", report.summary.std[series]);
    }
    for a in &report.aborted {
        eprintln!("aborted: {a}");
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
