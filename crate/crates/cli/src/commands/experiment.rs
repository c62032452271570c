use std::path::PathBuf;

use krig_core::experiments::{
    ackley_experiment, coverage_experiment, rmse_experiment, write_result_files, AckleyConfig, ExperimentConfig,
    ExperimentKind, ExperimentResult,
};
use serde::Serialize;
use toml::Value;

use crate::config::{apply_ackley, apply_experiment, parse_override, read_table};
use crate::error::{CliError, CliResult};
use crate::manifest::RunClock;

#[derive(Clone, Copy, clap::ValueEnum)]
pub enum Kind {
    Rmse,
    Coverage,
    Ackley,
}

#[derive(clap::Args)]
pub struct Args {
    kind: Kind,
    /// Flat key = value configuration file.
    config: Option<PathBuf>,
    /// Full-size replication counts and sample sizes.
    #[arg(long = "paper-scale")]
    full_scale: bool,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "KRIG_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Record timestamps and wall time in the manifest.
    #[arg(long)]
    timestamps: bool,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Resolved {
    Gp(ExperimentConfig),
    Ackley(AckleyConfig),
}

fn entries(args: &Args) -> CliResult<Vec<(String, Value)>> {
    let mut out = Vec::new();
    if let Some(path) = &args.config {
        out.extend(read_table(path)?);
    }
    for item in &args.overrides {
        out.push(parse_override(item)?);
    }
    Ok(out)
}

fn print_summary(result: &ExperimentResult) {
    println!("{:<6} {:>12} {:>10} {:>12}", "method", "rmse", "coverage", "mean_length");
    for row in &result.summary {
        println!("{:<6} {:>12.6} {:>10.4} {:>12.6}", row.method, row.rmse, row.coverage, row.mean_length);
    }
    if result.kind == ExperimentKind::Rmse {
        println!("relative RMSE reduction of MAP over MLE: {:.4}", result.rmse_reduction());
    }
    if result.failures > 0 {
        println!("{} replication(s) failed", result.failures);
    }
}

pub fn run(args: Args) -> CliResult<()> {
    let clock = RunClock::start(args.timestamps);
    let entries = entries(&args)?;
    let (result, resolved) = match args.kind {
        Kind::Rmse | Kind::Coverage => {
            let mut cfg = ExperimentConfig::desk(vec![0.5, 0.5, 0.5]);
            if args.full_scale {
                cfg = cfg.full_scale();
            }
            apply_experiment(&mut cfg, &entries)?;
            cfg.validate().map_err(|e| CliError::Parse(e.to_string()))?;
            let result = match args.kind {
                Kind::Rmse => rmse_experiment(&cfg, args.workers)?,
                _ => coverage_experiment(&cfg, args.workers)?,
            };
            (result, Resolved::Gp(cfg))
        }
        Kind::Ackley => {
            let mut cfg = AckleyConfig::desk(3);
            if args.full_scale {
                cfg = AckleyConfig {
                    n: 100,
                    sampler: krig_core::pigs::SamplerConfig {
                        n_samples: 1000,
                        ..cfg.sampler
                    },
                    ..AckleyConfig::desk(10)
                };
            }
            apply_ackley(&mut cfg, &entries)?;
            (ackley_experiment(&cfg, args.workers)?, Resolved::Ackley(cfg))
        }
    };
    print_summary(&result);
    let outputs = write_result_files(&result, &args.out)?;
    let command = match args.kind {
        Kind::Rmse => "experiment rmse",
        Kind::Coverage => "experiment coverage",
        Kind::Ackley => "experiment ackley",
    };
    clock.write_manifest(&args.out.join("manifest.json"), command, &resolved, &outputs)
}
