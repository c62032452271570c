use std::path::PathBuf;

use krig_core::inference::{map, mle, Bandwidth, ModeCoordinates};
use krig_core::kernels::{KernelFamily, MaternSpec, Parametrization};
use krig_core::objective::KrigingModel;
use krig_core::pigs::{self, diagnostics, SamplerConfig, UpdateKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{json_bytes, read_design, read_observations, rows_csv, write_atomic};
use crate::manifest::RunClock;

#[derive(clap::Args)]
pub struct Args {
    /// Design points: CSV with header x1..xr.
    design: PathBuf,
    /// Observations: CSV with header y.
    y: PathBuf,
    /// Matérn smoothness.
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value = "geometric")]
    family: KernelFamily,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 0.4)]
    proposal_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinates the chain moves in: mu or theta.
    #[arg(long, default_value = "mu")]
    space: String,
    /// Conditional update: metropolis or grid.
    #[arg(long, default_value = "metropolis")]
    update: String,
    #[arg(long, default_value_t = 8)]
    mle_starts: usize,
    /// Output directory.
    #[arg(long, default_value = "fit")]
    out: PathBuf,
    /// Record timestamps and wall time in the manifest.
    #[arg(long)]
    timestamps: bool,
}

/// Everything `predict` needs to rebuild the model.
#[derive(Serialize, Deserialize)]
pub struct FitRecord {
    pub design: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub spec: MaternSpec,
    pub theta_mle: Vec<f64>,
    pub theta_map: Option<Vec<f64>>,
    pub acceptance: Vec<f64>,
}

pub const FIT_FILE: &str = "fit.json";
pub const DRAWS_FILE: &str = "draws.csv";

fn sampler_config(args: &Args) -> CliResult<SamplerConfig> {
    let space = match args.space.as_str() {
        "mu" => Parametrization::Mu,
        "theta" => Parametrization::Theta,
        other => return Err(CliError::Parse(format!("unknown space '{other}'"))),
    };
    let update = match args.update.as_str() {
        "metropolis" => UpdateKind::Metropolis,
        "grid" => UpdateKind::GridInversion,
        other => return Err(CliError::Parse(format!("unknown update '{other}'"))),
    };
    let cfg = SamplerConfig {
        n_samples: args.samples,
        burn_in: args.burn_in,
        thin: args.thin,
        proposal_sd: args.proposal_sd,
        seed: args.seed,
        space,
        update,
        ..SamplerConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(cfg)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

pub fn run(args: Args) -> CliResult<()> {
    let clock = RunClock::start(args.timestamps);
    let design = read_design(&args.design)?;
    let y = read_observations(&args.y)?;
    let spec = MaternSpec::new(args.family, args.nu, design.r()).map_err(|e| CliError::Parse(e.to_string()))?;
    let model = KrigingModel::new(design.clone(), spec, y.clone()).map_err(|e| CliError::Parse(e.to_string()))?;
    let cfg = sampler_config(&args)?;

    let sample = pigs::run(&model, &cfg)?;
    let est_mle = mle(&model, args.mle_starts, args.seed)?;
    let est_map = if sample.len() >= 100 {
        Some(map(&sample, Bandwidth::Auto, ModeCoordinates::LogTheta)?)
    } else {
        log::warn!("{} draws; the posterior mode needs at least 100", sample.len());
        None
    };
    println!("MLE theta: [{}]", fmt_vec(est_mle.estimate.values()));
    match &est_map {
        Some(m) => println!("MAP theta: [{}]", fmt_vec(m.estimate.values())),
        None => println!("MAP theta: unavailable"),
    }
    println!("acceptance rates: [{}]", fmt_vec(&sample.acceptance));

    let dir = &args.out;
    let draws_path = dir.join(DRAWS_FILE);
    write_atomic(&draws_path, &rows_csv("mu", design.r(), &sample.mu_draws())?)?;
    let diag_path = dir.join("diagnostics.json");
    let diag = if sample.len() >= 10 {
        serde_json::to_value(diagnostics(&sample)?)?
    } else {
        serde_json::json!({ "n": sample.len(), "axes": null })
    };
    write_atomic(&diag_path, &json_bytes(&diag)?)?;
    let record = FitRecord {
        design: design.rows().map(|p| p.to_vec()).collect(),
        y,
        spec,
        theta_mle: est_mle.estimate.values().to_vec(),
        theta_map: est_map.map(|m| m.estimate.values().to_vec()),
        acceptance: sample.acceptance.clone(),
    };
    let fit_path = dir.join(FIT_FILE);
    write_atomic(&fit_path, &json_bytes(&record)?)?;
    let outputs = vec![draws_path, diag_path, fit_path];
    clock.write_manifest(&dir.join("manifest.json"), "fit", &cfg, &outputs)
}
