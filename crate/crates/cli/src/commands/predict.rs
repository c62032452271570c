use std::path::PathBuf;

use krig_core::inference::{predict_mixture, predict_plugin, prediction_interval, PredictiveDist};
use krig_core::kernels::{fmt_real, DesignSet, LengthVector};
use krig_core::objective::KrigingModel;

use super::fit::{FitRecord, DRAWS_FILE, FIT_FILE};
use crate::error::{CliError, CliResult};
use crate::io::{read_points, read_rows_csv, write_atomic};

#[derive(clap::Args)]
pub struct Args {
    /// Output directory of `fit`.
    fit: PathBuf,
    /// Prediction points: CSV with header x1..xr.
    x0: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Comma-separated subset of mle, map, fpd.
    #[arg(long, default_value = "mle,map,fpd", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value = "predictions.csv")]
    out: PathBuf,
}

type Predictor<'a> = Box<dyn Fn(&[f64]) -> krig_core::Result<PredictiveDist> + 'a>;

pub fn run(args: Args) -> CliResult<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Parse(format!("level must lie in (0, 1), got {}", args.level)));
    }
    let fit_path = args.fit.join(FIT_FILE);
    let text = std::fs::read_to_string(&fit_path).map_err(|e| CliError::parse(fit_path.display(), e))?;
    let fit: FitRecord = serde_json::from_str(&text).map_err(|e| CliError::parse(fit_path.display(), e))?;
    let design = DesignSet::new(fit.design.clone()).map_err(|e| CliError::parse(fit_path.display(), e))?;
    let model = KrigingModel::new(design, fit.spec, fit.y.clone()).map_err(|e| CliError::parse(fit_path.display(), e))?;
    let points = read_points(&args.x0)?;
    if let Some(p) = points.iter().find(|p| p.len() != model.r()) {
        return Err(CliError::Parse(format!("prediction point has {} coordinates, expected {}", p.len(), model.r())));
    }

    let model = &model;
    let mut methods: Vec<(&str, Predictor)> = Vec::new();
    for m in &args.methods {
        match m.trim() {
            "mle" => {
                let l = LengthVector::theta(fit.theta_mle.clone())?;
                methods.push(("MLE", Box::new(move |x: &[f64]| predict_plugin(model, &l, x))));
            }
            "map" => {
                let t = fit
                    .theta_map
                    .clone()
                    .ok_or_else(|| CliError::Parse("the fit has no posterior mode".into()))?;
                let l = LengthVector::theta(t)?;
                methods.push(("MAP", Box::new(move |x: &[f64]| predict_plugin(model, &l, x))));
            }
            "fpd" => {
                let draws_path = args.fit.join(DRAWS_FILE);
                let draws = read_rows_csv(&draws_path)?
                    .into_iter()
                    .map(LengthVector::mu)
                    .collect::<krig_core::Result<Vec<_>>>()
                    .map_err(|e| CliError::parse(draws_path.display(), e))?;
                methods.push(("FPD", Box::new(move |x: &[f64]| predict_mixture(model, &draws, x))));
            }
            other => return Err(CliError::Parse(format!("unknown method '{other}'"))),
        }
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=model.r()).map(|j| format!("x{j}")).collect();
    header.extend(["method", "location", "lo", "hi"].map(String::from));
    w.write_record(&header)?;
    for x in &points {
        for (name, predict) in &methods {
            let dist = predict(x)?;
            let (lo, hi) = prediction_interval(&dist, args.level)?;
            let mut row: Vec<String> = x.iter().map(|v| fmt_real(*v)).collect();
            row.push((*name).to_string());
            row.extend([dist.mean(), lo, hi].map(fmt_real));
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    write_atomic(&args.out, &bytes)
}
