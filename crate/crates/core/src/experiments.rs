//! Designs, Gaussian-process simulation, and the replication studies comparing
//! estimators and prediction intervals.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{fisher_distance, map, mle, prediction_interval, Bandwidth, Component, Kriger, ModeCoordinates, PredictiveDist, PredictiveKind};
use crate::kernels::{cholesky_with_jitter, corr_table, cross_corr, fmt_real, DesignSet, KernelFamily, LengthVector, MaternSpec};
use crate::objective::KrigingModel;
use crate::pigs::{self, PosteriorSample, SamplerConfig};
use crate::rng::{derive_seed, rng_from_seed, substream};

/// `n` points in `[0,1]^r`, one per stratum `[(j-1)/n, j/n)` along every axis.
pub fn lhs_points(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; r]; n];
    for j in 0..r {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (k, row) in rows.iter_mut().enumerate() {
            let u: f64 = rng.random();
            row[j] = (perm[k] as f64 + u) / n as f64;
        }
    }
    rows
}

pub fn uniform_design(n: usize, r: usize, seed: u64) -> Result<DesignSet> {
    let mut rng = rng_from_seed(seed);
    DesignSet::new((0..n).map(|_| (0..r).map(|_| rng.random::<f64>()).collect()).collect())
}

pub fn lhs_design(n: usize, r: usize, seed: u64) -> Result<DesignSet> {
    DesignSet::new(lhs_points(n, r, &mut rng_from_seed(seed)))
}

fn min_pair_distance(rows: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..rows.len() {
        for l in 0..k {
            best = best.min(crate::kernels::euclidean(&rows[k], &rows[l]));
        }
    }
    best
}

/// Hill climbing on swaps of one coordinate between two points; a swap is kept
/// when the minimum distance does not decrease. Swaps preserve stratification.
pub fn maximin_optimize(design: &DesignSet, iterations: usize, seed: u64) -> Result<DesignSet> {
    let mut rows: Vec<Vec<f64>> = design.rows().map(|p| p.to_vec()).collect();
    let n = rows.len();
    if n < 3 {
        return Ok(design.clone());
    }
    let mut rng = rng_from_seed(seed);
    let mut current = min_pair_distance(&rows);
    for _ in 0..iterations {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n - 1);
        let b = if b >= a { b + 1 } else { b };
        let j = rng.random_range(0..design.r());
        let (va, vb) = (rows[a][j], rows[b][j]);
        rows[a][j] = vb;
        rows[b][j] = va;
        let d = min_pair_distance(&rows);
        if d >= current {
            current = d;
        } else {
            rows[a][j] = va;
            rows[b][j] = vb;
        }
    }
    DesignSet::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Uniform,
    Lhs,
    MaximinLhs,
}

impl std::str::FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "lhs" => Ok(Self::Lhs),
            "maximin_lhs" | "maximin" => Ok(Self::MaximinLhs),
            other => Err(Error::Invalid(format!("unknown design kind '{other}'"))),
        }
    }
}

pub fn make_design(kind: DesignKind, n: usize, r: usize, seed: u64) -> Result<DesignSet> {
    match kind {
        DesignKind::Uniform => uniform_design(n, r, seed),
        DesignKind::Lhs => lhs_design(n, r, seed),
        DesignKind::MaximinLhs => maximin_optimize(&lhs_design(n, r, seed)?, 10 * n * r, derive_seed(seed, 1)),
    }
}

/// Zero-mean Gaussian-process values at the design points.
pub fn simulate_gp(design: &DesignSet, spec: &MaternSpec, sigma2: f64, theta: &LengthVector, seed: u64) -> Result<Vec<f64>> {
    if !(sigma2 >= 0.0) {
        return Err(Error::Domain(format!("variance must be nonnegative, got {sigma2}")));
    }
    let sigma = corr_table(spec, design, &theta.mu_values())?;
    let (l, _) = cholesky_with_jitter(&sigma)?;
    let mut rng = rng_from_seed(seed);
    let z = DVector::from_iterator(design.n(), (0..design.n()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok((l * z * sigma2.sqrt()).iter().copied().collect())
}

/// Square root of a symmetric positive semidefinite matrix, by Cholesky when
/// possible and by eigen-decomposition with clipped eigenvalues otherwise.
fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Ok((l, _)) = cholesky_with_jitter(m) {
        return l;
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut v = eig.eigenvectors;
    for (c, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        v.column_mut(c).scale_mut(s);
    }
    v
}

/// Joint draw of the process at `test_points` given the observations `y`.
pub fn simulate_conditional(
    design: &DesignSet,
    y: &[f64],
    test_points: &[Vec<f64>],
    spec: &MaternSpec,
    sigma2: f64,
    theta: &LengthVector,
    seed: u64,
) -> Result<Vec<f64>> {
    let mu = theta.mu_values();
    let sigma = corr_table(spec, design, &mu)?;
    let (l, _) = cholesky_with_jitter(&sigma)?;
    let n0 = test_points.len();
    let mut k0 = DMatrix::zeros(design.n(), n0);
    for (c, x) in test_points.iter().enumerate() {
        k0.set_column(c, &cross_corr(spec, design, theta, x)?);
    }
    let w = l
        .solve_lower_triangular(&k0)
        .ok_or(Error::NotPositiveDefinite)?;
    let yw = l
        .solve_lower_triangular(&DVector::from_column_slice(y))
        .ok_or(Error::NotPositiveDefinite)?;
    let mean = w.transpose() * yw;
    let test = DesignSet::new(test_points.to_vec())?;
    let k00 = corr_table(spec, &test, &mu)?;
    let cov = (k00 - w.transpose() * &w) * sigma2;
    let root = psd_factor(&cov);
    let mut rng = rng_from_seed(seed);
    let z = DVector::from_iterator(root.ncols(), (0..root.ncols()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok((mean + root * z).iter().copied().collect())
}

/// Ackley function.
pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * std::f64::consts::PI * v).cos()).sum::<f64>() / d;
    20.0 + std::f64::consts::E - 20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub true_theta: Vec<f64>,
    pub true_sigma2: f64,
    pub n: usize,
    pub n0: usize,
    pub m: usize,
    pub design_kind: DesignKind,
    pub spec: MaternSpec,
    pub sampler: SamplerConfig,
    pub mle_starts: usize,
    pub level: f64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Small-scale defaults for the given true lengths.
    pub fn desk(true_theta: Vec<f64>) -> Self {
        let r = true_theta.len();
        Self {
            true_theta,
            true_sigma2: 1.0,
            n: 30,
            n0: 100,
            m: 50,
            design_kind: DesignKind::Uniform,
            spec: MaternSpec {
                family: KernelFamily::Geometric,
                nu: 2.5,
                r,
            },
            sampler: SamplerConfig::default(),
            mle_starts: 8,
            level: 0.95,
            master_seed: 0,
        }
    }

    /// Full-scale replication counts and sample sizes.
    pub fn full_scale(mut self) -> Self {
        self.m = 500;
        self.sampler.n_samples = 1000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_theta.len() != self.spec.r {
            return Err(Error::Shape("true lengths do not match the kernel dimension".into()));
        }
        if self.true_theta.iter().any(|t| !(*t > 0.0)) || !(self.true_sigma2 > 0.0) {
            return Err(Error::Domain("true lengths and variance must be positive".into()));
        }
        if self.n < 2 || self.m == 0 {
            return Err(Error::Invalid("need at least two design points and one replication".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Domain(format!("level must lie in (0, 1), got {}", self.level)));
        }
        self.sampler.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckleyConfig {
    pub d: usize,
    pub n: usize,
    pub n0: usize,
    pub m: usize,
    pub design_kind: DesignKind,
    pub spec: MaternSpec,
    pub sampler: SamplerConfig,
    pub mle_starts: usize,
    pub level: f64,
    pub master_seed: u64,
}

impl AckleyConfig {
    pub fn desk(d: usize) -> Self {
        Self {
            d,
            n: 40,
            n0: 1000,
            m: 1,
            design_kind: DesignKind::Lhs,
            spec: MaternSpec {
                family: KernelFamily::Geometric,
                nu: 2.5,
                r: d,
            },
            sampler: SamplerConfig {
                n_samples: 300,
                ..SamplerConfig::default()
            },
            mle_starts: 8,
            level: 0.95,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rmse,
    Coverage,
    Ackley,
}

/// Interval families, in reporting order.
pub const METHODS: [&str; 4] = ["True", "MLE", "MAP", "FPD"];

/// Outcome of one replication. Entries that do not apply are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub error: Option<String>,
    pub theta_mle: Vec<f64>,
    pub theta_map: Vec<f64>,
    pub err_mle: f64,
    pub err_map: f64,
    /// Coverage per method, ordered as [`METHODS`].
    pub coverage: [f64; 4],
    pub mean_length: [f64; 4],
    pub acceptance: Vec<f64>,
}

impl ReplicationRecord {
    fn failed(replication: usize, seed: u64, r: usize, e: &Error) -> Self {
        Self {
            replication,
            seed,
            error: Some(e.to_string()),
            theta_mle: vec![f64::NAN; r],
            theta_map: vec![f64::NAN; r],
            err_mle: f64::NAN,
            err_map: f64::NAN,
            coverage: [f64::NAN; 4],
            mean_length: [f64::NAN; 4],
            acceptance: vec![f64::NAN; r],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub rmse: f64,
    pub coverage: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub r: usize,
    pub records: Vec<ReplicationRecord>,
    pub summary: Vec<SummaryRow>,
    pub failures: usize,
}

impl ExperimentResult {
    pub fn row(&self, method: &str) -> &SummaryRow {
        self.summary
            .iter()
            .find(|r| r.method == method)
            .expect("every method has a summary row")
    }

    /// `1 - RMSE(MAP) / RMSE(MLE)`.
    pub fn rmse_reduction(&self) -> f64 {
        1.0 - self.row("MAP").rmse / self.row("MLE").rmse
    }
}

struct Fitted {
    model: KrigingModel,
    sample: PosteriorSample,
    theta_mle: LengthVector,
    theta_map: LengthVector,
}

fn fit(
    design: DesignSet,
    spec: &MaternSpec,
    y: Vec<f64>,
    sampler: &SamplerConfig,
    mle_starts: usize,
    seed: u64,
) -> Result<Fitted> {
    let model = KrigingModel::new(design, *spec, y)?;
    let cfg = SamplerConfig {
        seed: derive_seed(seed, 2),
        ..sampler.clone()
    };
    let sample = pigs::run(&model, &cfg)?;
    let theta_mle = mle(&model, mle_starts, derive_seed(seed, 3))?.estimate;
    let theta_map = map(&sample, Bandwidth::Auto, ModeCoordinates::LogTheta)?.estimate;
    Ok(Fitted {
        model,
        sample,
        theta_mle,
        theta_map,
    })
}

struct IntervalStats {
    coverage: f64,
    mean_length: f64,
}

fn interval_stats(dists: &[PredictiveDist], truth: &[f64], level: f64) -> Result<IntervalStats> {
    let mut hits = 0usize;
    let mut total_length = 0.0;
    for (d, t) in dists.iter().zip(truth) {
        let (lo, hi) = prediction_interval(d, level)?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::SolverFailure("non-finite prediction interval".into()));
        }
        if lo <= *t && *t <= hi {
            hits += 1;
        }
        total_length += hi - lo;
    }
    Ok(IntervalStats {
        coverage: hits as f64 / truth.len() as f64,
        mean_length: total_length / truth.len() as f64,
    })
}

fn single(kind: PredictiveKind, c: Component) -> PredictiveDist {
    PredictiveDist { kind, components: vec![c] }
}

/// Plug-in predictives at `points` for fixed lengths.
pub fn plugin_at(model: &KrigingModel, lengths: &LengthVector, points: &[Vec<f64>]) -> Result<Vec<PredictiveDist>> {
    let k = Kriger::new(model, lengths)?;
    points
        .iter()
        .map(|x| Ok(single(PredictiveKind::Plugin, k.plugin(x)?)))
        .collect()
}

/// Mixture predictives at `points` over posterior draws.
pub fn fpd_at(model: &KrigingModel, sample: &PosteriorSample, points: &[Vec<f64>]) -> Result<Vec<PredictiveDist>> {
    let mut comps = vec![Vec::with_capacity(sample.len()); points.len()];
    for draw in &sample.draws {
        let k = Kriger::new(model, draw)?;
        for (slot, x) in comps.iter_mut().zip(points) {
            slot.push(k.plugin(x)?);
        }
    }
    Ok(comps
        .into_iter()
        .map(|components| PredictiveDist {
            kind: PredictiveKind::Mixture,
            components,
        })
        .collect())
}

fn uniform_points(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..r).map(|_| rng.random::<f64>()).collect()).collect()
}

fn replicate(cfg: &ExperimentConfig, kind: ExperimentKind, k: usize) -> (ReplicationRecord, u64) {
    let seed = derive_seed(cfg.master_seed, k as u64);
    let r = cfg.spec.r;
    let run = || -> Result<ReplicationRecord> {
        let truth = LengthVector::theta(cfg.true_theta.clone())?;
        let design = make_design(cfg.design_kind, cfg.n, r, derive_seed(seed, 0))?;
        let y = simulate_gp(&design, &cfg.spec, cfg.true_sigma2, &truth, derive_seed(seed, 1))?;
        let f = fit(design, &cfg.spec, y, &cfg.sampler, cfg.mle_starts, seed)?;
        let design = f.model.design();
        let err_mle = fisher_distance(&f.theta_mle, &truth, design, &cfg.spec)?;
        let err_map = fisher_distance(&f.theta_map, &truth, design, &cfg.spec)?;
        let mut coverage = [f64::NAN; 4];
        let mut mean_length = [f64::NAN; 4];
        if kind == ExperimentKind::Coverage {
            let points = uniform_points(cfg.n0, r, &mut substream(seed, 4));
            let y0 = simulate_conditional(
                design,
                f.model.y().as_slice(),
                &points,
                &cfg.spec,
                cfg.true_sigma2,
                &truth,
                derive_seed(seed, 5),
            )?;
            let oracle = Kriger::new(&f.model, &truth)?;
            let true_dists = points
                .iter()
                .map(|x| Ok(single(PredictiveKind::Normal, oracle.known_variance(cfg.true_sigma2, x)?)))
                .collect::<Result<Vec<_>>>()?;
            let families = [
                true_dists,
                plugin_at(&f.model, &f.theta_mle, &points)?,
                plugin_at(&f.model, &f.theta_map, &points)?,
                fpd_at(&f.model, &f.sample, &points)?,
            ];
            for (slot, dists) in families.iter().enumerate() {
                let s = interval_stats(dists, &y0, cfg.level)?;
                coverage[slot] = s.coverage;
                mean_length[slot] = s.mean_length;
            }
        }
        Ok(ReplicationRecord {
            replication: k,
            seed,
            error: None,
            theta_mle: f.theta_mle.theta_values(),
            theta_map: f.theta_map.theta_values(),
            err_mle,
            err_map,
            coverage,
            mean_length,
            acceptance: f.sample.acceptance.clone(),
        })
    };
    match run() {
        Ok(rec) => (rec, seed),
        Err(e) => {
            log::warn!("replication {k} failed: {e}");
            (ReplicationRecord::failed(k, seed, r, &e), seed)
        }
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build().map_err(|e| Error::Invalid(e.to_string()))
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = values.filter(|v| !v.is_nan()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

fn summarize(kind: ExperimentKind, r: usize, records: Vec<ReplicationRecord>) -> Result<ExperimentResult> {
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let total = records.len();
    if failures * 10 > total {
        return Err(Error::ReplicationAbort { failed: failures, total });
    }
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let rmse = |f: fn(&ReplicationRecord) -> f64| mean_of(ok.iter().map(|r| f(r).powi(2))).sqrt();
    let summary = METHODS
        .iter()
        .enumerate()
        .map(|(slot, m)| SummaryRow {
            method: (*m).to_string(),
            rmse: match *m {
                "MLE" => rmse(|r| r.err_mle),
                "MAP" => rmse(|r| r.err_map),
                _ => f64::NAN,
            },
            coverage: mean_of(ok.iter().map(|r| r.coverage[slot])),
            mean_length: mean_of(ok.iter().map(|r| r.mean_length[slot])),
        })
        .collect();
    Ok(ExperimentResult {
        kind,
        r,
        records,
        summary,
        failures,
    })
}

fn run_replications(cfg: &ExperimentConfig, kind: ExperimentKind, workers: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let records: Vec<ReplicationRecord> = pool(workers)?.install(|| {
        (0..cfg.m)
            .into_par_iter()
            .map(|k| replicate(cfg, kind, k).0)
            .collect()
    });
    summarize(kind, cfg.spec.r, records)
}

/// Estimation errors of the likelihood maximizer and the posterior mode.
pub fn rmse_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    run_replications(cfg, ExperimentKind::Rmse, workers)
}

/// Coverage and mean length of the four interval families.
pub fn coverage_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    run_replications(cfg, ExperimentKind::Coverage, workers)
}

fn ackley_replication(cfg: &AckleyConfig, k: usize) -> ReplicationRecord {
    let seed = derive_seed(cfg.master_seed, k as u64);
    let run = || -> Result<ReplicationRecord> {
        let design = make_design(cfg.design_kind, cfg.n, cfg.d, derive_seed(seed, 0))?;
        let y: Vec<f64> = design.rows().map(ackley).collect();
        let f = fit(design, &cfg.spec, y, &cfg.sampler, cfg.mle_starts, seed)?;
        let points = uniform_points(cfg.n0, cfg.d, &mut substream(seed, 4));
        let truth: Vec<f64> = points.iter().map(|p| ackley(p)).collect();
        let mut coverage = [f64::NAN; 4];
        let mut mean_length = [f64::NAN; 4];
        let families = [
            plugin_at(&f.model, &f.theta_mle, &points)?,
            plugin_at(&f.model, &f.theta_map, &points)?,
            fpd_at(&f.model, &f.sample, &points)?,
        ];
        for (slot, dists) in families.iter().enumerate() {
            let s = interval_stats(dists, &truth, cfg.level)?;
            coverage[slot + 1] = s.coverage;
            mean_length[slot + 1] = s.mean_length;
        }
        Ok(ReplicationRecord {
            replication: k,
            seed,
            error: None,
            theta_mle: f.theta_mle.theta_values(),
            theta_map: f.theta_map.theta_values(),
            err_mle: f64::NAN,
            err_map: f64::NAN,
            coverage,
            mean_length,
            acceptance: f.sample.acceptance.clone(),
        })
    };
    run().unwrap_or_else(|e| {
        log::warn!("replication {k} failed: {e}");
        ReplicationRecord::failed(k, seed, cfg.d, &e)
    })
}

/// Interval quality when emulating the Ackley function on the unit cube.
pub fn ackley_experiment(cfg: &AckleyConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    if cfg.d == 0 || cfg.spec.r != cfg.d || cfg.n < 2 || cfg.m == 0 {
        return Err(Error::Invalid("inconsistent Ackley study sizes".into()));
    }
    cfg.sampler.validate()?;
    let records: Vec<ReplicationRecord> = pool(workers)?.install(|| {
        (0..cfg.m)
            .into_par_iter()
            .map(|k| ackley_replication(cfg, k))
            .collect()
    });
    summarize(ExperimentKind::Ackley, cfg.d, records)
}

fn real_or_na(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        fmt_real(v)
    }
}

/// One row per replication.
pub fn write_records_csv(result: &ExperimentResult, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let r = result.r;
    let mut header = vec!["replication".to_string(), "seed".into(), "status".into()];
    header.extend((1..=r).map(|j| format!("theta_mle_{j}")));
    header.extend((1..=r).map(|j| format!("theta_map_{j}")));
    header.extend(["err_mle".into(), "err_map".into()]);
    header.extend(METHODS.iter().map(|m| format!("coverage_{}", m.to_lowercase())));
    header.extend(METHODS.iter().map(|m| format!("length_{}", m.to_lowercase())));
    header.extend((1..=r).map(|j| format!("acceptance_{j}")));
    out.write_record(&header)?;
    for rec in &result.records {
        let mut row = vec![
            rec.replication.to_string(),
            rec.seed.to_string(),
            rec.error.clone().unwrap_or_else(|| "ok".into()),
        ];
        row.extend(rec.theta_mle.iter().map(|v| real_or_na(*v)));
        row.extend(rec.theta_map.iter().map(|v| real_or_na(*v)));
        row.push(real_or_na(rec.err_mle));
        row.push(real_or_na(rec.err_map));
        row.extend(rec.coverage.iter().map(|v| real_or_na(*v)));
        row.extend(rec.mean_length.iter().map(|v| real_or_na(*v)));
        row.extend(rec.acceptance.iter().map(|v| real_or_na(*v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per method: True, MLE, MAP, FPD.
pub fn write_summary_csv(result: &ExperimentResult, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "rmse", "coverage", "mean_length"])?;
    for row in &result.summary {
        out.write_record([
            row.method.clone(),
            real_or_na(row.rmse),
            real_or_na(row.coverage),
            real_or_na(row.mean_length),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `records.csv` and `summary.csv` into `dir`, returning their paths.
pub fn write_result_files(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let records = dir.join("records.csv");
    let summary = dir.join("summary.csv");
    write_records_csv(result, std::fs::File::create(&records)?)?;
    write_summary_csv(result, std::fs::File::create(&summary)?)?;
    Ok(vec![records, summary])
}
