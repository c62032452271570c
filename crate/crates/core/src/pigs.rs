//! Pseudo-Gibbs sampling: an equiprobable random scan over axes, each visit
//! updating one coordinate from its conditional density.
//!
//! Coordinates seen by the sampler are unconstrained reals. For kriging models
//! they are `log mu` or `log theta`, depending on the configured space.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{LengthVector, Parametrization};
use crate::objective::{log_posterior_mu, KrigingModel};
use crate::rng::{derive_seed, rng_from_seed};

/// How one coordinate is refreshed on a visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    /// Random-walk Metropolis with a normal proposal.
    Metropolis,
    /// Exact draw by inverting the conditional distribution function on a grid.
    GridInversion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Inverse median pairwise spacing along each axis.
    Auto,
    Lengths(LengthVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_sd: f64,
    pub inner_metropolis_steps: usize,
    pub seed: u64,
    pub init: Init,
    pub space: Parametrization,
    pub update: UpdateKind,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_samples: 400,
            burn_in: 100,
            thin: 1,
            proposal_sd: 0.4,
            inner_metropolis_steps: 1,
            seed: 0,
            init: Init::Auto,
            space: Parametrization::Mu,
            update: UpdateKind::Metropolis,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_sd > 0.0) || !self.proposal_sd.is_finite() {
            return Err(Error::Invalid(format!("proposal sd must be positive, got {}", self.proposal_sd)));
        }
        if self.thin == 0 {
            return Err(Error::Invalid("thinning interval must be at least 1".into()));
        }
        if self.inner_metropolis_steps == 0 {
            return Err(Error::Invalid("at least one inner Metropolis step is required".into()));
        }
        Ok(())
    }
}

/// Unnormalized one-dimensional log densities of each coordinate given the others.
pub trait Conditionals: Sync {
    fn dim(&self) -> usize;

    /// Log density, up to a constant, of `point[axis]` given the other coordinates.
    fn log_density(&self, axis: usize, point: &[f64]) -> Result<f64>;
}

/// The conditional reference posteriors of a kriging model in log-length coordinates.
#[derive(Debug, Clone)]
pub struct KrigingConditionals<'a> {
    pub model: &'a KrigingModel,
    pub space: Parametrization,
}

impl<'a> KrigingConditionals<'a> {
    pub fn new(model: &'a KrigingModel, space: Parametrization) -> Self {
        Self { model, space }
    }

    /// Inverse lengths of a sampler point.
    pub fn to_mu(&self, point: &[f64]) -> Vec<f64> {
        match self.space {
            Parametrization::Mu => point.iter().map(|u| u.exp()).collect(),
            Parametrization::Theta => point.iter().map(|u| (-u).exp()).collect(),
        }
    }

    pub fn to_point(&self, lengths: &LengthVector) -> Vec<f64> {
        lengths.to(self.space).values().iter().map(|v| v.ln()).collect()
    }

    pub fn to_lengths(&self, point: &[f64]) -> Result<LengthVector> {
        LengthVector::new(point.iter().map(|u| u.exp()).collect(), self.space)
    }
}

impl Conditionals for KrigingConditionals<'_> {
    fn dim(&self) -> usize {
        self.model.r()
    }

    fn log_density(&self, axis: usize, point: &[f64]) -> Result<f64> {
        let mu = self.to_mu(point);
        if mu.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Ok(f64::NEG_INFINITY);
        }
        // the density of log mu and of log theta = -log mu coincide
        match log_posterior_mu(self.model, &mu, axis) {
            Ok(v) => Ok(v + mu[axis].ln()),
            Err(Error::NotPositiveDefinite) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }
}

/// State of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub point: Vec<f64>,
    pub steps: u64,
    pub proposed: Vec<u64>,
    pub accepted: Vec<u64>,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(point: Vec<f64>, seed: u64) -> Self {
        let r = point.len();
        Self {
            point,
            steps: 0,
            proposed: vec![0; r],
            accepted: vec![0; r],
            rng: rng_from_seed(seed),
        }
    }

    /// One random-scan update: a uniformly chosen axis is refreshed.
    pub fn step<C: Conditionals + ?Sized>(&mut self, target: &C, cfg: &SamplerConfig) -> Result<()> {
        let r = self.point.len();
        let axis = self.rng.random_range(0..r);
        self.update_axis(target, cfg, axis)?;
        self.steps += 1;
        Ok(())
    }

    /// Refreshes coordinate `axis`.
    pub fn update_axis<C: Conditionals + ?Sized>(&mut self, target: &C, cfg: &SamplerConfig, axis: usize) -> Result<()> {
        match cfg.update {
            UpdateKind::Metropolis => self.metropolis(target, cfg, axis),
            UpdateKind::GridInversion => self.grid_inversion(target, axis),
        }
    }

    fn metropolis<C: Conditionals + ?Sized>(&mut self, target: &C, cfg: &SamplerConfig, axis: usize) -> Result<()> {
        let mut current = target.log_density(axis, &self.point)?;
        for _ in 0..cfg.inner_metropolis_steps {
            let old = self.point[axis];
            let z: f64 = self.rng.sample(StandardNormal);
            self.point[axis] = old + cfg.proposal_sd * z;
            let proposal = target.log_density(axis, &self.point)?;
            let u: f64 = self.rng.random();
            self.proposed[axis] += 1;
            let accept = proposal > current || u.ln() < proposal - current;
            if accept {
                current = proposal;
                self.accepted[axis] += 1;
            } else {
                self.point[axis] = old;
            }
        }
        Ok(())
    }

    fn grid_inversion<C: Conditionals + ?Sized>(&mut self, target: &C, axis: usize) -> Result<()> {
        let mut probe = self.point.clone();
        let mut eval = |u: f64| -> Result<f64> {
            probe[axis] = u;
            target.log_density(axis, &probe)
        };
        let (lo, hi) = (-30.0, 30.0);
        let coarse: Vec<(f64, f64)> = (0..=240)
            .map(|k| {
                let u = lo + (hi - lo) * k as f64 / 240.0;
                eval(u).map(|v| (u, v))
            })
            .collect::<Result<_>>()?;
        let peak = coarse.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Invalid("conditional density vanishes on the search window".into()));
        }
        let inside: Vec<usize> = (0..coarse.len()).filter(|&k| coarse[k].1 - peak > -40.0).collect();
        let a = coarse[inside[0].saturating_sub(1)].0;
        let b = coarse[(inside[inside.len() - 1] + 1).min(coarse.len() - 1)].0;
        let m = 512;
        let nodes: Vec<f64> = (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect();
        let logs = nodes.iter().map(|&u| eval(u)).collect::<Result<Vec<_>>>()?;
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = logs.iter().map(|v| (v - top).exp()).collect();
        let mut cdf = vec![0.0; m];
        for k in 1..m {
            cdf[k] = cdf[k - 1] + 0.5 * (dens[k] + dens[k - 1]) * (nodes[k] - nodes[k - 1]);
        }
        let total = cdf[m - 1];
        let target_mass = self.rng.random::<f64>() * total;
        let k = cdf.partition_point(|c| *c < target_mass).clamp(1, m - 1);
        // invert the piecewise-linear density exactly within the cell
        let (x0, x1) = (nodes[k - 1], nodes[k]);
        let (f0, f1) = (dens[k - 1], dens[k]);
        let need = target_mass - cdf[k - 1];
        let h = x1 - x0;
        let slope = (f1 - f0) / h;
        let t = if slope.abs() < 1e-300 {
            need / f0.max(1e-300)
        } else {
            ((f0 * f0 + 2.0 * slope * need).max(0.0).sqrt() - f0) / slope
        };
        self.point[axis] = x0 + t.clamp(0.0, h);
        self.proposed[axis] += 1;
        self.accepted[axis] += 1;
        Ok(())
    }

    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.proposed
            .iter()
            .zip(&self.accepted)
            .map(|(p, a)| if *p == 0 { 0.0 } else { *a as f64 / *p as f64 })
            .collect()
    }
}

/// Raw draws of a chain in sampler coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub draws: Vec<Vec<f64>>,
    pub acceptance: Vec<f64>,
    pub wall_time_secs: f64,
}

/// Draws from the Gibbs reference posterior of a kriging model.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub draws: Vec<LengthVector>,
    pub config: SamplerConfig,
    pub acceptance: Vec<f64>,
    pub wall_time_secs: f64,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn mu_draws(&self) -> Vec<Vec<f64>> {
        self.draws.iter().map(|d| d.mu_values()).collect()
    }

    pub fn theta_draws(&self) -> Vec<Vec<f64>> {
        self.draws.iter().map(|d| d.theta_values()).collect()
    }

    /// Draws as log inverse lengths.
    pub fn log_mu_draws(&self) -> Vec<Vec<f64>> {
        self.draws.iter().map(|d| d.mu_values().iter().map(|v| v.ln()).collect()).collect()
    }

    /// Builds a sample from explicit draws (for analysis of externally produced chains).
    pub fn from_draws(draws: Vec<LengthVector>, config: SamplerConfig) -> Self {
        let r = draws.first().map_or(0, |d| d.len());
        Self {
            draws,
            config,
            acceptance: vec![f64::NAN; r],
            wall_time_secs: 0.0,
        }
    }
}

/// Starting point `mu_i = 1 / median |x_k,i - x_l,i|`.
pub fn auto_init(model: &KrigingModel) -> LengthVector {
    let d = model.design();
    let mu = (0..d.r())
        .map(|j| {
            let mut gaps = Vec::with_capacity(d.n() * (d.n().saturating_sub(1)) / 2);
            for k in 0..d.n() {
                for l in 0..k {
                    gaps.push((d.point(k)[j] - d.point(l)[j]).abs());
                }
            }
            if gaps.is_empty() {
                return 1.0;
            }
            gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
            let mid = gaps.len() / 2;
            let med = if gaps.len() % 2 == 1 {
                gaps[mid]
            } else {
                0.5 * (gaps[mid - 1] + gaps[mid])
            };
            if med > 0.0 {
                1.0 / med
            } else {
                1.0
            }
        })
        .collect();
    LengthVector::mu(mu).expect("positive inverse lengths")
}

fn drive<C: Conditionals + ?Sized>(target: &C, cfg: &SamplerConfig, start: Vec<f64>) -> Result<(Vec<Vec<f64>>, ChainState)> {
    cfg.validate()?;
    if start.len() != target.dim() {
        return Err(Error::Shape(format!(
            "start has {} coordinates, target has {}",
            start.len(),
            target.dim()
        )));
    }
    let mut state = ChainState::new(start, cfg.seed);
    for _ in 0..cfg.burn_in {
        state.step(target, cfg)?;
    }
    let mut draws = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        for _ in 0..cfg.thin {
            state.step(target, cfg)?;
        }
        draws.push(state.point.clone());
    }
    Ok((draws, state))
}

fn warn_acceptance(rates: &[f64], cfg: &SamplerConfig) {
    if cfg.update != UpdateKind::Metropolis {
        return;
    }
    for (i, a) in rates.iter().enumerate() {
        if !(0.1..=0.6).contains(a) {
            log::warn!("acceptance rate {a:.3} on axis {} is outside [0.1, 0.6]", i + 1);
        }
    }
}

/// Samples the Gibbs reference posterior of `model`.
pub fn run(model: &KrigingModel, cfg: &SamplerConfig) -> Result<PosteriorSample> {
    if model.n() < 2 {
        return Err(Error::Invalid("at least two design points are needed".into()));
    }
    if !crate::kernels::coordinate_distinct(model.design()) {
        log::warn!("design is not coordinate-distinct");
    }
    let clock = Instant::now();
    let target = KrigingConditionals::new(model, cfg.space);
    let init = match &cfg.init {
        Init::Auto => auto_init(model),
        Init::Lengths(l) => {
            if l.len() != model.r() {
                return Err(Error::Shape("initial lengths do not match the model dimension".into()));
            }
            l.clone()
        }
    };
    let (raw, state) = drive(&target, cfg, target.to_point(&init))?;
    let draws = raw
        .iter()
        .map(|p| target.to_lengths(p))
        .collect::<Result<Vec<_>>>()?;
    let acceptance = state.acceptance_rates();
    warn_acceptance(&acceptance, cfg);
    Ok(PosteriorSample {
        draws,
        config: cfg.clone(),
        acceptance,
        wall_time_secs: clock.elapsed().as_secs_f64(),
    })
}

/// Runs the sampler on user conditionals from `start`, returning raw draws.
pub fn run_custom<C: Conditionals + ?Sized>(target: &C, cfg: &SamplerConfig, start: Vec<f64>) -> Result<Trace> {
    let clock = Instant::now();
    let (draws, state) = drive(target, cfg, start)?;
    let acceptance = state.acceptance_rates();
    warn_acceptance(&acceptance, cfg);
    Ok(Trace {
        draws,
        acceptance,
        wall_time_secs: clock.elapsed().as_secs_f64(),
    })
}

/// Independent chains with seeds derived from `cfg.seed`, returned in chain order.
pub fn run_chains(model: &KrigingModel, cfg: &SamplerConfig, chains: usize) -> Result<Vec<PosteriorSample>> {
    (0..chains)
        .into_par_iter()
        .map(|k| {
            let mut c = cfg.clone();
            c.seed = derive_seed(cfg.seed, k as u64);
            run(model, &c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSummary {
    pub acceptance: f64,
    pub ess: f64,
    pub mean: f64,
    /// 2.5%, 25%, 50%, 75% and 97.5% quantiles.
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub axes: Vec<AxisSummary>,
}

/// Per-axis diagnostics of a posterior sample, computed on log inverse lengths.
pub fn diagnostics(sample: &PosteriorSample) -> Result<DiagnosticsReport> {
    trace_diagnostics(&sample.log_mu_draws(), &sample.acceptance)
}

/// Per-axis diagnostics of raw draws.
pub fn trace_diagnostics(draws: &[Vec<f64>], acceptance: &[f64]) -> Result<DiagnosticsReport> {
    if draws.len() < 10 {
        return Err(Error::Invalid(format!("{} draws; diagnostics need at least 10", draws.len())));
    }
    let r = draws[0].len();
    let axes = (0..r)
        .map(|j| {
            let column: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            let mut sorted = column.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
            let q = |p: f64| quantile_sorted(&sorted, p);
            AxisSummary {
                acceptance: acceptance.get(j).copied().unwrap_or(f64::NAN),
                ess: effective_sample_size(&column),
                mean: column.iter().sum::<f64>() / column.len() as f64,
                quantiles: [q(0.025), q(0.25), q(0.5), q(0.75), q(0.975)],
            }
        })
        .collect();
    Ok(DiagnosticsReport { n: draws.len(), axes })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Effective sample size from Geyer's initial positive sequence of autocorrelations.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return 1.0;
    }
    let acf = |lag: usize| -> f64 {
        (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum::<f64>() / (n as f64 * var)
    };
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = acf(2 * m) + acf(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / n as f64);
    (n as f64 / tau).min(n as f64)
}
