//! Point estimates of correlation lengths, the Fisher-transform distance, and
//! predictive distributions with prediction intervals.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::lhs_points;
use crate::kernels::{corr_table, cross_corr, euclidean, CorrMatrix, DesignSet, LengthVector, MaternSpec};
use crate::objective::{integrated_log_likelihood, KrigingModel};
use crate::optim::nelder_mead;
use crate::pigs::PosteriorSample;
use crate::rng::rng_from_seed;
use crate::special::{normal_cdf, normal_quantile, student_t_cdf, student_t_quantile};

/// Box searched by the likelihood maximizer, in log lengths.
pub const LOG_LENGTH_BOX: (f64, f64) = (-6.0, 6.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartResult {
    /// Starting log lengths.
    pub start: Vec<f64>,
    /// Local optimum in log lengths, when the search succeeded.
    pub optimum: Option<Vec<f64>>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Estimated lengths.
    pub estimate: LengthVector,
    /// Maximized objective: integrated log-likelihood, or log kernel density.
    pub objective: f64,
    pub iterations: u64,
    pub starts: Vec<StartResult>,
}

fn box_penalty(v: &[f64]) -> (Vec<f64>, f64) {
    let (lo, hi) = LOG_LENGTH_BOX;
    let mut excess = 0.0;
    let clamped = v
        .iter()
        .map(|x| {
            let c = x.clamp(lo, hi);
            excess += (x - c) * (x - c);
            c
        })
        .collect();
    (clamped, 1e3 * excess)
}

/// Maximum integrated-likelihood lengths by multistart Nelder–Mead in log lengths.
pub fn mle(model: &KrigingModel, starts: usize, seed: u64) -> Result<EstimateReport> {
    let r = model.r();
    let starts = starts.max(1);
    let mut rng = rng_from_seed(seed);
    let (lo, hi) = LOG_LENGTH_BOX;
    let points = lhs_points(starts, r, &mut rng);
    let cost = |v: &[f64]| -> f64 {
        let (c, pen) = box_penalty(v);
        let lengths = LengthVector::theta(c.iter().map(|x| x.exp()).collect());
        match lengths.and_then(|l| integrated_log_likelihood(model, &l)) {
            Ok(ll) => -ll + pen,
            Err(_) => f64::INFINITY,
        }
    };
    let mut results = Vec::with_capacity(starts);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for p in points {
        let start: Vec<f64> = p.iter().map(|u| lo + (hi - lo) * u).collect();
        let steps: Vec<f64> = start.iter().map(|s| if *s > 5.0 { -0.5 } else { 0.5 }).collect();
        match nelder_mead(cost, &start, &steps, 400 * r as u64) {
            Ok(m) => {
                iterations += m.iterations;
                let (c, _) = box_penalty(&m.point);
                let value = -cost(&c);
                if best.as_ref().is_none_or(|b| value > b.1) {
                    best = Some((c.clone(), value));
                }
                results.push(StartResult {
                    start,
                    optimum: Some(c),
                    objective: value,
                });
            }
            Err(e) => {
                log::debug!("likelihood search failed from {start:?}: {e}");
                results.push(StartResult {
                    start,
                    optimum: None,
                    objective: f64::NEG_INFINITY,
                });
            }
        }
    }
    let (v, objective) = best.ok_or_else(|| Error::OptimFailure("every likelihood search failed".into()))?;
    Ok(EstimateReport {
        estimate: LengthVector::theta(v.iter().map(|x| x.exp()).collect())?,
        objective,
        iterations,
        starts: results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Per-axis standard deviation times `n^(-1/(d+4))`.
    Auto,
    Fixed(f64),
}

/// Coordinates in which the posterior density is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeCoordinates {
    /// Density of the log lengths; invariant under `theta -> 1/theta`.
    LogTheta,
    /// Density of the lengths themselves, with respect to Lebesgue measure. This
    /// density need not vanish as a length goes to zero, so the mode can sit at
    /// the boundary.
    Theta,
}

/// Log of an unnormalized Gaussian product-kernel density estimate.
fn log_kde(points: &[Vec<f64>], h: &[f64], x: &[f64]) -> f64 {
    let exps: Vec<f64> = points
        .iter()
        .map(|p| {
            -0.5 * p
                .iter()
                .zip(x)
                .zip(h)
                .map(|((a, b), s)| ((a - b) / s).powi(2))
                .sum::<f64>()
        })
        .collect();
    let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + exps.iter().map(|e| (e - m).exp()).sum::<f64>().ln()
}

/// Mode of a kernel density estimate of the draws, fitted in log lengths and
/// refined by Nelder–Mead from the highest-density draw.
///
/// With [`ModeCoordinates::Theta`] the estimate is mapped to a density of the
/// lengths before maximizing, which subtracts `sum(log theta)` from the log density.
pub fn map(sample: &PosteriorSample, bandwidth: Bandwidth, coords: ModeCoordinates) -> Result<EstimateReport> {
    let logs: Vec<Vec<f64>> = sample.theta_draws().iter().map(|d| d.iter().map(|v| v.ln()).collect()).collect();
    map_from_log_draws(&logs, bandwidth, coords)
}

/// As [`map`], on draws already expressed as log lengths.
pub fn map_from_log_draws(points: &[Vec<f64>], bandwidth: Bandwidth, coords: ModeCoordinates) -> Result<EstimateReport> {
    let n = points.len();
    if n < 100 {
        return Err(Error::Invalid(format!("{n} draws; the density mode needs at least 100")));
    }
    let d = points[0].len();
    let h: Vec<f64> = match bandwidth {
        Bandwidth::Fixed(b) if b > 0.0 => vec![b; d],
        Bandwidth::Fixed(b) => return Err(Error::Invalid(format!("bandwidth must be positive, got {b}"))),
        Bandwidth::Auto => {
            let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
            (0..d)
                .map(|j| {
                    let mean = points.iter().map(|p| p[j]).sum::<f64>() / n as f64;
                    let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                    let sd = var.sqrt();
                    if sd > 0.0 {
                        sd * factor
                    } else {
                        1e-3
                    }
                })
                .collect()
        }
    };
    let objective = |x: &[f64]| match coords {
        ModeCoordinates::LogTheta => log_kde(points, &h, x),
        ModeCoordinates::Theta => log_kde(points, &h, x) - x.iter().sum::<f64>(),
    };
    let (best_draw, best_val) = points
        .iter()
        .map(|p| (p, objective(p)))
        .fold((&points[0], f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let refined = nelder_mead(|x| -objective(x), best_draw, &h, 300 * d as u64)?;
    let (point, objective) = if -refined.value > best_val {
        (refined.point, -refined.value)
    } else {
        (best_draw.clone(), best_val)
    };
    Ok(EstimateReport {
        estimate: LengthVector::theta(point.iter().map(|x| x.exp()).collect())?,
        objective,
        iterations: refined.iterations,
        starts: vec![StartResult {
            start: best_draw.clone(),
            optimum: Some(point),
            objective,
        }],
    })
}

fn fisher_g(k: f64) -> f64 {
    if k.abs() >= 1.0 {
        0.0
    } else {
        k.atanh()
    }
}

/// Frobenius distance between the entrywise `atanh` of two correlation tables.
pub fn fisher_distance(theta1: &LengthVector, theta2: &LengthVector, design: &DesignSet, spec: &MaternSpec) -> Result<f64> {
    let a = corr_table(spec, design, &theta1.mu_values())?;
    let b = corr_table(spec, design, &theta2.mu_values())?;
    let mut total = 0.0;
    for k in 0..design.n() {
        for l in 0..design.n() {
            if k != l {
                total += (fisher_g(a[(k, l)]) - fisher_g(b[(k, l)])).powi(2);
            }
        }
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictiveKind {
    Plugin,
    Mixture,
    /// Gaussian law with known variance.
    Normal,
}

/// Location-scale component; Student t with `dof` degrees of freedom, or normal
/// when `dof` is `None`. A zero scale is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub location: f64,
    pub scale: f64,
    pub dof: Option<u32>,
}

impl Component {
    pub fn cdf(&self, x: f64) -> f64 {
        if self.scale == 0.0 {
            return if x >= self.location { 1.0 } else { 0.0 };
        }
        let z = (x - self.location) / self.scale;
        match self.dof {
            Some(dof) => student_t_cdf(z, dof).expect("positive degrees of freedom"),
            None => normal_cdf(z),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if self.scale == 0.0 {
            return self.location;
        }
        let z = match self.dof {
            Some(dof) => student_t_quantile(p, dof).expect("probability in (0,1)"),
            None => normal_quantile(p),
        };
        self.location + self.scale * z
    }

    /// Variance, infinite for two or fewer degrees of freedom.
    pub fn variance(&self) -> f64 {
        let s2 = self.scale * self.scale;
        match self.dof {
            Some(d) if d > 2 => s2 * d as f64 / (d as f64 - 2.0),
            Some(_) => f64::INFINITY,
            None => s2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveDist {
    pub kind: PredictiveKind,
    /// Equally weighted components.
    pub components: Vec<Component>,
}

impl PredictiveDist {
    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.cdf(x)).sum::<f64>() / self.components.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.location).sum::<f64>() / self.components.len() as f64
    }

    /// Variance of the equal-weight mixture.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.components
            .iter()
            .map(|c| c.variance() + (c.location - m).powi(2))
            .sum::<f64>()
            / self.components.len() as f64
    }

    pub fn is_degenerate(&self) -> bool {
        self.components.iter().all(|c| c.scale == 0.0)
    }
}

/// Kriging quantities at fixed lengths, factored once for many prediction points.
pub struct Kriger<'a> {
    model: &'a KrigingModel,
    lengths: LengthVector,
    corr: CorrMatrix,
    quad: f64,
}

impl<'a> Kriger<'a> {
    pub fn new(model: &'a KrigingModel, lengths: &LengthVector) -> Result<Self> {
        let corr = model.corr(&lengths.mu_values())?;
        let quad = corr.quad_form(model.y());
        Ok(Self {
            model,
            lengths: lengths.clone(),
            corr,
            quad,
        })
    }

    /// Kriging mean and the factor `1 - k^T Sigma^-1 k` at `x0`.
    pub fn mean_and_factor(&self, x0: &[f64]) -> Result<(f64, f64)> {
        let k = cross_corr(self.model.spec(), self.model.design(), &self.lengths, x0)?;
        let w = self.corr.solve(&k);
        let factor = 1.0 - w.dot(&k);
        if factor < -1e-10 {
            return Err(Error::NegativeVarianceFactor(factor));
        }
        Ok((w.dot(self.model.y()), factor.max(0.0)))
    }

    /// Student-t plug-in component at `x0`.
    pub fn plugin(&self, x0: &[f64]) -> Result<Component> {
        let n = self.model.n();
        if let Some(k) = design_hit(self.model.design(), x0) {
            return Ok(Component {
                location: self.model.y()[k],
                scale: 0.0,
                dof: Some(n as u32),
            });
        }
        let (location, factor) = self.mean_and_factor(x0)?;
        Ok(Component {
            location,
            scale: (self.quad / n as f64 * factor).sqrt(),
            dof: Some(n as u32),
        })
    }

    /// Gaussian component at `x0` with known variance.
    pub fn known_variance(&self, sigma2: f64, x0: &[f64]) -> Result<Component> {
        if let Some(k) = design_hit(self.model.design(), x0) {
            return Ok(Component {
                location: self.model.y()[k],
                scale: 0.0,
                dof: None,
            });
        }
        let (location, factor) = self.mean_and_factor(x0)?;
        Ok(Component {
            location,
            scale: (sigma2 * factor).sqrt(),
            dof: None,
        })
    }
}

fn design_hit(design: &DesignSet, x0: &[f64]) -> Option<usize> {
    (0..design.n()).find(|&k| euclidean(design.point(k), x0) < 1e-10)
}

fn degenerate(model: &KrigingModel, k: usize, kind: PredictiveKind, dof: Option<u32>) -> PredictiveDist {
    log::warn!("prediction point coincides with design point {}", k + 1);
    PredictiveDist {
        kind,
        components: vec![Component {
            location: model.y()[k],
            scale: 0.0,
            dof,
        }],
    }
}

/// Student-t predictive at `x0` with lengths fixed and the variance integrated out.
pub fn predict_plugin(model: &KrigingModel, lengths: &LengthVector, x0: &[f64]) -> Result<PredictiveDist> {
    if let Some(k) = design_hit(model.design(), x0) {
        return Ok(degenerate(model, k, PredictiveKind::Plugin, Some(model.n() as u32)));
    }
    Ok(PredictiveDist {
        kind: PredictiveKind::Plugin,
        components: vec![Kriger::new(model, lengths)?.plugin(x0)?],
    })
}

/// Gaussian predictive at `x0` with known variance and lengths.
pub fn predict_true(model: &KrigingModel, sigma2: f64, lengths: &LengthVector, x0: &[f64]) -> Result<PredictiveDist> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("variance must be positive, got {sigma2}")));
    }
    if let Some(k) = design_hit(model.design(), x0) {
        return Ok(degenerate(model, k, PredictiveKind::Normal, None));
    }
    Ok(PredictiveDist {
        kind: PredictiveKind::Normal,
        components: vec![Kriger::new(model, lengths)?.known_variance(sigma2, x0)?],
    })
}

/// Equal-weight mixture of plug-in predictives over posterior draws.
pub fn predict_fpd(model: &KrigingModel, sample: &PosteriorSample, x0: &[f64]) -> Result<PredictiveDist> {
    predict_mixture(model, &sample.draws, x0)
}

pub fn predict_mixture(model: &KrigingModel, draws: &[LengthVector], x0: &[f64]) -> Result<PredictiveDist> {
    if draws.is_empty() {
        return Err(Error::Invalid("the posterior sample is empty".into()));
    }
    if let Some(k) = design_hit(model.design(), x0) {
        return Ok(degenerate(model, k, PredictiveKind::Mixture, Some(model.n() as u32)));
    }
    let components = draws
        .iter()
        .map(|d| Kriger::new(model, d)?.plugin(x0))
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictiveDist {
        kind: PredictiveKind::Mixture,
        components,
    })
}

fn invert_cdf(dist: &PredictiveDist, p: f64) -> f64 {
    if let [c] = dist.components.as_slice() {
        return c.quantile(p);
    }
    // component quantiles at the same level bracket the mixture quantile
    let qs: Vec<f64> = dist.components.iter().map(|c| c.quantile(p)).collect();
    let mut lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = dist.cdf(mid);
        if (f - p).abs() < 1e-12 {
            return mid;
        }
        if f < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equal-tailed interval with coverage `level`.
pub fn prediction_interval(dist: &PredictiveDist, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    if dist.components.is_empty() {
        return Err(Error::Invalid("distribution has no components".into()));
    }
    let tail = 0.5 * (1.0 - level);
    Ok((invert_cdf(dist, tail), invert_cdf(dist, 1.0 - tail)))
}

/// Kriging weights `Sigma^-1 k` at `x0`.
pub fn kriging_weights(model: &KrigingModel, lengths: &LengthVector, x0: &[f64]) -> Result<DVector<f64>> {
    let c = model.corr(&lengths.mu_values())?;
    Ok(c.solve(&cross_corr(model.spec(), model.design(), lengths, x0)?))
}
