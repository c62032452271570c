//! Likelihoods and objective-prior densities for simple kriging with a Matérn
//! correlation and unknown variance.
//!
//! Densities on a correlation length are returned in the parametrization of the
//! length vector passed in; internally everything is evaluated in inverse
//! lengths and mapped with the Jacobian `theta^-2`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{corr_partial_table, corr_table, CorrMatrix, DesignSet, LengthVector, MaternSpec, Parametrization};
use crate::quadrature::adaptive_simpson;
use crate::special::log_gamma;

#[derive(Debug, Clone)]
pub struct KrigingModel {
    design: DesignSet,
    spec: MaternSpec,
    y: DVector<f64>,
}

impl KrigingModel {
    pub fn new(design: DesignSet, spec: MaternSpec, y: Vec<f64>) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::Shape(format!(
                "{} observations for {} design points",
                y.len(),
                design.n()
            )));
        }
        if design.r() != spec.r {
            return Err(Error::Shape(format!(
                "design dimension {} but kernel dimension {}",
                design.r(),
                spec.r
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("observations must be finite".into()));
        }
        if y.iter().all(|v| *v == 0.0) {
            return Err(Error::Invalid("observation vector is identically zero".into()));
        }
        Ok(Self {
            design,
            spec,
            y: DVector::from_vec(y),
        })
    }

    pub fn design(&self) -> &DesignSet {
        &self.design
    }

    pub fn spec(&self) -> &MaternSpec {
        &self.spec
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn r(&self) -> usize {
        self.design.r()
    }

    /// Same model with observations replaced.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.design.clone(), self.spec, y)
    }

    pub(crate) fn corr(&self, mu: &[f64]) -> Result<CorrMatrix> {
        CorrMatrix::from_matrix(corr_table(&self.spec, &self.design, mu)?)
    }
}

fn check_len(model: &KrigingModel, lengths: &LengthVector) -> Result<()> {
    if lengths.len() != model.r() {
        return Err(Error::Shape(format!(
            "length vector of size {} for dimension {}",
            lengths.len(),
            model.r()
        )));
    }
    Ok(())
}

fn check_axis(model: &KrigingModel, i: usize) -> Result<()> {
    if i >= model.r() {
        return Err(Error::Domain(format!("axis {i} out of range for dimension {}", model.r())));
    }
    Ok(())
}

/// Gaussian log-likelihood with variance `sigma2` and correlation lengths `lengths`.
pub fn log_likelihood(model: &KrigingModel, sigma2: f64, lengths: &LengthVector) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("variance must be positive, got {sigma2}")));
    }
    check_len(model, lengths)?;
    let c = model.corr(&lengths.mu_values())?;
    let n = model.n() as f64;
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln()
        - 0.5 * c.log_det()
        - c.quad_form(model.y()) / (2.0 * sigma2))
}

/// Log-likelihood with the variance integrated out against `1/sigma^2`.
pub fn integrated_log_likelihood(model: &KrigingModel, lengths: &LengthVector) -> Result<f64> {
    check_len(model, lengths)?;
    let c = model.corr(&lengths.mu_values())?;
    Ok(integrated_from_corr(model, &c))
}

fn integrated_from_corr(model: &KrigingModel, c: &CorrMatrix) -> f64 {
    let n = model.n() as f64;
    let q = c.quad_form(model.y());
    log_gamma(0.5 * n).expect("n >= 1")
        - std::f64::consts::LN_2
        - 0.5 * n * std::f64::consts::PI.ln()
        - 0.5 * c.log_det()
        - 0.5 * n * q.ln()
}

/// `L^{-1} dSigma_i L^{-T}` centered by its mean eigenvalue.
fn centered_whitened_partial(model: &KrigingModel, c: &CorrMatrix, mu: &[f64], i: usize) -> Result<DMatrix<f64>> {
    let d = corr_partial_table(model.spec(), model.design(), mu, i)?;
    let left = c.whiten_matrix(&d);
    let mut b = c.whiten_matrix(&left.transpose());
    let n = model.n();
    let t = b.trace() / n as f64;
    for k in 0..n {
        b[(k, k)] -= t;
    }
    Ok(b)
}

fn radicand_root(b: &DMatrix<f64>) -> Result<f64> {
    let rad = b.norm_squared();
    if !rad.is_finite() {
        return Err(Error::NegativeRadicand(rad));
    }
    Ok(rad.sqrt())
}

fn jacobian_log(lengths: &LengthVector, i: usize) -> f64 {
    match lengths.parametrization() {
        Parametrization::Mu => 0.0,
        Parametrization::Theta => -2.0 * lengths.values()[i].ln(),
    }
}

/// Unnormalized conditional Jeffreys-rule prior on length `i` (0-based), as a
/// density in the parametrization of `lengths`.
pub fn conditional_prior_unnorm(model: &KrigingModel, lengths: &LengthVector, i: usize) -> Result<f64> {
    check_len(model, lengths)?;
    check_axis(model, i)?;
    let mu = lengths.mu_values();
    let c = model.corr(&mu)?;
    let b = centered_whitened_partial(model, &c, &mu, i)?;
    Ok(radicand_root(&b)? * jacobian_log(lengths, i).exp())
}

/// Unnormalized conditional posterior on length `i`: integrated likelihood times
/// conditional prior.
pub fn conditional_posterior_unnorm(model: &KrigingModel, lengths: &LengthVector, i: usize) -> Result<f64> {
    Ok(conditional_log_posterior(model, lengths, i)?.exp())
}

/// Logarithm of [`conditional_posterior_unnorm`]; `-inf` where the prior factor vanishes.
pub fn conditional_log_posterior(model: &KrigingModel, lengths: &LengthVector, i: usize) -> Result<f64> {
    check_len(model, lengths)?;
    check_axis(model, i)?;
    let mu = lengths.mu_values();
    Ok(log_posterior_mu(model, &mu, i)? + jacobian_log(lengths, i))
}

/// Log unnormalized conditional posterior density of `mu_i`, all inputs in inverse lengths.
pub(crate) fn log_posterior_mu(model: &KrigingModel, mu: &[f64], i: usize) -> Result<f64> {
    let c = model.corr(mu)?;
    let b = centered_whitened_partial(model, &c, mu, i)?;
    let prior = radicand_root(&b)?;
    Ok(integrated_from_corr(model, &c) + prior.ln())
}

/// Quadrature settings for normalizing a one-dimensional conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative accuracy of the normalizing constant.
    pub rel_tol: f64,
    /// Total evaluation budget.
    pub max_evals: usize,
    /// Initial half-width of the integration window in `log mu`.
    pub half_width: f64,
    /// Largest half-width the window may grow to.
    pub max_half_width: f64,
    /// Spacing of the initial scan in `log mu`.
    pub scan_step: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_evals: 200_000,
            half_width: 30.0,
            max_half_width: 90.0,
            scan_step: 0.25,
        }
    }
}

/// A normalized one-dimensional conditional posterior.
#[derive(Debug, Clone)]
pub struct ConditionalDensityEval {
    model: KrigingModel,
    axis: usize,
    mu: Vec<f64>,
    log_norm_const: f64,
    /// Evaluations of the integrand.
    pub nodes_used: usize,
    /// Estimated relative error of the normalizing constant.
    pub rel_error: f64,
    /// Nodes where the correlation matrix could not be factorized (treated as zero density).
    pub singular_nodes: usize,
    /// Integration window in `log mu`.
    pub window: (f64, f64),
}

impl ConditionalDensityEval {
    pub fn axis(&self) -> usize {
        self.axis
    }

    /// The fixed lengths as inverse lengths (the value at `axis` is a placeholder).
    pub fn fixed_mu(&self) -> Vec<f64> {
        let mut v = self.mu.clone();
        v.remove(self.axis);
        v
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    /// Normalizing constant in inverse-length parametrization.
    pub fn norm_const(&self) -> f64 {
        self.log_norm_const.exp()
    }

    /// Normalized log density at `value`, read in `parametrization`.
    pub fn log_density(&self, value: f64, parametrization: Parametrization) -> Result<f64> {
        if !(value > 0.0) {
            return Err(Error::Domain(format!("length must be positive, got {value}")));
        }
        let m = match parametrization {
            Parametrization::Mu => value,
            Parametrization::Theta => 1.0 / value,
        };
        let mut mu = self.mu.clone();
        mu[self.axis] = m;
        let lp = match log_posterior_mu(&self.model, &mu, self.axis) {
            Ok(v) => v,
            Err(Error::NotPositiveDefinite) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        let jac = match parametrization {
            Parametrization::Mu => 0.0,
            Parametrization::Theta => -2.0 * value.ln(),
        };
        Ok(lp - self.log_norm_const + jac)
    }

    pub fn density(&self, value: f64, parametrization: Parametrization) -> Result<f64> {
        Ok(self.log_density(value, parametrization)?.exp())
    }
}

fn insert_axis(fixed: &[f64], i: usize) -> Vec<f64> {
    let mut mu = fixed.to_vec();
    mu.insert(i, 1.0);
    mu
}

/// Normalizes the conditional posterior of length `i` given the other `r - 1`
/// lengths in `fixed`.
pub fn normalize_conditional(
    model: &KrigingModel,
    fixed: &LengthVector,
    i: usize,
    cfg: &QuadratureConfig,
) -> Result<ConditionalDensityEval> {
    check_axis(model, i)?;
    if fixed.len() + 1 != model.r() {
        return Err(Error::Shape(format!(
            "{} fixed lengths for dimension {}",
            fixed.len(),
            model.r()
        )));
    }
    if model.n() < 2 {
        return Err(Error::Invalid("conditional prior vanishes for a single design point".into()));
    }
    if !crate::kernels::coordinate_distinct(model.design()) {
        log::warn!("design is not coordinate-distinct; the conditional may not be normalizable");
    }
    let base = insert_axis(&fixed.mu_values(), i);
    let mut singular = 0usize;
    let mut evals = 0usize;
    let log_g = |u: f64, singular: &mut usize, evals: &mut usize| -> Result<f64> {
        let mut mu = base.clone();
        mu[i] = u.exp();
        *evals += 1;
        match log_posterior_mu(model, &mu, i) {
            Ok(v) => Ok(v + u),
            Err(Error::NotPositiveDefinite) => {
                *singular += 1;
                Ok(f64::NEG_INFINITY)
            }
            Err(e) => Err(e),
        }
    };

    let mut half = cfg.half_width;
    let (lo, hi, scan) = loop {
        let steps = (2.0 * half / cfg.scan_step).round() as usize;
        let mut scan = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let u = -half + 2.0 * half * k as f64 / steps as f64;
            scan.push((u, log_g(u, &mut singular, &mut evals)?));
        }
        let peak = scan.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::QuadratureDivergence("integrand vanishes on the whole window".into()));
        }
        let edge = scan[0].1.max(scan[steps].1);
        if edge - peak < -30.0 || half >= cfg.max_half_width {
            if edge - peak >= -30.0 {
                return Err(Error::QuadratureDivergence(format!(
                    "integrand not negligible at the window edge |log mu| = {half}"
                )));
            }
            break (-half, half, scan);
        }
        half = (half + 15.0).min(cfg.max_half_width);
    };
    let peak = scan.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);

    // coarse trapezoid sets the absolute tolerance scale
    let coarse: f64 = scan
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * ((w[0].1 - peak).exp() + (w[1].1 - peak).exp()))
        .sum();
    let panels = scan.len() - 1;
    let tol = cfg.rel_tol * coarse / panels as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut failure = None;
    for w in scan.windows(2) {
        if (w[0].1 - peak) < -60.0 && (w[1].1 - peak) < -60.0 {
            total += 0.5 * (w[1].0 - w[0].0) * ((w[0].1 - peak).exp() + (w[1].1 - peak).exp());
            continue;
        }
        let remaining = cfg.max_evals.saturating_sub(evals);
        let est = adaptive_simpson(
            |u| match log_g(u, &mut singular, &mut evals) {
                Ok(v) => (v - peak).exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            w[0].0,
            w[1].0,
            tol,
            remaining,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let est = est?;
        total += est.value;
        err += est.abs_error;
    }
    if !(total > 0.0) {
        return Err(Error::QuadratureDivergence("zero normalizing constant".into()));
    }
    if singular > 0 {
        log::debug!("{singular} quadrature nodes had a singular correlation matrix");
    }
    Ok(ConditionalDensityEval {
        model: model.clone(),
        axis: i,
        mu: base,
        log_norm_const: peak + total.ln(),
        nodes_used: evals,
        rel_error: err / total,
        singular_nodes: singular,
        window: (lo, hi),
    })
}

/// Reference information table in inverse lengths.
pub fn reference_information(model: &KrigingModel, lengths: &LengthVector) -> Result<DMatrix<f64>> {
    check_len(model, lengths)?;
    let mu = lengths.mu_values();
    let c = model.corr(&mu)?;
    let r = model.r();
    let bs = (0..r)
        .map(|i| centered_whitened_partial(model, &c, &mu, i))
        .collect::<Result<Vec<_>>>()?;
    let mut info = DMatrix::zeros(r, r);
    for a in 0..r {
        for b in 0..=a {
            let v = bs[a].dot(&bs[b]);
            info[(a, b)] = v;
            info[(b, a)] = v;
        }
    }
    Ok(info)
}

/// Log of the multivariate reference prior (square root of the information determinant),
/// in the parametrization of `lengths`.
pub fn multivariate_reference_log_prior(model: &KrigingModel, lengths: &LengthVector) -> Result<f64> {
    let info = reference_information(model, lengths)?;
    let ch = info.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let half_log_det: f64 = ch.l().diagonal().iter().map(|d| d.ln()).sum();
    let jac: f64 = (0..lengths.len()).map(|i| jacobian_log(lengths, i)).sum();
    Ok(half_log_det + jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{matern_1d, KernelFamily};
    use approx::assert_relative_eq;

    fn toy() -> KrigingModel {
        let d = DesignSet::new(vec![vec![0.1, 0.8], vec![0.45, 0.3], vec![0.9, 0.55]]).unwrap();
        KrigingModel::new(d, MaternSpec::geometric(2.5, 2).unwrap(), vec![0.3, -1.1, 0.7]).unwrap()
    }

    #[test]
    fn model_validation() {
        let d = DesignSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let s = MaternSpec::geometric(1.5, 1).unwrap();
        assert!(KrigingModel::new(d.clone(), s, vec![0.0, 0.0]).is_err());
        assert!(KrigingModel::new(d.clone(), s, vec![1.0]).is_err());
        assert!(KrigingModel::new(d, MaternSpec::geometric(1.5, 2).unwrap(), vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn scalar_likelihoods() {
        let d = DesignSet::new(vec![vec![0.3]]).unwrap();
        let m = KrigingModel::new(d, MaternSpec::geometric(1.5, 1).unwrap(), vec![1.7]).unwrap();
        let l = LengthVector::theta(vec![0.5]).unwrap();
        let s2 = 0.8;
        let expected = -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - 1.7 * 1.7 / (2.0 * s2);
        assert_relative_eq!(log_likelihood(&m, s2, &l).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(
            integrated_log_likelihood(&m, &l).unwrap(),
            (1.0 / (2.0 * 1.7f64)).ln(),
            max_relative = 1e-14
        );
        assert_eq!(conditional_prior_unnorm(&m, &l, 0).unwrap(), 0.0);
        assert_eq!(conditional_posterior_unnorm(&m, &l, 0).unwrap(), 0.0);
        assert!(log_likelihood(&m, 0.0, &l).is_err());
    }

    #[test]
    fn likelihood_peaks_at_sigma_hat() {
        let m = toy();
        let l = LengthVector::theta(vec![0.4, 0.7]).unwrap();
        let c = m.corr(&l.mu_values()).unwrap();
        let hat = c.quad_form(m.y()) / 3.0;
        let at = log_likelihood(&m, hat, &l).unwrap();
        for k in 1..400 {
            let s2 = hat * (0.2 + 0.01 * k as f64);
            assert!(log_likelihood(&m, s2, &l).unwrap() <= at + 1e-14);
        }
    }

    #[test]
    fn integrated_homogeneity_and_permutation() {
        let m = toy();
        let l = LengthVector::theta(vec![0.4, 0.7]).unwrap();
        let base = integrated_log_likelihood(&m, &l).unwrap();
        let c = 3.7f64;
        let scaled = m.with_y(m.y().iter().map(|v| v * c).collect()).unwrap();
        assert_relative_eq!(
            integrated_log_likelihood(&scaled, &l).unwrap(),
            base - 3.0 * c.ln(),
            max_relative = 1e-13
        );
        let perm = [2, 0, 1];
        let pd = m.design().permuted(&perm).unwrap();
        let py = perm.iter().map(|&k| m.y()[k]).collect();
        let pm = KrigingModel::new(pd, *m.spec(), py).unwrap();
        assert_relative_eq!(integrated_log_likelihood(&pm, &l).unwrap(), base, max_relative = 1e-13);
        assert_relative_eq!(
            conditional_prior_unnorm(&pm, &l, 1).unwrap(),
            conditional_prior_unnorm(&m, &l, 1).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn two_point_prior_closed_form() {
        let x = 0.7;
        let d = DesignSet::new(vec![vec![0.0], vec![x]]).unwrap();
        for nu in [0.6, 1.5, 2.5] {
            let m = KrigingModel::new(d.clone(), MaternSpec::geometric(nu, 1).unwrap(), vec![1.0, -0.4]).unwrap();
            let mu = 1.3;
            let k = matern_1d(nu, x * mu).unwrap();
            let h = 1e-6;
            let kp = (matern_1d(nu, x * (mu + h)).unwrap() - matern_1d(nu, x * (mu - h)).unwrap()) / (2.0 * h);
            let expected = 2f64.sqrt() * kp.abs() / (1.0 - k * k);
            let got = conditional_prior_unnorm(&m, &LengthVector::mu(vec![mu]).unwrap(), 0).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-7);
        }
    }

    #[test]
    fn prior_ignores_data_and_decays() {
        let m = toy();
        let other = m.with_y(vec![5.0, 2.0, -9.0]).unwrap();
        let l = LengthVector::mu(vec![2.0, 3.0]).unwrap();
        assert_eq!(
            conditional_prior_unnorm(&m, &l, 0).unwrap(),
            conditional_prior_unnorm(&other, &l, 0).unwrap()
        );
        let big = conditional_prior_unnorm(&m, &LengthVector::mu(vec![200.0, 3.0]).unwrap(), 0).unwrap();
        let bigger = conditional_prior_unnorm(&m, &LengthVector::mu(vec![400.0, 3.0]).unwrap(), 0).unwrap();
        assert!(bigger < big / 2.0);
    }

    #[test]
    fn theta_density_carries_jacobian() {
        let m = toy();
        let t = LengthVector::theta(vec![0.4, 0.7]).unwrap();
        let pt = conditional_posterior_unnorm(&m, &t, 0).unwrap();
        let pm = conditional_posterior_unnorm(&m, &t.to_mu(), 0).unwrap();
        assert_relative_eq!(pt, pm / (0.4 * 0.4), max_relative = 1e-12);
    }

    #[test]
    fn normalized_conditional_integrates_to_one() {
        let m = toy();
        let fixed = LengthVector::theta(vec![0.6]).unwrap();
        let eval = normalize_conditional(&m, &fixed, 0, &QuadratureConfig::default()).unwrap();
        assert!(eval.rel_error < 1e-6);
        let re = adaptive_simpson(
            |u: f64| eval.density(u.exp(), Parametrization::Theta).unwrap() * u.exp(),
            -30.0,
            30.0,
            1e-9,
            1_000_000,
        )
        .unwrap();
        assert!((re.value - 1.0).abs() < 1e-5, "{}", re.value);
        for theta in [0.05, 0.3, 1.0, 4.0] {
            let dt = eval.density(theta, Parametrization::Theta).unwrap();
            let dm = eval.density(1.0 / theta, Parametrization::Mu).unwrap();
            assert_relative_eq!(dt, dm / (theta * theta), max_relative = 1e-10);
        }
        let coarse = QuadratureConfig {
            rel_tol: 1e-7,
            scan_step: 0.5,
            ..QuadratureConfig::default()
        };
        let other = normalize_conditional(&m, &fixed, 0, &coarse).unwrap();
        assert!((other.log_norm_const() - eval.log_norm_const()).abs() < 1e-5);
    }

    #[test]
    fn reference_prior_relations() {
        let m = toy();
        let l = LengthVector::mu(vec![1.7, 2.4]).unwrap();
        let info = reference_information(&m, &l).unwrap();
        for i in 0..2 {
            let f = conditional_prior_unnorm(&m, &l, i).unwrap();
            assert_relative_eq!(info[(i, i)], f * f, max_relative = 1e-12);
        }
        let d1 = DesignSet::new(vec![vec![0.0], vec![0.4], vec![1.1]]).unwrap();
        let m1 = KrigingModel::new(d1, MaternSpec::new(KernelFamily::Tensorized, 1.5, 1).unwrap(), vec![1.0, 0.2, -0.5])
            .unwrap();
        let l1 = LengthVector::theta(vec![0.8]).unwrap();
        assert_relative_eq!(
            multivariate_reference_log_prior(&m1, &l1).unwrap(),
            conditional_prior_unnorm(&m1, &l1, 0).unwrap().ln(),
            max_relative = 1e-12
        );
        let sym = DesignSet::new(vec![vec![0.1, 0.7], vec![0.7, 0.1], vec![0.4, 0.45], vec![0.45, 0.4]]).unwrap();
        let ms = KrigingModel::new(sym, MaternSpec::geometric(2.5, 2).unwrap(), vec![1.0, 0.5, -0.2, 0.3]).unwrap();
        let is = reference_information(&ms, &LengthVector::theta(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_relative_eq!(is[(0, 0)], is[(1, 1)], max_relative = 1e-10);
    }
}
