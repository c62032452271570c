mod common;

use common::{column, ks_critical_01, ks_statistic, mc_se, mean, simpson};
use krig_core::experiments::{lhs_design, simulate_gp};
use krig_core::kernels::{DesignSet, LengthVector, MaternSpec, Parametrization};
use krig_core::objective::{conditional_posterior_unnorm, KrigingModel};
use krig_core::pigs::{diagnostics, run, run_custom, ChainState, Conditionals, Init, SamplerConfig, UpdateKind};
use krig_core::Result;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// First coordinate given the second is exponential with rate `y + 2`, the second
/// given the first has rate `x + 3`; both sampled in log coordinates.
struct ExponentialPair;

impl Conditionals for ExponentialPair {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, axis: usize, p: &[f64]) -> Result<f64> {
        let (x, y) = (p[0].exp(), p[1].exp());
        let (v, rate) = if axis == 0 { (x, y + 2.0) } else { (y, x + 3.0) };
        Ok(rate.ln() - rate * v + v.ln())
    }
}

/// Normal conditionals: `x | y ~ N(y/4, v1)` and `y | x ~ N(x, 1)`.
struct GaussianPair {
    v1: f64,
}

impl Conditionals for GaussianPair {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, axis: usize, p: &[f64]) -> Result<f64> {
        Ok(if axis == 0 {
            -(p[0] - p[1] / 4.0).powi(2) / (2.0 * self.v1)
        } else {
            -(p[1] - p[0]).powi(2) / 2.0
        })
    }
}

/// Stationary covariance of the random-scan chain on the Gaussian pair, from the
/// fixed point of its second-moment recursion.
fn gaussian_pair_covariance(v1: f64) -> [f64; 3] {
    let (mut a, mut b, mut c) = (1.0, 0.0, 1.0);
    for _ in 0..10_000 {
        let (a1, b1, c1) = (c / 16.0 + v1, c / 4.0, c);
        let (a2, b2, c2) = (a, a, a + 1.0);
        a = 0.5 * (a1 + a2);
        b = 0.5 * (b1 + b2);
        c = 0.5 * (c1 + c2);
    }
    [a, b, c]
}

fn moment_checks(draws: &[Vec<f64>], want_mean: [f64; 2], want_cov: [f64; 3]) -> Vec<(String, f64, f64, f64)> {
    let x = column(draws, 0);
    let y = column(draws, 1);
    let (mx, my) = (mean(&x), mean(&y));
    let xx: Vec<f64> = x.iter().map(|v| (v - want_mean[0]).powi(2)).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - want_mean[0]) * (b - want_mean[1])).collect();
    let yy: Vec<f64> = y.iter().map(|v| (v - want_mean[1]).powi(2)).collect();
    vec![
        ("mean x".into(), mx, want_mean[0], mc_se(&x)),
        ("mean y".into(), my, want_mean[1], mc_se(&y)),
        ("var x".into(), mean(&xx), want_cov[0], mc_se(&xx)),
        ("cov xy".into(), mean(&xy), want_cov[1], mc_se(&xy)),
        ("var y".into(), mean(&yy), want_cov[2], mc_se(&yy)),
    ]
}

fn assert_within_3se(checks: &[(String, f64, f64, f64)]) {
    for (name, got, want, se) in checks {
        assert!((got - want).abs() < 3.0 * se, "{name}: {got} vs {want}, se {se}");
    }
}

#[test]
fn exponential_pair_matches_quadrature() {
    // inner integrals over y are in closed form; the outer ones use Simpson's rule
    let f = |g: fn(f64) -> f64| simpson(|x| (-2.0 * x).exp() * g(x), 0.0, 40.0, 40_000);
    let z = f(|x| 1.0 / (x + 3.0));
    let ex = f(|x| x / (x + 3.0)) / z;
    let ey = f(|x| 1.0 / (x + 3.0).powi(2)) / z;
    let exx = f(|x| x * x / (x + 3.0)) / z;
    let exy = f(|x| x / (x + 3.0).powi(2)) / z;
    let eyy = f(|x| 2.0 / (x + 3.0).powi(3)) / z;
    let cfg = SamplerConfig {
        n_samples: 5000,
        thin: 4,
        proposal_sd: 1.5,
        seed: 31,
        ..SamplerConfig::default()
    };
    let t = run_custom(&ExponentialPair, &cfg, vec![-1.0, -1.0]).unwrap();
    let draws: Vec<Vec<f64>> = t.draws.iter().map(|p| vec![p[0].exp(), p[1].exp()]).collect();
    let checks = moment_checks(&draws, [ex, ey], [exx - ex * ex, exy - ex * ey, eyy - ey * ey]);
    assert_within_3se(&checks);
}

#[test]
fn gaussian_pair_reaches_its_stationary_law() {
    for v1 in [0.125, 0.875] {
        let want = gaussian_pair_covariance(v1);
        let cfg = SamplerConfig {
            n_samples: 5000,
            thin: 4,
            proposal_sd: 1.0,
            seed: 7,
            ..SamplerConfig::default()
        };
        let t = run_custom(&GaussianPair { v1 }, &cfg, vec![0.0, 0.0]).unwrap();
        assert_within_3se(&moment_checks(&t.draws, [0.0, 0.0], want));
    }
    let small = gaussian_pair_covariance(0.125);
    assert!((small[0] - 0.2).abs() < 1e-12 && (small[1] - 0.25).abs() < 1e-12 && (small[2] - 1.2).abs() < 1e-12);
    let large = gaussian_pair_covariance(0.875);
    assert!((large[0] - 1.0).abs() < 1e-12 && (large[1] - 0.75).abs() < 1e-12 && (large[2] - 2.0).abs() < 1e-12);
}

#[test]
fn grid_update_matches_metropolis_target() {
    let want = gaussian_pair_covariance(0.875);
    let cfg = SamplerConfig {
        n_samples: 3000,
        update: UpdateKind::GridInversion,
        seed: 2,
        ..SamplerConfig::default()
    };
    let t = run_custom(&GaussianPair { v1: 0.875 }, &cfg, vec![2.0, -2.0]).unwrap();
    assert_within_3se(&moment_checks(&t.draws, [0.0, 0.0], want));
}

/// `x | y` concentrated at `y`, `y | x ~ N(x/2, 1)`.
struct NearDirac;

impl Conditionals for NearDirac {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, axis: usize, p: &[f64]) -> Result<f64> {
        Ok(if axis == 0 {
            -(p[0] - p[1]).powi(2) / (2.0 * 1e-4)
        } else {
            -(p[1] - p[0] / 2.0).powi(2) / 2.0
        })
    }
}

#[test]
fn near_deterministic_conditional_pins_the_chain() {
    let cfg = SamplerConfig {
        n_samples: 2000,
        update: UpdateKind::GridInversion,
        seed: 5,
        ..SamplerConfig::default()
    };
    let t = run_custom(&NearDirac, &cfg, vec![0.0, 0.0]).unwrap();
    let on_graph = t.draws.iter().filter(|p| (p[0] - p[1]).abs() < 0.05).count() as f64 / 2000.0;
    // after every visit to the first axis the state lies on the graph
    assert!(on_graph > 0.4, "{on_graph}");
}

fn kriging_model(r: usize, n: usize, seed: u64) -> KrigingModel {
    let design = lhs_design(n, r, seed).unwrap();
    let spec = MaternSpec::geometric(2.5, r).unwrap();
    let truth = LengthVector::theta(vec![0.5; r]).unwrap();
    let y = simulate_gp(&design, &spec, 1.0, &truth, seed + 1).unwrap();
    KrigingModel::new(design, spec, y).unwrap()
}

#[test]
fn one_dimensional_chain_matches_quadrature() {
    let design = DesignSet::new(vec![vec![0.05], vec![0.21], vec![0.47], vec![0.66], vec![0.93]]).unwrap();
    let model = KrigingModel::new(design, MaternSpec::geometric(2.5, 1).unwrap(), vec![0.4, 1.1, -0.3, -0.9, 0.2]).unwrap();
    // density of u = log mu, unnormalized
    let dens = |u: f64| {
        let l = LengthVector::mu(vec![u.exp()]).unwrap();
        conditional_posterior_unnorm(&model, &l, 0).map(|p| p * u.exp()).unwrap_or(0.0)
    };
    let z = simpson(dens, -12.0, 12.0, 24_000);
    let m1 = simpson(|u| u * dens(u), -12.0, 12.0, 24_000) / z;
    let m2 = simpson(|u| u * u * dens(u), -12.0, 12.0, 24_000) / z;
    let cfg = SamplerConfig {
        n_samples: 8000,
        proposal_sd: 1.0,
        seed: 13,
        ..SamplerConfig::default()
    };
    let s = run(&model, &cfg).unwrap();
    let u: Vec<f64> = s.log_mu_draws().iter().map(|d| d[0]).collect();
    let uu: Vec<f64> = u.iter().map(|v| v * v).collect();
    assert!((mean(&u) - m1).abs() < 3.0 * mc_se(&u), "{} vs {m1}", mean(&u));
    assert!((mean(&uu) - m2).abs() < 3.0 * mc_se(&uu), "{} vs {m2}", mean(&uu));
}

#[test]
fn rejected_kriging_proposal_keeps_state() {
    struct Refuse;
    impl Conditionals for Refuse {
        fn dim(&self) -> usize {
            3
        }
        fn log_density(&self, _: usize, p: &[f64]) -> Result<f64> {
            Ok(if p.iter().all(|v| *v == 0.5) { 0.0 } else { f64::NEG_INFINITY })
        }
    }
    let mut s = ChainState::new(vec![0.5; 3], 1);
    let cfg = SamplerConfig::default();
    s.update_axis(&Refuse, &cfg, 1).unwrap();
    assert_eq!(s.point, vec![0.5; 3]);
    assert_eq!(s.proposed, vec![0, 1, 0]);
    assert_eq!(s.accepted, vec![0, 0, 0]);
}

#[test]
fn three_dimensional_acceptance_and_diagnostics() {
    let model = kriging_model(3, 30, 21);
    let cfg = SamplerConfig {
        n_samples: 1000,
        seed: 3,
        ..SamplerConfig::default()
    };
    let s = run(&model, &cfg).unwrap();
    let rep = diagnostics(&s).unwrap();
    for ax in &rep.axes {
        assert!(ax.acceptance > 0.0 && ax.acceptance < 1.0);
        assert!(ax.ess >= 1.0 && ax.ess <= 1000.0);
        assert!(ax.quantiles.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn parametrizations_sample_the_same_law() {
    let model = kriging_model(2, 20, 40);
    let base = SamplerConfig {
        n_samples: 2000,
        // thin enough for nearly independent draws, as the test assumes
        thin: 25,
        seed: 101,
        ..SamplerConfig::default()
    };
    let mu_run = run(&model, &base).unwrap();
    let theta_run = run(
        &model,
        &SamplerConfig {
            space: Parametrization::Theta,
            seed: 202,
            ..base.clone()
        },
    )
    .unwrap();
    for j in 0..2 {
        let a = column(&mu_run.mu_draws(), j);
        let b: Vec<f64> = column(&theta_run.theta_draws(), j).iter().map(|t| 1.0 / t).collect();
        let d = ks_statistic(&a, &b);
        assert!(d < ks_critical_01(a.len(), b.len()), "axis {j}: KS {d}");
    }
}

#[test]
fn dispersed_starts_agree() {
    let model = kriging_model(2, 20, 40);
    let start = |v: f64, seed: u64| SamplerConfig {
        n_samples: 2000,
        thin: 25,
        burn_in: 500,
        seed,
        init: Init::Lengths(LengthVector::mu(vec![v; 2]).unwrap()),
        ..SamplerConfig::default()
    };
    let low = run(&model, &start(1e-2, 8)).unwrap();
    let high = run(&model, &start(1e2, 9)).unwrap();
    for j in 0..2 {
        let a = column(&low.mu_draws(), j);
        let b = column(&high.mu_draws(), j);
        let d = ks_statistic(&a, &b);
        assert!(d < ks_critical_01(a.len(), b.len()), "axis {j}: KS {d}");
    }
}

fn bin_of(p: &[f64], cuts: &[f64]) -> usize {
    (p[0] > cuts[0]) as usize + 2 * (p[1] > cuts[1]) as usize
}

#[test]
fn binned_law_is_fixed_by_the_empirical_transition() {
    let model = kriging_model(2, 20, 40);
    let cfg = |seed| SamplerConfig {
        n_samples: 5000,
        thin: 10,
        seed,
        ..SamplerConfig::default()
    };
    let a = run(&model, &cfg(61)).unwrap().log_mu_draws();
    let b = run(&model, &cfg(62)).unwrap().log_mu_draws();
    let med = |d: &[Vec<f64>], j| {
        let mut c = column(d, j);
        c.sort_by(|x, y| x.partial_cmp(y).unwrap());
        c[c.len() / 2]
    };
    let cuts = [med(&a, 0), med(&a, 1)];
    // transition counts from one chain, occupancy from the other
    let mut trans = [[0.0f64; 4]; 4];
    for w in a.windows(2) {
        trans[bin_of(&w[0], &cuts)][bin_of(&w[1], &cuts)] += 1.0;
    }
    for row in trans.iter_mut() {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    let mut counts = [0.0f64; 4];
    for p in &b {
        counts[bin_of(p, &cuts)] += 1.0;
    }
    let n = b.len() as f64;
    let p: Vec<f64> = counts.iter().map(|c| c / n).collect();
    let image: Vec<f64> = (0..4).map(|j| (0..4).map(|i| p[i] * trans[i][j]).sum()).collect();
    let chi2: f64 = (0..4).map(|j| n * (p[j] - image[j]).powi(2) / image[j]).sum();
    let crit = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < crit, "chi-square {chi2} above {crit}");
}
