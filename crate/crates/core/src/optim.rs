//! Derivative-free local minimization.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;

use crate::error::{Error, Result};

/// Cost used in place of failed or non-finite evaluations.
const PENALTY: f64 = 1e100;

struct Problem<F> {
    f: F,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Problem<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let v = (self.f)(p);
        Ok(if v.is_finite() { v.min(PENALTY) } else { PENALTY })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
}

/// Nelder–Mead from `start` with an axis-aligned initial simplex of edge `steps`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], steps: &[f64], max_iters: u64) -> Result<Minimum> {
    let mut simplex = vec![start.to_vec()];
    for (j, s) in steps.iter().enumerate() {
        let mut v = start.to_vec();
        v[j] += s;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .map_err(|e| Error::OptimFailure(e.to_string()))?;
    let res = Executor::new(Problem { f }, solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| Error::OptimFailure(e.to_string()))?;
    let state = res.state();
    let point = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::OptimFailure("no evaluated point".into()))?;
    let value = state.get_best_cost();
    if value >= PENALTY {
        return Err(Error::OptimFailure("objective is undefined everywhere visited".into()));
    }
    Ok(Minimum {
        point,
        value,
        iterations: state.get_iter(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 5000).unwrap();
        assert!((m.point[0] - 1.0).abs() < 1e-4 && (m.point[1] - 1.0).abs() < 1e-4, "{:?}", m.point);
    }

    #[test]
    fn undefined_objective_fails() {
        assert!(nelder_mead(|_| f64::NAN, &[0.0], &[1.0], 50).is_err());
    }
}
