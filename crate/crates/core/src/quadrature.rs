//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
}

struct Budget {
    evals: usize,
    max_evals: usize,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, using at most `max_evals`
/// function evaluations.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<Estimate> {
    let mut budget = Budget { evals: 3, max_evals };
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let (value, abs_error) = recurse(&mut f, a, b, fa, fm, fb, whole, tol, 50, &mut budget)?;
    Ok(Estimate {
        value,
        abs_error,
        evals: budget.evals,
    })
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut Budget,
) -> Result<(f64, f64)> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    if budget.evals + 2 > budget.max_evals {
        return Err(Error::QuadratureDivergence(format!(
            "evaluation budget of {} exhausted",
            budget.max_evals
        )));
    }
    let flm = f(lm);
    let frm = f(rm);
    budget.evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::QuadratureDivergence("non-finite integrand".into()));
    }
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            return Err(Error::QuadratureDivergence("maximum bisection depth reached".into()));
        }
        return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
    }
    let (l, el) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget)?;
    let (r, er) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)?;
    Ok((l + r, el + er))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_gaussian() {
        let e = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 1000).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
        let g = adaptive_simpson(|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-12, 100_000).unwrap();
        assert!((g.value - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion() {
        let e = adaptive_simpson(|x: f64| x.sin() * 1e6, 0.0, 1000.0, 1e-14, 50);
        assert!(matches!(e, Err(Error::QuadratureDivergence(_))));
    }
}
