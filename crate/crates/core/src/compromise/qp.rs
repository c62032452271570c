//! Primal active-set method for convex quadratic programs of the form
//! `min 1/2 x^T G x` subject to `E x = b` and `x >= 0`, started from a feasible point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Outcome diagnostics of a quadratic solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpReport {
    pub iterations: usize,
    /// Infinity norm of the stationarity residual `G x - E^T lambda - mu`.
    pub kkt_residual: f64,
    /// Infinity norm of `E x - b`.
    pub constraint_residual: f64,
    /// Most negative bound multiplier.
    pub min_multiplier: f64,
}

const ZERO: f64 = 1e-13;

fn pinv_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-12).max(1e-300);
    svd.solve(rhs, eps).map_err(|e| Error::SolverFailure(e.to_string()))
}

fn select_cols(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

/// Bound multipliers at `x` given the free variables.
fn multipliers(
    g: &DMatrix<f64>,
    eq: &DMatrix<f64>,
    x: &DVector<f64>,
    free: &[usize],
) -> Result<DVector<f64>> {
    let grad = g * x;
    let ef = select_cols(eq, free);
    let gf = DVector::from_iterator(free.len(), free.iter().map(|&k| grad[k]));
    // least squares for E_F^T lambda = g_F
    let lambda = if free.is_empty() {
        DVector::zeros(eq.nrows())
    } else {
        pinv_solve(&ef.transpose(), &gf)?
    };
    Ok(&grad - eq.transpose() * &lambda)
}

pub(crate) fn solve(
    g: &DMatrix<f64>,
    eq: &DMatrix<f64>,
    b: &DVector<f64>,
    start: Vec<f64>,
) -> Result<(Vec<f64>, QpReport)> {
    let n = g.nrows();
    let m = eq.nrows();
    let mut x = DVector::from_vec(start);
    let mut active: Vec<bool> = x.iter().map(|v| *v <= ZERO).collect();
    for (k, a) in active.iter().enumerate() {
        if *a {
            x[k] = 0.0;
        }
    }
    let max_iter = 50 * n + 1000;
    let scale = g.amax().max(1.0);
    for iter in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|k| !active[*k]).collect();
        let nf = free.len();
        let grad = g * &x;
        let gff = DMatrix::from_fn(nf, nf, |a, c| g[(free[a], free[c])]);
        let ef = select_cols(eq, &free);
        let mut kkt = DMatrix::zeros(nf + m, nf + m);
        kkt.view_mut((0, 0), (nf, nf)).copy_from(&gff);
        kkt.view_mut((0, nf), (nf, m)).copy_from(&ef.transpose());
        kkt.view_mut((nf, 0), (m, nf)).copy_from(&ef);
        let mut rhs = DVector::zeros(nf + m);
        for (a, &k) in free.iter().enumerate() {
            rhs[a] = -grad[k];
        }
        let sol = pinv_solve(&kkt, &rhs)?;
        let step = sol.rows(0, nf).into_owned();

        if step.amax() <= 1e-12 {
            let mu = multipliers(g, eq, &x, &free)?;
            let mut worst = None;
            let mut worst_val = -1e-11 * scale;
            for k in 0..n {
                if active[k] && mu[k] < worst_val {
                    worst_val = mu[k];
                    worst = Some(k);
                }
            }
            match worst {
                Some(k) => active[k] = false,
                None => {
                    let mut stationarity = 0.0f64;
                    let mut min_mult = f64::INFINITY;
                    for k in 0..n {
                        if active[k] {
                            min_mult = min_mult.min(mu[k]);
                        } else {
                            stationarity = stationarity.max(mu[k].abs());
                        }
                    }
                    let cres = (eq * &x - b).amax();
                    let total: f64 = x.iter().sum();
                    let out: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
                    log::debug!("active-set solve finished in {iter} iterations, sum {total}");
                    return Ok((
                        out,
                        QpReport {
                            iterations: iter,
                            kkt_residual: stationarity,
                            constraint_residual: cres,
                            min_multiplier: if min_mult.is_finite() { min_mult } else { 0.0 },
                        },
                    ));
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for (a, &k) in free.iter().enumerate() {
            if step[a] < -ZERO {
                let t = -x[k] / step[a];
                if t < alpha {
                    alpha = t;
                    blocking = Some(k);
                }
            }
        }
        for (a, &k) in free.iter().enumerate() {
            x[k] += alpha * step[a];
        }
        if let Some(k) = blocking {
            x[k] = 0.0;
            active[k] = true;
        }
    }
    Err(Error::SolverFailure(format!(
        "active-set iteration budget of {max_iter} exhausted"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_simplex() {
        // the minimizer of |x|^2 on the simplex is uniform
        let g = DMatrix::identity(3, 3) * 2.0;
        let eq = DMatrix::from_element(1, 3, 1.0);
        let b = DVector::from_element(1, 1.0);
        let (x, rep) = solve(&g, &eq, &b, vec![1.0, 0.0, 0.0]).unwrap();
        for v in x {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(rep.kkt_residual < 1e-9);
    }

    #[test]
    fn active_bound() {
        // (x0 - x1)^2 + 4 x2^2 is singular along x0 = x1
        let g = DMatrix::from_row_slice(3, 3, &[2.0, -2.0, 0.0, -2.0, 2.0, 0.0, 0.0, 0.0, 8.0]);
        let eq = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let b = DVector::from_element(1, 1.0);
        let (x, _) = solve(&g, &eq, &b, vec![0.2, 0.2, 0.6]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12 && x[2].abs() < 1e-12);
    }
}
