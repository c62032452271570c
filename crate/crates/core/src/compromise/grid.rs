//! Uniform two-dimensional grids for continuous conditional densities.

use crate::error::{Error, Result};

use super::FiniteKernelSystem;

/// Uniform tensor grid on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Grid2 {
    /// `nx` by `ny` nodes spanning `[x0, x1] x [y0, y1]`, endpoints included.
    pub fn uniform(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
            return Err(Error::Invalid("grid needs at least two nodes per axis on a nonempty box".into()));
        }
        let axis = |(a, b): (f64, f64), m: usize| (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect();
        Ok(Self {
            x: axis(x_range, nx),
            y: axis(y_range, ny),
        })
    }

    /// The default 400 by 400 grid.
    pub fn square(x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self> {
        Self::uniform(x_range, y_range, 400, 400)
    }

    pub fn tabulate(&self, f: impl Fn(f64, f64) -> f64) -> GridTable {
        let mut values = Vec::with_capacity(self.x.len() * self.y.len());
        for &x in &self.x {
            for &y in &self.y {
                values.push(f(x, y));
            }
        }
        GridTable {
            nx: self.x.len(),
            ny: self.y.len(),
            values,
        }
    }
}

/// Values on a grid, indexed `[ix * ny + iy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl GridTable {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }
}

/// Tests whether `log p1(x|y) - log p2(y|x)` splits as `g(x) + h(y)`: every mixed
/// second difference of the log-ratio must be below `tol` in absolute value.
pub fn ratio_compatibility_check(p1: &GridTable, p2: &GridTable, tol: f64) -> Result<bool> {
    if p1.nx != p2.nx || p1.ny != p2.ny {
        return Err(Error::Shape("density grids differ in shape".into()));
    }
    if p1.values.iter().chain(&p2.values).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("density grids must be strictly positive".into()));
    }
    let lr = |ix: usize, iy: usize| p1.at(ix, iy).ln() - p2.at(ix, iy).ln();
    for ix in 0..p1.nx - 1 {
        for iy in 0..p1.ny - 1 {
            let d = lr(ix + 1, iy + 1) - lr(ix + 1, iy) - lr(ix, iy + 1) + lr(ix, iy);
            if d.abs() >= tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Two-axis finite system from conditional densities on a grid: `axis0(x, y)` is the
/// density of the first coordinate given the second, `axis1(y, x)` the reverse. Each
/// row is normalized to a probability vector over the grid nodes.
pub fn discretize_kernel(
    grid: &Grid2,
    axis0: impl Fn(f64, f64) -> f64,
    axis1: impl Fn(f64, f64) -> f64,
) -> Result<FiniteKernelSystem> {
    let (nx, ny) = (grid.x.len(), grid.y.len());
    let mut k0 = Vec::with_capacity(nx * ny);
    for &y in &grid.y {
        let row: Vec<f64> = grid.x.iter().map(|&x| axis0(x, y)).collect();
        push_normalized(&mut k0, row)?;
    }
    let mut k1 = Vec::with_capacity(nx * ny);
    for &x in &grid.x {
        let row: Vec<f64> = grid.y.iter().map(|&y| axis1(y, x)).collect();
        push_normalized(&mut k1, row)?;
    }
    FiniteKernelSystem::new(vec![nx, ny], vec![k0, k1])
}

fn push_normalized(out: &mut Vec<f64>, row: Vec<f64>) -> Result<()> {
    let total: f64 = row.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Invalid("conditional density vanishes on a grid row".into()));
    }
    out.extend(row.into_iter().map(|v| v / total));
    Ok(())
}
