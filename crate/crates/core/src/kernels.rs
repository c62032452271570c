//! Matérn correlation kernels (geometric anisotropic and tensorized), the
//! correlation matrices they induce on a design set, and the closed-form
//! partial derivatives of those matrices with respect to the inverse
//! correlation lengths.
//!
//! The unit-length kernel of smoothness `nu` is
//! `K(t) = (2 sqrt(nu) t)^nu K_nu(2 sqrt(nu) t) / (Gamma(nu) 2^(nu-1))`.
//! Everything is computed internally in inverse lengths `mu = 1/theta`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_k, gamma_fn};

/// Diagonal jitter added once when a Cholesky factorization fails.
pub const CHOLESKY_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSet {
    points: Vec<f64>,
    n: usize,
    r: usize,
}

impl DesignSet {
    /// Builds a design from rows; rows must share a dimension and be pairwise distinct.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("design set needs at least one point".into()));
        }
        let r = rows[0].len();
        if r == 0 {
            return Err(Error::Invalid("design points need at least one coordinate".into()));
        }
        let mut points = Vec::with_capacity(n * r);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != r {
                return Err(Error::Shape(format!(
                    "design row {} has {} coordinates, expected {r}",
                    k + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("design row {} is not finite", k + 1)));
            }
            points.extend_from_slice(row);
        }
        let design = Self { points, n, r };
        for k in 0..n {
            for l in 0..k {
                if design.point(k) == design.point(l) {
                    return Err(Error::Invalid(format!(
                        "design rows {} and {} coincide",
                        l + 1,
                        k + 1
                    )));
                }
            }
        }
        Ok(design)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.r..(k + 1) * self.r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.r)
    }

    /// Applies the same permutation to the rows (`perm[k]` is the source row of row `k`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(perm.iter().map(|&k| self.point(k).to_vec()).collect())
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..self.n {
            for l in 0..k {
                best = best.min(euclidean(self.point(k), self.point(l)));
            }
        }
        best
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    /// Parses `x1,...,xr` header plus one point per line.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let rows = read_point_csv(reader)?;
        Self::new(rows)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_point_csv(writer, self.rows())
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Reads a headered CSV of points (`x1..xr`) into rows.
pub fn read_point_csv(reader: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for (j, h) in headers.iter().enumerate() {
        if h != format!("x{}", j + 1) {
            return Err(Error::Invalid(format!(
                "column {} header is '{h}', expected 'x{}'",
                j + 1,
                j + 1
            )));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("data line {}: cannot parse '{s}'", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != headers.len() {
            return Err(Error::Shape(format!("data line {} has {} fields", line + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_point_csv<'a>(writer: impl Write, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut rows = rows.peekable();
    let r = rows.peek().map_or(0, |row| row.len());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((1..=r).map(|j| format!("x{j}")))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_real(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reals printed with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Geometric,
    Tensorized,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geometric" => Ok(Self::Geometric),
            "tensorized" => Ok(Self::Tensorized),
            other => Err(Error::Invalid(format!("unknown kernel family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternSpec {
    pub family: KernelFamily,
    pub nu: f64,
    pub r: usize,
}

impl MaternSpec {
    pub fn new(family: KernelFamily, nu: f64, r: usize) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("smoothness must be positive, got {nu}")));
        }
        if r == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        Ok(Self { family, nu, r })
    }

    pub fn geometric(nu: f64, r: usize) -> Result<Self> {
        Self::new(KernelFamily::Geometric, nu, r)
    }

    pub fn tensorized(nu: f64, r: usize) -> Result<Self> {
        Self::new(KernelFamily::Tensorized, nu, r)
    }

    /// Correlation between two points separated by `diff`, with inverse lengths `mu`.
    pub fn correlation(&self, diff: &[f64], mu: &[f64]) -> Result<f64> {
        match self.family {
            KernelFamily::Geometric => {
                let s = scaled_norm(diff, mu);
                matern_1d(self.nu, s)
            }
            KernelFamily::Tensorized => diff
                .iter()
                .zip(mu)
                .try_fold(1.0, |acc, (d, m)| Ok(acc * matern_1d(self.nu, (d * m).abs())?)),
        }
    }

    /// `d/d mu_i` of the correlation between two points separated by `diff`.
    pub fn correlation_partial(&self, diff: &[f64], mu: &[f64], i: usize) -> Result<f64> {
        let xi = diff[i];
        if xi == 0.0 {
            return Ok(0.0);
        }
        match self.family {
            KernelFamily::Geometric => {
                let s = scaled_norm(diff, mu);
                Ok(xi * xi * mu[i] * radial_slope(self.nu, s)?)
            }
            KernelFamily::Tensorized => {
                let s = (xi * mu[i]).abs();
                let mut out = xi * xi * mu[i] * radial_slope(self.nu, s)?;
                for (j, (d, m)) in diff.iter().zip(mu).enumerate() {
                    if j != i {
                        out *= matern_1d(self.nu, (d * m).abs())?;
                    }
                }
                Ok(out)
            }
        }
    }
}

fn scaled_norm(diff: &[f64], mu: &[f64]) -> f64 {
    diff.iter().zip(mu).map(|(d, m)| (d * m) * (d * m)).sum::<f64>().sqrt()
}

/// `z^a K_a(z) / (Gamma(a) 2^(a-1))`, equal to 1 at `z = 0`.
fn matern_normalized(a: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(1.0);
    }
    if a >= 1.0 && z < 1e-100 {
        // correction terms are below double precision here
        return Ok(1.0);
    }
    let k = bessel_k(a, z)?;
    Ok((a * z.ln() + k.ln() - gamma_fn(a).ln() - (a - 1.0) * std::f64::consts::LN_2)
        .exp()
        .min(1.0))
}

/// `(1/s) dK/ds` of the unit-length one-dimensional kernel, for `s > 0`.
fn radial_slope(nu: f64, s: f64) -> Result<f64> {
    let y = 2.0 * nu.sqrt() * s;
    if nu > 1.0 {
        Ok(-(2.0 * nu / (nu - 1.0)) * matern_normalized(nu - 1.0, y)?)
    } else if nu == 1.0 {
        if s == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-4.0 * bessel_k(0.0, 2.0 * s)?)
    } else {
        let c = 2.0 * nu.powf(nu) * gamma_fn(1.0 - nu) / gamma_fn(nu);
        Ok(-c * s.powf(2.0 * nu - 2.0) * matern_normalized(1.0 - nu, y)?)
    }
}

/// One-dimensional Matérn correlation with unit length at lag `t >= 0`.
pub fn matern_1d(nu: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("smoothness must be positive, got {nu}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("lag must be nonnegative, got {t}")));
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let z = 2.0 * nu.sqrt() * t;
    if z > 700.0 {
        return Ok(0.0);
    }
    matern_normalized(nu, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    /// Correlation lengths.
    Theta,
    /// Inverse correlation lengths.
    Mu,
}

/// A vector of correlation lengths or their inverses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthVector {
    values: Vec<f64>,
    parametrization: Parametrization,
}

impl LengthVector {
    pub fn new(values: Vec<f64>, parametrization: Parametrization) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("length vector must not be empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("length components must be positive and finite, got {v}")));
        }
        Ok(Self {
            values,
            parametrization,
        })
    }

    pub fn theta(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Parametrization::Theta)
    }

    pub fn mu(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Parametrization::Mu)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn parametrization(&self) -> Parametrization {
        self.parametrization
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mu_values(&self) -> Vec<f64> {
        match self.parametrization {
            Parametrization::Mu => self.values.clone(),
            Parametrization::Theta => self.values.iter().map(|v| 1.0 / v).collect(),
        }
    }

    pub fn theta_values(&self) -> Vec<f64> {
        match self.parametrization {
            Parametrization::Theta => self.values.clone(),
            Parametrization::Mu => self.values.iter().map(|v| 1.0 / v).collect(),
        }
    }

    pub fn to_mu(&self) -> Self {
        Self {
            values: self.mu_values(),
            parametrization: Parametrization::Mu,
        }
    }

    pub fn to_theta(&self) -> Self {
        Self {
            values: self.theta_values(),
            parametrization: Parametrization::Theta,
        }
    }

    pub fn to(&self, parametrization: Parametrization) -> Self {
        match parametrization {
            Parametrization::Mu => self.to_mu(),
            Parametrization::Theta => self.to_theta(),
        }
    }
}

/// A correlation matrix with its cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct CorrMatrix {
    sigma: DMatrix<f64>,
    lower: DMatrix<f64>,
    log_det: f64,
    jittered: bool,
}

impl CorrMatrix {
    /// Factorizes `sigma`, adding [`CHOLESKY_JITTER`] to the diagonal once on failure.
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        let (lower, jittered) = cholesky_with_jitter(&sigma)?;
        let log_det = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            sigma,
            lower,
            log_det,
            jittered,
        })
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn n(&self) -> usize {
        self.sigma.nrows()
    }

    /// `L^{-1} v`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(v)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `L^{-1} M`.
    pub fn whiten_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.lower
            .solve_lower_triangular(m)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `Sigma^{-1} v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = self.whiten(v);
        self.lower
            .tr_solve_lower_triangular(&w)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `v^T Sigma^{-1} v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        self.whiten(v).norm_squared()
    }
}

pub(crate) fn cholesky_with_jitter(sigma: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if let Some(ch) = sigma.clone().cholesky() {
        return Ok((ch.l(), false));
    }
    let mut jittered = sigma.clone();
    for k in 0..jittered.nrows() {
        jittered[(k, k)] += CHOLESKY_JITTER;
    }
    match jittered.cholesky() {
        Some(ch) => Ok((ch.l(), true)),
        None => Err(Error::NotPositiveDefinite),
    }
}

fn check_shapes(spec: &MaternSpec, design: &DesignSet, lengths: usize) -> Result<()> {
    if design.r() != spec.r || lengths != spec.r {
        return Err(Error::Shape(format!(
            "design dimension {}, kernel dimension {}, length vector size {lengths}",
            design.r(),
            spec.r
        )));
    }
    Ok(())
}

/// Raw correlation table (no factorization).
pub fn corr_table(spec: &MaternSpec, design: &DesignSet, mu: &[f64]) -> Result<DMatrix<f64>> {
    check_shapes(spec, design, mu.len())?;
    let n = design.n();
    let mut sigma = DMatrix::identity(n, n);
    let mut diff = vec![0.0; spec.r];
    for k in 0..n {
        for l in 0..k {
            for (d, (a, b)) in diff.iter_mut().zip(design.point(k).iter().zip(design.point(l))) {
                *d = a - b;
            }
            let c = spec.correlation(&diff, mu)?;
            sigma[(k, l)] = c;
            sigma[(l, k)] = c;
        }
    }
    Ok(sigma)
}

/// Correlation matrix of the design under the given lengths, factorized.
pub fn corr_matrix(spec: &MaternSpec, design: &DesignSet, lengths: &LengthVector) -> Result<CorrMatrix> {
    CorrMatrix::from_matrix(corr_table(spec, design, &lengths.mu_values())?)
}

/// `d Sigma / d mu_i` (0-based axis `i`).
pub fn corr_matrix_partial(
    spec: &MaternSpec,
    design: &DesignSet,
    mu: &LengthVector,
    i: usize,
) -> Result<DMatrix<f64>> {
    corr_partial_table(spec, design, &mu.mu_values(), i)
}

pub(crate) fn corr_partial_table(
    spec: &MaternSpec,
    design: &DesignSet,
    mu: &[f64],
    i: usize,
) -> Result<DMatrix<f64>> {
    check_shapes(spec, design, mu.len())?;
    if i >= spec.r {
        return Err(Error::Domain(format!("axis {i} out of range for dimension {}", spec.r)));
    }
    let n = design.n();
    let mut out = DMatrix::zeros(n, n);
    let mut diff = vec![0.0; spec.r];
    for k in 0..n {
        for l in 0..k {
            for (d, (a, b)) in diff.iter_mut().zip(design.point(k).iter().zip(design.point(l))) {
                *d = a - b;
            }
            let v = spec.correlation_partial(&diff, mu, i)?;
            out[(k, l)] = v;
            out[(l, k)] = v;
        }
    }
    Ok(out)
}

/// Correlations between `x0` and every design point.
pub fn cross_corr(
    spec: &MaternSpec,
    design: &DesignSet,
    lengths: &LengthVector,
    x0: &[f64],
) -> Result<DVector<f64>> {
    cross_corr_mu(spec, design, &lengths.mu_values(), x0)
}

pub(crate) fn cross_corr_mu(spec: &MaternSpec, design: &DesignSet, mu: &[f64], x0: &[f64]) -> Result<DVector<f64>> {
    check_shapes(spec, design, mu.len())?;
    if x0.len() != spec.r {
        return Err(Error::Shape(format!("point has {} coordinates, expected {}", x0.len(), spec.r)));
    }
    let mut diff = vec![0.0; spec.r];
    let mut out = DVector::zeros(design.n());
    for (k, p) in design.rows().enumerate() {
        for (d, (a, b)) in diff.iter_mut().zip(x0.iter().zip(p)) {
            *d = a - b;
        }
        out[k] = spec.correlation(&diff, mu)?;
    }
    Ok(out)
}

/// True iff no two points share any coordinate value.
pub fn coordinate_distinct(design: &DesignSet) -> bool {
    (0..design.r()).all(|j| {
        let mut column: Vec<f64> = design.rows().map(|p| p[j]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        column.windows(2).all(|w| w[0] != w[1])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(xs: &[f64]) -> DesignSet {
        DesignSet::new(xs.iter().map(|x| vec![*x]).collect()).unwrap()
    }

    #[test]
    fn matern_at_origin_is_one() {
        for nu in [0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.7] {
            assert_eq!(matern_1d(nu, 0.0).unwrap(), 1.0);
            assert!(matern_1d(nu, 1e-9).unwrap() <= 1.0);
        }
        assert!(matern_1d(1.5, -0.1).is_err());
    }

    #[test]
    fn matern_half_integer_closed_forms() {
        let s2 = 2f64.sqrt();
        let s10 = 10f64.sqrt();
        for t in [0.1, 1.0, 3.0] {
            assert_relative_eq!(matern_1d(0.5, t).unwrap(), (-s2 * t).exp(), max_relative = 1e-10);
        }
        for t in [0.1, 1.0] {
            let expected = (1.0 + s10 * t + 10.0 / 3.0 * t * t) * (-s10 * t).exp();
            assert_relative_eq!(matern_1d(2.5, t).unwrap(), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn matern_decreasing() {
        for nu in [0.4, 1.0, 2.5] {
            let mut prev = 1.0;
            for k in 1..200 {
                let v = matern_1d(nu, 0.05 * k as f64).unwrap();
                assert!(v < prev && v > 0.0);
                prev = v;
            }
        }
    }

    #[test]
    fn two_point_off_diagonal() {
        let spec = MaternSpec::geometric(0.5, 1).unwrap();
        let c = corr_matrix(&spec, &line(&[0.0, 1.0]), &LengthVector::theta(vec![1.0]).unwrap()).unwrap();
        assert_relative_eq!(c.sigma()[(0, 1)], (-2f64.sqrt()).exp(), max_relative = 1e-12);
        assert_relative_eq!(c.sigma()[(0, 1)], 0.243_116_7, epsilon = 1e-7);
    }

    #[test]
    fn single_point_is_unit() {
        let spec = MaternSpec::geometric(2.5, 2).unwrap();
        let d = DesignSet::new(vec![vec![0.3, 0.4]]).unwrap();
        let c = corr_matrix(&spec, &d, &LengthVector::theta(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(c.sigma(), &DMatrix::from_element(1, 1, 1.0));
        assert_eq!(c.log_det(), 0.0);
    }

    #[test]
    fn negligible_correlation_is_identity() {
        let spec = MaternSpec::geometric(2.5, 3).unwrap();
        let d = DesignSet::new(vec![
            vec![0.1, 0.2, 0.3],
            vec![0.9, 0.15, 0.5],
            vec![0.4, 0.8, 0.05],
        ])
        .unwrap();
        let c = corr_matrix(&spec, &d, &LengthVector::mu(vec![1e4; 3]).unwrap()).unwrap();
        let diff = c.sigma() - DMatrix::identity(3, 3);
        assert!(diff.norm() < 1e-6);
    }

    #[test]
    fn partial_has_zero_diagonal_and_nonpositive_entries() {
        let d = DesignSet::new(vec![vec![0.1, 0.7], vec![0.5, 0.2], vec![0.95, 0.45]]).unwrap();
        for spec in [MaternSpec::geometric(1.5, 2).unwrap(), MaternSpec::tensorized(0.7, 2).unwrap()] {
            let m = corr_matrix_partial(&spec, &d, &LengthVector::mu(vec![1.3, 2.1]).unwrap(), 1).unwrap();
            for k in 0..3 {
                assert_eq!(m[(k, k)], 0.0);
                for l in 0..3 {
                    assert!(m[(k, l)] <= 0.0);
                }
            }
        }
        let spec = MaternSpec::geometric(1.5, 2).unwrap();
        assert!(corr_matrix_partial(&spec, &d, &LengthVector::mu(vec![1.0, 1.0]).unwrap(), 2).is_err());
    }

    #[test]
    fn partial_nu_above_one_rewrite() {
        // -(2nu/(nu-1)) x^2 mu K_{nu-1}-type term, with the nu-1 kernel evaluated
        // at Bessel argument 2 sqrt(nu) |x mu|
        let nu = 2.5;
        let spec = MaternSpec::geometric(nu, 1).unwrap();
        let (x, mu) = (0.8, 1.7);
        let d = line(&[0.0, x]);
        let m = corr_matrix_partial(&spec, &d, &LengthVector::mu(vec![mu]).unwrap(), 0).unwrap();
        let y: f64 = 2.0 * nu.sqrt() * x * mu;
        let a = nu - 1.0;
        let k_lower = y.powf(a) * bessel_k(a, y).unwrap() / (gamma_fn(a) * 2f64.powf(a - 1.0));
        let expected = -(2.0 * nu / (nu - 1.0)) * x * x * mu * k_lower;
        assert_relative_eq!(m[(0, 1)], expected, max_relative = 1e-12);
        let h = 1e-6;
        let up = matern_1d(nu, x * (mu + h)).unwrap();
        let dn = matern_1d(nu, x * (mu - h)).unwrap();
        assert_relative_eq!(m[(0, 1)], (up - dn) / (2.0 * h), max_relative = 1e-6);
    }

    #[test]
    fn cross_corr_properties() {
        let spec = MaternSpec::geometric(2.5, 1).unwrap();
        let d = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let l = LengthVector::theta(vec![0.3]).unwrap();
        let v = cross_corr(&spec, &d, &l, &[0.25]).unwrap();
        assert_eq!(v[1], 1.0);
        let c = cross_corr(&spec, &d, &l, &[0.5]).unwrap();
        for k in 0..5 {
            assert_relative_eq!(c[k], c[4 - k], max_relative = 1e-14);
        }
        let far = cross_corr(&spec, &d, &l, &[50.0]).unwrap();
        assert!(far.iter().all(|v| *v < 1e-6));
        assert!(cross_corr(&spec, &d, &l, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn coordinate_distinct_cases() {
        let grid = DesignSet::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(!coordinate_distinct(&grid));
        assert!(coordinate_distinct(&DesignSet::new(vec![vec![0.2, 0.3]]).unwrap()));
        let diag = DesignSet::new(vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert!(coordinate_distinct(&diag));
    }

    #[test]
    fn design_rejects_duplicates_and_parses_csv() {
        assert!(DesignSet::new(vec![vec![0.1], vec![0.1]]).is_err());
        assert!(DesignSet::new(vec![]).is_err());
        let d = DesignSet::from_csv_reader("x1,x2\n0.1,0.2\n0.3, 0.4\n".as_bytes()).unwrap();
        assert_eq!((d.n(), d.r()), (2, 2));
        assert_eq!(d.point(1), &[0.3, 0.4]);
        assert!(DesignSet::from_csv_reader("a,b\n0.1,0.2\n".as_bytes()).is_err());
        assert!(DesignSet::from_csv_reader("x1\nfoo\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(DesignSet::from_csv_reader(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn length_vector_conversion() {
        let t = LengthVector::theta(vec![0.5, 4.0]).unwrap();
        assert_eq!(t.mu_values(), vec![2.0, 0.25]);
        assert_eq!(t.to_mu().to_theta(), t);
        assert!(LengthVector::theta(vec![0.0]).is_err());
        assert!(LengthVector::mu(vec![]).is_err());
    }

    #[test]
    fn jitter_then_failure() {
        let singular = DMatrix::from_element(2, 2, 1.0);
        let c = CorrMatrix::from_matrix(singular);
        // the all-ones matrix becomes PD after jitter
        assert!(c.unwrap().jittered());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(CorrMatrix::from_matrix(bad).unwrap_err(), Error::NotPositiveDefinite);
    }
}
