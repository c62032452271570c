//! Compromises between families of conditional distributions on finite product
//! spaces.
//!
//! Tables over a product space are stored row-major with the last axis varying
//! fastest. A conditional kernel for axis `i` is a table whose rows are indexed
//! by the configuration of the remaining axes (same ordering, axis `i` skipped)
//! and whose columns are the values of axis `i`.

mod grid;
mod qp;

use std::path::Path;

use nalgebra::DMatrix;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{discretize_kernel, ratio_compatibility_check, Grid2, GridTable};
pub use qp::QpReport;

/// Largest product space handled by the stationary-distribution solver.
pub const MAX_STATES: usize = 1_000_000;
/// Largest product space handled by the dense quadratic solvers.
pub const MAX_QP_STATES: usize = 4096;

const ROW_SUM_TOL: f64 = 1e-12;

fn product(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Invalid("at least one axis is required".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Invalid("axis sizes must be positive".into()));
    }
    let n = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::Invalid("product space too large".into()))?;
    if n > MAX_STATES {
        return Err(Error::Invalid(format!("{n} joint states exceed the cap of {MAX_STATES}")));
    }
    Ok(())
}

/// Index arithmetic for one axis of a row-major product space.
#[derive(Debug, Clone, Copy)]
struct AxisView {
    stride: usize,
    size: usize,
}

impl AxisView {
    fn new(sizes: &[usize], i: usize) -> Self {
        Self {
            stride: product(&sizes[i + 1..]),
            size: sizes[i],
        }
    }

    fn value(&self, idx: usize) -> usize {
        (idx / self.stride) % self.size
    }

    /// Index of the configuration with axis `i` removed.
    fn minus(&self, idx: usize) -> usize {
        (idx / (self.stride * self.size)) * self.stride + idx % self.stride
    }

    /// Inverse of `minus` with axis `i` set to `v`.
    fn with(&self, rest: usize, v: usize) -> usize {
        (rest / self.stride) * self.stride * self.size + v * self.stride + rest % self.stride
    }
}

/// A probability table over a finite product space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        check_sizes(&sizes)?;
        if probs.len() != product(&sizes) {
            return Err(Error::Shape(format!(
                "{} probabilities for {} states",
                probs.len(),
                product(&sizes)
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Invalid("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL * (probs.len() as f64).max(1.0) {
            return Err(Error::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { sizes, probs })
    }

    /// Builds a table from nonnegative weights, normalizing them.
    pub fn from_weights(sizes: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Invalid("weights must have a positive finite sum".into()));
        }
        Self::new(sizes, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(sizes: Vec<usize>) -> Result<Self> {
        check_sizes(&sizes)?;
        let n = product(&sizes);
        Self::new(sizes, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(sizes: Vec<usize>, at: &[usize]) -> Result<Self> {
        check_sizes(&sizes)?;
        let mut probs = vec![0.0; product(&sizes)];
        probs[flat_index(&sizes, at)?] = 1.0;
        Self::new(sizes, probs)
    }

    pub(crate) fn from_raw(sizes: Vec<usize>, probs: Vec<f64>) -> Self {
        Self { sizes, probs }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, at: &[usize]) -> Result<f64> {
        Ok(self.probs[flat_index(&self.sizes, at)?])
    }

    /// One-dimensional marginal of axis `k`.
    pub fn axis_marginal(&self, k: usize) -> Vec<f64> {
        let view = AxisView::new(&self.sizes, k);
        let mut out = vec![0.0; view.size];
        for (idx, p) in self.probs.iter().enumerate() {
            out[view.value(idx)] += p;
        }
        out
    }

    pub fn l1_distance(&self, other: &JointTable) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Applies a bijective relabeling to each axis: value `v` of axis `k` becomes `maps[k][v]`.
    pub fn relabeled(&self, maps: &[Vec<usize>]) -> Result<Self> {
        check_relabeling(&self.sizes, maps)?;
        let mut probs = vec![0.0; self.probs.len()];
        for (idx, p) in self.probs.iter().enumerate() {
            probs[relabel_index(&self.sizes, maps, idx)] = *p;
        }
        Ok(Self::from_raw(self.sizes.clone(), probs))
    }
}

fn flat_index(sizes: &[usize], at: &[usize]) -> Result<usize> {
    if at.len() != sizes.len() || at.iter().zip(sizes).any(|(a, s)| a >= s) {
        return Err(Error::Shape(format!("configuration {at:?} outside sizes {sizes:?}")));
    }
    Ok(at.iter().zip(sizes).fold(0, |acc, (a, s)| acc * s + a))
}

fn check_relabeling(sizes: &[usize], maps: &[Vec<usize>]) -> Result<()> {
    if maps.len() != sizes.len() {
        return Err(Error::Shape("one relabeling per axis is required".into()));
    }
    for (map, &s) in maps.iter().zip(sizes) {
        let mut seen = vec![false; s];
        if map.len() != s {
            return Err(Error::Shape("relabeling size mismatch".into()));
        }
        for &v in map {
            if v >= s || seen[v] {
                return Err(Error::Invalid("relabeling is not a bijection".into()));
            }
            seen[v] = true;
        }
    }
    Ok(())
}

fn relabel_index(sizes: &[usize], maps: &[Vec<usize>], idx: usize) -> usize {
    let mut rest = idx;
    let mut coords = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        coords[k] = maps[k][rest % sizes[k]];
        rest /= sizes[k];
    }
    coords.iter().zip(sizes).fold(0, |acc, (a, s)| acc * s + a)
}

/// A family of conditional kernels, one per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteKernelSystem {
    sizes: Vec<usize>,
    /// `kernels[i]` holds `rows x sizes[i]` probabilities, row-major.
    kernels: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct SystemDocument {
    sizes: Vec<usize>,
    kernels: Vec<Vec<Vec<f64>>>,
}

impl FiniteKernelSystem {
    pub fn new(sizes: Vec<usize>, kernels: Vec<Vec<f64>>) -> Result<Self> {
        check_sizes(&sizes)?;
        if kernels.len() != sizes.len() {
            return Err(Error::Shape(format!(
                "{} kernels for {} axes",
                kernels.len(),
                sizes.len()
            )));
        }
        let n = product(&sizes);
        for (i, k) in kernels.iter().enumerate() {
            if k.len() != n {
                return Err(Error::Shape(format!(
                    "kernel {} has {} entries, expected {n}",
                    i + 1,
                    k.len()
                )));
            }
            if k.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::Invalid(format!("kernel {} has a negative or non-finite entry", i + 1)));
            }
            for (row, chunk) in k.chunks_exact(sizes[i]).enumerate() {
                let s: f64 = chunk.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::Invalid(format!(
                        "kernel {} row {} sums to {s}",
                        i + 1,
                        row + 1
                    )));
                }
            }
        }
        Ok(Self { sizes, kernels })
    }

    /// Parses `{"sizes": [...], "kernels": [[row, ...], ...]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SystemDocument = serde_json::from_str(text)?;
        let kernels = doc
            .kernels
            .into_iter()
            .map(|rows| rows.into_iter().flatten().collect())
            .collect();
        Self::new(doc.sizes, kernels)
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let kernels: Vec<Vec<Vec<f64>>> = self
            .kernels
            .iter()
            .zip(&self.sizes)
            .map(|(k, &s)| k.chunks_exact(s).map(|c| c.to_vec()).collect())
            .collect();
        serde_json::json!({ "sizes": self.sizes, "kernels": kernels })
    }

    /// The system of conditionals of a joint table. Rows with zero mass become uniform.
    pub fn from_joint(joint: &JointTable) -> Self {
        let sizes = joint.sizes.clone();
        let kernels = (0..sizes.len())
            .map(|i| {
                let view = AxisView::new(&sizes, i);
                let rows = joint.len() / view.size;
                let mut k = vec![0.0; joint.len()];
                for rest in 0..rows {
                    let total: f64 = (0..view.size).map(|v| joint.probs[view.with(rest, v)]).sum();
                    for v in 0..view.size {
                        k[rest * view.size + v] = if total > 0.0 {
                            joint.probs[view.with(rest, v)] / total
                        } else {
                            1.0 / view.size as f64
                        };
                    }
                }
                k
            })
            .collect();
        Self { sizes, kernels }
    }

    pub fn r(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_states(&self) -> usize {
        product(&self.sizes)
    }

    /// `pi_i(v | rest)`.
    pub fn prob(&self, i: usize, rest: usize, v: usize) -> f64 {
        self.kernels[i][rest * self.sizes[i] + v]
    }

    pub fn relabeled(&self, maps: &[Vec<usize>]) -> Result<Self> {
        check_relabeling(&self.sizes, maps)?;
        let n = self.n_states();
        let mut kernels = vec![vec![0.0; n]; self.r()];
        for (i, k) in kernels.iter_mut().enumerate() {
            let view = AxisView::new(&self.sizes, i);
            for idx in 0..n {
                let p = self.prob(i, view.minus(idx), view.value(idx));
                let target = relabel_index(&self.sizes, maps, idx);
                k[view.minus(target) * view.size + view.value(target)] = p;
            }
        }
        Self::new(self.sizes.clone(), kernels)
    }

    fn check_joint(&self, joint: &JointTable) -> Result<()> {
        if joint.sizes != self.sizes {
            return Err(Error::Shape(format!(
                "table sizes {:?} differ from system sizes {:?}",
                joint.sizes, self.sizes
            )));
        }
        Ok(())
    }

    /// `pi_i * P_{-i}` evaluated on every state.
    pub(crate) fn apply(&self, i: usize, p: &[f64]) -> Vec<f64> {
        let view = AxisView::new(&self.sizes, i);
        let mut marg = vec![0.0; p.len() / view.size];
        for (idx, v) in p.iter().enumerate() {
            marg[view.minus(idx)] += v;
        }
        (0..p.len())
            .map(|idx| {
                let rest = view.minus(idx);
                self.prob(i, rest, view.value(idx)) * marg[rest]
            })
            .collect()
    }

    /// `(1/r) sum_i pi_i * P_{-i}`.
    pub(crate) fn gibbs_map(&self, p: &[f64]) -> Vec<f64> {
        let r = self.r() as f64;
        let mut out = vec![0.0; p.len()];
        for i in 0..self.r() {
            for (o, v) in out.iter_mut().zip(self.apply(i, p)) {
                *o += v / r;
            }
        }
        out
    }
}

/// Sums `joint` over axis `i`, giving a table over the remaining axes.
pub fn marginal_minus_i(joint: &JointTable, i: usize) -> Result<JointTable> {
    if i >= joint.sizes.len() {
        return Err(Error::Domain(format!("axis {i} out of range")));
    }
    let view = AxisView::new(&joint.sizes, i);
    let mut sizes = joint.sizes.clone();
    sizes.remove(i);
    let mut probs = vec![0.0; joint.len() / view.size];
    for (idx, p) in joint.probs.iter().enumerate() {
        probs[view.minus(idx)] += p;
    }
    if sizes.is_empty() {
        sizes.push(1);
    }
    Ok(JointTable::from_raw(sizes, probs))
}

/// One table over the remaining axes for each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFamily {
    pub tables: Vec<JointTable>,
}

impl MarginalFamily {
    pub fn of(joint: &JointTable) -> Result<Self> {
        let tables = (0..joint.sizes.len())
            .map(|i| marginal_minus_i(joint, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tables })
    }
}

/// `pi_i m`: the joint whose axis-`i` conditional is `pi_i` and whose other axes follow `m`.
pub fn assemble(system: &FiniteKernelSystem, i: usize, m: &JointTable) -> Result<JointTable> {
    if i >= system.r() {
        return Err(Error::Domain(format!("axis {i} out of range")));
    }
    let view = AxisView::new(&system.sizes, i);
    let rows = system.n_states() / view.size;
    if m.len() != rows {
        return Err(Error::Shape(format!("marginal has {} entries, expected {rows}", m.len())));
    }
    let mut probs = vec![0.0; system.n_states()];
    for (idx, p) in probs.iter_mut().enumerate() {
        let rest = view.minus(idx);
        *p = system.prob(i, rest, view.value(idx)) * m.probs[rest];
    }
    Ok(JointTable::from_raw(system.sizes.clone(), probs))
}

/// Dense transition table of the random-scan pseudo-Gibbs chain.
pub fn gibbs_transition(system: &FiniteKernelSystem) -> Result<DMatrix<f64>> {
    let n = system.n_states();
    if n > MAX_QP_STATES {
        return Err(Error::Invalid(format!("{n} states are too many for a dense transition table")));
    }
    let r = system.r() as f64;
    let mut t = DMatrix::zeros(n, n);
    for i in 0..system.r() {
        let view = AxisView::new(&system.sizes, i);
        for from in 0..n {
            let rest = view.minus(from);
            for v in 0..view.size {
                t[(from, view.with(rest, v))] += system.prob(i, rest, v) / r;
            }
        }
    }
    Ok(t)
}

/// Number of closed communicating classes of the pseudo-Gibbs chain.
pub fn closed_class_count(system: &FiniteKernelSystem) -> usize {
    let n = system.n_states();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * system.r());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..system.r() {
        let view = AxisView::new(&system.sizes, i);
        for from in 0..n {
            let rest = view.minus(from);
            for v in 0..view.size {
                let to = view.with(rest, v);
                if to != from && system.prob(i, rest, v) > 0.0 {
                    graph.add_edge(nodes[from], nodes[to], ());
                }
            }
        }
    }
    let sccs = petgraph::algo::tarjan_scc(&graph);
    let mut component = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    let mut closed = vec![true; sccs.len()];
    for e in graph.raw_edges() {
        let (a, b) = (component[e.source().index()], component[e.target().index()]);
        if a != b {
            closed[a] = false;
        }
    }
    closed.iter().filter(|c| **c).count()
}

/// Settings for the stationary-distribution iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_iter: 1_000_000,
        }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// The unique fixed point of `P = (1/r) sum_i pi_i P_{-i}`.
pub fn gibbs_compromise(system: &FiniteKernelSystem) -> Result<JointTable> {
    gibbs_compromise_with(system, &StationaryConfig::default())
}

pub fn gibbs_compromise_with(system: &FiniteKernelSystem, cfg: &StationaryConfig) -> Result<JointTable> {
    let classes = closed_class_count(system);
    if classes != 1 {
        return Err(Error::NonUniqueStationary(classes));
    }
    let n = system.n_states();
    let lazy = |p: &[f64]| -> Vec<f64> {
        system
            .gibbs_map(p)
            .into_iter()
            .zip(p)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    };
    let mut p = vec![1.0 / n as f64; n];
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(3);
    for iter in 0..cfg.max_iter {
        let next = lazy(&p);
        let diff = l1(&next, &p);
        p = next;
        if diff < cfg.tol {
            let residual = l1(&system.gibbs_map(&p), &p);
            log::debug!("stationary iteration converged after {iter} steps, residual {residual:e}");
            let total: f64 = p.iter().sum();
            return Ok(JointTable::from_raw(system.sizes.clone(), p.iter().map(|v| v / total).collect()));
        }
        history.push(p.clone());
        if history.len() == 3 {
            if let Some(acc) = aitken(&history) {
                let acc_res = l1(&lazy(&acc), &acc);
                let cur_res = l1(&lazy(&p), &p);
                if acc_res < cur_res {
                    p = acc;
                }
            }
            history.clear();
        }
    }
    Err(Error::SolverFailure(format!(
        "stationary iteration did not converge in {} steps",
        cfg.max_iter
    )))
}

/// Componentwise Aitken extrapolation of three successive iterates, if it stays a distribution.
fn aitken(h: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(h[0].len());
    for ((&x0, &x1), &x2) in h[0].iter().zip(&h[1]).zip(&h[2]) {
        let denom = x2 - 2.0 * x1 + x0;
        let v = if denom.abs() > 1e-300 {
            x2 - (x2 - x1) * (x2 - x1) / denom
        } else {
            x2
        };
        if !(v >= 0.0) || !v.is_finite() {
            return None;
        }
        out.push(v);
    }
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some(out.into_iter().map(|v| v / total).collect())
}

/// Fixed-point residual `|| P - (1/r) sum_i pi_i P_{-i} ||_1`.
pub fn fixed_point_residual(joint: &JointTable, system: &FiniteKernelSystem) -> Result<f64> {
    system.check_joint(joint)?;
    Ok(l1(&system.gibbs_map(&joint.probs), &joint.probs))
}

/// Misfit `sum_i sum_w ((pi_i P_{-i})(w) - P(w))^2` under counting measure.
pub fn energy(joint: &JointTable, system: &FiniteKernelSystem) -> Result<f64> {
    system.check_joint(joint)?;
    Ok(energy_raw(system, &joint.probs))
}

fn energy_raw(system: &FiniteKernelSystem, p: &[f64]) -> f64 {
    (0..system.r())
        .map(|i| {
            system
                .apply(i, p)
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Checks absolute continuity of every `pi_i P_{-i}` with respect to `P` and
/// compatibility of the marginals `P_{-i}` with the averaged assembled joints.
pub fn is_compromise(joint: &JointTable, system: &FiniteKernelSystem, tol: f64) -> Result<bool> {
    system.check_joint(joint)?;
    Ok(absolutely_continuous(system, &joint.probs, tol) && {
        let avg = JointTable::from_raw(system.sizes.clone(), system.gibbs_map(&joint.probs));
        (0..system.r()).all(|i| {
            let a = marginal_minus_i(joint, i).expect("axis in range");
            let b = marginal_minus_i(&avg, i).expect("axis in range");
            a.l1_distance(&b) <= tol
        })
    })
}

fn absolutely_continuous(system: &FiniteKernelSystem, p: &[f64], tol: f64) -> bool {
    (0..system.r()).all(|i| {
        system
            .apply(i, p)
            .iter()
            .zip(p)
            .all(|(q, v)| *v > 0.0 || *q <= tol)
    })
}

/// Quadratic form of the misfit: `E(P) = P^T Q P`.
fn energy_matrix(system: &FiniteKernelSystem) -> DMatrix<f64> {
    let n = system.n_states();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..system.r() {
        // column k of (A_i - I) is the image of the k-th unit vector
        let mut a = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            let col = system.apply(i, &e);
            for (row, v) in col.iter().enumerate() {
                a[(row, k)] = *v;
            }
            a[(k, k)] -= 1.0;
            e[k] = 0.0;
        }
        q += a.transpose() * &a;
    }
    q
}

/// Rows `(axis i, value v)` of the weak-compatibility constraints, each requiring
/// the axis-`i` marginal of `pi_i P_{-i}` to equal that of `P`.
fn weak_constraints(system: &FiniteKernelSystem) -> DMatrix<f64> {
    let n = system.n_states();
    let rows: usize = system.sizes.iter().sum();
    let mut c = DMatrix::zeros(rows, n);
    let mut offset = 0;
    for i in 0..system.r() {
        let view = AxisView::new(&system.sizes, i);
        for k in 0..n {
            let rest = view.minus(k);
            for v in 0..view.size {
                c[(offset + v, k)] += system.prob(i, rest, v);
            }
            c[(offset + view.value(k), k)] -= 1.0;
        }
        offset += view.size;
    }
    c
}

fn check_qp_size(system: &FiniteKernelSystem) -> Result<()> {
    if system.n_states() > MAX_QP_STATES {
        return Err(Error::Invalid(format!(
            "{} states exceed the quadratic solver cap of {MAX_QP_STATES}",
            system.n_states()
        )));
    }
    Ok(())
}

fn qp_start(system: &FiniteKernelSystem) -> Vec<f64> {
    match gibbs_compromise(system) {
        Ok(p) => p.probs,
        Err(_) => vec![1.0 / system.n_states() as f64; system.n_states()],
    }
}

/// Global minimizer of the misfit over all distributions on the product space.
pub fn minimize_energy_unconstrained(system: &FiniteKernelSystem) -> Result<JointTable> {
    Ok(minimize_energy_unconstrained_report(system)?.0)
}

pub fn minimize_energy_unconstrained_report(system: &FiniteKernelSystem) -> Result<(JointTable, QpReport)> {
    check_qp_size(system)?;
    let n = system.n_states();
    let g = energy_matrix(system) * 2.0;
    let eq = DMatrix::from_element(1, n, 1.0);
    let b = nalgebra::DVector::from_element(1, 1.0);
    let start = vec![1.0 / n as f64; n];
    let (x, report) = qp::solve(&g, &eq, &b, start)?;
    Ok((JointTable::from_raw(system.sizes.clone(), x), report))
}

/// Minimizer of the misfit over weak compromises: all `pi_i P_{-i}` share their
/// one-dimensional marginals with `P`.
pub fn minimize_energy_weak(system: &FiniteKernelSystem) -> Result<JointTable> {
    Ok(minimize_energy_weak_report(system)?.0)
}

pub fn minimize_energy_weak_report(system: &FiniteKernelSystem) -> Result<(JointTable, QpReport)> {
    check_qp_size(system)?;
    let n = system.n_states();
    let g = energy_matrix(system) * 2.0;
    let c = weak_constraints(system);
    let mut eq = DMatrix::zeros(c.nrows() + 1, n);
    eq.view_mut((0, 0), (c.nrows(), n)).copy_from(&c);
    eq.row_mut(c.nrows()).fill(1.0);
    let mut b = nalgebra::DVector::zeros(c.nrows() + 1);
    b[c.nrows()] = 1.0;
    let (x, report) = qp::solve(&g, &eq, &b, qp_start(system))?;
    if !absolutely_continuous(system, &x, 1e-10) {
        return Err(Error::SolverFailure(
            "weak minimizer violates absolute continuity of the assembled joints".into(),
        ));
    }
    Ok((JointTable::from_raw(system.sizes.clone(), x), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_binary() -> FiniteKernelSystem {
        FiniteKernelSystem::from_json_str(r#"{"sizes":[2,2],"kernels":[[[0,1],[0.5,0.5]],[[0.5,0.5],[0,1]]]}"#)
            .unwrap()
    }

    #[test]
    fn axis_view_round_trip() {
        let sizes = [3, 2, 4];
        let n = 24;
        for i in 0..3 {
            let view = AxisView::new(&sizes, i);
            for idx in 0..n {
                assert_eq!(view.with(view.minus(idx), view.value(idx)), idx);
            }
        }
    }

    #[test]
    fn marginal_cases() {
        let u = JointTable::uniform(vec![2, 2]).unwrap();
        assert_eq!(marginal_minus_i(&u, 0).unwrap().probs(), &[0.5, 0.5]);
        let pm = JointTable::point_mass(vec![2, 3], &[1, 2]).unwrap();
        assert_eq!(marginal_minus_i(&pm, 0).unwrap().probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(marginal_minus_i(&pm, 1).unwrap().probs(), &[0.0, 1.0]);
    }

    #[test]
    fn assemble_recovers_marginal() {
        let s = two_binary();
        let m = JointTable::new(vec![2], vec![0.3, 0.7]).unwrap();
        for i in 0..2 {
            let joint = assemble(&s, i, &m).unwrap();
            assert_eq!(marginal_minus_i(&joint, i).unwrap().probs(), m.probs());
        }
    }

    #[test]
    fn transition_rows_stochastic() {
        let t = gibbs_transition(&two_binary()).unwrap();
        for row in t.row_iter() {
            assert_relative_eq!(row.sum(), 1.0, epsilon = 1e-15);
        }
        let single = FiniteKernelSystem::new(vec![3], vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let t1 = gibbs_transition(&single).unwrap();
        for row in t1.row_iter() {
            assert_eq!(row.iter().copied().collect::<Vec<_>>(), vec![0.2, 0.3, 0.5]);
        }
    }

    #[test]
    fn reducible_system_is_reported() {
        let identity = FiniteKernelSystem::new(vec![2, 2], vec![vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]])
            .unwrap();
        assert_eq!(gibbs_compromise(&identity).unwrap_err(), Error::NonUniqueStationary(2));
    }

    #[test]
    fn validation() {
        assert!(FiniteKernelSystem::new(vec![2], vec![vec![0.6, 0.6]]).is_err());
        assert!(FiniteKernelSystem::new(vec![2], vec![vec![-0.1, 1.1]]).is_err());
        assert!(JointTable::new(vec![2], vec![0.4, 0.4]).is_err());
        assert!(FiniteKernelSystem::from_json_str("{").is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = two_binary();
        let back = FiniteKernelSystem::from_json_str(&s.to_json_value().to_string()).unwrap();
        assert_eq!(back, s);
    }
}
