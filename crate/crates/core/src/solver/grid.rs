//! Axis-aligned coordinate boxes, node indexing and multilinear interpolation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SolverError;

/// A tensor grid over a coordinate box. Node order is lexicographic with the
/// last axis varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
    horizon: f64,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl GridSpec {
    pub fn new(bounds: Vec<(f64, f64)>, cells: Vec<usize>, horizon: f64) -> Result<Self, SolverError> {
        if bounds.is_empty() || bounds.len() != cells.len() {
            return Err(SolverError::Grid(format!(
                "{} bounds for {} cell counts",
                bounds.len(),
                cells.len()
            )));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SolverError::Grid(format!("axis {axis}: need lo < hi, got ({lo}, {hi})")));
            }
        }
        if let Some(axis) = cells.iter().position(|&c| c < 2) {
            return Err(SolverError::Grid(format!("axis {axis}: need at least 2 cells")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SolverError::Grid(format!("horizon must be positive, got {horizon}")));
        }
        let (lo, hi) = bounds.into_iter().unzip();
        let mut grid = Self { lo, hi, cells, horizon, strides: Vec::new() };
        grid.strides = grid.compute_strides();
        Ok(grid)
    }

    /// Cube `[lo, hi]^dim` with `nodes` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, nodes: usize, horizon: f64) -> Result<Self, SolverError> {
        Self::new(vec![(lo, hi); dim], vec![nodes.saturating_sub(1); dim], horizon)
    }

    fn compute_strides(&self) -> Vec<usize> {
        let n = self.cells.len();
        let mut strides = vec![1; n];
        for d in (0..n.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * (self.cells[d + 1] + 1);
        }
        strides
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self, SolverError> {
        Self::new(self.bounds(), self.cells.clone(), horizon)
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lo.iter().copied().zip(self.hi.iter().copied()).collect()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes_per_axis(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        self.cells.iter().map(|c| c + 1).product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    /// Spatial step: the largest per-axis spacing.
    pub fn delta(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).fold(0.0, f64::max)
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in 0..self.dim() {
            idx[d] = node / self.strides[d];
            node %= self.strides[d];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if i == self.cells[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / self.cells[axis] as f64
        }
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node).iter().enumerate().map(|(d, &i)| self.coordinate(d, i)).collect()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.multi_index(node).iter().zip(&self.cells).any(|(&i, &c)| i == 0 || i == c)
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| !self.is_boundary(n)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| self.is_boundary(n)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().enumerate().all(|(d, &x)| {
            let tol = 1e-12 * self.spacing(d);
            x >= self.lo[d] - tol && x <= self.hi[d] + tol
        })
    }

    pub fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().enumerate().map(|(d, &x)| x.clamp(self.lo[d], self.hi[d])).collect()
    }

    /// Lower-corner node and fractional offsets of the cell containing `p`
    /// (which must lie in the box up to rounding).
    pub fn locate(&self, p: &[f64]) -> (usize, Vec<f64>) {
        let mut base = 0;
        let mut frac = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let s = ((p[d] - self.lo[d]) / self.spacing(d)).clamp(0.0, self.cells[d] as f64);
            let cell = (s.floor() as usize).min(self.cells[d] - 1);
            base += cell * self.strides[d];
            frac.push((s - cell as f64).clamp(0.0, 1.0));
        }
        (base, frac)
    }

    /// Offsets of the `2^dim` cell corners relative to the lower corner.
    pub fn corner_offsets(&self) -> Vec<usize> {
        (0..1usize << self.dim())
            .map(|mask| (0..self.dim()).filter(|d| mask >> d & 1 == 1).map(|d| self.strides[d]).sum())
            .collect()
    }
}

/// Multilinear interpolation: a convex combination of the cell's corner values.
pub(crate) fn interpolate(values: &[f64], base: usize, frac: &[f64], corners: &[usize]) -> f64 {
    let mut acc = 0.0;
    for (mask, off) in corners.iter().enumerate() {
        let mut w = 1.0;
        for (d, &f) in frac.iter().enumerate() {
            w *= if mask >> d & 1 == 1 { f } else { 1.0 - f };
        }
        if w != 0.0 {
            acc += w * values[base + off];
        }
    }
    acc
}

/// A scalar field sampled on every node of a grid at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<GridSpec>,
    values: Vec<f64>,
    time: f64,
}

impl GridFunction {
    pub fn new(grid: Arc<GridSpec>, values: Vec<f64>, time: f64) -> Result<Self, SolverError> {
        if values.len() != grid.node_count() {
            return Err(SolverError::Grid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { node, coords: grid.node_coords(node), time });
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Arc<GridSpec>, time: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self, SolverError> {
        let values = (0..grid.node_count()).map(|n| f(&grid.node_coords(n))).collect();
        Self::new(grid, values, time)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max(self - other)` with the node where it is attained.
    pub fn max_diff(&self, other: &GridFunction) -> (f64, usize) {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| (a - b, i))
            .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}
