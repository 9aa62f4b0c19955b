//! Monotone explicit solver for `u_t = Δ^h_∞ u` on a coordinate box with
//! initial datum `psi` and lateral datum `g`, plus a steady-state mode.
//!
//! The stencil follows group flows `p · exp(±δη)` for unit horizontal
//! directions `η` and reads off-grid values by multilinear interpolation.
//! See [`scheme::monotone_rate`] for the update.

mod export;
mod grid;
mod scheme;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::CarnotGroup;
use crate::calculus::ScalarField;

pub use export::{write_snapshot_csv, SnapshotMetadata};
pub use grid::{GridFunction, GridSpec};
pub use scheme::{monotone_rate, sample_directions, Evaluation, Scheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("exponent h must satisfy h >= 1, got {0}")]
    BadExponent(f64),
    #[error("grid has {grid} axes but the group has dimension {group}")]
    DimensionMismatch { grid: usize, group: usize },
    #[error("{field} is a polynomial in {got} variables, expected {expected}")]
    FieldArity { field: &'static str, expected: usize, got: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("non-finite value at node {node} {coords:?}, t = {time}")]
    NonFinite { node: usize, coords: Vec<f64>, time: f64 },
    #[error("step limit {steps} reached at t = {time}")]
    MaxSteps { steps: usize, time: f64 },
    #[error("maximum principle violated at node {node}, t = {time}: {value} outside [{lo}, {hi}]")]
    MaximumPrinciple { node: usize, time: f64, value: f64, lo: f64, hi: f64 },
    #[error("requested time {0} outside (0, horizon]")]
    BadTime(f64),
}

/// Per-node tag on the space-time grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    Interior,
    ParabolicBoundary,
}

/// Initial/boundary value problem on a box.
#[derive(Clone, Debug)]
pub struct CauchyDirichletProblem {
    group: CarnotGroup,
    grid: Arc<GridSpec>,
    h: f64,
    psi: ScalarField,
    g: ScalarField,
}

impl CauchyDirichletProblem {
    pub fn new(
        group: CarnotGroup,
        grid: GridSpec,
        h: f64,
        psi: ScalarField,
        g: ScalarField,
    ) -> Result<Self, SolverError> {
        if !(h >= 1.0 && h.is_finite()) {
            return Err(SolverError::BadExponent(h));
        }
        if grid.dim() != group.total_dim() {
            return Err(SolverError::DimensionMismatch { grid: grid.dim(), group: group.total_dim() });
        }
        for (field, f) in [("psi", &psi), ("g", &g)] {
            if let ScalarField::Polynomial(p) = f {
                if p.nvars() != group.total_dim() + 1 {
                    return Err(SolverError::FieldArity {
                        field,
                        expected: group.total_dim() + 1,
                        got: p.nvars(),
                    });
                }
            }
        }
        let problem = Self { group, grid: Arc::new(grid), h, psi, g };
        let gap = problem.compatibility_gap();
        if gap > 1e-12 {
            log::warn!("initial and lateral data differ by {gap:.3e} on the boundary at t = 0; using the lateral datum");
        }
        Ok(problem)
    }

    pub fn group(&self) -> &CarnotGroup {
        &self.group
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn with_h(&self, h: f64) -> Result<Self, SolverError> {
        Self::new(self.group.clone(), (*self.grid).clone(), h, self.psi.clone(), self.g.clone())
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self, SolverError> {
        Self::new(self.group.clone(), self.grid.with_horizon(horizon)?, self.h, self.psi.clone(), self.g.clone())
    }

    pub fn with_data(&self, psi: ScalarField, g: ScalarField) -> Result<Self, SolverError> {
        Self::new(self.group.clone(), (*self.grid).clone(), self.h, psi, g)
    }

    /// `max |g(p,0) - psi(p)|` over boundary nodes.
    pub fn compatibility_gap(&self) -> f64 {
        self.grid
            .boundary_nodes()
            .into_iter()
            .map(|n| {
                let p = self.grid.node_coords(n);
                (self.g.eval(&p, 0.0) - self.psi.eval(&p, 0.0)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Level at `t = 0`: `psi` inside, `g` on the boundary.
    pub fn initial_level(&self) -> Result<GridFunction, SolverError> {
        let grid = Arc::clone(&self.grid);
        let values = (0..grid.node_count())
            .map(|n| {
                let p = grid.node_coords(n);
                if grid.is_boundary(n) {
                    self.g.eval(&p, 0.0)
                } else {
                    self.psi.eval(&p, 0.0)
                }
            })
            .collect();
        GridFunction::new(grid, values, 0.0)
    }

    /// Value at an arbitrary point: interpolated inside the box, lateral datum
    /// at the clamped point outside.
    pub fn sample(&self, u: &GridFunction, p: &[f64]) -> f64 {
        if self.grid.contains(p) {
            let (base, frac) = self.grid.locate(p);
            grid::interpolate(u.values(), base, &frac, &self.grid.corner_offsets())
        } else {
            self.g.eval(&self.grid.clamp(p), u.time())
        }
    }

    fn flow_value(&self, u: &GridFunction, node: usize, eta: &[f64], scale: f64) -> f64 {
        let p = self.grid.node_coords(node);
        let mut step = vec![0.0; self.grid.dim()];
        for (s, e) in step.iter_mut().zip(eta) {
            *s = scale * e;
        }
        self.sample(u, &self.group.multiply_coords(&p, &step))
    }
}

/// Solver knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Fraction of the monotone step limit, in (0, 1].
    pub cfl_factor: f64,
    /// Number of sample directions when the first layer is two-dimensional.
    pub direction_samples: usize,
    /// Sup-norm tolerance for steady-state iterations.
    pub steady_tolerance: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { cfl_factor: 0.9, direction_samples: 16, steady_tolerance: 1e-8, max_steps: 5_000_000 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(SolverError::Config(format!("cfl_factor must lie in (0, 1], got {}", self.cfl_factor)));
        }
        if self.direction_samples < 4 || self.direction_samples % 2 != 0 {
            return Err(SolverError::Config(format!(
                "direction_samples must be even and at least 4, got {}",
                self.direction_samples
            )));
        }
        if !(self.steady_tolerance > 0.0) {
            return Err(SolverError::Config("steady_tolerance must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(SolverError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Tags for the spatial nodes at time level `t`.
pub fn classify_nodes(problem: &CauchyDirichletProblem, t: f64) -> Vec<NodeTag> {
    let grid = problem.grid();
    (0..grid.node_count())
        .map(|n| {
            if t <= 0.0 || grid.is_boundary(n) {
                NodeTag::ParabolicBoundary
            } else {
                NodeTag::Interior
            }
        })
        .collect()
}

/// Central flow differences along the first-layer basis.
pub fn discrete_gradient(problem: &CauchyDirichletProblem, u: &GridFunction, node: usize) -> Vec<f64> {
    let delta = problem.grid().delta();
    let n1 = problem.group().n1();
    (0..n1)
        .map(|i| {
            let mut e = vec![0.0; n1];
            e[i] = 1.0;
            (problem.flow_value(u, node, &e, delta) - problem.flow_value(u, node, &e, -delta)) / (2.0 * delta)
        })
        .collect()
}

/// Second difference along the flow of the horizontal direction `eta`.
pub fn directional_second_difference(
    problem: &CauchyDirichletProblem,
    u: &GridFunction,
    node: usize,
    eta: &[f64],
) -> f64 {
    let delta = problem.grid().delta();
    let plus = problem.flow_value(u, node, eta, delta);
    let minus = problem.flow_value(u, node, eta, -delta);
    (plus - 2.0 * u.value(node) + minus) / (delta * delta)
}

/// Scheme rate at one node, together with the node's stencil slope.
pub fn discrete_operator(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    u: &GridFunction,
    node: usize,
) -> f64 {
    node_rate(problem, config, u, node).0
}

fn node_rate(problem: &CauchyDirichletProblem, config: &SolverConfig, u: &GridFunction, node: usize) -> (f64, f64) {
    let delta = problem.grid().delta();
    let u0 = u.value(node);
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for eta in sample_directions(problem.group().n1(), config.direction_samples) {
        let v = problem.flow_value(u, node, &eta, delta);
        max = max.max(v);
        min = min.min(v);
    }
    let slope = (max - u0).abs().max((u0 - min).abs()) / delta;
    (monotone_rate(problem.h(), delta, u0, max, min), slope)
}

/// Monotone step size for the current level.
pub fn cfl_dt(problem: &CauchyDirichletProblem, config: &SolverConfig, u: &GridFunction) -> f64 {
    let slope = problem
        .grid()
        .interior_nodes()
        .into_iter()
        .map(|n| node_rate(problem, config, u, n).1)
        .fold(0.0, f64::max);
    let delta = problem.grid().delta();
    config.cfl_factor * delta * delta / (2.0 * slope.powf(problem.h() - 1.0).max(1.0))
}

/// One certified explicit step.
pub fn step(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    u: &GridFunction,
) -> Result<GridFunction, SolverError> {
    let scheme = Scheme::new(problem, config)?;
    let eval = scheme.evaluate(u);
    scheme.advance(u, &eval, scheme.cfl_dt(eval.max_slope))
}

/// Output of a parabolic march.
#[derive(Clone, Debug)]
pub struct ParabolicRun {
    pub snapshots: Vec<GridFunction>,
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Range of all initial and lateral data the scheme read.
    pub data_range: (f64, f64),
}

/// Tracks the range of data read and checks each new level against it.
struct RangeGuard {
    lo: f64,
    hi: f64,
}

impl RangeGuard {
    fn new(u0: &GridFunction) -> Self {
        let (lo, hi) = u0.min_max();
        Self { lo, hi }
    }

    fn absorb(&mut self, (lo, hi): (f64, f64)) {
        self.lo = self.lo.min(lo);
        self.hi = self.hi.max(hi);
    }

    fn absorb_boundary(&mut self, u: &GridFunction, boundary: &[usize]) {
        for &n in boundary {
            self.absorb((u.value(n), u.value(n)));
        }
    }

    fn check(&self, u: &GridFunction) -> Result<(), SolverError> {
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        for (node, &value) in u.values().iter().enumerate() {
            if value < self.lo - slack || value > self.hi + slack {
                return Err(SolverError::MaximumPrinciple { node, time: u.time(), value, lo: self.lo, hi: self.hi });
            }
        }
        Ok(())
    }
}

/// March from `t = 0`, recording the level at each requested time (the
/// horizon when `times` is empty). Step sizes are shortened to land on them.
pub fn solve_parabolic(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    times: &[f64],
) -> Result<ParabolicRun, SolverError> {
    let horizon = problem.grid().horizon();
    let mut targets: Vec<f64> = if times.is_empty() { vec![horizon] } else { times.to_vec() };
    targets.sort_by(f64::total_cmp);
    if let Some(&bad) = targets.iter().find(|&&t| !(t > 0.0 && t <= horizon * (1.0 + 1e-12))) {
        return Err(SolverError::BadTime(bad));
    }
    let scheme = Scheme::new(problem, config)?;
    let mut u = problem.initial_level()?;
    let mut guard = RangeGuard::new(&u);
    let mut run = ParabolicRun {
        snapshots: Vec::with_capacity(targets.len()),
        steps: 0,
        min_dt: f64::INFINITY,
        max_dt: 0.0,
        data_range: (0.0, 0.0),
    };
    for &target in &targets {
        while target - u.time() > 1e-14 * target.max(1.0) {
            if run.steps >= config.max_steps {
                return Err(SolverError::MaxSteps { steps: run.steps, time: u.time() });
            }
            let eval = scheme.evaluate(&u);
            guard.absorb(eval.data_range);
            let dt = scheme.cfl_dt(eval.max_slope).min(target - u.time());
            u = scheme.advance(&u, &eval, dt)?;
            guard.absorb_boundary(&u, scheme.boundary());
            guard.check(&u)?;
            run.steps += 1;
            run.min_dt = run.min_dt.min(dt);
            run.max_dt = run.max_dt.max(dt);
        }
        run.snapshots.push(u.clone());
    }
    run.data_range = (guard.lo, guard.hi);
    Ok(run)
}

/// Output of [`march_to_stationary`].
#[derive(Clone, Debug)]
pub struct StationaryRun {
    pub state: GridFunction,
    pub steps: usize,
    /// Last measured `sup |u_{n+1} - u_n| / dt`.
    pub rate: f64,
}

/// March until the sup-norm rate of change drops below `rate_tolerance`.
/// The horizon of the grid is ignored.
pub fn march_to_stationary(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    rate_tolerance: f64,
) -> Result<StationaryRun, SolverError> {
    let scheme = Scheme::new(problem, config)?;
    let mut u = problem.initial_level()?;
    for steps in 1..=config.max_steps {
        let eval = scheme.evaluate(&u);
        let dt = scheme.cfl_dt(eval.max_slope);
        let next = scheme.advance(&u, &eval, dt)?;
        let rate = next.max_abs_diff(&u) / dt;
        u = next;
        if rate < rate_tolerance {
            return Ok(StationaryRun { state: u, steps, rate });
        }
    }
    Err(SolverError::MaxSteps { steps: config.max_steps, time: u.time() })
}

/// Steady state by midrange relaxation with the lateral datum at `t = 0`.
/// The iteration does not depend on `h`.
pub fn solve_elliptic_steady(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
) -> Result<GridFunction, SolverError> {
    let scheme = Scheme::new(problem, config)?;
    let mut u = problem.initial_level()?;
    for _ in 0..config.max_steps {
        let (next, change) = scheme.midrange_sweep(&u);
        u = next;
        if change < config.steady_tolerance {
            return Ok(u);
        }
    }
    Err(SolverError::MaxSteps { steps: config.max_steps, time: 0.0 })
}

#[cfg(test)]
mod tests;
