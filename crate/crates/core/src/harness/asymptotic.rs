//! Limits in time and in the exponent.

use std::time::Instant;

use super::{digest, grid_lipschitz, ExperimentReport, HarnessError};
use crate::solver::{
    march_to_stationary, solve_elliptic_steady, solve_parabolic, CauchyDirichletProblem, GridFunction,
    SolverConfig,
};

/// Sup of the merged initial/lateral datum over the closed box.
fn data_sup(problem: &CauchyDirichletProblem) -> Result<f64, HarnessError> {
    Ok(problem.initial_level()?.sup_norm())
}

fn require_static_lateral(problem: &CauchyDirichletProblem) -> Result<(), HarnessError> {
    let grid = problem.grid();
    let horizon = grid.horizon();
    for n in grid.boundary_nodes() {
        let p = grid.node_coords(n);
        let (a, b) = (problem.g().eval(&p, 0.0), problem.g().eval(&p, horizon));
        if (a - b).abs() > 1e-14 * (1.0 + a.abs()) {
            return Err(HarnessError::Invalid("lateral datum must be time-independent".into()));
        }
    }
    Ok(())
}

fn stationary(problem: &CauchyDirichletProblem, config: &SolverConfig) -> Result<(GridFunction, usize), HarnessError> {
    let run = march_to_stationary(problem, config, config.steady_tolerance / 10.0)?;
    Ok((run.state, run.steps))
}

/// Decay of time differences against `C (1 - s/t)^(h/(1-h)) s/t`,
/// `C = 2 sup|data| / (h - 1)`, at eight `(t, s)` pairs with `s <= t/4`; then
/// the distance between the stationary limit of the march and the steady solve.
pub fn long_time_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let h = problem.h();
    if h <= 1.0 {
        return Err(HarnessError::Invalid(format!("long-time decay needs h > 1, got {h}")));
    }
    require_static_lateral(problem)?;
    let horizon = problem.grid().horizon();
    let c = 2.0 * data_sup(problem)? / (h - 1.0);
    let mut pairs = Vec::new();
    for t in [0.25, 0.5, 0.75, 1.0].map(|f| f * horizon) {
        for s in [t / 4.0, t / 8.0] {
            pairs.push((t, s));
        }
    }
    let mut times: Vec<f64> = pairs.iter().flat_map(|&(t, s)| [t, t - s]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let run = solve_parabolic(problem, config, &times)?;
    let at = |t: f64| &run.snapshots[times.iter().position(|&x| x == t).expect("requested time")];

    let mut r = ExperimentReport::new("long_time", digest(problem, config));
    r.measure("decay_constant", c);
    let mut decay_ok = true;
    let mut worst_ratio: f64 = 0.0;
    for &(t, s) in &pairs {
        let measured = at(t - s).max_abs_diff(at(t));
        let q = s / t;
        let bound = c * (1.0 - q).powf(h / (1.0 - h)) * q;
        worst_ratio = worst_ratio.max(measured / bound);
        r.measure(format!("diff(t={t:.4},s={s:.4})"), measured);
        if measured > 1.5 * bound {
            decay_ok = false;
            let (_, node) = at(t - s).max_diff(at(t));
            r.detail(format!("decay bound exceeded at t = {t}, s = {s}, node {node}: {measured:e} > 1.5 * {bound:e}"));
        }
    }
    r.measure("worst_decay_ratio", worst_ratio);

    let (late, steps) = stationary(problem, config)?;
    let steady = solve_elliptic_steady(problem, config)?;
    let gap = late.max_abs_diff(&steady);
    let lip = grid_lipschitz(problem);
    let delta = problem.grid().delta();
    let bound = 10.0 * lip * delta + config.steady_tolerance;
    r.measure("T_large", late.time())
        .measure("stationary_steps", steps as f64)
        .measure("limit_gap", gap)
        .measure("lipschitz_g", lip);
    let limit_ok = gap <= bound;
    if !limit_ok {
        let (_, node) = late.max_diff(&steady);
        r.detail(format!("stationary state differs from steady solve by {gap:e} near node {node}"));
    }
    r.detail(format!("decay slack factor 1.5 absorbs the O(delta) scheme error; worst ratio {worst_ratio:.3}"));
    Ok(r.finish(Some(bound), decay_ok && limit_ok, started))
}

/// Gaps `sup |u_h(T) - u_1(T)|` along a decreasing `h` sequence.
pub fn h_limit_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    h_sequence: &[f64],
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    if h_sequence.is_empty() || h_sequence.iter().any(|&h| h <= 1.0) {
        return Err(HarnessError::Invalid("h sequence must be non-empty with every h > 1".into()));
    }
    let reference = final_level(&problem.with_h(1.0)?, config)?;
    let mut r = ExperimentReport::new("h_limit", digest(problem, config));
    let mut gaps = Vec::with_capacity(h_sequence.len());
    for &h in h_sequence {
        let u = final_level(&problem.with_h(h)?, config)?;
        let gap = u.max_abs_diff(&reference);
        r.measure(format!("gap(h={h})"), gap);
        gaps.push(gap);
    }
    let delta = problem.grid().delta();
    let mut passed = true;
    for (k, w) in gaps.windows(2).enumerate() {
        if w[1] > w[0] + 1e-3 {
            passed = false;
            r.detail(format!("gap grows from h = {} to h = {}", h_sequence[k], h_sequence[k + 1]));
        }
    }
    let last = *gaps.last().expect("non-empty");
    if last > 5.0 * delta {
        passed = false;
        r.detail(format!("final gap {last:e} exceeds 5 delta"));
    }
    Ok(r.finish(Some(5.0 * delta), passed, started))
}

fn final_level(problem: &CauchyDirichletProblem, config: &SolverConfig) -> Result<GridFunction, HarnessError> {
    let mut run = solve_parabolic(problem, config, &[])?;
    Ok(run.snapshots.pop().expect("one snapshot"))
}

/// Path A: `h -> 1` first, then `t -> infinity` (stationary state of the
/// `h = 1` march). Path B: steady states for each `h`, which do not depend on
/// `h`, then `h -> 1`: a single steady solve.
pub fn commuting_diagram_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    h_sequence: &[f64],
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    require_static_lateral(problem)?;
    let (path_a, _) = stationary(&problem.with_h(1.0)?, config)?;
    let path_b = solve_elliptic_steady(problem, config)?;
    let gap = path_a.max_abs_diff(&path_b);
    let delta = problem.grid().delta();
    let mut r = ExperimentReport::new("commuting_diagram", digest(problem, config));
    r.measure("path_gap", gap);
    for &h in h_sequence {
        let (late, _) = stationary(&problem.with_h(h)?, config)?;
        r.measure(format!("diagonal_gap(h={h})"), late.max_abs_diff(&path_b));
    }
    if gap > 5.0 * delta {
        let (_, node) = path_a.max_diff(&path_b);
        r.detail(format!("paths differ most near node {node}"));
    }
    Ok(r.finish(Some(5.0 * delta), gap <= 5.0 * delta, started))
}

/// Stationary limits of the march for several exponents agree pairwise.
pub fn elliptic_h_independence_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    exponents: &[f64],
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    require_static_lateral(problem)?;
    let mut limits = Vec::with_capacity(exponents.len());
    let mut r = ExperimentReport::new("elliptic_h_independence", digest(problem, config));
    for &h in exponents {
        let (state, steps) = stationary(&problem.with_h(h)?, config)?;
        r.measure(format!("T_large(h={h})"), state.time()).measure(format!("steps(h={h})"), steps as f64);
        limits.push(state);
    }
    let mut worst: f64 = 0.0;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let d = limits[i].max_abs_diff(&limits[j]);
            r.measure(format!("gap(h={},h={})", exponents[i], exponents[j]), d);
            worst = worst.max(d);
        }
    }
    r.measure("max_pairwise_gap", worst);
    let bound = 5.0 * problem.grid().delta();
    Ok(r.finish(Some(bound), worst <= bound, started))
}
