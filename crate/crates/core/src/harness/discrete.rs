//! Scheme-level theorems: comparison, boundary stability, sup bound, homogeneity.

use std::time::Instant;

use super::{digest, ExperimentReport, HarnessError};
use crate::calculus::ScalarField;
use crate::solver::{CauchyDirichletProblem, GridFunction, Scheme, SolverConfig, SolverError};

/// Everything measured on one lockstep run of two problems sharing a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PairOutcome {
    pub steps: usize,
    /// `max (u - v)` over all nodes and time levels.
    pub max_u_minus_v: f64,
    pub worst_node: usize,
    pub worst_time: f64,
    /// `sup |u - v|` over all nodes and time levels.
    pub sup_diff: f64,
    /// `sup |data_u - data_v|` over the parabolic boundary samples read.
    pub sup_data_diff: f64,
    /// `sup |u|`, `sup |v|`.
    pub sup_solution: [f64; 2],
    /// Sup of the absolute data of each run.
    pub sup_data: [f64; 2],
}

/// Parabolic-boundary samples of one level: every node at `t = 0`, then the
/// boundary nodes and clamped off-domain points.
fn boundary_samples(
    problem: &CauchyDirichletProblem,
    level: &GridFunction,
    boundary: &[usize],
    exterior: &[Vec<f64>],
    t_exterior: f64,
) -> Vec<f64> {
    let mut out: Vec<f64> = if level.time() == 0.0 {
        level.values().to_vec()
    } else {
        boundary.iter().map(|&n| level.value(n)).collect()
    };
    out.extend(exterior.iter().map(|q| problem.g().eval(q, t_exterior)));
    out
}

/// Runs two problems on a shared grid with a common monotone time step.
/// Ordering of the data (`u <= v` on the parabolic boundary) is checked when
/// `require_order` is set.
pub fn run_ordered_pair(
    pu: &CauchyDirichletProblem,
    pv: &CauchyDirichletProblem,
    config: &SolverConfig,
    require_order: bool,
) -> Result<PairOutcome, HarnessError> {
    if pu.grid() != pv.grid() || pu.group() != pv.group() || pu.h() != pv.h() {
        return Err(HarnessError::Invalid("paired problems must share group, grid and h".into()));
    }
    let su = Scheme::new(pu, config)?;
    let sv = Scheme::new(pv, config)?;
    let exterior = su.exterior_points();
    let horizon = pu.grid().horizon();
    let mut u = pu.initial_level()?;
    let mut v = pv.initial_level()?;
    let mut out = PairOutcome {
        steps: 0,
        max_u_minus_v: f64::NEG_INFINITY,
        worst_node: 0,
        worst_time: 0.0,
        sup_diff: 0.0,
        sup_data_diff: 0.0,
        sup_solution: [0.0; 2],
        sup_data: [0.0; 2],
    };
    let absorb_data = |u: &GridFunction, v: &GridFunction, t_ext: f64, out: &mut PairOutcome| {
        let du = boundary_samples(pu, u, su.boundary(), &exterior, t_ext);
        let dv = boundary_samples(pv, v, sv.boundary(), &exterior, t_ext);
        for (a, b) in du.iter().zip(&dv) {
            if require_order && a > b {
                return Err(HarnessError::Precondition(format!(
                    "u0 > v0 on the parabolic boundary near t = {:.6} ({a} > {b})",
                    u.time()
                )));
            }
            out.sup_data_diff = out.sup_data_diff.max((a - b).abs());
            out.sup_data[0] = out.sup_data[0].max(a.abs());
            out.sup_data[1] = out.sup_data[1].max(b.abs());
        }
        Ok(())
    };
    let observe = |u: &GridFunction, v: &GridFunction, out: &mut PairOutcome| {
        let (worst, node) = u.max_diff(v);
        if worst > out.max_u_minus_v {
            out.max_u_minus_v = worst;
            out.worst_node = node;
            out.worst_time = u.time();
        }
        out.sup_diff = out.sup_diff.max(u.max_abs_diff(v));
        out.sup_solution[0] = out.sup_solution[0].max(u.sup_norm());
        out.sup_solution[1] = out.sup_solution[1].max(v.sup_norm());
    };
    absorb_data(&u, &v, 0.0, &mut out)?;
    observe(&u, &v, &mut out);
    while horizon - u.time() > 1e-14 * horizon.max(1.0) {
        if out.steps >= config.max_steps {
            return Err(SolverError::MaxSteps { steps: out.steps, time: u.time() }.into());
        }
        let t = u.time();
        let eu = su.evaluate(&u);
        let ev = sv.evaluate(&v);
        let dt = su.cfl_dt(eu.max_slope.max(ev.max_slope)).min(horizon - t);
        u = su.advance(&u, &eu, dt)?;
        v = sv.advance(&v, &ev, dt)?;
        absorb_data(&u, &v, t, &mut out)?;
        observe(&u, &v, &mut out);
        out.steps += 1;
    }
    Ok(out)
}

fn comparison_report(inputs: String, o: &PairOutcome, started: Instant) -> ExperimentReport {
    let mut r = ExperimentReport::new("comparison", inputs);
    r.measure("max_u_minus_v", o.max_u_minus_v).measure("steps", o.steps as f64);
    let passed = o.max_u_minus_v <= 1e-12;
    if !passed {
        r.detail(format!("max(u - v) attained at node {} t = {}", o.worst_node, o.worst_time));
    }
    r.finish(Some(1e-12), passed, started)
}

fn stability_report(inputs: String, o: &PairOutcome, started: Instant) -> ExperimentReport {
    let mut r = ExperimentReport::new("boundary_stability", inputs);
    let bound = o.sup_data_diff + 1e-10;
    r.measure("sup_solution_gap", o.sup_diff).measure("sup_boundary_gap", o.sup_data_diff);
    r.finish(Some(bound), o.sup_diff <= bound, started)
}

fn sup_bound_report(inputs: String, o: &PairOutcome, runs: usize, started: Instant) -> ExperimentReport {
    let mut r = ExperimentReport::new("sup_bound", inputs);
    let mut passed = true;
    let mut excess = f64::NEG_INFINITY;
    for k in 0..runs {
        r.measure(format!("sup_u[{k}]"), o.sup_solution[k]).measure(format!("sup_data[{k}]"), o.sup_data[k]);
        let e = o.sup_solution[k] - o.sup_data[k];
        excess = excess.max(e);
        if e > 1e-12 {
            passed = false;
            r.detail(format!("run {k}: sup |u| exceeds sup |data| by {e:e}"));
        }
    }
    r.measure("excess", excess);
    r.finish(Some(1e-12), passed, started)
}

/// Evolves `u0` and `v0` (each serving as initial and lateral datum) and
/// checks `u <= v` at every node and step.
pub fn comparison_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    u0: ScalarField,
    v0: ScalarField,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let pu = problem.with_data(u0.clone(), u0)?;
    let pv = problem.with_data(v0.clone(), v0)?;
    let o = run_ordered_pair(&pu, &pv, config, true)?;
    Ok(comparison_report(digest(problem, config), &o, started))
}

/// Comparison, boundary stability and sup bound measured on the same pair of runs.
pub fn ordered_pair_suite(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    u0: ScalarField,
    v0: ScalarField,
) -> Result<[ExperimentReport; 3], HarnessError> {
    let started = Instant::now();
    let pu = problem.with_data(u0.clone(), u0)?;
    let pv = problem.with_data(v0.clone(), v0)?;
    let o = run_ordered_pair(&pu, &pv, config, true)?;
    let inputs = digest(problem, config);
    Ok([
        comparison_report(inputs.clone(), &o, started),
        stability_report(inputs.clone(), &o, started),
        sup_bound_report(inputs, &o, 2, started),
    ])
}

/// `sup |u1 - u2| <= sup |g1 - g2|` with `g_i` as initial and lateral datum.
pub fn boundary_stability_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    g1: ScalarField,
    g2: ScalarField,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let p1 = problem.with_data(g1.clone(), g1)?;
    let p2 = problem.with_data(g2.clone(), g2)?;
    let o = run_ordered_pair(&p1, &p2, config, false)?;
    Ok(stability_report(digest(problem, config), &o, started))
}

/// Every level obeys `sup |u| <= sup |data|`.
pub fn sup_bound_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let o = run_ordered_pair(problem, problem, config, false)?;
    Ok(sup_bound_report(digest(problem, config), &o, 1, started))
}

/// Runs `(psi, g)` with the CFL step `dt` and `(lambda psi, lambda g(., k t))`
/// with `dt / k`, `lambda = k^(1/(h-1))`, and compares `lambda u` with the
/// scaled run at every level.
pub fn homogeneity_experiment(
    problem: &CauchyDirichletProblem,
    config: &SolverConfig,
    k: f64,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let h = problem.h();
    if h <= 1.0 {
        return Err(HarnessError::Invalid(format!("homogeneity needs h > 1, got {h}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(HarnessError::Invalid(format!("scale factor must be positive, got {k}")));
    }
    let lam = k.powf(1.0 / (h - 1.0));
    let (psi, g) = (problem.psi().clone(), problem.g().clone());
    let horizon = problem.grid().horizon();
    let scaled = CauchyDirichletProblem::new(
        problem.group().clone(),
        problem.grid().with_horizon(horizon / k)?,
        h,
        ScalarField::numeric(move |x, t| lam * psi.eval(x, t)),
        ScalarField::numeric(move |x, t| lam * g.eval(x, k * t)),
    )?;
    let s1 = Scheme::new(problem, config)?;
    let s2 = Scheme::new(&scaled, config)?;
    let mut u = problem.initial_level()?;
    let mut w = scaled.initial_level()?;
    let mut worst: f64 = 0.0;
    let mut worst_at = (0, 0.0);
    let mut cfl_ratio: f64 = 0.0;
    let mut steps = 0;
    let compare = |u: &GridFunction, w: &GridFunction| {
        u.values()
            .iter()
            .zip(w.values())
            .enumerate()
            .map(|(n, (a, b))| ((lam * a - b).abs(), n))
            .fold((0.0, 0), |m, c| if c.0 > m.0 { c } else { m })
    };
    let (e0, n0) = compare(&u, &w);
    if e0 > worst {
        worst = e0;
        worst_at = (n0, 0.0);
    }
    while horizon - u.time() > 1e-14 * horizon.max(1.0) {
        if steps >= config.max_steps {
            return Err(SolverError::MaxSteps { steps, time: u.time() }.into());
        }
        let e = s1.evaluate(&u);
        let dt = s1.cfl_dt(e.max_slope).min(horizon - u.time());
        let ew = s2.evaluate(&w);
        cfl_ratio = cfl_ratio.max((dt / k) / s2.cfl_dt(ew.max_slope));
        u = s1.advance(&u, &e, dt)?;
        w = s2.advance(&w, &ew, dt / k)?;
        steps += 1;
        let (err, node) = compare(&u, &w);
        if err > worst {
            worst = err;
            worst_at = (node, u.time());
        }
    }
    let mut r = ExperimentReport::new("homogeneity", format!("{} k={k}", digest(problem, config)));
    r.measure("max_scaled_error", worst)
        .measure("lambda", lam)
        .measure("steps", steps as f64)
        .measure("max_dt_over_cfl_scaled", cfl_ratio);
    let passed = worst <= 1e-10;
    if !passed {
        r.detail(format!("largest mismatch at node {} t = {}", worst_at.0, worst_at.1));
    }
    if cfl_ratio > 1.0 + 1e-12 {
        r.detail("scaled run stepped beyond its own monotone limit");
    }
    Ok(r.finish(Some(1e-10), passed, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CarnotGroup;
    use crate::harness::random_ordered_pair;
    use crate::solver::GridSpec;

    fn line(h: f64) -> CauchyDirichletProblem {
        let f = ScalarField::numeric(|x, _| x[0] * x[0]);
        let grid = GridSpec::cube(1, 0.0, 1.0, 33, 0.05).unwrap();
        CauchyDirichletProblem::new(CarnotGroup::euclidean(1), grid, h, f.clone(), f).unwrap()
    }

    fn heis(h: f64, nodes: usize) -> CauchyDirichletProblem {
        let f = ScalarField::numeric(|x, _| x[0] * x[1] + 0.3 * x[2]);
        let grid = GridSpec::cube(3, -1.0, 1.0, nodes, 0.02).unwrap();
        CauchyDirichletProblem::new(CarnotGroup::heisenberg(), grid, h, f.clone(), f).unwrap()
    }

    #[test]
    fn identical_data_gives_zero_margin() {
        let p = line(2.0);
        let u0 = ScalarField::numeric(|x, _| (3.0 * x[0]).sin());
        let r = comparison_experiment(&p, &SolverConfig::default(), u0.clone(), u0).unwrap();
        assert!(r.passed);
        assert_eq!(r.value("max_u_minus_v"), Some(0.0));
    }

    #[test]
    fn constant_shift_is_preserved() {
        let p = line(3.0);
        let v0 = ScalarField::numeric(|x, _| x[0] * x[0]);
        let u0 = v0.affine_map(1.0, -1.0);
        let suite = ordered_pair_suite(&p, &SolverConfig::default(), u0, v0).unwrap();
        assert!(suite.iter().all(|r| r.passed));
        assert!((suite[0].value("max_u_minus_v").unwrap() + 1.0).abs() < 1e-12);
        assert!((suite[1].value("sup_solution_gap").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn violated_precondition_is_an_error() {
        let p = line(2.0);
        let u0 = ScalarField::numeric(|x, _| x[0] + 0.01);
        let v0 = ScalarField::numeric(|x, _| x[0]);
        assert!(matches!(
            comparison_experiment(&p, &SolverConfig::default(), u0, v0),
            Err(HarnessError::Precondition(_))
        ));
    }

    #[test]
    fn random_pairs_on_heisenberg() {
        let p = heis(2.0, 9);
        let cfg = SolverConfig::default();
        for seed in 0..3 {
            let (u0, v0) = random_ordered_pair(3, seed);
            for r in ordered_pair_suite(&p, &cfg, u0, v0).unwrap() {
                assert!(r.passed, "{}", r.summary());
            }
        }
        let (g1, _) = random_ordered_pair(3, 11);
        let g2 = ScalarField::numeric({
            let g1 = g1.clone();
            move |x, t| g1.eval(x, t) + 0.05 * (5.0 * x[1]).cos()
        });
        let p3 = heis(3.0, 9);
        assert!(boundary_stability_experiment(&p3, &cfg, g1, g2).unwrap().passed);
        assert!(sup_bound_experiment(&p3, &cfg).unwrap().passed);
    }

    #[test]
    fn homogeneity_cases() {
        let cfg = SolverConfig::default();
        let r = homogeneity_experiment(&line(2.0), &cfg, 1.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.value("max_scaled_error"), Some(0.0));
        assert!(homogeneity_experiment(&line(2.0), &cfg, 2.0).unwrap().passed);
        assert!(homogeneity_experiment(&heis(3.0, 9), &cfg, 4.0).unwrap().passed);
        assert!(homogeneity_experiment(&line(1.0), &cfg, 2.0).is_err());
    }
}
