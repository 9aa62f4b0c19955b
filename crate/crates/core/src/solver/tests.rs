use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::calculus::{horizontal_gradient, symmetrized_hessian};
use crate::algebra::GroupPoint;

fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarField {
    ScalarField::numeric(move |x, _| f(x))
}

fn line_problem(nodes: usize, h: f64, psi: ScalarField, g: ScalarField) -> CauchyDirichletProblem {
    let grid = GridSpec::cube(1, 0.0, 1.0, nodes, 1.0).unwrap();
    CauchyDirichletProblem::new(CarnotGroup::euclidean(1), grid, h, psi, g).unwrap()
}

fn sample(problem: &CauchyDirichletProblem, f: impl Fn(&[f64]) -> f64) -> GridFunction {
    GridFunction::from_fn(Arc::clone(problem.grid()), 0.0, f).unwrap()
}

fn node_at(grid: &GridSpec, p: &[f64]) -> usize {
    (0..grid.node_count())
        .find(|&n| grid.node_coords(n).iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12))
        .expect("point is a grid node")
}

fn heisenberg_box(nodes: usize, h: f64, psi: ScalarField, g: ScalarField) -> CauchyDirichletProblem {
    let grid = GridSpec::cube(3, -1.0, 1.0, nodes, 0.05).unwrap();
    CauchyDirichletProblem::new(CarnotGroup::heisenberg(), grid, h, psi, g).unwrap()
}

#[test]
fn node_classification() {
    let p = line_problem(5, 2.0, ScalarField::constant(0.0), ScalarField::constant(0.0));
    assert_eq!(classify_nodes(&p, 0.0), vec![NodeTag::ParabolicBoundary; 5]);
    let later = classify_nodes(&p, 0.5);
    assert_eq!(later[2], NodeTag::Interior);
    let top = classify_nodes(&p, p.grid().horizon());
    assert_eq!(top[0], NodeTag::ParabolicBoundary);
    assert_eq!(top[4], NodeTag::ParabolicBoundary);
}

#[test]
fn problem_validation() {
    let grid = GridSpec::cube(1, 0.0, 1.0, 5, 1.0).unwrap();
    let zero = ScalarField::constant(0.0);
    let e1 = CarnotGroup::euclidean(1);
    assert_eq!(
        CauchyDirichletProblem::new(e1.clone(), grid.clone(), 0.5, zero.clone(), zero.clone()).unwrap_err(),
        SolverError::BadExponent(0.5)
    );
    assert!(matches!(
        CauchyDirichletProblem::new(CarnotGroup::heisenberg(), grid, 2.0, zero.clone(), zero).unwrap_err(),
        SolverError::DimensionMismatch { .. }
    ));
    let mut cfg = SolverConfig::default();
    cfg.direction_samples = 3;
    assert!(cfg.validate().is_err());
    cfg.direction_samples = 8;
    cfg.cfl_factor = 1.5;
    assert!(cfg.validate().is_err());
}

#[test]
fn gradient_examples() {
    let grid = GridSpec::cube(2, -1.0, 1.0, 9, 1.0).unwrap();
    let affine = field(|x| 0.5 + 2.0 * x[0] - 3.0 * x[1]);
    let p = CauchyDirichletProblem::new(CarnotGroup::euclidean(2), grid, 2.0, affine.clone(), affine).unwrap();
    let u = sample(&p, |x| 0.5 + 2.0 * x[0] - 3.0 * x[1]);
    let g = discrete_gradient(&p, &u, node_at(p.grid(), &[0.25, -0.5]));
    assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(g[1], -3.0, epsilon = 1e-12);
    let c = sample(&p, |_| 4.0);
    assert_eq!(discrete_gradient(&p, &c, 40), vec![0.0, 0.0]);

    let grid = GridSpec::new(vec![(0.0, 4.0), (2.0, 6.0), (-1.0, 3.0)], vec![8, 8, 8], 1.0).unwrap();
    let z = field(|x| x[2]);
    let p = CauchyDirichletProblem::new(CarnotGroup::heisenberg(), grid, 2.0, z.clone(), z).unwrap();
    let u = sample(&p, |x| x[2]);
    let node = node_at(p.grid(), &[2.0, 4.0, 1.0]);
    let oracle = horizontal_gradient(
        &CarnotGroup::heisenberg(),
        &ScalarField::numeric(|x, _| x[2]),
        &GroupPoint::from([2.0, 4.0, 1.0]),
        0.0,
    )
    .unwrap();
    let g = discrete_gradient(&p, &u, node);
    assert_abs_diff_eq!(g[0], oracle[0], epsilon = 1e-9);
    assert_abs_diff_eq!(g[1], oracle[1], epsilon = 1e-9);
    assert_abs_diff_eq!(g[0], -2.0, epsilon = 1e-9);
}

#[test]
fn second_difference_examples() {
    let p = line_problem(21, 2.0, ScalarField::constant(0.0), ScalarField::constant(0.0));
    let sq = sample(&p, |x| x[0] * x[0]);
    for node in 1..20 {
        assert_abs_diff_eq!(directional_second_difference(&p, &sq, node, &[1.0]), 2.0, epsilon = 1e-9);
    }
    let aff = sample(&p, |x| 3.0 - x[0]);
    assert_abs_diff_eq!(directional_second_difference(&p, &aff, 7, &[1.0]), 0.0, epsilon = 1e-10);

    let xy = |x: &[f64]| x[0] * x[1];
    let p = heisenberg_box(17, 2.0, field(xy), field(xy));
    let u = sample(&p, xy);
    let pt = [0.25, -0.5, 0.125];
    let node = node_at(p.grid(), &pt);
    let eta = [std::f64::consts::FRAC_1_SQRT_2; 2];
    let hess = symmetrized_hessian(
        p.group(),
        &ScalarField::numeric(|x, _| x[0] * x[1]),
        &GroupPoint::from(pt),
        0.0,
    )
    .unwrap();
    let oracle = (hess.clone() * nalgebra::DVector::from_column_slice(&eta)).dot(&nalgebra::DVector::from_column_slice(&eta));
    assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(directional_second_difference(&p, &u, node, &eta), oracle, epsilon = 1e-6);
}

#[test]
fn operator_examples() {
    let cfg = SolverConfig::default();
    let p = line_problem(21, 3.0, ScalarField::constant(0.0), ScalarField::constant(0.0));
    let c = sample(&p, |_| 2.5);
    assert_eq!(discrete_operator(&p, &cfg, &c, 5), 0.0);
    for h in [1.0, 1.5, 2.0, 3.0, 5.0] {
        let p = p.with_h(h).unwrap();
        let aff = sample(&p, |x| 1.0 - 2.0 * x[0]);
        assert_abs_diff_eq!(discrete_operator(&p, &cfg, &aff, 9), 0.0, epsilon = 1e-8);
    }
    let grid = GridSpec::cube(1, 0.0, 2.0, 21, 1.0).unwrap();
    let zero = ScalarField::constant(0.0);
    let p = CauchyDirichletProblem::new(CarnotGroup::euclidean(1), grid, 3.0, zero.clone(), zero).unwrap();
    let sq = sample(&p, |x| x[0] * x[0]);
    let v = discrete_operator(&p, &cfg, &sq, 10);
    assert_abs_diff_eq!(v, 8.0, epsilon = 2.0 * p.grid().delta());
}

#[test]
fn cfl_examples() {
    let cfg = SolverConfig::default();
    let zero = ScalarField::constant(0.0);
    let p = line_problem(11, 1.0, zero.clone(), zero.clone());
    let d2 = p.grid().delta().powi(2);
    let u = sample(&p, |x| (7.0 * x[0]).sin());
    assert_abs_diff_eq!(cfl_dt(&p, &cfg, &u), cfg.cfl_factor * d2 / 2.0, epsilon = 1e-15);
    let p3 = p.with_h(3.0).unwrap();
    assert_abs_diff_eq!(cfl_dt(&p3, &cfg, &sample(&p3, |_| 1.0)), cfg.cfl_factor * d2 / 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(cfl_dt(&p3, &cfg, &sample(&p3, |x| 2.0 * x[0])), cfg.cfl_factor * d2 / 8.0, epsilon = 1e-12);
}

#[test]
fn step_examples() {
    let cfg = SolverConfig::default();
    let aff = |x: &[f64]| 0.3 + x[0] - 0.5 * x[1];
    let p = heisenberg_box(9, 3.0, field(aff), field(aff));
    let u = p.initial_level().unwrap();
    let next = step(&p, &cfg, &u).unwrap();
    assert!(next.max_abs_diff(&u) < 1e-13);
    assert!(next.time() > 0.0);

    let five = ScalarField::constant(5.0);
    let p = line_problem(11, 2.0, five.clone(), five);
    let u = p.initial_level().unwrap();
    assert_eq!(step(&p, &cfg, &u).unwrap().values(), u.values());

    let sq = field(|x| x[0] * x[0]);
    let p = line_problem(41, 3.0, sq.clone(), sq);
    let u = p.initial_level().unwrap();
    let next = step(&p, &cfg, &u).unwrap();
    let dt = next.time();
    let delta = p.grid().delta();
    for node in 1..40 {
        let x = p.grid().node_coords(node)[0];
        assert_abs_diff_eq!(next.value(node), x * x + dt * 8.0 * x * x, epsilon = delta * dt * 2.0);
    }
}

#[test]
fn parabolic_affine_and_bounds() {
    let cfg = SolverConfig::default();
    let aff = |x: &[f64]| 1.0 + 0.25 * x[0] + x[1];
    for group in [CarnotGroup::heisenberg(), CarnotGroup::engel()] {
        let n = group.total_dim();
        let grid = GridSpec::cube(n, -1.0, 1.0, 7, 0.01).unwrap();
        let p = CauchyDirichletProblem::new(group, grid, 2.0, field(aff), field(aff)).unwrap();
        let run = solve_parabolic(&p, &cfg, &[0.005, 0.01]).unwrap();
        assert_eq!(run.snapshots.len(), 2);
        assert_abs_diff_eq!(run.snapshots[1].time(), 0.01, epsilon = 1e-15);
        for s in &run.snapshots {
            assert!(s.max_abs_diff(&p.initial_level().unwrap()) < 1e-12);
        }
    }

    let psi = field(|x| (3.0 * x[0]).sin() * x[1] + x[2]);
    let g = field(|x| 0.2 * x[0] - 0.1 * x[2]);
    let p = heisenberg_box(9, 2.0, psi, g);
    let run = solve_parabolic(&p, &cfg, &[]).unwrap();
    let last = run.snapshots.last().unwrap();
    let (lo, hi) = last.min_max();
    assert!(lo >= run.data_range.0 - 1e-12 && hi <= run.data_range.1 + 1e-12);
}

#[test]
fn line_converges_toward_affine() {
    let cfg = SolverConfig::default();
    let p = line_problem(33, 3.0, field(|x| x[0] * x[0]), field(|x| x[0])).with_horizon(2.0).unwrap();
    let run = solve_parabolic(&p, &cfg, &[0.05, 0.2, 0.5, 1.0, 2.0]).unwrap();
    let target = sample(&p, |x| x[0]);
    let errors: Vec<f64> = run.snapshots.iter().map(|s| s.max_abs_diff(&target)).collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
    assert!(errors[4] < errors[0]);
}

#[test]
fn elliptic_examples() {
    let cfg = SolverConfig { steady_tolerance: 1e-12, ..SolverConfig::default() };
    let p = line_problem(33, 3.0, ScalarField::constant(0.0), field(|x| x[0]));
    let u = solve_elliptic_steady(&p, &cfg).unwrap();
    assert!(u.max_abs_diff(&sample(&p, |x| x[0])) < 2.0 * p.grid().delta());

    let c = ScalarField::constant(-1.5);
    let p = heisenberg_box(9, 2.0, ScalarField::constant(0.0), c);
    let u = solve_elliptic_steady(&p, &cfg).unwrap();
    assert!(u.values().iter().all(|&v| (v + 1.5).abs() < 1e-9));

    let aff = |x: &[f64]| 0.5 * x[0] - x[1];
    let p = heisenberg_box(9, 2.0, ScalarField::constant(0.0), field(aff));
    let cfg = SolverConfig { steady_tolerance: 1e-10, ..cfg };
    let u = solve_elliptic_steady(&p, &cfg).unwrap();
    assert!(u.max_abs_diff(&sample(&p, aff)) < p.grid().delta());
}

#[test]
fn stationary_march_matches_steady_solve() {
    let cfg = SolverConfig::default();
    let p = line_problem(17, 2.0, field(|x| x[0] * x[0]), field(|x| x[0]));
    let run = march_to_stationary(&p, &cfg, 1e-9).unwrap();
    let steady = solve_elliptic_steady(&p, &cfg).unwrap();
    assert!(run.state.max_abs_diff(&steady) < 1e-6);
}

#[test]
fn csv_export_layout() {
    let p = line_problem(3, 2.0, field(|x| x[0]), field(|x| x[0]));
    let u = p.initial_level().unwrap();
    let mut buf = Vec::new();
    write_snapshot_csv(&mut buf, &u).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, "axis_0,t,u\n0.0,0.0,0.0\n0.5,0.0,0.5\n1.0,0.0,1.0\n");
}

fn lockstep_pair(
    scheme: &Scheme,
    u: &GridFunction,
    v: &GridFunction,
) -> (GridFunction, GridFunction) {
    let eu = scheme.evaluate(u);
    let ev = scheme.evaluate(v);
    let dt = scheme.cfl_dt(eu.max_slope.max(ev.max_slope));
    (scheme.advance(u, &eu, dt).unwrap(), scheme.advance(v, &ev, dt).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scheme_is_monotone(
        h in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, 4.0]),
        seeds in prop::collection::vec(-1.0f64..1.0, 6),
        gap in 0.0f64..0.3,
    ) {
        let base = move |x: &[f64]| seeds[0] * x[0] + seeds[1] * (2.0 * x[1]).sin() + seeds[2] * x[0] * x[2]
            + seeds[3] * (x[0] * x[1] - x[2]).cos();
        let bump = move |x: &[f64]| gap * (1.0 + (3.0 * x[0] + x[1] * x[2]).sin());
        let ub = base.clone();
        let p = heisenberg_box(7, h, field(ub.clone()), field(ub));
        let cfg = SolverConfig::default();
        let scheme = Scheme::new(&p, &cfg).unwrap();
        let mut u = p.initial_level().unwrap();
        let mut v = GridFunction::from_fn(Arc::clone(p.grid()), 0.0, |x| base(x) + bump(x)).unwrap();
        for &b in scheme.boundary() {
            prop_assert!(u.value(b) <= v.value(b));
        }
        for _ in 0..5 {
            let (nu, nv) = lockstep_pair(&scheme, &u, &v);
            let (worst, _) = nu.max_diff(&nv);
            prop_assert!(worst <= 1e-13, "max(u - v) = {worst}");
            u = nu;
            v = nv;
        }
    }

    #[test]
    fn horizontal_affine_data_is_fixed(
        h in prop::sample::select(vec![1.0, 1.25, 2.0, 3.0, 5.0]),
        c in prop::collection::vec(-2.0f64..2.0, 3),
        which in 0usize..4,
    ) {
        let group = match which {
            0 => CarnotGroup::euclidean(2),
            1 => CarnotGroup::euclidean(3),
            2 => CarnotGroup::heisenberg(),
            _ => CarnotGroup::engel(),
        };
        let n = group.total_dim();
        let (c0, c1, c2) = (c[0], c[1], c[2]);
        let aff = move |x: &[f64]| c0 + c1 * x[0] + c2 * x[1];
        let grid = GridSpec::cube(n, -1.0, 1.0, 5, 1.0).unwrap();
        let p = CauchyDirichletProblem::new(group, grid, h, field(aff), field(aff)).unwrap();
        let u = p.initial_level().unwrap();
        let next = step(&p, &SolverConfig::default(), &u).unwrap();
        prop_assert!(next.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn scaled_runs_are_homogeneous(
        h in prop::sample::select(vec![1.5, 2.0, 3.0]),
        k in 0.5f64..4.0,
        a in -1.0f64..1.0,
    ) {
        let base = move |x: &[f64]| a * x[0] * x[0] + (2.0 * x[1]).sin() * 0.5 + x[2];
        let p = heisenberg_box(7, h, field(base.clone()), field(base.clone()));
        let lam = k.powf(1.0 / (h - 1.0));
        let scaled = p.with_data(field(move |x| lam * base(x)), field(move |x| lam * base(x))).unwrap();
        let cfg = SolverConfig::default();
        let s1 = Scheme::new(&p, &cfg).unwrap();
        let s2 = Scheme::new(&scaled, &cfg).unwrap();
        let mut u = p.initial_level().unwrap();
        let mut w = scaled.initial_level().unwrap();
        for _ in 0..4 {
            let e = s1.evaluate(&u);
            let dt = s1.cfl_dt(e.max_slope);
            let ew = s2.evaluate(&w);
            prop_assert!(dt / k <= s2.cfl_dt(ew.max_slope) * (1.0 + 1e-12) || k < 1.0);
            u = s1.advance(&u, &e, dt).unwrap();
            w = s2.advance(&w, &ew, dt / k).unwrap();
            let err = u.values().iter().zip(w.values()).map(|(a, b)| (lam * a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-10 * (1.0 + lam), "err {err}");
        }
    }
}
