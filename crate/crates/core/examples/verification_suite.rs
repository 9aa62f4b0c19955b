//! Runs a selection of the verification experiments directly from the
//! library and prints their one-line summaries.
//!
//! ```bash
//! cargo run --release --example verification_suite
//! ```

use std::sync::Arc;

use carnot_lab::harness::{
    algebra_exactness_experiment, commuting_diagram_experiment, consistency_experiment, doubling_penalty_experiment,
    h_limit_experiment, homogeneity_experiment, jet_twist_experiment, ordered_pair_suite, random_ordered_pair,
    ConsistencyCase,
};
use carnot_lab::poly::Poly;
use carnot_lab::{CarnotGroup, CauchyDirichletProblem, GridFunction, GridSpec, ScalarField, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SolverConfig::default();
    let presets = [CarnotGroup::euclidean(2), CarnotGroup::heisenberg(), CarnotGroup::engel()];
    let mut reports = vec![algebra_exactness_experiment(&presets, 100, 1)?];
    for g in &presets {
        reports.push(jet_twist_experiment(g, 20, 2)?);
    }

    let heis = GridSpec::cube(3, -1.0, 1.0, 17, 0.05)?;
    let base = CauchyDirichletProblem::new(
        CarnotGroup::heisenberg(),
        heis,
        2.0,
        ScalarField::numeric(|x, _| x[0] * x[1] + x[2]),
        ScalarField::numeric(|x, _| x[0] * x[1] + x[2]),
    )?;
    let (u0, v0) = random_ordered_pair(3, 11);
    reports.extend(ordered_pair_suite(&base, &config, u0, v0)?);
    reports.push(homogeneity_experiment(&base, &config, 2.0)?);

    let line = CauchyDirichletProblem::new(
        CarnotGroup::euclidean(1),
        GridSpec::cube(1, 0.0, 1.0, 33, 0.1)?,
        2.0,
        ScalarField::numeric(|x, _| x[0] + 0.2 * (std::f64::consts::PI * x[0]).sin()),
        ScalarField::numeric(|x, _| x[0]),
    )?;
    reports.push(h_limit_experiment(&line, &config, &[2.0, 1.5, 1.25, 1.1])?);
    reports.push(commuting_diagram_experiment(&line, &config, &[2.0])?);

    let plane = Arc::new(GridSpec::cube(2, -1.0, 1.0, 17, 1.0)?);
    let v = GridFunction::from_fn(Arc::clone(&plane), 0.0, |x| x[0] - 0.5 * x[1] * x[1])?;
    let u = GridFunction::from_fn(plane, 0.0, |x| {
        x[0] - 0.5 * x[1] * x[1] + 0.2 * (-8.0 * (x[0] * x[0] + x[1] * x[1])).exp()
    })?;
    reports.push(doubling_penalty_experiment(&CarnotGroup::euclidean(2), &u, &v, 4, &[1.0, 1e2, 1e4, 1e6])?);

    let cubic = &Poly::monomial(1.0, &[3]) + &Poly::var(1, 0);
    let case = ConsistencyCase {
        group: CarnotGroup::euclidean(1),
        h: 3.0,
        field: cubic,
        bounds: (-1.0, 1.0),
        base_nodes: 9,
        levels: 3,
        base_directions: 4,
        min_gradient: 0.5,
    };
    reports.push(consistency_experiment(&case, &config)?);

    for r in &reports {
        println!("{}", r.summary());
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} experiments, {failed} failed", reports.len());
    Ok(())
}
