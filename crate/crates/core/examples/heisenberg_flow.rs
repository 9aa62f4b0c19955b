//! Flow on a box in the Heisenberg group: maximum principle along the run,
//! then the stationary limit of the march against the steady solver.
//!
//! ```bash
//! cargo run --release --example heisenberg_flow
//! ```

use carnot_lab::solver::{march_to_stationary, solve_elliptic_steady, solve_parabolic};
use carnot_lab::{CarnotGroup, CauchyDirichletProblem, GridSpec, ScalarField, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::cube(3, -1.0, 1.0, 17, 0.2)?;
    let g = ScalarField::numeric(|x, _| x[0] + 0.2 * x[1] * x[1]);
    let psi = ScalarField::numeric(|x, _| {
        let bump = (std::f64::consts::PI * x[0]).sin() * (0.5 * std::f64::consts::PI * x[1]).cos();
        x[0] + 0.2 * x[1] * x[1] + 0.3 * bump * (0.5 * std::f64::consts::PI * x[2]).cos()
    });
    let config = SolverConfig { steady_tolerance: 1e-6, ..SolverConfig::default() };
    for h in [1.0, 2.0, 4.0] {
        let problem = CauchyDirichletProblem::new(CarnotGroup::heisenberg(), grid.clone(), h, psi.clone(), g.clone())?;
        let run = solve_parabolic(&problem, &config, &[0.05, 0.2])?;
        let (lo, hi) = run.data_range;
        let (ulo, uhi) = run.snapshots[1].min_max();
        println!("h = {h}: {} steps, u(T) in [{ulo:.4}, {uhi:.4}] within data range [{lo:.4}, {hi:.4}]", run.steps);

        let stationary = march_to_stationary(&problem, &config, 1e-7)?;
        let steady = solve_elliptic_steady(&problem, &config)?;
        println!(
            "        stationary at t = {:.2} after {} steps, gap to steady solve {:.2e}",
            stationary.state.time(),
            stationary.steps,
            stationary.state.max_abs_diff(&steady)
        );
    }
    Ok(())
}
