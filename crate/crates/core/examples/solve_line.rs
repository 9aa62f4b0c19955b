//! Cauchy-Dirichlet problem on the unit interval: the solution relaxes to
//! the affine steady state. Writes CSV snapshots to a temporary directory.
//!
//! ```bash
//! cargo run --release --example solve_line
//! ```

use std::fs::File;
use std::io::BufWriter;

use carnot_lab::solver::{solve_elliptic_steady, solve_parabolic, write_snapshot_csv};
use carnot_lab::{CarnotGroup, CauchyDirichletProblem, GridSpec, ScalarField, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::cube(1, 0.0, 1.0, 65, 1.0)?;
    let problem = CauchyDirichletProblem::new(
        CarnotGroup::euclidean(1),
        grid,
        3.0,
        ScalarField::numeric(|x, _| x[0] * x[0]),
        ScalarField::numeric(|x, _| x[0]),
    )?;
    let config = SolverConfig::default();
    let times = [0.01, 0.1, 0.5, 1.0];
    let run = solve_parabolic(&problem, &config, &times)?;
    let target = solve_elliptic_steady(&problem, &config)?;
    println!("{} steps, dt in [{:.3e}, {:.3e}]", run.steps, run.min_dt, run.max_dt);

    let dir = std::env::temp_dir().join("carnot_lab_solve_line");
    std::fs::create_dir_all(&dir)?;
    for (k, u) in run.snapshots.iter().enumerate() {
        println!("t = {:<5} sup |u - x| = {:.3e}", u.time(), u.max_abs_diff(&target));
        let path = dir.join(format!("snapshot_{k}.csv"));
        write_snapshot_csv(BufWriter::new(File::create(&path)?), u)?;
    }
    println!("steady state vs x: {:.3e}", target.values().iter().enumerate().fold(0.0f64, |m, (i, v)| {
        m.max((v - i as f64 / 64.0).abs())
    }));
    println!("snapshots written to {}", dir.display());
    Ok(())
}
