//! Command execution behind the `carnot-lab` binary.
//!
//! Output layout under the output directory:
//!
//! * `solve`: `snapshot_KKK.csv` plus `snapshot_KKK.json` metadata per time.
//! * `verify`: `reports.json` (deterministic), `timings.json` (wall-clock
//!   seconds per experiment) and `results.jsonl`, a ledger that every run
//!   appends to.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::CarnotGroup;
use crate::calculus::ScalarField;
use crate::config::{parse_config, ConfigError, RunConfig};
use crate::harness::{self, ExperimentReport, HarnessError};
use crate::poly::Poly;
use crate::solver::{solve_parabolic, write_snapshot_csv, GridFunction, SnapshotMetadata, SolverError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl RunError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Verify,
}

/// Command-line overrides of the configuration.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

/// Exit status contract: 0 success, 1 configuration or runtime error,
/// 2 at least one experiment failed.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

pub fn list_experiments() -> String {
    harness::list_experiments()
}

/// Reads `path`, runs it and maps the outcome to an exit code. Errors are
/// printed to stderr.
pub fn run_file(path: &Path, mode: Mode, options: &RunOptions) -> i32 {
    let outcome = fs::read_to_string(path)
        .map_err(RunError::io(path))
        .and_then(|text| Ok(parse_config(&text)?))
        .and_then(|config| run(&config, mode, options));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a parsed configuration and returns the exit code.
pub fn run(config: &RunConfig, mode: Mode, options: &RunOptions) -> Result<i32, RunError> {
    let out = options.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(RunError::io(&out))?;
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    match mode {
        Mode::Solve => {
            solve(&config, &out, options.quiet)?;
            Ok(EXIT_OK)
        }
        Mode::Verify => {
            let reports = verify(&config, options.quiet)?;
            write_reports(&out, &reports, config.seed)?;
            Ok(if reports.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_FAILED })
        }
    }
}

/// Solves the configured problem and writes one CSV and metadata file per
/// snapshot time. Returns the snapshot paths.
pub fn solve(config: &RunConfig, out: &Path, quiet: bool) -> Result<Vec<PathBuf>, RunError> {
    let problem = config.problem()?;
    let started = Instant::now();
    let run = solve_parabolic(&problem, &config.solver, &config.snapshots)?;
    let grid = problem.grid();
    let mut written = Vec::new();
    for (k, snap) in run.snapshots.iter().enumerate() {
        let csv = out.join(format!("snapshot_{k:03}.csv"));
        let file = File::create(&csv).map_err(RunError::io(&csv))?;
        let mut w = BufWriter::new(file);
        write_snapshot_csv(&mut w, snap).and_then(|_| w.flush()).map_err(RunError::io(&csv))?;
        let meta = SnapshotMetadata {
            group: problem.group().label().to_string(),
            h: problem.h(),
            delta: grid.delta(),
            dt_min: run.min_dt,
            dt_max: run.max_dt,
            cfl_factor: config.solver.cfl_factor,
            steps: run.steps,
            time: snap.time(),
            axes: grid.bounds(),
            nodes_per_axis: (0..grid.dim()).map(|d| grid.nodes_per_axis(d)).collect(),
        };
        let json = out.join(format!("snapshot_{k:03}.json"));
        write_json(&json, &meta)?;
        written.push(csv);
    }
    if !quiet {
        println!(
            "solved {} h={} to T={} in {} steps ({:.2}s); {} snapshot(s) in {}",
            problem.group().label(),
            problem.h(),
            grid.horizon(),
            run.steps,
            started.elapsed().as_secs_f64(),
            written.len(),
            out.display()
        );
    }
    Ok(written)
}

/// Runs the configured experiments (all of them when none are listed).
pub fn verify(config: &RunConfig, quiet: bool) -> Result<Vec<ExperimentReport>, RunError> {
    let names: Vec<String> = if config.experiments.is_empty() {
        harness::EXPERIMENTS.iter().map(|(n, _)| n.to_string()).collect()
    } else {
        config.experiments.clone()
    };
    let mut reports = Vec::new();
    let pair_family = ["comparison", "boundary_stability", "sup_bound"];
    let mut pair_done = false;
    for name in &names {
        if pair_family.contains(&name.as_str()) {
            if !pair_done {
                pair_done = true;
                let family = ordered_pair_family(config)?;
                for r in family {
                    if names.contains(&r.name) {
                        announce(&r, quiet);
                        reports.push(r);
                    }
                }
            }
            continue;
        }
        log::info!("running {name}");
        let r = experiment(config, name)?;
        announce(&r, quiet);
        reports.push(r);
    }
    // Keep the listed order.
    reports.sort_by_key(|r| names.iter().position(|n| *n == r.name));
    Ok(reports)
}

fn announce(r: &ExperimentReport, quiet: bool) {
    if !quiet {
        println!("{}", r.summary());
    }
}

fn experiment(config: &RunConfig, name: &str) -> Result<ExperimentReport, RunError> {
    let p = &config.params;
    let problem = config.problem()?;
    let solver = &config.solver;
    let seed = config.seed;
    Ok(match name {
        "algebra_exactness" => {
            let mut groups = vec![CarnotGroup::euclidean(2), CarnotGroup::heisenberg(), CarnotGroup::engel()];
            if !groups.contains(&config.group) {
                groups.push(config.group.clone());
            }
            harness::algebra_exactness_experiment(&groups, p.algebra_triples, seed)?
        }
        "jet_twist" => harness::jet_twist_experiment(&config.group, p.twist_points, seed)?,
        "homogeneity" => {
            let mut runs = Vec::new();
            for &k in &p.homogeneity_k {
                runs.push(harness::homogeneity_experiment(&problem, solver, k)?);
            }
            merge("homogeneity", "k", &p.homogeneity_k, runs)
        }
        "long_time" => harness::long_time_experiment(&problem, solver)?,
        "elliptic_h_independence" => {
            harness::elliptic_h_independence_experiment(&problem, solver, &p.elliptic_exponents)?
        }
        "h_limit" => harness::h_limit_experiment(&problem, solver, &p.h_sequence)?,
        "commuting_diagram" => harness::commuting_diagram_experiment(&problem, solver, &[])?,
        "doubling_penalty" => {
            let grid = Arc::clone(problem.grid());
            let psi = config.psi_field();
            let v_field = p.penalty_v.as_ref().map_or_else(|| psi.clone(), |e| e.to_field());
            let u = GridFunction::from_fn(Arc::clone(&grid), 0.0, |x| psi.eval(x, 0.0))?;
            let v = GridFunction::from_fn(grid, 0.0, |x| v_field.eval(x, 0.0))?;
            harness::doubling_penalty_experiment(&config.group, &u, &v, p.penalty_m, &p.penalty_taus)?
        }
        "consistency" => {
            let source = p.consistency_field.as_ref().unwrap_or(&config.psi);
            let field = spatial_poly(source.to_poly(), config.group.total_dim()).ok_or_else(|| {
                HarnessError::Invalid(format!(
                    "consistency needs a time-independent polynomial field, got `{}`",
                    source.source()
                ))
            })?;
            let lo = config.grid.lo().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let hi = config.grid.hi().iter().copied().fold(f64::INFINITY, f64::min);
            if lo >= hi {
                return Err(HarnessError::Invalid("box axes have no common interval".into()).into());
            }
            let case = harness::ConsistencyCase {
                group: config.group.clone(),
                h: config.h,
                field,
                bounds: (lo, hi),
                base_nodes: p.consistency_base_nodes,
                levels: p.consistency_levels,
                base_directions: p.consistency_directions,
                min_gradient: p.consistency_min_gradient,
            };
            harness::consistency_experiment(&case, solver)?
        }
        other => return Err(HarnessError::Invalid(format!("unknown experiment `{other}`")).into()),
    })
}

/// Drops the trailing time variable of a polynomial that does not use it.
fn spatial_poly(p: Option<Poly>, n: usize) -> Option<Poly> {
    let p = p?;
    if !p.derivative(n).is_zero() {
        return None;
    }
    let mut subs: Vec<Poly> = (0..n).map(|i| Poly::var(n, i)).collect();
    subs.push(Poly::zero(n));
    Some(p.compose(&subs))
}

/// Comparison, boundary stability and sup bound from the same runs: the
/// configured ordered pair, or `random_pairs` seeded pairs.
fn ordered_pair_family(config: &RunConfig) -> Result<Vec<ExperimentReport>, RunError> {
    let problem = config.problem()?;
    let p = &config.params;
    let pairs: Vec<(ScalarField, ScalarField)> = match &p.ordered_pair {
        Some((u, v)) => vec![(u.to_field(), v.to_field())],
        None => (0..p.random_pairs)
            .map(|i| harness::random_ordered_pair(config.group.total_dim(), config.seed.wrapping_add(i as u64)))
            .collect(),
    };
    let mut families: [Vec<ExperimentReport>; 3] = Default::default();
    for (u0, v0) in pairs {
        let suite = harness::ordered_pair_suite(&problem, &config.solver, u0, v0)?;
        for (slot, r) in families.iter_mut().zip(suite) {
            slot.push(r);
        }
    }
    let [comparison, mut stability, mut sup] = families;
    if let Some(g2) = &p.g2 {
        stability = vec![harness::boundary_stability_experiment(
            &problem,
            &config.solver,
            config.g_field(),
            g2.to_field(),
        )?];
    }
    sup.push(harness::sup_bound_experiment(&problem, &config.solver)?);
    let labels: Vec<f64> = (0..comparison.len()).map(|i| i as f64).collect();
    let mut out = vec![merge("comparison", "pair", &labels, comparison)];
    let labels: Vec<f64> = (0..stability.len()).map(|i| i as f64).collect();
    out.push(merge("boundary_stability", "pair", &labels, stability));
    let labels: Vec<f64> = (0..sup.len()).map(|i| i as f64).collect();
    out.push(merge("sup_bound", "run", &labels, sup));
    Ok(out)
}

/// Combines repeated runs of one experiment: passes iff every run passes
/// and labels are prefixed with the run key.
fn merge(name: &str, key: &str, keys: &[f64], runs: Vec<ExperimentReport>) -> ExperimentReport {
    if runs.len() == 1 {
        return runs.into_iter().next().expect("one run");
    }
    let inputs = runs.first().map(|r| r.inputs.clone()).unwrap_or_default();
    let mut merged = ExperimentReport {
        name: name.to_string(),
        inputs: format!("{inputs} runs={}", runs.len()),
        measured: Vec::new(),
        bound: None,
        passed: true,
        details: Vec::new(),
        runtime_seconds: 0.0,
    };
    let mut bounds = Vec::new();
    for (k, r) in keys.iter().zip(runs) {
        let prefix = format!("{key}={k}");
        merged.measured.extend(r.measured.into_iter().map(|(l, v)| (format!("{prefix}:{l}"), v)));
        merged.details.extend(r.details.into_iter().map(|d| format!("{prefix}: {d}")));
        merged.passed &= r.passed;
        merged.runtime_seconds += r.runtime_seconds;
        bounds.push(r.bound);
    }
    // Per-run bounds are kept as measurements when they differ.
    if bounds.windows(2).all(|w| w[0] == w[1]) {
        merged.bound = bounds[0];
    } else {
        for (k, b) in keys.iter().zip(&bounds) {
            if let Some(b) = b {
                merged.measured.push((format!("{key}={k}:bound"), *b));
            }
        }
    }
    merged
}

#[derive(Serialize)]
struct LedgerRecord<'a> {
    name: &'a str,
    inputs: &'a str,
    measured: &'a [(String, f64)],
    bound: Option<f64>,
    passed: bool,
    runtime_seconds: f64,
    seed: u64,
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(RunError::io(path))
}

fn write_reports(out: &Path, reports: &[ExperimentReport], seed: u64) -> Result<(), RunError> {
    write_json(&out.join("reports.json"), reports)?;
    let timings: Vec<(&str, f64)> = reports.iter().map(|r| (r.name.as_str(), r.runtime_seconds)).collect();
    write_json(&out.join("timings.json"), &timings)?;
    let ledger = out.join("results.jsonl");
    let mut file = OpenOptions::new().create(true).append(true).open(&ledger).map_err(RunError::io(&ledger))?;
    for r in reports {
        let record = LedgerRecord {
            name: &r.name,
            inputs: &r.inputs,
            measured: &r.measured,
            bound: r.bound,
            passed: r.passed,
            runtime_seconds: r.runtime_seconds,
            seed,
        };
        let line = serde_json::to_string(&record).expect("serializable");
        writeln!(file, "{line}").map_err(RunError::io(&ledger))?;
    }
    Ok(())
}
