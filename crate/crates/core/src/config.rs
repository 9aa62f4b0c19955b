//! JSON run configurations.
//!
//! ```json
//! {
//!   "group": "heisenberg1",
//!   "box": [-1, 1],
//!   "cells": 32,
//!   "h": 2,
//!   "T": 0.1,
//!   "psi": "x1*x2 + x3",
//!   "g": "x1*x2 + x3",
//!   "snapshots": [0.05, 0.1],
//!   "experiments": ["comparison", "long_time"]
//! }
//! ```
//!
//! `group` is a preset name or `{"label", "layer_dims", "structure_constants"}`.
//! `box` is one `[lo, hi]` pair for every axis or a list of pairs; `cells`
//! likewise. Optional keys: `output`, `cfl_factor`, `steady_tolerance`,
//! `direction_samples`, `max_steps`, `seed` and `params` (see
//! [`ExperimentParams`]).

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, CarnotGroup, CustomGroupSpec, GroupPreset};
use crate::calculus::ScalarField;
use crate::expr::{Expr, ExprError};
use crate::harness::EXPERIMENTS;
use crate::solver::{CauchyDirichletProblem, GridSpec, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("expression `{field}`: {source}")]
    Expr {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("group: {0}")]
    Group(#[from] AlgebraError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Invalid(String),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the message.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        Self::Json { line: e.line(), column: e.column(), message }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GroupField {
    Preset(String),
    Custom(CustomGroupSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoxField {
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CellsField {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    group: GroupField,
    #[serde(rename = "box")]
    bounds: BoxField,
    cells: CellsField,
    h: f64,
    #[serde(rename = "T")]
    horizon: f64,
    psi: String,
    g: String,
    #[serde(default)]
    snapshots: Vec<f64>,
    #[serde(default)]
    experiments: Vec<String>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    cfl_factor: Option<f64>,
    #[serde(default)]
    steady_tolerance: Option<f64>,
    #[serde(default)]
    direction_samples: Option<usize>,
    #[serde(default)]
    max_steps: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    params: RawParams,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    u0: Option<String>,
    v0: Option<String>,
    random_pairs: Option<usize>,
    g2: Option<String>,
    homogeneity_k: Option<Vec<f64>>,
    h_sequence: Option<Vec<f64>>,
    elliptic_exponents: Option<Vec<f64>>,
    penalty_m: Option<u32>,
    penalty_taus: Option<Vec<f64>>,
    penalty_v: Option<String>,
    consistency_field: Option<String>,
    consistency_base_nodes: Option<usize>,
    consistency_levels: Option<usize>,
    consistency_directions: Option<usize>,
    consistency_min_gradient: Option<f64>,
    algebra_triples: Option<usize>,
    twist_points: Option<usize>,
}

/// Experiment inputs beyond the base problem, with defaults filled in.
#[derive(Clone, Debug)]
pub struct ExperimentParams {
    /// Explicit ordered pair for the comparison family; random pairs otherwise.
    pub ordered_pair: Option<(Expr, Expr)>,
    pub random_pairs: usize,
    /// Second lateral datum for boundary stability against `g`.
    pub g2: Option<Expr>,
    pub homogeneity_k: Vec<f64>,
    pub h_sequence: Vec<f64>,
    pub elliptic_exponents: Vec<f64>,
    pub penalty_m: u32,
    pub penalty_taus: Vec<f64>,
    /// Second field for the penalty search; defaults to `psi`.
    pub penalty_v: Option<Expr>,
    /// Spatial field for the consistency study; defaults to `psi`.
    pub consistency_field: Option<Expr>,
    pub consistency_base_nodes: usize,
    pub consistency_levels: usize,
    pub consistency_directions: usize,
    pub consistency_min_gradient: f64,
    pub algebra_triples: usize,
    pub twist_points: usize,
}

/// A validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub group: CarnotGroup,
    pub grid: GridSpec,
    pub h: f64,
    pub psi: Expr,
    pub g: Expr,
    /// Sorted output times; defaults to `[T]`.
    pub snapshots: Vec<f64>,
    pub experiments: Vec<String>,
    pub output: Option<PathBuf>,
    pub solver: SolverConfig,
    pub seed: u64,
    pub params: ExperimentParams,
}

fn expr(field: &str, text: &str, dim: usize) -> Result<Expr, ConfigError> {
    Expr::parse(text, dim).map_err(|source| ConfigError::Expr { field: field.to_string(), source })
}

fn opt_expr(field: &str, text: &Option<String>, dim: usize) -> Result<Option<Expr>, ConfigError> {
    text.as_deref().map(|s| expr(field, s, dim)).transpose()
}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    if !(raw.h >= 1.0) || !raw.h.is_finite() {
        return Err(ConfigError::Invalid(format!("h must satisfy h ≥ 1, got {}", raw.h)));
    }
    let group = match &raw.group {
        GroupField::Preset(name) => CarnotGroup::preset(GroupPreset::parse(name)?),
        GroupField::Custom(spec) => CarnotGroup::custom(spec)?,
    };
    let n = group.total_dim();
    let bounds: Vec<(f64, f64)> = match raw.bounds {
        BoxField::Uniform([lo, hi]) => vec![(lo, hi); n],
        BoxField::PerAxis(v) => v.into_iter().map(|[lo, hi]| (lo, hi)).collect(),
    };
    let cells = match raw.cells {
        CellsField::Uniform(c) => vec![c; n],
        CellsField::PerAxis(v) => v,
    };
    if bounds.len() != n || cells.len() != n {
        return Err(ConfigError::Invalid(format!(
            "group {} has {n} coordinates but box has {} axes and cells {}",
            group.label(),
            bounds.len(),
            cells.len()
        )));
    }
    let grid = GridSpec::new(bounds, cells, raw.horizon)?;

    let psi = expr("psi", &raw.psi, n)?;
    let g = expr("g", &raw.g, n)?;
    for (name, e) in [("psi", &psi), ("g", &g)] {
        check_finite(name, e, &grid)?;
    }

    let mut snapshots = if raw.snapshots.is_empty() { vec![raw.horizon] } else { raw.snapshots };
    if snapshots.iter().any(|&t| !(0.0..=raw.horizon).contains(&t)) {
        return Err(ConfigError::Invalid(format!("snapshot times must lie in [0, T = {}]", raw.horizon)));
    }
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();

    let mut experiments = Vec::new();
    for name in raw.experiments {
        if name == "all" {
            experiments.extend(EXPERIMENTS.iter().map(|(n, _)| n.to_string()));
        } else if EXPERIMENTS.iter().any(|(n, _)| *n == name) {
            experiments.push(name);
        } else {
            return Err(ConfigError::Invalid(format!("unknown experiment `{name}` (see `list`)")));
        }
    }
    let mut seen = std::collections::HashSet::new();
    experiments.retain(|e| seen.insert(e.clone()));

    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        cfl_factor: raw.cfl_factor.unwrap_or(defaults.cfl_factor),
        steady_tolerance: raw.steady_tolerance.unwrap_or(defaults.steady_tolerance),
        direction_samples: raw.direction_samples.unwrap_or(defaults.direction_samples),
        max_steps: raw.max_steps.unwrap_or(defaults.max_steps),
    };
    solver.validate()?;

    let p = raw.params;
    let ordered_pair = match (&p.u0, &p.v0) {
        (Some(u), Some(v)) => Some((expr("params.u0", u, n)?, expr("params.v0", v, n)?)),
        (None, None) => None,
        _ => return Err(ConfigError::Invalid("params.u0 and params.v0 must be given together".into())),
    };
    let params = ExperimentParams {
        ordered_pair,
        random_pairs: p.random_pairs.unwrap_or(3),
        g2: opt_expr("params.g2", &p.g2, n)?,
        homogeneity_k: p.homogeneity_k.unwrap_or_else(|| vec![2.0, 4.0]),
        h_sequence: p.h_sequence.unwrap_or_else(|| vec![2.0, 1.5, 1.25, 1.1]),
        elliptic_exponents: p.elliptic_exponents.unwrap_or_else(|| vec![1.5, 3.0, 5.0]),
        penalty_m: p.penalty_m.unwrap_or(4),
        penalty_taus: p.penalty_taus.unwrap_or_else(|| vec![1.0, 1e2, 1e4, 1e6, 1e8]),
        penalty_v: opt_expr("params.penalty_v", &p.penalty_v, n)?,
        consistency_field: opt_expr("params.consistency_field", &p.consistency_field, n)?,
        consistency_base_nodes: p.consistency_base_nodes.unwrap_or(9),
        consistency_levels: p.consistency_levels.unwrap_or(3),
        consistency_directions: p.consistency_directions.unwrap_or(4),
        consistency_min_gradient: p.consistency_min_gradient.unwrap_or(0.5),
        algebra_triples: p.algebra_triples.unwrap_or(100),
        twist_points: p.twist_points.unwrap_or(20),
    };
    if params.homogeneity_k.iter().any(|&k| !(k > 0.0)) {
        return Err(ConfigError::Invalid("params.homogeneity_k entries must be positive".into()));
    }

    Ok(RunConfig {
        group,
        grid,
        h: raw.h,
        psi,
        g,
        snapshots,
        experiments,
        output: raw.output,
        solver,
        seed: raw.seed,
        params,
    })
}

fn check_finite(name: &str, e: &Expr, grid: &GridSpec) -> Result<(), ConfigError> {
    for t in [0.0, grid.horizon()] {
        for node in 0..grid.node_count() {
            let p = grid.node_coords(node);
            let v = e.eval(&p, t);
            if !v.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "{name} = `{}` is not finite at {p:?}, t = {t}",
                    e.source()
                )));
            }
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn psi_field(&self) -> ScalarField {
        self.psi.to_field()
    }

    pub fn g_field(&self) -> ScalarField {
        self.g.to_field()
    }

    pub fn problem(&self) -> Result<CauchyDirichletProblem, SolverError> {
        CauchyDirichletProblem::new(self.group.clone(), self.grid.clone(), self.h, self.psi_field(), self.g_field())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"group": "euclidean(1)", "box": [0, 1], "cells": 8, "h": 2, "T": 0.1,
        "psi": "x1*x1", "g": "x1"}"#;

    #[test]
    fn minimal_config() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.group.total_dim(), 1);
        assert_eq!(c.grid.nodes_per_axis(0), 9);
        assert_eq!(c.snapshots, vec![0.1]);
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.psi_field().is_analytic());
        let p = c.problem().unwrap();
        assert_eq!(p.h(), 2.0);
    }

    #[test]
    fn rejects_small_exponent() {
        let text = MINIMAL.replace("\"h\": 2", "\"h\": 0.5");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("h ≥ 1"), "{err}");
    }

    #[test]
    fn unknown_coordinate() {
        let text = r#"{"group": "heisenberg1", "box": [-1, 1], "cells": 4, "h": 2, "T": 0.1,
            "psi": "x7*2", "g": "x1"}"#;
        match parse_config(text).unwrap_err() {
            ConfigError::Expr { field, source: ExprError::UnknownCoordinate { name, dim } } => {
                assert_eq!((field.as_str(), name.as_str(), dim), ("psi", "x7", 3));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn json_errors_have_positions() {
        let err = parse_config("{\n  \"group\": \"engel\",\n  \"box\" [0, 1]\n}").unwrap_err();
        match err {
            ConfigError::Json { line, column, .. } => assert_eq!((line, column), (3, 9)),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(parse_config(&MINIMAL.replace("\"T\"", "\"horizon\"")), Err(ConfigError::Json { .. })));
    }

    #[test]
    fn group_and_shape_errors() {
        let bad_group = MINIMAL.replace("euclidean(1)", "sphere");
        assert!(matches!(parse_config(&bad_group), Err(ConfigError::Group(_))));
        let bad_axes = MINIMAL.replace("\"box\": [0, 1]", "\"box\": [[0, 1], [0, 1]]");
        assert!(matches!(parse_config(&bad_axes), Err(ConfigError::Invalid(_))));
        let singular = MINIMAL.replace("x1*x1", "1/x1");
        assert!(matches!(parse_config(&singular), Err(ConfigError::Invalid(_))));
        let unknown = MINIMAL.replace("\"T\": 0.1", "\"T\": 0.1, \"experiments\": [\"nope\"]");
        assert!(matches!(parse_config(&unknown), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn custom_group_and_options() {
        let text = r#"{
            "group": {"label": "h1", "layer_dims": [2, 1],
                      "structure_constants": [[0, 1, 2, 1.0], [1, 0, 2, -1.0]]},
            "box": [[-1, 1], [-1, 1], [-0.5, 0.5]], "cells": [4, 4, 2],
            "h": 1, "T": 0.2, "psi": "x3", "g": "x3 + t", "snapshots": [0.2, 0.1, 0.1],
            "experiments": ["all", "comparison"], "cfl_factor": 0.5, "seed": 9,
            "params": {"u0": "x1", "v0": "x1 + 1", "h_sequence": [1.5]}
        }"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.group, CarnotGroup::heisenberg());
        assert_eq!(c.snapshots, vec![0.1, 0.2]);
        assert_eq!(c.experiments.len(), EXPERIMENTS.len());
        assert_eq!(c.solver.cfl_factor, 0.5);
        assert_eq!(c.seed, 9);
        assert!(c.params.ordered_pair.is_some());
        assert_eq!(c.params.h_sequence, vec![1.5]);
        assert_eq!(c.grid.spacing(2), 0.5);
    }
}
