//! Numerical laboratory for the parabolic h-homogeneous infinity-Laplace
//! equation `u_t = Delta^h_inf u` on Carnot groups.
//!
//! * [`algebra`]: group law, gauge and dilations for Euclidean, Heisenberg,
//!   Engel and user-defined groups of step at most three.
//! * [`calculus`]: left-invariant frames, horizontal derivatives, jet
//!   twisting and the doubling penalty.
//! * [`operators`]: the operator on jets and the viscosity inequalities.
//! * [`solver`]: monotone semi-Lagrangian scheme for the Cauchy-Dirichlet
//!   problem on coordinate boxes, plus a steady-state solver.
//! * [`harness`]: executable experiments (comparison, stability, homogeneity,
//!   long-time and `h -> 1` limits, ...).
//! * [`expr`], [`config`] and [`runner`]: JSON run configurations and the command-line
//!   driver behind the `carnot-lab` binary, with a small arithmetic
//!   expression language for initial and lateral data.

pub mod algebra;
pub mod calculus;
pub mod config;
pub mod expr;
pub mod harness;
pub mod operators;
pub mod poly;
pub mod runner;
pub mod solver;

pub use algebra::{AlgebraError, CarnotGroup, CustomGroupSpec, GroupPoint, GroupPreset};
pub use calculus::{CalculusError, EuclideanJet, HorizontalFrame, Jet, PenaltySpec, ScalarField};
pub use operators::{OperatorError, OperatorParams, Role, Verdict};
pub use solver::{CauchyDirichletProblem, GridFunction, GridSpec, SolverConfig, SolverError};
pub use config::{parse_config, ConfigError, RunConfig};
pub use expr::{Expr, ExprError};
