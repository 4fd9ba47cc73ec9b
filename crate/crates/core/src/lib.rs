//! Uniform sampling of the feasible set of linear MPC problems.
//!
//! The feasible set `X_N` (initial states for which the MPC admits a solution)
//! is only known implicitly. [`samplers::lmpc_hr_run`] draws uniform samples
//! from it with Hit-and-Run, computing each chord exactly with one LP per
//! direction ([`optim::boundary_oracle`]), and labels every sample with the
//! MPC solution. Three baselines (volumetric rejection, directional rejection
//! and bisection) are provided for comparison, along with brute-force oracles
//! and chi-square machinery in [`validate`].

pub mod condense;
pub mod error;
pub mod model;
pub mod optim;
pub mod samplers;
pub mod validate;

pub use condense::{build_prediction_matrices, condense, CondensedProblem, PredictionMatrices, RowLabel};
pub use error::{Error, Result};
pub use model::{
    make_pendulum_problem, make_static_box_problem, validate_problem, LinearSystem, Method, MpcProblem,
    Polyhedron, ProblemData, SampleRecord, Violation,
};
pub use optim::{boundary_oracle, feasibility_check, solve_mpc, QueryCounter, Tolerances};
