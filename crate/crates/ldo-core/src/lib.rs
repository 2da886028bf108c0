//! Data-driven decision rules that are optimal under large-deviations
//! feasibility constraints.
//!
//! The decision function minimizes, over the compact decision space, the
//! worst case over models of the objective minus a penalty-transformed rate
//! function evaluated at the observation:
//!
//! ```text
//! X*(z) = argmin_x max_theta { g(x, theta) - linv(I_theta(z) - r) }
//! ```
//!
//! The crate provides:
//! - geometric primitives and projections for parameter/decision spaces
//!   ([`spaces`]),
//! - the rate functions driving the regularization ([`rate`]),
//! - the penalty family defined through its inverse ([`penalty`]),
//! - concrete cost models with exact minimum oracles ([`problems`]),
//! - the min-max solver with plug-in and DRO baselines ([`solver`]),
//! - seeded simulators and empirical statistics ([`sim`]),
//! - exact finite-horizon verification of the underlying limit theorems
//!   ([`verify`]),
//! - experiment runners, config ingestion and CSV/SVG output ([`harness`]).

pub mod error;
pub mod harness;
pub mod linalg;
pub mod penalty;
pub mod problems;
pub mod rate;
pub mod sim;
pub mod solver;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
pub use penalty::Penalty;
pub use problems::{CostKind, DecisionProblem, LossTable, Objective};
pub use rate::{EffectiveDomain, ExtReal, RateFunction};
pub use solver::{
    consistency_gap, dro_decision, feasibility_margin, optimal_decision, plugin_decision,
    worst_case_param, Ambiguity, DecisionOutput, MarginVariant, SolverConfig,
};
pub use spaces::{DecisionSpace, ParamSpace, ProbMatrix, ProbVector};
