//! Shared fixtures for the solver benchmarks.

use ldo_core::{DecisionProblem, Objective, ParamSpace, Penalty, RateFunction, SolverConfig};

pub fn toy_newsvendor(objective: Objective) -> DecisionProblem {
    DecisionProblem::newsvendor(
        1.0,
        1.65,
        0.05,
        3,
        ParamSpace::simplex_with_floor(3, 0.01).unwrap(),
        objective,
    )
    .unwrap()
}

pub fn paper_newsvendor(objective: Objective) -> DecisionProblem {
    DecisionProblem::newsvendor(
        1.0,
        1.65,
        0.0025,
        8,
        ParamSpace::simplex_with_floor(8, 0.001).unwrap(),
        objective,
    )
    .unwrap()
}

pub fn solver_config(rate: RateFunction, beta: f64, r: f64) -> SolverConfig {
    SolverConfig::new(r, Penalty::symmetric(beta).unwrap(), rate)
        .unwrap()
        .with_seed(7)
}
