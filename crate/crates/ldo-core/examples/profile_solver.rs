//! Scratch timing harness for the solver hot paths.

use ldo_core::linalg::SpdMatrix;
use ldo_core::spaces::sample_flat_simplex;
use ldo_core::{
    optimal_decision, DecisionProblem, Objective, ParamSpace, Penalty, RateFunction, SolverConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn cfg(rate: RateFunction, r: f64, beta: f64) -> SolverConfig {
    SolverConfig::new(r, Penalty::symmetric(beta).unwrap(), rate)
        .unwrap()
        .with_seed(42)
}

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(303);

    let p = DecisionProblem::newsvendor(
        1.0,
        1.65,
        0.05,
        3,
        ParamSpace::simplex_with_floor(3, 0.01).unwrap(),
        Objective::Regret,
    )
    .unwrap();
    let z = sample_flat_simplex(3, &mut rng);
    let t = Instant::now();
    let out = optimal_decision(&z, &p, &cfg(RateFunction::RelEntropy, 0.01, 0.1)).unwrap();
    println!(
        "rel_entropy regret d3: {:?} (iters {})",
        t.elapsed(),
        out.diagnostics.iterations
    );

    let t = Instant::now();
    let out = optimal_decision(
        &z,
        &p,
        &cfg(
            RateFunction::robust_rel_entropy(0.07, 0.01).unwrap(),
            0.01,
            0.1,
        ),
    )
    .unwrap();
    println!(
        "robust regret d3: {:?} (iters {})",
        t.elapsed(),
        out.diagnostics.iterations
    );

    let sigma = SpdMatrix::from_rows(&[vec![2.819, 1.726], vec![1.726, 1.297]]).unwrap();
    let gp = DecisionProblem::portfolio(
        1.0,
        sigma.clone(),
        false,
        ParamSpace::l2_ball(vec![0.0; 2], 1.0).unwrap(),
        Objective::Regret,
    )
    .unwrap();
    let zg = gp.param_space.sample(&mut rng).unwrap();
    let t = Instant::now();
    let out = optimal_decision(
        &zg,
        &gp,
        &cfg(
            RateFunction::GaussianCramer {
                sigma: sigma.clone(),
            },
            0.01,
            0.1,
        ),
    )
    .unwrap();
    println!(
        "gaussian regret d2: {:?} (iters {})",
        t.elapsed(),
        out.diagnostics.iterations
    );
    let mut gp_cost = gp.clone();
    gp_cost.objective = Objective::Cost;
    let t = Instant::now();
    let out = optimal_decision(&zg, &gp_cost, &cfg(RateFunction::GaussianCramer { sigma }, 0.01, 0.1))
        .unwrap();
    println!(
        "gaussian cost d2: {:?} (iters {})",
        t.elapsed(),
        out.diagnostics.iterations
    );

    let mp = DecisionProblem::newsvendor(
        1.0,
        1.65,
        0.05,
        4,
        ParamSpace::stationary_pairs(2, 0.01).unwrap(),
        Objective::Regret,
    )
    .unwrap();
    let zm = sample_flat_simplex(4, &mut rng);
    let t = Instant::now();
    let out = optimal_decision(&zm, &mp, &cfg(RateFunction::CondRelEntropy { dim: 2 }, 0.01, 0.1))
        .unwrap();
    println!(
        "cond regret d2-pair: {:?} (iters {})",
        t.elapsed(),
        out.diagnostics.iterations
    );
    let mut mp_cost = mp.clone();
    mp_cost.objective = Objective::Cost;
    let t = Instant::now();
    let out = optimal_decision(
        &zm,
        &mp_cost,
        &cfg(RateFunction::CondRelEntropy { dim: 2 }, 0.01, 0.1),
    )
    .unwrap();
    println!(
        "cond cost d2-pair: {:?} (iters {})",
        t.elapsed(),
        out.diagnostics.iterations
    );
}
