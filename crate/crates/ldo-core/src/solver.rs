//! The min-max decision engine: worst-case parameter search, evaluation of
//! the regularized upper bound, the optimal decision pair, plug-in and DRO
//! baselines, grid feasibility margins and the consistency gap.

use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2};
use crate::penalty::Penalty;
use crate::problems::{DecisionProblem, Objective};
use crate::rate::{EffectiveDomain, ExtReal, RateFunction};
use crate::spaces::{project_l2_ball, DecisionSpace, ParamSpace};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Solver knobs. Multistart seeds derive deterministically from `seed`, so
/// identical inputs give identical outputs.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Convergence-rate parameter of the feasibility constraint.
    pub r: f64,
    pub penalty: Penalty,
    pub rate: RateFunction,
    /// Restarts for the non-concave inner maximization (objective = regret
    /// or a non-convex rate).
    pub multistart: usize,
    /// Restarts for vector-valued decision searches.
    pub decision_multistart: usize,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(r: f64, penalty: Penalty, rate: RateFunction) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "convergence rate must be positive, got {r}"
            )));
        }
        Ok(Self {
            r,
            penalty,
            rate,
            multistart: 32,
            decision_multistart: 8,
            inner_tol: 1e-8,
            outer_tol: 1e-8,
            max_iter: 2000,
            seed: 0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Solve diagnostics carried on every decision output.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub restarts: usize,
    pub final_grad_norm: f64,
}

/// The optimal pair `(x*, u*)` at one observation, with the worst-case
/// parameter attaining the inner maximum at `x*`.
#[derive(Debug, Clone)]
pub struct DecisionOutput {
    pub x_star: Vec<f64>,
    pub u_star: f64,
    pub theta_star: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Floor of the parameter space (minimum feasible entry), used to pick the
/// effective-domain descriptor.
fn space_floor(space: &ParamSpace) -> f64 {
    match space {
        ParamSpace::SimplexWithFloor { floor, .. } => *floor,
        ParamSpace::StationaryPairMatrices { floor, .. } => *floor,
        _ => 0.0,
    }
}

/// Backtracking projected gradient ascent; `value` returns `None` where the
/// objective is minus infinity (infinite rate). Monotone in the objective.
fn ascend(
    value: &dyn Fn(&[f64]) -> Option<f64>,
    grad: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    project: &dyn Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    max_iter: usize,
    tol: f64,
    diam: f64,
) -> Result<Option<(Vec<f64>, f64, usize)>> {
    let mut cur = project(start);
    let mut val = match value(&cur) {
        Some(v) => v,
        None => return Ok(None),
    };
    let mut step = 0.1 * diam.max(1e-9);
    let mut iters = 0;
    let mut checkpoint = val;
    for _ in 0..max_iter {
        iters += 1;
        let g = grad(&cur)?;
        if norm2(&g) < 1e-18 {
            break;
        }
        let mut accepted = false;
        let mut moved = 0.0;
        for _ in 0..60 {
            let trial: Vec<f64> = cur.iter().zip(&g).map(|(c, gi)| c + step * gi).collect();
            let proj = project(&trial);
            if let Some(v) = value(&proj) {
                if v > val + 1e-15 * (1.0 + val.abs()) {
                    moved = dist2(&proj, &cur);
                    cur = proj;
                    val = v;
                    accepted = true;
                    step = (step * 1.5).min(10.0 * diam.max(1e-9));
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }
        if !accepted || moved < tol {
            break;
        }
        // zigzag guard: cut off sequences of vanishing improvements
        if iters % 25 == 0 {
            if val - checkpoint < 1e-12 * (1.0 + val.abs()) {
                break;
            }
            checkpoint = val;
        }
    }
    Ok(Some((cur, val, iters)))
}

/// Deterministic start list for the inner maximization: the projected
/// observation, the corners of the parameter space (pulled slightly toward
/// the projected observation so rate values stay finite off floors) and
/// seeded random samples.
fn inner_starts(
    z: &[f64],
    space: &ParamSpace,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let anchor = space.project(z)?;
    let mut starts = vec![anchor.clone()];
    for c in space.corner_points() {
        let blend: Vec<f64> = c
            .iter()
            .zip(&anchor)
            .map(|(ci, ai)| 0.95 * ci + 0.05 * ai)
            .collect();
        starts.push(space.project(&blend)?);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x1d0_5eed);
    while starts.len() < count {
        match space.sample(&mut rng) {
            Ok(p) => starts.push(p),
            Err(_) => break,
        }
    }
    starts.truncate(count.max(1));
    Ok(starts)
}

/// Maximizes `g(x, theta) - l^{-1}(I_theta(z) - r)` over the parameter
/// space, restricted to the effective domain of the rate function at `z`.
///
/// Returns the maximizing parameter and the value `G(x, z)`.
pub fn worst_case_param(
    x: &[f64],
    z: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64)> {
    worst_case_param_impl(x, z, problem, cfg, None)
}

/// `worst_case_param` with an optional override of the multistart list,
/// used by the outer decision loop to warm-start consecutive inner solves.
fn worst_case_param_impl(
    x: &[f64],
    z: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
    start_override: Option<&[Vec<f64>]>,
) -> Result<(Vec<f64>, f64)> {
    let space = &problem.param_space;
    let pen = &cfg.penalty;
    let shift = pen.inverse_f(-cfg.r);
    match cfg.rate.effective_domain(z, space_floor(space)) {
        EffectiveDomain::Singleton(pt) => {
            if !space.contains(&pt, 1e-6) {
                return Err(Error::EmptyRateDomain(format!(
                    "the only finite-rate parameter {pt:?} lies outside the parameter space"
                )));
            }
            let val = problem.g(x, &pt)? - shift;
            Ok((pt, val))
        }
        EffectiveDomain::Ball { center, radius } => {
            // rate is zero on the ball, infinite outside: maximize g alone.
            // Dykstra ends on the parameter-space side so objective
            // evaluations run at valid parameters.
            let project = |v: &[f64]| -> Vec<f64> {
                dykstra2(
                    v,
                    &|w| space.project(w).expect("dims match"),
                    &|w| project_l2_ball(w, &center, radius).expect("dims match"),
                )
            };
            let anchor = project(&center);
            if dist2(&anchor, &center) > radius + 1e-6 {
                return Err(Error::EmptyRateDomain(format!(
                    "ball of radius {radius} around the observation misses the parameter space"
                )));
            }
            let value = |t: &[f64]| -> Option<f64> { problem.g(x, t).ok() };
            let grad = |t: &[f64]| problem.g_grad_theta(x, t);
            let single = problem.objective == Objective::Cost;
            let starts: Vec<Vec<f64>> = if let Some(over) = start_override {
                over.iter().map(|s| project(s)).collect()
            } else if single {
                vec![anchor]
            } else {
                inner_starts(&center, space, cfg.multistart, cfg.seed)?
                    .into_iter()
                    .map(|s| project(&s))
                    .collect()
            };
            let mut best: Option<(Vec<f64>, f64)> = None;
            for s in starts {
                if let Some((t, v, _)) = ascend(
                    &value,
                    &grad,
                    &project,
                    &s,
                    cfg.max_iter.min(400),
                    cfg.inner_tol,
                    space.diameter(),
                )?
                {
                    if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                        best = Some((t, v));
                    }
                }
            }
            let (t, v) =
                best.ok_or_else(|| Error::EmptyRateDomain("no feasible start in ball".into()))?;
            Ok((t, v - shift))
        }
        EffectiveDomain::AllOfTheta | EffectiveDomain::PositiveSupportMatch => {
            if let RateFunction::RobustRelEntropy { radius, floor } = &cfg.rate {
                return robust_entropy_inner_max(x, z, problem, cfg, *radius, *floor, start_override);
            }
            let value = |t: &[f64]| -> Option<f64> {
                let i = cfg.rate.eval(t, z).ok()?;
                match i {
                    ExtReal::Finite(iv) => {
                        Some(problem.g(x, t).ok()? - pen.inverse_f(iv - cfg.r))
                    }
                    _ => None,
                }
            };
            let grad = |t: &[f64]| -> Result<Vec<f64>> {
                let iv = match cfg.rate.eval(t, z)? {
                    ExtReal::Finite(v) => v,
                    _ => {
                        return Err(Error::EmptyRateDomain(
                            "gradient requested at infinite rate value".into(),
                        ))
                    }
                };
                let mut g = problem.g_grad_theta(x, t)?;
                let w = pen.inverse_derivative(iv - cfg.r);
                let ig = cfg.rate.grad_theta(t, z)?;
                for (gi, igi) in g.iter_mut().zip(&ig) {
                    *gi -= w * igi;
                }
                Ok(g)
            };
            let project = |v: &[f64]| space.project(v).expect("dims match");
            let concave = problem.objective == Objective::Cost && cfg.rate.is_theta_convex();
            let starts = if let Some(over) = start_override {
                over.to_vec()
            } else if concave {
                vec![space.project(z)?]
            } else {
                inner_starts(z, space, cfg.multistart, cfg.seed)?
            };
            let mut best: Option<(Vec<f64>, f64)> = None;
            for s in starts {
                if let Some((t, v, _)) = ascend(
                    &value,
                    &grad,
                    &project,
                    &s,
                    cfg.max_iter.min(400),
                    cfg.inner_tol,
                    space.diameter(),
                )?
                {
                    if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                        best = Some((t, v));
                    }
                }
            }
            best.ok_or_else(|| {
                Error::EmptyRateDomain(format!(
                    "all {} starting points had infinite rate value at the observation",
                    cfg.multistart
                ))
            })
        }
    }
}

/// Inner maximization for the robust relative entropy through its ball
/// lift: since the penalty inverse is increasing, maximizing
/// `g(x, theta) - l^{-1}(min_{theta' in B_theta(R)} KL(z||theta') - r)` over
/// theta equals maximizing `g(x, theta) - l^{-1}(KL(z||theta') - r)` over
/// the pairs `(theta, theta')` with both in the space and
/// `||theta - theta'|| <= R`. For objective = cost the lifted problem is
/// jointly concave, so a single ascent finds the optimum.
fn robust_entropy_inner_max(
    x: &[f64],
    z: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
    radius: f64,
    _floor: f64,
    start_override: Option<&[Vec<f64>]>,
) -> Result<(Vec<f64>, f64)> {
    let space = &problem.param_space;
    let d = space.ambient_dim();
    let pen = &cfg.penalty;
    let value = |pair: &[f64]| -> Option<f64> {
        let (t, tp) = pair.split_at(d);
        let kl = match crate::rate::rel_entropy(tp, z).ok()? {
            ExtReal::Finite(v) => v,
            _ => return None,
        };
        Some(problem.g(x, t).ok()? - pen.inverse_f(kl - cfg.r))
    };
    let grad = |pair: &[f64]| -> Result<Vec<f64>> {
        let (t, tp) = pair.split_at(d);
        let mut g = problem.g_grad_theta(x, t)?;
        let kl = match crate::rate::rel_entropy(tp, z)? {
            ExtReal::Finite(v) => v,
            _ => return Err(Error::EmptyRateDomain("infinite KL in ball lift".into())),
        };
        let w = pen.inverse_derivative(kl - cfg.r);
        let klg = crate::rate::rel_entropy_grad_theta(tp, z)?;
        g.extend(klg.iter().map(|gi| -w * gi));
        Ok(g)
    };
    let project = |pair: &[f64]| -> Vec<f64> {
        let proj_spaces = |p: &[f64]| -> Vec<f64> {
            let mut out = space.project(&p[..d]).expect("dims match");
            out.extend(space.project(&p[d..]).expect("dims match"));
            out
        };
        let proj_coupling = |p: &[f64]| -> Vec<f64> {
            let (a, b) = p.split_at(d);
            let dist = dist2(a, b);
            if dist <= radius {
                return p.to_vec();
            }
            // shrink the difference to length R around the midpoint
            let scale = 0.5 * (1.0 - radius / dist);
            let mut out = Vec::with_capacity(2 * d);
            for i in 0..d {
                out.push(a[i] - scale * (a[i] - b[i]));
            }
            for i in 0..d {
                out.push(b[i] + scale * (a[i] - b[i]));
            }
            out
        };
        dykstra2(pair, &proj_spaces, &proj_coupling)
    };
    let anchor = space.project(z)?;
    let concave = problem.objective == Objective::Cost;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(over) = start_override {
        for s in over {
            let mut pair = if s.len() == 2 * d {
                s.clone()
            } else {
                let mut p = s.clone();
                p.extend(anchor.iter().cloned());
                p
            };
            pair.truncate(2 * d);
            starts.push(pair);
        }
    } else if concave {
        let mut s = anchor.clone();
        s.extend(anchor.iter().cloned());
        starts.push(s);
    } else {
        for s in inner_starts(z, space, cfg.multistart, cfg.seed)? {
            let mut pair = s.clone();
            pair.extend(anchor.iter().cloned());
            starts.push(pair);
        }
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        if let Some((p, v, _)) = ascend(
            &value,
            &grad,
            &project,
            &s,
            cfg.max_iter.min(400),
            cfg.inner_tol,
            2.0 * space.diameter(),
        )? {
            if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                best = Some((p, v));
            }
        }
    }
    let (pair, v) = best.ok_or_else(|| {
        Error::EmptyRateDomain("ball lift found no feasible starting pair".into())
    })?;
    Ok((pair[..d].to_vec(), v))
}

/// Dykstra alternation between two convex-set projections.
fn dykstra2(
    v: &[f64],
    proj_a: &dyn Fn(&[f64]) -> Vec<f64>,
    proj_b: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let n = v.len();
    let mut x = v.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..100 {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = proj_a(&xp);
        for i in 0..n {
            p[i] = xp[i] - y[i];
        }
        let yq: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let x_next = proj_b(&yq);
        let mut moved = 0.0;
        for i in 0..n {
            q[i] = yq[i] - x_next[i];
            moved += (x_next[i] - x[i]).abs();
        }
        x = x_next;
        if moved < 1e-15 {
            break;
        }
    }
    // land in set A last so rate evaluations stay feasible
    proj_a(&x)
}

/// Golden-section minimization of a unimodal scalar function on `[lo, hi]`.
fn golden_section(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<(f64, f64, usize)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut evals = 2;
    while b - a > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
        evals += 1;
    }
    let (x, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok((x, v, evals))
}

/// The optimal decision and upper confidence bound at one observation:
/// `x* = argmin_x G(x, z)`, `u* = G(x*, z)`.
///
/// Scalar decision spaces use golden-section search (`G` is strictly convex
/// in the decision); vector spaces use projected subgradient descent with
/// Danskin subgradients, diminishing steps and best-iterate tracking.
/// Degenerate singleton domains collapse algebraically to the plug-in rule.
pub fn optimal_decision(
    z: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
) -> Result<DecisionOutput> {
    match &problem.decision_space {
        DecisionSpace::Interval { lo, hi } => {
            let mut evals = 0usize;
            let mut f = |xv: f64| -> Result<f64> {
                evals += 1;
                Ok(worst_case_param(&[xv], z, problem, cfg)?.1)
            };
            let xtol = cfg.outer_tol.max(1e-10);
            let (x, _, iters) = golden_section(&mut f, *lo, *hi, xtol)?;
            let (theta, u) = worst_case_param(&[x], z, problem, cfg)?;
            Ok(DecisionOutput {
                x_star: vec![x],
                u_star: u,
                theta_star: theta,
                diagnostics: Diagnostics {
                    iterations: iters,
                    restarts: 0,
                    final_grad_norm: 0.0,
                },
            })
        }
        space => {
            let diam = space.diameter();
            let step_a = 0.1 * diam;
            let step_b = 10.0;
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0xdec1_5105);
            let mut starts: Vec<Vec<f64>> = vec![space.center()];
            if let DecisionSpace::Simplex { dim } = space {
                for i in 0..*dim {
                    let mut v = vec![0.0; *dim];
                    v[i] = 1.0;
                    starts.push(v);
                }
            }
            while starts.len() < cfg.decision_multistart.max(1) {
                starts.push(space.sample(&mut rng));
            }
            starts.truncate(cfg.decision_multistart.max(1));

            // warm-started inner solves track the active worst-case branch
            // between outer iterates; the exploration anchor and a rotating
            // seeded start guard against branch switches, and the returned
            // bound is re-certified with a full multistart solve at the end
            let anchor = problem.param_space.project(z)?;
            let explore: Vec<Vec<f64>> =
                inner_starts(z, &problem.param_space, 8, cfg.seed ^ 0xa5)?;
            let warm_list = |warm: &[f64], k: usize| -> Vec<Vec<f64>> {
                vec![
                    warm.to_vec(),
                    anchor.clone(),
                    explore[k % explore.len()].clone(),
                ]
            };

            let mut best: Option<DecisionOutput> = None;
            let mut total_iters = 0usize;
            for start in &starts {
                let mut x = space.project(start);
                let (mut theta, mut val) = worst_case_param(&x, z, problem, cfg)?;
                let (mut bx, mut btheta, mut bval) = (x.clone(), theta.clone(), val);
                let mut gnorm = 0.0;
                let mut stall = 0usize;
                for k in 0..cfg.max_iter.min(300) {
                    total_iters += 1;
                    let g = problem.cost_grad_x(&x, &theta)?;
                    gnorm = norm2(&g);
                    if gnorm < 1e-15 {
                        break;
                    }
                    let step = step_a / (k as f64 + step_b);
                    let next: Vec<f64> = x
                        .iter()
                        .zip(&g)
                        .map(|(xi, gi)| xi - step * gi / gnorm.max(1e-15))
                        .collect();
                    x = space.project(&next);
                    let (t, v) =
                        worst_case_param_impl(&x, z, problem, cfg, Some(&warm_list(&theta, k)))?;
                    theta = t;
                    val = v;
                    if val < bval - 1e-13 * (1.0 + bval.abs()) {
                        bval = val;
                        bx = x.clone();
                        btheta = theta.clone();
                        stall = 0;
                    } else {
                        stall += 1;
                        if stall > 60 {
                            break;
                        }
                    }
                }
                // polish: monotone backtracking descent sharpens the
                // best iterate to the outer tolerance where the upper bound
                // is smooth (unique inner maximizer)
                let mut step = 0.05 * diam;
                for k in 0..cfg.max_iter.min(400) {
                    total_iters += 1;
                    let g = problem.cost_grad_x(&bx, &btheta)?;
                    gnorm = norm2(&g);
                    if gnorm < 1e-15 {
                        break;
                    }
                    let mut improved = false;
                    let mut moved = 0.0;
                    for _ in 0..60 {
                        let trial: Vec<f64> = bx
                            .iter()
                            .zip(&g)
                            .map(|(xi, gi)| xi - step * gi)
                            .collect();
                        let trial = space.project(&trial);
                        let (t, v) = worst_case_param_impl(
                            &trial,
                            z,
                            problem,
                            cfg,
                            Some(&warm_list(&btheta, k)),
                        )?;
                        if v < bval - 1e-15 * (1.0 + bval.abs()) {
                            moved = dist2(&trial, &bx);
                            bx = trial;
                            btheta = t;
                            bval = v;
                            improved = true;
                            step = (step * 1.5).min(diam);
                            break;
                        }
                        step *= 0.5;
                        if step < 1e-16 {
                            break;
                        }
                    }
                    if !improved || moved < cfg.outer_tol.min(1e-9) {
                        break;
                    }
                }
                // certify the bound at the returned decision with a fresh
                // full multistart solve
                let (theta_f, val_f) = worst_case_param(&bx, z, problem, cfg)?;
                if val_f > bval {
                    btheta = theta_f;
                    bval = val_f;
                }
                if best.as_ref().map_or(true, |b| bval < b.u_star) {
                    best = Some(DecisionOutput {
                        x_star: bx,
                        u_star: bval,
                        theta_star: btheta,
                        diagnostics: Diagnostics {
                            iterations: total_iters,
                            restarts: starts.len(),
                            final_grad_norm: gnorm,
                        },
                    });
                }
            }
            best.ok_or_else(|| Error::EmptyRateDomain("no decision start succeeded".into()))
        }
    }
}

/// Plug-in decision: the cost minimizer with the observation substituted
/// for the unknown parameter.
pub fn plugin_decision(z: &[f64], problem: &DecisionProblem) -> Result<Vec<f64>> {
    Ok(problem.min_cost(z)?.0)
}

/// Ambiguity set of the DRO baseline.
#[derive(Debug, Clone)]
pub enum Ambiguity {
    /// L2 ball around the observation, intersected with the parameter space.
    Ball { radius: f64 },
    /// Closed rate level set `{theta : I_theta(z) <= r}` (closure of the
    /// strict set; maxima over open sets need not be attained).
    RateLevelSet { rate: RateFunction, level: f64 },
}

/// Maximizes the linear function `<c, theta>` over the intersection of the
/// parameter space with the closed ball `B_z(R)`, exactly, by bisecting the
/// dual multiplier of the ball constraint: for each `nu > 0` the penalized
/// maximizer is `proj_space(z + c / (2 nu))` and its distance to `z` is
/// monotone in `nu`.
fn max_linear_over_ball(
    c: &[f64],
    z: &[f64],
    radius: f64,
    space: &ParamSpace,
) -> Result<Vec<f64>> {
    // unconstrained-by-the-ball candidate: nu -> 0 pushes the penalized
    // point to the support point of the space alone
    let far: Vec<f64> = z.iter().zip(c).map(|(zi, ci)| zi + 1e8 * ci).collect();
    let unconstrained = space.project(&far)?;
    if dist2(&unconstrained, z) <= radius {
        return Ok(unconstrained);
    }
    let point_at = |nu: f64| -> Result<Vec<f64>> {
        let probe: Vec<f64> = z.iter().zip(c).map(|(zi, ci)| zi + ci / (2.0 * nu)).collect();
        space.project(&probe)
    };
    // bracket: distance decreasing in nu
    let (mut lo, mut hi) = (1e-9f64, 1e9f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if dist2(&point_at(mid)?, z) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-14 {
            break;
        }
    }
    point_at(hi)
}

/// Distributionally robust baseline: minimizes the worst-case cost over the
/// ambiguity set.
///
/// The ball variant exploits linearity of every cost family in theta: the
/// inner maximum is the support point of the set in the cost direction,
/// found exactly by dual bisection (a route independent of the
/// gradient-ascent path used by `worst_case_param`). The level-set variant
/// ascends the cost and pulls iterates back to the boundary along the
/// segment to the observation whenever the rate constraint is violated.
pub fn dro_decision(
    z: &[f64],
    problem: &DecisionProblem,
    ambiguity: &Ambiguity,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let space = &problem.param_space;
    match ambiguity {
        Ambiguity::Ball { radius } => {
            let anchor = space.project(z)?;
            if dist2(&anchor, z) > radius + 1e-9 {
                return Err(Error::EmptyAmbiguitySet(format!(
                    "ball of radius {radius} around the observation misses the parameter space"
                )));
            }
            if *radius == 0.0 {
                return plugin_decision(z, problem);
            }
            let worst_cost = |x: &[f64]| -> Result<f64> {
                let dir = problem.cost_grad_theta(x, &anchor)?;
                let support = max_linear_over_ball(&dir, z, *radius, space)?;
                problem.cost(x, &support)
            };
            minimize_over_decisions(problem, cfg, &mut |x| worst_cost(x))
        }
        Ambiguity::RateLevelSet { rate, level } => {
            let anchor = feasible_level_point(z, space, rate, *level)?;
            let worst_cost = |x: &[f64]| -> Result<f64> {
                level_set_max_cost(x, z, problem, cfg, rate, *level, &anchor)
            };
            minimize_over_decisions(problem, cfg, &mut |x| worst_cost(x))
        }
    }
}

fn feasible_level_point(
    z: &[f64],
    space: &ParamSpace,
    rate: &RateFunction,
    level: f64,
) -> Result<Vec<f64>> {
    let anchor = space.project(z)?;
    if let ExtReal::Finite(v) = rate.eval(&anchor, z)? {
        if v <= level {
            return Ok(anchor);
        }
    }
    // descend the rate value itself to look for any feasible point
    let value = |t: &[f64]| -> Option<f64> {
        match rate.eval(t, z) {
            Ok(ExtReal::Finite(v)) => Some(-v),
            _ => None,
        }
    };
    let grad = |t: &[f64]| -> Result<Vec<f64>> {
        Ok(rate.grad_theta(t, z)?.iter().map(|g| -g).collect())
    };
    let project = |v: &[f64]| space.project(v).expect("dims match");
    if let Some((t, v, _)) = ascend(&value, &grad, &project, &anchor, 2000, 1e-10, space.diameter())?
    {
        if -v <= level {
            return Ok(t);
        }
    }
    Err(Error::EmptyAmbiguitySet(format!(
        "rate level set at level {level} is empty: no parameter satisfies the \
         domain assumption at this observation"
    )))
}

/// Maximizes the cost over the closed level set `{I_theta(z) <= level}` by
/// projected ascent with a bisection pullback toward a feasible anchor.
fn level_set_max_cost(
    x: &[f64],
    z: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
    rate: &RateFunction,
    level: f64,
    anchor: &[f64],
) -> Result<f64> {
    let space = &problem.param_space;
    let feasible = |t: &[f64]| -> bool {
        matches!(rate.eval(t, z), Ok(ExtReal::Finite(v)) if v <= level + 1e-12)
    };
    let pull_back = |from: &[f64], to: &[f64]| -> Vec<f64> {
        // from is feasible, to is not: bisect the crossing
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let pt: Vec<f64> = from
                .iter()
                .zip(to)
                .map(|(a, b)| a + mid * (b - a))
                .collect();
            if feasible(&pt) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        from.iter().zip(to).map(|(a, b)| a + lo * (b - a)).collect()
    };
    let starts = inner_starts(z, space, cfg.multistart.min(8), cfg.seed)?;
    let mut best = f64::NEG_INFINITY;
    for s in starts {
        let mut cur = if feasible(&s) { s } else { anchor.to_vec() };
        let mut val = problem.cost(x, &cur)?;
        let mut step = 0.1 * space.diameter();
        for _ in 0..cfg.max_iter.min(500) {
            let g = problem.cost_grad_theta(x, &cur)?;
            if norm2(&g) < 1e-15 {
                break;
            }
            let trial: Vec<f64> = cur.iter().zip(&g).map(|(c, gi)| c + step * gi).collect();
            let mut proj = space.project(&trial)?;
            if !feasible(&proj) {
                proj = pull_back(&cur, &proj);
            }
            let v = problem.cost(x, &proj)?;
            if v > val + 1e-15 * (1.0 + val.abs()) {
                let moved = dist2(&proj, &cur);
                cur = proj;
                val = v;
                step = (step * 1.5).min(space.diameter());
                if moved < cfg.inner_tol {
                    break;
                }
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Shared outer minimization over the decision space for baselines with a
/// custom worst-case evaluator.
fn minimize_over_decisions(
    problem: &DecisionProblem,
    cfg: &SolverConfig,
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    match &problem.decision_space {
        DecisionSpace::Interval { lo, hi } => {
            let mut f = |xv: f64| objective(&[xv]);
            let (x, _, _) = golden_section(&mut f, *lo, *hi, cfg.outer_tol.max(1e-10))?;
            Ok(vec![x])
        }
        space => {
            // derivative-free coordinate-pattern descent on the constraint
            // set; adequate for the small decision dimensions used here
            let mut x = space.center();
            let mut val = objective(&x)?;
            let mut step = 0.25 * space.diameter();
            let d = x.len();
            while step > cfg.outer_tol.max(1e-9) {
                let mut improved = false;
                for i in 0..d {
                    for s in [step, -step] {
                        let mut trial = x.clone();
                        trial[i] += s;
                        let trial = space.project(&trial);
                        let v = objective(&trial)?;
                        if v < val - 1e-14 * (1.0 + val.abs()) {
                            x = trial;
                            val = v;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            Ok(x)
        }
    }
}

/// Which feasibility certificate to evaluate on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginVariant {
    /// `l(g(X(z), theta) - u(z)) - (I_theta(z) - r)` over grid pairs.
    Pairwise,
    /// `l(min_x g(x, theta) - u(z)) - (I_theta(z) - r)` over grid pairs.
    MinMin,
}

/// Largest constraint violation over the grid; nonpositive certifies grid
/// feasibility. Pairs with infinite rate value are vacuous and skipped.
pub fn feasibility_margin(
    decisions: &[Vec<f64>],
    bounds: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
    z_grid: &[Vec<f64>],
    theta_grid: &[Vec<f64>],
    variant: MarginVariant,
) -> Result<f64> {
    if decisions.len() != z_grid.len() || bounds.len() != z_grid.len() {
        return Err(Error::DimensionMismatch {
            expected: z_grid.len(),
            got: decisions.len().min(bounds.len()),
        });
    }
    let mut margin = f64::NEG_INFINITY;
    for (zi, (x, u)) in z_grid.iter().zip(decisions.iter().zip(bounds)) {
        for theta in theta_grid {
            let rate_val = match cfg.rate.eval(theta, zi)? {
                ExtReal::Finite(v) => v,
                _ => continue,
            };
            let gval = match variant {
                MarginVariant::Pairwise => problem.g(x, theta)?,
                MarginVariant::MinMin => match problem.objective {
                    Objective::Cost => problem.min_cost(theta)?.1,
                    Objective::Regret => 0.0,
                },
            };
            let lhs = cfg.penalty.forward(gval - u);
            margin = margin.max(lhs - (rate_val - cfg.r));
        }
    }
    Ok(margin)
}

/// Consistency gap at a parameter: the cost regret of the optimal decision
/// evaluated at the limit of the data process (the identity map here: both
/// empirical measures and empirical means converge to the parameter).
pub fn consistency_gap(
    theta: &[f64],
    problem: &DecisionProblem,
    cfg: &SolverConfig,
) -> Result<f64> {
    let out = optimal_decision(theta, problem, cfg)?;
    let c = problem.cost(&out.x_star, theta)?;
    let (_, m) = problem.min_cost(theta)?;
    Ok((c - m).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::sample_flat_simplex;
    use rand::Rng as _;

    fn toy_newsvendor(objective: Objective) -> DecisionProblem {
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

    fn cfg(rate: RateFunction, r: f64, beta: f64) -> SolverConfig {
        SolverConfig::new(r, Penalty::symmetric(beta).unwrap(), rate)
            .unwrap()
            .with_seed(7)
    }

    #[test]
    fn lln_collapses_to_plugin_value() {
        let p = toy_newsvendor(Objective::Regret);
        let c = cfg(RateFunction::Lln, 0.3, 1.0);
        let z = vec![0.2, 0.5, 0.3];
        let out = optimal_decision(&z, &p, &c).unwrap();
        let plug = plugin_decision(&z, &p).unwrap();
        assert!((out.x_star[0] - plug[0]).abs() < 1e-7);
        assert_eq!(out.theta_star, z);
        // u* = regret(x*, z) - linv(-r) = -linv(-r) at the plug-in point
        let expect = -c.penalty.inverse_f(-0.3);
        assert!((out.u_star - expect).abs() < 1e-9);
    }

    #[test]
    fn singleton_param_space_is_only_candidate() {
        let mut p = toy_newsvendor(Objective::Cost);
        let pt = vec![0.3, 0.3, 0.4];
        p.param_space = ParamSpace::Singleton(pt.clone());
        let c = cfg(RateFunction::RelEntropy, 0.1, 1.0);
        let z = vec![0.25, 0.3, 0.45];
        let (theta, _) = worst_case_param(&[1.0], &z, &p, &c).unwrap();
        assert_eq!(theta, pt);
    }

    #[test]
    fn worst_case_matches_simplex_grid_oracle() {
        // exhaustive maximum over a fine simplex grid of the same objective
        let p = toy_newsvendor(Objective::Cost);
        let c = cfg(RateFunction::RelEntropy, 0.1, 0.5);
        let z = vec![0.5, 0.25, 0.25];
        for xv in [0.7, 1.5, 2.4] {
            let (_, got) = worst_case_param(&[xv], &z, &p, &c).unwrap();
            let mut oracle = f64::NEG_INFINITY;
            let m = 100;
            for i in 1..m {
                for j in 1..(m - i) {
                    let t = [
                        i as f64 / m as f64,
                        j as f64 / m as f64,
                        1.0 - (i + j) as f64 / m as f64,
                    ];
                    if t[2] < 0.01 {
                        continue;
                    }
                    let iv = crate::rate::rel_entropy(&t, &z).unwrap().finite();
                    let v = p.cost(&[xv], &t).unwrap() - c.penalty.inverse_f(iv - c.r);
                    oracle = oracle.max(v);
                }
            }
            assert!(
                got >= oracle - 1e-6 && got <= oracle + 1e-3,
                "x={xv}: solver {got} vs grid oracle {oracle}"
            );
        }
    }

    #[test]
    fn optimal_decision_feasibility_margin_nonpositive() {
        let p = toy_newsvendor(Objective::Regret);
        let c = cfg(RateFunction::RelEntropy, 0.1, 0.5);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let z_grid: Vec<Vec<f64>> = (0..8).map(|_| sample_flat_simplex(3, &mut rng)).collect();
        let theta_grid: Vec<Vec<f64>> = (0..8)
            .map(|_| p.param_space.sample(&mut rng).unwrap())
            .collect();
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for z in &z_grid {
            let out = optimal_decision(z, &p, &c).unwrap();
            xs.push(out.x_star);
            us.push(out.u_star);
        }
        let m = feasibility_margin(
            &xs,
            &us,
            &p,
            &c,
            &z_grid,
            &theta_grid,
            MarginVariant::Pairwise,
        )
        .unwrap();
        assert!(m <= 1e-6, "pairwise margin {m} > 1e-6");

        // tightness: shrinking u must violate the constraint somewhere
        let us_tight: Vec<f64> = us.iter().map(|u| u - 0.05).collect();
        let m_tight = feasibility_margin(
            &xs,
            &us_tight,
            &p,
            &c,
            &z_grid,
            &theta_grid,
            MarginVariant::Pairwise,
        )
        .unwrap();
        assert!(m_tight > 0.0, "tightened margin {m_tight} stayed feasible");

        // slack only grows when u is enlarged
        let us_loose: Vec<f64> = us.iter().map(|u| u + 1.0).collect();
        let m_loose = feasibility_margin(
            &xs,
            &us_loose,
            &p,
            &c,
            &z_grid,
            &theta_grid,
            MarginVariant::Pairwise,
        )
        .unwrap();
        assert!(m_loose < m - 0.1);
    }

    #[test]
    fn dominance_against_constant_decisions() {
        let p = toy_newsvendor(Objective::Regret);
        let c = cfg(RateFunction::RelEntropy, 0.1, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10 {
            let z = sample_flat_simplex(3, &mut rng);
            let out = optimal_decision(&z, &p, &c).unwrap();
            for _ in 0..5 {
                let x0 = rng.gen_range(0.0..3.0);
                let (_, g0) = worst_case_param(&[x0], &z, &p, &c).unwrap();
                assert!(out.u_star <= g0 + 1e-6);
            }
        }
    }

    #[test]
    fn gap_upper_bound_inequality() {
        let p = toy_newsvendor(Objective::Regret);
        let c = cfg(RateFunction::RelEntropy, 0.1, 0.5);
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..6 {
            let theta = p.param_space.sample(&mut rng).unwrap();
            let gap = consistency_gap(&theta, &p, &c).unwrap();
            let out = optimal_decision(&theta, &p, &c).unwrap();
            assert!(gap <= out.u_star + c.penalty.inverse_f(-c.r) + 1e-6);
            assert!(gap >= 0.0);
        }
    }

    #[test]
    fn lln_consistency_gap_is_zero() {
        let p = toy_newsvendor(Objective::Regret);
        let c = cfg(RateFunction::Lln, 0.2, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..10 {
            let theta = p.param_space.sample(&mut rng).unwrap();
            assert!(consistency_gap(&theta, &p, &c).unwrap() < 1e-8);
        }
    }

    #[test]
    fn dro_ball_radius_zero_is_plugin() {
        let p = toy_newsvendor(Objective::Cost);
        let c = cfg(RateFunction::RllnBall { radius: 0.0 }, 0.1, 1.0);
        let z = vec![0.4, 0.3, 0.3];
        let x = dro_decision(&z, &p, &Ambiguity::Ball { radius: 0.0 }, &c).unwrap();
        let plug = plugin_decision(&z, &p).unwrap();
        assert!((x[0] - plug[0]).abs() < 1e-12);
    }

    #[test]
    fn dro_level_set_saturates_to_global_robust() {
        // r -> infinity: ambiguity saturates to the whole parameter space
        let p = toy_newsvendor(Objective::Cost);
        let c = cfg(RateFunction::RelEntropy, 0.1, 1.0);
        let z = vec![0.4, 0.3, 0.3];
        let x_level = dro_decision(
            &z,
            &p,
            &Ambiguity::RateLevelSet {
                rate: RateFunction::RelEntropy,
                level: 1e9,
            },
            &c,
        )
        .unwrap();
        // global robust decision: min_x max_{theta in Theta} cost via grid
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=3000 {
            let xv = k as f64 * 1e-3;
            let mut worst = f64::NEG_INFINITY;
            let m = 60;
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let t = [
                        (i as f64 / m as f64).max(0.01),
                        (j as f64 / m as f64).max(0.01),
                        0.0,
                    ];
                    let t = [t[0], t[1], (1.0 - t[0] - t[1]).max(0.01)];
                    let s: f64 = t.iter().sum();
                    let t = [t[0] / s, t[1] / s, t[2] / s];
                    worst = worst.max(p.cost(&[xv], &t).unwrap());
                }
            }
            if worst < best.0 {
                best = (worst, xv);
            }
        }
        assert!(
            (x_level[0] - best.1).abs() < 1e-2,
            "level-set {} vs grid robust {}",
            x_level[0],
            best.1
        );
    }

    #[test]
    fn dro_level_set_empty_reports_assumption() {
        let p = toy_newsvendor(Objective::Cost);
        let c = cfg(RateFunction::RelEntropy, 0.1, 1.0);
        let z = vec![0.4, 0.3, 0.3];
        let err = dro_decision(
            &z,
            &p,
            &Ambiguity::RateLevelSet {
                rate: RateFunction::RelEntropy,
                level: -1.0,
            },
            &c,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyAmbiguitySet(_)));
    }

    #[test]
    fn deterministic_repeat() {
        let p = toy_newsvendor(Objective::Regret);
        let c = cfg(RateFunction::RelEntropy, 0.1, 0.5);
        let z = vec![0.3, 0.45, 0.25];
        let a = optimal_decision(&z, &p, &c).unwrap();
        let b = optimal_decision(&z, &p, &c).unwrap();
        assert_eq!(a.x_star, b.x_star);
        assert_eq!(a.u_star, b.u_star);
        assert_eq!(a.theta_star, b.theta_star);
    }
}
