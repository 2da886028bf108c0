//! Experiment runners behind the CLI: consistency-gap sweeps, regret
//! curves, finite-horizon verification reports and one-shot decisions.

use super::config::{ExperimentConfig, LaplaceProbe, ProblemKind, RateKind};
use super::table::{Cell, ResultTable};
use crate::error::{Error, Result};
use crate::problems::{DecisionProblem, Objective};
use crate::sim::{
    gen_gaussian_iid, gen_iid_categorical, gen_markov_chain, gen_mixture_sources,
    pair_empirical_measure,
};
use crate::solver::{consistency_gap, optimal_decision, plugin_decision, SolverConfig};
use crate::spaces::{ParamSpace, ProbMatrix, ProbVector};
use crate::verify::{laplace_convergence, sanov_sandwich_check, ProbeReport};
use rayon::prelude::*;
use std::path::Path;

fn attach_metadata(table: &mut ResultTable, cfg: &ExperimentConfig) {
    table.add_metadata("kind", format!("{:?}", cfg.experiment.kind));
    table.add_metadata("seed", cfg.experiment.seed.to_string());
    table.add_metadata("config_hash", cfg.config_hash());
    table.add_metadata("artifact_version", env!("CARGO_PKG_VERSION"));
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    table.add_metadata("generated_at", ts.to_string());
}

/// Parameters sampled for the averaged consistency gap live on the same
/// geometry as the parameter space but with the sampling floor.
fn sampling_space(problem: &DecisionProblem, floor: f64) -> Result<ParamSpace> {
    Ok(match &problem.param_space {
        ParamSpace::SimplexWithFloor { dim, .. } => ParamSpace::simplex_with_floor(*dim, floor)?,
        ParamSpace::StationaryPairMatrices { dim, .. } => {
            ParamSpace::stationary_pairs(*dim, floor.max(1e-3))?
        }
        other => other.clone(),
    })
}

/// Consistency gap of the optimal decision at the limit of the data
/// process, swept over `(beta, r, objective)`; optionally averaged over
/// parameters sampled from the floored simplex.
pub fn run_gap_curve(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let sim = cfg.sim_section()?.clone();
    let solver_grid = cfg.build_solver_grid()?;
    let problem_section = cfg
        .problem
        .as_ref()
        .ok_or_else(|| Error::Config("missing [problem] section".into()))?;

    let mut items: Vec<(SolverConfig, Objective)> = Vec::new();
    for obj in &problem_section.objectives {
        for sc in &solver_grid {
            items.push((sc.clone(), (*obj).into()));
        }
    }

    // the averaged-gap parameter set is shared across the sweep
    let mut avg_thetas: Vec<Vec<f64>> = Vec::new();
    {
        let mut probe_problem = cfg.build_problem(Objective::Regret)?;
        cfg.apply_rate_param_space(&mut probe_problem)?;
        if sim.avg_thetas > 0 {
            let space = sampling_space(&probe_problem, sim.sample_floor)?;
            let mut rng = crate::sim::path_rng(
                cfg.experiment.seed,
                crate::sim::GeneratorId::IidCategorical,
                u64::MAX,
            );
            for _ in 0..sim.avg_thetas {
                avg_thetas.push(space.sample(&mut rng)?);
            }
        }
    }

    let rows: Vec<Vec<Cell>> = items
        .par_iter()
        .map(|(sc, obj)| {
            let run = || -> Result<(f64, f64)> {
                let mut problem = cfg.build_problem(*obj)?;
                cfg.apply_rate_param_space(&mut problem)?;
                let gap_true = consistency_gap(&sim.theta, &problem, sc)?;
                let gap_avg = if avg_thetas.is_empty() {
                    f64::NAN
                } else {
                    let mut acc = 0.0;
                    for t in &avg_thetas {
                        acc += consistency_gap(t, &problem, sc)?;
                    }
                    acc / avg_thetas.len() as f64
                };
                Ok((gap_true, gap_avg))
            };
            let (gap_true, gap_avg, err) = match run() {
                Ok((g, a)) => (g, a, String::new()),
                Err(e) => (f64::NAN, f64::NAN, e.to_string()),
            };
            vec![
                Cell::Num(sc.penalty.beta()),
                Cell::Num(sc.r),
                Cell::Text(obj.to_string()),
                Cell::Num(gap_true),
                Cell::Num(gap_avg),
                Cell::Text(err),
            ]
        })
        .collect();

    let mut table = ResultTable::new(&["beta", "r", "g", "gap_true", "gap_avg", "error"]);
    attach_metadata(&mut table, cfg);
    for row in rows {
        table.push_row(row);
    }
    table.sort_canonical();
    Ok(table)
}

/// Observations per `(path, n-grid point)` for the configured data process.
fn generate_observations(
    cfg: &ExperimentConfig,
    problem: &DecisionProblem,
    n_grid: &[usize],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let sim = cfg.sim_section()?;
    let n_max = *n_grid.iter().max().unwrap();
    let k = sim.paths;
    let seed = cfg.experiment.seed;
    let rate_kind = cfg.rate.as_ref().map(|r| r.kind);
    let kind = cfg.problem.as_ref().map(|p| p.kind);

    if kind == Some(ProblemKind::Portfolio) {
        let sigma_rows = cfg.problem.as_ref().unwrap().sigma.as_ref().unwrap();
        let sigma = crate::linalg::SpdMatrix::from_rows(sigma_rows)?;
        let batch = gen_gaussian_iid(&sim.theta, &sigma, n_max, k, seed)?;
        return Ok(batch
            .paths
            .iter()
            .map(|p| n_grid.iter().map(|n| p[n - 1].clone()).collect())
            .collect());
    }

    if rate_kind == Some(RateKind::CondRelEntropy) {
        let dim = cfg.rate.as_ref().unwrap().markov_dim.unwrap();
        let theta = ProbMatrix::stationary_pair(dim, sim.theta.clone())?;
        let batch = gen_markov_chain(&theta, n_max, k, seed)?;
        return batch
            .paths
            .iter()
            .map(|p| {
                n_grid
                    .iter()
                    .map(|n| Ok(pair_empirical_measure(&p[..*n], dim)?.entries().to_vec()))
                    .collect()
            })
            .collect();
    }

    let d = problem.theta_dim();
    let batch = if sim.theta1.is_empty() {
        gen_iid_categorical(&ProbVector::new(sim.theta.clone())?, n_max, k, seed)
    } else {
        let t1 = ProbVector::new(sim.theta1.clone())?;
        let t2 = ProbVector::new(sim.theta2.clone())?;
        let p1 = sim.p1.unwrap_or(0.5);
        gen_mixture_sources(&t1, &t2, p1, n_max, k, seed)?.0
    };
    batch
        .paths
        .iter()
        .map(|p| {
            let mut counts = vec![0u64; d];
            let mut out = Vec::with_capacity(n_grid.len());
            let mut grid_iter = n_grid.iter().peekable();
            for (step, s) in p.iter().enumerate() {
                counts[*s as usize - 1] += 1;
                if grid_iter.peek() == Some(&&(step + 1)) {
                    grid_iter.next();
                    let n = (step + 1) as f64;
                    out.push(counts.iter().map(|c| *c as f64 / n).collect());
                }
            }
            Ok(out)
        })
        .collect()
}

/// Average regret of the optimal and plug-in decisions across seeded sample
/// paths, per sample size.
pub fn run_regret_curve(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let sim = cfg.sim_section()?.clone();
    let n_grid = cfg.n_grid()?;
    let solver_grid = cfg.build_solver_grid()?;
    let problem_section = cfg
        .problem
        .as_ref()
        .ok_or_else(|| Error::Config("missing [problem] section".into()))?;
    let base_problem = {
        let mut p = cfg.build_problem(Objective::Regret)?;
        cfg.apply_rate_param_space(&mut p)?;
        p
    };
    let observations = generate_observations(cfg, &base_problem, &n_grid)?;
    let theta_true = sim.theta.clone();

    // work items: plug-in once per n, optimal per (objective, beta, r, n)
    enum Method {
        Plugin,
        Optimal(Objective, SolverConfig),
    }
    let mut items: Vec<(Method, usize)> = Vec::new();
    for (gi, _) in n_grid.iter().enumerate() {
        items.push((Method::Plugin, gi));
        for obj in &problem_section.objectives {
            for sc in &solver_grid {
                items.push((Method::Optimal((*obj).into(), sc.clone()), gi));
            }
        }
    }

    let rows: Vec<Vec<Cell>> = items
        .par_iter()
        .map(|(method, gi)| {
            let n = n_grid[*gi];
            let run = || -> Result<(String, f64, f64, f64, f64)> {
                match method {
                    Method::Plugin => {
                        let problem = base_problem.clone();
                        let regrets: Result<Vec<f64>> = observations
                            .par_iter()
                            .map(|obs| {
                                let x = plugin_decision(&obs[*gi], &problem)?;
                                problem.regret(&x, &theta_true)
                            })
                            .collect();
                        let (avg, se) = mean_stderr(&regrets?);
                        Ok(("plugin".into(), 0.0, 0.0, avg, se))
                    }
                    Method::Optimal(obj, sc) => {
                        let mut problem = cfg.build_problem(*obj)?;
                        cfg.apply_rate_param_space(&mut problem)?;
                        let regrets: Result<Vec<f64>> = observations
                            .par_iter()
                            .map(|obs| {
                                let out = optimal_decision(&obs[*gi], &problem, sc)?;
                                problem.regret(&out.x_star, &theta_true)
                            })
                            .collect();
                        let (avg, se) = mean_stderr(&regrets?);
                        Ok((
                            format!("optimal_{obj}"),
                            sc.penalty.beta(),
                            sc.r,
                            avg,
                            se,
                        ))
                    }
                }
            };
            match run() {
                Ok((m, beta, r, avg, se)) => vec![
                    Cell::Text(m),
                    Cell::Num(beta),
                    Cell::Num(r),
                    Cell::Int(n as i64),
                    Cell::Num(avg),
                    Cell::Num(se),
                    Cell::Text(String::new()),
                ],
                Err(e) => vec![
                    Cell::Text(match method {
                        Method::Plugin => "plugin".into(),
                        Method::Optimal(obj, _) => format!("optimal_{obj}"),
                    }),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Int(n as i64),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Text(e.to_string()),
                ],
            }
        })
        .collect();

    let mut table = ResultTable::new(&[
        "method",
        "beta",
        "r",
        "n",
        "avg_regret",
        "stderr",
        "error",
    ]);
    attach_metadata(&mut table, cfg);
    for row in rows {
        table.push_row(row);
    }
    table.sort_canonical();
    Ok(table)
}

fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Finite-horizon Sanov sandwich reports over the configured `(n, radius)`
/// matrix.
pub fn run_sanov_check(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let sim = cfg.sim_section()?;
    let verify = cfg.verify_section()?;
    let theta = ProbVector::new(sim.theta.clone())?;
    let thr = verify.event_threshold;
    let event = move |z: &[f64]| z[0] >= thr;

    let mut table = ResultTable::new(&[
        "d",
        "n",
        "radius",
        "log_sup_prob",
        "min_rate",
        "min_rate_grid",
        "log_bound",
        "upper_ok",
        "lower_ok",
        "degenerate",
    ]);
    attach_metadata(&mut table, cfg);
    for &n in &verify.n_list {
        for &radius in &verify.radii {
            let rep = sanov_sandwich_check(
                &theta,
                n,
                &event,
                radius,
                verify.ball_grid,
                verify.lattice_cap as u128,
            )?;
            table.push_row(vec![
                Cell::Int(rep.d as i64),
                Cell::Int(rep.n as i64),
                Cell::Num(rep.radius),
                Cell::Num(rep.log_sup_prob),
                Cell::Num(rep.min_rate),
                Cell::Num(rep.min_rate_grid),
                Cell::Num(rep.log_bound),
                Cell::Int(rep.upper_ok as i64),
                Cell::Int(rep.lower_ok as i64),
                Cell::Int(rep.degenerate as i64),
            ]);
        }
    }
    table.sort_canonical();
    Ok(table)
}

/// Entropic-risk convergence table for the configured probe function.
pub fn run_laplace_check(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let sim = cfg.sim_section()?;
    let verify = cfg.verify_section()?;
    let theta = ProbVector::new(sim.theta.clone())?;
    let d = theta.dim();
    let probe: Box<dyn Fn(&[f64]) -> f64 + Sync> = match verify.probe {
        LaplaceProbe::Linear => {
            let coeffs = if verify.linear_coeffs.is_empty() {
                (0..d).map(|i| 0.5 - i as f64 * 0.75).collect()
            } else {
                verify.linear_coeffs.clone()
            };
            if coeffs.len() != d {
                return Err(Error::Config(format!(
                    "linear_coeffs needs {d} entries, got {}",
                    coeffs.len()
                )));
            }
            Box::new(move |z: &[f64]| z.iter().zip(&coeffs).map(|(a, b)| a * b).sum())
        }
        LaplaceProbe::NegSqDist => {
            let center = sim.theta.clone();
            Box::new(move |z: &[f64]| {
                -z.iter()
                    .zip(&center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
        }
    };
    let rows = laplace_convergence(
        &theta,
        probe.as_ref(),
        &verify.n_list,
        verify.grid_m,
        verify.lattice_cap as u128,
    )?;
    let mut table = ResultTable::new(&["n", "lhs", "rhs", "abs_diff"]);
    attach_metadata(&mut table, cfg);
    for row in rows {
        table.push_row(vec![
            Cell::Int(row.n as i64),
            Cell::Num(row.lhs),
            Cell::Num(row.rhs),
            Cell::Num(row.abs_diff),
        ]);
    }
    table.sort_canonical();
    Ok(table)
}

/// Regularity probes for the configured rate function, as a pass/fail table
/// with failure witnesses.
pub fn run_assumption_probe(cfg: &ExperimentConfig, samples: usize) -> Result<ResultTable> {
    let rate = cfg.build_rate()?;
    let mut problem = cfg.build_problem(Objective::Regret)?;
    cfg.apply_rate_param_space(&mut problem)?;
    let report: ProbeReport = crate::verify::assumption_probe(
        &rate,
        &problem.param_space,
        samples,
        cfg.experiment.seed,
    )?;
    let mut table = ResultTable::new(&["probe", "failures", "witness"]);
    attach_metadata(&mut table, cfg);
    for (name, fails) in [
        ("domain", &report.domain_failures),
        ("lsc", &report.lsc_failures),
        ("edge", &report.edge_failures),
    ] {
        table.push_row(vec![
            Cell::Text(name.into()),
            Cell::Int(fails.len() as i64),
            Cell::Text(fails.first().cloned().unwrap_or_default()),
        ]);
    }
    Ok(table)
}

/// A one-shot decision from an observed measure file.
#[derive(Debug, Clone)]
pub struct DecideOutcome {
    pub x_star: Vec<f64>,
    pub u_star: f64,
    pub theta_star: Vec<f64>,
}

/// Parses the observation (one CSV record of coordinates, header optional)
/// and solves the decision problem at it.
pub fn run_decide(cfg: &ExperimentConfig, input: &Path) -> Result<(DecideOutcome, ResultTable)> {
    let problem_section = cfg
        .problem
        .as_ref()
        .ok_or_else(|| Error::Config("missing [problem] section".into()))?;
    let objective: Objective = problem_section
        .objectives
        .first()
        .copied()
        .map(Into::into)
        .unwrap_or(Objective::Regret);
    let mut problem = cfg.build_problem(objective)?;
    cfg.apply_rate_param_space(&mut problem)?;
    let want_dim = match &problem.param_space {
        ParamSpace::StationaryPairMatrices { dim, .. } => dim * dim,
        _ => problem.theta_dim(),
    };

    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input.display(), e))?;
    let mut z: Option<Vec<f64>> = None;
    for (li, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if vals.len() != want_dim {
                    return Err(Error::InputParse {
                        line: li as u64 + 1,
                        message: format!("expected {want_dim} coordinates, got {}", vals.len()),
                    });
                }
                if z.is_some() {
                    return Err(Error::InputParse {
                        line: li as u64 + 1,
                        message: "multiple observation rows found".into(),
                    });
                }
                z = Some(vals);
            }
            Err(_) if li == 0 && z.is_none() => continue, // header row
            Err(e) => {
                return Err(Error::InputParse {
                    line: li as u64 + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    let z = z.ok_or_else(|| Error::InputParse {
        line: 1,
        message: "no observation row found".into(),
    })?;
    // probability-vector problems must receive a point on the simplex
    if !matches!(problem.param_space, ParamSpace::L2Ball { .. }) {
        let sum: f64 = z.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || z.iter().any(|x| *x < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "observation is not a probability vector: entries sum to {sum}"
            )));
        }
    }

    let sc = cfg
        .build_solver_grid()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("empty (beta, r) grid".into()))?;
    let out = optimal_decision(&z, &problem, &sc)?;

    let mut table = ResultTable::new(&["quantity", "index", "value"]);
    attach_metadata(&mut table, cfg);
    for (i, v) in out.x_star.iter().enumerate() {
        table.push_row(vec![
            Cell::Text("x_star".into()),
            Cell::Int(i as i64),
            Cell::Num(*v),
        ]);
    }
    table.push_row(vec![
        Cell::Text("u_star".into()),
        Cell::Int(0),
        Cell::Num(out.u_star),
    ]);
    for (i, v) in out.theta_star.iter().enumerate() {
        table.push_row(vec![
            Cell::Text("theta_star".into()),
            Cell::Int(i as i64),
            Cell::Num(*v),
        ]);
    }
    Ok((
        DecideOutcome {
            x_star: out.x_star,
            u_star: out.u_star,
            theta_star: out.theta_star,
        },
        table,
    ))
}
