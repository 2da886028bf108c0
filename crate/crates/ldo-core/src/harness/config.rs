//! Typed TOML experiment recipes. Unknown keys are rejected so that stale
//! recipe files fail loudly instead of silently running defaults.

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::penalty::Penalty;
use crate::problems::{DecisionProblem, LossTable, Objective};
use crate::rate::RateFunction;
use crate::solver::SolverConfig;
use crate::spaces::ParamSpace;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GapCurve,
    RegretCurve,
    SanovCheck,
    LaplaceCheck,
    Decide,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Newsvendor,
    Portfolio,
    FiniteLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Cost,
    Regret,
}

impl From<ObjectiveSpec> for Objective {
    fn from(o: ObjectiveSpec) -> Objective {
        match o {
            ObjectiveSpec::Cost => Objective::Cost,
            ObjectiveSpec::Regret => Objective::Regret,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<ObjectiveSpec>,
    // newsvendor
    pub kappa: Option<f64>,
    pub price: Option<f64>,
    pub rho: Option<f64>,
    pub d: Option<usize>,
    // portfolio
    pub risk_aversion: Option<f64>,
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub short_selling: bool,
    pub mean_radius: Option<f64>,
    pub mean_center: Option<Vec<f64>>,
    // finite loss
    pub loss_table: Option<String>,
}

fn default_objectives() -> Vec<ObjectiveSpec> {
    vec![ObjectiveSpec::Regret]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Lln,
    RllnBall,
    RelEntropy,
    RobustRelEntropy,
    Gaussian,
    CondRelEntropy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub kind: RateKind,
    pub radius: Option<f64>,
    pub markov_dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub betas: Vec<f64>,
    /// Defaults to `alpha = beta` per entry when omitted.
    #[serde(default)]
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub r_values: Vec<f64>,
    #[serde(default = "default_multistart")]
    pub multistart: usize,
    #[serde(default = "default_decision_multistart")]
    pub decision_multistart: usize,
    #[serde(default = "default_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_tol")]
    pub outer_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_multistart() -> usize {
    32
}
fn default_decision_multistart() -> usize {
    8
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    2000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub theta: Vec<f64>,
    #[serde(default)]
    pub theta1: Vec<f64>,
    #[serde(default)]
    pub theta2: Vec<f64>,
    pub p1: Option<f64>,
    /// Entry floor of the parameter space.
    #[serde(default = "default_theta_floor")]
    pub floor: f64,
    pub n_max: Option<usize>,
    pub n_step: Option<usize>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Number of parameters averaged in the gap sweep (0 = true theta only).
    #[serde(default)]
    pub avg_thetas: usize,
    /// Floor used when sampling parameters for the averaged gap.
    #[serde(default = "default_sample_floor")]
    pub sample_floor: f64,
}

fn default_theta_floor() -> f64 {
    0.001
}
fn default_paths() -> usize {
    300
}
fn default_sample_floor() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceProbe {
    Linear,
    NegSqDist,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Sanov event `A = { z : z_1 >= event_threshold }`.
    #[serde(default = "default_event_threshold")]
    pub event_threshold: f64,
    #[serde(default = "default_ball_grid")]
    pub ball_grid: usize,
    #[serde(default = "default_lattice_cap")]
    pub lattice_cap: u64,
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    #[serde(default = "default_probe")]
    pub probe: LaplaceProbe,
    #[serde(default)]
    pub linear_coeffs: Vec<f64>,
}

fn default_n_list() -> Vec<usize> {
    vec![5, 10, 20, 40]
}
fn default_radii() -> Vec<f64> {
    vec![0.0, 0.05]
}
fn default_event_threshold() -> f64 {
    0.5
}
fn default_ball_grid() -> usize {
    50
}
fn default_lattice_cap() -> u64 {
    200_000
}
fn default_grid_m() -> usize {
    400
}
fn default_probe() -> LaplaceProbe {
    LaplaceProbe::Linear
}

/// A full experiment recipe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub problem: Option<ProblemSection>,
    pub rate: Option<RateSection>,
    pub penalty: Option<PenaltySection>,
    pub solver: Option<SolverSection>,
    pub sim: Option<SimSection>,
    pub verify: Option<VerifySection>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = &self.penalty {
            if p.betas.is_empty() || p.betas.iter().any(|b| *b <= 0.0) {
                return Err(Error::Config("penalty.betas must be positive".into()));
            }
            if !p.alphas.is_empty() && p.alphas.len() != p.betas.len() {
                return Err(Error::Config(
                    "penalty.alphas must be empty or match betas in length".into(),
                ));
            }
            if p.alphas.iter().any(|a| *a <= 0.0) {
                return Err(Error::Config("penalty.alphas must be positive".into()));
            }
        }
        if let Some(s) = &self.solver {
            if s.r_values.is_empty() || s.r_values.iter().any(|r| *r <= 0.0) {
                return Err(Error::Config("solver.r_values must be positive".into()));
            }
        }
        if let Some(s) = &self.sim {
            if let Some(p1) = s.p1 {
                if !(0.0 < p1 && p1 <= 1.0) {
                    return Err(Error::Config("sim.p1 must lie in (0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    /// Stable hash of the canonical re-serialization, recomputable from the
    /// embedded config copy in any result file.
    pub fn config_hash(&self) -> String {
        let canon = toml::to_string(self).unwrap_or_default();
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// Penalty list with the `alpha = beta` default.
    pub fn penalties(&self) -> Result<Vec<Penalty>> {
        let section = self
            .penalty
            .as_ref()
            .ok_or_else(|| Error::Config("missing [penalty] section".into()))?;
        section
            .betas
            .iter()
            .enumerate()
            .map(|(i, beta)| {
                let alpha = section.alphas.get(i).copied().unwrap_or(*beta);
                Penalty::new(alpha, *beta)
            })
            .collect()
    }

    pub fn sim_section(&self) -> Result<&SimSection> {
        self.sim
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sim] section".into()))
    }

    pub fn solver_section(&self) -> Result<&SolverSection> {
        self.solver
            .as_ref()
            .ok_or_else(|| Error::Config("missing [solver] section".into()))
    }

    pub fn verify_section(&self) -> Result<&VerifySection> {
        self.verify
            .as_ref()
            .ok_or_else(|| Error::Config("missing [verify] section".into()))
    }

    /// Builds the decision problem for one objective choice.
    pub fn build_problem(&self, objective: Objective) -> Result<DecisionProblem> {
        let p = self
            .problem
            .as_ref()
            .ok_or_else(|| Error::Config("missing [problem] section".into()))?;
        let sim = self.sim_section()?;
        match p.kind {
            ProblemKind::Newsvendor => {
                let d = p
                    .d
                    .ok_or_else(|| Error::Config("newsvendor needs problem.d".into()))?;
                let param_space = ParamSpace::simplex_with_floor(d, sim.floor)?;
                DecisionProblem::newsvendor(
                    p.kappa.unwrap_or(1.0),
                    p.price
                        .ok_or_else(|| Error::Config("newsvendor needs problem.price".into()))?,
                    p.rho
                        .ok_or_else(|| Error::Config("newsvendor needs problem.rho".into()))?,
                    d,
                    param_space,
                    objective,
                )
            }
            ProblemKind::Portfolio => {
                let sigma_rows = p
                    .sigma
                    .as_ref()
                    .ok_or_else(|| Error::Config("portfolio needs problem.sigma".into()))?;
                let sigma = SpdMatrix::from_rows(sigma_rows)?;
                let center = p
                    .mean_center
                    .clone()
                    .unwrap_or_else(|| vec![0.0; sigma.dim()]);
                let param_space = ParamSpace::l2_ball(
                    center,
                    p.mean_radius
                        .ok_or_else(|| Error::Config("portfolio needs problem.mean_radius".into()))?,
                )?;
                DecisionProblem::portfolio(
                    p.risk_aversion.unwrap_or(1.0),
                    sigma,
                    p.short_selling,
                    param_space,
                    objective,
                )
            }
            ProblemKind::FiniteLoss => {
                let table_path = p
                    .loss_table
                    .as_ref()
                    .ok_or_else(|| Error::Config("finite_loss needs problem.loss_table".into()))?;
                let table = LossTable::from_csv(Path::new(table_path))?;
                let states = table.states();
                let param_space = ParamSpace::simplex_with_floor(states, sim.floor)?;
                DecisionProblem::finite_loss(table, param_space, objective)
            }
        }
    }

    /// Markov problems swap the simplex parameter space for stationary pair
    /// measures of the configured state count.
    pub fn apply_rate_param_space(&self, problem: &mut DecisionProblem) -> Result<()> {
        if let Some(rate) = &self.rate {
            if rate.kind == RateKind::CondRelEntropy {
                let dim = rate
                    .markov_dim
                    .ok_or_else(|| Error::Config("cond_rel_entropy needs rate.markov_dim".into()))?;
                let sim = self.sim_section()?;
                problem.param_space = ParamSpace::stationary_pairs(dim, sim.floor)?;
            }
        }
        Ok(())
    }

    pub fn build_rate(&self) -> Result<RateFunction> {
        let r = self
            .rate
            .as_ref()
            .ok_or_else(|| Error::Config("missing [rate] section".into()))?;
        let need_radius = || {
            r.radius
                .ok_or_else(|| Error::Config("this rate kind needs rate.radius".into()))
        };
        Ok(match r.kind {
            RateKind::Lln => RateFunction::Lln,
            RateKind::RllnBall => RateFunction::RllnBall {
                radius: need_radius()?,
            },
            RateKind::RelEntropy => RateFunction::RelEntropy,
            RateKind::RobustRelEntropy => {
                let sim = self.sim_section()?;
                RateFunction::robust_rel_entropy(need_radius()?, sim.floor)?
            }
            RateKind::Gaussian => {
                let p = self
                    .problem
                    .as_ref()
                    .ok_or_else(|| Error::Config("gaussian rate needs [problem].sigma".into()))?;
                let rows = p
                    .sigma
                    .as_ref()
                    .ok_or_else(|| Error::Config("gaussian rate needs problem.sigma".into()))?;
                RateFunction::GaussianCramer {
                    sigma: SpdMatrix::from_rows(rows)?,
                }
            }
            RateKind::CondRelEntropy => RateFunction::CondRelEntropy {
                dim: r
                    .markov_dim
                    .ok_or_else(|| Error::Config("cond_rel_entropy needs rate.markov_dim".into()))?,
            },
        })
    }

    /// Solver configs over the `(beta, r)` grid.
    pub fn build_solver_grid(&self) -> Result<Vec<SolverConfig>> {
        let rate = self.build_rate()?;
        let solver = self.solver_section()?;
        let mut out = Vec::new();
        for pen in self.penalties()? {
            for &r in &solver.r_values {
                let mut cfg = SolverConfig::new(r, pen, rate.clone())?;
                cfg.multistart = solver.multistart;
                cfg.decision_multistart = solver.decision_multistart;
                cfg.inner_tol = solver.inner_tol;
                cfg.outer_tol = solver.outer_tol;
                cfg.max_iter = solver.max_iter;
                cfg.seed = self.experiment.seed;
                out.push(cfg);
            }
        }
        Ok(out)
    }

    /// The sample-size grid: explicit `n_grid`, or `step..=n_max` with the
    /// paper defaults (5-step for i.i.d. runs, 10-step for mixtures).
    pub fn n_grid(&self) -> Result<Vec<usize>> {
        let sim = self.sim_section()?;
        if !sim.n_grid.is_empty() {
            return Ok(sim.n_grid.clone());
        }
        let n_max = sim
            .n_max
            .ok_or_else(|| Error::Config("sim needs n_max or n_grid".into()))?;
        let mixture = !sim.theta1.is_empty();
        let step = sim.n_step.unwrap_or(if mixture { 10 } else { 5 });
        Ok((1..=n_max / step).map(|k| k * step).collect())
    }
}
