//! Concrete decision problems: newsvendor and mean-variance portfolio costs
//! plus a generic finite-state expected loss, each with an exact (or
//! high-precision) minimum-cost oracle, regret, and Danskin subgradients.

use crate::error::{Error, Result};
use crate::linalg::{dot, SpdMatrix};
use crate::spaces::{project_box_sum, project_simplex_raw, DecisionSpace, ParamSpace};
use std::path::Path;

/// Exact minimizer of `-x' theta + rho x' Sigma x` over a unit-sum decision
/// space by enumerating bound-pattern faces: each coordinate is pinned at a
/// bound or left free, the free block solves a bordered linear system, and
/// the feasible face solutions' minimum is the global minimum of the convex
/// program.
fn qp_min_active_sets(
    theta: &[f64],
    rho: f64,
    sigma: &crate::linalg::SpdMatrix,
    space: &DecisionSpace,
) -> Option<Vec<f64>> {
    let d = sigma.dim();
    let (lo, hi, patterns): (f64, f64, u32) = match space {
        DecisionSpace::Simplex { .. } => (0.0, 1.0, 2),
        DecisionSpace::BoxSimplex { lo, hi, .. } => (*lo, *hi, 3),
        DecisionSpace::Interval { .. } => return None,
    };
    let total = patterns.pow(d as u32);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut assign = vec![0u32; d];
    for code in 0..total {
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % patterns;
            c /= patterns;
        }
        // assignment: 0 = free, 1 = at lo, 2 = at hi
        let free: Vec<usize> = (0..d).filter(|i| assign[*i] == 0).collect();
        let k = free.len();
        let mut x = vec![0.0; d];
        let mut pinned_sum = 0.0;
        for i in 0..d {
            if assign[i] == 1 {
                x[i] = lo;
                pinned_sum += lo;
            } else if assign[i] == 2 {
                x[i] = hi;
                pinned_sum += hi;
            }
        }
        if k == 0 {
            if (pinned_sum - 1.0).abs() > 1e-12 {
                continue;
            }
        } else {
            // bordered KKT system over the free block:
            // [2 rho Sigma_FF, -1; 1', 0] (x_F, lambda) =
            //   (theta_F - 2 rho Sigma_FP x_P, 1 - pinned_sum)
            let n = k + 1;
            let mut a = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            for (r, &i) in free.iter().enumerate() {
                for (cidx, &j) in free.iter().enumerate() {
                    a[r * n + cidx] = 2.0 * rho * sigma.entry(i, j);
                }
                a[r * n + k] = -1.0;
                a[k * n + r] = 1.0;
                let mut rhs = theta[i];
                for j in 0..d {
                    if assign[j] != 0 {
                        rhs -= 2.0 * rho * sigma.entry(i, j) * x[j];
                    }
                }
                b[r] = rhs;
            }
            b[k] = 1.0 - pinned_sum;
            let sol = match crate::linalg::solve_dense(&mut a, &mut b, n) {
                Some(s) => s,
                None => continue,
            };
            let mut feasible = true;
            for (r, &i) in free.iter().enumerate() {
                if sol[r] < lo - 1e-10 || sol[r] > hi + 1e-10 {
                    feasible = false;
                    break;
                }
                x[i] = sol[r].clamp(lo, hi);
            }
            if !feasible {
                continue;
            }
        }
        let val = -crate::linalg::dot(&x, theta) + rho * sigma.quad_form(&x);
        if best.as_ref().map_or(true, |(bv, _)| val < *bv) {
            best = Some((val, x));
        }
    }
    best.map(|(_, x)| x)
}

/// Which objective the min-max solver regularizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Cost,
    Regret,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Cost => write!(f, "cost"),
            Objective::Regret => write!(f, "regret"),
        }
    }
}

/// A tabulated loss `h(x, i)` on an x-grid, piecewise linear in `x`.
#[derive(Debug, Clone)]
pub struct LossTable {
    x_grid: Vec<f64>,
    /// `losses[k][i]` = loss at grid point `k` in state `i` (0-based).
    losses: Vec<Vec<f64>>,
    states: usize,
}

impl LossTable {
    pub fn new(x_grid: Vec<f64>, losses: Vec<Vec<f64>>) -> Result<Self> {
        if x_grid.len() < 2 || x_grid.len() != losses.len() {
            return Err(Error::InvalidArgument(
                "loss table needs >= 2 grid points with one loss row each".into(),
            ));
        }
        if x_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "loss table x-grid must be strictly increasing".into(),
            ));
        }
        let states = losses[0].len();
        if states == 0 || losses.iter().any(|r| r.len() != states) {
            return Err(Error::InvalidArgument(
                "loss table rows must share a positive state count".into(),
            ));
        }
        Ok(Self {
            x_grid,
            losses,
            states,
        })
    }

    /// Reads `(x, state, loss)` triples from CSV with the header
    /// `x,state,loss`; the x-grid is inferred from the distinct x values.
    /// States are 1-based in the file.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Config(format!("cannot open loss table {path:?}: {e}")))?;
        let mut triples: Vec<(f64, usize, f64)> = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InputParse {
                line: idx as u64 + 2,
                message: e.to_string(),
            })?;
            let parse = |field: usize| -> Result<f64> {
                rec.get(field)
                    .ok_or_else(|| Error::InputParse {
                        line: idx as u64 + 2,
                        message: format!("missing column {field}"),
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InputParse {
                        line: idx as u64 + 2,
                        message: e.to_string(),
                    })
            };
            let x = parse(0)?;
            let state = parse(1)? as usize;
            if state == 0 {
                return Err(Error::InputParse {
                    line: idx as u64 + 2,
                    message: "states are 1-based".into(),
                });
            }
            triples.push((x, state - 1, parse(2)?));
        }
        let mut xs: Vec<f64> = triples.iter().map(|t| t.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let states = triples.iter().map(|t| t.1).max().map_or(0, |s| s + 1);
        let mut losses = vec![vec![f64::NAN; states]; xs.len()];
        for (x, s, l) in triples {
            let k = xs.partition_point(|v| *v < x);
            losses[k][s] = l;
        }
        if losses.iter().flatten().any(|l| l.is_nan()) {
            return Err(Error::Config(
                "loss table is missing (x, state) combinations".into(),
            ));
        }
        Self::new(xs, losses)
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_grid[0], *self.x_grid.last().unwrap())
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// Linear interpolation of `h(x, i)` between grid points.
    fn loss_at(&self, x: f64, state: usize) -> f64 {
        let k = match self.x_grid.partition_point(|v| *v <= x) {
            0 => 1,
            k if k >= self.x_grid.len() => self.x_grid.len() - 1,
            k => k,
        };
        let (x0, x1) = (self.x_grid[k - 1], self.x_grid[k]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        (1.0 - t) * self.losses[k - 1][state] + t * self.losses[k][state]
    }
}

/// Cost family of a decision problem.
#[derive(Debug, Clone)]
pub enum CostKind {
    /// Expected `kappa x + rho x^2 - p min(x, demand)` with demand on
    /// `{1, ..., d}` and continuous orders on `[0, d]`.
    Newsvendor {
        kappa: f64,
        price: f64,
        rho: f64,
        d: usize,
    },
    /// Negative mean-variance objective `-x' theta + risk x' Sigma x`.
    Portfolio { risk_aversion: f64, sigma: SpdMatrix },
    /// Expected tabulated loss.
    FiniteExpectedLoss { table: LossTable },
}

/// A decision problem: cost, decision space, parameter space and the
/// objective the solver regularizes.
#[derive(Debug, Clone)]
pub struct DecisionProblem {
    pub cost: CostKind,
    pub decision_space: DecisionSpace,
    pub param_space: ParamSpace,
    pub objective: Objective,
}

impl DecisionProblem {
    /// Newsvendor with demand states `{1..d}` and orders on `[0, d]`.
    pub fn newsvendor(
        kappa: f64,
        price: f64,
        rho: f64,
        d: usize,
        param_space: ParamSpace,
        objective: Objective,
    ) -> Result<Self> {
        if !(price > kappa) || kappa < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "newsvendor needs p > kappa >= 0, got p={price}, kappa={kappa}"
            )));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "newsvendor needs rho > 0 for strict convexity, got {rho}"
            )));
        }
        Ok(Self {
            cost: CostKind::Newsvendor {
                kappa,
                price,
                rho,
                d,
            },
            decision_space: DecisionSpace::interval(0.0, d as f64)?,
            param_space,
            objective,
        })
    }

    pub fn portfolio(
        risk_aversion: f64,
        sigma: SpdMatrix,
        short_selling: bool,
        param_space: ParamSpace,
        objective: Objective,
    ) -> Result<Self> {
        if !(risk_aversion > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "portfolio needs positive risk aversion, got {risk_aversion}"
            )));
        }
        let d = sigma.dim();
        let decision_space = if short_selling {
            DecisionSpace::box_simplex(-1.0, 1.0, d)?
        } else {
            DecisionSpace::Simplex { dim: d }
        };
        Ok(Self {
            cost: CostKind::Portfolio {
                risk_aversion,
                sigma,
            },
            decision_space,
            param_space,
            objective,
        })
    }

    pub fn finite_loss(
        table: LossTable,
        param_space: ParamSpace,
        objective: Objective,
    ) -> Result<Self> {
        let (lo, hi) = table.x_range();
        Ok(Self {
            cost: CostKind::FiniteExpectedLoss { table },
            decision_space: DecisionSpace::interval(lo, hi)?,
            param_space,
            objective,
        })
    }

    /// Dimension of the parameter vector the cost consumes.
    pub fn theta_dim(&self) -> usize {
        match &self.cost {
            CostKind::Newsvendor { d, .. } => *d,
            CostKind::Portfolio { sigma, .. } => sigma.dim(),
            CostKind::FiniteExpectedLoss { table } => table.states(),
        }
    }

    /// `c(x, theta)`.
    pub fn cost(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_dims(x, theta)?;
        Ok(match &self.cost {
            CostKind::Newsvendor {
                kappa,
                price,
                rho,
                d,
            } => {
                let xv = x[0];
                if !(0.0..=*d as f64).contains(&xv) {
                    return Err(Error::InvalidArgument(format!(
                        "order quantity {xv} outside [0, {d}]"
                    )));
                }
                let mut acc = 0.0;
                for (i, t) in theta.iter().enumerate() {
                    let demand = (i + 1) as f64;
                    acc += (kappa * xv + rho * xv * xv - price * xv.min(demand)) * t;
                }
                acc
            }
            CostKind::Portfolio {
                risk_aversion,
                sigma,
            } => -dot(x, theta) + risk_aversion * sigma.quad_form(x),
            CostKind::FiniteExpectedLoss { table } => {
                let mut acc = 0.0;
                for (i, t) in theta.iter().enumerate() {
                    acc += table.loss_at(x[0], i) * t;
                }
                acc
            }
        })
    }

    /// The regularized objective `g(x, theta)`.
    pub fn g(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        match self.objective {
            Objective::Cost => self.cost(x, theta),
            Objective::Regret => self.regret(x, theta),
        }
    }

    /// Global minimizer of the strictly convex cost over the decision space.
    pub fn min_cost(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        match &self.cost {
            CostKind::Newsvendor {
                kappa,
                price,
                rho,
                d,
            } => {
                // piecewise quadratic between consecutive integers; each
                // segment solved in closed form
                let mut best = (vec![0.0], self.cost(&[0.0], theta)?);
                let mut tail: f64 = theta.iter().sum(); // P(demand >= m+1) at m=0
                for m in 0..*d {
                    let (lo, hi) = (m as f64, (m + 1) as f64);
                    // c(x) = rho x^2 + (kappa - p*tail) x - p * sold_mass
                    let vertex = (price * tail - kappa) / (2.0 * rho);
                    let mut candidates = vec![lo, hi];
                    if (lo..=hi).contains(&vertex) {
                        candidates.push(vertex);
                    }
                    for xv in candidates {
                        let v = self.cost(&[xv], theta)?;
                        if v < best.1 {
                            best = (vec![xv], v);
                        }
                    }
                    tail -= theta[m];
                }
                Ok(best)
            }
            CostKind::Portfolio {
                risk_aversion,
                sigma,
            } => {
                let d = sigma.dim();
                // exact active-set enumeration for the small dimensions used
                // here; every face's equality-constrained QP has a closed
                // form and the global minimizer lies on its own face
                if d <= 6 {
                    if let Some(best) =
                        qp_min_active_sets(theta, *risk_aversion, sigma, &self.decision_space)
                    {
                        let v = self.cost(&best, theta)?;
                        return Ok((best, v));
                    }
                }
                // projected gradient with the exact smoothness constant
                let lmax = 2.0 * risk_aversion * sigma.lambda_max();
                let step = 1.0 / lmax;
                let project = |v: &[f64]| -> Vec<f64> {
                    match &self.decision_space {
                        DecisionSpace::Simplex { .. } => {
                            project_simplex_raw(v, 0.0).expect("feasible")
                        }
                        DecisionSpace::BoxSimplex { lo, hi, .. } => {
                            project_box_sum(v, *lo, *hi, 1.0)
                        }
                        DecisionSpace::Interval { lo, hi } => vec![v[0].clamp(*lo, *hi)],
                    }
                };
                let mut x = project(&vec![1.0 / d as f64; d]);
                for _ in 0..20_000 {
                    let mut grad = sigma.mul_vec(&x);
                    for (gi, ti) in grad.iter_mut().zip(theta) {
                        *gi = 2.0 * risk_aversion * *gi - ti;
                    }
                    let next = project(
                        &x.iter()
                            .zip(&grad)
                            .map(|(xi, gi)| xi - step * gi)
                            .collect::<Vec<f64>>(),
                    );
                    let moved: f64 = next
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    x = next;
                    if moved < 1e-12 {
                        break;
                    }
                }
                let v = self.cost(&x, theta)?;
                Ok((x, v))
            }
            CostKind::FiniteExpectedLoss { table } => {
                // expected loss is piecewise linear in x: scan grid points
                let mut best: Option<(f64, f64)> = None;
                for &xv in &table.x_grid {
                    let v = self.cost(&[xv], theta)?;
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((xv, v));
                    }
                }
                let (x, v) = best.expect("non-empty grid");
                Ok((vec![x], v))
            }
        }
    }

    /// `cost(x, theta) - min_y cost(y, theta) >= 0`.
    pub fn regret(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let c = self.cost(x, theta)?;
        let (_, m) = self.min_cost(theta)?;
        Ok((c - m).max(0.0))
    }

    /// Gradient of `theta -> cost(x, theta)`; all cost families here are
    /// linear in theta.
    pub fn cost_grad_theta(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, theta)?;
        Ok(match &self.cost {
            CostKind::Newsvendor {
                kappa,
                price,
                rho,
                d,
            } => {
                let xv = x[0];
                (0..*d)
                    .map(|i| kappa * xv + rho * xv * xv - price * xv.min((i + 1) as f64))
                    .collect()
            }
            CostKind::Portfolio { .. } => x.iter().map(|xi| -xi).collect(),
            CostKind::FiniteExpectedLoss { table } => (0..table.states())
                .map(|i| table.loss_at(x[0], i))
                .collect(),
        })
    }

    /// Danskin subgradient of `theta -> regret(x, theta)`: the cost gradient
    /// at `x` minus the cost gradient at the minimizer for `theta`.
    pub fn regret_grad_theta(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let gx = self.cost_grad_theta(x, theta)?;
        let (xmin, _) = self.min_cost(theta)?;
        let gm = self.cost_grad_theta(&xmin, theta)?;
        Ok(gx.iter().zip(&gm).map(|(a, b)| a - b).collect())
    }

    /// Subgradient of `g` in theta, per the objective selector.
    pub fn g_grad_theta(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        match self.objective {
            Objective::Cost => self.cost_grad_theta(x, theta),
            Objective::Regret => self.regret_grad_theta(x, theta),
        }
    }

    /// Gradient of `x -> cost(x, theta)`; identical to the x-gradient of
    /// the regret (the subtracted minimum does not depend on x).
    pub fn cost_grad_x(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, theta)?;
        Ok(match &self.cost {
            CostKind::Newsvendor {
                kappa,
                price,
                rho,
                ..
            } => {
                let xv = x[0];
                let mut g = kappa + 2.0 * rho * xv;
                for (i, t) in theta.iter().enumerate() {
                    if xv < (i + 1) as f64 {
                        g -= price * t;
                    }
                }
                vec![g]
            }
            CostKind::Portfolio {
                risk_aversion,
                sigma,
            } => {
                let mut g = sigma.mul_vec(x);
                for (gi, ti) in g.iter_mut().zip(theta) {
                    *gi = 2.0 * risk_aversion * *gi - ti;
                }
                g
            }
            CostKind::FiniteExpectedLoss { table } => {
                // piecewise-linear slope of the interpolated loss
                let xv = x[0];
                let h = 1e-7;
                let (lo, hi) = table.x_range();
                let (a, b) = ((xv - h).max(lo), (xv + h).min(hi));
                let mut g = 0.0;
                for (i, t) in theta.iter().enumerate() {
                    g += t * (table.loss_at(b, i) - table.loss_at(a, i)) / (b - a);
                }
                vec![g]
            }
        })
    }

    fn check_dims(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.theta_dim(),
                got: theta.len(),
            });
        }
        if x.len() != self.decision_space.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.decision_space.ambient_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}
