//! Geometric primitives for decision and parameter spaces: simplex, box and
//! ball representations, Euclidean projections, the lattice of empirical
//! types and uniform sampling.

use crate::error::{Error, Result};
use crate::linalg::dist2;
use rand::Rng;

/// Tolerance on the unit-mass constraint of a probability vector.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Tolerance on the marginal-balance constraint of a stationary pair measure.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Default cap on the number of enumerated empirical types.
pub const DEFAULT_LATTICE_CAP: u128 = 10_000_000;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NotAProbVector("empty vector".into()));
        }
        if let Some(x) = entries.iter().find(|x| **x < 0.0 || !x.is_finite()) {
            return Err(Error::NotAProbVector(format!("entry {x} out of range")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotAProbVector(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { entries })
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            entries: vec![1.0 / d as f64; d],
        }
    }

    /// Unit mass on coordinate `i` (0-based).
    pub fn unit(d: usize, i: usize) -> Self {
        let mut entries = vec![0.0; d];
        entries[i] = 1.0;
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// A probability measure on pairs of states, stored row-major as d x d.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl ProbMatrix {
    /// A pair measure: nonnegative entries summing to one.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if let Some(x) = entries.iter().find(|x| **x < 0.0 || !x.is_finite()) {
            return Err(Error::NotAPairMeasure(format!("entry {x} out of range")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotAPairMeasure(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { dim, entries })
    }

    /// A pair measure whose row marginals equal its column marginals, i.e.
    /// the stationary distribution of a pair `(xi_k, xi_{k+1})`.
    pub fn stationary_pair(dim: usize, entries: Vec<f64>) -> Result<Self> {
        let m = Self::new(dim, entries)?;
        for i in 0..dim {
            let (r, c) = (m.row_sum(i), m.col_sum(i));
            if (r - c).abs() > STATIONARY_TOL {
                return Err(Error::NotAPairMeasure(format!(
                    "row sum {r} != column sum {c} at state {i}"
                )));
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i * self.dim..(i + 1) * self.dim].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + j]).sum()
    }

    /// Transition kernel `p(j|i) = theta_ij / sum_k theta_ik` as rows.
    pub fn transition_kernel(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|i| {
                let r = self.row_sum(i);
                if r <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "zero row sum at state {i}"
                    )));
                }
                Ok((0..self.dim).map(|j| self.entry(i, j) / r).collect())
            })
            .collect()
    }
}

/// The compact convex parameter space the inner maximization runs over.
#[derive(Debug, Clone)]
pub enum ParamSpace {
    /// `Delta_d` intersected with `[floor, 1]^d`.
    SimplexWithFloor { dim: usize, floor: f64 },
    /// Euclidean ball.
    L2Ball { center: Vec<f64>, radius: f64 },
    /// Stationary pair measures on `d x d` with entrywise floor.
    StationaryPairMatrices { dim: usize, floor: f64 },
    /// A single point.
    Singleton(Vec<f64>),
}

impl ParamSpace {
    pub fn simplex_with_floor(dim: usize, floor: f64) -> Result<Self> {
        if floor < 0.0 || floor * dim as f64 > 1.0 {
            return Err(Error::InfeasibleFloor(floor * dim as f64));
        }
        Ok(ParamSpace::SimplexWithFloor { dim, floor })
    }

    pub fn l2_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ParamSpace::L2Ball { center, radius })
    }

    pub fn stationary_pairs(dim: usize, floor: f64) -> Result<Self> {
        if floor <= 0.0 || floor * (dim * dim) as f64 > 1.0 {
            return Err(Error::InfeasibleFloor(floor * (dim * dim) as f64));
        }
        Ok(ParamSpace::StationaryPairMatrices { dim, floor })
    }

    /// Dimension of the ambient coordinate vector (d*d for pair matrices).
    pub fn ambient_dim(&self) -> usize {
        match self {
            ParamSpace::SimplexWithFloor { dim, .. } => *dim,
            ParamSpace::L2Ball { center, .. } => center.len(),
            ParamSpace::StationaryPairMatrices { dim, .. } => dim * dim,
            ParamSpace::Singleton(p) => p.len(),
        }
    }

    /// Euclidean projection onto the space.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        let d = self.ambient_dim();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        match self {
            ParamSpace::SimplexWithFloor { floor, .. } => project_simplex_raw(v, *floor),
            ParamSpace::L2Ball { center, radius } => Ok(project_l2_ball(v, center, *radius)?),
            ParamSpace::StationaryPairMatrices { dim, floor } => {
                Ok(project_stationary_pairs(v, *dim, *floor))
            }
            ParamSpace::Singleton(p) => Ok(p.clone()),
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.ambient_dim() {
            return false;
        }
        match self {
            ParamSpace::SimplexWithFloor { floor, .. } => {
                let sum: f64 = v.iter().sum();
                (sum - 1.0).abs() <= tol.max(SIMPLEX_SUM_TOL)
                    && v.iter().all(|x| *x >= floor - tol)
            }
            ParamSpace::L2Ball { center, radius } => dist2(v, center) <= radius + tol,
            ParamSpace::StationaryPairMatrices { dim, floor } => {
                let sum: f64 = v.iter().sum();
                if (sum - 1.0).abs() > tol.max(SIMPLEX_SUM_TOL) || v.iter().any(|x| *x < floor - tol)
                {
                    return false;
                }
                (0..*dim).all(|i| {
                    let r: f64 = v[i * dim..(i + 1) * dim].iter().sum();
                    let c: f64 = (0..*dim).map(|k| v[k * dim + i]).sum();
                    (r - c).abs() <= tol.max(STATIONARY_TOL)
                })
            }
            ParamSpace::Singleton(p) => dist2(v, p) <= tol,
        }
    }

    /// Euclidean diameter (upper bound), used for step sizing.
    pub fn diameter(&self) -> f64 {
        match self {
            ParamSpace::SimplexWithFloor { .. } => std::f64::consts::SQRT_2,
            ParamSpace::L2Ball { radius, .. } => 2.0 * radius,
            ParamSpace::StationaryPairMatrices { .. } => std::f64::consts::SQRT_2,
            ParamSpace::Singleton(_) => 0.0,
        }
    }

    /// Deterministic starting points for multistart searches: the floored
    /// simplex vertices (or ball axis extremes) plus the barycenter.
    pub fn corner_points(&self) -> Vec<Vec<f64>> {
        match self {
            ParamSpace::SimplexWithFloor { dim, floor } => {
                let d = *dim;
                let mut pts = Vec::with_capacity(d + 1);
                for i in 0..d {
                    let mut p = vec![*floor; d];
                    p[i] = 1.0 - floor * (d as f64 - 1.0);
                    pts.push(p);
                }
                pts.push(vec![1.0 / d as f64; d]);
                pts
            }
            ParamSpace::L2Ball { center, radius } => {
                let d = center.len();
                let mut pts = Vec::with_capacity(2 * d + 1);
                for i in 0..d {
                    for s in [-1.0, 1.0] {
                        let mut p = center.clone();
                        p[i] += s * radius;
                        pts.push(p);
                    }
                }
                pts.push(center.clone());
                pts
            }
            ParamSpace::StationaryPairMatrices { dim, floor } => {
                let d = *dim;
                let mut pts = Vec::new();
                // uniform pair measure is stationary
                pts.push(vec![1.0 / (d * d) as f64; d * d]);
                // mass concentrated near the diagonal, floored elsewhere
                let mut diag = vec![*floor; d * d];
                let rem = 1.0 - floor * ((d * d - d) as f64);
                for i in 0..d {
                    diag[i * d + i] = rem / d as f64;
                }
                pts.push(diag);
                pts
            }
            ParamSpace::Singleton(p) => vec![p.clone()],
        }
    }

    /// Draws one point. Floored simplices and stationary pair measures use
    /// rejection with a fixed budget.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        const BUDGET: usize = 10_000;
        match self {
            ParamSpace::Singleton(p) => Ok(p.clone()),
            ParamSpace::L2Ball { center, radius } => {
                // direction from isotropic Gaussian, radius ~ R * U^{1/d}
                let d = center.len();
                let dir: Vec<f64> = (0..d)
                    .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng))
                    .collect();
                let n = crate::linalg::norm2(&dir);
                if n == 0.0 {
                    return Ok(center.clone());
                }
                let u: f64 = rng.gen::<f64>();
                let r = radius * u.powf(1.0 / d as f64);
                Ok(center
                    .iter()
                    .zip(&dir)
                    .map(|(c, x)| c + r * x / n)
                    .collect())
            }
            ParamSpace::SimplexWithFloor { dim, floor } => {
                for _ in 0..BUDGET {
                    let p = sample_flat_simplex(*dim, rng);
                    if p.iter().all(|x| *x >= *floor) {
                        return Ok(p);
                    }
                }
                Err(Error::RejectionBudgetExhausted {
                    space: format!("SimplexWithFloor(d={dim}, eps={floor})"),
                    budget: BUDGET,
                })
            }
            ParamSpace::StationaryPairMatrices { dim, floor } => {
                // theta_ij = pi_i P_ij from a random kernel P with floored
                // rows; pi is the stationary distribution of P. Entries are
                // bounded below by (row floor)^2, so choose the row floor
                // accordingly and reject the stragglers.
                let d = *dim;
                let row_floor = floor.sqrt().max(2.0 * floor);
                for _ in 0..BUDGET {
                    let mut kernel = Vec::with_capacity(d);
                    let mut ok = true;
                    for _ in 0..d {
                        let row = sample_flat_simplex(d, rng);
                        if row.iter().any(|x| *x < row_floor) {
                            ok = false;
                            break;
                        }
                        kernel.push(row);
                    }
                    if !ok {
                        continue;
                    }
                    let pi = stationary_distribution(&kernel);
                    let mut theta = vec![0.0; d * d];
                    for i in 0..d {
                        for j in 0..d {
                            theta[i * d + j] = pi[i] * kernel[i][j];
                        }
                    }
                    if theta.iter().all(|x| *x >= *floor) {
                        return Ok(theta);
                    }
                }
                Err(Error::RejectionBudgetExhausted {
                    space: format!("StationaryPairMatrices(d={dim}, eps={floor})"),
                    budget: BUDGET,
                })
            }
        }
    }
}

/// Uniform sample from the flat Dirichlet on `Delta_d` via exponential
/// spacings: normalize d independent Exp(1) draws.
pub fn sample_flat_simplex<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

fn stationary_distribution(kernel: &[Vec<f64>]) -> Vec<f64> {
    let d = kernel.len();
    let mut pi = vec![1.0 / d as f64; d];
    for _ in 0..10_000 {
        let mut next = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                next[j] += pi[i] * kernel[i][j];
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

/// Euclidean projection of `v` onto `Delta_d` intersected with `[eps, 1]^d`.
///
/// The floored problem reduces to projecting `v - eps` onto the simplex of
/// total mass `1 - eps*d`, which the sort-based threshold algorithm solves
/// exactly.
pub fn project_simplex(v: &[f64], eps: f64) -> Result<ProbVector> {
    ProbVector::new(project_simplex_raw(v, eps)?)
}

pub(crate) fn project_simplex_raw(v: &[f64], eps: f64) -> Result<Vec<f64>> {
    let d = v.len();
    if d == 0 {
        return Err(Error::NotAProbVector("empty vector".into()));
    }
    let mass = 1.0 - eps * d as f64;
    if eps < 0.0 || mass < -1e-15 {
        return Err(Error::InfeasibleFloor(eps * d as f64));
    }
    if mass <= 0.0 {
        return Ok(vec![eps; d]);
    }
    // feasible points are fixed points: in particular every projection
    // output, which makes the projection exactly idempotent
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() <= 1e-13 && v.iter().all(|x| *x >= eps) {
        return Ok(v.to_vec());
    }
    Ok(threshold_pass(v, eps, mass))
}

fn threshold_pass(v: &[f64], eps: f64, mass: f64) -> Vec<f64> {
    let mut u: Vec<f64> = v.iter().map(|x| x - eps).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    let mut rho = 0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - mass) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            tau = t;
            rho = i + 1;
        }
    }
    debug_assert!(rho > 0);
    v.iter().map(|x| (x - eps - tau).max(0.0) + eps).collect()
}

/// Euclidean projection onto the closed ball `B_center(radius)`.
pub fn project_l2_ball(v: &[f64], center: &[f64], radius: f64) -> Result<Vec<f64>> {
    if v.len() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: v.len(),
        });
    }
    if radius < 0.0 {
        return Err(Error::InvalidArgument("negative radius".into()));
    }
    let dist = dist2(v, center);
    if dist <= radius {
        return Ok(v.to_vec());
    }
    Ok(center
        .iter()
        .zip(v)
        .map(|(c, x)| c + radius * (x - c) / dist)
        .collect())
}

/// Projection onto the linear subspace of matrices whose row sums equal
/// their column sums. For the marginal-balance residual `y_i` the correction
/// is `theta_kl -= (y_k - y_l) / (2d)`.
pub(crate) fn project_marginal_balance(v: &[f64], d: usize) -> Vec<f64> {
    let mut y = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            y[i] += v[i * d + j] - v[j * d + i];
        }
    }
    let mut out = v.to_vec();
    for k in 0..d {
        for l in 0..d {
            out[k * d + l] -= (y[k] - y[l]) / (2.0 * d as f64);
        }
    }
    out
}

/// Projection onto floored stationary pair measures by Dykstra alternation
/// between the floored simplex and the marginal-balance subspace.
pub(crate) fn project_stationary_pairs(v: &[f64], d: usize, floor: f64) -> Vec<f64> {
    let n = d * d;
    let mut x = v.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..200 {
        let mut xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = project_simplex_raw(&xp, floor).unwrap_or_else(|_| vec![1.0 / n as f64; n]);
        for i in 0..n {
            p[i] = xp[i] - y[i];
            xp[i] = y[i] + q[i];
        }
        let x_next = project_marginal_balance(&xp, d);
        let mut moved = 0.0;
        for i in 0..n {
            q[i] = xp[i] - x_next[i];
            moved += (x_next[i] - x[i]).abs();
        }
        x = x_next;
        if moved < 1e-14 {
            break;
        }
    }
    // final passes: exactly on the floored simplex, then balance (the
    // balance correction preserves the total sum and, at convergence,
    // perturbs the floor by at most the Dykstra residual)
    let x = project_simplex_raw(&x, floor).unwrap_or_else(|_| vec![1.0 / n as f64; n]);
    project_marginal_balance(&x, d)
}

/// Number of empirical types: `C(n+d-1, d-1)`.
pub fn type_count(d: usize, n: usize) -> u128 {
    binomial(n as u128 + d as u128 - 1, d as u128 - 1)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All empirical types of horizon `n` on `d` states: vectors with entries in
/// `{0, 1/n, ..., 1}` summing to one.
pub fn type_lattice(d: usize, n: usize) -> Result<Vec<ProbVector>> {
    type_lattice_with_cap(d, n, DEFAULT_LATTICE_CAP)
}

pub fn type_lattice_with_cap(d: usize, n: usize, cap: u128) -> Result<Vec<ProbVector>> {
    if d < 2 || n < 1 {
        return Err(Error::InvalidArgument(format!(
            "type lattice needs d >= 2 and n >= 1, got d={d}, n={n}"
        )));
    }
    let count = type_count(d, n);
    if count > cap {
        return Err(Error::LatticeCapExceeded { d, n, count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut counts = vec![0usize; d];
    fill_compositions(n, 0, &mut counts, n, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn fill_compositions(
    n: usize,
    idx: usize,
    counts: &mut Vec<usize>,
    remaining: usize,
    out: &mut Vec<ProbVector>,
) {
    if idx == counts.len() - 1 {
        counts[idx] = remaining;
        let v: Vec<f64> = counts.iter().map(|c| *c as f64 / n as f64).collect();
        out.push(ProbVector { entries: v });
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        fill_compositions(n, idx + 1, counts, remaining - c, out);
    }
}

/// The compact convex decision space.
#[derive(Debug, Clone)]
pub enum DecisionSpace {
    /// Scalar decisions on `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Weight vectors on `Delta_d`.
    Simplex { dim: usize },
    /// `[lo, hi]^d` intersected with the unit-sum hyperplane (short selling).
    BoxSimplex { lo: f64, hi: f64, dim: usize },
}

impl DecisionSpace {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(DecisionSpace::Interval { lo, hi })
    }

    pub fn box_simplex(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo < hi) || dim as f64 * hi < 1.0 || dim as f64 * lo > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "empty box-simplex [{lo}, {hi}]^{dim}"
            )));
        }
        Ok(DecisionSpace::BoxSimplex { lo, hi, dim })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            DecisionSpace::Interval { .. } => 1,
            DecisionSpace::Simplex { dim } => *dim,
            DecisionSpace::BoxSimplex { dim, .. } => *dim,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DecisionSpace::Interval { lo, hi } => hi - lo,
            DecisionSpace::Simplex { .. } => std::f64::consts::SQRT_2,
            DecisionSpace::BoxSimplex { lo, hi, dim } => (hi - lo) * (*dim as f64).sqrt(),
        }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self {
            DecisionSpace::Interval { lo, hi } => vec![v[0].clamp(*lo, *hi)],
            DecisionSpace::Simplex { .. } => project_simplex_raw(v, 0.0).expect("eps=0 feasible"),
            DecisionSpace::BoxSimplex { lo, hi, .. } => project_box_sum(v, *lo, *hi, 1.0),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            DecisionSpace::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            DecisionSpace::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
            DecisionSpace::BoxSimplex { dim, .. } => vec![1.0 / *dim as f64; *dim],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            DecisionSpace::Interval { lo, hi } => vec![rng.gen_range(*lo..=*hi)],
            DecisionSpace::Simplex { dim } => sample_flat_simplex(*dim, rng),
            DecisionSpace::BoxSimplex { lo, hi, dim } => {
                let v: Vec<f64> = (0..*dim).map(|_| rng.gen_range(*lo..=*hi)).collect();
                project_box_sum(&v, *lo, *hi, 1.0)
            }
        }
    }
}

/// Projection onto `{x in [lo,hi]^d : sum x = s}` by bisection on the dual
/// shift: `x_i = clamp(v_i - tau, lo, hi)` with the sum monotone in `tau`.
pub(crate) fn project_box_sum(v: &[f64], lo: f64, hi: f64, s: f64) -> Vec<f64> {
    let sum_at = |tau: f64| -> f64 { v.iter().map(|x| (x - tau).clamp(lo, hi)).sum() };
    let mut a = v.iter().cloned().fold(f64::INFINITY, f64::min) - hi - 1.0;
    let mut b = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lo + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if sum_at(mid) > s {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    let tau = 0.5 * (a + b);
    v.iter().map(|x| (x - tau).clamp(lo, hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, prop_assert_eq, proptest};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn project_simplex_already_feasible() {
        let p = project_simplex(&[0.5, 0.5], 0.0).unwrap();
        assert_eq!(p.entries(), &[0.5, 0.5]);
    }

    #[test]
    fn project_simplex_symmetric_split() {
        let p = project_simplex(&[0.6, 0.6], 0.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn project_simplex_vertex_matches_grid_oracle() {
        // brute-force quadratic search over a 1e-4 grid on Delta_2
        let v = [2.0, 0.0];
        let mut best = (f64::INFINITY, 0.0);
        let m = 10_000;
        for k in 0..=m {
            let a = k as f64 / m as f64;
            let d = (v[0] - a).powi(2) + (v[1] - (1.0 - a)).powi(2);
            if d < best.0 {
                best = (d, a);
            }
        }
        assert!((best.1 - 1.0).abs() < 1e-12);
        let p = project_simplex(&v, 0.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
    }

    #[test]
    fn project_simplex_respects_floor() {
        let p = project_simplex(&[0.9, 0.1, 0.0], 0.05).unwrap();
        assert!(p.min_entry() >= 0.05 - 1e-15);
        let s: f64 = p.entries().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_simplex_infeasible_floor_rejected() {
        assert!(project_simplex(&[0.5, 0.5], 0.6).is_err());
    }

    #[test]
    fn projection_idempotent_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p1 = project_simplex(&v, 0.01).unwrap();
            let p2 = project_simplex(p1.entries(), 0.01).unwrap();
            assert_eq!(p1.entries(), p2.entries());
        }
    }

    #[test]
    fn projection_optimality_vs_lattice() {
        // || v - proj(v) || <= || v - w || + 1e-9 for lattice points w
        let lattice = type_lattice(3, 200).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let p = project_simplex(&v, 0.0).unwrap();
            let dp = dist2(&v, p.entries());
            for w in &lattice {
                assert!(dp <= dist2(&v, w.entries()) + 1e-9);
            }
        }
    }

    #[test]
    fn ball_projection_cases() {
        let c = vec![0.3, 0.4];
        assert_eq!(project_l2_ball(&c, &c, 1.0).unwrap(), c);
        let v = vec![c[0] + 2.0, c[1]];
        let p = project_l2_ball(&v, &c, 1.0).unwrap();
        assert!((p[0] - (c[0] + 1.0)).abs() < 1e-14);
        assert!((p[1] - c[1]).abs() < 1e-14);
    }

    #[test]
    fn ball_projection_grid_oracle() {
        let c = vec![0.0, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p = project_l2_ball(&v, &c, 1.0).unwrap();
            assert!(dist2(&p, &c) <= 1.0 + 1e-12);
            let dp = dist2(&v, &p);
            // sampled grid of the disk
            for i in 0..60 {
                for j in 0..60 {
                    let w = [i as f64 / 30.0 - 1.0, j as f64 / 30.0 - 1.0];
                    if dist2(&w, &c) <= 1.0 {
                        assert!(dp <= dist2(&v, &w) + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn lattice_small_cases() {
        let l = type_lattice(2, 2).unwrap();
        let pts: Vec<&[f64]> = l.iter().map(|p| p.entries()).collect();
        assert_eq!(pts.len(), 3);
        assert!(pts.contains(&[1.0, 0.0][..].as_ref()));
        assert!(pts.contains(&[0.5, 0.5][..].as_ref()));
        assert!(pts.contains(&[0.0, 1.0][..].as_ref()));

        let l = type_lattice(3, 1).unwrap();
        assert_eq!(l.len(), 3);
        for p in &l {
            assert!((p.entries().iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert_eq!(p.entries().iter().filter(|x| **x == 1.0).count(), 1);
        }

        // stars and bars: C(6, 2) = 15
        assert_eq!(type_lattice(3, 4).unwrap().len(), 15);
    }

    #[test]
    fn lattice_count_formula() {
        for (d, n) in [(2, 10), (3, 7), (4, 5), (5, 4)] {
            let l = type_lattice(d, n).unwrap();
            assert_eq!(l.len() as u128, type_count(d, n));
            for p in &l {
                assert!(ProbVector::new(p.entries().to_vec()).is_ok());
            }
        }
    }

    #[test]
    fn lattice_cap_enforced() {
        let err = type_lattice_with_cap(4, 200, 1000).unwrap_err();
        assert!(matches!(err, Error::LatticeCapExceeded { .. }));
    }

    #[test]
    fn sample_singleton() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let s = ParamSpace::Singleton(vec![0.2, 0.8]);
        assert_eq!(s.sample(&mut rng).unwrap(), vec![0.2, 0.8]);
    }

    #[test]
    fn sample_simplex_symmetry() {
        // uniform law on Delta_2: first coordinate has mean 1/2
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let s = ParamSpace::simplex_with_floor(2, 0.0).unwrap();
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += s.sample(&mut rng).unwrap()[0];
        }
        assert!((acc / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sample_respects_floor() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let s = ParamSpace::simplex_with_floor(8, 0.05).unwrap();
        for _ in 0..200 {
            let p = s.sample(&mut rng).unwrap();
            assert!(p.iter().all(|x| *x >= 0.05));
        }
    }

    #[test]
    fn sample_budget_exhausts_on_tight_floor() {
        // eps*d = 0.9995 leaves nearly no slack; rejection cannot succeed
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let s = ParamSpace::simplex_with_floor(5, 0.1999).unwrap();
        assert!(matches!(
            s.sample(&mut rng),
            Err(Error::RejectionBudgetExhausted { .. })
        ));
    }

    #[test]
    fn stationary_pair_sampling_and_projection() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let sp = ParamSpace::stationary_pairs(2, 0.01).unwrap();
        for _ in 0..50 {
            let t = sp.sample(&mut rng).unwrap();
            assert!(sp.contains(&t, 1e-9), "sampled point not in space: {t:?}");
            ProbMatrix::stationary_pair(2, t).unwrap();
        }
        // projection of an arbitrary vector lands in the set
        for _ in 0..50 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..1.5)).collect();
            let p = sp.project(&v).unwrap();
            assert!(sp.contains(&p, 1e-7), "projection left the set: {p:?}");
        }
    }

    #[test]
    fn box_simplex_projection_feasible() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let space = DecisionSpace::box_simplex(-1.0, 1.0, 3).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p = space.project(&v);
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
            assert!(p.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    proptest! {
        #[test]
        fn prob_vector_rejects_bad_sums(scale in 0.5f64..1.49) {
            let v = vec![0.25 * scale, 0.75 * scale];
            let ok = ProbVector::new(v).is_ok();
            prop_assert_eq!(ok, (scale - 1.0).abs() < 1e-12);
        }

        #[test]
        fn simplex_projection_stays_feasible(
            a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0
        ) {
            let p = project_simplex(&[a, b, c], 0.01).unwrap();
            prop_assert!(p.min_entry() >= 0.01 - 1e-12);
            let s: f64 = p.entries().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
