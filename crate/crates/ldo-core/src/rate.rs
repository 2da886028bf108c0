//! Rate functions `I : Theta x Z -> [0, inf]` driving the Laplace-principle
//! regularization, with effective-domain queries and theta-gradients where
//! finite.

use crate::error::{Error, Result};
use crate::linalg::{dist2, SpdMatrix};
use crate::spaces::{project_l2_ball, project_simplex_raw};

/// Extended real line with tagged infinities. Infinite rate values are never
/// pushed through arithmetic; the solver drops them from maxima instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The finite payload; panics on infinities.
    pub fn finite(&self) -> f64 {
        match self {
            ExtReal::Finite(v) => *v,
            other => panic!("expected finite extended real, got {other:?}"),
        }
    }

    /// Total order with `NegInf < finite < PosInf`.
    pub fn cmp_total(&self, other: &ExtReal) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Equal,
            (NegInf, _) | (_, PosInf) => Less,
            (_, NegInf) | (PosInf, _) => Greater,
            (Finite(a), Finite(b)) => a.total_cmp(b),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

/// Region of parameters with finite rate value at a fixed observation; lets
/// the solver confine the inner maximization.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveDomain {
    /// Finite everywhere on Theta.
    AllOfTheta,
    /// Finite only at one point (the limiting law of large numbers case).
    Singleton(Vec<f64>),
    /// Finite exactly on a metric ball around the observation.
    Ball { center: Vec<f64>, radius: f64 },
    /// Finite iff the parameter's support covers the observation's support.
    PositiveSupportMatch,
}

/// The rate functions used by the decision framework.
#[derive(Debug, Clone)]
pub enum RateFunction {
    /// 0 at `z = theta` (exact representation match), `+inf` elsewhere.
    Lln,
    /// 0 on the closed L2 ball `d(z, theta) <= radius`, `+inf` outside.
    RllnBall { radius: f64 },
    /// Relative entropy `sum_i z_i log(z_i / theta_i)`.
    RelEntropy,
    /// `inf` of the relative entropy over an L2 ball around theta,
    /// intersected with the floored simplex.
    RobustRelEntropy { radius: f64, floor: f64 },
    /// Quadratic `(theta - z)' Sigma^{-1} (theta - z) / 2` for Gaussian
    /// empirical means with known covariance.
    GaussianCramer { sigma: SpdMatrix },
    /// Conditional relative entropy between pair measures (Markov chains);
    /// theta and z are `dim x dim`, flattened row-major.
    CondRelEntropy { dim: usize },
}

impl RateFunction {
    pub fn robust_rel_entropy(radius: f64, floor: f64) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "robust radius must be nonnegative, got {radius}"
            )));
        }
        if floor <= 0.0 {
            return Err(Error::InvalidArgument(
                "robust relative entropy requires a positive simplex floor".into(),
            ));
        }
        Ok(RateFunction::RobustRelEntropy { radius, floor })
    }

    /// Evaluates `I_theta(z)`.
    pub fn eval(&self, theta: &[f64], z: &[f64]) -> Result<ExtReal> {
        if theta.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                got: z.len(),
            });
        }
        Ok(match self {
            RateFunction::Lln => {
                if theta == z {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            RateFunction::RllnBall { radius } => {
                if dist2(theta, z) <= *radius {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            RateFunction::RelEntropy => rel_entropy(theta, z)?,
            RateFunction::RobustRelEntropy { radius, floor } => {
                robust_rel_entropy(theta, z, *radius, *floor)?
            }
            RateFunction::GaussianCramer { sigma } => {
                ExtReal::Finite(gaussian_rate(theta, z, sigma)?)
            }
            RateFunction::CondRelEntropy { dim } => {
                ExtReal::Finite(cond_rel_entropy(theta, z, *dim)?)
            }
        })
    }

    /// Gradient of `theta -> I_theta(z)` where defined. Degenerate rates
    /// (LLN / RLLN) are never differentiated; the solver consumes
    /// `effective_domain` for those instead.
    pub fn grad_theta(&self, theta: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        match self {
            RateFunction::Lln | RateFunction::RllnBall { .. } => Err(Error::InvalidArgument(
                "degenerate rate functions have no gradient".into(),
            )),
            RateFunction::RelEntropy => rel_entropy_grad_theta(theta, z),
            RateFunction::RobustRelEntropy { .. } => Err(Error::InvalidArgument(
                "robust relative entropy is maximized through its ball lift, not a gradient"
                    .into(),
            )),
            RateFunction::GaussianCramer { sigma } => {
                if theta.len() != sigma.dim() || z.len() != sigma.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: sigma.dim(),
                        got: theta.len(),
                    });
                }
                let diff: Vec<f64> = theta.iter().zip(z).map(|(t, w)| t - w).collect();
                Ok(sigma.solve(&diff))
            }
            RateFunction::CondRelEntropy { dim } => cond_rel_entropy_grad_theta(theta, z, *dim),
        }
    }

    /// Whether `theta -> I_theta(z)` is convex, enabling single-start
    /// concave ascent in the inner maximization when the objective is
    /// concave in theta.
    pub fn is_theta_convex(&self) -> bool {
        match self {
            RateFunction::RelEntropy
            | RateFunction::RobustRelEntropy { .. }
            | RateFunction::GaussianCramer { .. } => true,
            // indicator of a convex set: convex
            RateFunction::Lln | RateFunction::RllnBall { .. } => true,
            // conditional transitions enter through a ratio; no convexity
            // guarantee in the pair measure
            RateFunction::CondRelEntropy { .. } => false,
        }
    }

    /// The finiteness region at `z`, given the parameter-space floor
    /// (minimum entry of any feasible theta, zero if unfloored).
    pub fn effective_domain(&self, z: &[f64], theta_floor: f64) -> EffectiveDomain {
        match self {
            RateFunction::Lln => EffectiveDomain::Singleton(z.to_vec()),
            RateFunction::RllnBall { radius } => EffectiveDomain::Ball {
                center: z.to_vec(),
                radius: *radius,
            },
            RateFunction::RelEntropy => {
                if theta_floor > 0.0 {
                    EffectiveDomain::AllOfTheta
                } else {
                    EffectiveDomain::PositiveSupportMatch
                }
            }
            RateFunction::RobustRelEntropy { .. } => EffectiveDomain::AllOfTheta,
            RateFunction::GaussianCramer { .. } => EffectiveDomain::AllOfTheta,
            RateFunction::CondRelEntropy { .. } => EffectiveDomain::AllOfTheta,
        }
    }
}

/// Relative entropy `sum_i z_i log(z_i / theta_i)` with the conventions
/// `0 log 0 = 0` and `0 log(0/0) = 0`; `+inf` iff some `theta_i = 0 < z_i`.
pub fn rel_entropy(theta: &[f64], z: &[f64]) -> Result<ExtReal> {
    if theta.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: z.len(),
        });
    }
    let mut acc = 0.0;
    for (t, w) in theta.iter().zip(z) {
        if *w > 0.0 {
            if *t <= 0.0 {
                return Ok(ExtReal::PosInf);
            }
            acc += w * (w / t).ln();
        }
    }
    Ok(ExtReal::Finite(acc.max(0.0)))
}

/// `d/d theta_i sum_j z_j log(z_j/theta_j) = -z_i / theta_i`.
pub fn rel_entropy_grad_theta(theta: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: z.len(),
        });
    }
    if theta.iter().any(|t| *t <= 0.0) {
        return Err(Error::InvalidArgument(
            "relative entropy gradient needs strictly positive theta".into(),
        ));
    }
    Ok(theta.iter().zip(z).map(|(t, w)| -w / t).collect())
}

/// `inf` of `rel_entropy(theta', z)` over `theta'` in the closed L2 ball of
/// radius `radius` around `theta`, intersected with the floored simplex.
///
/// Convex minimization: projected gradient descent with a per-iterate
/// curvature-based step and backtracking; the ball-and-simplex projection is
/// Dykstra alternation (both sets convex, so the method converges to the
/// exact projection).
pub fn robust_rel_entropy(theta: &[f64], z: &[f64], radius: f64, floor: f64) -> Result<ExtReal> {
    if theta.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: z.len(),
        });
    }
    if radius == 0.0 {
        return rel_entropy(theta, z);
    }
    let project = |v: &[f64]| project_ball_simplex(v, theta, radius, floor);
    let start = project(theta);
    if dist2(&start, theta) > radius + 1e-7 {
        return Err(Error::EmptyAmbiguitySet(format!(
            "ball of radius {radius} around theta misses the floored simplex"
        )));
    }
    // early exit: z itself feasible means the infimum is zero
    let zp = project(z);
    if dist2(&zp, z) < 1e-12 {
        return Ok(ExtReal::Finite(0.0));
    }
    let mut cur = start;
    let mut val = match rel_entropy(&cur, z)? {
        ExtReal::Finite(v) => v,
        inf => return Ok(inf),
    };
    for _ in 0..500 {
        let grad = rel_entropy_grad_theta(&cur, z)?;
        // local curvature of the objective is diag(z_i / theta_i^2)
        let lip = cur
            .iter()
            .zip(z)
            .map(|(t, w)| w / (t * t))
            .fold(0.0f64, f64::max)
            .max(1e-9);
        let mut step = 1.0 / lip;
        let mut moved = 0.0;
        for _ in 0..40 {
            let trial: Vec<f64> = cur.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let proj = project(&trial);
            if let ExtReal::Finite(v) = rel_entropy(&proj, z)? {
                if v < val {
                    moved = dist2(&proj, &cur);
                    cur = proj;
                    val = v;
                    break;
                }
            }
            step *= 0.5;
        }
        if moved < 1e-10 {
            break;
        }
    }
    Ok(ExtReal::Finite(val.max(0.0)))
}

/// Dykstra alternation between the closed ball and the floored simplex.
pub(crate) fn project_ball_simplex(
    v: &[f64],
    center: &[f64],
    radius: f64,
    floor: f64,
) -> Vec<f64> {
    let d = v.len();
    let mut x = v.to_vec();
    let mut p = vec![0.0; d];
    let mut q = vec![0.0; d];
    for _ in 0..100 {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = project_simplex_raw(&xp, floor).unwrap_or_else(|_| vec![1.0 / d as f64; d]);
        for i in 0..d {
            p[i] = xp[i] - y[i];
        }
        let yq: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let x_next = project_l2_ball(&yq, center, radius).expect("dims match");
        let mut moved = 0.0;
        for i in 0..d {
            q[i] = yq[i] - x_next[i];
            moved += (x_next[i] - x[i]).abs();
        }
        x = x_next;
        if moved < 1e-15 {
            break;
        }
    }
    // finish on the simplex so rate evaluations stay in-domain
    project_simplex_raw(&x, floor).unwrap_or_else(|_| vec![1.0 / d as f64; d])
}

/// `(theta - z)' Sigma^{-1} (theta - z) / 2`.
pub fn gaussian_rate(theta: &[f64], z: &[f64], sigma: &SpdMatrix) -> Result<f64> {
    if theta.len() != sigma.dim() || z.len() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            got: theta.len().max(z.len()),
        });
    }
    let diff: Vec<f64> = theta.iter().zip(z).map(|(t, w)| t - w).collect();
    Ok(0.5 * sigma.inv_quad_form(&diff))
}

/// Conditional relative entropy between pair measures:
/// `sum_ij z_ij (log(z_ij / zrow_i) - log(theta_ij / trow_i))` with the
/// `0 log 0` conventions applied row-wise; rows with zero z-mass contribute
/// nothing.
pub fn cond_rel_entropy(theta: &[f64], z: &[f64], dim: usize) -> Result<f64> {
    let n = dim * dim;
    if theta.len() != n || z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len().max(z.len()),
        });
    }
    if theta.iter().any(|t| *t <= 0.0) {
        return Err(Error::InvalidArgument(
            "conditional relative entropy requires strictly positive theta entries".into(),
        ));
    }
    let mut acc = 0.0;
    for i in 0..dim {
        let zr: f64 = z[i * dim..(i + 1) * dim].iter().sum();
        if zr <= 0.0 {
            continue;
        }
        let tr: f64 = theta[i * dim..(i + 1) * dim].iter().sum();
        for j in 0..dim {
            let zij = z[i * dim + j];
            if zij > 0.0 {
                acc += zij * ((zij / zr).ln() - (theta[i * dim + j] / tr).ln());
            }
        }
    }
    Ok(acc.max(0.0))
}

/// Gradient of the conditional relative entropy in theta:
/// `-z_ij/theta_ij + zrow_i/trow_i` per entry.
pub fn cond_rel_entropy_grad_theta(theta: &[f64], z: &[f64], dim: usize) -> Result<Vec<f64>> {
    let n = dim * dim;
    if theta.len() != n || z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len().max(z.len()),
        });
    }
    let mut g = vec![0.0; n];
    for i in 0..dim {
        let zr: f64 = z[i * dim..(i + 1) * dim].iter().sum();
        if zr <= 0.0 {
            continue;
        }
        let tr: f64 = theta[i * dim..(i + 1) * dim].iter().sum();
        for j in 0..dim {
            g[i * dim + j] = -z[i * dim + j] / theta[i * dim + j] + zr / tr;
        }
    }
    Ok(g)
}
