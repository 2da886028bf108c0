//! The two-parameter penalty family, defined through its inverse
//! `(1/beta) (exp(beta y) - 1) + alpha y`, with forward evaluation by
//! root-finding and derivative support for gradient ascent.

use crate::error::{Error, Result};
use crate::rate::ExtReal;

/// Argument beyond which `exp` overflows an f64; evaluations saturate there.
const EXP_OVERFLOW: f64 = 700.0;

/// Increasing bijection `l` on the reals with `l(0) = 0`, parameterized via
/// its inverse. Larger `beta` with small `alpha` behaves like a hard
/// feasibility cut (DRO-like); large `alpha` and `beta` approach plug-in
/// behavior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    alpha: f64,
    beta: f64,
}

impl Penalty {
    /// Requires `alpha > 0` and `beta > 0`; with `alpha = 0` the inverse is
    /// bounded below by `-1/beta` and the forward map is no longer a
    /// bijection on the reals.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The one-parameter family used throughout the experiments:
    /// `alpha = beta`.
    pub fn symmetric(beta: f64) -> Result<Self> {
        Self::new(beta, beta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `l^{-1}(y) = (1/beta)(exp(beta y) - 1) + alpha y` for finite `y`;
    /// infinities map to themselves. Overflow saturates to `+inf` with a
    /// logged warning; only the ordering of values matters downstream.
    pub fn inverse(&self, y: ExtReal) -> ExtReal {
        match y {
            ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::NegInf => ExtReal::NegInf,
            ExtReal::Finite(y) => {
                let by = self.beta * y;
                if by > EXP_OVERFLOW {
                    log::warn!(
                        "penalty inverse overflow: beta*y = {by:.3e} > {EXP_OVERFLOW}, saturating"
                    );
                    return ExtReal::PosInf;
                }
                ExtReal::Finite((by.exp() - 1.0) / self.beta + self.alpha * y)
            }
        }
    }

    /// Finite-argument shortcut for `inverse`.
    pub fn inverse_f(&self, y: f64) -> f64 {
        match self.inverse(ExtReal::Finite(y)) {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::MAX,
            ExtReal::NegInf => f64::MIN,
        }
    }

    /// `(l^{-1})'(y) = exp(beta y) + alpha > 0`, saturated near overflow.
    pub fn inverse_derivative(&self, y: f64) -> f64 {
        let by = self.beta * y;
        if by > EXP_OVERFLOW {
            log::warn!("penalty derivative overflow: beta*y = {by:.3e}, saturating");
            return f64::MAX;
        }
        by.exp() + self.alpha
    }

    /// Forward evaluation `l(v)`: the unique root of `l^{-1}(y) = v`,
    /// bracketed by geometric growth and polished by safeguarded Newton
    /// steps to `|l^{-1}(y) - v| <= 1e-12 (1 + |v|)`.
    pub fn forward(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        let f = |y: f64| self.inverse_f(y) - v;
        // grow a sign-changing bracket from 0
        let (mut lo, mut hi);
        if v > 0.0 {
            lo = 0.0;
            hi = 1.0;
            while f(hi) < 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    break;
                }
            }
        } else {
            hi = 0.0;
            lo = -1.0;
            while f(lo) > 0.0 {
                lo *= 2.0;
                if lo < -1e12 {
                    break;
                }
            }
        }
        let tol = 1e-12 * (1.0 + v.abs());
        let mut y = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fy = f(y);
            if fy.abs() <= tol {
                return y;
            }
            if fy > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let dy = self.inverse_derivative(y);
            let newton = y - fy / dy;
            y = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(Penalty::new(0.0, 1.0).is_err());
        assert!(Penalty::new(-0.1, 1.0).is_err());
        assert!(Penalty::new(1.0, 0.0).is_err());
        assert!(Penalty::new(1.0, -2.0).is_err());
    }

    #[test]
    fn inverse_at_zero_is_zero() {
        let p = Penalty::new(0.7, 2.3).unwrap();
        assert_eq!(p.inverse_f(0.0), 0.0);
    }

    #[test]
    fn inverse_example_e() {
        // alpha = beta = 1, y = 1: (e - 1) + 1 = e
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert!((p.inverse_f(1.0) - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn inverse_maps_infinities() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.inverse(ExtReal::PosInf), ExtReal::PosInf);
        assert_eq!(p.inverse(ExtReal::NegInf), ExtReal::NegInf);
    }

    #[test]
    fn inverse_saturates_on_overflow() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.inverse(ExtReal::Finite(800.0)), ExtReal::PosInf);
    }

    #[test]
    fn forward_examples() {
        let p = Penalty::new(1.0, 1.0).unwrap();
        assert_eq!(p.forward(0.0), 0.0);
        assert!((p.forward(std::f64::consts::E) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let p = Penalty::new(0.4, 1.7).unwrap();
        let mut y = -10.0;
        for _ in 0..100 {
            let v = p.inverse_f(y);
            assert!((p.forward(v) - y).abs() < 1e-9, "roundtrip failed at {y}");
            y += 0.2;
        }
    }

    #[test]
    fn symmetric_family_is_alpha_eq_beta() {
        let p = Penalty::symmetric(0.5).unwrap();
        assert_eq!(p.alpha(), 0.5);
        assert_eq!(p.beta(), 0.5);
        // (1/b)(e^{b y} - 1) + b y at y = 2, b = 0.5
        let expect = (0.5f64 * 2.0).exp_m1() / 0.5 + 0.5 * 2.0;
        assert!((p.inverse_f(2.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = Penalty::new(2.0, 0.8).unwrap();
        let h = 1e-6;
        for &y in &[-5.0, -1.0, 0.0, 0.3, 2.0, 7.5] {
            let fd = (p.inverse_f(y + h) - p.inverse_f(y - h)) / (2.0 * h);
            let an = p.inverse_derivative(y);
            assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()));
        }
    }

    proptest! {
        #[test]
        fn strictly_increasing(y1 in -40.0f64..40.0, gap in 1e-6f64..5.0) {
            let p = Penalty::new(0.9, 0.6).unwrap();
            prop_assert!(p.inverse_f(y1) < p.inverse_f(y1 + gap));
        }

        #[test]
        fn forward_solves_inverse(v in -30.0f64..30.0) {
            let p = Penalty::new(1.3, 0.4).unwrap();
            let y = p.forward(v);
            prop_assert!((p.inverse_f(y) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
}
