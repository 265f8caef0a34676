//! Jerk-minimal connecting polynomials.
//!
//! The lateral motion uses a quintic (position, velocity and acceleration
//! fixed at both ends). The longitudinal motion uses a quartic because the
//! end position is left free. In both cases `c0..c2` follow directly from
//! the start state and the remaining coefficients are eliminated in closed
//! form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Position and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Kinematics<F> {
    pub pos: F,
    pub vel: F,
    pub acc: F,
}

impl<F: Scalar> Kinematics<F> {
    pub fn new(pos: F, vel: F, acc: F) -> Self {
        Self { pos, vel, acc }
    }
}

/// Evaluates position, velocity, acceleration and jerk of `sum c_i t^i`.
#[inline]
pub fn eval_derivatives<F: Scalar>(coeffs: &[F], t: F) -> [F; 4] {
    let mut p = F::zero();
    let mut v = F::zero();
    let mut a = F::zero();
    let mut j = F::zero();
    for &c in coeffs.iter().rev() {
        j = j * t + a;
        a = a * t + v;
        v = v * t + p;
        p = p * t + c;
    }
    // p, v, a, j now hold f, f', f''/2, f'''/6
    [p, v, a * F::two(), j * F::lit(6.0)]
}

fn check_horizon<F: Scalar>(horizon: F) -> Result<()> {
    if horizon.is_finite() && horizon > F::zero() {
        Ok(())
    } else {
        Err(Error::InvalidHorizon(horizon.to_f64().unwrap_or(f64::NAN)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuinticCurve<F> {
    pub coeffs: [F; 6],
    pub horizon: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCurve<F> {
    pub coeffs: [F; 5],
    pub horizon: F,
}

/// Common evaluation surface of the connecting curves.
pub trait Curve<F: Scalar> {
    fn coefficients(&self) -> &[F];
    fn horizon(&self) -> F;

    #[inline]
    fn kinematics(&self, t: F) -> Kinematics<F> {
        let [p, v, a, _] = eval_derivatives(self.coefficients(), t);
        Kinematics::new(p, v, a)
    }

    #[inline]
    fn position(&self, t: F) -> F {
        self.kinematics(t).pos
    }

    #[inline]
    fn jerk(&self, t: F) -> F {
        eval_derivatives(self.coefficients(), t)[3]
    }
}

impl<F: Scalar> Curve<F> for QuinticCurve<F> {
    fn coefficients(&self) -> &[F] {
        &self.coeffs
    }
    fn horizon(&self) -> F {
        self.horizon
    }
}

impl<F: Scalar> Curve<F> for QuarticCurve<F> {
    fn coefficients(&self) -> &[F] {
        &self.coeffs
    }
    fn horizon(&self) -> F {
        self.horizon
    }
}

/// Unique quintic with `n(0), n'(0), n''(0)` from `start` and
/// `n(T), n'(T), n''(T)` from `end`.
pub fn solve_quintic<F: Scalar>(start: Kinematics<F>, end: Kinematics<F>, horizon: F) -> Result<QuinticCurve<F>> {
    check_horizon(horizon)?;
    let t = horizon;
    let t2 = t * t;
    let t3 = t2 * t;
    let c0 = start.pos;
    let c1 = start.vel;
    let c2 = start.acc * F::half();
    // residuals left for the cubic..quintic terms
    let dp = end.pos - (c0 + c1 * t + c2 * t2);
    let dv = end.vel - (c1 + F::two() * c2 * t);
    let da = end.acc - F::two() * c2;
    let c3 = (F::lit(10.0) * dp - F::lit(4.0) * dv * t + F::half() * da * t2) / t3;
    let c4 = (F::lit(-15.0) * dp + F::lit(7.0) * dv * t - da * t2) / (t3 * t);
    let c5 = (F::lit(6.0) * dp - F::lit(3.0) * dv * t + F::half() * da * t2) / (t3 * t2);
    Ok(QuinticCurve {
        coeffs: [c0, c1, c2, c3, c4, c5],
        horizon,
    })
}

/// Unique quartic with `s(0), s'(0), s''(0)` from `start` and
/// `s'(T) = end_vel`, `s''(T) = end_acc`; the end position is free.
pub fn solve_quartic<F: Scalar>(start: Kinematics<F>, end_vel: F, end_acc: F, horizon: F) -> Result<QuarticCurve<F>> {
    check_horizon(horizon)?;
    let t = horizon;
    let t2 = t * t;
    let c0 = start.pos;
    let c1 = start.vel;
    let c2 = start.acc * F::half();
    let dv = end_vel - (c1 + F::two() * c2 * t);
    let da = end_acc - F::two() * c2;
    let c3 = dv / t2 - da / (F::lit(3.0) * t);
    let c4 = da / (F::lit(4.0) * t2) - dv / (F::two() * t2 * t);
    Ok(QuarticCurve {
        coeffs: [c0, c1, c2, c3, c4],
        horizon,
    })
}
