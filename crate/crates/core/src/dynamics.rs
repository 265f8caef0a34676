//! Blocking vehicle: kinematic bicycle in curvilinear coordinates driven by a
//! PD heading controller that mirrors the follower's lateral position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::track::TrackModel;

/// Vehicle state relative to the reference line. `s`/`n` locate the rear
/// axle, `heading` is the orientation relative to the reference line.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvilinearState<F> {
    pub s: F,
    pub n: F,
    pub heading: F,
    pub speed: F,
    pub steer: F,
}

impl<F: Scalar> CurvilinearState<F> {
    pub fn new(s: F, n: F, heading: F, speed: F, steer: F) -> Self {
        Self {
            s,
            n,
            heading,
            speed,
            steer,
        }
    }

    /// Same state reflected across the reference line.
    pub fn mirrored(&self) -> Self {
        Self {
            n: -self.n,
            heading: -self.heading,
            steer: -self.steer,
            ..*self
        }
    }
}

/// How the controller estimates the heading error rate between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDerivative {
    /// `e - e_prev`: the derivative gain acts on the change per control step.
    #[default]
    StepDifference,
    /// `(e - e_prev) / dt`. At 50 m/s and dt = 0.1 this loop is unstable
    /// for every lookahead in the evaluation grid.
    BackwardDifference,
}

impl ErrorDerivative {
    pub fn estimate<F: Scalar>(self, error: F, prev_error: F, dt: F) -> F {
        match self {
            ErrorDerivative::StepDifference => error - prev_error,
            ErrorDerivative::BackwardDifference => (error - prev_error) / dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockingParams<F> {
    /// Proportional gain on the heading error (1/s).
    pub kp: F,
    /// Derivative gain on the heading error.
    pub kd: F,
    /// Weight of the lateral velocity difference in the desired offset (s).
    pub kn: F,
    /// Lookahead distance; smaller values block more aggressively.
    pub lookahead: F,
    pub rear_axle: F,
    pub front_axle: F,
    pub max_steer: F,
    pub max_steer_rate: F,
    pub accel: F,
    pub derivative: ErrorDerivative,
}

impl<F: Scalar> Default for BlockingParams<F> {
    fn default() -> Self {
        Self {
            kp: F::lit(0.05),
            kd: F::lit(0.6),
            kn: F::lit(1.0),
            lookahead: F::lit(80.0),
            rear_axle: F::lit(1.72),
            front_axle: F::lit(1.25),
            max_steer: F::lit(0.43),
            max_steer_rate: F::lit(0.39),
            accel: F::zero(),
            derivative: ErrorDerivative::default(),
        }
    }
}

impl<F: Scalar> BlockingParams<F> {
    pub fn with_lookahead(lookahead: F) -> Self {
        Self {
            lookahead,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.lookahead,
            self.rear_axle,
            self.front_axle,
            self.max_steer,
            self.max_steer_rate,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > F::zero())) {
            return Err(Error::InvalidParameter(
                "lookahead, axle distances and steering limits must be positive".into(),
            ));
        }
        if [self.kp, self.kd, self.kn, self.accel].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("controller gains must be finite".into()));
        }
        Ok(())
    }
}

/// Desired heading `atan((dn + kn * dn_dot) / lookahead)` where `dn` and
/// `dn_dot` are the follower's lateral position and velocity minus the
/// blocker's.
pub fn desired_heading<F: Scalar>(dn: F, dn_dot: F, params: &BlockingParams<F>) -> F {
    let offset = dn + params.kn * dn_dot;
    (offset / params.lookahead).atan()
}

/// `kp * error + kd * error_rate`, clipped to the rate limit.
pub fn pd_steering_rate<F: Scalar>(error: F, error_rate: F, params: &BlockingParams<F>) -> F {
    let raw = params.kp * error + params.kd * error_rate;
    raw.clamp_to(-params.max_steer_rate, params.max_steer_rate)
}

/// PD steering rate from the current heading, the previous heading error and
/// the desired heading, using the configured derivative estimate.
pub fn steering_rate<F: Scalar>(heading: F, prev_error: F, desired: F, dt: F, params: &BlockingParams<F>) -> F {
    let error = desired - heading;
    let error_rate = params.derivative.estimate(error, prev_error, dt);
    pd_steering_rate(error, error_rate, params)
}

#[inline]
pub fn lateral_velocity<F: Scalar>(state: &CurvilinearState<F>) -> F {
    state.speed * state.heading.sin()
}

/// Progress rate along the reference line.
#[inline]
pub fn longitudinal_velocity<F: Scalar>(state: &CurvilinearState<F>, track: &TrackModel<F>) -> F {
    let kappa = track.reference_curvature(state.s);
    state.speed * state.heading.cos() / (F::one() - state.n * kappa)
}

/// Body slip angle at the centre of gravity.
#[inline]
pub fn slip_angle<F: Scalar>(steer: F, params: &BlockingParams<F>) -> F {
    let ratio = params.rear_axle / (params.rear_axle + params.front_axle);
    (ratio * steer.tan()).atan()
}

/// One forward Euler step of the kinematic bicycle. The steering rate is
/// clipped before it is applied and the steering angle after the update.
pub fn step<F: Scalar>(
    state: &CurvilinearState<F>,
    steer_rate: F,
    accel: F,
    dt: F,
    track: &TrackModel<F>,
    params: &BlockingParams<F>,
) -> CurvilinearState<F> {
    let steer_rate = steer_rate.clamp_to(-params.max_steer_rate, params.max_steer_rate);
    let kappa = track.reference_curvature(state.s);
    let frame = F::one() - state.n * kappa;
    let (sin_h, cos_h) = state.heading.sin_cos();
    let beta = slip_angle(state.steer, params);

    let s_dot = state.speed * cos_h / frame;
    let n_dot = state.speed * sin_h;
    let heading_dot = state.speed / params.rear_axle * beta.sin() - state.speed * cos_h * kappa / frame;

    let steer = (state.steer + dt * steer_rate).clamp_to(-params.max_steer, params.max_steer);
    CurvilinearState {
        s: state.s + dt * s_dot,
        n: state.n + dt * n_dot,
        heading: state.heading + dt * heading_dot,
        speed: state.speed + dt * accel,
        steer,
    }
}

/// Stateful wrapper that carries the previous heading error between steps.
#[derive(Debug, Clone)]
pub struct BlockingController<F> {
    params: BlockingParams<F>,
    prev_error: Option<F>,
}

impl<F: Scalar> BlockingController<F> {
    pub fn new(params: BlockingParams<F>) -> Self {
        Self {
            params,
            prev_error: None,
        }
    }

    pub fn params(&self) -> &BlockingParams<F> {
        &self.params
    }

    /// Steering rate that turns the blocker towards the follower at lateral
    /// position `target_n` moving with lateral velocity `target_n_dot`.
    /// On the first call the error derivative is taken as zero.
    pub fn command(&mut self, own: &CurvilinearState<F>, target_n: F, target_n_dot: F, dt: F) -> F {
        let dn = target_n - own.n;
        let dn_dot = target_n_dot - lateral_velocity(own);
        let desired = desired_heading(dn, dn_dot, &self.params);
        let error = desired - own.heading;
        let prev = self.prev_error.unwrap_or(error);
        self.prev_error = Some(error);
        steering_rate(own.heading, prev, desired, dt, &self.params)
    }

    /// Computes the command and applies one Euler step.
    pub fn advance(
        &mut self,
        own: &CurvilinearState<F>,
        target_n: F,
        target_n_dot: F,
        dt: F,
        track: &TrackModel<F>,
    ) -> CurvilinearState<F> {
        let rate = self.command(own, target_n, target_n_dot, dt);
        step(own, rate, self.params.accel, dt, track, &self.params)
    }
}

/// Lateral positions of a blocker that starts on the reference line at
/// `speed` and tracks a follower held at constant lateral offset `target`.
pub fn step_response<F: Scalar>(
    params: &BlockingParams<F>,
    target: F,
    speed: F,
    dt: F,
    steps: usize,
    track: &TrackModel<F>,
) -> Vec<F> {
    let mut controller = BlockingController::new(*params);
    let mut state = CurvilinearState::new(F::zero(), F::zero(), F::zero(), speed, F::zero());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.n);
    for _ in 0..steps {
        state = controller.advance(&state, target, F::zero(), dt, track);
        out.push(state.n);
    }
    out
}

/// Time at which a response first reaches `fraction` of `target`.
pub fn rise_time<F: Scalar>(response: &[F], target: F, fraction: F, dt: F) -> Option<F> {
    response
        .iter()
        .position(|&n| n * target.signum() >= fraction * target.abs())
        .map(F::from_index)
        .map(|k| k * dt)
}
