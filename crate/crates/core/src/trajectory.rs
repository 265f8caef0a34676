//! Time-discretized trajectories assembled from a lateral and a longitudinal
//! curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{Curve, Kinematics, QuarticCurve, QuinticCurve};
use crate::scalar::Scalar;
use crate::track::TrackModel;

/// Below this speed (m/s) heading-dependent quantities are not defined:
/// curvature and lateral acceleration are reported as zero.
pub const SPEED_EPSILON: f64 = 0.1;

/// `points` equidistant samples covering `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<F> {
    pub horizon: F,
    pub points: usize,
}

impl<F: Scalar> Default for TimeGrid<F> {
    fn default() -> Self {
        Self {
            horizon: F::lit(2.5),
            points: 51,
        }
    }
}

impl<F: Scalar> TimeGrid<F> {
    pub fn new(horizon: F, points: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > F::zero()) || points < 2 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs a positive horizon and at least two points (got {horizon}, {points})"
            )));
        }
        Ok(Self { horizon, points })
    }

    /// Sample spacing `T / (N - 1)`.
    #[inline]
    pub fn spacing(&self) -> F {
        self.horizon / F::from_index(self.points - 1)
    }

    #[inline]
    pub fn time(&self, k: usize) -> F {
        self.spacing() * F::from_index(k)
    }

    pub fn times(&self) -> Vec<F> {
        (0..self.points).map(|k| self.time(k)).collect()
    }
}

/// Longitudinal and lateral kinematics in the curvilinear frame:
/// `[s, s', s'', n, n', n'']`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState<F> {
    pub lon: Kinematics<F>,
    pub lat: Kinematics<F>,
}

impl<F: Scalar> FrenetState<F> {
    pub fn new(lon: Kinematics<F>, lat: Kinematics<F>) -> Self {
        Self { lon, lat }
    }

    /// Vehicle at `(s, n)` moving along the reference line at `speed`.
    pub fn cruising(s: F, n: F, speed: F) -> Self {
        Self {
            lon: Kinematics::new(s, speed, F::zero()),
            lat: Kinematics::new(n, F::zero(), F::zero()),
        }
    }

    pub fn speed(&self) -> F {
        self.lon.vel.hypot(self.lat.vel)
    }

    /// Orientation relative to the reference line.
    pub fn heading(&self) -> F {
        self.lat.vel.atan2(self.lon.vel)
    }

    pub fn mirrored(&self) -> Self {
        Self {
            lon: self.lon,
            lat: Kinematics::new(-self.lat.pos, -self.lat.vel, -self.lat.acc),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryPoint<F> {
    pub t: F,
    pub s: F,
    pub s_dot: F,
    pub s_ddot: F,
    pub n: F,
    pub n_dot: F,
    pub n_ddot: F,
    pub x: F,
    pub y: F,
    pub heading: F,
    pub curvature: F,
    pub speed: F,
    pub accel_lon: F,
    pub accel_lat: F,
}

impl<F: Scalar> TrajectoryPoint<F> {
    /// Derives the Cartesian channels from curvilinear kinematics at time `t`.
    ///
    /// On the straight reference line the Cartesian velocity and
    /// acceleration are the curvilinear ones rotated by the constant
    /// reference heading, so speed, curvature and the acceleration split are
    /// computed directly from `(s', n')` and `(s'', n'')`.
    #[inline]
    pub fn from_kinematics(t: F, lon: Kinematics<F>, lat: Kinematics<F>, track: &TrackModel<F>) -> Self {
        let mut p = Self::without_pose(t, lon, lat);
        let (x, y) = track.to_cartesian(lon.pos, lat.pos);
        p.x = x;
        p.y = y;
        p.heading = track.reference_heading(lon.pos) + lat.vel.atan2(lon.vel);
        p
    }

    /// Every channel except `x`, `y` and `heading`, which are left at zero.
    /// Feasibility checks and costs never read those three.
    #[inline]
    pub(crate) fn without_pose(t: F, lon: Kinematics<F>, lat: Kinematics<F>) -> Self {
        let vx = lon.vel;
        let vy = lat.vel;
        let ax = lon.acc;
        let ay = lat.acc;
        let speed = (vx * vx + vy * vy).sqrt();
        let (curvature, accel_lon, accel_lat) = if speed > F::lit(SPEED_EPSILON) {
            let cross = vx * ay - vy * ax;
            let accel_lat = cross / speed;
            (accel_lat / (speed * speed), (vx * ax + vy * ay) / speed, accel_lat)
        } else {
            (F::zero(), (ax * ax + ay * ay).sqrt(), F::zero())
        };
        Self {
            t,
            s: lon.pos,
            s_dot: lon.vel,
            s_ddot: lon.acc,
            n: lat.pos,
            n_dot: lat.vel,
            n_ddot: lat.acc,
            x: F::zero(),
            y: F::zero(),
            heading: F::zero(),
            curvature,
            speed,
            accel_lon,
            accel_lat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<F> {
    pub points: Vec<TrajectoryPoint<F>>,
    pub lateral: QuinticCurve<F>,
    pub longitudinal: QuarticCurve<F>,
}

impl<F: Scalar> Trajectory<F> {
    pub fn horizon(&self) -> F {
        self.lateral.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sample spacing of the time grid.
    pub fn spacing(&self) -> F {
        self.horizon() / F::from_index(self.points.len().saturating_sub(1).max(1))
    }

    /// Exact curvilinear state at time `t` from the underlying curves.
    pub fn state_at(&self, t: F) -> FrenetState<F> {
        FrenetState::new(self.longitudinal.kinematics(t), self.lateral.kinematics(t))
    }

    pub fn start(&self) -> FrenetState<F> {
        self.state_at(F::zero())
    }
}

/// Samples the pair of curves on `grid` and derives all channels.
pub fn assemble<F: Scalar>(
    lateral: &QuinticCurve<F>,
    longitudinal: &QuarticCurve<F>,
    track: &TrackModel<F>,
    grid: &TimeGrid<F>,
) -> Result<Trajectory<F>> {
    if lateral.horizon != longitudinal.horizon || lateral.horizon != grid.horizon {
        return Err(Error::InvalidParameter(
            "lateral, longitudinal and grid horizons differ".into(),
        ));
    }
    let points = (0..grid.points)
        .map(|k| {
            let t = grid.time(k);
            TrajectoryPoint::from_kinematics(t, longitudinal.kinematics(t), lateral.kinematics(t), track)
        })
        .collect();
    Ok(Trajectory {
        points,
        lateral: *lateral,
        longitudinal: *longitudinal,
    })
}
