//! Feasibility checks applied to every planned trajectory: track bounds,
//! minimum turning radius and a velocity-dependent gg-diagram.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::track::TrackModel;
use crate::trajectory::{Trajectory, TrajectoryPoint, SPEED_EPSILON};

/// Acceleration limits as a function of speed. Rows are `(v, a_lon_max,
/// a_lat_max)` sorted by `v`; lookups interpolate linearly and hold the end
/// values outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgTable<F> {
    rows: Vec<[F; 3]>,
}

impl<F: Scalar> GgTable<F> {
    pub fn new(mut rows: Vec<[F; 3]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("gg table needs at least one row".into()));
        }
        if rows
            .iter()
            .any(|r| r.iter().any(|v| !v.is_finite()) || r[1] < F::zero() || r[2] < F::zero())
        {
            return Err(Error::InvalidParameter(
                "gg table values must be finite and limits non-negative".into(),
            ));
        }
        rows.sort_by(|a, b| a[0].partial_cmp(&b[0]).expect("finite"));
        Ok(Self { rows })
    }

    /// Same limits at every speed.
    pub fn constant(a_lon_max: F, a_lat_max: F, max_speed: F) -> Self {
        Self {
            rows: vec![[F::zero(), a_lon_max, a_lat_max], [max_speed, a_lon_max, a_lat_max]],
        }
    }

    /// All limits zero: only motion without acceleration passes.
    pub fn zero(max_speed: F) -> Self {
        Self::constant(F::zero(), F::zero(), max_speed)
    }

    pub fn rows(&self) -> &[[F; 3]] {
        &self.rows
    }

    /// `(a_lon_max, a_lat_max)` at speed `v`.
    pub fn limits(&self, v: F) -> (F, F) {
        let rows = &self.rows;
        let first = rows[0];
        let last = rows[rows.len() - 1];
        if v <= first[0] {
            return (first[1], first[2]);
        }
        if v >= last[0] {
            return (last[1], last[2]);
        }
        let upper = rows.partition_point(|r| r[0] <= v);
        let (a, b) = (rows[upper - 1], rows[upper]);
        let w = (v - a[0]) / (b[0] - a[0]);
        (a[1] + (b[1] - a[1]) * w, a[2] + (b[2] - a[2]) * w)
    }

    /// Elliptic combination `(a_lon/max)^2 + (a_lat/max)^2`. A zero
    /// acceleration contributes nothing even where its limit is zero.
    #[inline]
    pub fn utilisation(&self, v: F, accel_lon: F, accel_lat: F) -> F {
        let (lon_max, lat_max) = self.limits(v);
        let term = |a: F, max: F| {
            if a == F::zero() {
                F::zero()
            } else {
                let r = a / max;
                r * r
            }
        };
        term(accel_lon, lon_max) + term(accel_lat, lat_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityLimits<F> {
    pub min_turn_radius: F,
    pub gg: GgTable<F>,
    /// Vehicle width; half of it is kept clear of each track boundary.
    pub vehicle_width: F,
}

impl<F: Scalar> Default for FeasibilityLimits<F> {
    fn default() -> Self {
        Self {
            min_turn_radius: F::one(),
            gg: GgTable::constant(F::lit(25.0), F::lit(25.0), F::lit(85.0)),
            vehicle_width: F::lit(1.93),
        }
    }
}

impl<F: Scalar> FeasibilityLimits<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_turn_radius.is_finite() && self.min_turn_radius > F::zero()) {
            return Err(Error::InvalidParameter("min_turn_radius must be positive".into()));
        }
        if !(self.vehicle_width.is_finite() && self.vehicle_width >= F::zero()) {
            return Err(Error::InvalidParameter("vehicle_width must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    Bounds,
    TurningRadius,
    Gg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    /// Failed check and the index of the first offending sample.
    pub first_violation: Option<(Violation, usize)>,
}

impl FeasibilityVerdict {
    pub const FEASIBLE: Self = Self { first_violation: None };

    pub fn feasible(&self) -> bool {
        self.first_violation.is_none()
    }

    fn from_first(kind: Violation, index: Option<usize>) -> Self {
        Self {
            first_violation: index.map(|i| (kind, i)),
        }
    }
}

/// Slack on the lateral bounds. Candidates whose end state lies exactly on
/// the edge reach it only up to rounding.
pub const BOUNDS_TOLERANCE: f64 = 1e-9;

#[inline]
pub fn point_within_bounds<F: Scalar>(p: &TrajectoryPoint<F>, track: &TrackModel<F>, vehicle_width: F) -> bool {
    track.within_bounds(p.n, vehicle_width * F::half() - F::lit(BOUNDS_TOLERANCE))
}

/// Reverse motion along the reference line is rejected together with
/// curvature above `1 / r_min`.
#[inline]
pub fn point_turn_ok<F: Scalar>(p: &TrajectoryPoint<F>, min_turn_radius: F) -> bool {
    if p.s_dot < F::zero() {
        return false;
    }
    !(p.speed > F::lit(SPEED_EPSILON) && p.curvature.abs() > min_turn_radius.recip())
}

#[inline]
pub fn point_gg_ok<F: Scalar>(p: &TrajectoryPoint<F>, gg: &GgTable<F>) -> bool {
    gg.utilisation(p.speed, p.accel_lon, p.accel_lat) <= F::one()
}

/// Check of a single sample in the order bounds, turning radius, gg.
#[inline]
pub fn check_point<F: Scalar>(
    p: &TrajectoryPoint<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
) -> Option<Violation> {
    if !point_within_bounds(p, track, limits.vehicle_width) {
        Some(Violation::Bounds)
    } else if !point_turn_ok(p, limits.min_turn_radius) {
        Some(Violation::TurningRadius)
    } else if !point_gg_ok(p, &limits.gg) {
        Some(Violation::Gg)
    } else {
        None
    }
}

pub fn check_bounds<F: Scalar>(traj: &Trajectory<F>, track: &TrackModel<F>, vehicle_width: F) -> FeasibilityVerdict {
    let first = traj
        .points
        .iter()
        .position(|p| !point_within_bounds(p, track, vehicle_width));
    FeasibilityVerdict::from_first(Violation::Bounds, first)
}

pub fn check_turning_radius<F: Scalar>(traj: &Trajectory<F>, min_turn_radius: F) -> FeasibilityVerdict {
    let first = traj.points.iter().position(|p| !point_turn_ok(p, min_turn_radius));
    FeasibilityVerdict::from_first(Violation::TurningRadius, first)
}

pub fn check_gg<F: Scalar>(traj: &Trajectory<F>, gg: &GgTable<F>) -> FeasibilityVerdict {
    let first = traj.points.iter().position(|p| !point_gg_ok(p, gg));
    FeasibilityVerdict::from_first(Violation::Gg, first)
}

/// Bounds, then turning radius, then gg; stops at the first failing check.
pub fn check_all<F: Scalar>(
    traj: &Trajectory<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
) -> FeasibilityVerdict {
    let verdict = check_bounds(traj, track, limits.vehicle_width);
    if !verdict.feasible() {
        return verdict;
    }
    let verdict = check_turning_radius(traj, limits.min_turn_radius);
    if !verdict.feasible() {
        return verdict;
    }
    check_gg(traj, &limits.gg)
}
