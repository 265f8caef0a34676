//! Straight race track and its curvilinear frame.
//!
//! The reference line is the track centerline laid along the world x-axis,
//! so `s` is the progress along x and `n` the lateral offset along y. The
//! reference heading and curvature are kept in the formulas that use them
//! but are identically zero here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackModel<F> {
    pub length: F,
    /// Distance from the reference line to the left boundary (`n > 0` side).
    pub half_width_left: F,
    /// Distance from the reference line to the right boundary (`n < 0` side).
    pub half_width_right: F,
}

impl<F: Scalar> Default for TrackModel<F> {
    fn default() -> Self {
        Self {
            length: F::lit(1500.0),
            half_width_left: F::lit(7.5),
            half_width_right: F::lit(7.5),
        }
    }
}

impl<F: Scalar> TrackModel<F> {
    pub fn new(length: F, half_width_left: F, half_width_right: F) -> Result<Self> {
        let track = Self {
            length,
            half_width_left,
            half_width_right,
        };
        track.validate()?;
        Ok(track)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: F| v.is_finite() && v > F::zero();
        if !ok(self.length) || !ok(self.half_width_left) || !ok(self.half_width_right) {
            return Err(Error::InvalidParameter(format!(
                "track length and half widths must be positive, got {:?}",
                self
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn reference_heading(&self, _s: F) -> F {
        F::zero()
    }

    #[inline]
    pub fn reference_curvature(&self, _s: F) -> F {
        F::zero()
    }

    /// Maps curvilinear `(s, n)` to world `(x, y)`.
    #[inline]
    pub fn to_cartesian(&self, s: F, n: F) -> (F, F) {
        let (sin, cos) = self.reference_heading(s).sin_cos();
        (s * cos - n * sin, s * sin + n * cos)
    }

    /// Lateral interval `[-n_r + margin, n_l - margin]`.
    #[inline]
    pub fn lateral_limits(&self, margin: F) -> (F, F) {
        (-self.half_width_right + margin, self.half_width_left - margin)
    }

    /// True iff `-n_r + margin <= n <= n_l - margin`.
    #[inline]
    pub fn within_bounds(&self, n: F, margin: F) -> bool {
        let (lo, hi) = self.lateral_limits(margin);
        lo <= n && n <= hi
    }
}
