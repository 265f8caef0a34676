//! Fallback for infeasible learned trajectories: among the feasible sampled
//! candidates, take the one closest to the rejected trajectory.

use crate::error::{Error, Result};
use crate::feasibility::FeasibilityLimits;
use crate::planner::argmin_feasible;
use crate::sampling::{CandidateSet, EndState, SamplingConfig};
use crate::scalar::Scalar;
use crate::track::TrackModel;
use crate::trajectory::{FrenetState, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyOutcome<F> {
    pub replaced: bool,
    pub trajectory: Trajectory<F>,
    pub end_state: EndState<F>,
    pub index: usize,
    pub similarity_cost: F,
}

/// Squared position distance integrated with the left-endpoint rule.
pub fn similarity_cost<F: Scalar>(reference: &Trajectory<F>, candidate: &Trajectory<F>) -> F {
    let dt = candidate.spacing();
    let last = candidate.points.len().saturating_sub(1);
    let mut total = F::zero();
    for (r, c) in reference.points.iter().zip(&candidate.points[..last]) {
        let ds = r.s - c.s;
        let dn = r.n - c.n;
        total += (ds * ds + dn * dn) * dt;
    }
    total
}

/// Returns the feasible candidate from `ego` most similar to `rejected`.
/// Ties go to the lowest candidate index.
pub fn rescue<F: Scalar>(
    rejected: &Trajectory<F>,
    ego: &FrenetState<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
    sampling: &SamplingConfig<F>,
) -> Result<SafetyOutcome<F>> {
    let set = CandidateSet::generate(ego, track, sampling)?;
    rescue_from_set(rejected, &set, track, limits)
}

pub fn rescue_from_set<F: Scalar>(
    rejected: &Trajectory<F>,
    set: &CandidateSet<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
) -> Result<SafetyOutcome<F>> {
    if rejected.points.len() != set.points_per_candidate() {
        return Err(Error::InvalidParameter(
            "rejected trajectory and candidates use different time grids".into(),
        ));
    }
    let last = rejected.points.len() - 1;
    let first = nearest_candidate(set, rejected.points[last].n, rejected.points[last].s_dot);
    let (index, cost) = argmin_feasible(set, track, limits, set.spacing, Some(first), |p, k| {
        let r = &rejected.points[k];
        let ds = r.s - p.s;
        let dn = r.n - p.n;
        ds * ds + dn * dn
    })
    .ok_or(Error::NoValidTrajectory)?;
    Ok(SafetyOutcome {
        replaced: true,
        trajectory: set.trajectory(index, track),
        end_state: set.grid.end_state(index),
        index,
        similarity_cost: cost,
    })
}

/// Grid candidate whose end state is closest to `(n, s_dot)`.
fn nearest_candidate<F: Scalar>(set: &CandidateSet<F>, n: F, s_dot: F) -> usize {
    let closest = |values: &[F], x: F| {
        (0..values.len())
            .min_by(|&a, &b| {
                (values[a] - x)
                    .abs()
                    .partial_cmp(&(values[b] - x).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0)
    };
    set.grid
        .index(closest(&set.grid.speeds, s_dot), closest(&set.grid.lateral, n))
}
