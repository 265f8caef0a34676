//! End-state sampling and the candidate trajectory set.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::polynomial::{solve_quartic, solve_quintic, Curve, Kinematics, QuarticCurve, QuinticCurve};
use crate::scalar::{linspace, Scalar};
use crate::track::TrackModel;
use crate::trajectory::{assemble, FrenetState, TimeGrid, Trajectory, TrajectoryPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig<F> {
    pub grid: TimeGrid<F>,
    pub lateral_samples: usize,
    pub speed_samples: usize,
    pub max_speed: F,
    pub vehicle_width: F,
}

impl<F: Scalar> Default for SamplingConfig<F> {
    fn default() -> Self {
        Self {
            grid: TimeGrid::default(),
            lateral_samples: 20,
            speed_samples: 40,
            max_speed: F::lit(85.0),
            vehicle_width: F::lit(1.93),
        }
    }
}

/// Boundary condition at the horizon. The longitudinal end acceleration is
/// always zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EndState<F> {
    pub n: F,
    pub n_dot: F,
    pub n_ddot: F,
    pub s_dot: F,
}

impl<F: Scalar> EndState<F> {
    pub fn new(n: F, n_dot: F, n_ddot: F, s_dot: F) -> Self {
        Self {
            n,
            n_dot,
            n_ddot,
            s_dot,
        }
    }

    pub fn mirrored(&self) -> Self {
        Self {
            n: -self.n,
            n_dot: -self.n_dot,
            n_ddot: -self.n_ddot,
            s_dot: self.s_dot,
        }
    }
}

/// Cartesian product of a lateral position grid and an end speed grid.
/// Candidate `index = speed_index * lateral.len() + lateral_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndStateGrid<F> {
    pub lateral: Vec<F>,
    pub speeds: Vec<F>,
}

impl<F: Scalar> EndStateGrid<F> {
    pub fn len(&self) -> usize {
        self.lateral.len() * self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, speed_index: usize, lateral_index: usize) -> usize {
        speed_index * self.lateral.len() + lateral_index
    }

    /// `(speed_index, lateral_index)` of a candidate.
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.lateral.len(), index % self.lateral.len())
    }

    pub fn end_state(&self, index: usize) -> EndState<F> {
        let (j, i) = self.split(index);
        EndState::new(self.lateral[i], F::zero(), F::zero(), self.speeds[j])
    }

    pub fn iter(&self) -> impl Iterator<Item = EndState<F>> + '_ {
        (0..self.len()).map(|idx| self.end_state(idx))
    }
}

/// Lateral targets span the drivable width shrunk by half the vehicle
/// width; end speeds span `[0, max_speed]`. Lateral velocity and
/// acceleration at the end are zero.
pub fn sample_end_states<F: Scalar>(track: &TrackModel<F>, config: &SamplingConfig<F>) -> EndStateGrid<F> {
    let (lo, hi) = track.lateral_limits(config.vehicle_width * F::half());
    EndStateGrid {
        lateral: linspace(lo, hi, config.lateral_samples),
        speeds: linspace(F::zero(), config.max_speed, config.speed_samples),
    }
}

/// Jerk-minimal connection from `start` to `end` over the configured horizon.
pub fn connect<F: Scalar>(
    start: &FrenetState<F>,
    end: &EndState<F>,
    track: &TrackModel<F>,
    grid: &TimeGrid<F>,
) -> Result<Trajectory<F>> {
    let lat = solve_quintic(start.lat, Kinematics::new(end.n, end.n_dot, end.n_ddot), grid.horizon)?;
    let lon = solve_quartic(start.lon, end.s_dot, F::zero(), grid.horizon)?;
    assemble(&lat, &lon, track, grid)
}

/// All candidate trajectories from one start state, stored as the sampled
/// lateral and longitudinal curves rather than as 800 full trajectories.
#[derive(Debug, Clone)]
pub struct CandidateSet<F> {
    pub grid: EndStateGrid<F>,
    pub times: Vec<F>,
    /// Time grid spacing, equal to [`Trajectory::spacing`] of every candidate.
    pub spacing: F,
    lateral: Vec<QuinticCurve<F>>,
    longitudinal: Vec<QuarticCurve<F>>,
    lateral_samples: Vec<Vec<Kinematics<F>>>,
    longitudinal_samples: Vec<Vec<Kinematics<F>>>,
}

impl<F: Scalar> CandidateSet<F> {
    pub fn generate(start: &FrenetState<F>, track: &TrackModel<F>, config: &SamplingConfig<F>) -> Result<Self> {
        let grid = sample_end_states(track, config);
        let times = config.grid.times();
        let horizon = config.grid.horizon;
        let lateral = grid
            .lateral
            .iter()
            .map(|&n| solve_quintic(start.lat, Kinematics::new(n, F::zero(), F::zero()), horizon))
            .collect::<Result<Vec<_>>>()?;
        let longitudinal = grid
            .speeds
            .iter()
            .map(|&v| solve_quartic(start.lon, v, F::zero(), horizon))
            .collect::<Result<Vec<_>>>()?;
        let lateral_samples = lateral
            .iter()
            .map(|c| times.iter().map(|&t| c.kinematics(t)).collect())
            .collect();
        let longitudinal_samples = longitudinal
            .iter()
            .map(|c| times.iter().map(|&t| c.kinematics(t)).collect())
            .collect();
        Ok(Self {
            grid,
            times,
            spacing: config.grid.spacing(),
            lateral,
            longitudinal,
            lateral_samples,
            longitudinal_samples,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn points_per_candidate(&self) -> usize {
        self.times.len()
    }

    pub fn lateral_samples(&self, lateral_index: usize) -> &[Kinematics<F>] {
        &self.lateral_samples[lateral_index]
    }

    pub fn longitudinal_samples(&self, speed_index: usize) -> &[Kinematics<F>] {
        &self.longitudinal_samples[speed_index]
    }

    /// Sample `k` of candidate `index`, bitwise identical to the
    /// corresponding point of [`CandidateSet::trajectory`].
    #[inline]
    pub fn point(&self, index: usize, k: usize, track: &TrackModel<F>) -> TrajectoryPoint<F> {
        let (j, i) = self.grid.split(index);
        TrajectoryPoint::from_kinematics(
            self.times[k],
            self.longitudinal_samples[j][k],
            self.lateral_samples[i][k],
            track,
        )
    }

    /// [`CandidateSet::point`] without the pose channels.
    #[inline]
    pub(crate) fn motion_point(&self, index: usize, k: usize) -> TrajectoryPoint<F> {
        let (j, i) = self.grid.split(index);
        TrajectoryPoint::without_pose(
            self.times[k],
            self.longitudinal_samples[j][k],
            self.lateral_samples[i][k],
        )
    }

    pub fn trajectory(&self, index: usize, track: &TrackModel<F>) -> Trajectory<F> {
        let (j, i) = self.grid.split(index);
        Trajectory {
            points: (0..self.times.len()).map(|k| self.point(index, k, track)).collect(),
            lateral: self.lateral[i],
            longitudinal: self.longitudinal[j],
        }
    }
}
