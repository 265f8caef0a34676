//! Sampling-based planner: predict the opponent, score every feasible
//! candidate and keep the cheapest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{lateral_velocity, longitudinal_velocity, CurvilinearState};
use crate::error::{Error, Result};
use crate::feasibility::{check_point, FeasibilityLimits};
use crate::sampling::{CandidateSet, EndState, SamplingConfig};
use crate::scalar::Scalar;
use crate::track::TrackModel;
use crate::trajectory::{FrenetState, Trajectory, TrajectoryPoint};

/// How the opponent's lateral motion is extrapolated over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictionMode {
    /// Current lateral velocity held constant.
    #[serde(rename = "CH")]
    ConstantHeading,
    /// Current lateral position held constant.
    #[serde(rename = "CLP")]
    ConstantLateralPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights<F> {
    /// Weight on squared lateral offset from the reference line.
    pub lateral: F,
    /// Weight on squared shortfall from the maximum speed.
    pub speed: F,
    /// Weight on the proximity to the predicted opponent.
    pub prediction: F,
    /// Longitudinal and lateral shape of the proximity ellipse (1/m^2).
    pub ellipse_s: F,
    pub ellipse_n: F,
    pub mode: PredictionMode,
}

impl<F: Scalar> CostWeights<F> {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.lateral, self.speed, self.prediction];
        if weights.iter().any(|w| !(w.is_finite() && *w >= F::zero())) {
            return Err(Error::InvalidParameter("cost weights must be non-negative".into()));
        }
        if [self.ellipse_s, self.ellipse_n]
            .iter()
            .any(|p| !(p.is_finite() && *p > F::zero()))
        {
            return Err(Error::InvalidParameter("ellipse parameters must be positive".into()));
        }
        Ok(())
    }

    /// Multiplies the three term weights by `factor`.
    pub fn scaled(&self, factor: F) -> Self {
        Self {
            lateral: self.lateral * factor,
            speed: self.speed * factor,
            prediction: self.prediction * factor,
            ..*self
        }
    }
}

/// The six tuned parameter sets: three ellipse sizes, each with both
/// prediction modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostPreset {
    SmallCh,
    SmallClp,
    MediumCh,
    MediumClp,
    LargeCh,
    LargeClp,
}

impl CostPreset {
    pub const ALL: [CostPreset; 6] = [
        CostPreset::SmallCh,
        CostPreset::SmallClp,
        CostPreset::MediumCh,
        CostPreset::MediumClp,
        CostPreset::LargeCh,
        CostPreset::LargeClp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CostPreset::SmallCh => "small-ch",
            CostPreset::SmallClp => "small-clp",
            CostPreset::MediumCh => "medium-ch",
            CostPreset::MediumClp => "medium-clp",
            CostPreset::LargeCh => "large-ch",
            CostPreset::LargeClp => "large-clp",
        }
    }

    pub fn weights<F: Scalar>(&self) -> CostWeights<F> {
        use PredictionMode::*;
        // (ellipse_s, ellipse_n, lateral, speed, mode)
        let (ps, pn, wn, wv, mode) = match self {
            CostPreset::SmallCh => (0.08, 0.5, 0.08, 0.28, ConstantHeading),
            CostPreset::SmallClp => (0.08, 0.5, 0.0, 0.04, ConstantLateralPosition),
            CostPreset::MediumCh => (0.02, 0.18, 0.0, 0.08, ConstantHeading),
            CostPreset::MediumClp => (0.02, 0.18, 0.72, 1.0, ConstantLateralPosition),
            CostPreset::LargeCh => (0.01, 0.1, 0.36, 0.24, ConstantHeading),
            CostPreset::LargeClp => (0.01, 0.1, 0.8, 0.28, ConstantLateralPosition),
        };
        CostWeights {
            lateral: F::lit(wn),
            speed: F::lit(wv),
            prediction: F::lit(5000.0),
            ellipse_s: F::lit(ps),
            ellipse_n: F::lit(pn),
            mode,
        }
    }
}

impl fmt::Display for CostPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CostPreset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown cost preset `{s}`")))
    }
}

/// Predicted opponent position `(s, n)` at each sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentPrediction<F> {
    pub points: Vec<(F, F)>,
}

/// Constant-velocity longitudinal prediction; lateral motion either keeps
/// the current lateral velocity or the current position. Lateral positions
/// are clipped so the opponent stays inside the drivable width.
pub fn predict<F: Scalar>(
    opponent: &CurvilinearState<F>,
    mode: PredictionMode,
    times: &[F],
    track: &TrackModel<F>,
    vehicle_width: F,
) -> OpponentPrediction<F> {
    let s_dot = longitudinal_velocity(opponent, track);
    let n_dot = match mode {
        PredictionMode::ConstantHeading => lateral_velocity(opponent),
        PredictionMode::ConstantLateralPosition => F::zero(),
    };
    let (lo, hi) = track.lateral_limits(vehicle_width * F::half());
    let points = times
        .iter()
        .map(|&t| {
            let s = opponent.s + s_dot * t;
            let n = (opponent.n + n_dot * t).clamp_to(lo, hi);
            (s, n)
        })
        .collect();
    OpponentPrediction { points }
}

/// Elliptic proximity `exp(-p_s ds^2 - p_n dn^2)` in `(0, 1]`.
#[inline]
pub fn prediction_cost<F: Scalar>(ego: (F, F), predicted: (F, F), ellipse_s: F, ellipse_n: F) -> F {
    let ds = predicted.0 - ego.0;
    let dn = predicted.1 - ego.1;
    (-ellipse_s * ds * ds - ellipse_n * dn * dn).exp()
}

#[inline]
fn cost_integrand<F: Scalar>(p: &TrajectoryPoint<F>, predicted: (F, F), weights: &CostWeights<F>, max_speed: F) -> F {
    let shortfall = max_speed - p.speed;
    weights.lateral * p.n * p.n
        + weights.speed * shortfall * shortfall
        + weights.prediction * prediction_cost((p.s, p.n), predicted, weights.ellipse_s, weights.ellipse_n)
}

/// Left-endpoint rectangle rule over the trajectory's time grid.
pub fn trajectory_cost<F: Scalar>(
    traj: &Trajectory<F>,
    prediction: &OpponentPrediction<F>,
    weights: &CostWeights<F>,
    max_speed: F,
) -> F {
    let dt = traj.spacing();
    let last = traj.points.len().saturating_sub(1);
    let mut total = F::zero();
    for (p, &pred) in traj.points[..last].iter().zip(&prediction.points) {
        total += cost_integrand(p, pred, weights, max_speed) * dt;
    }
    total
}

/// Selected trajectory together with its candidate index.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<F> {
    pub trajectory: Trajectory<F>,
    pub end_state: EndState<F>,
    pub index: usize,
    pub cost: F,
}

/// Shared argmin over a candidate set. `integrand(point, k)` is summed with
/// the left-endpoint rule. The result is the feasible candidate of lowest
/// cost, ties going to the lowest index, whatever the visiting order:
/// `first` is visited before the rest to tighten pruning early. A candidate
/// whose partial sum already exceeds the incumbent cost is abandoned before
/// its feasibility is settled since it cannot win.
pub(crate) fn argmin_feasible<F, I>(
    set: &CandidateSet<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
    dt: F,
    first: Option<usize>,
    mut integrand: I,
) -> Option<(usize, F)>
where
    F: Scalar,
    I: FnMut(&TrajectoryPoint<F>, usize) -> F,
{
    let points = set.points_per_candidate();
    let first = first.filter(|&i| i < set.len());
    let order = first.into_iter().chain((0..set.len()).filter(|&i| Some(i) != first));
    let mut best: Option<(usize, F)> = None;
    'candidates: for idx in order {
        let mut total = F::zero();
        for k in 0..points {
            let p = set.motion_point(idx, k);
            if check_point(&p, track, limits).is_some() {
                continue 'candidates;
            }
            if k + 1 < points {
                total += integrand(&p, k) * dt;
                if let Some((_, incumbent)) = best {
                    if total > incumbent {
                        continue 'candidates;
                    }
                }
            }
        }
        best = match best {
            Some((b, c)) if c < total || (c == total && b < idx) => Some((b, c)),
            _ => Some((idx, total)),
        };
    }
    best
}

/// Scores all feasible candidates from `ego` and returns the cheapest;
/// ties go to the lowest candidate index.
pub fn plan<F: Scalar>(
    ego: &FrenetState<F>,
    opponent: &CurvilinearState<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
    weights: &CostWeights<F>,
    sampling: &SamplingConfig<F>,
) -> Result<Plan<F>> {
    let set = CandidateSet::generate(ego, track, sampling)?;
    let prediction = predict(opponent, weights.mode, &set.times, track, limits.vehicle_width);
    plan_from_set(&set, &prediction, track, limits, weights, sampling.max_speed, None)
}

/// [`plan`] over a prepared candidate set. `first` is a candidate index to
/// score before the others, typically the previous choice; it only affects
/// speed, never the result.
pub fn plan_from_set<F: Scalar>(
    set: &CandidateSet<F>,
    prediction: &OpponentPrediction<F>,
    track: &TrackModel<F>,
    limits: &FeasibilityLimits<F>,
    weights: &CostWeights<F>,
    max_speed: F,
    first: Option<usize>,
) -> Result<Plan<F>> {
    let dt = set.spacing;
    let (index, cost) = argmin_feasible(set, track, limits, dt, first, |p, k| {
        cost_integrand(p, prediction.points[k], weights, max_speed)
    })
    .ok_or(Error::NoValidTrajectory)?;
    Ok(Plan {
        trajectory: set.trajectory(index, track),
        end_state: set.grid.end_state(index),
        index,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::GgTable;
    use crate::sampling::connect;
    use crate::trajectory::TimeGrid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn preset_values() {
        let w: CostWeights<f64> = CostPreset::MediumClp.weights();
        assert_eq!(
            (w.ellipse_s, w.ellipse_n, w.prediction, w.lateral, w.speed),
            (0.02, 0.18, 5000.0, 0.72, 1.0)
        );
        assert_eq!(w.mode, PredictionMode::ConstantLateralPosition);
        assert_eq!("large-ch".parse::<CostPreset>().unwrap(), CostPreset::LargeCh);
        assert!("tiny".parse::<CostPreset>().is_err());
        for p in CostPreset::ALL {
            p.weights::<f64>().validate().unwrap();
        }
    }

    #[test]
    fn prediction_modes() {
        let track = TrackModel::default();
        let times = TimeGrid::<f64>::default().times();
        let clp = predict(
            &CurvilinearState::new(30.0, 2.0, 0.1, 50.0, 0.0),
            PredictionMode::ConstantLateralPosition,
            &times,
            &track,
            1.93,
        );
        assert!(clp.points.iter().all(|p| p.1 == 2.0));

        let ch = predict(
            &CurvilinearState::new(0.0, 0.0, 0.1, 50.0, 0.0),
            PredictionMode::ConstantHeading,
            &times,
            &track,
            1.93,
        );
        assert_abs_diff_eq!(ch.points[20].1, 4.991670832341408, epsilon = 1e-12);
        assert!(ch.points.windows(2).all(|w| w[1].0 > w[0].0));
        // exits the drivable width after ~1.31 s and is held at the edge
        let edge = track.lateral_limits(0.965).1;
        assert_eq!(ch.points[50].1, edge);
        assert!(ch.points.iter().all(|p| p.1 <= edge));
    }

    #[test]
    fn prediction_cost_examples() {
        assert_eq!(prediction_cost((3.0, 1.0), (3.0, 1.0), 0.08, 0.5), 1.0);
        assert_abs_diff_eq!(
            prediction_cost((0.0, 0.0), (5.0, 0.0), 0.08, 0.5),
            (-2.0_f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            prediction_cost((0.0, 0.0), (0.0, 3.0), 0.01, 0.1),
            0.4065696597405991,
            epsilon = 1e-15
        );
    }

    fn far_prediction(n: usize) -> OpponentPrediction<f64> {
        OpponentPrediction {
            points: vec![(1.0e6, 0.0); n],
        }
    }

    #[test]
    fn trajectory_cost_examples() {
        let track = TrackModel::default();
        let grid = TimeGrid::default();
        let zero = CostWeights {
            lateral: 0.0,
            speed: 0.0,
            prediction: 0.0,
            ellipse_s: 0.1,
            ellipse_n: 0.1,
            mode: PredictionMode::ConstantHeading,
        };
        let traj = connect(
            &FrenetState::cruising(0.0, 2.0, 50.0),
            &EndState::new(2.0, 0.0, 0.0, 50.0),
            &track,
            &grid,
        )
        .unwrap();
        assert_eq!(trajectory_cost(&traj, &far_prediction(51), &zero, 85.0), 0.0);

        let lateral_only = CostWeights { lateral: 1.0, ..zero };
        assert_abs_diff_eq!(
            trajectory_cost(&traj, &far_prediction(51), &lateral_only, 85.0),
            10.0,
            epsilon = 1e-9
        );

        let fast = connect(
            &FrenetState::cruising(0.0, 0.0, 85.0),
            &EndState::new(0.0, 0.0, 0.0, 85.0),
            &track,
            &grid,
        )
        .unwrap();
        let all: CostWeights<f64> = CostPreset::SmallCh.weights();
        assert_abs_diff_eq!(
            trajectory_cost(&fast, &far_prediction(51), &all, 85.0),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn free_road_prefers_full_speed_near_centre() {
        let track = TrackModel::<f64>::default();
        let far = CurvilinearState::new(1.0e5, 0.0, 0.0, 50.0, 0.0);
        let plan = plan(
            &FrenetState::cruising(0.0, 0.0, 50.0),
            &far,
            &track,
            &FeasibilityLimits::default(),
            &CostPreset::SmallCh.weights(),
            &SamplingConfig::default(),
        )
        .unwrap();
        assert_eq!(plan.end_state.s_dot, 85.0);
        assert_abs_diff_eq!(plan.end_state.n.abs(), 6.535 / 19.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_gg_table_has_no_plan() {
        let limits = FeasibilityLimits {
            gg: GgTable::zero(85.0),
            ..FeasibilityLimits::default()
        };
        let result = plan(
            &FrenetState::cruising(0.0, 0.0, 50.0),
            &CurvilinearState::new(50.0, 0.0, 0.0, 50.0, 0.0),
            &TrackModel::default(),
            &limits,
            &CostPreset::SmallCh.weights(),
            &SamplingConfig::default(),
        );
        assert!(matches!(result, Err(Error::NoValidTrajectory)));
    }
}
