//! Exhaustive candidate selection: every end state is connected, checked
//! and scored without the planner's pruning or shared helpers.

use overtake_core::dynamics::CurvilinearState;
use overtake_core::feasibility::FeasibilityLimits;
use overtake_core::planner::{plan, CostPreset, CostWeights, PredictionMode};
use overtake_core::polynomial::Kinematics;
use overtake_core::safety::rescue;
use overtake_core::sampling::{connect, EndState, SamplingConfig};
use overtake_core::track::TrackModel;
use overtake_core::trajectory::{FrenetState, TimeGrid, Trajectory, TrajectoryPoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const HALF_WIDTH: f64 = 7.5;
pub const CAR_WIDTH: f64 = 1.93;
pub const MAX_SPEED: f64 = 85.0;
pub const A_MAX: f64 = 25.0;
pub const MIN_RADIUS: f64 = 1.0;

pub fn end_states() -> Vec<EndState<f64>> {
    let edge = HALF_WIDTH - CAR_WIDTH / 2.0;
    let mut out = Vec::with_capacity(800);
    for j in 0..40 {
        let v = MAX_SPEED * j as f64 / 39.0;
        for i in 0..20 {
            let n = -edge + 2.0 * edge * i as f64 / 19.0;
            out.push(EndState::new(n, 0.0, 0.0, v));
        }
    }
    out
}

pub fn feasible(p: &TrajectoryPoint<f64>) -> bool {
    let edge = HALF_WIDTH - CAR_WIDTH / 2.0;
    if p.n.abs() > edge + 1e-9 || p.s_dot < 0.0 {
        return false;
    }
    let speed = p.s_dot.hypot(p.n_dot);
    if speed <= 0.1 {
        let a = p.s_ddot.hypot(p.n_ddot);
        return a == 0.0 || a <= A_MAX;
    }
    let a_lat = (p.s_dot * p.n_ddot - p.n_dot * p.s_ddot) / speed;
    let a_lon = (p.s_dot * p.s_ddot + p.n_dot * p.n_ddot) / speed;
    let curvature = a_lat / (speed * speed);
    curvature.abs() <= 1.0 / MIN_RADIUS && (a_lon / A_MAX).powi(2) + (a_lat / A_MAX).powi(2) <= 1.0
}

pub fn predicted(opp: &CurvilinearState<f64>, mode: PredictionMode, t: f64) -> (f64, f64) {
    let edge = HALF_WIDTH - CAR_WIDTH / 2.0;
    let n_rate = match mode {
        PredictionMode::ConstantHeading => opp.speed * opp.heading.sin(),
        PredictionMode::ConstantLateralPosition => 0.0,
    };
    (
        opp.s + opp.speed * opp.heading.cos() * t,
        (opp.n + n_rate * t).clamp(-edge, edge),
    )
}

pub fn left_sum(traj: &Trajectory<f64>, mut f: impl FnMut(&TrajectoryPoint<f64>) -> f64) -> f64 {
    let dt = 2.5 / 50.0;
    traj.points[..traj.points.len() - 1].iter().map(|p| f(p) * dt).sum()
}

/// Lowest cost among feasible candidates; ties to the lowest index.
pub fn argmin(costs: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in costs.iter().enumerate() {
        if let Some(c) = *c {
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((i, c));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn candidates(ego: &FrenetState<f64>, track: &TrackModel<f64>) -> Vec<Option<Trajectory<f64>>> {
    let grid = TimeGrid::default();
    end_states()
        .iter()
        .map(|e| {
            let traj = connect(ego, e, track, &grid).unwrap();
            traj.points.iter().all(feasible).then_some(traj)
        })
        .collect()
}

pub fn random_ego(rng: &mut ChaCha8Rng) -> FrenetState<f64> {
    FrenetState::new(
        Kinematics::new(
            rng.random_range(0.0..1400.0),
            rng.random_range(5.0..85.0),
            rng.random_range(-8.0..8.0),
        ),
        Kinematics::new(
            rng.random_range(-6.0..6.0),
            rng.random_range(-6.0..6.0),
            rng.random_range(-10.0..10.0),
        ),
    )
}

/// Compares `plan` with the exhaustive argmin on `cases` random states;
/// returns how many had a feasible candidate.
pub fn check_plan(seed: u64, cases: usize) -> Result<usize, String> {
    let track = TrackModel::default();
    let limits = FeasibilityLimits::default();
    let sampling = SamplingConfig::default();
    let mut rng = super::rng(seed);
    let mut planned = 0;
    for case in 0..cases {
        let ego = random_ego(&mut rng);
        let opp = CurvilinearState::new(
            ego.lon.pos + rng.random_range(-10.0..60.0),
            rng.random_range(-6.5..6.5),
            rng.random_range(-0.4..0.4),
            rng.random_range(20.0..100.0),
            0.0,
        );
        let weights: CostWeights<f64> = CostPreset::ALL[case % 6].weights();
        let costs: Vec<Option<f64>> = candidates(&ego, &track)
            .iter()
            .map(|c| {
                c.as_ref().map(|traj| {
                    left_sum(traj, |p| {
                        let (s, n) = predicted(&opp, weights.mode, p.t);
                        let (ds, dn) = (s - p.s, n - p.n);
                        let shortfall = MAX_SPEED - p.s_dot.hypot(p.n_dot);
                        weights.lateral * p.n * p.n
                            + weights.speed * shortfall * shortfall
                            + weights.prediction * (-weights.ellipse_s * ds * ds - weights.ellipse_n * dn * dn).exp()
                    })
                })
            })
            .collect();
        let got = plan(&ego, &opp, &track, &limits, &weights, &sampling);
        match (argmin(&costs), got) {
            (Some(want), Ok(got)) => {
                if got.index != want {
                    return Err(format!(
                        "case {case}: index {} vs {want} (costs {:?} vs {:?})",
                        got.index, costs[got.index], costs[want]
                    ));
                }
                let c = costs[want].unwrap();
                if (got.cost - c).abs() > 1e-9 * c.abs().max(1.0) {
                    return Err(format!("case {case}: cost {} vs {c}", got.cost));
                }
                planned += 1;
            }
            (None, Err(_)) => {}
            (want, got) => {
                return Err(format!(
                    "case {case}: oracle {want:?}, planner {:?}",
                    got.map(|p| p.index)
                ))
            }
        }
    }
    Ok(planned)
}

/// Compares `rescue` with the exhaustive similarity argmin; returns how
/// many cases had a feasible candidate.
pub fn check_rescue(seed: u64, cases: usize) -> Result<usize, String> {
    let track = TrackModel::default();
    let limits = FeasibilityLimits::default();
    let sampling = SamplingConfig::default();
    let grid = TimeGrid::default();
    let mut rng = super::rng(seed);
    let mut rescued = 0;
    for case in 0..cases {
        let ego = random_ego(&mut rng);
        let wanted = EndState::new(
            rng.random_range(-8.0..8.0),
            rng.random_range(-15.0..15.0),
            rng.random_range(-25.0..25.0),
            rng.random_range(0.0..85.0),
        );
        let rejected = connect(&ego, &wanted, &track, &grid).map_err(|e| e.to_string())?;
        let costs: Vec<Option<f64>> = candidates(&ego, &track)
            .iter()
            .map(|c| {
                c.as_ref().map(|traj| {
                    let mut k = 0;
                    left_sum(traj, |p| {
                        let r = &rejected.points[k];
                        k += 1;
                        (r.s - p.s).powi(2) + (r.n - p.n).powi(2)
                    })
                })
            })
            .collect();
        match (argmin(&costs), rescue(&rejected, &ego, &track, &limits, &sampling)) {
            (Some(want), Ok(got)) => {
                if got.index != want {
                    return Err(format!(
                        "case {case}: index {} vs {want} (costs {:?} vs {:?})",
                        got.index, costs[got.index], costs[want]
                    ));
                }
                if !got.replaced || !got.trajectory.points.iter().all(feasible) {
                    return Err(format!("case {case}: replacement not feasible"));
                }
                rescued += 1;
            }
            (None, Err(_)) => {}
            (want, got) => {
                return Err(format!(
                    "case {case}: oracle {want:?}, rescue {:?}",
                    got.map(|o| o.index)
                ))
            }
        }
    }
    Ok(rescued)
}
