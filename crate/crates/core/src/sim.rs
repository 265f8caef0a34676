//! Episode simulation: the follower replans every step and tracks its plan
//! perfectly, the blocker is integrated with its controller.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::collision::OrientedRect;
use crate::dynamics::{longitudinal_velocity, BlockingController, BlockingParams, CurvilinearState};
use crate::error::{Error, Result};
use crate::feasibility::{check_all, FeasibilityLimits};
use crate::planner::{plan_from_set, predict, CostWeights};
use crate::policy::{build_state, denormalize_action, MdpState, Norms, OpponentObservation, PolicyWeights};
use crate::safety::rescue;
use crate::sampling::{connect, CandidateSet, EndState, SamplingConfig};
use crate::track::TrackModel;
use crate::trajectory::{FrenetState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleGeometry {
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self {
            length: 4.9,
            width: 1.93,
        }
    }
}

/// Additive Gaussian error on the observed blocker speed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedNoise {
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone)]
pub enum PlannerChoice {
    Conventional(CostWeights<f64>),
    Learned {
        policy: Arc<PolicyWeights<f64>>,
        safety_layer: bool,
    },
    /// End states are supplied by the caller through
    /// [`Episode::decide_end_state`], as in the training environment.
    External {
        safety_layer: bool,
    },
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub track: TrackModel<f64>,
    pub vehicle: VehicleGeometry,
    pub sampling: SamplingConfig<f64>,
    pub limits: FeasibilityLimits<f64>,
    pub blocking: BlockingParams<f64>,
    pub blocker_s: f64,
    pub blocker_n: f64,
    pub initial_speed: f64,
    pub planner: PlannerChoice,
    /// Simulation and replanning interval.
    pub dt: f64,
    pub max_steps: usize,
    pub noise: Option<SpeedNoise>,
    pub seed: u64,
    /// Clearance beyond one vehicle length that counts as overtaken.
    pub success_margin: f64,
    /// Scale applied to both footprint dimensions in the collision check.
    pub footprint_scale: f64,
    /// When false the blocker is ignored by the collision and success checks.
    pub opponent_active: bool,
}

impl ScenarioConfig {
    pub fn new(planner: PlannerChoice) -> Self {
        Self {
            track: TrackModel::default(),
            vehicle: VehicleGeometry::default(),
            sampling: SamplingConfig::default(),
            limits: FeasibilityLimits::default(),
            blocking: BlockingParams::default(),
            blocker_s: 50.0,
            blocker_n: 0.0,
            initial_speed: 50.0,
            planner,
            dt: 0.1,
            max_steps: 1000,
            noise: None,
            seed: 0,
            success_margin: 1.0,
            footprint_scale: 1.0,
            opponent_active: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.track.validate()?;
        self.blocking.validate()?;
        self.limits.validate()?;
        let edge = self.track.half_width_left.min(self.track.half_width_right) - self.vehicle.width / 2.0;
        if !(self.blocker_s > 0.0) {
            return Err(Error::InvalidParameter("blocker must start ahead (s > 0)".into()));
        }
        if !(self.blocker_n.abs() <= edge) {
            return Err(Error::InvalidParameter(format!(
                "blocker lateral offset {} outside the drivable width",
                self.blocker_n
            )));
        }
        if !(self.dt > 0.0 && self.dt <= self.sampling.grid.horizon) {
            return Err(Error::InvalidParameter("dt must lie in (0, horizon]".into()));
        }
        if !(self.initial_speed >= 0.0) || !(self.footprint_scale > 0.0) {
            return Err(Error::InvalidParameter(
                "initial speed and footprint scale must be positive".into(),
            ));
        }
        if let Some(noise) = self.noise {
            if !(noise.std_dev >= 0.0) || !noise.mean.is_finite() {
                return Err(Error::InvalidParameter("noise needs std_dev >= 0".into()));
            }
        }
        if let PlannerChoice::Conventional(w) = &self.planner {
            w.validate()?;
        }
        if let PlannerChoice::Learned { policy, .. } = &self.planner {
            policy.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Success,
    Collision,
    Infeasible,
    TrackEnd,
}

impl EpisodeStatus {
    pub const ALL: [EpisodeStatus; 4] = [
        EpisodeStatus::Success,
        EpisodeStatus::Collision,
        EpisodeStatus::Infeasible,
        EpisodeStatus::TrackEnd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EpisodeStatus::Success => "success",
            EpisodeStatus::Collision => "collision",
            EpisodeStatus::Infeasible => "infeasible",
            EpisodeStatus::TrackEnd => "track_end",
        }
    }
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EpisodeStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EpisodeStatus::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown status `{s}`")))
    }
}

/// One row per simulated step, recorded after the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub s_o: f64,
    pub n_o: f64,
    pub v_o: f64,
    pub s_b: f64,
    pub n_b: f64,
    pub chi_b: f64,
    pub v_b: f64,
    pub end_n: f64,
    pub end_sdot: f64,
    pub sl_engaged: bool,
    pub status: &'static str,
}

pub const TRACE_HEADER: &str = "time,s_o,n_o,v_o,s_b,n_b,chi_b,v_b,end_n,end_sdot,sl_engaged,status";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub status: EpisodeStatus,
    pub steps: usize,
    pub trace: Vec<TraceRow>,
}

impl EpisodeOutcome {
    pub fn safety_engagements(&self) -> usize {
        self.trace.iter().filter(|r| r.sl_engaged).count()
    }

    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER.split(','))?;
        for r in &self.trace {
            w.write_record([
                r.time.to_string(),
                r.s_o.to_string(),
                r.n_o.to_string(),
                r.v_o.to_string(),
                r.s_b.to_string(),
                r.n_b.to_string(),
                r.chi_b.to_string(),
                r.v_b.to_string(),
                r.end_n.to_string(),
                r.end_sdot.to_string(),
                u8::from(r.sl_engaged).to_string(),
                r.status.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_trace(std::fs::File::create(path)?)
    }
}

/// Planner output for one step.
#[derive(Debug, Clone)]
pub enum Decision {
    Follow {
        trajectory: Trajectory<f64>,
        end_state: EndState<f64>,
        safety_engaged: bool,
    },
    /// No feasible trajectory; the attempted end state is kept for the trace.
    Infeasible { attempted: Option<EndState<f64>> },
}

/// Footprints overlap. Both rectangles are centred on the state position.
pub fn check_collision(ego: &OrientedRect<f64>, opponent: &OrientedRect<f64>) -> bool {
    ego.overlaps(opponent)
}

/// Follower fully ahead by one vehicle length plus `margin`.
pub fn check_success(ego_s: f64, opponent_s: f64, vehicle_length: f64, margin: f64) -> bool {
    ego_s - opponent_s >= vehicle_length + margin
}

/// Step-wise episode driver, shared by [`run_episode`] and the training
/// environment.
#[derive(Debug, Clone)]
pub struct Episode {
    config: ScenarioConfig,
    ego: FrenetState<f64>,
    opponent: CurvilinearState<f64>,
    controller: BlockingController<f64>,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    steps: usize,
    status: Option<EpisodeStatus>,
    trace: Vec<TraceRow>,
    last_choice: Option<usize>,
}

impl Episode {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let noise = match config.noise {
            Some(n) => {
                Some(Normal::new(n.mean, n.std_dev).map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?)
            }
            None => None,
        };
        Ok(Self {
            ego: FrenetState::cruising(0.0, 0.0, config.initial_speed),
            opponent: CurvilinearState::new(config.blocker_s, config.blocker_n, 0.0, config.initial_speed, 0.0),
            controller: BlockingController::new(config.blocking),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            noise,
            steps: 0,
            status: None,
            trace: Vec::new(),
            last_choice: None,
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn ego(&self) -> &FrenetState<f64> {
        &self.ego
    }

    pub fn opponent(&self) -> &CurvilinearState<f64> {
        &self.opponent
    }

    pub fn status(&self) -> Option<EpisodeStatus> {
        self.status
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Rescales both collision footprints from now on.
    pub fn set_footprint_scale(&mut self, scale: f64) {
        self.config.footprint_scale = scale;
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Blocker as seen by the follower; draws one noise sample if noise is
    /// configured.
    pub fn observe(&mut self) -> OpponentObservation<f64> {
        let exact = OpponentObservation::exact(&self.opponent, &self.config.track);
        match &self.noise {
            Some(dist) => exact.with_speed_offset(dist.sample(&mut self.rng)),
            None => exact,
        }
    }

    /// Learned-policy observation vector for the current state.
    pub fn mdp_state(&mut self, norms: &Norms<f64>) -> MdpState<f64> {
        let obs = self.observe();
        build_state(&self.ego, &obs, norms)
    }

    /// Connects the current state to `end_state`; if the result is
    /// infeasible, either falls back to the safety layer or reports
    /// infeasibility.
    pub fn decide_end_state(&self, end_state: EndState<f64>, safety_layer: bool) -> Decision {
        let cfg = &self.config;
        let Ok(trajectory) = connect(&self.ego, &end_state, &cfg.track, &cfg.sampling.grid) else {
            return Decision::Infeasible {
                attempted: Some(end_state),
            };
        };
        if check_all(&trajectory, &cfg.track, &cfg.limits).feasible() {
            return Decision::Follow {
                trajectory,
                end_state,
                safety_engaged: false,
            };
        }
        if safety_layer {
            if let Ok(out) = rescue(&trajectory, &self.ego, &cfg.track, &cfg.limits, &cfg.sampling) {
                return Decision::Follow {
                    trajectory: out.trajectory,
                    end_state: out.end_state,
                    safety_engaged: true,
                };
            }
        }
        Decision::Infeasible {
            attempted: Some(end_state),
        }
    }

    /// Runs the configured planner for the current state.
    pub fn decide(&mut self) -> Result<Decision> {
        Ok(match self.config.planner.clone() {
            PlannerChoice::Conventional(weights) => {
                let cfg = &self.config;
                let planned = CandidateSet::generate(&self.ego, &cfg.track, &cfg.sampling).and_then(|set| {
                    let prediction = predict(
                        &self.opponent,
                        weights.mode,
                        &set.times,
                        &cfg.track,
                        cfg.limits.vehicle_width,
                    );
                    plan_from_set(
                        &set,
                        &prediction,
                        &cfg.track,
                        &cfg.limits,
                        &weights,
                        cfg.sampling.max_speed,
                        self.last_choice,
                    )
                });
                match planned {
                    Ok(p) => {
                        self.last_choice = Some(p.index);
                        Decision::Follow {
                            trajectory: p.trajectory,
                            end_state: p.end_state,
                            safety_engaged: false,
                        }
                    }
                    Err(_) => Decision::Infeasible { attempted: None },
                }
            }
            PlannerChoice::Learned { policy, safety_layer } => {
                let state = self.mdp_state(&policy.norms);
                let action = policy.forward(&state);
                let end_state = denormalize_action(&action, &policy.action_bounds);
                self.decide_end_state(end_state, safety_layer)
            }
            PlannerChoice::External { .. } => {
                return Err(Error::Config(
                    "external planner: end states come from the caller".into(),
                ))
            }
        })
    }

    fn footprint(&self, x: f64, y: f64, heading: f64) -> OrientedRect<f64> {
        let k = self.config.footprint_scale;
        OrientedRect::new(
            x,
            y,
            heading,
            self.config.vehicle.length * k,
            self.config.vehicle.width * k,
        )
    }

    /// Applies a decision: both vehicles advance by `dt`, then the terminal
    /// checks run in the order collision, success, track end.
    pub fn apply(&mut self, decision: Decision) -> Option<EpisodeStatus> {
        assert!(self.status.is_none(), "episode already finished");
        let cfg = &self.config;
        let (end_state, safety_engaged) = match decision {
            Decision::Infeasible { attempted } => {
                self.status = Some(EpisodeStatus::Infeasible);
                self.record(attempted, false);
                return self.status;
            }
            Decision::Follow {
                trajectory,
                end_state,
                safety_engaged,
            } => {
                let next_ego = trajectory.state_at(cfg.dt);
                let next_opponent =
                    self.controller
                        .advance(&self.opponent, self.ego.lat.pos, self.ego.lat.vel, cfg.dt, &cfg.track);
                self.ego = next_ego;
                self.opponent = next_opponent;
                (end_state, safety_engaged)
            }
        };
        self.steps += 1;

        let (ex, ey) = cfg.track.to_cartesian(self.ego.lon.pos, self.ego.lat.pos);
        let (ox, oy) = cfg.track.to_cartesian(self.opponent.s, self.opponent.n);
        let ego_rect = self.footprint(
            ex,
            ey,
            self.ego.heading() + cfg.track.reference_heading(self.ego.lon.pos),
        );
        let opp_rect = self.footprint(
            ox,
            oy,
            self.opponent.heading + cfg.track.reference_heading(self.opponent.s),
        );
        let horizon_exit = self.ego.lon.pos + cfg.sampling.max_speed * cfg.sampling.grid.horizon >= cfg.track.length;

        self.status = if cfg.opponent_active && check_collision(&ego_rect, &opp_rect) {
            Some(EpisodeStatus::Collision)
        } else if cfg.opponent_active
            && check_success(
                self.ego.lon.pos,
                self.opponent.s,
                cfg.vehicle.length,
                cfg.success_margin,
            )
        {
            Some(EpisodeStatus::Success)
        } else if horizon_exit || self.steps >= cfg.max_steps {
            Some(EpisodeStatus::TrackEnd)
        } else {
            None
        };
        self.record(Some(end_state), safety_engaged);
        self.status
    }

    fn record(&mut self, end_state: Option<EndState<f64>>, sl_engaged: bool) {
        let end = end_state.unwrap_or(EndState::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        self.trace.push(TraceRow {
            time: self.time(),
            s_o: self.ego.lon.pos,
            n_o: self.ego.lat.pos,
            v_o: self.ego.speed(),
            s_b: self.opponent.s,
            n_b: self.opponent.n,
            chi_b: self.opponent.heading,
            v_b: self.opponent.speed,
            end_n: end.n,
            end_sdot: end.s_dot,
            sl_engaged,
            status: self.status.map_or("running", |s| s.as_str()),
        });
    }

    /// Longitudinal speed difference follower minus blocker (exact values).
    pub fn relative_speed(&self) -> f64 {
        self.ego.lon.vel - longitudinal_velocity(&self.opponent, &self.config.track)
    }

    pub fn into_outcome(self) -> EpisodeOutcome {
        EpisodeOutcome {
            status: self.status.unwrap_or(EpisodeStatus::TrackEnd),
            steps: self.steps,
            trace: self.trace,
        }
    }
}

/// Simulates one scenario to its terminal status.
pub fn run_episode(config: &ScenarioConfig) -> Result<EpisodeOutcome> {
    let mut episode = Episode::new(config.clone())?;
    while episode.status().is_none() {
        let decision = episode.decide()?;
        episode.apply(decision);
    }
    Ok(episode.into_outcome())
}
