//! Training environment: reset/step over the episode engine, the shaped
//! reward, and a newline-delimited JSON protocol for an external trainer.
//!
//! Every request carries `"v": "v1"`:
//!
//! ```text
//! {"v":"v1","cmd":"reset","seed":7,"stage":3,"scenario":{"blocker_s":40.0}}
//!     -> {"v":"v1","ok":true,"state":[12 floats],"info":{...}}
//! {"v":"v1","cmd":"step","action":[a0,a1,a2,a3]}
//!     -> {"v":"v1","ok":true,"state":[...],"reward":r,"done":b,"info":{"status":"running",...}}
//! {"v":"v1","cmd":"close"} -> {"v":"v1","ok":true}
//! ```
//!
//! Malformed requests get `{"ok":false,"error":...}` and the session goes on;
//! a request with another protocol version is answered with an error and
//! ends the session.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::BlockingParams;
use crate::error::{Error, Result};
use crate::policy::{denormalize_action, ActionBounds, MdpAction, MdpState, Norms, ACTION_DIM};
use crate::sim::{Decision, Episode, EpisodeStatus, PlannerChoice, ScenarioConfig, SpeedNoise};

pub const PROTOCOL_VERSION: &str = "v1";
pub const STAGES: std::ops::RangeInclusive<u32> = 1..=6;

/// Collision footprint scale of a curriculum stage; stage 1 has no
/// opponent interaction.
pub fn stage_scale(stage: u32) -> Option<f64> {
    (stage >= 2).then(|| 0.2 * f64::from(stage - 1))
}

/// Post-step quantities the dense reward depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub ego_s: f64,
    pub ego_n: f64,
    pub opponent_s: f64,
    pub opponent_n: f64,
    /// Longitudinal speed of the follower minus the blocker's.
    pub relative_speed: f64,
    /// `Some(true)` on a successful terminal, `Some(false)` on any other.
    pub terminal: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardState {
    /// Largest relative speed seen so far in the episode.
    pub relative_speed_max: f64,
    /// Footprint scale; `None` disables the lateral distance term.
    pub scale: Option<f64>,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl RewardState {
    pub fn new(scale: Option<f64>, vehicle_length: f64, vehicle_width: f64) -> Self {
        Self {
            relative_speed_max: 0.0,
            scale,
            vehicle_length,
            vehicle_width,
        }
    }

    /// Terminal reward, or the dense shaping reward; the running maximum of
    /// the relative speed is updated after the reward is evaluated.
    pub fn reward(&mut self, t: &Transition) -> f64 {
        match t.terminal {
            Some(true) => return 10.0,
            Some(false) => return -1.0,
            None => {}
        }
        let mut r = 0.0;
        if let Some(k) = self.scale {
            let overlap =
                t.ego_s >= t.opponent_s - self.vehicle_length && t.ego_s <= t.opponent_s + self.vehicle_length;
            if overlap {
                r += 0.5 * ((t.ego_n - t.opponent_n).abs() - k * self.vehicle_width);
            }
        }
        if t.relative_speed > self.relative_speed_max {
            r += t.relative_speed - self.relative_speed_max;
        }
        self.relative_speed_max = self.relative_speed_max.max(t.relative_speed);
        r
    }
}

/// Ranges that unspecified reset values are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingProfile {
    pub blocker_s: (f64, f64),
    pub blocker_n: (f64, f64),
    pub lookaheads: Vec<f64>,
}

impl TrainingProfile {
    /// Single blocking behaviour, `s_d = 80`.
    pub fn single() -> Self {
        Self {
            blocker_s: (20.0, 100.0),
            blocker_n: (-6.0, 6.0),
            lookaheads: vec![80.0],
        }
    }

    /// Three blocking behaviours, `s_d` in {40, 80, 120}.
    pub fn mixed() -> Self {
        Self {
            lookaheads: vec![40.0, 80.0, 120.0],
            ..Self::single()
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "single" | "training1" => Ok(Self::single()),
            "mixed" | "training2" => Ok(Self::mixed()),
            other => Err(Error::Config(format!("unknown training profile `{other}`"))),
        }
    }
}

impl Default for TrainingProfile {
    fn default() -> Self {
        Self::mixed()
    }
}

/// Explicit reset values; anything left out is sampled from the profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub blocker_s: Option<f64>,
    pub blocker_n: Option<f64>,
    pub lookahead: Option<f64>,
    pub initial_speed: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    /// Template for every episode; the planner field is replaced.
    pub base: ScenarioConfig,
    pub profile: TrainingProfile,
    pub stage: u32,
    pub norms: Norms<f64>,
    pub action_bounds: ActionBounds<f64>,
    pub safety_layer: bool,
}

impl EnvConfig {
    pub fn new(base: ScenarioConfig, stage: u32) -> Self {
        let action_bounds = ActionBounds::for_track(&base.track, base.vehicle.width, base.sampling.max_speed);
        Self {
            base,
            profile: TrainingProfile::default(),
            stage,
            norms: Norms::default(),
            action_bounds,
            safety_layer: false,
        }
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::new(ScenarioConfig::new(PlannerChoice::External { safety_layer: false }), 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResult {
    pub state: MdpState<f64>,
    pub reward: f64,
    pub done: bool,
    pub status: Option<EpisodeStatus>,
    pub safety_engaged: bool,
}

#[derive(Debug)]
pub struct Env {
    config: EnvConfig,
    episode: Option<Episode>,
    rewards: RewardState,
    stage: u32,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self> {
        check_stage(config.stage)?;
        let stage = config.stage;
        let rewards = RewardState::new(
            stage_scale(stage),
            config.base.vehicle.length,
            config.base.vehicle.width,
        );
        Ok(Self {
            config,
            episode: None,
            rewards,
            stage,
        })
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.episode.as_ref()
    }

    /// Starts a new episode. Values not given in `overrides` are drawn from
    /// the training profile with a generator seeded by `seed`.
    pub fn reset(&mut self, seed: u64, stage: Option<u32>, overrides: &ScenarioOverrides) -> Result<MdpState<f64>> {
        let stage = stage.unwrap_or(self.config.stage);
        check_stage(stage)?;
        let profile = &self.config.profile;
        if profile.lookaheads.is_empty() && overrides.lookahead.is_none() {
            return Err(Error::Config("training profile has no lookahead values".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocker_s = rng.random_range(profile.blocker_s.0..=profile.blocker_s.1);
        let blocker_n = rng.random_range(profile.blocker_n.0..=profile.blocker_n.1);
        let lookahead = if profile.lookaheads.is_empty() {
            0.0
        } else {
            profile.lookaheads[rng.random_range(0..profile.lookaheads.len())]
        };

        let mut scenario = self.config.base.clone();
        scenario.planner = PlannerChoice::External {
            safety_layer: self.config.safety_layer,
        };
        scenario.blocker_s = overrides.blocker_s.unwrap_or(blocker_s);
        scenario.blocker_n = overrides.blocker_n.unwrap_or(blocker_n);
        scenario.blocking = BlockingParams {
            lookahead: overrides.lookahead.unwrap_or(lookahead),
            ..scenario.blocking
        };
        if let Some(v) = overrides.initial_speed {
            scenario.initial_speed = v;
        }
        scenario.seed = seed;
        scenario.opponent_active = stage >= 2;
        scenario.footprint_scale = stage_scale(stage).unwrap_or(1.0);

        let mut episode = Episode::new(scenario)?;
        let state = episode.mdp_state(&self.config.norms);
        self.episode = Some(episode);
        self.stage = stage;
        self.rewards = RewardState::new(
            stage_scale(stage),
            self.config.base.vehicle.length,
            self.config.base.vehicle.width,
        );
        Ok(state)
    }

    /// Applies a normalised action. Components outside `[-1, 1]` are clipped.
    pub fn step(&mut self, action: &MdpAction<f64>) -> Result<StepResult> {
        let episode = self
            .episode
            .as_mut()
            .ok_or_else(|| Error::Protocol("step before reset".into()))?;
        if episode.status().is_some() {
            return Err(Error::Protocol("episode finished; reset first".into()));
        }
        if action.0.iter().any(|a| !a.is_finite()) {
            return Err(Error::Protocol("action contains non-finite values".into()));
        }
        let end_state = denormalize_action(action, &self.config.action_bounds);
        let decision = episode.decide_end_state(end_state, self.config.safety_layer);
        let safety_engaged = matches!(
            decision,
            Decision::Follow {
                safety_engaged: true,
                ..
            }
        );
        let status = episode.apply(decision);

        // without an opponent, reaching the end of the track is the goal
        let terminal = status.map(|s| match s {
            EpisodeStatus::Success => true,
            EpisodeStatus::TrackEnd => self.stage == 1,
            EpisodeStatus::Collision | EpisodeStatus::Infeasible => false,
        });
        let transition = Transition {
            ego_s: episode.ego().lon.pos,
            ego_n: episode.ego().lat.pos,
            opponent_s: episode.opponent().s,
            opponent_n: episode.opponent().n,
            relative_speed: episode.relative_speed(),
            terminal,
        };
        let reward = self.rewards.reward(&transition);
        let state = episode.mdp_state(&self.config.norms);
        Ok(StepResult {
            state,
            reward,
            done: status.is_some(),
            status,
            safety_engaged,
        })
    }
}

fn check_stage(stage: u32) -> Result<()> {
    if STAGES.contains(&stage) {
        Ok(())
    } else {
        Err(Error::Config(format!("stage {stage} outside 1..=6")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
enum Request {
    Reset {
        #[serde(rename = "v")]
        _version: String,
        #[serde(default)]
        seed: u64,
        stage: Option<u32>,
        #[serde(default)]
        scenario: ScenarioOverrides,
    },
    Step {
        #[serde(rename = "v")]
        _version: String,
        action: Vec<f64>,
    },
    Close {
        #[serde(rename = "v")]
        _version: String,
    },
}

/// What the server does after answering a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Continue,
    End,
}

fn reply_ok(mut body: Value) -> Value {
    body["v"] = json!(PROTOCOL_VERSION);
    body["ok"] = json!(true);
    body
}

fn reply_err(message: impl Into<String>) -> Value {
    json!({"v": PROTOCOL_VERSION, "ok": false, "error": message.into()})
}

fn status_name(status: Option<EpisodeStatus>) -> &'static str {
    status.map_or("running", |s| s.as_str())
}

fn scenario_info(env: &Env) -> Value {
    match env.episode() {
        Some(ep) => {
            let c = ep.config();
            json!({
                "stage": env.stage(),
                "blocker_s": c.blocker_s,
                "blocker_n": c.blocker_n,
                "lookahead": c.blocking.lookahead,
                "footprint_scale": c.footprint_scale,
            })
        }
        None => Value::Null,
    }
}

fn handle(env: &mut Env, line: &str) -> (Value, Flow) {
    let raw: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return (reply_err(format!("malformed message: {e}")), Flow::Continue),
    };
    match raw.get("v").and_then(Value::as_str) {
        Some(PROTOCOL_VERSION) => {}
        Some(other) => {
            return (
                reply_err(format!(
                    "unsupported protocol version `{other}`, expected `{PROTOCOL_VERSION}`"
                )),
                Flow::End,
            )
        }
        None => return (reply_err("missing protocol version field `v`"), Flow::Continue),
    }
    let request: Request = match serde_json::from_value(raw) {
        Ok(r) => r,
        Err(e) => return (reply_err(format!("malformed message: {e}")), Flow::Continue),
    };
    match request {
        Request::Reset {
            seed, stage, scenario, ..
        } => match env.reset(seed, stage, &scenario) {
            Ok(state) => (
                reply_ok(json!({"state": state.0, "info": scenario_info(env)})),
                Flow::Continue,
            ),
            Err(e) => (reply_err(e.to_string()), Flow::Continue),
        },
        Request::Step { action, .. } => {
            let Ok(action) = <[f64; ACTION_DIM]>::try_from(action.as_slice()) else {
                return (
                    reply_err(format!(
                        "action must have {ACTION_DIM} components, got {}",
                        action.len()
                    )),
                    Flow::Continue,
                );
            };
            match env.step(&MdpAction(action)) {
                Ok(r) => (
                    reply_ok(json!({
                        "state": r.state.0,
                        "reward": r.reward,
                        "done": r.done,
                        "info": {"status": status_name(r.status), "sl_engaged": r.safety_engaged},
                    })),
                    Flow::Continue,
                ),
                Err(e) => (reply_err(e.to_string()), Flow::Continue),
            }
        }
        Request::Close { .. } => (reply_ok(json!({})), Flow::End),
    }
}

/// Serves one session: reads requests line by line until `close`, a
/// version mismatch or end of input.
pub fn serve<R: BufRead, W: Write>(config: EnvConfig, input: R, mut output: W) -> Result<()> {
    let mut env = Env::new(config)?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (reply, flow) = handle(&mut env, &line);
        serde_json::to_writer(&mut output, &reply)?;
        output.write_all(b"\n")?;
        output.flush()?;
        if flow == Flow::End {
            break;
        }
    }
    Ok(())
}

/// Environment configuration that shares a policy-free base scenario.
pub fn env_config_from(base: &ScenarioConfig, stage: u32, noise: Option<SpeedNoise>) -> EnvConfig {
    let mut base = base.clone();
    base.planner = PlannerChoice::External { safety_layer: false };
    base.noise = noise;
    EnvConfig::new(base, stage)
}
