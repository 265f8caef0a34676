//! TOML settings file.
//!
//! Every section and key is optional; missing values take the defaults used
//! throughout the crate.
//!
//! ```toml
//! [track]
//! length = 1500.0
//! half_width_left = 7.5
//! half_width_right = 7.5
//!
//! [vehicle]
//! length = 4.9
//! width = 1.93
//! max_speed = 85.0
//! min_turn_radius = 1.0
//!
//! [gg]
//! rows = [[0.0, 25.0, 25.0], [85.0, 25.0, 25.0]]   # (v, a_lon_max, a_lat_max)
//!
//! [blocking]
//! lookahead = 80.0
//!
//! [planner]
//! kind = "conventional"        # or "rl"
//! preset = "small-ch"
//! policy = "weights/reference_policy.json"
//! safety_layer = true
//!
//! [scenario]
//! blocker_s = 50.0
//! blocker_n = 0.0
//!
//! [grid]
//! blocker_s = { start = 20.0, stop = 100.0, step = 2.0 }
//!
//! [noise]
//! std_dev = 0.7
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::BlockingParams;
use crate::error::{Error, Result};
use crate::eval::{stepped_range, EvaluationGrid};
use crate::feasibility::{FeasibilityLimits, GgTable};
use crate::planner::{CostPreset, CostWeights};
use crate::policy::PolicyWeights;
use crate::sampling::SamplingConfig;
use crate::sim::{PlannerChoice, ScenarioConfig, SpeedNoise, VehicleGeometry};
use crate::track::TrackModel;
use crate::trajectory::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub length: f64,
    pub width: f64,
    pub max_speed: f64,
    pub min_turn_radius: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            length: 4.9,
            width: 1.93,
            max_speed: 85.0,
            min_turn_radius: 1.0,
        }
    }
}

/// Either explicit rows or constant limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GgSection {
    pub a_lon_max: f64,
    pub a_lat_max: f64,
    pub rows: Option<Vec<[f64; 3]>>,
}

impl Default for GgSection {
    fn default() -> Self {
        Self {
            a_lon_max: 25.0,
            a_lat_max: 25.0,
            rows: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    #[default]
    Conventional,
    Rl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub kind: PlannerKind,
    pub preset: CostPreset,
    /// Replaces the preset weights when present.
    pub cost: Option<CostWeights<f64>>,
    /// Policy weights file, relative to the settings file.
    pub policy: Option<PathBuf>,
    pub safety_layer: bool,
    pub horizon: f64,
    pub points: usize,
    pub lateral_samples: usize,
    pub speed_samples: usize,
}

impl Default for PlannerSection {
    fn default() -> Self {
        let sampling = SamplingConfig::<f64>::default();
        Self {
            kind: PlannerKind::Conventional,
            preset: CostPreset::SmallCh,
            cost: None,
            policy: None,
            safety_layer: true,
            horizon: sampling.grid.horizon,
            points: sampling.grid.points,
            lateral_samples: sampling.lateral_samples,
            speed_samples: sampling.speed_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub blocker_s: f64,
    pub blocker_n: f64,
    pub initial_speed: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub success_margin: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let base = ScenarioConfig::new(PlannerChoice::Conventional(CostPreset::SmallCh.weights()));
        Self {
            blocker_s: base.blocker_s,
            blocker_n: base.blocker_n,
            initial_speed: base.initial_speed,
            dt: base.dt,
            max_steps: base.max_steps,
            seed: base.seed,
            success_margin: base.success_margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        stepped_range(self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub blocker_s: RangeSpec,
    pub blocker_n: RangeSpec,
    pub lookahead: RangeSpec,
}

impl Default for GridSection {
    fn default() -> Self {
        let r = |start, stop, step| RangeSpec { start, stop, step };
        Self {
            blocker_s: r(20.0, 100.0, 2.0),
            blocker_n: r(-6.0, 6.0, 2.0),
            lookahead: r(40.0, 140.0, 20.0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub track: TrackModel<f64>,
    pub vehicle: VehicleSection,
    pub gg: GgSection,
    pub blocking: BlockingParams<f64>,
    pub planner: PlannerSection,
    pub scenario: ScenarioSection,
    pub grid: GridSection,
    pub noise: Option<SpeedNoise>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut settings = Self::from_toml(&text)?;
        settings.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(settings)
    }

    pub fn gg_table(&self) -> Result<GgTable<f64>> {
        match &self.gg.rows {
            Some(rows) => GgTable::new(rows.clone()),
            None => {
                if !(self.gg.a_lon_max >= 0.0 && self.gg.a_lat_max >= 0.0) {
                    return Err(Error::Config("gg limits must be non-negative".into()));
                }
                Ok(GgTable::constant(
                    self.gg.a_lon_max,
                    self.gg.a_lat_max,
                    self.vehicle.max_speed,
                ))
            }
        }
    }

    pub fn cost_weights(&self) -> CostWeights<f64> {
        self.planner.cost.unwrap_or_else(|| self.planner.preset.weights())
    }

    pub fn policy_path(&self) -> Option<PathBuf> {
        self.planner.policy.as_ref().map(|p| self.base_dir.join(p))
    }

    pub fn load_policy(&self) -> Result<Arc<PolicyWeights<f64>>> {
        let path = self
            .policy_path()
            .ok_or_else(|| Error::Config("[planner] policy is required for kind = \"rl\"".into()))?;
        Ok(Arc::new(PolicyWeights::load(path)?))
    }

    pub fn planner_choice(&self) -> Result<PlannerChoice> {
        Ok(match self.planner.kind {
            PlannerKind::Conventional => PlannerChoice::Conventional(self.cost_weights()),
            PlannerKind::Rl => PlannerChoice::Learned {
                policy: self.load_policy()?,
                safety_layer: self.planner.safety_layer,
            },
        })
    }

    /// Scenario with the given planner, everything else from the settings.
    pub fn scenario_with(&self, planner: PlannerChoice) -> Result<ScenarioConfig> {
        let v = &self.vehicle;
        let sampling = SamplingConfig {
            grid: TimeGrid::new(self.planner.horizon, self.planner.points)?,
            lateral_samples: self.planner.lateral_samples,
            speed_samples: self.planner.speed_samples,
            max_speed: v.max_speed,
            vehicle_width: v.width,
        };
        let sc = &self.scenario;
        let config = ScenarioConfig {
            track: self.track,
            vehicle: VehicleGeometry {
                length: v.length,
                width: v.width,
            },
            sampling,
            limits: FeasibilityLimits {
                min_turn_radius: v.min_turn_radius,
                gg: self.gg_table()?,
                vehicle_width: v.width,
            },
            blocking: self.blocking,
            blocker_s: sc.blocker_s,
            blocker_n: sc.blocker_n,
            initial_speed: sc.initial_speed,
            planner,
            dt: sc.dt,
            max_steps: sc.max_steps,
            noise: self.noise,
            seed: sc.seed,
            success_margin: sc.success_margin,
            footprint_scale: 1.0,
            opponent_active: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        self.scenario_with(self.planner_choice()?)
    }

    pub fn grid(&self) -> Result<EvaluationGrid> {
        Ok(EvaluationGrid {
            blocker_s: self.grid.blocker_s.values()?,
            blocker_n: self.grid.blocker_n.values()?,
            lookaheads: self.grid.lookahead.values()?,
        })
    }
}
