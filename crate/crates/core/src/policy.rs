//! Learned end-state policy: observation normalisation, the fully connected
//! actor network and the mapping from normalised actions to end states.
//!
//! Weights are exchanged as a JSON document:
//!
//! ```json
//! {
//!   "architecture": [12, 256, 256, 4],
//!   "activation": "tanh",
//!   "layers": [{"w": [[...], ...], "b": [...]}, ...],
//!   "norms": {"s": 1500.0, ...},
//!   "action_bounds": {"n_min": -6.535, ...},
//!   "metadata": {...}
//! }
//! ```
//!
//! `w` is row-major with one row per output neuron. Every layer, including
//! the output layer, is followed by `tanh`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{lateral_velocity, longitudinal_velocity, CurvilinearState};
use crate::error::{Error, Result};
use crate::sampling::EndState;
use crate::scalar::Scalar;
use crate::track::TrackModel;
use crate::trajectory::FrenetState;

pub const STATE_DIM: usize = 12;
pub const ACTION_DIM: usize = 4;

/// Divisors for the twelve observation components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms<F> {
    pub s: F,
    pub s_dot: F,
    pub s_ddot: F,
    pub n: F,
    pub n_dot: F,
    pub n_ddot: F,
    pub heading: F,
    pub gap: F,
    pub rel_s_dot: F,
    pub rel_n: F,
    pub rel_n_dot: F,
    pub rel_heading: F,
}

impl<F: Scalar> Default for Norms<F> {
    fn default() -> Self {
        let v_max = F::lit(85.0);
        let accel = F::lit(25.0);
        let angle = F::FRAC_PI_2();
        Self {
            s: F::lit(1500.0),
            s_dot: v_max,
            s_ddot: accel,
            n: F::lit(7.5),
            n_dot: v_max,
            n_ddot: accel,
            heading: angle,
            gap: F::lit(100.0),
            rel_s_dot: F::lit(35.0),
            rel_n: F::lit(15.0),
            rel_n_dot: v_max,
            rel_heading: angle,
        }
    }
}

impl<F: Scalar> Norms<F> {
    fn as_array(&self) -> [F; STATE_DIM] {
        [
            self.s,
            self.s_dot,
            self.s_ddot,
            self.n,
            self.n_dot,
            self.n_ddot,
            self.heading,
            self.gap,
            self.rel_s_dot,
            self.rel_n,
            self.rel_n_dot,
            self.rel_heading,
        ]
    }
}

/// Intervals that the normalised action components map onto.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds<F> {
    pub n_min: F,
    pub n_max: F,
    pub n_dot_max: F,
    pub n_ddot_max: F,
    pub s_dot_min: F,
    pub s_dot_max: F,
}

impl<F: Scalar> Default for ActionBounds<F> {
    fn default() -> Self {
        let edge = F::lit(7.5) - F::lit(1.93) * F::half();
        Self {
            n_min: -edge,
            n_max: edge,
            n_dot_max: F::lit(15.0),
            n_ddot_max: F::lit(25.0),
            s_dot_min: F::zero(),
            s_dot_max: F::lit(85.0),
        }
    }
}

impl<F: Scalar> ActionBounds<F> {
    /// Bounds matching a track and vehicle: lateral targets inside the
    /// drivable width, end speed within `[0, max_speed]`.
    pub fn for_track(track: &TrackModel<F>, vehicle_width: F, max_speed: F) -> Self {
        let (lo, hi) = track.lateral_limits(vehicle_width * F::half());
        Self {
            n_min: lo,
            n_max: hi,
            s_dot_max: max_speed,
            ..Self::default()
        }
    }

    fn intervals(&self) -> [(F, F); ACTION_DIM] {
        [
            (self.n_min, self.n_max),
            (-self.n_dot_max, self.n_dot_max),
            (-self.n_ddot_max, self.n_ddot_max),
            (self.s_dot_min, self.s_dot_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpState<F>(pub [F; STATE_DIM]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpAction<F>(pub [F; ACTION_DIM]);

/// What the follower knows about the blocker. The longitudinal speed may
/// carry observation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpponentObservation<F> {
    pub s: F,
    pub s_dot: F,
    pub n: F,
    pub n_dot: F,
    pub heading: F,
}

impl<F: Scalar> OpponentObservation<F> {
    pub fn exact(state: &CurvilinearState<F>, track: &TrackModel<F>) -> Self {
        Self {
            s: state.s,
            s_dot: longitudinal_velocity(state, track),
            n: state.n,
            n_dot: lateral_velocity(state),
            heading: state.heading,
        }
    }

    pub fn with_speed_offset(self, offset: F) -> Self {
        Self {
            s_dot: self.s_dot + offset,
            ..self
        }
    }
}

/// Divides each raw component by its norm and clamps to `[-1, 1]`.
pub fn build_state<F: Scalar>(
    ego: &FrenetState<F>,
    opponent: &OpponentObservation<F>,
    norms: &Norms<F>,
) -> MdpState<F> {
    let heading = ego.heading();
    let raw = [
        ego.lon.pos,
        ego.lon.vel,
        ego.lon.acc,
        ego.lat.pos,
        ego.lat.vel,
        ego.lat.acc,
        heading,
        ego.lon.pos - opponent.s,
        ego.lon.vel - opponent.s_dot,
        ego.lat.pos - opponent.n,
        ego.lat.vel - opponent.n_dot,
        heading - opponent.heading,
    ];
    let norms = norms.as_array();
    let mut out = [F::zero(); STATE_DIM];
    for ((o, r), d) in out.iter_mut().zip(raw).zip(norms) {
        *o = (r / d).clamp_to(-F::one(), F::one());
    }
    MdpState(out)
}

/// Affine map from `[-1, 1]` onto each bound interval; components outside
/// `[-1, 1]` are clamped first.
pub fn denormalize_action<F: Scalar>(action: &MdpAction<F>, bounds: &ActionBounds<F>) -> EndState<F> {
    let mut v = [F::zero(); ACTION_DIM];
    for ((out, &a), (lo, hi)) in v.iter_mut().zip(&action.0).zip(bounds.intervals()) {
        let mid = (lo + hi) * F::half();
        let half = (hi - lo) * F::half();
        *out = mid + half * a.clamp_to(-F::one(), F::one());
    }
    EndState::new(v[0], v[1], v[2], v[3])
}

/// Inverse of [`denormalize_action`] for end states within the bounds.
pub fn normalize_end_state<F: Scalar>(end: &EndState<F>, bounds: &ActionBounds<F>) -> MdpAction<F> {
    let raw = [end.n, end.n_dot, end.n_ddot, end.s_dot];
    let mut a = [F::zero(); ACTION_DIM];
    for ((out, r), (lo, hi)) in a.iter_mut().zip(raw).zip(bounds.intervals()) {
        let mid = (lo + hi) * F::half();
        let half = (hi - lo) * F::half();
        *out = (r - mid) / half;
    }
    MdpAction(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer<F> {
    pub w: Vec<Vec<F>>,
    pub b: Vec<F>,
}

impl<F: Scalar> DenseLayer<F> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: vec![vec![F::zero(); inputs]; outputs],
            b: vec![F::zero(); outputs],
        }
    }

    /// `tanh(W x + b)` written into `out`.
    fn forward_into(&self, input: &[F], out: &mut Vec<F>) {
        out.clear();
        out.extend(self.w.iter().zip(&self.b).map(|(row, &bias)| {
            let mut acc = bias;
            for (&w, &x) in row.iter().zip(input) {
                acc += w * x;
            }
            acc.tanh()
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyWeights<F> {
    pub architecture: Vec<usize>,
    pub activation: String,
    pub layers: Vec<DenseLayer<F>>,
    pub norms: Norms<F>,
    pub action_bounds: ActionBounds<F>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

impl<F: Scalar + Serialize + for<'de> Deserialize<'de>> PolicyWeights<F> {
    pub fn from_json(text: &str) -> Result<Self> {
        let weights: Self = serde_json::from_str(text)
            .map_err(|e| Error::PolicyFormat(format!("cannot parse weights document: {e}")))?;
        weights.validate()?;
        Ok(weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::PolicyFormat(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

impl<F: Scalar> PolicyWeights<F> {
    /// Network of the given layer sizes with all parameters zero.
    pub fn zeros(architecture: &[usize]) -> Self {
        Self {
            architecture: architecture.to_vec(),
            activation: "tanh".into(),
            layers: architecture.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
            norms: Norms::default(),
            action_bounds: ActionBounds::default(),
            metadata: serde_json::Value::Null,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let arch = &self.architecture;
        if arch.len() < 2 || arch[0] != STATE_DIM || arch[arch.len() - 1] != ACTION_DIM {
            return Err(Error::PolicyFormat(format!(
                "architecture must map {STATE_DIM} inputs to {ACTION_DIM} outputs, got {arch:?}"
            )));
        }
        if self.activation != "tanh" {
            return Err(Error::PolicyFormat(format!(
                "unsupported activation `{}`",
                self.activation
            )));
        }
        if self.layers.len() != arch.len() - 1 {
            return Err(Error::PolicyFormat(format!(
                "{} layers declared by the architecture, {} present",
                arch.len() - 1,
                self.layers.len()
            )));
        }
        for (i, (layer, dims)) in self.layers.iter().zip(arch.windows(2)).enumerate() {
            let (inputs, outputs) = (dims[0], dims[1]);
            if layer.w.len() != outputs || layer.b.len() != outputs || layer.w.iter().any(|r| r.len() != inputs) {
                return Err(Error::PolicyFormat(format!(
                    "layer {i} does not have shape {outputs}x{inputs}"
                )));
            }
            let finite = layer.b.iter().chain(layer.w.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::PolicyFormat(format!("layer {i} contains non-finite values")));
            }
        }
        let norms = self.norms.as_array();
        if norms.iter().any(|d| !(d.is_finite() && *d > F::zero())) {
            return Err(Error::PolicyFormat("norms must be positive".into()));
        }
        let b = &self.action_bounds;
        if !(b.n_min < b.n_max && b.s_dot_min < b.s_dot_max && b.n_dot_max > F::zero() && b.n_ddot_max > F::zero()) {
            return Err(Error::PolicyFormat("action bounds are empty".into()));
        }
        Ok(())
    }

    /// Deterministic action for `state`.
    pub fn forward(&self, state: &MdpState<F>) -> MdpAction<F> {
        let mut current: Vec<F> = state.0.to_vec();
        let mut next = Vec::with_capacity(self.architecture.iter().copied().max().unwrap_or(0));
        for layer in &self.layers {
            layer.forward_into(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        let mut action = [F::zero(); ACTION_DIM];
        action.copy_from_slice(&current[..ACTION_DIM]);
        MdpAction(action)
    }
}
