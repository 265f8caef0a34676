//! Privileged demonstrator for the end-state policy.
//!
//! The teacher sees the full simulator state, including the blocker's
//! controller, and picks end states by simulating two-phase manoeuvres: a
//! first end state held for a few steps, then a passing end state held for
//! the rest of the horizon. Only the first end state is returned, so the
//! search is repeated every step.

use overtake_core::sampling::EndState;
use overtake_core::sim::{Episode, EpisodeStatus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    /// Lateral end positions tried in both phases.
    pub lateral_targets: Vec<f64>,
    /// End speeds tried in the first phase.
    pub first_speeds: Vec<f64>,
    /// Steps after which the second phase may start.
    pub switch_steps: Vec<usize>,
    /// Length of the second phase in steps.
    pub passing_steps: usize,
    pub passing_speed: f64,
    /// Weight and cap of the lateral separation in the non-terminal score.
    pub separation_weight: f64,
    pub separation_cap: f64,
    /// Bonus for staying on the current side of the blocker; makes labels
    /// consistent in near-symmetric states.
    pub side_bonus: f64,
    /// Footprint scales for the simulated manoeuvres, tried in order; the
    /// first one under which some manoeuvre succeeds is used. Scales above
    /// one keep the teacher clear of the blocker.
    pub footprint_scales: Vec<f64>,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            lateral_targets: vec![-6.0, -3.0, 0.0, 3.0, 6.0],
            first_speeds: vec![85.0, 60.0, 45.0],
            switch_steps: vec![1, 5, 10, 15],
            passing_steps: 20,
            passing_speed: 85.0,
            separation_weight: 2.0,
            separation_cap: 4.0,
            side_bonus: 0.5,
            footprint_scales: vec![1.6, 1.3, 1.0],
        }
    }
}

const SUCCESS: f64 = 1000.0;
const COLLISION: f64 = -1000.0;
const INFEASIBLE: f64 = -2000.0;

/// Terminal score: earlier success is better, later failure is less bad.
pub fn terminal_score(status: EpisodeStatus, step: usize) -> f64 {
    let k = step as f64;
    match status {
        EpisodeStatus::Success => SUCCESS - k,
        EpisodeStatus::Collision => COLLISION + k,
        EpisodeStatus::Infeasible => INFEASIBLE + k,
        EpisodeStatus::TrackEnd => 0.0,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Teacher {
    pub config: TeacherConfig,
}

impl Teacher {
    pub fn new(config: TeacherConfig) -> Self {
        Self { config }
    }

    /// Score of a rollout that has not terminated: lead over the blocker
    /// plus capped lateral separation.
    fn open_score(&self, sim: &Episode) -> f64 {
        let e = sim.ego();
        let o = sim.opponent();
        let sep = (e.lat.pos - o.n).abs().min(self.config.separation_cap);
        e.lon.pos - o.s + self.config.separation_weight * sep
    }

    /// Holds `end` for `steps`; `Err` carries the terminal score.
    fn hold(sim: &mut Episode, end: EndState<f64>, steps: usize, offset: usize) -> Result<(), f64> {
        for k in 0..steps {
            let decision = sim.decide_end_state(end, false);
            if let Some(status) = sim.apply(decision) {
                return Err(terminal_score(status, offset + k));
            }
        }
        Ok(())
    }

    /// Best first-phase end state and its score.
    pub fn search(&self, episode: &Episode) -> (EndState<f64>, f64) {
        let mut best = (
            EndState::new(0.0, 0.0, 0.0, self.config.passing_speed),
            f64::NEG_INFINITY,
        );
        for &scale in &self.config.footprint_scales {
            best = self.search_scaled(episode, scale);
            if best.1 > SUCCESS / 2.0 {
                break;
            }
        }
        best
    }

    fn search_scaled(&self, episode: &Episode, footprint_scale: f64) -> (EndState<f64>, f64) {
        let c = &self.config;
        let e = episode.ego();
        let d = e.lat.pos - episode.opponent().n;
        let side = if d.abs() > 1e-6 { d.signum() } else { -1.0 };

        let mut best = (EndState::new(0.0, 0.0, 0.0, c.passing_speed), f64::NEG_INFINITY);
        let mut consider = |end: EndState<f64>, score: f64| {
            let score = if end.n * side > 0.0 {
                score + c.side_bonus
            } else {
                score
            };
            if score > best.1 {
                best = (end, score);
            }
        };
        for &n1 in &c.lateral_targets {
            for &v1 in &c.first_speeds {
                let first = EndState::new(n1, 0.0, 0.0, v1);
                let mut sim = episode.clone();
                sim.set_footprint_scale(footprint_scale);
                let mut done = 0;
                for &m in &c.switch_steps {
                    if let Err(score) = Self::hold(&mut sim, first, m.saturating_sub(done), done) {
                        consider(first, score);
                        break;
                    }
                    done = done.max(m);
                    for &n2 in &c.lateral_targets {
                        let mut rest = sim.clone();
                        let second = EndState::new(n2, 0.0, 0.0, c.passing_speed);
                        let score = match Self::hold(&mut rest, second, c.passing_steps, done) {
                            Err(score) => score,
                            Ok(()) => self.open_score(&rest),
                        };
                        consider(first, score);
                    }
                }
            }
        }
        best
    }

    pub fn act(&self, episode: &Episode) -> EndState<f64> {
        self.search(episode).0
    }
}
