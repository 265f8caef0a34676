//! Batch evaluation over the initialisation grid and success-rate reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::BlockingParams;
use crate::error::{Error, Result};
use crate::planner::CostPreset;
use crate::policy::PolicyWeights;
use crate::sim::{run_episode, EpisodeOutcome, EpisodeStatus, PlannerChoice, ScenarioConfig, SpeedNoise};

/// Evenly spaced values `start, start + step, ...` up to `stop` inclusive.
pub fn stepped_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bad range {start}..={stop} step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    pub blocker_s: Vec<f64>,
    pub blocker_n: Vec<f64>,
    pub lookaheads: Vec<f64>,
}

impl Default for EvaluationGrid {
    /// 41 gaps x 7 lateral offsets x 6 lookaheads.
    fn default() -> Self {
        Self {
            blocker_s: stepped_range(20.0, 100.0, 2.0).expect("static range"),
            blocker_n: stepped_range(-6.0, 6.0, 2.0).expect("static range"),
            lookaheads: stepped_range(40.0, 140.0, 20.0).expect("static range"),
        }
    }
}

/// One grid configuration with its coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: (usize, usize, usize),
    pub blocker_s: f64,
    pub blocker_n: f64,
    pub lookahead: f64,
}

impl EvaluationGrid {
    pub fn len(&self) -> usize {
        self.blocker_s.len() * self.blocker_n.len() * self.lookaheads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn per_lookahead(&self) -> usize {
        self.blocker_s.len() * self.blocker_n.len()
    }

    /// Configurations ordered by lookahead, then gap, then lateral offset.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for (d, &lookahead) in self.lookaheads.iter().enumerate() {
            for (i, &blocker_s) in self.blocker_s.iter().enumerate() {
                for (j, &blocker_n) in self.blocker_n.iter().enumerate() {
                    out.push(GridPoint {
                        index: (i, j, d),
                        blocker_s,
                        blocker_n,
                        lookahead,
                    });
                }
            }
        }
        out
    }

    pub fn restricted_to(&self, lookaheads: &[f64]) -> Self {
        Self {
            lookaheads: lookaheads.to_vec(),
            ..self.clone()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-episode seed from the master seed and grid coordinates.
pub fn episode_seed(master: u64, index: (usize, usize, usize)) -> u64 {
    let mut h = splitmix64(master);
    for c in [index.0, index.1, index.2] {
        h = splitmix64(h ^ c as u64);
    }
    h
}

#[derive(Debug, Clone)]
pub enum Variant {
    Conventional(CostPreset),
    Learned {
        name: String,
        policy: Arc<PolicyWeights<f64>>,
        safety_layer: bool,
    },
}

impl Variant {
    /// Learned variant named `rl` or `rl-sl`.
    pub fn learned(policy: Arc<PolicyWeights<f64>>, safety_layer: bool) -> Self {
        let name = if safety_layer { "rl-sl" } else { "rl" };
        Variant::Learned {
            name: name.to_string(),
            policy,
            safety_layer,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Variant::Conventional(p) => p.name(),
            Variant::Learned { name, .. } => name,
        }
    }

    pub fn planner(&self) -> PlannerChoice {
        match self {
            Variant::Conventional(p) => PlannerChoice::Conventional(p.weights()),
            Variant::Learned {
                policy, safety_layer, ..
            } => PlannerChoice::Learned {
                policy: Arc::clone(policy),
                safety_layer: *safety_layer,
            },
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Worker threads; `0` uses the rayon default.
    pub jobs: usize,
    pub seed: u64,
    pub noise: Option<SpeedNoise>,
    pub keep_traces: bool,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub variant: String,
    pub s_d: f64,
    pub s_b: f64,
    pub n_b: f64,
    pub seed: u64,
    pub status: EpisodeStatus,
    pub steps: usize,
    pub sl_engagements: usize,
}

/// Rates in percent for one variant and lookahead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub variant: String,
    pub s_d: f64,
    pub success: f64,
    pub collision: f64,
    pub infeasible: f64,
    pub track_end: f64,
    pub episodes: usize,
}

impl SuccessRow {
    pub fn rate(&self, status: EpisodeStatus) -> f64 {
        match status {
            EpisodeStatus::Success => self.success,
            EpisodeStatus::Collision => self.collision,
            EpisodeStatus::Infeasible => self.infeasible,
            EpisodeStatus::TrackEnd => self.track_end,
        }
    }
}

pub const REPORT_HEADER: &str = "variant,s_d,success,collision,infeasible,track_end,episodes";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub rows: Vec<SuccessRow>,
}

impl SuccessReport {
    /// Aggregates episode records per variant and lookahead, keeping the
    /// order in which variants first appear and sorting lookaheads.
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let mut variants: Vec<&str> = Vec::new();
        let mut counts: BTreeMap<(usize, u64), [usize; 4]> = BTreeMap::new();
        for r in records {
            let v = match variants.iter().position(|v| *v == r.variant) {
                Some(i) => i,
                None => {
                    variants.push(&r.variant);
                    variants.len() - 1
                }
            };
            let slot = EpisodeStatus::ALL
                .iter()
                .position(|s| *s == r.status)
                .expect("known status");
            counts.entry((v, r.s_d.to_bits())).or_default()[slot] += 1;
        }
        let mut keys: Vec<_> = counts.keys().copied().collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0).then(f64::from_bits(a.1).total_cmp(&f64::from_bits(b.1))));
        let rows = keys
            .into_iter()
            .map(|key| {
                let c = counts[&key];
                let total: usize = c.iter().sum();
                let pct = |n: usize| 100.0 * n as f64 / total as f64;
                SuccessRow {
                    variant: variants[key.0].to_string(),
                    s_d: f64::from_bits(key.1),
                    success: pct(c[0]),
                    collision: pct(c[1]),
                    infeasible: pct(c[2]),
                    track_end: pct(c[3]),
                    episodes: total,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, variant: &str, s_d: f64) -> Option<&SuccessRow> {
        self.rows.iter().find(|r| r.variant == variant && r.s_d == s_d)
    }

    pub fn variant(&self, variant: &str) -> Vec<&SuccessRow> {
        self.rows.iter().filter(|r| r.variant == variant).collect()
    }

    pub fn variants(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.variant) {
                out.push(r.variant.clone());
            }
        }
        out
    }

    pub fn merge(&mut self, other: SuccessReport) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != REPORT_HEADER {
            return Err(Error::Config(format!(
                "unexpected report header `{}`",
                header.join(",")
            )));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<SuccessRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub fn write_records<W: Write>(records: &[EpisodeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub records: Vec<EpisodeRecord>,
    pub report: SuccessReport,
    /// Outcomes in record order, kept when requested.
    pub outcomes: Option<Vec<EpisodeOutcome>>,
}

/// Scenario for one grid point, derived from `base`.
pub fn scenario_for(base: &ScenarioConfig, variant: &Variant, point: &GridPoint, opts: &EvalOptions) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.planner = variant.planner();
    cfg.blocker_s = point.blocker_s;
    cfg.blocker_n = point.blocker_n;
    cfg.blocking = BlockingParams {
        lookahead: point.lookahead,
        ..base.blocking
    };
    cfg.noise = opts.noise;
    cfg.seed = episode_seed(opts.seed, point.index);
    cfg
}

/// Runs every grid configuration for `variant`. Results do not depend on
/// the number of worker threads.
pub fn evaluate(
    base: &ScenarioConfig,
    variant: &Variant,
    grid: &EvaluationGrid,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    let points = grid.points();
    let run = || {
        points
            .par_iter()
            .map(|p| {
                let cfg = scenario_for(base, variant, p, opts);
                run_episode(&cfg).map(|out| (cfg.seed, *p, out))
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = if opts.jobs == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?
    };

    let records: Vec<EpisodeRecord> = results
        .iter()
        .map(|(seed, p, out)| EpisodeRecord {
            variant: variant.name().to_string(),
            s_d: p.lookahead,
            s_b: p.blocker_s,
            n_b: p.blocker_n,
            seed: *seed,
            status: out.status,
            steps: out.steps,
            sl_engagements: out.safety_engagements(),
        })
        .collect();
    let report = SuccessReport::from_records(&records);
    let outcomes = opts
        .keep_traces
        .then(|| results.into_iter().map(|(_, _, out)| out).collect());
    Ok(Evaluation {
        records,
        report,
        outcomes,
    })
}

/// Learned policy under speed-observation noise, without and with the
/// safety layer, on the same seeds.
pub fn noise_study(
    base: &ScenarioConfig,
    policy: Arc<PolicyWeights<f64>>,
    std_dev: f64,
    grid: &EvaluationGrid,
    opts: &EvalOptions,
) -> Result<(Evaluation, Evaluation)> {
    if !(std_dev >= 0.0) {
        return Err(Error::InvalidParameter("noise std_dev must be >= 0".into()));
    }
    let opts = EvalOptions {
        noise: Some(SpeedNoise { mean: 0.0, std_dev }),
        ..opts.clone()
    };
    let without = evaluate(base, &Variant::learned(Arc::clone(&policy), false), grid, &opts)?;
    let with = evaluate(base, &Variant::learned(policy, true), grid, &opts)?;
    Ok((without, with))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_cardinality() {
        let grid = EvaluationGrid::default();
        assert_eq!(grid.blocker_s.len(), 41);
        assert_eq!(grid.blocker_n.len(), 7);
        assert_eq!(grid.lookaheads, vec![40.0, 60.0, 80.0, 100.0, 120.0, 140.0]);
        assert_eq!(grid.len(), 1722);
        assert_eq!(grid.per_lookahead(), 287);
        assert_eq!(grid.points().len(), 1722);
        assert_eq!(grid.blocker_s[40], 100.0);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(episode_seed(1, (2, 3, 4)), episode_seed(1, (2, 3, 4)));
        assert_ne!(episode_seed(1, (2, 3, 4)), episode_seed(1, (3, 2, 4)));
        assert_ne!(episode_seed(1, (2, 3, 4)), episode_seed(2, (2, 3, 4)));
    }

    #[test]
    fn aggregation_and_csv_round_trip() {
        let rec = |s_d: f64, status| EpisodeRecord {
            variant: "x".into(),
            s_d,
            s_b: 20.0,
            n_b: 0.0,
            seed: 0,
            status,
            steps: 1,
            sl_engagements: 0,
        };
        let records = vec![
            rec(60.0, EpisodeStatus::Success),
            rec(40.0, EpisodeStatus::Collision),
            rec(40.0, EpisodeStatus::Success),
            rec(40.0, EpisodeStatus::TrackEnd),
            rec(40.0, EpisodeStatus::Infeasible),
        ];
        let report = SuccessReport::from_records(&records);
        assert_eq!(report.rows.len(), 2);
        let r = report.row("x", 40.0).unwrap();
        assert_eq!(
            (r.success, r.collision, r.infeasible, r.track_end, r.episodes),
            (25.0, 25.0, 25.0, 25.0, 4)
        );
        assert_eq!(report.rows[0].s_d, 40.0);

        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPORT_HEADER);
        assert_eq!(SuccessReport::read_csv(buf.as_slice()).unwrap(), report);
    }

    #[test]
    fn ranges() {
        assert_eq!(stepped_range(0.0, 1.0, 0.5).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(stepped_range(0.0, 1.0, 0.0).is_err());
        assert!(stepped_range(1.0, 0.0, 1.0).is_err());
    }
}
