use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use overtake_core::env::{env_config_from, Env, ScenarioOverrides, TrainingProfile};
use overtake_core::eval::episode_seed;
use overtake_core::policy::{normalize_end_state, MdpAction, PolicyWeights, ACTION_DIM, STATE_DIM};
use overtake_core::sim::{EpisodeStatus, PlannerChoice, ScenarioConfig};
use overtake_teacher::Teacher;

#[derive(Parser)]
#[command(
    name = "overtake-teacher",
    about = "Demonstrations for imitation training of the end-state policy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out episodes and label every visited state with the teacher's end state.
    Collect {
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `single` or `mixed`.
        #[arg(long, default_value = "mixed")]
        profile: String,
        /// Learner weights; without them the teacher drives.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Per-step probability that the teacher drives instead of the learner.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Success statistics of a policy (or the teacher) on random training scenarios.
    Validate {
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 1_000_000)]
        seed: u64,
        #[arg(long, default_value = "mixed")]
        profile: String,
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

struct Rollout {
    rows: Vec<([f64; STATE_DIM], [f64; ACTION_DIM])>,
    lookahead: f64,
    status: EpisodeStatus,
}

fn make_env(profile: &str) -> Result<Env> {
    let base = ScenarioConfig::new(PlannerChoice::External { safety_layer: false });
    let mut config = env_config_from(&base, 6, None);
    config.profile = TrainingProfile::by_name(profile)?;
    Ok(Env::new(config)?)
}

/// One episode. `label` asks the teacher for every state; otherwise it is
/// only consulted when it drives.
fn rollout(
    profile: &str,
    seed: u64,
    teacher: &Teacher,
    learner: Option<&PolicyWeights<f64>>,
    beta: f64,
    label: bool,
) -> Result<Rollout> {
    let mut env = make_env(profile)?;
    let bounds = env_config_from(
        &ScenarioConfig::new(PlannerChoice::External { safety_layer: false }),
        6,
        None,
    )
    .action_bounds;
    let mut state = env.reset(seed, None, &ScenarioOverrides::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let lookahead = env.episode().expect("reset").config().blocking.lookahead;
    let mut rows = Vec::new();
    loop {
        let episode = env.episode().expect("reset");
        let teacher_drives = learner.is_none() || rng.random::<f64>() < beta;
        let target = (label || teacher_drives).then(|| normalize_end_state(&teacher.act(episode), &bounds));
        if let (true, Some(t)) = (label, target) {
            rows.push((state.0, t.0));
        }
        let action = match (teacher_drives, learner) {
            (false, Some(net)) => net.forward(&state),
            _ => MdpAction(target.expect("teacher label").0),
        };
        let step = env.step(&action)?;
        state = step.state;
        if let Some(status) = step.status {
            return Ok(Rollout {
                rows,
                lookahead,
                status,
            });
        }
    }
}

fn load(policy: Option<&PathBuf>) -> Result<Option<PolicyWeights<f64>>> {
    policy
        .map(|p| PolicyWeights::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()
}

fn summary(rollouts: &[Rollout]) {
    let mut lookaheads: Vec<f64> = rollouts.iter().map(|r| r.lookahead).collect();
    lookaheads.sort_by(f64::total_cmp);
    lookaheads.dedup();
    for sd in lookaheads {
        let sub: Vec<_> = rollouts.iter().filter(|r| r.lookahead == sd).collect();
        let pct = |s| 100.0 * sub.iter().filter(|r| r.status == s).count() as f64 / sub.len() as f64;
        eprintln!(
            "s_d {sd:>5}: n {:>4} success {:6.2} collision {:6.2} infeasible {:6.2} track_end {:6.2}",
            sub.len(),
            pct(EpisodeStatus::Success),
            pct(EpisodeStatus::Collision),
            pct(EpisodeStatus::Infeasible),
            pct(EpisodeStatus::TrackEnd)
        );
    }
}

fn main() -> Result<()> {
    let teacher = Teacher::default();
    match Cli::parse().command {
        Command::Collect {
            episodes,
            seed,
            profile,
            policy,
            beta,
            out,
        } => {
            let learner = load(policy.as_ref())?;
            let rollouts = (0..episodes)
                .into_par_iter()
                .map(|i| {
                    rollout(
                        &profile,
                        episode_seed(seed, (i, 0, 0)),
                        &teacher,
                        learner.as_ref(),
                        beta,
                        true,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let mut w = csv::Writer::from_path(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut header: Vec<String> = vec!["episode".into(), "s_d".into()];
            header.extend((0..STATE_DIM).map(|i| format!("s{i}")));
            header.extend((0..ACTION_DIM).map(|i| format!("a{i}")));
            w.write_record(&header)?;
            for (i, r) in rollouts.iter().enumerate() {
                for (s, a) in &r.rows {
                    let mut rec = vec![i.to_string(), r.lookahead.to_string()];
                    rec.extend(s.iter().chain(a).map(|v| v.to_string()));
                    w.write_record(&rec)?;
                }
            }
            w.flush()?;
            eprintln!("{} rows", rollouts.iter().map(|r| r.rows.len()).sum::<usize>());
            summary(&rollouts);
        }
        Command::Validate {
            episodes,
            seed,
            profile,
            policy,
        } => {
            let learner = load(policy.as_ref())?;
            let rollouts = (0..episodes)
                .into_par_iter()
                .map(|i| {
                    rollout(
                        &profile,
                        episode_seed(seed, (i, 0, 0)),
                        &teacher,
                        learner.as_ref(),
                        0.0,
                        false,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            summary(&rollouts);
        }
    }
    Ok(())
}
