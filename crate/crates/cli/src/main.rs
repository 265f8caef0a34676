use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use overtake_core::config::Settings;
use overtake_core::env::{env_config_from, serve, TrainingProfile, STAGES};
use overtake_core::eval::{evaluate, noise_study, write_records, EvalOptions, Evaluation, SuccessReport, Variant};
use overtake_core::planner::CostPreset;
use overtake_core::plot::render_report;
use overtake_core::policy::PolicyWeights;
use overtake_core::sim::{run_episode, SpeedNoise};

#[derive(Parser)]
#[command(name = "overtake", version, about = "Blocking-duel overtaking simulator")]
struct Cli {
    /// Settings file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode.
    Simulate {
        /// Scenario settings file; overrides --config.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Per-step trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the evaluation grid for one or more planner variants.
    Evaluate {
        /// Preset name (small-ch, ..., large-clp), `conventional` for all six,
        /// `rl` or `rl-sl`. Repeatable.
        #[arg(long, required = true)]
        variant: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Policy weights for the learned variants; falls back to [planner] policy.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Observation noise standard deviation on the opponent speed.
        #[arg(long)]
        sigma: Option<f64>,
        /// Also write one trace CSV per episode.
        #[arg(long)]
        traces: bool,
    },
    /// Learned policy under observation noise, without and with the safety layer.
    NoiseStudy {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the training environment over newline-delimited JSON.
    ServeEnv {
        /// `stdio`, or a TCP address such as 127.0.0.1:5555.
        #[arg(long, default_value = "stdio")]
        endpoint: String,
        #[arg(long, default_value_t = 2)]
        stage: u32,
        /// Scenario distribution: `single` or `mixed`.
        #[arg(long, default_value = "mixed")]
        profile: String,
        /// Observation noise standard deviation.
        #[arg(long)]
        sigma: Option<f64>,
        /// Serve a single TCP session, then exit.
        #[arg(long)]
        once: bool,
    },
    /// Render SVG charts from report CSVs.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default settings file.
    Defaults,
}

fn settings(path: Option<&Path>) -> Result<Settings> {
    match path {
        Some(p) => Settings::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Settings::default()),
    }
}

fn noise(sigma: Option<f64>) -> Option<SpeedNoise> {
    sigma.map(|std_dev| SpeedNoise { mean: 0.0, std_dev })
}

fn parse_variants(names: &[String], settings: &Settings, weights: Option<&Path>) -> Result<Vec<Variant>> {
    let mut policy: Option<Arc<PolicyWeights<f64>>> = None;
    let mut load_policy = || -> Result<Arc<PolicyWeights<f64>>> {
        if let Some(p) = &policy {
            return Ok(Arc::clone(p));
        }
        let p = match weights {
            Some(path) => Arc::new(PolicyWeights::load(path).with_context(|| format!("loading {}", path.display()))?),
            None => settings.load_policy()?,
        };
        policy = Some(Arc::clone(&p));
        Ok(p)
    };
    let mut out = Vec::new();
    for name in names {
        match name.as_str() {
            "conventional" => out.extend(CostPreset::ALL.iter().map(|p| Variant::Conventional(*p))),
            "rl" => out.push(Variant::learned(load_policy()?, false)),
            "rl-sl" => out.push(Variant::learned(load_policy()?, true)),
            other => match CostPreset::from_str(other) {
                Ok(p) => out.push(Variant::Conventional(p)),
                Err(_) => bail!("unknown variant `{other}`"),
            },
        }
    }
    Ok(out)
}

fn write_evaluation(dir: &Path, eval: &Evaluation, traces: bool) -> Result<()> {
    if traces {
        let tdir = dir.join("traces");
        std::fs::create_dir_all(&tdir)?;
        let outcomes = eval.outcomes.as_ref().expect("traces kept");
        for (rec, out) in eval.records.iter().zip(outcomes) {
            let name = format!("{}_sd{}_sb{}_nb{}.csv", rec.variant, rec.s_d, rec.s_b, rec.n_b);
            out.save_trace(tdir.join(name))?;
        }
    }
    Ok(())
}

fn print_report(report: &SuccessReport) {
    println!(
        "{:<12} {:>6} {:>8} {:>10} {:>11} {:>10}",
        "variant", "s_d", "success", "collision", "infeasible", "track_end"
    );
    for r in &report.rows {
        println!(
            "{:<12} {:>6} {:>8.2} {:>10.2} {:>11.2} {:>10.2}",
            r.variant, r.s_d, r.success, r.collision, r.infeasible, r.track_end
        );
    }
}

fn save_all(dir: &Path, evals: &[&Evaluation]) -> Result<SuccessReport> {
    std::fs::create_dir_all(dir)?;
    let mut report = SuccessReport::default();
    let mut records = Vec::new();
    for e in evals {
        report.merge(e.report.clone());
        records.extend(e.records.iter().cloned());
    }
    report.save(dir.join("success.csv"))?;
    write_records(&records, std::fs::File::create(dir.join("episodes.csv"))?)?;
    Ok(report)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { scenario, trace } => {
            let s = settings(scenario.as_deref().or(cli.config.as_deref()))?;
            let out = run_episode(&s.scenario()?)?;
            println!(
                "status={} steps={} sl_engagements={}",
                out.status,
                out.steps,
                out.safety_engagements()
            );
            if let Some(path) = trace {
                out.save_trace(&path)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Evaluate {
            variant,
            out,
            jobs,
            seed,
            weights,
            sigma,
            traces,
        } => {
            let s = settings(cli.config.as_deref())?;
            let variants = parse_variants(&variant, &s, weights.as_deref())?;
            let base = s.scenario_with(variants[0].planner())?;
            let grid = s.grid()?;
            let opts = EvalOptions {
                jobs,
                seed,
                noise: noise(sigma).or(s.noise),
                keep_traces: traces,
            };
            let mut evals = Vec::new();
            for v in &variants {
                let start = Instant::now();
                let e = evaluate(&base, v, &grid, &opts)?;
                eprintln!(
                    "{v}: {} episodes in {:.1} s",
                    e.records.len(),
                    start.elapsed().as_secs_f64()
                );
                write_evaluation(&out, &e, traces)?;
                evals.push(e);
            }
            let report = save_all(&out, &evals.iter().collect::<Vec<_>>())?;
            print_report(&report);
        }
        Command::NoiseStudy {
            weights,
            sigma,
            out,
            jobs,
            seed,
        } => {
            let s = settings(cli.config.as_deref())?;
            let policy =
                Arc::new(PolicyWeights::load(&weights).with_context(|| format!("loading {}", weights.display()))?);
            let base = s.scenario_with(Variant::learned(Arc::clone(&policy), true).planner())?;
            let opts = EvalOptions {
                jobs,
                seed,
                ..EvalOptions::default()
            };
            let (without, with) = noise_study(&base, policy, sigma, &s.grid()?, &opts)?;
            let report = save_all(&out, &[&without, &with])?;
            print_report(&report);
        }
        Command::ServeEnv {
            endpoint,
            stage,
            profile,
            sigma,
            once,
        } => {
            if !STAGES.contains(&stage) {
                bail!("stage must be in {}..={}", STAGES.start(), STAGES.end());
            }
            let s = settings(cli.config.as_deref())?;
            let base = s.scenario_with(overtake_core::sim::PlannerChoice::External { safety_layer: false })?;
            let mut config = env_config_from(&base, stage, noise(sigma).or(s.noise));
            config.profile = TrainingProfile::by_name(&profile)?;
            if endpoint == "stdio" || endpoint == "-" {
                let stdin = std::io::stdin();
                serve(config, stdin.lock(), std::io::stdout().lock())?;
            } else {
                let listener = TcpListener::bind(&endpoint).with_context(|| format!("binding {endpoint}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                for stream in listener.incoming() {
                    let stream = stream?;
                    let reader = BufReader::new(stream.try_clone()?);
                    if let Err(e) = serve(config.clone(), reader, &stream) {
                        eprintln!("session ended with error: {e}");
                    }
                    if once {
                        break;
                    }
                }
            }
        }
        Command::Plot { input, out } => {
            let mut report = SuccessReport::default();
            let mut entries: Vec<_> = std::fs::read_dir(&input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            entries.sort();
            for path in entries {
                // Only report files; per-episode CSVs have another header.
                if let Ok(r) = SuccessReport::load(&path) {
                    report.merge(r);
                }
            }
            if report.rows.is_empty() {
                bail!("no report CSV found in {}", input.display());
            }
            for f in render_report(&report, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Defaults => {
            let text = Settings::default().to_toml()?;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
