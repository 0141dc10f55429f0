mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use convrl::baselines::{global_config, opposition_sweep, train_global};
use convrl::config::{load_config, parse_config};
use convrl::ddpg::Checkpoint;
use convrl::train::{
    evaluate, train, Budget, DdpgController, ExperimentConfig, Sharing, TrainError, TrainSink, PRESETS,
};
use convrl::Experiment;

use output::{write_eval, write_evals, write_manifest, RunDir};

/// Exit code for a policy whose sensing geometry does not fit the target domain.
const GEOMETRY_MISMATCH: u8 = 2;

#[derive(Parser)]
#[command(name = "convrl", version, about = "Convolutional multi-agent RL for PDE control")]
struct Cli {
    /// Experiment file, or the name of a built-in preset.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory. Defaults to `runs/<name>-seed<seed>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the shared local agent.
    Train {
        /// Overrides the episode count of the config.
        #[arg(long)]
        episodes: Option<usize>,
        /// Stop after this many seconds of training.
        #[arg(long)]
        max_seconds: Option<f64>,
    },
    /// Evaluate a policy on the configured domain.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 5)]
        episodes: usize,
    },
    /// Evaluate a policy on another domain without retraining.
    Transfer {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 5)]
        episodes: usize,
    },
    /// Opposition control sweep or the global single-agent baseline.
    Baseline {
        #[arg(long, value_enum, default_value_t = BaselineKind::Opposition)]
        kind: BaselineKind,
        /// Gains for the opposition sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0])]
        gains: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        episodes: usize,
        /// Training budget of the global agent.
        #[arg(long)]
        max_seconds: Option<f64>,
    },
    /// Run the property and oracle suite.
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Opposition,
    Global,
}

fn resolve_config(arg: Option<&str>, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let arg = arg.context("--config is required for this command")?;
    let mut cfg = if Path::new(arg).exists() {
        load_config(Path::new(arg)).with_context(|| format!("in {arg}"))?
    } else if PRESETS.contains(&arg) {
        parse_config(&format!("preset = {arg}\n"))?
    } else {
        bail!("{arg}: no such file or preset (presets: {})", PRESETS.join(", "));
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Command::Check = cli.command {
        let reports = convrl::checks::run_all();
        for r in &reports {
            println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        }
        let failed = reports.iter().filter(|r| !r.passed).count();
        println!("{} of {} checks passed", reports.len() - failed, reports.len());
        return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }
    let cfg = resolve_config(cli.config.as_deref(), cli.seed)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", cfg.name, cfg.seed)));
    let dir = RunDir::create(&out)?;
    match cli.command {
        Command::Check => unreachable!(),
        Command::Train { episodes, max_seconds } => {
            write_manifest(&dir, "train", &cfg, &[("episodes", episodes.map(|e| e.to_string()))])?;
            let exp = Experiment::new(cfg)?;
            let budget = Budget {
                episodes: episodes.unwrap_or(exp.config.training.episodes),
                wall_clock: max_seconds.map(Duration::from_secs_f64),
            };
            let mut curve = dir.csv("learning_curve.csv")?;
            let ckpt = (exp.config.training.checkpoint_every > 0).then(|| dir.path("checkpoints"));
            let outcome =
                train(&exp, Sharing::Local, budget, TrainSink { curve: Some(&mut curve), checkpoint_dir: ckpt })?;
            Checkpoint::from_agent(&outcome.best, exp.geometry()).save(&dir.path("best.policy"))?;
            Checkpoint::from_agent(&outcome.last, exp.geometry()).save(&dir.path("last.policy"))?;
            write_evals(&dir, &outcome.evals)?;
            println!(
                "trained {} episodes in {:.1}s; best eval after {} episodes: return {:.4}, final mse {:.4e}",
                outcome.episodes_run,
                outcome.wall_clock.as_secs_f64(),
                outcome.best_eval.episode,
                outcome.best_eval.mean_return,
                outcome.best_eval.mean_final_mse
            );
            println!("outputs in {}", dir.root().display());
        }
        cmd @ (Command::Eval { .. } | Command::Transfer { .. }) => {
            let (name, policy, episodes) = match cmd {
                Command::Eval { policy, episodes } => ("eval", policy, episodes),
                Command::Transfer { policy, episodes } => ("transfer", policy, episodes),
                _ => unreachable!(),
            };
            write_manifest(&dir, name, &cfg, &[("policy", Some(policy.display().to_string()))])?;
            let exp = Experiment::new(cfg)?;
            let ckpt = Checkpoint::load(&policy).with_context(|| format!("loading {}", policy.display()))?;
            let logs = match convrl::train::transfer(&ckpt, &exp, 0, episodes) {
                Err(TrainError::Geometry(diff)) => {
                    eprintln!("policy {} does not fit {}:", policy.display(), exp.config.name);
                    for d in &diff {
                        eprintln!("  {d}");
                    }
                    return Ok(ExitCode::from(GEOMETRY_MISMATCH));
                }
                r => r?,
            };
            write_eval(&dir, &logs, exp.config.training.snapshot_every > 0)?;
            let mean = logs.iter().map(|l| l.final_mse()).sum::<f64>() / logs.len().max(1) as f64;
            println!("{name}: {} episodes, mean final mse {mean:.4e}", logs.len());
        }
        Command::Baseline { kind, gains, episodes, max_seconds } => match kind {
            BaselineKind::Opposition => {
                write_manifest(&dir, "baseline opposition", &cfg, &[])?;
                let exp = Experiment::new(cfg)?;
                let sweep = opposition_sweep(&exp, &gains, episodes)?;
                output::write_sweep(&dir, &sweep)?;
                for (g, mse) in &sweep {
                    println!("gain {g}: final mse {mse:.4e}");
                }
            }
            BaselineKind::Global => {
                let cfg = global_config(&cfg);
                write_manifest(&dir, "baseline global", &cfg, &[])?;
                let exp = Experiment::new(cfg)?;
                let budget = Budget {
                    episodes: exp.config.training.episodes,
                    wall_clock: max_seconds.map(Duration::from_secs_f64),
                };
                let mut curve = dir.csv("learning_curve.csv")?;
                output::tag_baseline(&mut curve, "global")?;
                let outcome = train_global(&exp, budget, TrainSink { curve: Some(&mut curve), checkpoint_dir: None })?;
                write_evals(&dir, &outcome.evals)?;
                let mut e = DdpgController::evaluator(outcome.best, Sharing::Global);
                let logs = evaluate(&exp, &mut e, 0, episodes, exp.config.training.eval_steps)?;
                write_eval(&dir, &logs, false)?;
                let mean = logs.iter().map(|l| l.total_reward()).sum::<f64>() / logs.len().max(1) as f64;
                println!("global agent: {} episodes, mean eval return {mean:.4}", outcome.episodes_run);
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
