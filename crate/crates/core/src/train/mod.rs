//! Multi-agent episode loop, training with parameter and data sharing,
//! evaluation and cross-domain transfer.

mod config;
mod episode;
mod experiment;

pub use config::{
    preset, ActuatorConfig, EnvConfig, ExperimentConfig, SensorConfig, TrainingConfig, PRESETS,
};
pub use episode::{run_episode, run_episode_from, Controller, EpisodeLog, EpisodeSpec, Step, StepRecord, ZeroController};
pub use experiment::Experiment;

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::conv::{ConvError, Observations};
use crate::ddpg::{Checkpoint, CheckpointError, DdpgAgent, DdpgError, ReplayBuffer, Transition, UpdateStats};
use crate::pde::EnvError;
use crate::rng::{derive_seed, stream, Rng, Stream};
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("environment failed during warm-up: {0}")]
    WarmUp(EnvError),
    #[error("sensing/actuation: {0}")]
    Conv(#[from] ConvError),
    #[error("agent: {0}")]
    Agent(#[from] DdpgError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("policy geometry does not match the target domain:\n  {}", .0.join("\n  "))]
    Geometry(Vec<String>),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// How observations map to agent inputs and rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sharing {
    /// One shared policy applied to every local view; one transition per actuator per step.
    Local,
    /// One policy on the concatenated observation, one transition per step.
    Global,
}

/// A DDPG agent wired into the episode loop, with its replay buffer and random streams.
pub struct DdpgController<T: Real> {
    pub agent: DdpgAgent<T>,
    pub buffer: ReplayBuffer<T>,
    pub sharing: Sharing,
    pub explore: bool,
    pub learn: bool,
    pub warm_fill: usize,
    pub updates_per_step: usize,
    pub last_update: Option<UpdateStats>,
    explore_rng: Rng,
    replay_rng: Rng,
}

impl<T: Real> DdpgController<T> {
    pub fn new(agent: DdpgAgent<T>, sharing: Sharing, warm_fill: usize, seed: u64) -> Self {
        let capacity = agent.config().buffer_capacity;
        Self {
            agent,
            buffer: ReplayBuffer::new(capacity),
            sharing,
            explore: true,
            learn: true,
            warm_fill,
            updates_per_step: 1,
            last_update: None,
            explore_rng: stream(seed, Stream::Exploration),
            replay_rng: stream(seed, Stream::ReplaySampling),
        }
    }

    /// Frozen, noise-free copy of the current policy.
    pub fn evaluator(agent: DdpgAgent<T>, sharing: Sharing) -> Self {
        let mut c = Self::new(agent, sharing, usize::MAX, 0);
        c.buffer = ReplayBuffer::new(1);
        c.explore = false;
        c.learn = false;
        c
    }

    fn global_state(obs: &Observations<T>) -> Vec<T> {
        obs.data.clone()
    }
}

impl<T: Real> Controller<T> for DdpgController<T> {
    fn act(&mut self, obs: &Observations<T>, views: &[Vec<T>], agents: &[usize]) -> Result<Vec<T>, TrainError> {
        match self.sharing {
            Sharing::Local => {
                let mut out = Vec::with_capacity(agents.len());
                for &i in agents {
                    out.push(self.agent.act(&views[i], self.explore, &mut self.explore_rng)?[0]);
                }
                Ok(out)
            }
            Sharing::Global => Ok(self.agent.act(&Self::global_state(obs), self.explore, &mut self.explore_rng)?),
        }
    }

    fn observe(&mut self, step: &Step<'_, T>, agents: &[usize]) -> Result<(), TrainError> {
        if !self.learn {
            return Ok(());
        }
        match self.sharing {
            Sharing::Local => {
                for (p, &i) in agents.iter().enumerate() {
                    self.buffer.push(Transition {
                        state: step.views[i].clone(),
                        action: vec![step.actions[p]],
                        reward: step.rewards.local[i],
                        next_state: step.next_views[i].clone(),
                        terminal: step.terminal,
                    });
                }
            }
            Sharing::Global => self.buffer.push(Transition {
                state: Self::global_state(step.obs),
                action: step.actions.to_vec(),
                reward: step.rewards.global,
                next_state: Self::global_state(step.next_obs),
                terminal: step.terminal,
            }),
        }
        if self.buffer.len() >= self.warm_fill {
            for _ in 0..self.updates_per_step {
                let batch = self.buffer.sample(self.agent.config().batch_size, &mut self.replay_rng)?;
                self.last_update = Some(self.agent.update(&batch)?);
            }
        }
        Ok(())
    }
}

/// Limits on a training run. Training stops at whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub episodes: usize,
    pub wall_clock: Option<Duration>,
}

impl Budget {
    pub fn episodes(episodes: usize) -> Self {
        Self { episodes, wall_clock: None }
    }
}

/// Where training artifacts go.
#[derive(Default)]
pub struct TrainSink<'a> {
    /// Learning curve, one row per controlled step.
    pub curve: Option<&'a mut dyn Write>,
    /// Periodic checkpoints land here as `episode-<k>.policy`.
    pub checkpoint_dir: Option<PathBuf>,
}

pub const CURVE_HEADER: &str = "episode,step,t,r_global,r_local_mean,action_rms,mse_to_ref";

pub fn write_curve_rows<T: Real>(out: &mut dyn Write, episode: usize, log: &EpisodeLog<T>) -> std::io::Result<()> {
    for r in &log.rows {
        writeln!(
            out,
            "{episode},{},{},{},{},{},{}",
            r.step, r.t, r.r_global, r.r_local_mean, r.action_rms, r.mse_to_ref
        )?;
        out.flush()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episode: usize,
    pub mean_return: f64,
    pub mean_final_mse: f64,
    /// Evaluation episodes that ended in a blow-up.
    pub blow_ups: usize,
}

impl EvalSummary {
    /// Fewer blow-ups first, then higher mean return.
    pub fn beats(&self, other: Option<&EvalSummary>) -> bool {
        match other {
            None => true,
            Some(o) => self.blow_ups < o.blow_ups || (self.blow_ups == o.blow_ups && self.mean_return > o.mean_return),
        }
    }
}

pub struct TrainOutcome<T: Real> {
    /// Agent with the best evaluation, see [`EvalSummary::beats`].
    pub best: DdpgAgent<T>,
    pub best_eval: EvalSummary,
    pub last: DdpgAgent<T>,
    pub evals: Vec<EvalSummary>,
    pub episodes_run: usize,
    pub wall_clock: Duration,
}

/// Seed of evaluation episode `i`; the same for every run with the same base seed.
pub fn eval_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, Stream::EvalInitialConditions, i as u64)
}

/// Evaluate a controller on `episodes` fixed initial conditions starting at index `first`.
pub fn evaluate<T: Real>(
    exp: &Experiment<T>,
    controller: &mut dyn Controller<T>,
    first: usize,
    episodes: usize,
    steps: usize,
) -> Result<Vec<EpisodeLog<T>>, TrainError> {
    (first..first + episodes)
        .map(|i| {
            run_episode(
                exp,
                controller,
                EpisodeSpec {
                    ic_seed: eval_seed(exp.config.seed, i),
                    warmup_steps: exp.warmup_steps(),
                    steps,
                    snapshot_every: exp.config.training.snapshot_every,
                },
            )
        })
        .collect()
}

fn summarize<T: Real>(episode: usize, logs: &[EpisodeLog<T>]) -> EvalSummary {
    let n = logs.len().max(1) as f64;
    EvalSummary {
        episode,
        mean_return: logs.iter().map(|l| l.total_reward()).sum::<f64>() / n,
        mean_final_mse: logs.iter().map(|l| l.final_mse()).sum::<f64>() / n,
        blow_ups: logs.iter().filter(|l| l.terminated).count(),
    }
}

/// Fresh agent for an experiment, initialized from the run seed.
pub fn init_agent<T: Real>(exp: &Experiment<T>, sharing: Sharing) -> Result<DdpgAgent<T>, TrainError> {
    let (state_dim, action_dim) = match sharing {
        Sharing::Local => (exp.state_dim(), 1),
        Sharing::Global => (exp.sensors.count() * exp.env_components(), exp.actuators.count()),
    };
    Ok(DdpgAgent::new(exp.config.agent.clone(), state_dim, action_dim, &mut stream(exp.config.seed, Stream::NetworkInit))?)
}

impl<T: Real> Experiment<T> {
    fn env_components(&self) -> usize {
        self.config.env.components()
    }
}

/// Train a fresh agent, evaluating every `eval_every` episodes and after the last one.
pub fn train<T: Real>(
    exp: &Experiment<T>,
    sharing: Sharing,
    budget: Budget,
    sink: TrainSink<'_>,
) -> Result<TrainOutcome<T>, TrainError> {
    let agent = init_agent(exp, sharing)?;
    train_agent(exp, agent, sharing, budget, sink)
}

pub fn train_agent<T: Real>(
    exp: &Experiment<T>,
    agent: DdpgAgent<T>,
    sharing: Sharing,
    budget: Budget,
    mut sink: TrainSink<'_>,
) -> Result<TrainOutcome<T>, TrainError> {
    let start = Instant::now();
    let cfg = &exp.config;
    let tc = &cfg.training;
    if sharing == Sharing::Global && cfg.sensors.delays > 0 {
        return Err(TrainError::Config("the global agent does not support delayed observations".into()));
    }
    if let Some(out) = sink.curve.as_deref_mut() {
        writeln!(out, "{CURVE_HEADER}")?;
        out.flush()?;
    }
    if let Some(dir) = &sink.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut ctl = DdpgController::new(agent, sharing, tc.warm_fill, cfg.seed);
    ctl.updates_per_step = tc.updates_per_step;
    let mut best = ctl.agent.clone();
    let mut best_eval: Option<EvalSummary> = None;
    let mut evals = Vec::new();
    let mut episodes_run = 0;
    let mut evaluated_last = true;
    let run_eval = |agent: &DdpgAgent<T>| -> Result<Vec<EpisodeLog<T>>, TrainError> {
        let mut e = DdpgController::evaluator(agent.clone(), sharing);
        evaluate(exp, &mut e, 0, tc.eval_episodes.max(1), tc.eval_steps)
    };
    for ep in 0..budget.episodes {
        if let Some(limit) = budget.wall_clock {
            if start.elapsed() >= limit {
                break;
            }
        }
        let progress = if budget.episodes > 1 { ep as f64 / (budget.episodes - 1) as f64 } else { 1.0 };
        ctl.agent.set_noise(cfg.agent.noise_at(progress));
        let log = run_episode(
            exp,
            &mut ctl,
            EpisodeSpec {
                ic_seed: derive_seed(cfg.seed, Stream::TrainInitialConditions, ep as u64),
                warmup_steps: exp.warmup_steps(),
                steps: tc.steps,
                snapshot_every: 0,
            },
        )?;
        if let Some(out) = sink.curve.as_deref_mut() {
            write_curve_rows(out, ep, &log)?;
        }
        episodes_run = ep + 1;
        log::info!(
            "episode {ep}: return {:.4}, final mse {:.4e}, buffer {}",
            log.total_reward(),
            log.final_mse(),
            ctl.buffer.len()
        );
        evaluated_last = false;
        if tc.eval_every > 0 && episodes_run % tc.eval_every == 0 {
            let s = summarize(episodes_run, &run_eval(&ctl.agent)?);
            log::info!("eval after {episodes_run} episodes: return {:.4}, final mse {:.4e}", s.mean_return, s.mean_final_mse);
            if s.beats(best_eval.as_ref()) {
                best_eval = Some(s.clone());
                best = ctl.agent.clone();
            }
            evals.push(s);
            evaluated_last = true;
        }
        if tc.checkpoint_every > 0 && episodes_run % tc.checkpoint_every == 0 {
            if let Some(dir) = &sink.checkpoint_dir {
                Checkpoint::from_agent(&ctl.agent, exp.geometry()).save(&dir.join(format!("episode-{episodes_run}.policy")))?;
            }
        }
    }
    if !evaluated_last || evals.is_empty() {
        let s = summarize(episodes_run, &run_eval(&ctl.agent)?);
        if s.beats(best_eval.as_ref()) {
            best_eval = Some(s.clone());
            best = ctl.agent.clone();
        }
        evals.push(s);
    }
    let best_eval = best_eval.expect("at least one evaluation ran");
    Ok(TrainOutcome { best, best_eval, last: ctl.agent, evals, episodes_run, wall_clock: start.elapsed() })
}

/// Evaluate a trained local policy on another domain. Refuses when the sensing geometry differs.
pub fn transfer<T: Real>(
    checkpoint: &Checkpoint,
    target: &Experiment<T>,
    first: usize,
    episodes: usize,
) -> Result<Vec<EpisodeLog<T>>, TrainError> {
    let diff = checkpoint.geometry.mismatches(&target.geometry());
    if !diff.is_empty() {
        return Err(TrainError::Geometry(diff));
    }
    let agent = checkpoint.to_agent()?;
    let mut ctl = DdpgController::evaluator(agent, Sharing::Local);
    evaluate(target, &mut ctl, first, episodes, target.config.training.eval_steps)
}
