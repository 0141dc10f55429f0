use std::collections::VecDeque;

use super::{Experiment, TrainError};
use crate::conv::{compute_rewards, local_views, Observations, Rewards};
use crate::field::Field;
use crate::pde::{EnvError, Environment};
use crate::scalar::Real;

/// Everything a controller sees about one control step.
pub struct Step<'a, T> {
    pub obs: &'a Observations<T>,
    /// Local view of every sensor.
    pub views: &'a [Vec<T>],
    /// Actions after clamping, one per actuator.
    pub actions: &'a [T],
    pub rewards: &'a Rewards<T>,
    pub next_obs: &'a Observations<T>,
    pub next_views: &'a [Vec<T>],
    pub terminal: bool,
}

/// Decides actuator commands each step, and optionally learns from the outcome.
pub trait Controller<T: Real> {
    /// One action per actuator. `agents[p]` is the sensor that drives actuator `p`.
    fn act(&mut self, obs: &Observations<T>, views: &[Vec<T>], agents: &[usize]) -> Result<Vec<T>, TrainError>;

    /// Called after every controlled step with the transition it produced.
    fn observe(&mut self, _step: &Step<'_, T>, _agents: &[usize]) -> Result<(), TrainError> {
        Ok(())
    }
}

/// No control at all.
pub struct ZeroController;

impl<T: Real> Controller<T> for ZeroController {
    fn act(&mut self, _: &Observations<T>, _: &[Vec<T>], agents: &[usize]) -> Result<Vec<T>, TrainError> {
        Ok(vec![T::zero(); agents.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub r_global: f64,
    pub r_local_mean: f64,
    pub action_rms: f64,
    pub mse_to_ref: f64,
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeLog<T> {
    pub rows: Vec<StepRecord>,
    pub terminated: bool,
    /// `(t, state)` pairs recorded at the configured cadence.
    pub snapshots: Vec<(f64, Field<T>)>,
    pub final_state: Option<Field<T>>,
}

impl<T: Real> EpisodeLog<T> {
    /// Sum of global rewards, the terminal penalty included.
    pub fn total_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.r_global).sum()
    }

    /// `<(y - y_ref)^2>` after the last step.
    pub fn final_mse(&self) -> f64 {
        if self.terminated {
            return f64::INFINITY;
        }
        self.rows.last().map_or(f64::NAN, |r| r.mse_to_ref)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r_global).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSpec {
    pub ic_seed: u64,
    pub warmup_steps: usize,
    pub steps: usize,
    /// Record the state every this many controlled steps (0 disables).
    pub snapshot_every: usize,
}

struct History<T> {
    stride: usize,
    delays: usize,
    past: VecDeque<Observations<T>>,
}

impl<T: Real> History<T> {
    fn new(delays: usize, stride: usize) -> Self {
        Self { stride, delays, past: VecDeque::with_capacity(delays * stride + 1) }
    }

    fn push(&mut self, obs: Observations<T>) {
        if self.delays == 0 {
            return;
        }
        if self.past.len() == self.delays * self.stride + 1 {
            self.past.pop_front();
        }
        self.past.push_back(obs);
    }

    /// Delayed copies for the most recently pushed observation, oldest clamped to the first record.
    fn delayed(&self) -> Vec<Observations<T>> {
        let last = self.past.len() as isize - 1;
        (1..=self.delays)
            .map(|d| {
                let idx = (last - (d * self.stride) as isize).max(0) as usize;
                self.past[idx].clone()
            })
            .collect()
    }
}

fn views<T: Real>(exp: &Experiment<T>, obs: &Observations<T>, history: &History<T>) -> Result<Vec<Vec<T>>, TrainError> {
    let delayed = history.delayed();
    Ok(local_views(obs, &exp.sensors, &delayed)?)
}

/// Warm-up with zero control, then `spec.steps` controlled steps:
/// sense, decide, actuate, advance, reward, hand the transition to the controller.
pub fn run_episode<T: Real>(
    exp: &Experiment<T>,
    controller: &mut dyn Controller<T>,
    spec: EpisodeSpec,
) -> Result<EpisodeLog<T>, TrainError> {
    run_episode_from(exp, controller, exp.env.initial_condition(spec.ic_seed), spec)
}

/// Same as [`run_episode`] from an explicit initial state; `spec.ic_seed` is ignored.
pub fn run_episode_from<T: Real>(
    exp: &Experiment<T>,
    controller: &mut dyn Controller<T>,
    initial: Field<T>,
    spec: EpisodeSpec,
) -> Result<EpisodeLog<T>, TrainError> {
    let dt = exp.dt();
    let cfg = &exp.config;
    if initial.grid() != &exp.grid() || initial.components() != exp.env.components() {
        return Err(TrainError::Config("initial state does not match the environment".into()));
    }
    let mut history = History::new(cfg.sensors.delays, cfg.sensors.delay_steps);
    let mut state = initial;
    let zero = Field::zeros(exp.grid(), 1);
    let mut obs = exp.sensors.sense(&state)?;
    history.push(obs.clone());
    for _ in 0..spec.warmup_steps {
        state = exp.env.step(&state, &zero).map_err(TrainError::WarmUp)?;
        obs = exp.sensors.sense(&state)?;
        history.push(obs.clone());
    }
    let t0 = spec.warmup_steps as f64 * dt;
    let agents = exp.actuators.agents().to_vec();
    let mut log = EpisodeLog { rows: Vec::with_capacity(spec.steps), terminated: false, snapshots: Vec::new(), final_state: None };
    if spec.snapshot_every > 0 {
        log.snapshots.push((t0, state.clone()));
    }
    let mut cur_views = views(exp, &obs, &history)?;
    for k in 0..spec.steps {
        let raw = controller.act(&obs, &cur_views, &agents)?;
        let act = exp.actuators.actuate(&raw)?;
        let action_rms = (act.applied.iter().map(|a| a.to_f64_lossy().powi(2)).sum::<f64>() / act.applied.len() as f64).sqrt();
        let t = t0 + (k + 1) as f64 * dt;
        match exp.env.step(&state, &act.field) {
            Ok(next) => {
                let rewards = compute_rewards(&next, &act.field, &act.applied, &exp.sensors, &exp.actuators, &cfg.reward)?;
                let next_obs = exp.sensors.sense(&next)?;
                history.push(next_obs.clone());
                let next_views = views(exp, &next_obs, &history)?;
                controller.observe(
                    &Step {
                        obs: &obs,
                        views: &cur_views,
                        actions: &act.applied,
                        rewards: &rewards,
                        next_obs: &next_obs,
                        next_views: &next_views,
                        terminal: false,
                    },
                    &agents,
                )?;
                let local_mean = agents.iter().map(|&i| rewards.local[i].to_f64_lossy()).sum::<f64>() / agents.len() as f64;
                log.rows.push(StepRecord {
                    step: k,
                    t,
                    r_global: rewards.global.to_f64_lossy(),
                    r_local_mean: local_mean,
                    action_rms,
                    mse_to_ref: next.mean_square_deviation(cfg.reward.component, T::lit(cfg.reward.target)).to_f64_lossy(),
                    clamped: act.clamped,
                });
                state = next;
                obs = next_obs;
                cur_views = next_views;
                if spec.snapshot_every > 0 && (k + 1) % spec.snapshot_every == 0 {
                    log.snapshots.push((t, state.clone()));
                }
            }
            Err(EnvError::BlowUp { substep, max_abs }) => {
                log::warn!("episode blew up at step {k} (inner step {substep}, max |y| = {max_abs:e})");
                let penalty = T::lit(cfg.training.terminal_penalty);
                let rewards = Rewards { local: vec![penalty; exp.sensors.count()], global: penalty };
                controller.observe(
                    &Step {
                        obs: &obs,
                        views: &cur_views,
                        actions: &act.applied,
                        rewards: &rewards,
                        next_obs: &obs,
                        next_views: &cur_views,
                        terminal: true,
                    },
                    &agents,
                )?;
                log.rows.push(StepRecord {
                    step: k,
                    t,
                    r_global: cfg.training.terminal_penalty,
                    r_local_mean: cfg.training.terminal_penalty,
                    action_rms,
                    mse_to_ref: f64::INFINITY,
                    clamped: act.clamped,
                });
                log.terminated = true;
                return Ok(log);
            }
            Err(e) => return Err(e.into()),
        }
    }
    log.final_state = Some(state);
    Ok(log)
}
