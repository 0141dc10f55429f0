//! Deep deterministic policy gradient learner shared by all agents.

mod buffer;
pub mod checkpoint;

pub use buffer::{ReplayBuffer, Transition};
pub use checkpoint::{Checkpoint, CheckpointError, PolicyGeometry};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::nn::{Activation, Adam, Mlp, NnError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DdpgError {
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,
    #[error("non-finite {what} during update {step}: {detail}")]
    NonFinite { what: &'static str, step: u64, detail: String },
    #[error("invalid agent settings: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Exploration noise standard deviation at the start and end of training, as fractions of `u_max`.
    pub noise_start: f64,
    pub noise_end: f64,
    pub u_max: f64,
    /// Half-width of the uniform initialization of both output layers.
    pub final_init: f64,
    /// Rewards are multiplied by this before entering the Bellman targets. Changes the
    /// scale of Q but not the greedy policy.
    #[serde(default = "unit_scale")]
    pub reward_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![6],
            critic_hidden: vec![140],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            noise_start: 0.1,
            noise_end: 0.01,
            u_max: 1.0,
            final_init: 3e-3,
            reward_scale: 1.0,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<(), DdpgError> {
        let bad = |m: &str| Err(DdpgError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("batch size and buffer capacity must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return bad("u_max must be positive");
        }
        if self.noise_start < 0.0 || self.noise_end < 0.0 || self.final_init <= 0.0 {
            return bad("noise levels must be non-negative and final_init positive");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive");
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }

    /// Noise level after `progress` in `[0, 1]` of training, linear between start and end.
    pub fn noise_at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.u_max * (self.noise_start + (self.noise_end - self.noise_start) * p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Mean squared Bellman error before the critic step.
    pub critic_loss: f64,
    /// Mean `Q(s, pi(s))` before the actor step.
    pub actor_objective: f64,
}

#[derive(Debug, Clone)]
pub struct DdpgAgent<T: Real> {
    config: DdpgConfig,
    state_dim: usize,
    action_dim: usize,
    actor: Mlp<T>,
    critic: Mlp<T>,
    actor_target: Mlp<T>,
    critic_target: Mlp<T>,
    actor_opt: Adam<T>,
    critic_opt: Adam<T>,
    noise: f64,
    updates: u64,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = Vec::with_capacity(hidden.len() + 2);
    s.push(input);
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl<T: Real> DdpgAgent<T> {
    pub fn new<R: Rng>(config: DdpgConfig, state_dim: usize, action_dim: usize, rng: &mut R) -> Result<Self, DdpgError> {
        config.validate()?;
        let actor = Mlp::random(
            &sizes(state_dim, &config.actor_hidden, action_dim),
            Activation::Relu,
            Activation::Tanh,
            config.u_max,
            config.final_init,
            rng,
        )?;
        let critic = Mlp::random(
            &sizes(state_dim + action_dim, &config.critic_hidden, 1),
            Activation::Relu,
            Activation::Identity,
            1.0,
            config.final_init,
            rng,
        )?;
        Self::from_networks(config, actor, critic)
    }

    /// Agent with the given online networks; targets start as copies.
    pub fn from_networks(config: DdpgConfig, actor: Mlp<T>, critic: Mlp<T>) -> Result<Self, DdpgError> {
        config.validate()?;
        let (state_dim, action_dim) = (actor.input_len(), actor.output_len());
        if critic.input_len() != state_dim + action_dim || critic.output_len() != 1 {
            return Err(DdpgError::Config(format!(
                "critic {:?} does not fit actor {:?}",
                critic.sizes(),
                actor.sizes()
            )));
        }
        let actor_opt = Adam::new(actor.params().len(), config.actor_lr);
        let critic_opt = Adam::new(critic.params().len(), config.critic_lr);
        let noise = config.noise_at(0.0);
        Ok(Self {
            state_dim,
            action_dim,
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
            noise,
            updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &DdpgConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn actor(&self) -> &Mlp<T> {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp<T> {
        &self.critic
    }

    pub fn actor_target(&self) -> &Mlp<T> {
        &self.actor_target
    }

    pub fn critic_target(&self) -> &Mlp<T> {
        &self.critic_target
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Exploration standard deviation in action units.
    pub fn set_noise(&mut self, sigma: f64) {
        self.noise = sigma.max(0.0);
    }

    pub fn set_tau(&mut self, tau: f64) {
        self.config.tau = tau;
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        self.config.gamma = gamma;
    }

    /// Deterministic policy output, plus clamped Gaussian noise when exploring.
    pub fn act<R: Rng>(&self, state: &[T], explore: bool, rng: &mut R) -> Result<Vec<T>, DdpgError> {
        let mut a = self.actor.forward(state)?;
        if explore && self.noise > 0.0 {
            let u = T::lit(self.config.u_max);
            for v in &mut a {
                let z: f64 = StandardNormal.sample(rng);
                *v = (*v + T::lit(self.noise * z)).max(-u).min(u);
            }
        }
        Ok(a)
    }

    /// Policy output without noise, for read-only use from several threads.
    pub fn policy(&self, state: &[T]) -> Result<Vec<T>, DdpgError> {
        Ok(self.actor.forward(state)?)
    }

    fn stack(&self, batch: &[&Transition<T>]) -> Result<(Vec<T>, Vec<T>, Vec<T>), DdpgError> {
        let (sd, ad) = (self.state_dim, self.action_dim);
        let mut sa = Vec::with_capacity(batch.len() * (sd + ad));
        let mut next = Vec::with_capacity(batch.len() * sd);
        let mut states = Vec::with_capacity(batch.len() * sd);
        for t in batch {
            if t.state.len() != sd || t.next_state.len() != sd || t.action.len() != ad {
                return Err(DdpgError::Network(NnError::InputShape { expected: sd, got: t.state.len() }));
            }
            sa.extend_from_slice(&t.state);
            sa.extend_from_slice(&t.action);
            next.extend_from_slice(&t.next_state);
            states.extend_from_slice(&t.state);
        }
        Ok((sa, next, states))
    }

    /// Bellman targets `c r + gamma (1 - terminal) Q'(s', pi'(s'))` with `c` the reward scale.
    pub fn targets(&self, batch: &[&Transition<T>]) -> Result<Vec<T>, DdpgError> {
        let (_, next, _) = self.stack(batch)?;
        let b = batch.len();
        let a_next = self.actor_target.forward_batch(&next, b)?;
        let mut input = Vec::with_capacity(b * (self.state_dim + self.action_dim));
        for n in 0..b {
            input.extend_from_slice(&next[n * self.state_dim..(n + 1) * self.state_dim]);
            input.extend_from_slice(&a_next.output()[n * self.action_dim..(n + 1) * self.action_dim]);
        }
        let q_next = self.critic_target.forward_batch(&input, b)?;
        let gamma = T::lit(self.config.gamma);
        let scale = T::lit(self.config.reward_scale);
        Ok(batch
            .iter()
            .zip(q_next.output())
            .map(|(t, &q)| if t.terminal { scale * t.reward } else { scale * t.reward + gamma * q })
            .collect())
    }

    /// Mean squared Bellman error of the online critic.
    pub fn critic_loss(&self, batch: &[&Transition<T>]) -> Result<T, DdpgError> {
        let y = self.targets(batch)?;
        let (sa, _, _) = self.stack(batch)?;
        let q = self.critic.forward_batch(&sa, batch.len())?;
        let b = T::from_usize_lossy(batch.len());
        Ok(q.output().iter().zip(&y).map(|(&q, &y)| (q - y) * (q - y)).sum::<T>() / b)
    }

    /// One critic step, one actor step, then soft target updates.
    pub fn update(&mut self, batch: &[&Transition<T>]) -> Result<UpdateStats, DdpgError> {
        if batch.is_empty() {
            return Err(DdpgError::Config("empty batch".into()));
        }
        let step = self.updates + 1;
        let b = batch.len();
        let bt = T::from_usize_lossy(b);
        let y = self.targets(batch)?;
        let (sa, _, states) = self.stack(batch)?;

        let tape = self.critic.forward_batch(&sa, b)?;
        let q = tape.output();
        let loss = q.iter().zip(&y).map(|(&q, &y)| (q - y) * (q - y)).sum::<T>() / bt;
        if !loss.is_finite() {
            return Err(self.non_finite("critic loss", step, loss.to_f64_lossy()));
        }
        let two = T::lit(2.0);
        let g: Vec<T> = q.iter().zip(&y).map(|(&q, &y)| two * (q - y) / bt).collect();
        let grads = self.critic.backward(&tape, &g);
        self.critic_opt.step(self.critic.params_mut(), &grads.params);

        let (sd, ad) = (self.state_dim, self.action_dim);
        let a_tape = self.actor.forward_batch(&states, b)?;
        let mut input = Vec::with_capacity(b * (sd + ad));
        for n in 0..b {
            input.extend_from_slice(&states[n * sd..(n + 1) * sd]);
            input.extend_from_slice(&a_tape.output()[n * ad..(n + 1) * ad]);
        }
        let q_tape = self.critic.forward_batch(&input, b)?;
        let objective = q_tape.output().iter().copied().sum::<T>() / bt;
        if !objective.is_finite() {
            return Err(self.non_finite("actor objective", step, objective.to_f64_lossy()));
        }
        let dq = self.critic.backward(&q_tape, &vec![-T::one() / bt; b]);
        let mut da = Vec::with_capacity(b * ad);
        for n in 0..b {
            da.extend_from_slice(&dq.input[n * (sd + ad) + sd..(n + 1) * (sd + ad)]);
        }
        let ga = self.actor.backward(&a_tape, &da);
        self.actor_opt.step(self.actor.params_mut(), &ga.params);

        if !self.actor.is_finite() || !self.critic.is_finite() {
            return Err(self.non_finite("network parameters", step, f64::NAN));
        }
        let tau = T::lit(self.config.tau);
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic_target.soft_update_from(&self.critic, tau);
        self.updates = step;
        Ok(UpdateStats { critic_loss: loss.to_f64_lossy(), actor_objective: objective.to_f64_lossy() })
    }

    fn non_finite(&self, what: &'static str, step: u64, value: f64) -> DdpgError {
        let max = |m: &Mlp<T>| m.params().iter().map(|p| p.to_f64_lossy().abs()).fold(0.0, f64::max);
        let detail = format!(
            "value {value}, max |actor param| {}, max |critic param| {}",
            max(&self.actor),
            max(&self.critic)
        );
        log::error!("{what} became non-finite at update {step}: {detail}");
        DdpgError::NonFinite { what, step, detail }
    }
}
