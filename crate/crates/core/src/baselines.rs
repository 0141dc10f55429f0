//! Reference controllers: opposition feedback and a single global DDPG agent.

use crate::conv::Observations;
use crate::ddpg::DdpgConfig;
use crate::scalar::Real;
use crate::train::{
    evaluate, train, Budget, Controller, EpisodeLog, Experiment, ExperimentConfig, Sharing, TrainError, TrainOutcome,
    TrainSink,
};

/// Hidden layers of the global agent's actor and critic.
pub const GLOBAL_HIDDEN: [usize; 2] = [256, 256];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OppositionParams {
    pub gain: f64,
    pub u_max: f64,
    /// Observed component and its reference value.
    pub component: usize,
    pub target: f64,
}

impl OppositionParams {
    pub fn new(gain: f64, u_max: f64) -> Self {
        Self { gain, u_max, component: 0, target: 0.0 }
    }
}

/// `u_p = -gain * (y~_i - y_ref)` at the sensor driving actuator `p`, clamped to `u_max`.
pub fn opposition_act<T: Real>(obs: &Observations<T>, agents: &[usize], params: &OppositionParams) -> Vec<T> {
    let (g, r, u) = (T::lit(params.gain), T::lit(params.target), T::lit(params.u_max));
    agents
        .iter()
        .map(|&i| (-(g * (obs.row(i)[params.component] - r))).max(-u).min(u))
        .collect()
}

pub struct OppositionController(pub OppositionParams);

impl<T: Real> Controller<T> for OppositionController {
    fn act(&mut self, obs: &Observations<T>, _: &[Vec<T>], agents: &[usize]) -> Result<Vec<T>, TrainError> {
        Ok(opposition_act(obs, agents, &self.0))
    }
}

impl OppositionController {
    /// Opposition feedback matching an experiment's reward reference and action bound.
    pub fn for_experiment(config: &ExperimentConfig, gain: f64) -> Self {
        Self(OppositionParams {
            gain,
            u_max: config.agent.u_max,
            component: config.reward.component,
            target: config.reward.target,
        })
    }
}

/// Final `<(y - y_ref)^2>` for each gain, averaged over `episodes` evaluation runs.
pub fn opposition_sweep<T: Real>(
    exp: &Experiment<T>,
    gains: &[f64],
    episodes: usize,
) -> Result<Vec<(f64, f64)>, TrainError> {
    gains
        .iter()
        .map(|&g| {
            let mut c = OppositionController::for_experiment(&exp.config, g);
            let logs: Vec<EpisodeLog<T>> = evaluate(exp, &mut c, 0, episodes, exp.config.training.eval_steps)?;
            Ok((g, logs.iter().map(|l| l.final_mse()).sum::<f64>() / episodes as f64))
        })
        .collect()
}

/// Config for the global agent: same experiment, wider networks.
pub fn global_config(base: &ExperimentConfig) -> ExperimentConfig {
    let mut c = base.clone();
    c.agent = DdpgConfig {
        actor_hidden: GLOBAL_HIDDEN.to_vec(),
        critic_hidden: GLOBAL_HIDDEN.to_vec(),
        ..base.agent.clone()
    };
    c
}

/// Single-agent DDPG on the full observation and action vectors.
pub fn train_global<T: Real>(
    exp: &Experiment<T>,
    budget: Budget,
    sink: TrainSink<'_>,
) -> Result<TrainOutcome<T>, TrainError> {
    train(exp, Sharing::Global, budget, sink)
}
