use serde::{Deserialize, Serialize};

use crate::conv::{KernelSpec, RewardSpec};
use crate::ddpg::DdpgConfig;
use crate::pde::{KellerSegelParams, KsParams, Vorticity2dParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    Ks(KsParams),
    KellerSegel(KellerSegelParams),
    Vorticity(Vorticity2dParams),
}

impl EnvConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Ks(_) => "ks",
            EnvConfig::KellerSegel(_) => "keller_segel",
            EnvConfig::Vorticity(_) => "vorticity",
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            EnvConfig::Ks(p) => p.dt,
            EnvConfig::KellerSegel(p) => p.dt,
            EnvConfig::Vorticity(p) => p.dt,
        }
    }

    /// Number of state components.
    pub fn components(&self) -> usize {
        match self {
            EnvConfig::KellerSegel(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Sensors per axis.
    pub count: usize,
    pub kernel: KernelSpec,
    /// Odd neighborhood width per axis.
    pub neighborhood: usize,
    /// Number of delayed observations appended to each view.
    pub delays: usize,
    /// Control steps between consecutive delayed observations.
    pub delay_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorConfig {
    pub kernel: KernelSpec,
    /// Sensors at each end of a non-periodic domain without an actuator.
    pub margin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub episodes: usize,
    /// Controlled steps per training episode.
    pub steps: usize,
    /// Controlled steps per evaluation episode.
    pub eval_steps: usize,
    /// Uncontrolled time before the agent becomes active.
    pub warmup_time: f64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Transitions collected before the first update.
    pub warm_fill: usize,
    /// Gradient updates after every controlled step.
    pub updates_per_step: usize,
    pub terminal_penalty: f64,
    /// Write a policy checkpoint every this many episodes (0 disables).
    pub checkpoint_every: usize,
    /// Control steps between field snapshots in evaluation logs (0 disables).
    pub snapshot_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            episodes: 200,
            steps: 400,
            eval_steps: 400,
            warmup_time: 100.0,
            eval_every: 25,
            eval_episodes: 3,
            warm_fill: 1000,
            updates_per_step: 1,
            terminal_penalty: -1e3,
            checkpoint_every: 0,
            snapshot_every: 0,
        }
    }
}

impl TrainingConfig {
    /// Number of zero-control steps before activation.
    pub fn warmup_steps(&self, dt: f64) -> usize {
        (self.warmup_time / dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Everything that defines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvConfig,
    pub sensors: SensorConfig,
    pub actuators: ActuatorConfig,
    pub reward: RewardSpec,
    pub agent: DdpgConfig,
    pub training: TrainingConfig,
    pub seed: u64,
}

/// Named configurations shipped with the library.
pub const PRESETS: &[&str] =
    &["ks-L22", "ks-L200", "ks-L500", "ks-L22-mu002", "keller-segel", "turbulence-8", "turbulence-16", "turbulence-32"];

fn ks(name: &str, length: f64, sensors: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        env: EnvConfig::Ks(KsParams::for_length(length)),
        sensors: SensorConfig {
            count: sensors,
            kernel: KernelSpec::gaussian(0.8),
            neighborhood: 1,
            delays: 0,
            delay_steps: 0,
        },
        actuators: ActuatorConfig { kernel: KernelSpec::gaussian(0.8), margin: 0 },
        reward: RewardSpec::new(0.1, 0.0),
        agent: DdpgConfig::default(),
        training: TrainingConfig::default(),
        seed: 0,
    }
}

fn turbulence(per_axis: usize) -> ExperimentConfig {
    let spacing = std::f64::consts::TAU / per_axis as f64;
    let kernel = KernelSpec::gaussian(0.5 * spacing);
    ExperimentConfig {
        name: format!("turbulence-{per_axis}"),
        env: EnvConfig::Vorticity(Vorticity2dParams::default()),
        sensors: SensorConfig { count: per_axis, kernel: kernel.clone(), neighborhood: 3, delays: 0, delay_steps: 0 },
        actuators: ActuatorConfig { kernel, margin: 0 },
        reward: RewardSpec::new(0.01, 0.0),
        agent: DdpgConfig {
            actor_hidden: vec![4],
            critic_hidden: vec![4],
            actor_lr: 3e-4,
            gamma: 0.9,
            u_max: 10.0,
            reward_scale: 0.01,
            ..DdpgConfig::default()
        },
        training: TrainingConfig {
            episodes: 30,
            steps: 400,
            eval_steps: 400,
            warmup_time: 1.0,
            eval_every: 5,
            eval_episodes: 1,
            updates_per_step: 4,
            terminal_penalty: -1e5,
            ..TrainingConfig::default()
        },
        seed: 0,
    }
}

/// Preset by name, see [`PRESETS`].
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    Some(match name {
        "ks-L22" => ks(name, 22.0, 8),
        "ks-L200" => ks(name, 200.0, 80),
        "ks-L500" => {
            let mut c = ks(name, 500.0, 200);
            c.training.eval_steps = 600;
            c
        }
        "ks-L22-mu002" => {
            let mut c = ks(name, 22.0, 8);
            if let EnvConfig::Ks(p) = &mut c.env {
                p.mu = 0.02;
            }
            c
        }
        "keller-segel" => ExperimentConfig {
            name: name.to_string(),
            env: EnvConfig::KellerSegel(KellerSegelParams::default()),
            sensors: SensorConfig {
                count: 40,
                kernel: KernelSpec::indicator(0.25).unit_integral(),
                neighborhood: 3,
                delays: 1,
                delay_steps: 20,
            },
            actuators: ActuatorConfig { kernel: KernelSpec::indicator(0.25), margin: 2 },
            reward: RewardSpec::new(0.1, 1.0),
            agent: DdpgConfig { actor_hidden: vec![20, 20], critic_hidden: vec![20, 20], ..DdpgConfig::default() },
            training: TrainingConfig {
                episodes: 60,
                steps: 600,
                eval_steps: 600,
                warmup_time: 21.0,
                eval_every: 10,
                eval_episodes: 2,
                ..TrainingConfig::default()
            },
            seed: 0,
        },
        "turbulence-8" => turbulence(8),
        "turbulence-16" => turbulence(16),
        "turbulence-32" => turbulence(32),
        _ => return None,
    })
}
