use super::{EnvConfig, ExperimentConfig, TrainError};
use crate::conv::{ActuatorArray, SensorArray};
use crate::ddpg::PolicyGeometry;
use crate::field::Grid;
use crate::pde::{AnyEnv, Environment, KellerSegelSolver, KsSolver, Vorticity2dSolver};
use crate::scalar::Real;

/// Instantiated environment, sensor and actuator arrays for one config.
pub struct Experiment<T: Real> {
    pub config: ExperimentConfig,
    pub env: AnyEnv<T>,
    pub sensors: SensorArray<T>,
    pub actuators: ActuatorArray<T>,
}

impl<T: Real> Experiment<T> {
    pub fn new(config: ExperimentConfig) -> Result<Self, TrainError> {
        let env = match &config.env {
            EnvConfig::Ks(p) => AnyEnv::Ks(KsSolver::new(p.clone())?),
            EnvConfig::KellerSegel(p) => AnyEnv::KellerSegel(KellerSegelSolver::new(p.clone())?),
            EnvConfig::Vorticity(p) => AnyEnv::Vorticity(Vorticity2dSolver::new(p.clone())?),
        };
        let s = &config.sensors;
        let sensors = SensorArray::equidistant(env.grid(), s.count, s.kernel.clone(), s.neighborhood)?;
        let actuators =
            ActuatorArray::on_sensors(&sensors, config.actuators.kernel.clone(), config.agent.u_max, config.actuators.margin)?;
        config.reward.validate()?;
        config.agent.validate()?;
        if config.reward.component >= env.components() {
            return Err(TrainError::Config(format!(
                "reward tracks component {} of a {}-component state",
                config.reward.component,
                env.components()
            )));
        }
        if s.delays > 0 && s.delay_steps == 0 {
            return Err(TrainError::Config("delayed observations need delay_steps >= 1".into()));
        }
        let t = &config.training;
        if t.steps == 0 || t.eval_steps == 0 {
            return Err(TrainError::Config("episodes need at least one controlled step".into()));
        }
        if !(t.warmup_time >= 0.0) {
            return Err(TrainError::Config("warm-up time must be non-negative".into()));
        }
        Ok(Self { config, env, sensors, actuators })
    }

    pub fn grid(&self) -> Grid {
        self.env.grid()
    }

    pub fn dt(&self) -> f64 {
        self.env.dt()
    }

    /// Input length of a local agent.
    pub fn state_dim(&self) -> usize {
        self.geometry().state_dim()
    }

    pub fn geometry(&self) -> PolicyGeometry {
        PolicyGeometry {
            dims: self.grid().dims(),
            components: self.env.components(),
            neighborhood: self.sensors.neighborhood(),
            delays: self.config.sensors.delays,
            spacing: self.sensors.spacing(),
            kernel: self.sensors.kernel().clone(),
        }
    }

    pub fn warmup_steps(&self) -> usize {
        self.config.training.warmup_steps(self.dt())
    }
}
