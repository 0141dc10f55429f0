use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DdpgAgent, DdpgConfig, DdpgError};
use crate::conv::KernelSpec;
use crate::nn::{Activation, Mlp};
use crate::scalar::Real;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Sensing layout a policy was trained with. Two policies are interchangeable
/// when their geometries agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGeometry {
    /// Spatial dimension of the domain.
    pub dims: usize,
    /// Field components per sensor.
    pub components: usize,
    /// Sensors per axis in a local view.
    pub neighborhood: usize,
    /// Number of delayed observations in the view.
    pub delays: usize,
    /// Distance between sensor centers.
    pub spacing: f64,
    pub kernel: KernelSpec,
}

impl PolicyGeometry {
    pub fn state_dim(&self) -> usize {
        self.components * self.neighborhood.pow(self.dims as u32) * (1 + self.delays)
    }

    /// Differences that prevent reuse of a policy in `other`, empty when compatible.
    pub fn mismatches(&self, other: &PolicyGeometry) -> Vec<String> {
        let mut out = Vec::new();
        let mut cmp = |name: &str, a: String, b: String| {
            if a != b {
                out.push(format!("{name}: trained {a}, target {b}"));
            }
        };
        cmp("dimensions", self.dims.to_string(), other.dims.to_string());
        cmp("components", self.components.to_string(), other.components.to_string());
        cmp("neighborhood", self.neighborhood.to_string(), other.neighborhood.to_string());
        cmp("delays", self.delays.to_string(), other.delays.to_string());
        cmp("kernel", format!("{:?}", self.kernel), format!("{:?}", other.kernel));
        if (self.spacing - other.spacing).abs() > 1e-9 * self.spacing.abs().max(1.0) {
            out.push(format!("sensor spacing: trained {}, target {}", self.spacing, other.spacing));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub sizes: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub output_scale: f64,
    /// Row-major weights then biases, layer by layer.
    pub params: Vec<f64>,
}

impl NetworkRecord {
    pub fn from_mlp<T: Real>(m: &Mlp<T>) -> Self {
        Self {
            sizes: m.sizes().to_vec(),
            hidden: m.hidden_activation(),
            output: m.output_activation(),
            output_scale: m.output_scale().to_f64_lossy(),
            params: m.params().iter().map(|p| p.to_f64_lossy()).collect(),
        }
    }

    pub fn to_mlp<T: Real>(&self) -> Result<Mlp<T>, DdpgError> {
        let params = self.params.iter().map(|&p| T::lit(p)).collect();
        Ok(Mlp::from_params(&self.sizes, self.hidden, self.output, self.output_scale, params)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub u_max: f64,
    pub geometry: PolicyGeometry,
    pub agent: DdpgConfig,
    pub actor: NetworkRecord,
    pub critic: NetworkRecord,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("reading or writing checkpoint: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error(transparent)]
    Agent(#[from] DdpgError),
}

impl Checkpoint {
    pub fn from_agent<T: Real>(agent: &DdpgAgent<T>, geometry: PolicyGeometry) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            u_max: agent.config().u_max,
            geometry,
            agent: agent.config().clone(),
            actor: NetworkRecord::from_mlp(agent.actor()),
            critic: NetworkRecord::from_mlp(agent.critic()),
        }
    }

    /// Fresh agent (targets equal to the online networks) with the stored weights.
    pub fn to_agent<T: Real>(&self) -> Result<DdpgAgent<T>, CheckpointError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(self.version));
        }
        Ok(DdpgAgent::from_networks(self.agent.clone(), self.actor.to_mlp()?, self.critic.to_mlp()?)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CheckpointError> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(c.version));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
