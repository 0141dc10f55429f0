use serde::{Deserialize, Serialize};

use super::ConvError;

/// Gaussian tails beyond this many standard deviations are dropped
/// (relative mass loss below 1e-15).
pub const GAUSSIAN_CUTOFF_SIGMAS: f64 = 8.0;

/// Points within this fraction of a cell width of a piecewise-constant edge count as on it,
/// so grid nodes that sit on an edge up to rounding are assigned consistently.
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelShape {
    Gaussian { sigma: f64 },
    Indicator { width: f64 },
    Dirac,
    /// Piecewise-constant weights on consecutive cells of `cell_width`,
    /// the first cell starting at `center - len * cell_width / 2`.
    Asymmetric { weights: Vec<f64>, cell_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Scaled so its quadrature on the simulation grid is exactly one.
    UnitIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub normalization: Normalization,
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self { shape: KernelShape::Gaussian { sigma }, normalization: Normalization::None }
    }

    pub fn indicator(width: f64) -> Self {
        Self { shape: KernelShape::Indicator { width }, normalization: Normalization::None }
    }

    pub fn dirac() -> Self {
        Self { shape: KernelShape::Dirac, normalization: Normalization::None }
    }

    pub fn unit_integral(mut self) -> Self {
        self.normalization = Normalization::UnitIntegral;
        self
    }

    pub fn validate(&self) -> Result<(), ConvError> {
        let ok = match &self.shape {
            KernelShape::Gaussian { sigma } => *sigma > 0.0 && sigma.is_finite(),
            KernelShape::Indicator { width } => *width > 0.0 && width.is_finite(),
            KernelShape::Dirac => true,
            KernelShape::Asymmetric { weights, cell_width } => {
                !weights.is_empty() && weights.iter().all(|w| w.is_finite()) && *cell_width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ConvError::InvalidKernel(format!("{:?}", self.shape)))
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.shape, KernelShape::Dirac)
    }

    /// Half-width of the support.
    pub fn radius(&self) -> f64 {
        match &self.shape {
            KernelShape::Gaussian { sigma } => GAUSSIAN_CUTOFF_SIGMAS * sigma,
            KernelShape::Indicator { width } => width / 2.0,
            KernelShape::Dirac => 0.0,
            KernelShape::Asymmetric { weights, cell_width } => weights.len() as f64 * cell_width / 2.0,
        }
    }

    /// Unnormalized 1D profile at displacement `d = x - c`. Supports are half-open on the right.
    pub fn profile(&self, d: f64) -> f64 {
        match &self.shape {
            KernelShape::Gaussian { sigma } => {
                if d.abs() <= GAUSSIAN_CUTOFF_SIGMAS * sigma {
                    (-0.5 * (d / sigma).powi(2)).exp()
                } else {
                    0.0
                }
            }
            KernelShape::Indicator { width } => {
                let d = d + EDGE_TOL * width;
                if -width / 2.0 <= d && d < width / 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelShape::Dirac => 0.0,
            KernelShape::Asymmetric { weights, cell_width } => {
                let start = -(weights.len() as f64) * cell_width / 2.0;
                let idx = ((d + EDGE_TOL * cell_width - start) / cell_width).floor();
                if idx >= 0.0 && (idx as usize) < weights.len() {
                    weights[idx as usize]
                } else {
                    0.0
                }
            }
        }
    }

    /// Same as [`profile`](Self::profile) but closed on the right; used for the node
    /// sitting on the right end of a non-periodic domain.
    pub fn profile_closed(&self, d: f64) -> f64 {
        let r = self.radius();
        let cell = match &self.shape {
            KernelShape::Asymmetric { cell_width, .. } => *cell_width,
            _ => 2.0 * r,
        };
        if (d - r).abs() < EDGE_TOL * cell {
            match &self.shape {
                KernelShape::Indicator { .. } => 1.0,
                KernelShape::Asymmetric { weights, .. } => *weights.last().unwrap_or(&0.0),
                _ => self.profile(d),
            }
        } else {
            self.profile(d)
        }
    }
}
