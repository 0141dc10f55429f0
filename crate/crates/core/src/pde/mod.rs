//! Controlled PDE environments: flow maps over one control interval with the
//! control field held constant (zero-order hold).

pub mod keller_segel;
pub mod ks;
pub mod spectral;
pub mod vorticity;

pub use keller_segel::{KellerSegelParams, KellerSegelSolver};
pub use ks::{KsParams, KsSolver};
pub use vorticity::{Vorticity2dParams, Vorticity2dSolver};

use crate::field::{Field, Grid, GridError};
use crate::scalar::Real;

/// Any state magnitude above this aborts the episode.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("blow-up at inner step {substep}: max |value| = {max_abs:e}")]
    BlowUp { substep: usize, max_abs: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("state/control mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One controlled PDE, advanced over a single control interval.
pub trait Environment<T: Real>: Send + Sync {
    fn grid(&self) -> Grid;

    /// Number of state components `n`.
    fn components(&self) -> usize;

    /// State component the control field enters.
    fn control_component(&self) -> usize;

    /// Control interval length.
    fn dt(&self) -> f64;

    fn step(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError>;

    /// Random initial condition, deterministic in `seed`.
    fn initial_condition(&self, seed: u64) -> Field<T>;
}

/// Blow-up guard applied after every inner step.
pub(crate) fn check_blow_up<T: Real>(values: &[T], substep: usize) -> Result<(), EnvError> {
    let limit = T::lit(BLOW_UP_THRESHOLD);
    let mut max_abs = T::zero();
    for &v in values {
        if !v.is_finite() {
            return Err(EnvError::BlowUp { substep, max_abs: f64::INFINITY });
        }
        max_abs = max_abs.max(v.abs());
    }
    if max_abs > limit {
        return Err(EnvError::BlowUp { substep, max_abs: max_abs.to_f64_lossy() });
    }
    Ok(())
}

pub(crate) fn check_pair<T: Real>(
    state: &Field<T>,
    control: &Field<T>,
    grid: Grid,
    components: usize,
) -> Result<(), EnvError> {
    if *state.grid() != grid || state.components() != components {
        return Err(EnvError::Shape(format!(
            "state must have {components} components on {grid:?}"
        )));
    }
    if *control.grid() != grid || control.components() != 1 {
        return Err(EnvError::Shape("control field must be one component on the state grid".into()));
    }
    Ok(())
}

/// Concrete environment selected from a config.
pub enum AnyEnv<T: Real> {
    Ks(KsSolver<T>),
    KellerSegel(KellerSegelSolver<T>),
    Vorticity(Vorticity2dSolver<T>),
}

impl<T: Real> AnyEnv<T> {
    fn inner(&self) -> &dyn Environment<T> {
        match self {
            AnyEnv::Ks(e) => e,
            AnyEnv::KellerSegel(e) => e,
            AnyEnv::Vorticity(e) => e,
        }
    }
}

impl<T: Real> Environment<T> for AnyEnv<T> {
    fn grid(&self) -> Grid {
        self.inner().grid()
    }
    fn components(&self) -> usize {
        self.inner().components()
    }
    fn control_component(&self) -> usize {
        self.inner().control_component()
    }
    fn dt(&self) -> f64 {
        self.inner().dt()
    }
    fn step(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError> {
        self.inner().step(state, control)
    }
    fn initial_condition(&self, seed: u64) -> Field<T> {
        self.inner().initial_condition(seed)
    }
}
