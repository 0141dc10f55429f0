use serde::{Deserialize, Serialize};

use super::{ActuatorArray, ConvError, SensorArray};
use crate::field::Field;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    /// Weight of the control cost.
    pub alpha: f64,
    /// Weight of the global stage cost added to every local reward.
    pub beta: f64,
    /// Constant reference value for the tracked component.
    pub target: f64,
    /// Component of the state that is tracked.
    pub component: usize,
}

impl RewardSpec {
    pub fn new(alpha: f64, target: f64) -> Self {
        Self { alpha, beta: 0.0, target, component: 0 }
    }

    pub fn validate(&self) -> Result<(), ConvError> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite())
            || !self.target.is_finite()
        {
            return Err(ConvError::Geometry(format!("invalid reward weights {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewards<T> {
    /// One reward per sensor.
    pub local: Vec<T>,
    pub global: T,
}

/// `ell = int (y - y_ref)^2 + alpha f^2 dx` over the whole domain.
pub fn stage_cost<T: Real>(field: &Field<T>, control: &Field<T>, spec: &RewardSpec) -> Result<T, ConvError> {
    check(field, control, spec)?;
    let y = field.component(spec.component);
    let f = control.component(0);
    let (r, a) = (T::lit(spec.target), T::lit(spec.alpha));
    let grid = field.grid();
    Ok((0..y.len())
        .map(|j| {
            let e = y[j] - r;
            T::lit(grid.weight(j)) * (e * e + a * f[j] * f[j])
        })
        .sum())
}

/// Windowed costs `int [psi_i (y - y_ref)]^2 + alpha [psi_i f]^2 dx` for every sensor.
/// Dirac sensors give the pointwise cost at their node.
pub fn windowed_costs<T: Real>(
    field: &Field<T>,
    control: &Field<T>,
    sensors: &SensorArray<T>,
    spec: &RewardSpec,
) -> Result<Vec<T>, ConvError> {
    check(field, control, spec)?;
    if *field.grid() != *sensors.grid() {
        return Err(ConvError::Shape("field grid differs from the sensor grid".into()));
    }
    let y = field.component(spec.component);
    let f = control.component(0);
    let (r, a) = (T::lit(spec.target), T::lit(spec.alpha));
    let grid = field.grid();
    let dirac = sensors.kernel().is_dirac();
    if let Some(sep) = sensors.separable_window() {
        let g: Vec<T> = y.iter().zip(f).map(|(&yv, &fv)| (yv - r) * (yv - r) + a * fv * fv).collect();
        return Ok(sep.correlate(&g, true));
    }
    Ok((0..sensors.count())
        .map(|i| {
            let w = sensors.window(i);
            if dirac {
                let j = w.nodes[0];
                let e = y[j] - r;
                return e * e + a * f[j] * f[j];
            }
            w.nodes
                .iter()
                .zip(&w.values)
                .map(|(&j, &p)| {
                    let (e, u) = (p * (y[j] - r), p * f[j]);
                    T::lit(grid.weight(j)) * (e * e + a * u * u)
                })
                .sum()
        })
        .collect())
}

/// Local rewards `r_i = -sum_{j in I_i} ell_j - beta * ell_glob` and the global reward
/// `r_glob = -(<(y - y_ref)^2> + alpha sum_p u_p^2 <psi_p^2>)`.
pub fn compute_rewards<T: Real>(
    field: &Field<T>,
    control: &Field<T>,
    actions: &[T],
    sensors: &SensorArray<T>,
    actuators: &ActuatorArray<T>,
    spec: &RewardSpec,
) -> Result<Rewards<T>, ConvError> {
    spec.validate()?;
    if actions.len() != actuators.count() {
        return Err(ConvError::Shape(format!("{} actions for {} actuators", actions.len(), actuators.count())));
    }
    let costs = windowed_costs(field, control, sensors, spec)?;
    let penalty: T = actions.iter().zip(actuators.mean_square_kernels()).map(|(&u, &m)| u * u * m).sum();
    let tracking = field.mean_square_deviation(spec.component, T::lit(spec.target));
    let global = -(tracking + T::lit(spec.alpha) * penalty);
    let beta = T::lit(spec.beta);
    let local = (0..sensors.count())
        .map(|i| {
            let s: T = sensors.neighbors(i).into_iter().map(|j| costs[j]).sum();
            -s + beta * global
        })
        .collect();
    Ok(Rewards { local, global })
}

fn check<T: Real>(field: &Field<T>, control: &Field<T>, spec: &RewardSpec) -> Result<(), ConvError> {
    if spec.component >= field.components() {
        return Err(ConvError::Shape(format!("component {} of {}", spec.component, field.components())));
    }
    if control.grid() != field.grid() || control.components() != 1 {
        return Err(ConvError::Shape("control must be a single-component field on the state grid".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::KernelSpec;
    use crate::field::{Grid, Grid1D};

    fn setup(normalized: bool) -> (Grid1D, SensorArray<f64>, ActuatorArray<f64>) {
        let g = Grid1D::periodic(22.0, 64).unwrap();
        let k = if normalized { KernelSpec::gaussian(0.8).unit_integral() } else { KernelSpec::gaussian(0.8) };
        let s = SensorArray::equidistant(Grid::Line(g), 8, k.clone(), 3).unwrap();
        let a = ActuatorArray::on_sensors(&s, k, 1.0, 0).unwrap();
        (g, s, a)
    }

    #[test]
    fn perfect_state_has_zero_reward() {
        let (g, s, a) = setup(false);
        let y = Field::from_fn_1d(g, |_| 0.0);
        let c = Field::zeros(Grid::Line(g), 1);
        let r = compute_rewards(&y, &c, &[0.0; 8], &s, &a, &RewardSpec::new(0.1, 0.0)).unwrap();
        assert!(r.local.iter().all(|&v| v == 0.0));
        assert_eq!(r.global, 0.0);
    }

    #[test]
    fn doubling_state_quadruples_cost() {
        let (g, s, a) = setup(false);
        let y = Field::from_fn_1d(g, |x| (x * 0.7).sin() + 0.3 * (x * 0.2).cos());
        let y2 = y.scaled(2.0);
        let c = Field::zeros(Grid::Line(g), 1);
        let spec = RewardSpec { beta: 0.5, ..RewardSpec::new(0.1, 0.0) };
        let r1 = compute_rewards(&y, &c, &[0.0; 8], &s, &a, &spec).unwrap();
        let r2 = compute_rewards(&y2, &c, &[0.0; 8], &s, &a, &spec).unwrap();
        for (p, q) in r1.local.iter().zip(&r2.local) {
            assert!((q - 4.0 * p).abs() < 1e-12 * p.abs().max(1.0));
        }
        assert!((r2.global - 4.0 * r1.global).abs() < 1e-12);
    }

    #[test]
    fn global_reward_matches_definition() {
        let (g, s, a) = setup(false);
        let y = Field::from_fn_1d(g, |x| (x * 0.5).sin());
        let u = [0.2, -0.1, 0.0, 0.5, 0.3, -0.4, 0.0, 0.1];
        let c = a.actuate(&u).unwrap().field;
        let r = compute_rewards(&y, &c, &u, &s, &a, &RewardSpec::new(0.1, 0.0)).unwrap();
        let msd: f64 = y.values().iter().map(|v| v * v).sum::<f64>() / 64.0;
        // <psi^2> for a Gaussian well inside a periodic box: sigma sqrt(pi) / L
        let m = 0.8 * std::f64::consts::PI.sqrt() / 22.0;
        let pen: f64 = u.iter().map(|v| v * v * m).sum();
        assert!((r.global + msd + 0.1 * pen).abs() < 1e-10);
    }

    #[test]
    fn rewards_follow_cyclic_relabeling() {
        let (g, s, a) = setup(false);
        let n = 64;
        let y = Field::from_fn_1d(g, |x| (x * 0.9).sin() + 0.5 * (x * 0.3 + 1.0).cos());
        let u = [0.1, 0.2, -0.3, 0.0, 0.4, -0.1, 0.0, 0.25];
        let c = a.actuate(&u).unwrap().field;
        let spec = RewardSpec { beta: 0.2, ..RewardSpec::new(0.1, 0.0) };
        let base = compute_rewards(&y, &c, &u, &s, &a, &spec).unwrap();
        // one sensor spacing is n / 8 grid cells
        let cells = (n / 8) as isize;
        for k in 1..8isize {
            let ys = y.shifted(k * cells, 0);
            let cs = c.shifted(k * cells, 0);
            let mut us = u;
            us.rotate_right(k as usize);
            let sh = compute_rewards(&ys, &cs, &us, &s, &a, &spec).unwrap();
            for i in 0..8 {
                let lhs = sh.local[(i + k as usize) % 8];
                assert!((lhs - base.local[i]).abs() < 1e-12, "shift {k} agent {i}");
            }
            assert!((sh.global - base.global).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_window_is_point_cost() {
        let g = Grid1D::periodic(22.0, 64).unwrap();
        let s = SensorArray::<f64>::equidistant(Grid::Line(g), 8, KernelSpec::dirac(), 1).unwrap();
        let y = Field::from_fn_1d(g, |x| x - 3.0);
        let c = Field::zeros(Grid::Line(g), 1);
        let w = windowed_costs(&y, &c, &s, &RewardSpec::new(0.0, 0.0)).unwrap();
        let obs = s.sense(&y).unwrap();
        for i in 0..8 {
            assert_eq!(w[i], obs.data[i] * obs.data[i]);
        }
    }
}
