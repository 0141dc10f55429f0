//! Keller–Segel chemotaxis with homogeneous Neumann boundaries:
//!
//! ```text
//! y_t = (D y_x - chi y z_x)_x + q y (1 - y)
//! z_t = z_xx + y - z + f(x, u)
//! ```
//!
//! Second-order finite differences on a vertex-centered grid with mirrored
//! ghost points, stepped with the ARS(2,2,2) IMEX Runge–Kutta scheme:
//! diffusion implicit, chemotaxis and sources explicit.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_blow_up, check_pair, EnvError, Environment};
use crate::field::{Field, Grid, Grid1D};
use crate::rng;
use crate::scalar::Real;

/// Densities below this trigger a warning.
pub const NEGATIVE_DENSITY_TOLERANCE: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KellerSegelParams {
    pub length: f64,
    pub n_points: usize,
    pub diffusion: f64,
    pub chi: f64,
    pub growth: f64,
    pub dt: f64,
    pub substeps: usize,
}

impl Default for KellerSegelParams {
    fn default() -> Self {
        Self { length: 10.0, n_points: 200, diffusion: 1.0, chi: 5.6, growth: 1.0, dt: 0.05, substeps: 10 }
    }
}

impl KellerSegelParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let grid = Grid1D::neumann(self.length, self.n_points)?;
        if !(self.diffusion > 0.0 && self.growth > 0.0 && self.chi >= 0.0) {
            return Err(EnvError::InvalidParams("need D > 0, q > 0, chi >= 0".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.substeps == 0 {
            return Err(EnvError::InvalidParams("dt must be > 0 with at least one substep".into()));
        }
        let h = self.dt / self.substeps as f64;
        // explicit chemotactic coupling and logistic source
        let coupling = h * 2.0 * self.chi.sqrt() / grid.dx();
        if coupling > 1.0 || h * self.growth > 0.5 {
            return Err(EnvError::InvalidParams(format!(
                "inner step {h} violates the explicit stability bound (coupling number {coupling:.3})"
            )));
        }
        Ok(())
    }
}

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone)]
pub struct KellerSegelSolver<T: Real> {
    params: KellerSegelParams,
    grid: Grid1D,
    h: T,
}

impl<T: Real> KellerSegelSolver<T> {
    pub fn new(params: KellerSegelParams) -> Result<Self, EnvError> {
        params.validate()?;
        let grid = Grid1D::neumann(params.length, params.n_points)?;
        let h = T::lit(params.dt / params.substeps as f64);
        Ok(Self { params, grid, h })
    }

    pub fn params(&self) -> &KellerSegelParams {
        &self.params
    }

    pub fn grid_1d(&self) -> Grid1D {
        self.grid
    }

    /// Ghost-point Neumann Laplacian.
    pub fn laplacian(&self, y: &[T], out: &mut [T]) {
        let n = y.len();
        let inv = T::one() / T::lit(self.grid.dx() * self.grid.dx());
        let two = T::lit(2.0);
        out[0] = two * (y[1] - y[0]) * inv;
        for i in 1..n - 1 {
            out[i] = (y[i + 1] - two * y[i] + y[i - 1]) * inv;
        }
        out[n - 1] = two * (y[n - 2] - y[n - 1]) * inv;
    }

    /// Conservative discretization of `-(chi y z_x)_x` with mirrored ghost fluxes.
    pub fn chemotaxis(&self, y: &[T], z: &[T], out: &mut [T]) {
        let n = y.len();
        let dx = T::lit(self.grid.dx());
        let chi = T::lit(self.params.chi);
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        // face flux F_{i+1/2} = chi * avg(y) * (z_{i+1} - z_i) / dx
        let flux = |i: usize| chi * half * (y[i] + y[i + 1]) * (z[i + 1] - z[i]) / dx;
        let mut left = flux(0);
        out[0] = -two * left / dx;
        for i in 1..n - 1 {
            let right = flux(i);
            out[i] = -(right - left) / dx;
            left = right;
        }
        out[n - 1] = two * left / dx;
    }

    fn explicit(&self, y: &[T], z: &[T], f: &[T], ey: &mut [T], ez: &mut [T]) {
        self.chemotaxis(y, z, ey);
        let q = T::lit(self.params.growth);
        for i in 0..y.len() {
            ey[i] += q * y[i] * (T::one() - y[i]);
            ez[i] = y[i] - z[i] + f[i];
        }
    }

    /// Solves `(I - a * Lap) x = rhs` in place (Thomas algorithm).
    fn solve_implicit(&self, a: T, rhs: &mut [T], scratch: &mut [T]) {
        let n = rhs.len();
        let r = a / T::lit(self.grid.dx() * self.grid.dx());
        let two = T::lit(2.0);
        let diag = T::one() + two * r;
        // superdiagonal of row 0 is -2r, subdiagonal of the last row is -2r
        let upper = |i: usize| if i == 0 { -two * r } else { -r };
        let lower = |i: usize| if i == n - 1 { -two * r } else { -r };
        let mut denom = diag;
        scratch[0] = upper(0) / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = diag - lower(i) * scratch[i - 1];
            if i < n - 1 {
                scratch[i] = upper(i) / denom;
            }
            rhs[i] = (rhs[i] - lower(i) * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= scratch[i] * next;
        }
    }

    pub fn advance(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError> {
        check_pair(state, control, Grid::Line(self.grid), 2)?;
        let n = self.grid.n_points;
        let f = control.values();
        let mut y = state.component(0).to_vec();
        let mut z = state.component(1).to_vec();
        let h = self.h;
        let g = T::lit(GAMMA);
        let delta = T::lit(1.0 - 1.0 / (2.0 * GAMMA));
        let d = T::lit(self.params.diffusion);
        let zero = vec![T::zero(); n];
        let (mut ey0, mut ez0, mut ey1, mut ez1) = (zero.clone(), zero.clone(), zero.clone(), zero.clone());
        let (mut ly, mut lz, mut scratch) = (zero.clone(), zero.clone(), zero.clone());
        for sub in 0..self.params.substeps {
            // increments are solved for directly so a steady state stays bit-exact
            self.explicit(&y, &z, f, &mut ey0, &mut ez0);
            self.laplacian(&y, &mut ly);
            self.laplacian(&z, &mut lz);
            let mut dy: Vec<T> = (0..n).map(|i| h * g * (ey0[i] + d * ly[i])).collect();
            let mut dz: Vec<T> = (0..n).map(|i| h * g * (ez0[i] + lz[i])).collect();
            self.solve_implicit(h * g * d, &mut dy, &mut scratch);
            self.solve_implicit(h * g, &mut dz, &mut scratch);
            let y1: Vec<T> = (0..n).map(|i| y[i] + dy[i]).collect();
            let z1: Vec<T> = (0..n).map(|i| z[i] + dz[i]).collect();

            // Y2 - y = h [delta E0 + (1 - delta) E1 + (1 - gamma) A Y1 + gamma A y] + h gamma A (Y2 - y)
            self.explicit(&y1, &z1, f, &mut ey1, &mut ez1);
            let (mut ly1, mut lz1) = (zero.clone(), zero.clone());
            self.laplacian(&y1, &mut ly1);
            self.laplacian(&z1, &mut lz1);
            let w = T::one() - g;
            let dd = T::one() - delta;
            for i in 0..n {
                dy[i] = h * (delta * ey0[i] + dd * ey1[i] + d * (w * ly1[i] + g * ly[i]));
                dz[i] = h * (delta * ez0[i] + dd * ez1[i] + w * lz1[i] + g * lz[i]);
            }
            self.solve_implicit(h * g * d, &mut dy, &mut scratch);
            self.solve_implicit(h * g, &mut dz, &mut scratch);
            for i in 0..n {
                y[i] += dy[i];
                z[i] += dz[i];
            }
            check_blow_up(&y, sub)?;
            check_blow_up(&z, sub)?;
        }
        let min_y = y.iter().fold(T::infinity(), |m, &v| m.min(v));
        if min_y < T::lit(NEGATIVE_DENSITY_TOLERANCE) {
            log::warn!("negative cell density {min_y} after Keller-Segel step");
        }
        y.extend_from_slice(&z);
        Ok(Field::from_values(Grid::Line(self.grid), 2, y)?)
    }

    /// `y = 1 + 0.1 * noise`, `z = y`, with smooth unit-variance Neumann noise.
    pub fn random_field(grid: Grid1D, seed: u64) -> Field<T> {
        let mut r = rng::stream(seed, rng::Stream::TrainInitialConditions);
        let coeffs: Vec<f64> = (0..8).map(|_| r.sample(StandardNormal)).collect();
        let raw: Vec<f64> = (0..grid.n_points)
            .map(|j| {
                let x = grid.x(j);
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, a)| a * ((m + 1) as f64 * std::f64::consts::PI * x / grid.length).cos())
                    .sum()
            })
            .collect();
        let var = raw.iter().map(|v| v * v).sum::<f64>() / raw.len() as f64;
        let scale = if var > 0.0 { 0.1 / var.sqrt() } else { 0.0 };
        let y: Vec<T> = raw.iter().map(|v| T::lit(1.0 + scale * v)).collect();
        let mut values = y.clone();
        values.extend_from_slice(&y);
        Field::from_values(Grid::Line(grid), 2, values).expect("shape")
    }
}

impl<T: Real> Environment<T> for KellerSegelSolver<T> {
    fn grid(&self) -> Grid {
        Grid::Line(self.grid)
    }
    fn components(&self) -> usize {
        2
    }
    fn control_component(&self) -> usize {
        1
    }
    fn dt(&self) -> f64 {
        self.params.dt
    }
    fn step(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError> {
        self.advance(state, control)
    }
    fn initial_condition(&self, seed: u64) -> Field<T> {
        Self::random_field(self.grid, seed)
    }
}

pub fn keller_segel_step<T: Real>(
    state: &Field<T>,
    control: &Field<T>,
    params: &KellerSegelParams,
) -> Result<Field<T>, EnvError> {
    KellerSegelSolver::new(params.clone())?.advance(state, control)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver(dt: f64, substeps: usize) -> KellerSegelSolver<f64> {
        KellerSegelSolver::new(KellerSegelParams { dt, substeps, ..Default::default() }).unwrap()
    }

    #[test]
    fn homogeneous_state_is_stationary() {
        let s = solver(0.05, 10);
        let grid = Grid::Line(s.grid_1d());
        let mut state = Field::from_values(grid, 2, vec![1.0; 400]).unwrap();
        let u = Field::zeros(grid, 1);
        for _ in 0..20 {
            state = s.advance(&state, &u).unwrap();
        }
        assert!(state.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn transport_has_zero_net_boundary_flux() {
        let s = solver(0.05, 10);
        let g = s.grid_1d();
        let state = KellerSegelSolver::<f64>::random_field(g, 5);
        let (y, z) = (state.component(0), state.component(1));
        let mut lap_y = vec![0.0; 200];
        let mut lap_z = vec![0.0; 200];
        let mut chem = vec![0.0; 200];
        s.laplacian(y, &mut lap_y);
        s.laplacian(z, &mut lap_z);
        s.chemotaxis(y, z, &mut chem);
        let net = |v: &[f64]| (0..200).map(|j| g.weight(j) * v[j]).sum::<f64>();
        let scale = |v: &[f64]| (0..200).map(|j| g.weight(j) * v[j].abs()).sum::<f64>();
        for v in [&lap_y, &lap_z, &chem] {
            assert!(net(v).abs() <= 1e-13 * scale(v).max(1.0), "net flux {}", net(v));
        }
    }

    #[test]
    fn mass_follows_logistic_source() {
        // dM/dt = q * int y (1 - y) dx, time-integrated with Simpson's rule
        let s = solver(0.01, 10);
        let g = s.grid_1d();
        let grid = Grid::Line(g);
        let u = Field::zeros(grid, 1);
        let mut state = KellerSegelSolver::<f64>::random_field(g, 9);
        let source = |f: &Field<f64>| {
            (0..200).map(|j| g.weight(j) * f.component(0)[j] * (1.0 - f.component(0)[j])).sum::<f64>()
        };
        let m0 = state.integral(0);
        let mut samples = vec![source(&state)];
        for _ in 0..100 {
            state = s.advance(&state, &u).unwrap();
            samples.push(source(&state));
        }
        let h = 0.01;
        let simpson: f64 = (0..50)
            .map(|k| h / 3.0 * (samples[2 * k] + 4.0 * samples[2 * k + 1] + samples[2 * k + 2]))
            .sum();
        let dm = state.integral(0) - m0;
        assert!((dm - simpson).abs() < 1e-6, "{dm} vs {simpson}");
    }

    #[test]
    fn self_convergence_is_second_order() {
        let g = Grid1D::neumann(10.0, 200).unwrap();
        let y0 = KellerSegelSolver::<f64>::random_field(g, 2);
        let u = Field::from_fn_1d(g, |x| 0.3 * (x * 0.7).sin());
        let run = |substeps: usize| solver(0.5, substeps).advance(&y0, &u).unwrap();
        let reference = run(800);
        let err = |f: &Field<f64>| {
            f.values().iter().zip(reference.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(&run(100)), err(&run(200)));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() <= 0.5, "order {order}");
    }

    #[test]
    fn stability_bound_enforced() {
        let bad = KellerSegelParams { substeps: 1, ..Default::default() };
        assert!(KellerSegelSolver::<f64>::new(bad).is_err());
    }
}
