//! Two-dimensional vorticity transport on the doubly periodic box `[0, 2 pi)^2`,
//!
//! `w_t + u . grad w = (1/Re) lap w + f(x, u)`,
//!
//! in streamfunction–vorticity form. Advection is evaluated pseudo-spectrally
//! with 2/3-rule truncation; time stepping is RK4 with an integrating factor
//! for the viscous term.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::spectral::{derivative_wavenumbers, wavenumbers, Fft2};
use super::{check_blow_up, check_pair, EnvError, Environment};
use crate::field::{Field, Grid, Grid2D};
use crate::rng;
use crate::scalar::Real;

pub const DOMAIN_LENGTH: f64 = 2.0 * std::f64::consts::PI;

/// Advective Courant number above which a step counts as a blow-up.
pub const MAX_COURANT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vorticity2dParams {
    pub n_grid: usize,
    pub reynolds: f64,
    pub dt: f64,
    pub substeps: usize,
    /// Peak wavenumber of the initial energy spectrum.
    pub peak_wavenumber: f64,
}

impl Default for Vorticity2dParams {
    fn default() -> Self {
        Self { n_grid: 128, reynolds: 500.0, dt: 0.01, substeps: 3, peak_wavenumber: 4.0 }
    }
}

impl Vorticity2dParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.n_grid < 32 || !self.n_grid.is_power_of_two() {
            return Err(EnvError::InvalidParams(format!(
                "n_grid must be a power of two >= 32, got {}",
                self.n_grid
            )));
        }
        if !(self.reynolds > 0.0 && self.reynolds.is_finite()) {
            return Err(EnvError::InvalidParams("Re must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.substeps == 0 {
            return Err(EnvError::InvalidParams("dt must be > 0 with at least one substep".into()));
        }
        if !(self.peak_wavenumber > 0.0) {
            return Err(EnvError::InvalidParams("peak wavenumber must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct Vorticity2dSolver<T: Real> {
    params: Vorticity2dParams,
    grid: Grid2D,
    fft: Fft2<T>,
    /// Derivative wavenumbers along one axis.
    kd: Vec<T>,
    /// `1 / |k|^2`, zero for the mean mode.
    inv_k2: Vec<T>,
    /// Integrating factors `exp(-|k|^2 h / (2 Re))` and their squares.
    half_factor: Vec<T>,
    full_factor: Vec<T>,
    mask: Vec<bool>,
}

impl<T: Real> Vorticity2dSolver<T> {
    pub fn new(params: Vorticity2dParams) -> Result<Self, EnvError> {
        params.validate()?;
        let n = params.n_grid;
        let grid = Grid2D::new(DOMAIN_LENGTH, n)?;
        let k = wavenumbers(n, DOMAIN_LENGTH);
        let kd: Vec<T> = derivative_wavenumbers(n, DOMAIN_LENGTH).into_iter().map(T::lit).collect();
        let h = params.dt / params.substeps as f64;
        let nu = 1.0 / params.reynolds;
        let cutoff = n as f64 / 3.0;
        let mut inv_k2 = Vec::with_capacity(n * n);
        let mut half_factor = Vec::with_capacity(n * n);
        let mut full_factor = Vec::with_capacity(n * n);
        let mut mask = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let k2 = k[ix] * k[ix] + k[iy] * k[iy];
                inv_k2.push(T::lit(if k2 > 0.0 { 1.0 / k2 } else { 0.0 }));
                half_factor.push(T::lit((-nu * k2 * h / 2.0).exp()));
                full_factor.push(T::lit((-nu * k2 * h).exp()));
                let mode = |i: usize| if i <= n / 2 { i as f64 } else { (n - i) as f64 };
                mask.push(mode(ix) < cutoff && mode(iy) < cutoff);
            }
        }
        Ok(Self { fft: Fft2::new(n), params, grid, kd, inv_k2, half_factor, full_factor, mask })
    }

    pub fn params(&self) -> &Vorticity2dParams {
        &self.params
    }

    pub fn grid_2d(&self) -> Grid2D {
        self.grid
    }

    pub fn viscosity(&self) -> f64 {
        1.0 / self.params.reynolds
    }

    /// Velocity `(u, v) = (psi_y, -psi_x)` from the vorticity transform.
    pub fn velocity(&self, w_hat: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
        let n = self.grid.n;
        let mut u = vec![Complex::new(T::zero(), T::zero()); n * n];
        let mut v = u.clone();
        for iy in 0..n {
            for ix in 0..n {
                let i = iy * n + ix;
                let psi = w_hat[i] * self.inv_k2[i];
                u[i] = psi * Complex::new(T::zero(), self.kd[iy]);
                v[i] = psi * Complex::new(T::zero(), -self.kd[ix]);
            }
        }
        (self.fft.inverse_real(&u), self.fft.inverse_real(&v))
    }

    /// Returns the transform of `-(u . grad w)` (truncated), plus the peak speed.
    /// Real pairs share one complex transform: `u + i v` and `w_x + i w_y`.
    fn advection(&self, w_hat: &[Complex<T>], out: &mut [Complex<T>]) -> T {
        let n = self.grid.n;
        let zero = Complex::new(T::zero(), T::zero());
        let mut vel = vec![zero; n * n];
        let mut grad = vec![zero; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let i = iy * n + ix;
                if !self.mask[i] {
                    continue;
                }
                let w = w_hat[i];
                let psi = w * self.inv_k2[i];
                let (kx, ky) = (self.kd[ix], self.kd[iy]);
                // u = i ky psi, v = -i kx psi, so u + i v = (i ky + kx) psi
                vel[i] = psi * Complex::new(kx, ky);
                // w_x + i w_y = (i kx - ky) w
                grad[i] = w * Complex::new(-ky, kx);
            }
        }
        self.fft.inverse(&mut vel);
        self.fft.inverse(&mut grad);
        let mut speed = T::zero();
        for i in 0..n * n {
            let (a, b) = (vel[i].re, vel[i].im);
            speed = speed.max((a * a + b * b).sqrt());
            out[i] = Complex::new(-(a * grad[i].re + b * grad[i].im), T::zero());
        }
        self.fft.forward(out);
        for i in 0..n * n {
            if !self.mask[i] {
                out[i] = zero;
            }
        }
        speed
    }

    pub fn advance(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError> {
        let grid = Grid::Plane(self.grid);
        check_pair(state, control, grid, 1)?;
        let n2 = self.grid.n * self.grid.n;
        let forcing = self.fft.forward_real(control.values());
        let mut w = self.fft.forward_real(state.values());
        let h = T::lit(self.params.dt / self.params.substeps as f64);
        let half = h / T::lit(2.0);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        let zero = Complex::new(T::zero(), T::zero());
        let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n2], vec![zero; n2], vec![zero; n2], vec![zero; n2]);
        let mut tmp = vec![zero; n2];
        let courant_limit = T::lit(MAX_COURANT * self.grid.dx());
        for sub in 0..self.params.substeps {
            let speed = self.advection(&w, &mut k1);
            if speed * h > courant_limit {
                return Err(EnvError::BlowUp { substep: sub, max_abs: speed.to_f64_lossy() });
            }
            add_assign(&mut k1, &forcing);
            for i in 0..n2 {
                tmp[i] = (w[i] + k1[i] * half) * self.half_factor[i];
            }
            self.advection(&tmp, &mut k2);
            add_assign(&mut k2, &forcing);
            for i in 0..n2 {
                tmp[i] = w[i] * self.half_factor[i] + k2[i] * half;
            }
            self.advection(&tmp, &mut k3);
            add_assign(&mut k3, &forcing);
            for i in 0..n2 {
                tmp[i] = w[i] * self.full_factor[i] + k3[i] * self.half_factor[i] * h;
            }
            self.advection(&tmp, &mut k4);
            add_assign(&mut k4, &forcing);
            for i in 0..n2 {
                w[i] = w[i] * self.full_factor[i]
                    + (k1[i] * self.full_factor[i] + (k2[i] + k3[i]) * self.half_factor[i] * two + k4[i]) * sixth;
            }
            if w.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(EnvError::BlowUp { substep: sub, max_abs: f64::INFINITY });
            }
        }
        let out = self.fft.inverse_real(&w);
        check_blow_up(&out, self.params.substeps)?;
        Ok(Field::from_values(grid, 1, out)?)
    }

    /// Mean kinetic energy `<|u|^2> / 2`.
    pub fn kinetic_energy(&self, state: &Field<T>) -> T {
        let w = self.fft.forward_real(state.values());
        let (u, v) = self.velocity(&w);
        let n2 = T::from_usize_lossy(u.len());
        u.iter().zip(&v).map(|(a, b)| *a * *a + *b * *b).sum::<T>() / (n2 * T::lit(2.0))
    }

    /// Random solenoidal field with spectrum `E(k) ~ k^7 exp(-3.5 (k/k_p)^2)`,
    /// scaled so that `y* l* = 1`. With `nu = 1/Re` this makes `y* l* / nu = Re`.
    pub fn random_field(&self, seed: u64) -> Field<T> {
        let n = self.grid.n;
        let k = wavenumbers(n, DOMAIN_LENGTH);
        let kp = self.params.peak_wavenumber;
        let mut r = rng::stream(seed, rng::Stream::TrainInitialConditions);
        let fft = Fft2::<f64>::new(n);
        let mut spec = vec![Complex::new(0.0, 0.0); n * n];
        for iy in 0..n {
            for ix in 0..n {
                let kk = (k[ix] * k[ix] + k[iy] * k[iy]).sqrt();
                let re: f64 = r.sample(StandardNormal);
                let im: f64 = r.sample(StandardNormal);
                if kk == 0.0 {
                    continue;
                }
                // enstrophy density per mode ~ k^2 E(k) / k
                let energy = (kk / kp).powi(7) * (-3.5 * (kk / kp).powi(2)).exp();
                let amp = (kk * energy).sqrt();
                spec[iy * n + ix] = Complex::new(re, im) * amp;
            }
        }
        fft.inverse(&mut spec);
        let mut w: Vec<f64> = spec.iter().map(|c| c.re).collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        w.iter_mut().for_each(|v| *v -= mean);
        let (ystar, lstar) = velocity_and_length_scales(&w, n);
        let scale = 1.0 / (ystar * lstar);
        let values = w.iter().map(|v| T::lit(v * scale)).collect();
        Field::from_values(Grid::Plane(self.grid), 1, values).expect("shape")
    }
}

/// `y* = <|u|^2>^(1/2)` and the integral length `l* = int E(k)/k dk / int E(k) dk`
/// of a vorticity field given on an `n x n` grid over `[0, 2 pi)^2`.
pub fn velocity_and_length_scales(w: &[f64], n: usize) -> (f64, f64) {
    let fft = Fft2::<f64>::new(n);
    let k = wavenumbers(n, DOMAIN_LENGTH);
    let w_hat = fft.forward_real(w);
    let norm = (n * n) as f64;
    let mut energy = 0.0;
    let mut weighted = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let k2 = k[ix] * k[ix] + k[iy] * k[iy];
            if k2 == 0.0 {
                continue;
            }
            // modal kinetic energy |w_hat|^2 / k^2 (Parseval, per unit area)
            let e = (w_hat[iy * n + ix].norm_sqr() / norm / norm) / k2;
            energy += e;
            weighted += e / k2.sqrt();
        }
    }
    ((energy).sqrt(), weighted / energy)
}

fn add_assign<T: Real>(a: &mut [Complex<T>], b: &[Complex<T>]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = *x + *y;
    }
}

impl<T: Real> Environment<T> for Vorticity2dSolver<T> {
    fn grid(&self) -> Grid {
        Grid::Plane(self.grid)
    }
    fn components(&self) -> usize {
        1
    }
    fn control_component(&self) -> usize {
        0
    }
    fn dt(&self) -> f64 {
        self.params.dt
    }
    fn step(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError> {
        self.advance(state, control)
    }
    fn initial_condition(&self, seed: u64) -> Field<T> {
        self.random_field(seed)
    }
}

pub fn vorticity2d_step<T: Real>(
    state: &Field<T>,
    control: &Field<T>,
    params: &Vorticity2dParams,
) -> Result<Field<T>, EnvError> {
    Vorticity2dSolver::new(params.clone())?.advance(state, control)
}

pub fn decaying_turbulence_ic<T: Real>(params: &Vorticity2dParams, seed: u64) -> Result<Field<T>, EnvError> {
    Ok(Vorticity2dSolver::new(params.clone())?.random_field(seed))
}
