//! Kuramoto–Sivashinsky equation on a periodic domain,
//!
//! `y_t = -y y_x - y_xx - y_xxxx + mu cos(4 pi x / L) + f(x, u)`,
//!
//! integrated with ETDRK4 on a Fourier pseudo-spectral grid. The quadratic
//! term is dealiased with the 3/2 rule.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::spectral::{contour_mean, derivative_wavenumbers, wavenumbers, Fft1};
use super::{check_blow_up, check_pair, EnvError, Environment};
use crate::field::{Field, Grid, Grid1D};
use crate::rng;
use crate::scalar::Real;

/// Largest inner step accepted by the integrator.
pub const MAX_INNER_STEP: f64 = 0.25;

/// Number of Fourier modes populated by [`KsSolver::initial_condition`].
pub const IC_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsParams {
    pub length: f64,
    pub n_points: usize,
    pub mu: f64,
    pub dt: f64,
    pub substeps: usize,
}

impl KsParams {
    /// Desk-scale defaults: resolution follows the domain size, `dt = 0.05`.
    pub fn for_length(length: f64) -> Self {
        let n_points = if (length - 22.0).abs() < 1e-9 {
            64
        } else {
            // 512 points per 200 length units, rounded to an even count
            let n = (length * 2.56).round() as usize;
            n + n % 2
        };
        Self { length, n_points, mu: 0.0, dt: 0.05, substeps: 1 }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        Grid1D::periodic(self.length, self.n_points)?;
        if self.n_points % 2 != 0 {
            return Err(EnvError::InvalidParams("KS grid needs an even point count".into()));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(EnvError::InvalidParams(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.substeps == 0 {
            return Err(EnvError::InvalidParams("dt must be > 0 with at least one substep".into()));
        }
        let h = self.dt / self.substeps as f64;
        if h > MAX_INNER_STEP {
            return Err(EnvError::InvalidParams(format!(
                "inner step {h} exceeds the ETDRK4 bound {MAX_INNER_STEP}"
            )));
        }
        Ok(())
    }
}

/// Precomputed ETDRK4 stepper for one parameter set.
#[derive(Clone)]
pub struct KsSolver<T: Real> {
    params: KsParams,
    grid: Grid1D,
    fft: Fft1<T>,
    fft_pad: Fft1<T>,
    exp_full: Vec<T>,
    exp_half: Vec<T>,
    q: Vec<T>,
    f1: Vec<T>,
    f2: Vec<T>,
    f3: Vec<T>,
    /// `-i k / 2`, applied to the transform of `y^2`.
    advect: Vec<Complex<T>>,
    /// Transform of the `mu cos(4 pi x / L)` source.
    inhomogeneity: Vec<Complex<T>>,
}

impl<T: Real> KsSolver<T> {
    pub fn new(params: KsParams) -> Result<Self, EnvError> {
        params.validate()?;
        let n = params.n_points;
        let grid = Grid1D::periodic(params.length, n)?;
        let h = params.dt / params.substeps as f64;
        let k = wavenumbers(n, params.length);
        let kd = derivative_wavenumbers(n, params.length);

        let mut exp_full = Vec::with_capacity(n);
        let mut exp_half = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        let mut f3 = Vec::with_capacity(n);
        for &kj in &k {
            let lin = kj * kj - kj.powi(4);
            let z = h * lin;
            exp_full.push(T::lit(z.exp()));
            exp_half.push(T::lit((z / 2.0).exp()));
            q.push(T::lit(h * contour_mean(z, 32, |w| ((w / 2.0).exp() - 1.0) / w)));
            f1.push(T::lit(
                h * contour_mean(z, 32, |w| {
                    (-4.0 - w + w.exp() * (4.0 - 3.0 * w + w * w)) / w.powi(3)
                }),
            ));
            f2.push(T::lit(
                h * contour_mean(z, 32, |w| (2.0 + w + w.exp() * (w - 2.0)) / w.powi(3)),
            ));
            f3.push(T::lit(
                h * contour_mean(z, 32, |w| (-4.0 - 3.0 * w - w * w + w.exp() * (4.0 - w)) / w.powi(3)),
            ));
        }
        let advect = kd.iter().map(|&kj| Complex::new(T::zero(), T::lit(-0.5 * kj))).collect();

        let fft = Fft1::new(n);
        let mu = params.mu;
        let l = params.length;
        let src: Vec<T> = (0..n)
            .map(|j| T::lit(mu * (4.0 * std::f64::consts::PI * grid.x(j) / l).cos()))
            .collect();
        let inhomogeneity = fft.forward_real(&src);

        Ok(Self {
            fft_pad: Fft1::new(3 * n / 2),
            params,
            grid,
            fft,
            exp_full,
            exp_half,
            q,
            f1,
            f2,
            f3,
            advect,
            inhomogeneity,
        })
    }

    pub fn params(&self) -> &KsParams {
        &self.params
    }

    pub fn grid_1d(&self) -> Grid1D {
        self.grid
    }

    /// Transform of `-(y^2)_x / 2 + source`, with `y^2` formed on the 3/2-padded grid.
    fn nonlinear(&self, v: &[Complex<T>], source: &[Complex<T>], out: &mut [Complex<T>], pad: &mut [Complex<T>]) {
        let n = v.len();
        let m = pad.len();
        let half = n / 2;
        pad.iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        pad[..half].copy_from_slice(&v[..half]);
        for j in 1..half {
            pad[m - j] = v[n - j];
        }
        self.fft_pad.inverse_in_place(pad);
        let inv_n = T::one() / T::from_usize_lossy(n);
        for c in pad.iter_mut() {
            let y = c.re * inv_n;
            *c = Complex::new(y * y, T::zero());
        }
        self.fft_pad.forward_in_place(pad);
        let back = T::from_usize_lossy(n) / T::from_usize_lossy(m);
        for j in 0..n {
            let sq = if j < half {
                pad[j]
            } else if j == half {
                Complex::new(T::zero(), T::zero())
            } else {
                pad[m - (n - j)]
            };
            out[j] = self.advect[j] * sq * back + source[j];
        }
    }

    /// Advances `state` by one control interval under `control`.
    pub fn advance(&self, state: &Field<T>, control: &Field<T>) -> Result<Field<T>, EnvError> {
        check_pair(state, control, Grid::Line(self.grid), 1)?;
        let n = self.grid.n_points;
        let mut source = self.fft.forward_real(control.values());
        for (s, base) in source.iter_mut().zip(&self.inhomogeneity) {
            *s = *s + *base;
        }
        let mut v = self.fft.forward_real(state.values());
        let zero = Complex::new(T::zero(), T::zero());
        let mut pad = vec![zero; 3 * n / 2];
        let (mut nv, mut na, mut nb, mut nc) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        let (mut a, mut b, mut c) = (vec![zero; n], vec![zero; n], vec![zero; n]);
        let two = T::lit(2.0);
        for sub in 0..self.params.substeps {
            self.nonlinear(&v, &source, &mut nv, &mut pad);
            for j in 0..n {
                a[j] = v[j] * self.exp_half[j] + nv[j] * self.q[j];
            }
            self.nonlinear(&a, &source, &mut na, &mut pad);
            for j in 0..n {
                b[j] = v[j] * self.exp_half[j] + na[j] * self.q[j];
            }
            self.nonlinear(&b, &source, &mut nb, &mut pad);
            for j in 0..n {
                c[j] = a[j] * self.exp_half[j] + (nb[j] * two - nv[j]) * self.q[j];
            }
            self.nonlinear(&c, &source, &mut nc, &mut pad);
            for j in 0..n {
                v[j] = v[j] * self.exp_full[j]
                    + nv[j] * self.f1[j]
                    + (na[j] + nb[j]) * self.f2[j] * two
                    + nc[j] * self.f3[j];
            }
            // cheap spectral-side guard; the physical check below is authoritative
            if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(EnvError::BlowUp { substep: sub, max_abs: f64::INFINITY });
            }
        }
        let y = self.fft.inverse_real(&v);
        check_blow_up(&y, self.params.substeps)?;
        Ok(Field::from_values(Grid::Line(self.grid), 1, y)?)
    }

    /// Smooth mean-free random field on the first [`IC_MODES`] Fourier modes,
    /// scaled to unit spatial variance.
    pub fn random_field(grid: Grid1D, seed: u64) -> Field<T> {
        let mut r = rng::stream(seed, rng::Stream::TrainInitialConditions);
        let coeffs: Vec<(f64, f64)> =
            (0..IC_MODES).map(|_| (r.sample(StandardNormal), r.sample(StandardNormal))).collect();
        let l = grid.length;
        let raw: Vec<f64> = (0..grid.n_points)
            .map(|j| {
                let x = grid.x(j);
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, (a, b))| {
                        let arg = 2.0 * std::f64::consts::PI * (m + 1) as f64 * x / l;
                        a * arg.cos() + b * arg.sin()
                    })
                    .sum()
            })
            .collect();
        let var = raw.iter().map(|v| v * v).sum::<f64>() / raw.len() as f64;
        let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
        let values = raw.iter().map(|v| T::lit(v * scale)).collect();
        Field::from_values(Grid::Line(grid), 1, values).expect("shape")
    }
}

impl<T: Real> Environment<T> for KsSolver<T> {
    fn grid(&self) -> Grid {
        Grid::Line(self.grid)
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
        Self::random_field(self.grid, seed)
    }
}

/// One control interval of the KS flow map.
pub fn ks_step<T: Real>(state: &Field<T>, control: &Field<T>, params: &KsParams) -> Result<Field<T>, EnvError> {
    KsSolver::new(params.clone())?.advance(state, control)
}

/// Random initial condition before any warm-up.
pub fn ks_initial_condition<T: Real>(grid: Grid1D, seed: u64) -> Field<T> {
    KsSolver::random_field(grid, seed)
}
