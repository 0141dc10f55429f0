//! FFT plumbing shared by the periodic solvers.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Angular wavenumbers of an `n`-point periodic grid on `[0, length)`, in FFT order.
/// The Nyquist entry is returned with its positive value.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            base * m
        })
        .collect()
}

/// Wavenumbers for first derivatives: the Nyquist mode is zeroed so real fields stay real.
pub fn derivative_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let mut k = wavenumbers(n, length);
    if n % 2 == 0 {
        k[n / 2] = 0.0;
    }
    k
}

#[derive(Clone)]
pub struct Fft1<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft1<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform of a real signal.
    pub fn forward_real(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` factor, keeping the real part.
    pub fn inverse_real(&self, spec: &[Complex<T>]) -> Vec<T> {
        let mut buf = spec.to_vec();
        self.inverse.process(&mut buf);
        let scale = T::one() / T::from_usize_lossy(self.n);
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
    }
}

/// Square 2D transform built from row transforms and transposes.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    n: usize,
    line: Fft1<T>,
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        Self { n, line: Fft1::new(n) }
    }

    fn transpose(&self, buf: &mut [Complex<T>]) {
        const TILE: usize = 16;
        let n = self.n;
        for bi in (0..n).step_by(TILE) {
            for bj in (bi..n).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    let start = if bi == bj { i + 1 } else { bj };
                    for j in start..(bj + TILE).min(n) {
                        buf.swap(i * n + j, j * n + i);
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform, layout `[iy * n + ix]`.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.line.forward.process(buf);
        self.transpose(buf);
        self.line.forward.process(buf);
        self.transpose(buf);
    }

    /// Inverse transform including the `1/n^2` factor.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.line.inverse.process(buf);
        self.transpose(buf);
        self.line.inverse.process(buf);
        self.transpose(buf);
        let scale = T::one() / T::from_usize_lossy(self.n * self.n);
        buf.iter_mut().for_each(|c| *c = *c * scale);
    }

    pub fn forward_real(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&self, spec: &[Complex<T>]) -> Vec<T> {
        let mut buf = spec.to_vec();
        self.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

/// Mean over `m` points on a circle of radius one around `z` of `f(z + r)`,
/// the contour-integral trick for functions like `(e^z - 1)/z` near `z = 0`.
pub(crate) fn contour_mean(z: f64, m: usize, f: impl Fn(Complex<f64>) -> Complex<f64>) -> f64 {
    let mut acc = Complex::new(0.0, 0.0);
    for j in 1..=m {
        let theta = std::f64::consts::PI * (j as f64 - 0.5) / m as f64;
        let r = Complex::new(theta.cos(), theta.sin());
        acc += f(Complex::new(z, 0.0) + r);
    }
    (acc / m as f64).re
}
