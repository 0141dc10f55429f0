//! Uniform grids and discretized state fields.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Minimum resolution accepted for any grid axis.
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub length: f64,
    pub n_points: usize,
    /// Periodic grids omit the right end point; Neumann grids include both ends.
    pub periodic: bool,
}

impl Grid1D {
    pub fn new(length: f64, n_points: usize, periodic: bool) -> Result<Self, GridError> {
        if n_points < MIN_POINTS {
            return Err(GridError::TooFewPoints(n_points));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self { length, n_points, periodic })
    }

    pub fn periodic(length: f64, n_points: usize) -> Result<Self, GridError> {
        Self::new(length, n_points, true)
    }

    pub fn neumann(length: f64, n_points: usize) -> Result<Self, GridError> {
        Self::new(length, n_points, false)
    }

    pub fn dx(&self) -> f64 {
        if self.periodic {
            self.length / self.n_points as f64
        } else {
            self.length / (self.n_points - 1) as f64
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Quadrature weight of node `j`: rectangle rule when periodic, trapezoid otherwise.
    pub fn weight(&self, j: usize) -> f64 {
        let dx = self.dx();
        if !self.periodic && (j == 0 || j + 1 == self.n_points) {
            0.5 * dx
        } else {
            dx
        }
    }
}

/// Square, doubly periodic grid with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub length: f64,
    pub n: usize,
}

impl Grid2D {
    pub fn new(length: f64, n: usize) -> Result<Self, GridError> {
        if n < MIN_POINTS {
            return Err(GridError::TooFewPoints(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self { length, n })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn axis(&self) -> Grid1D {
        Grid1D { length: self.length, n_points: self.n, periodic: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Line(Grid1D),
    Plane(Grid2D),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Line(g) => g.n_points,
            Grid::Plane(g) => g.n * g.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        match self {
            Grid::Line(_) => 1,
            Grid::Plane(_) => 2,
        }
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            Grid::Line(g) => g.periodic,
            Grid::Plane(_) => true,
        }
    }

    /// Measure of the domain.
    pub fn volume(&self) -> f64 {
        match self {
            Grid::Line(g) => g.length,
            Grid::Plane(g) => g.length * g.length,
        }
    }

    /// Quadrature weight of flat node index `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Line(g) => g.weight(idx),
            Grid::Plane(g) => g.dx() * g.dx(),
        }
    }

    pub fn weights<T: Real>(&self) -> Vec<T> {
        (0..self.len()).map(|i| T::lit(self.weight(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid needs at least {MIN_POINTS} points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
}

/// Discretized state with `components` stacked scalar fields, row-major per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    components: usize,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        Self { grid, components, values: vec![T::zero(); grid.len() * components] }
    }

    pub fn from_values(grid: Grid, components: usize, values: Vec<T>) -> Result<Self, GridError> {
        let expected = grid.len() * components;
        if values.len() != expected {
            return Err(GridError::Shape { expected, got: values.len() });
        }
        Ok(Self { grid, components, values })
    }

    /// Samples `f` at every node of a single-component 1D field.
    pub fn from_fn_1d(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_points).map(|j| T::lit(f(grid.x(j)))).collect();
        Self { grid: Grid::Line(grid), components: 1, values }
    }

    /// Samples `f(x, y)` on a single-component 2D field.
    pub fn from_fn_2d(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let dx = grid.dx();
        let mut values = Vec::with_capacity(grid.n * grid.n);
        for iy in 0..grid.n {
            for ix in 0..grid.n {
                values.push(T::lit(f(ix as f64 * dx, iy as f64 * dx)));
            }
        }
        Self { grid: Grid::Plane(grid), components: 1, values }
    }

    /// Stacks single-component fields on the same grid.
    pub fn stack(parts: &[Field<T>]) -> Result<Self, GridError> {
        let grid = parts[0].grid;
        let mut values = Vec::with_capacity(grid.len() * parts.len());
        for p in parts {
            if p.grid != grid || p.components != 1 {
                return Err(GridError::Shape { expected: grid.len(), got: p.values.len() });
            }
            values.extend_from_slice(&p.values);
        }
        Ok(Self { grid, components: parts.len(), values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Quadrature of component `c`.
    pub fn integral(&self, c: usize) -> T {
        self.component(c)
            .iter()
            .enumerate()
            .map(|(i, &v)| T::lit(self.grid.weight(i)) * v)
            .sum()
    }

    /// Spatial mean of component `c`.
    pub fn mean(&self, c: usize) -> T {
        self.integral(c) / T::lit(self.grid.volume())
    }

    /// Spatial mean of `(y_c - reference)^2`.
    pub fn mean_square_deviation(&self, c: usize, reference: T) -> T {
        let s: T = self
            .component(c)
            .iter()
            .enumerate()
            .map(|(i, &v)| T::lit(self.grid.weight(i)) * (v - reference) * (v - reference))
            .sum();
        s / T::lit(self.grid.volume())
    }

    /// Cyclic shift by whole grid cells (`dx` cells along x, `dy` along y for 2D).
    pub fn shifted(&self, dx: isize, dy: isize) -> Self {
        let mut out = self.clone();
        match self.grid {
            Grid::Line(g) => {
                let n = g.n_points as isize;
                for c in 0..self.components {
                    let src = self.component(c);
                    let dst = out.component_mut(c);
                    for j in 0..n {
                        dst[(j + dx).rem_euclid(n) as usize] = src[j as usize];
                    }
                }
            }
            Grid::Plane(g) => {
                let n = g.n as isize;
                for c in 0..self.components {
                    let src = self.component(c);
                    let dst = out.component_mut(c);
                    for iy in 0..n {
                        for ix in 0..n {
                            let ty = (iy + dy).rem_euclid(n);
                            let tx = (ix + dx).rem_euclid(n);
                            dst[(ty * n + tx) as usize] = src[(iy * n + ix) as usize];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn convert<U: Real>(&self) -> Field<U> {
        Field {
            grid: self.grid,
            components: self.components,
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}
