//! Convolutional sensing and actuation.
//!
//! A [`SensorArray`] turns a field into `M` kernel-weighted readings, one per
//! agent; [`local_views`] cuts each agent's neighborhood out of those readings.
//! An [`ActuatorArray`] superimposes scaled kernels into a control field.

pub mod kernel;
pub mod reward;

pub use kernel::{KernelShape, KernelSpec, Normalization};
pub use reward::{compute_rewards, stage_cost, windowed_costs, RewardSpec, Rewards};

use serde::{Deserialize, Serialize};

use crate::field::{Field, Grid, Grid1D};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConvError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel around center {center} reaches outside [0, {length}]")]
    SupportOutsideDomain { center: f64, length: f64 },
    #[error("invalid array geometry: {0}")]
    Geometry(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    PeriodicWrap,
    /// Kernels must lie inside the domain; neighbor indices past an end are mirrored.
    TruncateAtBoundary,
}

/// Sampled kernel around one center.
#[derive(Debug, Clone)]
pub(crate) struct Stencil<T> {
    pub nodes: Vec<usize>,
    /// Kernel value at each node.
    pub values: Vec<T>,
    /// Quadrature weight times kernel value.
    pub weighted: Vec<T>,
}

fn wrap(d: f64, length: f64) -> f64 {
    let r = d.rem_euclid(length);
    if r >= length / 2.0 {
        r - length
    } else {
        r
    }
}

fn sample_axis(
    kernel: &KernelSpec,
    axis: &Grid1D,
    center: f64,
) -> Result<Vec<(usize, f64)>, ConvError> {
    let n = axis.n_points;
    if kernel.is_dirac() {
        let j = if axis.periodic {
            ((center / axis.dx()).round() as usize) % n
        } else {
            ((center / axis.dx()).round() as usize).min(n - 1)
        };
        return Ok(vec![(j, 1.0)]);
    }
    let r = kernel.radius();
    if !axis.periodic {
        let tol = 1e-9 * axis.length;
        if center - r < -tol || center + r > axis.length + tol {
            return Err(ConvError::SupportOutsideDomain { center, length: axis.length });
        }
    } else if 2.0 * r > axis.length {
        return Err(ConvError::Geometry(format!(
            "kernel support {} exceeds the periodic domain {}",
            2.0 * r,
            axis.length
        )));
    }
    let mut out = Vec::new();
    for j in 0..n {
        let x = axis.x(j);
        let v = if axis.periodic {
            kernel.profile(wrap(x - center, axis.length))
        } else if j + 1 == n {
            kernel.profile_closed(x - center)
        } else {
            kernel.profile(x - center)
        };
        if v != 0.0 {
            out.push((j, v));
        }
    }
    Ok(out)
}

fn build_stencil<T: Real>(kernel: &KernelSpec, grid: &Grid, center: [f64; 2]) -> Result<Stencil<T>, ConvError> {
    kernel.validate()?;
    let (nodes, mut values): (Vec<usize>, Vec<f64>) = match grid {
        Grid::Line(g) => sample_axis(kernel, g, center[0])?.into_iter().unzip(),
        Grid::Plane(g) => {
            let axis = g.axis();
            let xs = sample_axis(kernel, &axis, center[0])?;
            let ys = sample_axis(kernel, &axis, center[1])?;
            let mut nodes = Vec::with_capacity(xs.len() * ys.len());
            let mut vals = Vec::with_capacity(xs.len() * ys.len());
            for &(iy, vy) in &ys {
                for &(ix, vx) in &xs {
                    nodes.push(iy * g.n + ix);
                    vals.push(vx * vy);
                }
            }
            (nodes, vals)
        }
    };
    if kernel.is_dirac() {
        // point evaluation for sensing, a unit-mass spike for actuation
        let w = grid.weight(nodes[0]);
        return Ok(Stencil { nodes, values: vec![T::lit(1.0 / w)], weighted: vec![T::one()] });
    }
    if kernel.normalization == Normalization::UnitIntegral {
        let mass: f64 = nodes.iter().zip(&values).map(|(&j, &v)| grid.weight(j) * v).sum();
        if mass == 0.0 {
            return Err(ConvError::InvalidKernel("kernel has zero mass on the grid".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
    }
    let weighted = nodes.iter().zip(&values).map(|(&j, &v)| T::lit(grid.weight(j) * v)).collect();
    Ok(Stencil { nodes, values: values.into_iter().map(T::lit).collect(), weighted })
}

/// Product kernels on a square periodic lattice, evaluated one axis at a time.
/// Axis stencil `a` belongs to the centers with coordinate `(a + 1/2) L / m`.
#[derive(Debug, Clone)]
pub(crate) struct Separable<T> {
    per_axis: usize,
    n: usize,
    cell: T,
    axis: Vec<(Vec<usize>, Vec<T>)>,
}

impl<T: Real> Separable<T> {
    fn new(kernel: &KernelSpec, grid: &Grid, per_axis: usize) -> Result<Option<Self>, ConvError> {
        let Grid::Plane(g) = grid else { return Ok(None) };
        if kernel.is_dirac() {
            return Ok(None);
        }
        let axis_grid = g.axis();
        let s = g.length / per_axis as f64;
        let mut axis = Vec::with_capacity(per_axis);
        for a in 0..per_axis {
            let taps = sample_axis(kernel, &axis_grid, (a as f64 + 0.5) * s)?;
            let scale = if kernel.normalization == Normalization::UnitIntegral {
                let mass: f64 = taps.iter().map(|t| t.1).sum::<f64>() * g.dx();
                1.0 / mass
            } else {
                1.0
            };
            axis.push(taps.iter().map(|&(j, v)| (j, T::lit(v * scale))).unzip());
        }
        Ok(Some(Self { per_axis, n: g.n, cell: T::lit(g.dx() * g.dx()), axis }))
    }

    /// `cell * sum psi_a(x) psi_b(y) g(x, y)` for every center, or with `psi^2` when `squared`.
    fn correlate(&self, g: &[T], squared: bool) -> Vec<T> {
        let (m, n) = (self.per_axis, self.n);
        let tap = |v: T| if squared { v * v } else { v };
        // rows[a * n + iy]: correlation of row iy with axis stencil a
        let mut rows = vec![T::zero(); m * n];
        for (a, (idx, val)) in self.axis.iter().enumerate() {
            for iy in 0..n {
                let row = &g[iy * n..(iy + 1) * n];
                rows[a * n + iy] = idx.iter().zip(val).map(|(&j, &v)| tap(v) * row[j]).sum();
            }
        }
        let mut out = vec![T::zero(); m * m];
        for b in 0..m {
            let (idx, val) = &self.axis[b];
            for a in 0..m {
                let r = &rows[a * n..(a + 1) * n];
                out[b * m + a] = self.cell * idx.iter().zip(val).map(|(&j, &v)| tap(v) * r[j]).sum::<T>();
            }
        }
        out
    }

    /// Adds `sum_i u_i psi_i` to `out`, with `u` in lattice order.
    fn synthesize(&self, u: &[T], out: &mut [T]) {
        let (m, n) = (self.per_axis, self.n);
        let mut line = vec![T::zero(); n];
        for b in 0..m {
            line.iter_mut().for_each(|v| *v = T::zero());
            let mut any = false;
            for a in 0..m {
                let ua = u[b * m + a];
                if ua == T::zero() {
                    continue;
                }
                any = true;
                let (idx, val) = &self.axis[a];
                for (&j, &v) in idx.iter().zip(val) {
                    line[j] += ua * v;
                }
            }
            if !any {
                continue;
            }
            let (idx, val) = &self.axis[b];
            for (&iy, &v) in idx.iter().zip(val) {
                for (o, &l) in out[iy * n..(iy + 1) * n].iter_mut().zip(&line) {
                    *o += v * l;
                }
            }
        }
    }
}

/// Equidistant sensor centers: `(i + 1/2) L / M` along each axis.
fn centers(grid: &Grid, per_axis: usize) -> Vec<[f64; 2]> {
    match grid {
        Grid::Line(g) => {
            let s = g.length / per_axis as f64;
            (0..per_axis).map(|i| [(i as f64 + 0.5) * s, 0.0]).collect()
        }
        Grid::Plane(g) => {
            let s = g.length / per_axis as f64;
            let mut c = Vec::with_capacity(per_axis * per_axis);
            for b in 0..per_axis {
                for a in 0..per_axis {
                    c.push([(a as f64 + 0.5) * s, (b as f64 + 0.5) * s]);
                }
            }
            c
        }
    }
}

/// Readings of all `M` sensors, row `i` holding the `n` components at sensor `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Observations<T> {
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Cyclic relabeling: row `i` moves to `i + shift` (1D arrays).
    pub fn rotated(&self, shift: isize) -> Self {
        let mut out = self.clone();
        let m = self.rows as isize;
        for i in 0..m {
            let dst = (i + shift).rem_euclid(m) as usize;
            out.data[dst * self.cols..(dst + 1) * self.cols].copy_from_slice(self.row(i as usize));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SensorArray<T: Real> {
    kernel: KernelSpec,
    grid: Grid,
    per_axis: usize,
    neighborhood: usize,
    boundary: BoundaryMode,
    centers: Vec<[f64; 2]>,
    stencils: Vec<Stencil<T>>,
    windows: Vec<Stencil<T>>,
    sep_sense: Option<Separable<T>>,
    sep_window: Option<Separable<T>>,
}

impl<T: Real> SensorArray<T> {
    /// `per_axis` sensors along each axis (so `M = per_axis` in 1D and
    /// `per_axis^2` in 2D) and an odd neighborhood width per axis.
    pub fn equidistant(grid: Grid, per_axis: usize, kernel: KernelSpec, neighborhood: usize) -> Result<Self, ConvError> {
        kernel.validate()?;
        if per_axis == 0 {
            return Err(ConvError::Geometry("need at least one sensor".into()));
        }
        if neighborhood % 2 == 0 || neighborhood > per_axis {
            return Err(ConvError::Geometry(format!(
                "neighborhood size must be odd and at most {per_axis}, got {neighborhood}"
            )));
        }
        let boundary = if grid.is_periodic() { BoundaryMode::PeriodicWrap } else { BoundaryMode::TruncateAtBoundary };
        let centers = centers(&grid, per_axis);
        let stencils = centers.iter().map(|&c| build_stencil(&kernel, &grid, c)).collect::<Result<_, _>>()?;
        let raw = KernelSpec { normalization: Normalization::None, ..kernel.clone() };
        let windows = centers.iter().map(|&c| build_stencil(&raw, &grid, c)).collect::<Result<_, _>>()?;
        let sep_sense = Separable::new(&kernel, &grid, per_axis)?;
        let sep_window = Separable::new(&raw, &grid, per_axis)?;
        Ok(Self { kernel, grid, per_axis, neighborhood, boundary, centers, stencils, windows, sep_sense, sep_window })
    }

    pub fn count(&self) -> usize {
        self.centers.len()
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    /// Neighborhood width per axis (`S` in 1D, `s` with `S = s^2` in 2D).
    pub fn neighborhood(&self) -> usize {
        self.neighborhood
    }

    /// Number of sensors in each local view.
    pub fn view_size(&self) -> usize {
        match self.grid {
            Grid::Line(_) => self.neighborhood,
            Grid::Plane(_) => self.neighborhood * self.neighborhood,
        }
    }

    /// Distance between neighboring centers.
    pub fn spacing(&self) -> f64 {
        match self.grid {
            Grid::Line(g) => g.length / self.per_axis as f64,
            Grid::Plane(g) => g.length / self.per_axis as f64,
        }
    }

    fn wrap_index(&self, i: isize) -> usize {
        let m = self.per_axis as isize;
        match self.boundary {
            BoundaryMode::PeriodicWrap => i.rem_euclid(m) as usize,
            BoundaryMode::TruncateAtBoundary => {
                let mut j = i;
                if j < 0 {
                    j = -j;
                }
                if j >= m {
                    j = 2 * (m - 1) - j;
                }
                j.clamp(0, m - 1) as usize
            }
        }
    }

    /// Index set `I_i` in view order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let h = (self.neighborhood / 2) as isize;
        match self.grid {
            Grid::Line(_) => (-h..=h).map(|o| self.wrap_index(i as isize + o)).collect(),
            Grid::Plane(_) => {
                let m = self.per_axis;
                let (a, b) = ((i % m) as isize, (i / m) as isize);
                let mut out = Vec::with_capacity(self.view_size());
                for oy in -h..=h {
                    for ox in -h..=h {
                        out.push(self.wrap_index(b + oy) * m + self.wrap_index(a + ox));
                    }
                }
                out
            }
        }
    }

    /// Unnormalized kernel around sensor `i`, used as the reward window.
    pub(crate) fn window(&self, i: usize) -> &Stencil<T> {
        &self.windows[i]
    }

    /// Separable form of the reward windows, for product kernels in 2D.
    pub(crate) fn separable_window(&self) -> Option<&Separable<T>> {
        self.sep_window.as_ref()
    }

    /// `y~_i = int psi(x - c_i) y(x) dx` per component.
    pub fn sense(&self, field: &Field<T>) -> Result<Observations<T>, ConvError> {
        if *field.grid() != self.grid {
            return Err(ConvError::Shape("field grid differs from the sensor grid".into()));
        }
        let cols = field.components();
        if let Some(sep) = &self.sep_sense {
            let per: Vec<Vec<T>> = (0..cols).map(|c| sep.correlate(field.component(c), false)).collect();
            let data = (0..self.count()).flat_map(|i| per.iter().map(move |p| p[i])).collect();
            return Ok(Observations { rows: self.count(), cols, data });
        }
        let mut data = Vec::with_capacity(self.count() * cols);
        for st in &self.stencils {
            for c in 0..cols {
                let y = field.component(c);
                let v = if self.kernel.is_dirac() {
                    y[st.nodes[0]]
                } else {
                    st.nodes.iter().zip(&st.weighted).map(|(&j, &w)| w * y[j]).sum()
                };
                data.push(v);
            }
        }
        Ok(Observations { rows: self.count(), cols, data })
    }
}

/// Stack of past observations used as delay coordinates, most recent first.
pub type DelayStack<'a, T> = &'a [Observations<T>];

/// Local state vectors: for each agent, the rows of `I_i` (all components),
/// followed by the same rows of each delayed observation.
pub fn local_views<T: Real>(
    obs: &Observations<T>,
    array: &SensorArray<T>,
    delays: DelayStack<'_, T>,
) -> Result<Vec<Vec<T>>, ConvError> {
    for d in delays {
        if d.rows != obs.rows || d.cols != obs.cols {
            return Err(ConvError::Shape("delayed observation shape differs".into()));
        }
    }
    if obs.rows != array.count() {
        return Err(ConvError::Shape(format!("{} rows for {} sensors", obs.rows, array.count())));
    }
    let len = obs.cols * array.view_size() * (1 + delays.len());
    Ok((0..array.count())
        .map(|i| {
            let idx = array.neighbors(i);
            let mut v = Vec::with_capacity(len);
            for source in std::iter::once(obs).chain(delays.iter()) {
                for &j in &idx {
                    v.extend_from_slice(source.row(j));
                }
            }
            v
        })
        .collect())
}

/// Output of [`ActuatorArray::actuate`].
#[derive(Debug, Clone)]
pub struct Actuation<T> {
    pub field: Field<T>,
    pub applied: Vec<T>,
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct ActuatorArray<T: Real> {
    kernel: KernelSpec,
    grid: Grid,
    u_max: f64,
    /// Sensor (agent) index driving each actuator.
    agent: Vec<usize>,
    centers: Vec<[f64; 2]>,
    stencils: Vec<Stencil<T>>,
    mean_square: Vec<T>,
    separable: Option<Separable<T>>,
}

impl<T: Real> ActuatorArray<T> {
    /// One actuator on every sensor except `margin` sensors at each end of a
    /// non-periodic domain.
    pub fn on_sensors(sensors: &SensorArray<T>, kernel: KernelSpec, u_max: f64, margin: usize) -> Result<Self, ConvError> {
        let m = sensors.count();
        let agent: Vec<usize> = if sensors.boundary == BoundaryMode::PeriodicWrap || margin == 0 {
            (0..m).collect()
        } else {
            if matches!(sensors.grid, Grid::Plane(_)) {
                return Err(ConvError::Geometry("margins apply to 1D arrays only".into()));
            }
            if 2 * margin >= m {
                return Err(ConvError::Geometry(format!("margin {margin} leaves no actuator among {m} sensors")));
            }
            (margin..m - margin).collect()
        };
        Self::at_agents(sensors, kernel, u_max, agent)
    }

    pub fn at_agents(sensors: &SensorArray<T>, kernel: KernelSpec, u_max: f64, agent: Vec<usize>) -> Result<Self, ConvError> {
        kernel.validate()?;
        if !(u_max > 0.0 && u_max.is_finite()) {
            return Err(ConvError::Geometry(format!("u_max must be positive, got {u_max}")));
        }
        if agent.is_empty() || agent.len() > sensors.count() || agent.iter().any(|&i| i >= sensors.count()) {
            return Err(ConvError::Geometry("actuators must map to distinct sensors (P <= M)".into()));
        }
        let grid = sensors.grid;
        let centers: Vec<[f64; 2]> = agent.iter().map(|&i| sensors.centers[i]).collect();
        let stencils: Vec<Stencil<T>> =
            centers.iter().map(|&c| build_stencil(&kernel, &grid, c)).collect::<Result<_, _>>()?;
        let vol = T::lit(grid.volume());
        let mean_square = stencils
            .iter()
            .map(|st| {
                st.nodes.iter().zip(&st.values).map(|(&j, &v)| T::lit(grid.weight(j)) * v * v).sum::<T>() / vol
            })
            .collect();
        let all = agent.len() == sensors.count() && agent.iter().enumerate().all(|(p, &i)| p == i);
        let separable = if all { Separable::new(&kernel, &grid, sensors.per_axis)? } else { None };
        Ok(Self { kernel, grid, u_max, agent, centers, stencils, mean_square, separable })
    }

    pub fn count(&self) -> usize {
        self.agent.len()
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Sensor index that decides actuator `p`.
    pub fn agents(&self) -> &[usize] {
        &self.agent
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    /// `<psi_p^2>` for each actuator.
    pub fn mean_square_kernels(&self) -> &[T] {
        &self.mean_square
    }

    /// `f(x, u) = sum_p u_p psi(x - c_p)` sampled on the grid, with actions clamped to `u_max`.
    pub fn actuate(&self, actions: &[T]) -> Result<Actuation<T>, ConvError> {
        if actions.len() != self.count() {
            return Err(ConvError::Shape(format!("{} actions for {} actuators", actions.len(), self.count())));
        }
        let bound = T::lit(self.u_max);
        let mut clamped = 0;
        let applied: Vec<T> = actions
            .iter()
            .map(|&a| {
                if a.abs() > bound || !a.is_finite() {
                    clamped += 1;
                    if a.is_nan() {
                        T::zero()
                    } else {
                        a.max(-bound).min(bound)
                    }
                } else {
                    a
                }
            })
            .collect();
        if clamped > 0 {
            log::debug!("clamped {clamped} of {} actions to +-{}", actions.len(), self.u_max);
        }
        let mut field = Field::zeros(self.grid, 1);
        let f = field.values_mut();
        if let Some(sep) = &self.separable {
            sep.synthesize(&applied, f);
            return Ok(Actuation { field, applied, clamped });
        }
        for (st, &u) in self.stencils.iter().zip(&applied) {
            if u == T::zero() {
                continue;
            }
            for (&j, &v) in st.nodes.iter().zip(&st.values) {
                f[j] += u * v;
            }
        }
        Ok(Actuation { field, applied, clamped })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2D;

    fn ks_grid() -> Grid {
        Grid::Line(Grid1D::periodic(22.0, 64).unwrap())
    }

    #[test]
    fn constant_field_with_unit_indicator() {
        let g = Grid::Line(Grid1D::neumann(10.0, 200).unwrap());
        let s = SensorArray::<f64>::equidistant(g, 40, KernelSpec::indicator(0.25).unit_integral(), 3).unwrap();
        let f = Field::from_values(g, 1, vec![3.0; 200]).unwrap();
        let obs = s.sense(&f).unwrap();
        for v in &obs.data {
            assert!((v - 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn dirac_reads_nearest_node() {
        let g = ks_grid();
        let s = SensorArray::<f64>::equidistant(g, 8, KernelSpec::dirac(), 1).unwrap();
        let f = Field::from_fn_1d(Grid1D::periodic(22.0, 64).unwrap(), |x| x * x);
        let obs = s.sense(&f).unwrap();
        for (i, c) in s.centers().iter().enumerate() {
            let j = (c[0] / (22.0 / 64.0)).round() as usize;
            assert_eq!(obs.data[i], f.values()[j]);
        }
    }

    #[test]
    fn periodic_views_wrap() {
        let s = SensorArray::<f64>::equidistant(ks_grid(), 8, KernelSpec::gaussian(0.8), 3).unwrap();
        assert_eq!(s.neighbors(0), vec![7, 0, 1]);
        let obs = Observations { rows: 8, cols: 1, data: (0..8).map(|i| i as f64).collect() };
        let views = local_views(&obs, &s, &[]).unwrap();
        assert_eq!(views[0], vec![7.0, 0.0, 1.0]);
        // S = 1 is the row itself
        let s1 = SensorArray::<f64>::equidistant(ks_grid(), 8, KernelSpec::gaussian(0.8), 1).unwrap();
        let v1 = local_views(&obs, &s1, &[]).unwrap();
        for (i, v) in v1.iter().enumerate() {
            assert_eq!(v, &vec![i as f64]);
        }
    }

    #[test]
    fn views_shift_with_rotated_rows() {
        let s = SensorArray::<f64>::equidistant(ks_grid(), 8, KernelSpec::gaussian(0.8), 5).unwrap();
        let obs = Observations { rows: 8, cols: 1, data: (0..8).map(|i| (i * i) as f64).collect() };
        let base = local_views(&obs, &s, &[]).unwrap();
        for shift in 0..8isize {
            let rotated = local_views(&obs.rotated(shift), &s, &[]).unwrap();
            for i in 0..8 {
                assert_eq!(rotated[(i + shift as usize) % 8], base[i]);
            }
        }
    }

    #[test]
    fn delayed_views_have_expected_length() {
        let g = Grid::Line(Grid1D::neumann(10.0, 200).unwrap());
        let s = SensorArray::<f64>::equidistant(g, 40, KernelSpec::indicator(0.25).unit_integral(), 3).unwrap();
        let obs = Observations { rows: 40, cols: 2, data: vec![1.0; 80] };
        let views = local_views(&obs, &s, std::slice::from_ref(&obs)).unwrap();
        assert!(views.iter().all(|v| v.len() == 12));
        // mirrored neighbors at the left end
        assert_eq!(s.neighbors(0), vec![1, 0, 1]);
        assert_eq!(s.neighbors(39), vec![38, 39, 38]);
    }

    #[test]
    fn truncate_mode_rejects_protruding_kernel() {
        let g = Grid::Line(Grid1D::neumann(10.0, 200).unwrap());
        let e = SensorArray::<f64>::equidistant(g, 40, KernelSpec::gaussian(0.8), 1).unwrap_err();
        assert!(matches!(e, ConvError::SupportOutsideDomain { .. }));
    }

    #[test]
    fn invalid_neighborhood_rejected() {
        assert!(SensorArray::<f64>::equidistant(ks_grid(), 8, KernelSpec::gaussian(0.8), 2).is_err());
        assert!(SensorArray::<f64>::equidistant(ks_grid(), 8, KernelSpec::gaussian(0.8), 9).is_err());
    }

    #[test]
    fn actuation_basics() {
        let s = SensorArray::<f64>::equidistant(ks_grid(), 8, KernelSpec::gaussian(0.8), 1).unwrap();
        let a = ActuatorArray::on_sensors(&s, KernelSpec::gaussian(0.8), 1.0, 0).unwrap();
        let zero = a.actuate(&[0.0; 8]).unwrap();
        assert!(zero.field.values().iter().all(|&v| v == 0.0));

        let mut unit = [0.0; 8];
        unit[3] = 1.0;
        let one = a.actuate(&unit).unwrap();
        let grid = Grid1D::periodic(22.0, 64).unwrap();
        let c = a.centers()[3][0];
        for j in 0..64 {
            let d = wrap(grid.x(j) - c, 22.0);
            let expected = (-0.5 * (d / 0.8f64).powi(2)).exp();
            assert!((one.field.values()[j] - expected).abs() < 1e-12);
        }

        let over = a.actuate(&[2.0, -3.0, 0.5, 0.0, 0.0, 0.0, 0.0, f64::NAN]).unwrap();
        assert_eq!(over.clamped, 3);
        assert_eq!(over.applied[0], 1.0);
        assert_eq!(over.applied[1], -1.0);
        assert_eq!(over.applied[7], 0.0);
    }

    #[test]
    fn keller_segel_margin_leaves_36_actuators() {
        let g = Grid::Line(Grid1D::neumann(10.0, 200).unwrap());
        let s = SensorArray::<f64>::equidistant(g, 40, KernelSpec::indicator(0.25).unit_integral(), 3).unwrap();
        let a = ActuatorArray::on_sensors(&s, KernelSpec::indicator(0.25), 1.0, 2).unwrap();
        assert_eq!(a.count(), 36);
        assert_eq!(a.agents()[0], 2);
        assert_eq!(*a.agents().last().unwrap(), 37);
    }

    #[test]
    fn lattice_views_in_2d() {
        let g = Grid::Plane(Grid2D::new(2.0 * std::f64::consts::PI, 32).unwrap());
        let s = SensorArray::<f64>::equidistant(g, 8, KernelSpec::gaussian(0.3), 3).unwrap();
        assert_eq!(s.count(), 64);
        assert_eq!(s.view_size(), 9);
        assert_eq!(s.neighbors(0), vec![63, 56, 57, 7, 0, 1, 15, 8, 9]);
    }

    #[test]
    fn separable_paths_match_full_stencils() {
        let g2 = Grid2D::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let g = Grid::Plane(g2);
        for kernel in [KernelSpec::gaussian(0.3), KernelSpec::gaussian(0.3).unit_integral(), KernelSpec::indicator(0.7)] {
            let s = SensorArray::<f64>::equidistant(g, 4, kernel.clone(), 3).unwrap();
            let f = Field::from_fn_2d(g2, |x, y| (x + 0.3).sin() * (2.0 * y).cos() + 0.2 * x);
            let obs = s.sense(&f).unwrap();
            for i in 0..16 {
                let st = &s.stencils[i];
                let direct: f64 = st.nodes.iter().zip(&st.weighted).map(|(&j, &w)| w * f.values()[j]).sum();
                assert!((obs.data[i] - direct).abs() < 1e-12, "{kernel:?} sensor {i}");
            }
            let a = ActuatorArray::on_sensors(&s, kernel.clone(), 1.0, 0).unwrap();
            let u: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 * 0.2 - 0.4).collect();
            let fast = a.actuate(&u).unwrap().field;
            let mut slow = vec![0.0; 32 * 32];
            for (st, &ui) in a.stencils.iter().zip(&u) {
                for (&j, &v) in st.nodes.iter().zip(&st.values) {
                    slow[j] += ui * v;
                }
            }
            for (p, q) in fast.values().iter().zip(&slow) {
                assert!((p - q).abs() < 1e-12);
            }
            let spec = RewardSpec::new(0.3, 0.1);
            let w = windowed_costs(&f, &fast, &s, &spec).unwrap();
            for i in 0..16 {
                let st = s.window(i);
                let direct: f64 = st
                    .nodes
                    .iter()
                    .zip(&st.values)
                    .map(|(&j, &p)| {
                        let (e, c) = (p * (f.values()[j] - 0.1), p * fast.values()[j]);
                        g.weight(j) * (e * e + 0.3 * c * c)
                    })
                    .sum();
                assert!((w[i] - direct).abs() < 1e-12);
            }
        }
    }
}
