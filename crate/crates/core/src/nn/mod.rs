//! Small fully connected networks with hand-written backpropagation.

mod adam;

pub use adam::Adam;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("input of length {got}, network expects {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }
}

/// Feed-forward network. Parameters are stored flat, layer by layer, each layer
/// as a row-major `out x in` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    output_scale: T,
    params: Vec<T>,
}

/// Activations recorded during a batched forward pass.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    batch: usize,
    /// `layers[0]` is the input; `layers[l]` the post-activation of layer `l`.
    layers: Vec<Vec<T>>,
}

impl<T> Tape<T> {
    pub fn output(&self) -> &[T] {
        self.layers.last().unwrap()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Gradients from [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub params: Vec<T>,
    pub input: Vec<T>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<T: Real> Mlp<T> {
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation, output_scale: f64) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::Architecture(format!("layer sizes {sizes:?}")));
        }
        if !(output_scale > 0.0 && output_scale.is_finite()) {
            return Err(NnError::Architecture(format!("output scale {output_scale}")));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            output_scale: T::lit(output_scale),
            params: vec![T::zero(); param_count(sizes)],
        })
    }

    /// Uniform fan-in initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`;
    /// the last layer is drawn from `U(-final_range, final_range)`.
    pub fn random<R: rand::Rng>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        output_scale: f64,
        final_range: f64,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes, hidden, output, output_scale)?;
        let layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..layers {
            let (fan_in, out) = (sizes[l], sizes[l + 1]);
            let r = if l + 1 == layers { final_range } else { 1.0 / (fan_in as f64).sqrt() };
            for p in &mut net.params[off..off + fan_in * out + out] {
                *p = T::lit(rng.gen_range(-r..=r));
            }
            off += fan_in * out + out;
        }
        Ok(net)
    }

    pub fn from_params(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        output_scale: f64,
        params: Vec<T>,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes, hidden, output, output_scale)?;
        if params.len() != net.params.len() {
            return Err(NnError::Architecture(format!(
                "{} parameters for sizes {sizes:?}, expected {}",
                params.len(),
                net.params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn output_scale(&self) -> T {
        self.output_scale
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `(weights, bias)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[T], &[T]) {
        let off: usize = self.sizes[..l + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        (&self.params[off..off + i * o], &self.params[off + i * o..off + i * o + o])
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>, NnError> {
        Ok(self.forward_batch(x, 1)?.layers.pop().unwrap())
    }

    /// Forward pass over `batch` inputs stored row by row.
    pub fn forward_batch(&self, x: &[T], batch: usize) -> Result<Tape<T>, NnError> {
        if x.len() != batch * self.input_len() {
            return Err(NnError::InputShape { expected: batch * self.input_len(), got: x.len() });
        }
        let layers = self.sizes.len() - 1;
        let mut tape = Vec::with_capacity(layers + 1);
        tape.push(x.to_vec());
        let mut off = 0;
        for l in 0..layers {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + ni * no];
            let b = &self.params[off + ni * no..off + ni * no + no];
            off += ni * no + no;
            let act = if l + 1 == layers { self.output } else { self.hidden };
            let scale = if l + 1 == layers { self.output_scale } else { T::one() };
            let input = &tape[l];
            let mut out = vec![T::zero(); batch * no];
            for n in 0..batch {
                let xi = &input[n * ni..(n + 1) * ni];
                for o in 0..no {
                    let row = &w[o * ni..(o + 1) * ni];
                    let mut z = b[o];
                    for k in 0..ni {
                        z += row[k] * xi[k];
                    }
                    out[n * no + o] = scale * act.apply(z);
                }
            }
            tape.push(out);
        }
        Ok(Tape { batch, layers: tape })
    }

    /// Backpropagate `grad_out` (d loss / d output, one row per sample) through a recorded pass.
    pub fn backward(&self, tape: &Tape<T>, grad_out: &[T]) -> Gradients<T> {
        let layers = self.sizes.len() - 1;
        let batch = tape.batch;
        assert_eq!(grad_out.len(), batch * self.output_len(), "gradient shape");
        let mut gp = vec![T::zero(); self.params.len()];
        let mut delta = grad_out.to_vec();
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        for l in (0..layers).rev() {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let y = &tape.layers[l + 1];
            // d output / d pre-activation, written in terms of the output
            let (act, scale) = if l + 1 == layers { (self.output, self.output_scale) } else { (self.hidden, T::one()) };
            for (d, &yv) in delta.iter_mut().zip(y) {
                let deriv = match act {
                    Activation::Relu => {
                        if yv > T::zero() {
                            scale
                        } else {
                            T::zero()
                        }
                    }
                    Activation::Tanh => {
                        let t = yv / scale;
                        scale * (T::one() - t * t)
                    }
                    Activation::Identity => scale,
                };
                *d *= deriv;
            }
            let x = &tape.layers[l];
            let w = &self.params[off..off + ni * no];
            let mut prev = vec![T::zero(); batch * ni];
            {
                let (gw, gb) = gp[off..off + ni * no + no].split_at_mut(ni * no);
                for n in 0..batch {
                    let xi = &x[n * ni..(n + 1) * ni];
                    let di = &delta[n * no..(n + 1) * no];
                    let pi = &mut prev[n * ni..(n + 1) * ni];
                    for o in 0..no {
                        let d = di[o];
                        if d == T::zero() {
                            continue;
                        }
                        gb[o] += d;
                        let row = &w[o * ni..(o + 1) * ni];
                        let grow = &mut gw[o * ni..(o + 1) * ni];
                        for k in 0..ni {
                            grow[k] += d * xi[k];
                            pi[k] += d * row[k];
                        }
                    }
                }
            }
            delta = prev;
        }
        Gradients { params: gp, input: delta }
    }

    /// `self <- tau * online + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, online: &Mlp<T>, tau: T) {
        assert_eq!(self.sizes, online.sizes, "soft update between different architectures");
        if tau == T::one() {
            self.params.copy_from_slice(&online.params);
            return;
        }
        for (t, &o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (T::one() - tau) * *t;
        }
    }
}

/// Maximum relative error between the analytic parameter gradient of
/// `loss(forward(x))` and central finite differences with step `h`.
/// `loss` returns the loss value and its gradient with respect to the outputs.
pub fn grad_check(net: &Mlp<f64>, x: &[f64], batch: usize, h: f64, loss: impl Fn(&[f64]) -> (f64, Vec<f64>)) -> f64 {
    grad_check_params(net, x, batch, h, loss, 0..net.params.len())
}

/// [`grad_check`] restricted to the parameter indices in `which`, for networks too wide to probe fully.
pub fn grad_check_params(
    net: &Mlp<f64>,
    x: &[f64],
    batch: usize,
    h: f64,
    loss: impl Fn(&[f64]) -> (f64, Vec<f64>),
    which: impl IntoIterator<Item = usize>,
) -> f64 {
    let tape = net.forward_batch(x, batch).expect("input shape");
    let (_, g_out) = loss(tape.output());
    let analytic = net.backward(&tape, &g_out).params;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for k in which {
        let p = net.params[k];
        probe.params[k] = p + h;
        let up = loss(probe.forward_batch(x, batch).unwrap().output()).0;
        probe.params[k] = p - h;
        let down = loss(probe.forward_batch(x, batch).unwrap().output()).0;
        probe.params[k] = p;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[k].abs().max(numeric.abs());
        if scale > 1e-7 {
            worst = worst.max((analytic[k] - numeric).abs() / scale);
        }
    }
    worst
}

/// Random inputs in `[-1, 1]`, used by checks and tests.
pub fn random_inputs<R: rand::Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
