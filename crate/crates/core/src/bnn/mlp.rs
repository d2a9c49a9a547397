//! Fully connected networks over a flat parameter vector.
//!
//! Layout: for every layer, the weight matrix (`fan_out × fan_in`, row-major)
//! followed by the bias vector. Hidden layers apply the activation and then
//! the optional dropout mask; the output layer is linear.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{dot, sqrt, tanh};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(z),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    layer_widths: Vec<usize>,
    activation: Activation,
    dropout_rate: f64,
}

impl MlpSpec {
    /// `layer_widths` lists input, hidden…, output widths. Zero hidden layers
    /// (a single affine map) is allowed here; Bayesian surrogates require at
    /// least one, see [`MlpSpec::require_hidden`].
    pub fn new(layer_widths: Vec<usize>, activation: Activation, dropout_rate: f64) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(invalid("an MLP needs at least input and output widths"));
        }
        if layer_widths.contains(&0) {
            return Err(invalid("layer widths must be >= 1"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(invalid("dropout rate must lie in [0, 1)"));
        }
        Ok(Self {
            layer_widths,
            activation,
            dropout_rate,
        })
    }

    /// Input → `hidden` → 1 regression network.
    pub fn regression(input: usize, hidden: &[usize], activation: Activation, dropout_rate: f64) -> Result<Self> {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let spec = Self::new(widths, activation, dropout_rate)?;
        spec.require_hidden()?;
        Ok(spec)
    }

    pub fn require_hidden(&self) -> Result<()> {
        if self.n_hidden() == 0 {
            return Err(invalid("Bayesian MLP surrogates need at least one hidden layer"));
        }
        Ok(())
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn with_dropout(mut self, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(invalid("dropout rate must lie in [0, 1)"));
        }
        self.dropout_rate = rate;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn n_hidden(&self) -> usize {
        self.layer_widths.len() - 2
    }

    /// Total parameter count `Σ (fan_in + 1)·fan_out`.
    pub fn n_params(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    /// Slices of every layer inside the flat vector.
    pub fn layout(&self) -> Vec<LayerSlice> {
        let mut offset = 0;
        self.layer_widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let s = LayerSlice {
                    fan_in,
                    fan_out,
                    weights: offset,
                    bias: offset + fan_in * fan_out,
                };
                offset += (fan_in + 1) * fan_out;
                s
            })
            .collect()
    }
}

/// Position of one layer's weights and biases in a [`ParamVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlice {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(spec: &MlpSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n_params() {
            return Err(Error::ShapeMismatch {
                expected: spec.n_params(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        Ok(Self { values })
    }

    pub fn zeros(spec: &MlpSpec) -> Self {
        Self {
            values: vec![0.0; spec.n_params()],
        }
    }

    /// Draw from `N(0, (weight_std_base/√fan_in)²)` for weights and
    /// `N(0, bias_std²)` for biases.
    pub fn sample_prior(spec: &MlpSpec, weight_std_base: f64, bias_std: f64, rng: &mut RngStream) -> Self {
        let mut values = vec![0.0; spec.n_params()];
        for layer in spec.layout() {
            let ws = weight_std_base / sqrt(layer.fan_in as f64);
            for v in &mut values[layer.weights..layer.bias] {
                *v = ws * rng.normal();
            }
            for v in &mut values[layer.bias..layer.bias + layer.fan_out] {
                *v = bias_std * rng.normal();
            }
        }
        Self { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-hidden-unit keep flags for one stochastic forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    rate: f64,
    keep: Vec<Vec<bool>>,
}

impl DropoutMask {
    pub fn sample(spec: &MlpSpec, rng: &mut RngStream) -> Self {
        let rate = spec.dropout_rate;
        let keep = spec.layer_widths[1..spec.layer_widths.len() - 1]
            .iter()
            .map(|&w| (0..w).map(|_| rng.uniform() >= rate).collect())
            .collect();
        Self { rate, keep }
    }

    pub fn all_retained(spec: &MlpSpec) -> Self {
        let keep = spec.layer_widths[1..spec.layer_widths.len() - 1]
            .iter()
            .map(|&w| vec![true; w])
            .collect();
        Self {
            rate: spec.dropout_rate,
            keep,
        }
    }

    #[inline]
    fn scale(&self, layer: usize, unit: usize) -> f64 {
        if self.keep[layer][unit] {
            1.0 / (1.0 - self.rate)
        } else {
            0.0
        }
    }
}

/// Intermediate activations of one forward pass, reused by [`backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    /// Activation outputs of hidden layers before masking.
    hidden: Vec<Vec<f64>>,
    /// Layer outputs after masking (hidden) or the linear output.
    outputs: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map_or(&[], Vec::as_slice)
    }
}

fn check_shapes(spec: &MlpSpec, params: &[f64], x: &[f64], mask: Option<&DropoutMask>) -> Result<()> {
    if params.len() != spec.n_params() {
        return Err(Error::ShapeMismatch {
            expected: spec.n_params(),
            actual: params.len(),
        });
    }
    if x.len() != spec.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: spec.input_dim(),
            actual: x.len(),
        });
    }
    if let Some(m) = mask {
        if m.keep.len() != spec.n_hidden()
            || m.keep.iter().zip(&spec.layer_widths[1..]).any(|(k, &w)| k.len() != w)
        {
            return Err(invalid("dropout mask does not match the network"));
        }
    }
    Ok(())
}

/// Forward pass recording activations into `tape`.
pub fn forward_tape(
    spec: &MlpSpec,
    params: &[f64],
    x: &[f64],
    mask: Option<&DropoutMask>,
    tape: &mut Tape,
) -> Result<()> {
    check_shapes(spec, params, x, mask)?;
    let n_layers = spec.n_layers();
    tape.hidden.resize(spec.n_hidden(), Vec::new());
    tape.outputs.resize(n_layers, Vec::new());
    for (l, layer) in spec.layout().into_iter().enumerate() {
        let mut z = vec![0.0; layer.fan_out];
        {
            let input: &[f64] = if l == 0 { x } else { &tape.outputs[l - 1] };
            for (k, zk) in z.iter_mut().enumerate() {
                let row = &params[layer.weights + k * layer.fan_in..layer.weights + (k + 1) * layer.fan_in];
                *zk = dot(row, input) + params[layer.bias + k];
            }
        }
        if l + 1 < n_layers {
            for v in &mut z {
                *v = spec.activation.apply(*v);
            }
            let mut out = z.clone();
            if let Some(m) = mask {
                for (k, o) in out.iter_mut().enumerate() {
                    *o *= m.scale(l, k);
                }
            }
            tape.hidden[l] = z;
            tape.outputs[l] = out;
        } else {
            tape.outputs[l] = z;
        }
    }
    Ok(())
}

/// Network output for one input.
pub fn mlp_forward(spec: &MlpSpec, params: &ParamVector, x: &[f64], mask: Option<&DropoutMask>) -> Result<Vec<f64>> {
    let mut tape = Tape::default();
    forward_tape(spec, params.as_slice(), x, mask, &mut tape)?;
    Ok(tape.outputs.pop().unwrap_or_default())
}

/// Reverse pass: accumulates `∂(grad_out·output)/∂params` into `grad`.
/// `tape` must come from [`forward_tape`] with the same arguments.
pub fn backward(
    spec: &MlpSpec,
    params: &[f64],
    x: &[f64],
    mask: Option<&DropoutMask>,
    tape: &Tape,
    grad_out: &[f64],
    grad: &mut [f64],
) {
    let layout = spec.layout();
    let mut delta = grad_out.to_vec();
    for l in (0..layout.len()).rev() {
        let layer = layout[l];
        let input: &[f64] = if l == 0 { x } else { &tape.outputs[l - 1] };
        for (k, &dk) in delta.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            let gw = &mut grad[layer.weights + k * layer.fan_in..layer.weights + (k + 1) * layer.fan_in];
            for (g, &xi) in gw.iter_mut().zip(input) {
                *g += dk * xi;
            }
            grad[layer.bias + k] += dk;
        }
        if l == 0 {
            break;
        }
        // Propagate to the previous hidden layer.
        let prev = l - 1;
        let mut next = vec![0.0; layer.fan_in];
        for (k, &dk) in delta.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            let row = &params[layer.weights + k * layer.fan_in..layer.weights + (k + 1) * layer.fan_in];
            for (n, &w) in next.iter_mut().zip(row) {
                *n += dk * w;
            }
        }
        for (j, n) in next.iter_mut().enumerate() {
            let s = mask.map_or(1.0, |m| m.scale(prev, j));
            *n *= s * spec.activation.derivative_from_output(tape.hidden[prev][j]);
        }
        delta = next;
    }
}
