//! Fully connected regressor with a single tanh output unit.
//!
//! Gradients are computed by hand-written reverse-mode differentiation over the
//! fixed layer stack; both parameter and input gradients come out of the same
//! backward sweep.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out_dim × in_dim`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    /// Inverted dropout on this layer's output, active in [`Mode::Train`] only.
    pub dropout_ratio: f64,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Where hidden-layer dropout is inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutPlacement {
    AllHidden,
    LastHidden,
    Off,
}

/// Layer widths and regularisation of a model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub dropout_ratio: f64,
    pub dropout_placement: DropoutPlacement,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100, 100],
            dropout_ratio: 0.25,
            dropout_placement: DropoutPlacement::LastHidden,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::config("architecture.hidden", "layer widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_ratio) {
            return Err(Error::config("architecture.dropout_ratio", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Builds a model with weights drawn uniformly from `±1/√fan_in` and zero bias.
    pub fn build(&self, input_dim: usize, seed: u64) -> Result<MlpModel> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input_dim must be at least 1".into()));
        }
        self.validate()?;
        let mut rng = rng::stream(seed);
        let mut layers = Vec::with_capacity(self.hidden.len() + 1);
        let mut fan_in = input_dim;
        let last = self.hidden.len().saturating_sub(1);
        for (i, &width) in self.hidden.iter().enumerate() {
            let dropout_ratio = match self.dropout_placement {
                DropoutPlacement::AllHidden => self.dropout_ratio,
                DropoutPlacement::LastHidden if i == last => self.dropout_ratio,
                _ => 0.0,
            };
            layers.push(uniform_layer(&mut rng, fan_in, width, Activation::Relu, dropout_ratio));
            fan_in = width;
        }
        layers.push(uniform_layer(&mut rng, fan_in, 1, Activation::Tanh, 0.0));
        MlpModel::from_layers(layers, seed)
    }
}

fn uniform_layer<R: Rng>(
    rng: &mut R,
    fan_in: usize,
    fan_out: usize,
    activation: Activation,
    dropout_ratio: f64,
) -> DenseLayer {
    let limit = 1.0 / (fan_in as f64).sqrt();
    let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..=limit));
    DenseLayer {
        weights,
        bias: vec![0.0; fan_out],
        activation,
        dropout_ratio,
    }
}

/// Three 100-wide ReLU layers followed by a single tanh unit.
pub fn init_model(input_dim: usize, seed: u64) -> Result<MlpModel> {
    Architecture::default().build(input_dim, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    input_dim: usize,
    rng_seed: u64,
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[i]` is what layer `i` consumed; `inputs[0]` is the sample.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    /// Dropout multipliers (0 or `1/(1-p)`), when dropout fired.
    masks: Vec<Option<Vec<f64>>>,
}

impl Trace {
    pub fn output(&self) -> f64 {
        self.inputs_after_last()[0]
    }

    fn inputs_after_last(&self) -> &[f64] {
        let last = self.post.len() - 1;
        &self.post[last]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients of the loss with respect to every parameter and to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub param_grads: Vec<LayerGrad>,
    pub input_grad: Vec<f64>,
}

impl GradientBundle {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            param_grads: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
            input_grad: vec![0.0; model.input_dim],
        }
    }

    pub fn clear(&mut self) {
        for g in &mut self.param_grads {
            g.weights.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
            g.bias.iter_mut().for_each(|v| *v = 0.0);
        }
        self.input_grad.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.input_grad.iter().all(|v| v.is_finite())
            && self
                .param_grads
                .iter()
                .all(|g| g.weights.is_finite() && g.bias.iter().all(|v| v.is_finite()))
    }
}

impl MlpModel {
    /// Assembles a model from explicit layers, checking that dimensions chain
    /// and the head is a single tanh unit.
    pub fn from_layers(layers: Vec<DenseLayer>, rng_seed: u64) -> Result<Self> {
        let first = layers.first().ok_or(Error::Empty("model layers"))?;
        let input_dim = first.in_dim();
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input_dim must be at least 1".into()));
        }
        for pair in layers.windows(2) {
            Error::check_dim(pair[0].out_dim(), pair[1].in_dim())?;
        }
        for l in &layers {
            Error::check_dim(l.out_dim(), l.bias.len())?;
            if !(0.0..1.0).contains(&l.dropout_ratio) {
                return Err(Error::InvalidArgument(format!(
                    "dropout ratio {} outside [0, 1)",
                    l.dropout_ratio
                )));
            }
        }
        let head = layers.last().expect("nonempty");
        if head.out_dim() != 1 || head.activation != Activation::Tanh {
            return Err(Error::InvalidArgument(
                "output layer must be a single tanh unit".into(),
            ));
        }
        Ok(Self {
            layers,
            input_dim,
            rng_seed,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|v| v.is_finite()))
    }

    /// Deterministic inference-mode prediction.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.trace_infer(x)?.output())
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<f64> {
        Ok(self.trace(x, mode, rng)?.output())
    }

    pub fn trace_infer(&self, x: &[f64]) -> Result<Trace> {
        self.trace_impl::<rand_chacha::ChaCha8Rng>(x, None)
    }

    pub fn trace<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<Trace> {
        match mode {
            Mode::Infer => self.trace_impl::<R>(x, None),
            Mode::Train => self.trace_impl(x, Some(rng)),
        }
    }

    fn trace_impl<R: Rng + ?Sized>(&self, x: &[f64], mut rng: Option<&mut R>) -> Result<Trace> {
        Error::check_dim(self.input_dim, x.len())?;
        let n = self.layers.len();
        let mut trace = Trace {
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
        };
        let mut current = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.out_dim()];
            layer.weights.affine_into(&current, &layer.bias, &mut z);
            let mut a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            let mask = match rng.as_deref_mut() {
                Some(rng) if layer.dropout_ratio > 0.0 => {
                    let keep = 1.0 - layer.dropout_ratio;
                    let scale = 1.0 / keep;
                    let m: Vec<f64> = (0..a.len())
                        .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
                        .collect();
                    a.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                    Some(m)
                }
                _ => None,
            };
            trace.inputs.push(std::mem::replace(&mut current, a.clone()));
            trace.pre.push(z);
            trace.post.push(a);
            trace.masks.push(mask);
        }
        Ok(trace)
    }

    /// Adds `d_out · ∂output/∂(params, input)` to `grads`.
    pub fn backprop_into(&self, trace: &Trace, d_out: f64, grads: &mut GradientBundle) {
        let mut delta = vec![d_out];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            // delta currently holds ∂L/∂(post-dropout output of layer i).
            if let Some(mask) = &trace.masks[i] {
                delta.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
            }
            for ((d, &z), &a) in delta.iter_mut().zip(&trace.pre[i]).zip(&trace.post[i]) {
                // post includes the mask; recover the raw activation for tanh.
                let raw = if layer.activation == Activation::Tanh { z.tanh() } else { a };
                *d *= layer.activation.derivative(z, raw);
            }
            let g = &mut grads.param_grads[i];
            g.weights.add_outer(1.0, &delta, &trace.inputs[i]);
            g.bias.iter_mut().zip(&delta).for_each(|(b, d)| *b += d);
            let mut prev = vec![0.0; layer.in_dim()];
            layer.weights.transpose_matvec_into(&delta, &mut prev);
            delta = prev;
        }
        grads
            .input_grad
            .iter_mut()
            .zip(&delta)
            .for_each(|(g, d)| *g += d);
    }
}

/// Inference-mode gradients of `(forward(x) − y)²`.
pub fn backward(model: &MlpModel, x: &[f64], y: f64) -> Result<GradientBundle> {
    let trace = model.trace_infer(x)?;
    let mut grads = GradientBundle::zeros_like(model);
    model.backprop_into(&trace, 2.0 * (trace.output() - y), &mut grads);
    Ok(grads)
}

/// Inference-mode input gradient of `(forward(x) − y)²`, without parameter
/// gradients.
pub fn input_gradient(model: &MlpModel, x: &[f64], y: f64) -> Result<Vec<f64>> {
    let trace = model.trace_infer(x)?;
    let mut delta = vec![2.0 * (trace.output() - y)];
    for (i, layer) in model.layers.iter().enumerate().rev() {
        for (d, &z) in delta.iter_mut().zip(&trace.pre[i]) {
            *d *= layer.activation.derivative(z, z.tanh());
        }
        let mut prev = vec![0.0; layer.in_dim()];
        layer.weights.transpose_matvec_into(&delta, &mut prev);
        delta = prev;
    }
    Ok(delta)
}

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss input"));
    }
    Error::check_dim(pred.len(), target.len())?;
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// Inference-mode predictions for every row of `features`.
pub fn predict_rows(model: &MlpModel, features: &Matrix) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    Error::check_dim(model.input_dim(), features.cols())?;
    (0..features.rows())
        .into_par_iter()
        .map(|r| model.predict(features.row(r)))
        .collect()
}
