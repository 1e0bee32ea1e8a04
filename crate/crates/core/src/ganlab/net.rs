//! Fully-connected networks with hand-written backpropagation.
//!
//! Both GAN networks are [`Mlp`]s: affine layers with leaky-ReLU hidden
//! activations and a network-specific output activation (tanh for the
//! generator, sigmoid for the discriminator). Forward passes can record a
//! [`Trace`] — the per-layer inputs and pre-activations — from which
//! [`Mlp::backward`] produces exact analytic gradients for every weight and
//! bias plus the gradient with respect to the input, so networks compose.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GanError;
use crate::scalar::Real;

/// Negative-side slope of the leaky-ReLU hidden activation.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Sigmoid outputs are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` so the
/// discriminator's probability is strictly inside (0,1) even when the logit
/// saturates, matching the clamp the BCE loss applies before its logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Standard deviation of the weight initialization draw.
const INIT_STDDEV: f64 = 0.02;

/// Per-neuron activation functions used by [`Mlp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    /// `max(z, 0.2·z)` — the hidden-layer activation.
    LeakyRelu,
    /// `tanh(z)` ∈ [−1,1] — the generator's output.
    Tanh,
    /// `1/(1+e^{−z})` clamped to `[1e-7, 1−1e-7]` — the discriminator's output.
    Sigmoid,
}

impl Activation {
    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::LeakyRelu => {
                if z >= T::zero() {
                    z
                } else {
                    T::from_f64(LEAKY_SLOPE) * z
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => {
                let p = T::one() / (T::one() + (-z).exp());
                let lo = T::from_f64(PROB_CLAMP);
                p.max(lo).min(T::one() - lo)
            }
        }
    }

    /// Derivative dy/dz, reconstructed from the pre-activation `z` and the
    /// activated output `y` (whichever is cheaper per variant).
    fn derivative<T: Real>(self, z: T, y: T) -> T {
        match self {
            Activation::LeakyRelu => {
                if z >= T::zero() {
                    T::one()
                } else {
                    T::from_f64(LEAKY_SLOPE)
                }
            }
            Activation::Tanh => T::one() - y * y,
            // Uses the (clamped) output, so a saturated unit's gradient is
            // consistently near-zero rather than exactly the raw slope.
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

/// One affine layer: `out = W·x + b` with `W` stored row-major
/// (`weights[o * in_dim + i]` is the weight from input `i` to output `o`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T = f64> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    fn affine(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.bias[o];
            for (w, xi) in row.iter().zip(x) {
                acc += *w * *xi;
            }
            out.push(acc);
        }
    }
}

/// Gradients for one layer, same shapes as [`Dense`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad<T = f64> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Gradients for a whole network, layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad<T = f64> {
    pub layers: Vec<DenseGrad<T>>,
}

impl<T: Real> MlpGrad<T> {
    /// All-zero gradients shaped like `mlp`'s parameters.
    pub fn zeros_like(mlp: &Mlp<T>) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| DenseGrad {
                    weights: vec![T::zero(); l.weights.len()],
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }

    /// Accumulates `other` into `self` (gradients over a batch sum).
    pub fn accumulate(&mut self, other: &MlpGrad<T>) {
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            for (a, b) in mine.weights.iter_mut().zip(&theirs.weights) {
                *a += *b;
            }
            for (a, b) in mine.bias.iter_mut().zip(&theirs.bias) {
                *a += *b;
            }
        }
    }
}

/// Everything [`Mlp::backward`] needs from a forward pass: the input each
/// layer saw, each layer's pre-activation, and the final activated output.
#[derive(Debug, Clone)]
pub struct Trace<T = f64> {
    layer_inputs: Vec<Vec<T>>,
    pre_activations: Vec<Vec<T>>,
    pub output: Vec<T>,
}

/// A fully-connected network: leaky-ReLU hidden layers, one configurable
/// output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T = f64> {
    pub layers: Vec<Dense<T>>,
    pub output_activation: Activation,
}

impl<T: Real> Mlp<T> {
    /// A network with the given layer dimensions (`dims[0]` inputs through
    /// `dims.last()` outputs), weights drawn from N(0, 0.02) in layer order
    /// and zero biases.
    ///
    /// # Panics
    /// If `dims` has fewer than two entries or contains a zero.
    pub fn new<R: Rng>(dims: &[usize], output_activation: Activation, rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "a network needs input and output dims");
        assert!(dims.iter().all(|&d| d >= 1), "zero-width layer");
        let normal = Normal::new(0.0, INIT_STDDEV).expect("valid stddev");
        let layers = dims
            .windows(2)
            .map(|w| {
                let (in_dim, out_dim) = (w[0], w[1]);
                Dense {
                    in_dim,
                    out_dim,
                    weights: (0..in_dim * out_dim)
                        .map(|_| T::from_f64(normal.sample(rng)))
                        .collect(),
                    bias: vec![T::zero(); out_dim],
                }
            })
            .collect();
        Self {
            layers,
            output_activation,
        }
    }

    /// An all-zero network of the given shape (useful for tests: the zero
    /// generator outputs `tanh(0) = 0`, the zero discriminator `σ(0) = 0.5`).
    pub fn zeros(dims: &[usize], output_activation: Activation) -> Self {
        assert!(dims.len() >= 2, "a network needs input and output dims");
        let layers = dims
            .windows(2)
            .map(|w| Dense {
                in_dim: w[0],
                out_dim: w[1],
                weights: vec![T::zero(); w[0] * w[1]],
                bias: vec![T::zero(); w[1]],
            })
            .collect();
        Self {
            layers,
            output_activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.in_dim).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim).unwrap_or(0)
    }

    /// The layer widths, `[input, hidden…, output]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    /// Total number of scalar parameters (weights + biases).
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn activation_of_layer(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            Activation::LeakyRelu
        }
    }

    fn check_input(&self, x: &[T]) -> Result<(), GanError> {
        if x.len() != self.input_dim() {
            return Err(GanError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Runs the network, returning only the output vector.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>, GanError> {
        self.check_input(x)?;
        let mut current = x.to_vec();
        let mut pre = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&current, &mut pre);
            let act = self.activation_of_layer(i);
            current.clear();
            current.extend(pre.iter().map(|&z| act.apply(z)));
        }
        Ok(current)
    }

    /// Runs the network and records the activations backprop needs.
    pub fn forward_trace(&self, x: &[T]) -> Result<Trace<T>, GanError> {
        self.check_input(x)?;
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut pre = Vec::with_capacity(layer.out_dim);
            layer.affine(&current, &mut pre);
            let act = self.activation_of_layer(i);
            let next: Vec<T> = pre.iter().map(|&z| act.apply(z)).collect();
            layer_inputs.push(std::mem::replace(&mut current, next));
            pre_activations.push(pre);
        }
        Ok(Trace {
            layer_inputs,
            pre_activations,
            output: current,
        })
    }

    /// Backpropagates `upstream` (dL/d output) through the traced pass.
    ///
    /// Returns the gradient of every parameter and the gradient with respect
    /// to the network input — the latter lets a caller chain through composed
    /// networks (e.g. d loss / d G(z) from the discriminator).
    ///
    /// # Panics
    /// If `upstream` or the trace does not match this network's shape.
    pub fn backward(&self, trace: &Trace<T>, upstream: &[T]) -> (MlpGrad<T>, Vec<T>) {
        assert_eq!(
            upstream.len(),
            self.output_dim(),
            "upstream gradient has wrong length"
        );
        assert_eq!(
            trace.layer_inputs.len(),
            self.layers.len(),
            "trace does not match network depth"
        );
        let mut grad = MlpGrad::zeros_like(self);
        let mut upstream = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = self.activation_of_layer(i);
            let pre = &trace.pre_activations[i];
            let input = &trace.layer_inputs[i];
            // Activated outputs of this layer: the next layer's input, or the
            // final output for the last layer.
            let post: &[T] = if i + 1 == self.layers.len() {
                &trace.output
            } else {
                &trace.layer_inputs[i + 1]
            };

            // delta = dL/d pre-activation.
            let delta: Vec<T> = upstream
                .iter()
                .zip(pre.iter().zip(post))
                .map(|(&u, (&z, &y))| u * act.derivative(z, y))
                .collect();

            let g = &mut grad.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, &xi) in row.iter_mut().zip(input) {
                    *slot = d * xi;
                }
                g.bias[o] = d;
            }

            // dL/d input of this layer = Wᵀ · delta.
            let mut next_upstream = vec![T::zero(); layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, &w) in next_upstream.iter_mut().zip(row) {
                    *slot += w * d;
                }
            }
            upstream = next_upstream;
        }
        (grad, upstream)
    }
}
