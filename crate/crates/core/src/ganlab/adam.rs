//! The Adam optimizer, hand-rolled over flat parameter slices.
//!
//! One [`AdamState`] accompanies each network and holds first/second moment
//! estimates for every parameter tensor plus a single step counter `t` that
//! advances once per [`adam_step_mlp`] call. The update is the standard
//! bias-corrected form:
//!
//! ```text
//! t ← t + 1
//! m ← β₁·m + (1−β₁)·g        v ← β₂·v + (1−β₂)·g²
//! m̂ = m / (1−β₁ᵗ)            v̂ = v / (1−β₂ᵗ)
//! θ ← θ − α·m̂ / (√v̂ + ε)
//! ```

use serde::{Deserialize, Serialize};

use super::net::{Mlp, MlpGrad};
use super::GanError;
use crate::scalar::Real;

/// Optimizer hyperparameters. Defaults are the usual GAN settings
/// (α=2·10⁻⁴, β₁=0.9, β₂=0.999, ε=10⁻⁸).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for a network's parameters.
///
/// Tensors are ordered layer by layer, weights before bias:
/// `[layer0.weights, layer0.bias, layer1.weights, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T = f64> {
    pub t: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    /// Fresh (all-zero, t=0) state shaped like `mlp`'s parameters.
    pub fn for_mlp(mlp: &Mlp<T>) -> Self {
        let shapes: Vec<Vec<T>> = mlp
            .layers
            .iter()
            .flat_map(|l| {
                [
                    vec![T::zero(); l.weights.len()],
                    vec![T::zero(); l.bias.len()],
                ]
            })
            .collect();
        Self {
            t: 0,
            m: shapes.clone(),
            v: shapes,
        }
    }
}

/// One Adam update on a single parameter tensor, using step counter `t`
/// (already incremented for this step).
pub fn adam_step<T: Real>(
    theta: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    hyper: &AdamHyper,
) -> Result<(), GanError> {
    if grad.len() != theta.len() || m.len() != theta.len() || v.len() != theta.len() {
        return Err(GanError::ShapeMismatch(format!(
            "tensor of {} parameters got gradient/moment lengths {}/{}/{}",
            theta.len(),
            grad.len(),
            m.len(),
            v.len()
        )));
    }
    let b1 = T::from_f64(hyper.beta1);
    let b2 = T::from_f64(hyper.beta2);
    let alpha = T::from_f64(hyper.learning_rate);
    let eps = T::from_f64(hyper.epsilon);
    let one = T::one();
    // 1 − βᵗ computed in f64 so large t keeps full precision before narrowing.
    let m_corr = T::from_f64(1.0 - hyper.beta1.powi(t as i32));
    let v_corr = T::from_f64(1.0 - hyper.beta2.powi(t as i32));
    for ((th, &g), (mi, vi)) in theta
        .iter_mut()
        .zip(grad)
        .zip(m.iter_mut().zip(v.iter_mut()))
    {
        *mi = b1 * *mi + (one - b1) * g;
        *vi = b2 * *vi + (one - b2) * g * g;
        let m_hat = *mi / m_corr;
        let v_hat = *vi / v_corr;
        *th -= alpha * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Applies one Adam step to every tensor of `mlp`, advancing `state.t` once.
pub fn adam_step_mlp<T: Real>(
    mlp: &mut Mlp<T>,
    grads: &MlpGrad<T>,
    state: &mut AdamState<T>,
    hyper: &AdamHyper,
) -> Result<(), GanError> {
    if grads.layers.len() != mlp.layers.len() || state.m.len() != 2 * mlp.layers.len() {
        return Err(GanError::ShapeMismatch(format!(
            "network of {} layers got {} gradient layers and {} moment tensors",
            mlp.layers.len(),
            grads.layers.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let t = state.t;
    for (i, (layer, grad)) in mlp.layers.iter_mut().zip(&grads.layers).enumerate() {
        let (m_w, m_b) = {
            let (a, b) = state.m.split_at_mut(2 * i + 1);
            (&mut a[2 * i], &mut b[0])
        };
        let (v_w, v_b) = {
            let (a, b) = state.v.split_at_mut(2 * i + 1);
            (&mut a[2 * i], &mut b[0])
        };
        adam_step(&mut layer.weights, &grad.weights, m_w, v_w, t, hyper)?;
        adam_step(&mut layer.bias, &grad.bias, m_b, v_b, t, hyper)?;
    }
    Ok(())
}
