//! Adam with bias correction, one moment pair per parameter tensor.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::net::{Grads, PolicyNet};
use super::tensor::Tensor;

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Adam<S: Scalar> {
    lr: S,
    beta1: S,
    beta2: S,
    epsilon: S,
    step: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(net: &PolicyNet<S>, lr: S) -> Self {
        Adam::with_betas(
            net,
            lr,
            S::from_f64_lossy(DEFAULT_BETA1),
            S::from_f64_lossy(DEFAULT_BETA2),
            S::from_f64_lossy(DEFAULT_EPSILON),
        )
    }

    pub fn with_betas(net: &PolicyNet<S>, lr: S, beta1: S, beta2: S, epsilon: S) -> Self {
        let m = net.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        let v = net.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Adam { lr, beta1, beta2, epsilon, step: 0, m, v }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update. Non-finite gradients abort before any
    /// parameter is touched.
    pub fn step(&mut self, net: &mut PolicyNet<S>, grads: &Grads<S>) -> Result<()> {
        for (name, tensor) in net.tensor_names().iter().zip(grads.tensors()) {
            if tensor.data().iter().any(|g| !g.is_finite()) {
                return Err(Error::training(format!("non-finite gradient in {name}")));
            }
        }
        self.step += 1;
        let one = S::one();
        let t = self.step as i32;
        let bc1 = one - self.beta1.powi(t);
        let bc2 = one - self.beta2.powi(t);
        for ((param, grad), (m, v)) in net
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let p = param.data_mut();
            let g = grad.data();
            let m = m.data_mut();
            let v = v.data_mut();
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] = p[i] - self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
