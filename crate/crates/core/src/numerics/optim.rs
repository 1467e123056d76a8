use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Gradients, Network, NumericError, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    /// Heavy-ball momentum: `v ← μ·v + g`, `p ← p − η·v`.
    Momentum(f64),
}

/// Per-agent SGD optimizer with its velocity state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    velocity: Vec<Vec<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self, NumericError> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(NumericError::Optimizer(format!(
                "learning rate {learning_rate} must be finite and non-negative"
            )));
        }
        if let OptimizerKind::Momentum(m) = kind {
            if !(0.0..1.0).contains(&m) {
                return Err(NumericError::Optimizer(format!("momentum {m} must lie in [0, 1)")));
            }
        }
        Ok(Optimizer {
            kind,
            learning_rate,
            velocity: Vec::new(),
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self, NumericError> {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    /// One update of `params` along `grads`.
    pub fn apply(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<(), NumericError> {
        if params.len() != grads.len() {
            return Err(NumericError::ShapeMismatch {
                context: "optimizer parameter count",
                expected: vec![params.len()],
                actual: vec![grads.len()],
            });
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(NumericError::ShapeMismatch {
                    context: "optimizer gradient",
                    expected: p.shape().to_vec(),
                    actual: g.shape().to_vec(),
                });
            }
        }
        let lr = T::from_f64(self.learning_rate);
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (w, &d) in p.data_mut().iter_mut().zip(g.data()) {
                        *w = *w - lr * d;
                    }
                }
            }
            OptimizerKind::Momentum(mu) => {
                if self.velocity.len() != grads.len()
                    || self.velocity.iter().zip(grads).any(|(v, g)| v.len() != g.len())
                {
                    self.velocity = grads.iter().map(|g| vec![T::zero(); g.len()]).collect();
                }
                let mu = T::from_f64(mu);
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
                    for ((w, &d), vel) in p.data_mut().iter_mut().zip(g.data()).zip(v.iter_mut()) {
                        *vel = mu * *vel + d;
                        *w = *w - lr * *vel;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<(), NumericError> {
        self.apply(&mut net.params_mut(), &grads.tensors)
    }
}
