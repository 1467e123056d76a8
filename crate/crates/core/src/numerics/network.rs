use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{Conv2d, Dense, Layer, LayerSpec};
use super::{NumericError, Scalar, Tensor};
use crate::gridworld::Action;

/// Two 3×3 convolutions (8 filters stride 1, 16 filters stride 2), a
/// 128-unit hidden layer and one output per action.
pub const DQN_ARCHITECTURE: [LayerSpec; 8] = [
    LayerSpec::Conv2d {
        channels: 8,
        kernel: 3,
        stride: 1,
    },
    LayerSpec::Relu,
    LayerSpec::Conv2d {
        channels: 16,
        kernel: 3,
        stride: 2,
    },
    LayerSpec::Relu,
    LayerSpec::Flatten,
    LayerSpec::Dense { width: 128 },
    LayerSpec::Relu,
    LayerSpec::Dense {
        width: Action::COUNT,
    },
];

/// Feed-forward network over `(C, H, W)` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    input_shape: [usize; 3],
    specs: Vec<LayerSpec>,
    layers: Vec<Layer<T>>,
    /// Per-sample shape entering each layer, plus the output shape last.
    shapes: Vec<Vec<usize>>,
}

/// A network with one output per action.
pub type QNetwork<T = f32> = Network<T>;

/// One gradient tensor per parameter tensor, in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v = *v * factor;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.tensors
            .iter()
            .flat_map(|t| t.data().iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

struct Trace<T> {
    /// Output of each layer.
    outputs: Vec<Vec<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn new<R: Rng + ?Sized>(
        input_shape: [usize; 3],
        specs: &[LayerSpec],
        rng: &mut R,
    ) -> Result<Self, NumericError> {
        let mut shape: Vec<usize> = input_shape.to_vec();
        let mut shapes = vec![shape.clone()];
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let layer = match *spec {
                LayerSpec::Conv2d {
                    channels,
                    kernel,
                    stride,
                } => {
                    let in3: [usize; 3] = shape.as_slice().try_into().map_err(|_| {
                        NumericError::Architecture(format!(
                            "layer {i}: convolution needs a (C, H, W) input, got {shape:?}"
                        ))
                    })?;
                    let conv = Conv2d::new(in3, channels, kernel, stride, rng).ok_or_else(|| {
                        NumericError::Architecture(format!(
                            "layer {i}: {kernel}x{kernel}/{stride} convolution does not fit {shape:?}"
                        ))
                    })?;
                    shape = conv.out_shape.to_vec();
                    Layer::Conv2d(conv)
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Flatten => {
                    shape = vec![shape.iter().product()];
                    Layer::Flatten
                }
                LayerSpec::Dense { width } => {
                    if shape.len() != 1 {
                        return Err(NumericError::Architecture(format!(
                            "layer {i}: dense layer needs a flat input, got {shape:?}"
                        )));
                    }
                    if width == 0 {
                        return Err(NumericError::Architecture(format!(
                            "layer {i}: dense layer of width 0"
                        )));
                    }
                    let dense = Dense::new(shape[0], width, rng);
                    shape = vec![width];
                    Layer::Dense(dense)
                }
            };
            layers.push(layer);
            shapes.push(shape.clone());
        }
        if shape.len() != 1 {
            return Err(NumericError::Architecture(format!(
                "network must end in a flat output, got {shape:?}"
            )));
        }
        Ok(Network {
            input_shape,
            specs: specs.to_vec(),
            layers,
            shapes,
        })
    }

    /// The default Q-network for `(3·frame_stack, H, W)` observations.
    pub fn q_network<R: Rng + ?Sized>(input_shape: [usize; 3], rng: &mut R) -> Result<Self, NumericError> {
        Self::new(input_shape, &DQN_ARCHITECTURE, rng)
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn output_width(&self) -> usize {
        self.shapes.last().map_or(0, |s| s[0])
    }

    fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv2d(c) => out.extend([&c.weight, &c.bias]),
                Layer::Dense(d) => out.extend([&d.weight, &d.bias]),
                Layer::Relu | Layer::Flatten => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv2d(c) => out.extend([&mut c.weight, &mut c.bias]),
                Layer::Dense(d) => out.extend([&mut d.weight, &mut d.bias]),
                Layer::Relu | Layer::Flatten => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Overwrites every parameter with `other`'s. Architectures must match.
    pub fn copy_params_from(&mut self, other: &Network<T>) -> Result<(), NumericError> {
        self.check_same_shapes(&other.params())?;
        for (dst, src) in self.params_mut().into_iter().zip(other.params()) {
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    /// Replaces every parameter tensor's values.
    pub fn load_params(&mut self, values: &[Tensor<T>]) -> Result<(), NumericError> {
        self.check_same_shapes(&values.iter().collect::<Vec<_>>())?;
        for (dst, src) in self.params_mut().into_iter().zip(values) {
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    fn check_same_shapes(&self, other: &[&Tensor<T>]) -> Result<(), NumericError> {
        let mine = self.params();
        if mine.len() != other.len() {
            return Err(NumericError::ShapeMismatch {
                context: "parameter count",
                expected: vec![mine.len()],
                actual: vec![other.len()],
            });
        }
        for (a, b) in mine.iter().zip(other) {
            if a.shape() != b.shape() {
                return Err(NumericError::ShapeMismatch {
                    context: "parameter tensor",
                    expected: a.shape().to_vec(),
                    actual: b.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<usize, NumericError> {
        let shape = input.shape();
        if shape.len() != 4 || shape[1..] != self.input_shape {
            let mut expected = vec![shape.first().copied().unwrap_or(1)];
            expected.extend(self.input_shape);
            return Err(NumericError::ShapeMismatch {
                context: "network input",
                expected,
                actual: shape.to_vec(),
            });
        }
        Ok(shape[0])
    }

    fn run(&self, input: &[T], batch: usize) -> Trace<T> {
        let mut outputs: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let x: &[T] = if i == 0 { input } else { &outputs[i - 1] };
            let out_len = batch * self.shapes[i + 1].iter().product::<usize>();
            let y = match layer {
                Layer::Conv2d(c) => {
                    let mut y = vec![T::zero(); out_len];
                    c.forward(x, batch, &mut y);
                    y
                }
                Layer::Dense(d) => {
                    let mut y = vec![T::zero(); out_len];
                    d.forward(x, batch, &mut y);
                    y
                }
                Layer::Relu => x.iter().map(|&v| v.max(T::zero())).collect(),
                Layer::Flatten => x.to_vec(),
            };
            outputs.push(y);
        }
        Trace { outputs }
    }

    /// Batched forward pass: `(B, C, H, W)` → `(B, outputs)`.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>, NumericError> {
        let batch = self.check_input(input)?;
        let mut trace = self.run(input.data(), batch);
        let out = trace.outputs.pop().unwrap_or_else(|| input.data().to_vec());
        Ok(Tensor::new(vec![batch, self.output_width()], out)?)
    }

    /// Forward pass on one sample given as a flat slice.
    pub fn forward_one(&self, input: &[T]) -> Result<Vec<T>, NumericError> {
        if input.len() != self.input_len() {
            return Err(NumericError::ShapeMismatch {
                context: "network input",
                expected: vec![self.input_len()],
                actual: vec![input.len()],
            });
        }
        let mut trace = self.run(input, 1);
        Ok(trace.outputs.pop().unwrap_or_else(|| input.to_vec()))
    }

    fn backward(&self, input: &[T], batch: usize, trace: &Trace<T>, grad_out: Vec<T>) -> Gradients<T> {
        let mut grads: Vec<Tensor<T>> = self
            .params()
            .iter()
            .map(|p| Tensor::zeros(p.shape().to_vec()))
            .collect();
        let mut param_slot = grads.len();
        let mut grad = grad_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x: &[T] = if i == 0 { input } else { &trace.outputs[i - 1] };
            let need_dx = i > 0;
            match layer {
                Layer::Conv2d(c) => {
                    param_slot -= 2;
                    let (gw, gb) = grads[param_slot..].split_at_mut(1);
                    let mut dx = if need_dx { vec![T::zero(); x.len()] } else { Vec::new() };
                    c.backward(
                        x,
                        batch,
                        &grad,
                        gw[0].data_mut(),
                        gb[0].data_mut(),
                        need_dx.then_some(dx.as_mut_slice()),
                    );
                    grad = dx;
                }
                Layer::Dense(d) => {
                    param_slot -= 2;
                    let (gw, gb) = grads[param_slot..].split_at_mut(1);
                    let mut dx = if need_dx { vec![T::zero(); x.len()] } else { Vec::new() };
                    d.backward(
                        x,
                        batch,
                        &grad,
                        gw[0].data_mut(),
                        gb[0].data_mut(),
                        need_dx.then_some(dx.as_mut_slice()),
                    );
                    grad = dx;
                }
                Layer::Relu => {
                    let y = &trace.outputs[i];
                    for (g, &v) in grad.iter_mut().zip(y) {
                        if v <= T::zero() {
                            *g = T::zero();
                        }
                    }
                }
                Layer::Flatten => {}
            }
        }
        Gradients { tensors: grads }
    }

    /// Gradient of `Σ_b Σ_j upstream[b, j] · out[b, j]` with respect to every
    /// parameter, where `out` is the network output.
    pub fn vjp(&self, input: &Tensor<T>, upstream: &Tensor<T>) -> Result<Gradients<T>, NumericError> {
        let batch = self.check_input(input)?;
        if upstream.shape() != [batch, self.output_width()] {
            return Err(NumericError::ShapeMismatch {
                context: "upstream gradient",
                expected: vec![batch, self.output_width()],
                actual: upstream.shape().to_vec(),
            });
        }
        let trace = self.run(input.data(), batch);
        Ok(self.backward(input.data(), batch, &trace, upstream.data().to_vec()))
    }

    /// Mean squared TD error `1/B Σ_b (Q(x_b)[a_b] − y_b)²` and its gradient.
    pub fn td_loss_grad(
        &self,
        input: &Tensor<T>,
        actions: &[usize],
        targets: &[T],
    ) -> Result<(f64, Gradients<T>), NumericError> {
        self.td_loss_grad_residuals(input, actions, targets).map(|(l, g, _)| (l, g))
    }

    /// [`Self::td_loss_grad`] plus the per-sample residuals `Q(x_b)[a_b] − y_b`.
    pub fn td_loss_grad_residuals(
        &self,
        input: &Tensor<T>,
        actions: &[usize],
        targets: &[T],
    ) -> Result<(f64, Gradients<T>, Vec<f64>), NumericError> {
        let batch = self.check_input(input)?;
        let width = self.output_width();
        if actions.len() != batch || targets.len() != batch {
            return Err(NumericError::ShapeMismatch {
                context: "td batch",
                expected: vec![batch, batch],
                actual: vec![actions.len(), targets.len()],
            });
        }
        if let Some(&bad) = actions.iter().find(|&&a| a >= width) {
            return Err(NumericError::ShapeMismatch {
                context: "action index",
                expected: vec![width],
                actual: vec![bad],
            });
        }
        let trace = self.run(input.data(), batch);
        let q = trace.outputs.last().expect("network has layers");
        let scale = T::from_f64(2.0 / batch as f64);
        let mut grad_out = vec![T::zero(); batch * width];
        let mut loss = 0.0f64;
        let mut residuals = Vec::with_capacity(batch);
        for b in 0..batch {
            let residual = q[b * width + actions[b]] - targets[b];
            if !residual.is_finite() {
                return Err(NumericError::NonFinite { batch_index: b });
            }
            loss += residual.as_f64() * residual.as_f64();
            residuals.push(residual.as_f64());
            grad_out[b * width + actions[b]] = scale * residual;
        }
        let loss = loss / batch as f64;
        if !loss.is_finite() {
            return Err(NumericError::NonFinite { batch_index: 0 });
        }
        Ok((loss, self.backward(input.data(), batch, &trace, grad_out), residuals))
    }
}
