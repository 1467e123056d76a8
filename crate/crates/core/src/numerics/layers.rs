use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{matmul, Scalar, Tensor};

/// Layer description used to build a [`super::Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2d {
        channels: usize,
        kernel: usize,
        stride: usize,
    },
    Relu,
    Flatten,
    Dense {
        width: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    Relu,
    Flatten,
    Dense(Dense<T>),
}

fn he_uniform<T: Scalar, R: Rng + ?Sized>(len: usize, fan_in: usize, rng: &mut R) -> Vec<T> {
    let limit = num_traits::Float::sqrt(6.0 / fan_in as f64);
    (0..len)
        .map(|_| T::from_f64(rng.random_range(-limit..limit)))
        .collect()
}

/// Valid (unpadded) 2-D convolution. Weight layout `(out, in, k, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    pub in_shape: [usize; 3],
    pub out_shape: [usize; 3],
    pub kernel: usize,
    pub stride: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn output_shape(in_shape: [usize; 3], channels: usize, kernel: usize, stride: usize) -> Option<[usize; 3]> {
        let [_, h, w] = in_shape;
        if kernel == 0 || stride == 0 || h < kernel || w < kernel || channels == 0 {
            return None;
        }
        Some([channels, (h - kernel) / stride + 1, (w - kernel) / stride + 1])
    }

    pub fn new<R: Rng + ?Sized>(
        in_shape: [usize; 3],
        channels: usize,
        kernel: usize,
        stride: usize,
        rng: &mut R,
    ) -> Option<Self> {
        let out_shape = Self::output_shape(in_shape, channels, kernel, stride)?;
        let fan_in = in_shape[0] * kernel * kernel;
        let weight = Tensor {
            shape: vec![channels, in_shape[0], kernel, kernel],
            data: he_uniform(channels * fan_in, fan_in, rng),
        };
        Some(Conv2d {
            in_shape,
            out_shape,
            kernel,
            stride,
            weight,
            bias: Tensor::zeros(vec![channels]),
        })
    }

    fn patch_len(&self) -> usize {
        self.in_shape[0] * self.kernel * self.kernel
    }

    fn positions(&self) -> usize {
        self.out_shape[1] * self.out_shape[2]
    }

    /// Unrolls one sample into a `(C·k·k) × (OH·OW)` column matrix.
    fn im2col(&self, x: &[T], cols: &mut [T]) {
        let [c_in, h, w] = self.in_shape;
        let [_, oh, ow] = self.out_shape;
        let (k, s) = (self.kernel, self.stride);
        let p = oh * ow;
        for c in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let row = ((c * k + ky) * k + kx) * p;
                    for oy in 0..oh {
                        let src = c * h * w + (oy * s + ky) * w + kx;
                        let dst = row + oy * ow;
                        for ox in 0..ow {
                            cols[dst + ox] = x[src + ox * s];
                        }
                    }
                }
            }
        }
    }

    fn col2im_add(&self, cols: &[T], dx: &mut [T]) {
        let [c_in, h, w] = self.in_shape;
        let [_, oh, ow] = self.out_shape;
        let (k, s) = (self.kernel, self.stride);
        let p = oh * ow;
        for c in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let row = ((c * k + ky) * k + kx) * p;
                    for oy in 0..oh {
                        let dst = c * h * w + (oy * s + ky) * w + kx;
                        let src = row + oy * ow;
                        for ox in 0..ow {
                            dx[dst + ox * s] = dx[dst + ox * s] + cols[src + ox];
                        }
                    }
                }
            }
        }
    }

    /// Calls `f(weight_index, output_index, value)` for every product term
    /// touching a non-zero input element.
    fn for_each_sparse_term(&self, x: &[T], mut f: impl FnMut(usize, usize, T)) {
        let [c_in, h, w] = self.in_shape;
        let [c_out, oh, ow] = self.out_shape;
        let (k, s) = (self.kernel, self.stride);
        let p = oh * ow;
        let wstride = c_in * k * k;
        for (idx, &v) in x.iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            let c = idx / (h * w);
            let iy = (idx / w) % h;
            let ix = idx % w;
            for ky in 0..k.min(iy + 1) {
                let ty = iy - ky;
                if ty % s != 0 || ty / s >= oh {
                    continue;
                }
                for kx in 0..k.min(ix + 1) {
                    let tx = ix - kx;
                    if tx % s != 0 || tx / s >= ow {
                        continue;
                    }
                    let out = (ty / s) * ow + tx / s;
                    let wi = (c * k + ky) * k + kx;
                    for oc in 0..c_out {
                        f(oc * wstride + wi, oc * p + out, v);
                    }
                }
            }
        }
    }

    /// Binary plane inputs are mostly zeros; scatter their contributions
    /// directly instead of unrolling.
    fn is_sparse(x: &[T]) -> bool {
        x.iter().filter(|v| **v != T::zero()).count() * 4 < x.len()
    }

    pub(crate) fn forward(&self, x: &[T], batch: usize, y: &mut [T]) {
        let in_len: usize = self.in_shape.iter().product();
        let out_len: usize = self.out_shape.iter().product();
        let (c_out, p, q) = (self.out_shape[0], self.positions(), self.patch_len());
        let mut cols = Vec::new();
        for b in 0..batch {
            let xb = &x[b * in_len..(b + 1) * in_len];
            let yb = &mut y[b * out_len..(b + 1) * out_len];
            for oc in 0..c_out {
                yb[oc * p..(oc + 1) * p].fill(self.bias.data[oc]);
            }
            if Self::is_sparse(xb) {
                let wd = &self.weight.data;
                self.for_each_sparse_term(xb, |wi, oi, v| yb[oi] = yb[oi] + wd[wi] * v);
            } else {
                cols.resize(q * p, T::zero());
                self.im2col(xb, &mut cols);
                matmul(c_out, q, p, &self.weight.data, false, &cols, false, T::one(), yb);
            }
        }
    }

    pub(crate) fn backward(
        &self,
        x: &[T],
        batch: usize,
        dy: &[T],
        dw: &mut [T],
        db: &mut [T],
        mut dx: Option<&mut [T]>,
    ) {
        let in_len: usize = self.in_shape.iter().product();
        let out_len: usize = self.out_shape.iter().product();
        let (c_out, p, q) = (self.out_shape[0], self.positions(), self.patch_len());
        let mut cols = vec![T::zero(); q * p];
        for b in 0..batch {
            let xb = &x[b * in_len..(b + 1) * in_len];
            let dyb = &dy[b * out_len..(b + 1) * out_len];
            for oc in 0..c_out {
                db[oc] = dyb[oc * p..(oc + 1) * p]
                    .iter()
                    .fold(db[oc], |acc, &v| acc + v);
            }
            if Self::is_sparse(xb) {
                self.for_each_sparse_term(xb, |wi, oi, v| dw[wi] = dw[wi] + dyb[oi] * v);
            } else {
                self.im2col(xb, &mut cols);
                matmul(c_out, p, q, dyb, false, &cols, true, T::one(), dw);
            }
            if let Some(dx) = dx.as_deref_mut() {
                matmul(q, c_out, p, &self.weight.data, true, dyb, false, T::zero(), &mut cols);
                self.col2im_add(&cols, &mut dx[b * in_len..(b + 1) * in_len]);
            }
        }
    }
}

/// Fully connected layer. Weight layout `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Dense {
            inputs,
            outputs,
            weight: Tensor {
                shape: vec![outputs, inputs],
                data: he_uniform(outputs * inputs, inputs, rng),
            },
            bias: Tensor::zeros(vec![outputs]),
        }
    }

    pub(crate) fn forward(&self, x: &[T], batch: usize, y: &mut [T]) {
        for b in 0..batch {
            y[b * self.outputs..(b + 1) * self.outputs].copy_from_slice(&self.bias.data);
        }
        matmul(batch, self.inputs, self.outputs, x, false, &self.weight.data, true, T::one(), y);
    }

    pub(crate) fn backward(
        &self,
        x: &[T],
        batch: usize,
        dy: &[T],
        dw: &mut [T],
        db: &mut [T],
        dx: Option<&mut [T]>,
    ) {
        for b in 0..batch {
            for (g, &d) in db.iter_mut().zip(&dy[b * self.outputs..(b + 1) * self.outputs]) {
                *g = *g + d;
            }
        }
        matmul(self.outputs, batch, self.inputs, dy, true, x, false, T::one(), dw);
        if let Some(dx) = dx {
            matmul(batch, self.outputs, self.inputs, dy, false, &self.weight.data, false, T::zero(), dx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn sparse_and_unrolled_convolution_agree() {
        let mut rng = stream(9, Stream::InitA);
        let conv = Conv2d::<f64>::new([3, 7, 6], 4, 3, 2, &mut rng).unwrap();
        let mut x = vec![0.0; 3 * 7 * 6];
        x[5] = 1.0;
        x[50] = -2.0;
        x[100] = 0.5;
        let mut dense = vec![0.0; conv.out_shape.iter().product()];
        let mut cols = vec![0.0; 27 * conv.out_shape[1] * conv.out_shape[2]];
        conv.im2col(&x, &mut cols);
        matmul(4, 27, conv.out_shape[1] * conv.out_shape[2], &conv.weight.data, false, &cols, false, 0.0, &mut dense);
        let mut sparse = vec![0.0; dense.len()];
        assert!(Conv2d::<f64>::is_sparse(&x));
        conv.forward(&x, 1, &mut sparse);
        for (a, b) in dense.iter().zip(&sparse) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
