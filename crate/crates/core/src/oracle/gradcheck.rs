//! Central finite differences against the analytic backward pass.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::numerics::{LayerSpec, Network, NumericError, Tensor};
use crate::rng::{stream, Stream, StreamRng};

/// Which layer an instance is built around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv2d,
    Relu,
    Flatten,
    Dense,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [LayerKind::Conv2d, LayerKind::Relu, LayerKind::Flatten, LayerKind::Dense];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::Relu => "relu",
            LayerKind::Flatten => "flatten",
            LayerKind::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub instances: usize,
    pub coordinates: usize,
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|)`.
    pub worst: f64,
}

struct Instance {
    net: Network<f64>,
    input: Tensor<f64>,
    actions: Vec<usize>,
    targets: Vec<f64>,
}

fn uniform(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn randomise(net: &mut Network<f64>, rng: &mut StreamRng) {
    for p in net.params_mut() {
        for v in p.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
}

fn loss(inst: &Instance, net: &Network<f64>) -> f64 {
    let q = net.forward(&inst.input).expect("shapes checked at construction");
    let width = net.output_width();
    let batch = inst.actions.len();
    let mut total = 0.0;
    for b in 0..batch {
        let r = q.data()[b * width + inst.actions[b]] - inst.targets[b];
        total += r * r;
    }
    total / batch as f64
}

/// Smallest |pre-activation| feeding the ReLU of a `[Flatten, Dense, Relu, ..]` net.
fn relu_margin(net: &Network<f64>, input: &Tensor<f64>, hidden: usize) -> f64 {
    let mut rng = stream(0, Stream::Env);
    let mut prefix = Network::new(net.input_shape(), &[LayerSpec::Flatten, LayerSpec::Dense { width: hidden }], &mut rng)
        .expect("prefix of a valid network");
    let first: Vec<Tensor<f64>> = net.params().into_iter().take(2).cloned().collect();
    prefix.load_params(&first).expect("same shapes");
    let z = prefix.forward(input).expect("same input shape");
    z.data().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

fn build(kind: LayerKind, rng: &mut StreamRng) -> Result<Instance, NumericError> {
    loop {
        let c = rng.random_range(1..=3);
        let h = rng.random_range(3..=6);
        let w = rng.random_range(3..=6);
        let batch = rng.random_range(1..=3);
        let shape = [c, h, w];
        let kernel = rng.random_range(1..=3usize.min(h).min(w));
        let stride = rng.random_range(1..=2);
        let channels = rng.random_range(1..=3);
        let width = rng.random_range(1..=6);
        let hidden = rng.random_range(2..=6);
        let conv = LayerSpec::Conv2d {
            channels,
            kernel,
            stride,
        };
        let specs: Vec<LayerSpec> = match kind {
            LayerKind::Conv2d => vec![conv, LayerSpec::Flatten],
            LayerKind::Flatten => vec![conv, LayerSpec::Flatten, LayerSpec::Dense { width }],
            LayerKind::Dense => vec![LayerSpec::Flatten, LayerSpec::Dense { width }],
            LayerKind::Relu => vec![
                LayerSpec::Flatten,
                LayerSpec::Dense { width: hidden },
                LayerSpec::Relu,
                LayerSpec::Dense { width },
            ],
        };
        let mut net = Network::new(shape, &specs, rng)?;
        randomise(&mut net, rng);
        let len = batch * c * h * w;
        // Half the convolution instances use sparse binary planes, the way
        // observations look, so both convolution paths are exercised.
        let data = if kind != LayerKind::Dense && rng.random_bool(0.5) {
            (0..len).map(|_| if rng.random_bool(0.1) { 1.0 } else { 0.0 }).collect()
        } else {
            uniform(rng, len)
        };
        let input = Tensor::new(vec![batch, c, h, w], data)?;
        if kind == LayerKind::Relu && relu_margin(&net, &input, hidden) < 0.05 {
            // A pre-activation within reach of the perturbation would put a
            // kink inside the difference quotient.
            continue;
        }
        let out = net.output_width();
        let actions = (0..batch).map(|_| rng.random_range(0..out)).collect();
        let targets = uniform(rng, batch);
        return Ok(Instance {
            net,
            input,
            actions,
            targets,
        });
    }
}

/// Checks `instances` random networks built around `kind` with step `h`.
pub fn gradient_check(kind: LayerKind, instances: usize, seed: u64, h: f64) -> Result<GradCheck, NumericError> {
    let mut rng = stream(seed, Stream::InitA);
    let mut worst = 0.0f64;
    let mut coordinates = 0;
    for _ in 0..instances {
        let inst = build(kind, &mut rng)?;
        let (_, grads) = inst.net.td_loss_grad(&inst.input, &inst.actions, &inst.targets)?;
        let mut probe = inst.net.clone();
        for (t, g) in grads.tensors.iter().enumerate() {
            for j in 0..g.len() {
                let orig = probe.params()[t].data()[j];
                probe.params_mut()[t].data_mut()[j] = orig + h;
                let up = loss(&inst, &probe);
                probe.params_mut()[t].data_mut()[j] = orig - h;
                let down = loss(&inst, &probe);
                probe.params_mut()[t].data_mut()[j] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = g.data()[j];
                let scale = analytic.abs().max(numeric.abs());
                let err = if scale == 0.0 {
                    0.0
                } else {
                    (analytic - numeric).abs() / scale
                };
                worst = worst.max(err);
                coordinates += 1;
            }
        }
    }
    Ok(GradCheck {
        instances,
        coordinates,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_few_instances_of_each_kind() {
        for kind in LayerKind::ALL {
            let r = gradient_check(kind, 5, 11, 1e-3).unwrap();
            assert!(r.worst < 1e-4, "{}: {r:?}", kind.name());
            assert!(r.coordinates > 0);
        }
    }
}
