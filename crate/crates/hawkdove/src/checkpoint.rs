//! Binary network checkpoints.
//!
//! Layout, all integers `u32` little endian:
//!
//! ```text
//! magic "HDQN" | version | input C H W | layer count
//! per layer: tag (0 conv, 1 relu, 2 flatten, 3 dense)
//!            conv: channels kernel stride | dense: width
//!            tensor count, per tensor: rank, dims.., raw f32 LE values
//! ```

use std::io::{Read, Write};
use std::path::Path;

use hawkdove_core::numerics::{LayerSpec, Network, Tensor};
use hawkdove_core::rng::{stream, Stream};
use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error};

pub const MAGIC: &[u8; 4] = b"HDQN";
pub const VERSION: u32 = 1;

fn put(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn dim(v: usize) -> u32 {
    u32::try_from(v).expect("dimension fits in u32")
}

pub fn encode(net: &Network<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put(&mut out, VERSION);
    for d in net.input_shape() {
        put(&mut out, dim(d));
    }
    put(&mut out, dim(net.specs().len()));
    let params = net.params();
    let mut next = params.iter();
    for spec in net.specs() {
        let count = match *spec {
            LayerSpec::Conv2d {
                channels,
                kernel,
                stride,
            } => {
                put(&mut out, 0);
                put(&mut out, dim(channels));
                put(&mut out, dim(kernel));
                put(&mut out, dim(stride));
                2
            }
            LayerSpec::Relu => {
                put(&mut out, 1);
                0
            }
            LayerSpec::Flatten => {
                put(&mut out, 2);
                0
            }
            LayerSpec::Dense { width } => {
                put(&mut out, 3);
                put(&mut out, dim(width));
                2
            }
        };
        put(&mut out, count);
        for _ in 0..count {
            let t = next.next().expect("two tensors per parametrised layer");
            put(&mut out, dim(t.shape().len()));
            for &d in t.shape() {
                put(&mut out, dim(d));
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], Error> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::checkpoint(format!("truncated checkpoint at byte {}", self.at))
        })?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn usize(&mut self) -> Result<usize, Error> {
        self.u32().map(|v| v as usize)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Network<f32>, Error> {
    let mut c = Cursor { bytes, at: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::checkpoint("not a network checkpoint (bad magic)"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::checkpoint(format!(
            "checkpoint schema version {version}, expected {VERSION}"
        )));
    }
    let input = [c.usize()?, c.usize()?, c.usize()?];
    let layers = c.usize()?;
    if layers > 1024 {
        return Err(Error::checkpoint(format!("implausible layer count {layers}")));
    }
    let mut specs = Vec::with_capacity(layers);
    let mut tensors = Vec::new();
    for i in 0..layers {
        let spec = match c.u32()? {
            0 => LayerSpec::Conv2d {
                channels: c.usize()?,
                kernel: c.usize()?,
                stride: c.usize()?,
            },
            1 => LayerSpec::Relu,
            2 => LayerSpec::Flatten,
            3 => LayerSpec::Dense { width: c.usize()? },
            tag => return Err(Error::checkpoint(format!("layer {i}: unknown tag {tag}"))),
        };
        specs.push(spec);
        let count = c.usize()?;
        for _ in 0..count {
            let rank = c.usize()?;
            if rank > 8 {
                return Err(Error::checkpoint(format!("layer {i}: implausible rank {rank}")));
            }
            let shape: Vec<usize> = (0..rank).map(|_| c.usize()).collect::<Result<_, _>>()?;
            let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let len = len
                .filter(|&l| l.checked_mul(4).is_some_and(|b| b <= bytes.len()))
                .ok_or_else(|| Error::checkpoint(format!("layer {i}: tensor {shape:?} too large")))?;
            let raw = c.take(len * 4)?;
            let data = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("four bytes")))
                .collect();
            tensors.push(Tensor::new(shape, data).map_err(|e| Error::checkpoint(e.to_string()))?);
        }
    }
    if c.at != bytes.len() {
        return Err(Error::checkpoint(format!("{} trailing bytes", bytes.len() - c.at)));
    }
    // Parameters are overwritten right away; the seed only shapes the buffers.
    let mut rng = stream(0, Stream::InitA);
    let mut net = Network::new(input, &specs, &mut rng).map_err(|e| Error::checkpoint(e.to_string()))?;
    net.load_params(&tensors).map_err(|e| Error::checkpoint(e.to_string()))?;
    Ok(net)
}

pub fn save(path: &Path, net: &Network<f32>) -> Result<(), Error> {
    let mut f = std::fs::File::create(path).map_err(io_at(path))?;
    f.write_all(&encode(net)).map_err(io_at(path))
}

pub fn load(path: &Path) -> Result<Network<f32>, Error> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_at(path))?;
    decode(&bytes).map_err(|e| Error::checkpoint(format!("{}: {}", path.display(), e.message)))
}

/// Sidecar written next to each agent's parameters. The replay buffer is
/// not saved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub agent: usize,
    pub kind: String,
    pub seed: u64,
    pub env_steps: u64,
    pub train_steps: u64,
    /// ε at `env_steps`.
    pub epsilon: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
}

pub fn save_meta(path: &Path, meta: &AgentMeta) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(meta).expect("plain struct");
    std::fs::write(path, text + "\n").map_err(io_at(path))
}

pub fn load_meta(path: &Path) -> Result<AgentMeta, Error> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Network<f32> {
        let mut rng = stream(9, Stream::InitB);
        Network::q_network([12, 9, 9], &mut rng).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let net = small();
        let bytes = encode(&net);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn version_and_corruption_are_rejected() {
        let mut bytes = encode(&small());
        let mut wrong = bytes.clone();
        wrong[4] = 2;
        assert!(decode(&wrong).unwrap_err().message.contains("version 2"));
        bytes.truncate(bytes.len() - 3);
        assert!(decode(&bytes).unwrap_err().message.contains("truncated"));
        assert!(decode(b"nope").unwrap_err().message.contains("magic"));
    }
}
