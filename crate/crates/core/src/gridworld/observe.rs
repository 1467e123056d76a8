//! Image-plane observations with frame stacking.
//!
//! Each frame has three planes: the observing agent's own position, the
//! other agent's position and the observing agent's target edge. An agent
//! that is no longer active contributes an all-zero position plane. The
//! observation stores only the positions per frame; dense planes are
//! materialised on demand.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Cell, Edge, JointState, ScenarioConfig};

pub const PLANES_PER_FRAME: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub own: Option<Cell>,
    pub other: Option<Cell>,
}

pub fn encode_frame(state: &JointState, agent: usize) -> Frame {
    let visible = |i: usize| if state.is_active(i) { state.pos[i] } else { None };
    Frame {
        own: visible(agent),
        other: visible(1 - agent),
    }
}

/// The previous `frame_stack - 1` frames for one agent, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameHistory {
    frames: VecDeque<Frame>,
    depth: usize,
}

impl FrameHistory {
    /// History at episode start: copies of the initial frame.
    pub fn start(state: &JointState, agent: usize, config: &ScenarioConfig) -> Self {
        let depth = config.frame_stack as usize - 1;
        let frame = encode_frame(state, agent);
        FrameHistory {
            frames: core::iter::repeat_n(frame, depth).collect(),
            depth,
        }
    }

    pub fn push(&mut self, frame: Frame) {
        if self.depth == 0 {
            return;
        }
        if self.frames.len() == self.depth {
            self.frames.pop_back();
        }
        self.frames.push_front(frame);
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub width: u32,
    pub height: u32,
    pub target: Edge,
    /// Newest first; length equals the frame-stack depth.
    pub frames: Vec<Frame>,
}

impl Observation {
    /// `(channels, height, width)` of the dense planes.
    pub fn shape(&self) -> [usize; 3] {
        [
            PLANES_PER_FRAME * self.frames.len(),
            self.height as usize,
            self.width as usize,
        ]
    }

    pub fn len(&self) -> usize {
        let [c, h, w] = self.shape();
        c * h * w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the dense planes into `out` (length [`Observation::len`]),
    /// channel order `[own, other, boundary]` per frame, newest frame first.
    pub fn write_planes<T: Copy>(&self, out: &mut [T], zero: T, one: T) {
        assert_eq!(out.len(), self.len(), "plane buffer has the wrong length");
        out.fill(zero);
        let (w, h) = (self.width as usize, self.height as usize);
        let plane = w * h;
        let set = |out: &mut [T], channel: usize, c: Cell| {
            out[channel * plane + c.y as usize * w + c.x as usize] = one;
        };
        for (f, frame) in self.frames.iter().enumerate() {
            let base = f * PLANES_PER_FRAME;
            if let Some(c) = frame.own {
                set(out, base, c);
            }
            if let Some(c) = frame.other {
                set(out, base + 1, c);
            }
            for c in boundary_cells(self.target, self.width, self.height) {
                set(out, base + 2, c);
            }
        }
    }

    pub fn planes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len()];
        self.write_planes(&mut out, 0, 1);
        out
    }
}

/// Cells along `edge`.
pub fn boundary_cells(edge: Edge, width: u32, height: u32) -> impl Iterator<Item = Cell> {
    let (w, h) = (width as i32, height as i32);
    let (n, f): (i32, fn(i32, i32, i32) -> Cell) = match edge {
        Edge::North => (w, |i, _, _| Cell::new(i, 0)),
        Edge::South => (w, |i, _, h| Cell::new(i, h - 1)),
        Edge::West => (h, |i, _, _| Cell::new(0, i)),
        Edge::East => (h, |i, w, _| Cell::new(w - 1, i)),
    };
    (0..n).map(move |i| f(i, w, h))
}

/// Current frame stacked on top of `history`.
pub fn observe(
    state: &JointState,
    history: &FrameHistory,
    agent: usize,
    config: &ScenarioConfig,
) -> Observation {
    let mut frames = Vec::with_capacity(config.frame_stack as usize);
    frames.push(encode_frame(state, agent));
    frames.extend(history.frames().copied());
    Observation {
        width: config.width,
        height: config.height,
        target: config.target_edge[agent],
        frames,
    }
}
