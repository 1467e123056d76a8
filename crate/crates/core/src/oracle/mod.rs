//! Reference solutions used to check the learners.
//!
//! The transition model here is written out separately from
//! [`crate::gridworld::step`] on purpose, so the two can be compared.

mod gradcheck;
mod single_agent;
mod symmetry;

pub use gradcheck::{gradient_check, GradCheck, LayerKind};
pub use single_agent::{alone_at, greedy_path, max_error, train_alone};
pub use symmetry::{symmetry_sweep, SymmetrySweep};

use alloc::vec;
use alloc::vec::Vec;

use crate::gridworld::{Action, Cell, Edge, RewardSpec};

/// Optimal action values of the single-agent crossing MDP (opponent absent)
/// on a `width × height` grid, indexed `[cell_index][action]` with
/// `cell_index = y·width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleAgentQ {
    pub width: u32,
    pub height: u32,
    pub q: Vec<[f64; 5]>,
    pub sweeps: usize,
}

impl SingleAgentQ {
    pub fn at(&self, c: Cell) -> &[f64; 5] {
        &self.q[c.y as usize * self.width as usize + c.x as usize]
    }
}

enum Outcome {
    Exit(f64),
    Move(usize),
}

fn transition(x: i32, y: i32, a: usize, w: i32, h: i32, target: Edge, r: &RewardSpec) -> Outcome {
    let (dx, dy) = [(0, -1), (0, 1), (-1, 0), (1, 0), (0, 0)][a];
    let (nx, ny) = (x + dx, y + dy);
    let crossed = if nx < 0 {
        Some(Edge::West)
    } else if nx >= w {
        Some(Edge::East)
    } else if ny < 0 {
        Some(Edge::North)
    } else if ny >= h {
        Some(Edge::South)
    } else {
        None
    };
    match crossed {
        Some(e) if e == target => Outcome::Exit(r.r_goal),
        Some(_) => Outcome::Exit(r.r_wrong),
        None => Outcome::Move((ny * w + nx) as usize),
    }
}

/// Value iteration until the largest Bellman change is below `tol`.
pub fn value_iteration(width: u32, height: u32, target: Edge, reward: &RewardSpec, tol: f64) -> SingleAgentQ {
    let (w, h) = (width as i32, height as i32);
    let n = (w * h) as usize;
    let mut v = vec![0.0f64; n];
    let mut q = vec![[0.0f64; 5]; n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut delta = 0.0f64;
        for y in 0..h {
            for x in 0..w {
                let s = (y * w + x) as usize;
                for (a, slot) in q[s].iter_mut().enumerate() {
                    *slot = match transition(x, y, a, w, h, target, reward) {
                        Outcome::Exit(r) => r,
                        Outcome::Move(s2) => reward.r_step + reward.gamma * v[s2],
                    };
                }
            }
        }
        for s in 0..n {
            let best = q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < tol {
            break;
        }
    }
    SingleAgentQ {
        width,
        height,
        q,
        sweeps,
    }
}

/// All actions whose value is within `eps` of the best at `c`.
pub fn optimal_actions(q: &SingleAgentQ, c: Cell, eps: f64) -> Vec<Action> {
    let row = q.at(c);
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Action::ALL.into_iter().filter(|a| row[a.index()] >= best - eps).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_follow_the_closed_form() {
        let r = RewardSpec::default();
        let q = value_iteration(5, 5, Edge::East, &r, 1e-12);
        // From x the goal is 5 - x moves away: (4 - x) step penalties then the goal.
        for x in 0..5 {
            let k = 4 - x;
            let mut expect = r.r_goal * r.gamma.powi(k);
            for j in 0..k {
                expect += r.r_step * r.gamma.powi(j);
            }
            let best = q.at(Cell::new(x, 2)).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((best - expect).abs() < 1e-9, "x={x}: {best} vs {expect}");
        }
        assert_eq!(optimal_actions(&q, Cell::new(2, 2), 1e-9), vec![Action::Right]);
    }
}
