use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EpsilonSchedule;
use crate::gridworld::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    /// Lowest action index wins.
    #[default]
    Lowest,
    /// Uniform among the maximal actions.
    Random,
}

/// Index of the largest value, lowest index on ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn greedy<T: PartialOrd + Copy, R: Rng + ?Sized>(values: &[T], tie: TieBreak, rng: &mut R) -> usize {
    let best = argmax(values);
    match tie {
        TieBreak::Lowest => best,
        TieBreak::Random => {
            let top = values[best];
            let ties = values.iter().filter(|v| **v == top).count();
            if ties == 1 {
                return best;
            }
            let pick = rng.random_range(0..ties);
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == top)
                .nth(pick)
                .map(|(i, _)| i)
                .unwrap_or(best)
        }
    }
}

/// With probability `eps` a uniformly random index, otherwise the greedy one.
pub fn epsilon_greedy<T: PartialOrd + Copy, R: Rng + ?Sized>(
    values: &[T],
    eps: f64,
    tie: TieBreak,
    rng: &mut R,
) -> usize {
    let explore: f64 = rng.random();
    if explore < eps {
        rng.random_range(0..values.len())
    } else {
        greedy(values, tie, rng)
    }
}

/// ε-greedy action for the given step of an exploration schedule.
pub fn select_action<T: PartialOrd + Copy, R: Rng + ?Sized>(
    q_values: &[T],
    schedule: &EpsilonSchedule,
    step: u64,
    tie: TieBreak,
    rng: &mut R,
) -> Action {
    let i = epsilon_greedy(q_values, schedule.value(step), tie, rng);
    Action::from_index(i).expect("one Q-value per action")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn greedy_prefers_lowest_index_on_ties() {
        let mut rng = stream(0, Stream::AgentA);
        let q = [0.1, 0.9, 0.9, 0.0, 0.0];
        let a = select_action(&q, &EpsilonSchedule::constant(0.0), 0, TieBreak::Lowest, &mut rng);
        assert_eq!(a.index(), 1);
        assert_eq!(argmax(&[0.0f32; 5]), 0);
    }

    #[test]
    fn random_tie_break_covers_all_maxima() {
        let mut rng = stream(1, Stream::AgentA);
        let q = [0.1, 0.9, 0.9, 0.0, 0.9];
        let mut seen = [0usize; 5];
        for _ in 0..3000 {
            seen[epsilon_greedy(&q, 0.0, TieBreak::Random, &mut rng)] += 1;
        }
        assert_eq!(seen[0] + seen[3], 0);
        for i in [1, 2, 4] {
            assert!(seen[i] > 800, "{seen:?}");
        }
    }

    #[test]
    fn full_exploration_is_uniform_within_three_sigma() {
        let mut rng = stream(2, Stream::AgentA);
        let q = [0.0, 1.0, 2.0, 3.0, 4.0];
        let n = 10_000usize;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            let a = select_action(&q, &EpsilonSchedule::constant(1.0), 0, TieBreak::Lowest, &mut rng);
            counts[a.index()] += 1;
        }
        let p = 0.2f64;
        let mean = n as f64 * p;
        let sigma = num_traits::Float::sqrt(n as f64 * p * (1.0 - p));
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn epsilon_at_decay_end_equals_floor() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.value(s.decay_steps), s.eps_end);
    }
}
