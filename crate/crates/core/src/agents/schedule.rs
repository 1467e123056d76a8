use serde::{Deserialize, Serialize};

/// Linear ε decay from `eps_start` to `eps_end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            eps_start: 1.0,
            eps_end: 0.05,
            decay_steps: 30_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        EpsilonSchedule {
            eps_start: eps,
            eps_end: eps,
            decay_steps: 0,
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.eps_start)
            && (0.0..=1.0).contains(&self.eps_end)
            && self.eps_start >= self.eps_end
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.eps_end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}
