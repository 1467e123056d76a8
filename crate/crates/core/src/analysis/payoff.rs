use serde::{Deserialize, Serialize};

use super::{scripted_strategy, AnalysisError, Strategy};
use crate::gridworld::ScenarioConfig;
use crate::rollout::rollout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReturnKind {
    /// Plain episode sums.
    #[default]
    Undiscounted,
    /// `Σ γ^t r_t` with the scenario's γ.
    Discounted,
}

/// Mean returns of every scripted strategy pair.
///
/// `payoff[s0][s1] = [return of agent 0, return of agent 1]` when agent 0
/// plays `s0` and agent 1 plays `s1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub strategies: [Strategy; 2],
    pub payoff: [[[f64; 2]; 2]; 2],
    pub episodes_per_cell: u32,
    pub returns: ReturnKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardOrdering {
    /// Return of the straight agent against an avoider.
    pub r_s: f64,
    /// Return of the avoider against a straight agent.
    pub r_a: f64,
    /// Return of a straight agent against a straight agent.
    pub r_d: f64,
    /// `r_s > r_a > r_d`, strictly.
    pub holds: bool,
}

impl PayoffMatrix {
    pub fn get(&self, s0: Strategy, s1: Strategy) -> [f64; 2] {
        self.payoff[s0.index()][s1.index()]
    }

    /// Reads the ordering off agent 0's row (agent 1's column gives the same
    /// numbers in a symmetric scenario).
    pub fn ordering(&self) -> RewardOrdering {
        let r_s = self.get(Strategy::Straight, Strategy::Avoid)[0];
        let r_a = self.get(Strategy::Avoid, Strategy::Straight)[0];
        let r_d = self.get(Strategy::Straight, Strategy::Straight)[0];
        RewardOrdering {
            r_s,
            r_a,
            r_d,
            holds: r_s > r_a && r_a > r_d,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.payoff.iter().flatten().flatten().all(|v| v.is_finite())
    }
}

pub fn empirical_payoff(config: &ScenarioConfig, episodes_per_cell: u32) -> Result<PayoffMatrix, AnalysisError> {
    empirical_payoff_with(config, episodes_per_cell, ReturnKind::Undiscounted)
}

pub fn empirical_payoff_with(
    config: &ScenarioConfig,
    episodes_per_cell: u32,
    kind: ReturnKind,
) -> Result<PayoffMatrix, AnalysisError> {
    if episodes_per_cell == 0 {
        return Err(AnalysisError::NoEpisodes);
    }
    let mut payoff = [[[0.0; 2]; 2]; 2];
    for s0 in Strategy::ALL {
        for s1 in Strategy::ALL {
            let mut sum = [0.0; 2];
            for _ in 0..episodes_per_cell {
                let mut p0 = scripted_strategy(s0, 0, config);
                let mut p1 = scripted_strategy(s1, 1, config);
                let t = rollout(config, [&mut p0, &mut p1])?;
                for (i, total) in sum.iter_mut().enumerate() {
                    *total += match kind {
                        ReturnKind::Undiscounted => t.returns[i],
                        ReturnKind::Discounted => t.discounted_return(i, config.reward.gamma),
                    };
                }
            }
            payoff[s0.index()][s1.index()] = sum.map(|v| v / episodes_per_cell as f64);
        }
    }
    Ok(PayoffMatrix {
        strategies: Strategy::ALL,
        payoff,
        episodes_per_cell,
        returns: kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Scenario;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn parallel_nine_by_nine_values() {
        let c = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        let m = empirical_payoff(&c, 3).unwrap();
        let o = m.ordering();
        assert!(close(o.r_s, 0.92) && close(o.r_a, 0.90) && close(o.r_d, -1.03), "{o:?}");
        assert!(o.holds);
        let aa = m.get(Strategy::Avoid, Strategy::Avoid);
        assert!(close(aa[0], 0.90) && close(aa[1], 0.90));
        assert!(matches!(empirical_payoff(&c, 0), Err(AnalysisError::NoEpisodes)));
    }

    #[test]
    fn discounted_returns_are_smaller_for_goals() {
        let c = ScenarioConfig::square(Scenario::Perpendicular, 9).unwrap();
        let u = empirical_payoff(&c, 1).unwrap();
        let d = empirical_payoff_with(&c, 1, ReturnKind::Discounted).unwrap();
        assert!(d.ordering().r_s < u.ordering().r_s);
        assert!(d.ordering().holds);
    }
}
