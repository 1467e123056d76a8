use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{PayoffMatrix, Strategy};

/// What a unilateral switch to the other strategy does to the deviator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deviation {
    Better,
    Tie,
    Worse,
}

impl Deviation {
    fn compare(current: f64, deviated: f64) -> Deviation {
        if deviated > current {
            Deviation::Better
        } else if deviated == current {
            Deviation::Tie
        } else {
            Deviation::Worse
        }
    }
}

/// Best-response arrows out of one profile. An arrow exists where the
/// deviation is [`Deviation::Better`]; it points at the profile reached by
/// switching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellArrows {
    pub profile: [Strategy; 2],
    /// Agent 0 switching (moves along the column).
    pub agent0: Deviation,
    /// Agent 1 switching (moves along the row).
    pub agent1: Deviation,
}

impl CellArrows {
    pub fn arrows(&self) -> impl Iterator<Item = [Strategy; 2]> + '_ {
        let [s0, s1] = self.profile;
        let a = (self.agent0 == Deviation::Better).then_some([s0.other(), s1]);
        let b = (self.agent1 == Deviation::Better).then_some([s0, s1.other()]);
        a.into_iter().chain(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub profile: [Strategy; 2],
    /// Some player is indifferent to deviating.
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashResult {
    pub equilibria: Vec<Equilibrium>,
    pub arrows: Vec<CellArrows>,
    /// Any weak equilibrium exists.
    pub tie: bool,
}

impl NashResult {
    pub fn profiles(&self) -> Vec<[Strategy; 2]> {
        self.equilibria.iter().map(|e| e.profile).collect()
    }
}

/// Pure equilibria by checking every unilateral deviation in the 2×2 game.
pub fn pure_nash(matrix: &PayoffMatrix) -> NashResult {
    let mut equilibria = Vec::new();
    let mut arrows = Vec::new();
    for s0 in Strategy::ALL {
        for s1 in Strategy::ALL {
            let here = matrix.get(s0, s1);
            let agent0 = Deviation::compare(here[0], matrix.get(s0.other(), s1)[0]);
            let agent1 = Deviation::compare(here[1], matrix.get(s0, s1.other())[1]);
            let cell = CellArrows {
                profile: [s0, s1],
                agent0,
                agent1,
            };
            if agent0 != Deviation::Better && agent1 != Deviation::Better {
                equilibria.push(Equilibrium {
                    profile: [s0, s1],
                    weak: agent0 == Deviation::Tie || agent1 == Deviation::Tie,
                });
            }
            arrows.push(cell);
        }
    }
    let tie = equilibria.iter().any(|e| e.weak);
    NashResult {
        equilibria,
        arrows,
        tie,
    }
}
