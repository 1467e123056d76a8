use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Label};

/// Final greedy labels of one training seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLabels {
    pub seed: u64,
    pub labels: [Label; 2],
}

impl SeedLabels {
    /// One agent Straight, the other Avoid.
    pub fn is_asymmetric(&self) -> bool {
        matches!(
            self.labels,
            [Label::Straight, Label::Avoid] | [Label::Avoid, Label::Straight]
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport {
    pub seeds: Vec<SeedLabels>,
    pub asymmetric: usize,
    pub asymmetric_fraction: f64,
    /// Among asymmetric seeds, how often agent 0 / agent 1 went straight.
    pub straight_split: [usize; 2],
    /// Some seed ended in a collision.
    pub collide: bool,
}

pub fn asymmetry_report(seeds: &[SeedLabels]) -> Result<AsymmetryReport, AnalysisError> {
    if seeds.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut split = [0usize; 2];
    let mut asymmetric = 0;
    for s in seeds.iter().filter(|s| s.is_asymmetric()) {
        asymmetric += 1;
        let straight = if s.labels[0] == Label::Straight { 0 } else { 1 };
        split[straight] += 1;
    }
    Ok(AsymmetryReport {
        seeds: seeds.to_vec(),
        asymmetric,
        asymmetric_fraction: asymmetric as f64 / seeds.len() as f64,
        straight_split: split,
        collide: seeds.iter().any(|s| s.labels.contains(&Label::Collide)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn seeds(l: &[[Label; 2]]) -> Vec<SeedLabels> {
        l.iter()
            .enumerate()
            .map(|(i, labels)| SeedLabels {
                seed: i as u64,
                labels: *labels,
            })
            .collect()
    }

    #[test]
    fn counts_roles() {
        let r = asymmetry_report(&seeds(&[[Straight, Avoid], [Avoid, Straight], [Straight, Avoid]])).unwrap();
        assert_eq!(r.asymmetric_fraction, 1.0);
        assert_eq!(r.straight_split, [2, 1]);
        assert!(!r.collide);
    }

    #[test]
    fn collisions_are_flagged() {
        let r = asymmetry_report(&seeds(&[[Collide, Collide]])).unwrap();
        assert_eq!(r.asymmetric_fraction, 0.0);
        assert!(r.collide);
        assert_eq!(asymmetry_report(&[]), Err(AnalysisError::Empty));
    }
}
