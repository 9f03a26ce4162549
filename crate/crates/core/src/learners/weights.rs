use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Direction;

/// Number of direction classes.
pub const K: usize = 3;

/// Floor applied to the weight of a class absent from the training labels.
pub const MIN_CLASS_WEIGHT: f64 = 1e-6;

/// Trade-off between raw accuracy (0) and balanced accuracy (1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const RAW: Alpha = Alpha(0.0);
    pub const BALANCED: Alpha = Alpha(1.0);

    pub fn new(value: f64) -> Result<Alpha> {
        if (0.0..=1.0).contains(&value) {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidInput(format!("alpha must lie in [0, 1], got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Alpha> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Per-class example weights, indexed by [`Direction::index`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: [f64; K],
    /// Classes with no training examples; their weight is floored.
    pub absent: [bool; K],
}

impl ClassWeights {
    pub fn get(&self, d: Direction) -> f64 {
        self.weights[d.index()]
    }

    pub fn up(&self) -> f64 {
        self.weights[0]
    }

    pub fn down(&self) -> f64 {
        self.weights[1]
    }

    pub fn stay(&self) -> f64 {
        self.weights[2]
    }
}

pub fn label_counts(labels: &[Direction]) -> [usize; K] {
    let mut counts = [0; K];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// `w_c = (1 − α) + α · n / (K · n_c)`: uniform at α = 0, inverse-frequency
/// balanced at α = 1.
pub fn class_weights_from_counts(counts: [usize; K], alpha: Alpha) -> Result<ClassWeights> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyLabels);
    }
    let a = alpha.value();
    let mut weights = [0.0; K];
    let mut absent = [false; K];
    for c in 0..K {
        if counts[c] == 0 {
            absent[c] = true;
            weights[c] = (1.0 - a).max(MIN_CLASS_WEIGHT);
        } else {
            weights[c] = (1.0 - a) + a * (n as f64 / (K as f64 * counts[c] as f64));
        }
    }
    Ok(ClassWeights { weights, absent })
}

pub fn class_weights(labels: &[Direction], alpha: Alpha) -> Result<ClassWeights> {
    class_weights_from_counts(label_counts(labels), alpha)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn endpoints() {
        let w = class_weights_from_counts([7, 3, 90], Alpha::RAW).unwrap();
        assert_eq!(w.weights, [1.0, 1.0, 1.0]);
        let w = class_weights_from_counts([10, 10, 80], Alpha::BALANCED).unwrap();
        assert!((w.up() - 10.0 / 3.0).abs() < 1e-15);
        assert!((w.down() - 10.0 / 3.0).abs() < 1e-15);
        assert!((w.stay() - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint_is_mean_of_endpoints() {
        let counts = [20, 20, 60];
        let lo = class_weights_from_counts(counts, Alpha::RAW).unwrap();
        let hi = class_weights_from_counts(counts, Alpha::BALANCED).unwrap();
        let mid = class_weights_from_counts(counts, Alpha::new(0.5).unwrap()).unwrap();
        for c in 0..K {
            assert!((mid.weights[c] - (lo.weights[c] + hi.weights[c]) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn absent_class_is_floored_and_flagged() {
        let w = class_weights_from_counts([0, 5, 5], Alpha::BALANCED).unwrap();
        assert!(w.absent[0]);
        assert_eq!(w.up(), MIN_CLASS_WEIGHT);
        let w = class_weights_from_counts([0, 5, 5], Alpha::new(0.25).unwrap()).unwrap();
        assert_eq!(w.up(), 0.75);
        assert!(matches!(class_weights(&[], Alpha::RAW), Err(Error::EmptyLabels)));
    }

    #[test]
    fn alpha_range() {
        assert!(Alpha::new(-0.1).is_err());
        assert!(Alpha::new(1.5).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_alpha(counts in proptest::array::uniform3(1usize..500), a in 0.0f64..1.0, da in 0.0f64..0.5) {
            let b = (a + da).min(1.0);
            let n: usize = counts.iter().sum();
            let lo = class_weights_from_counts(counts, Alpha::new(a).unwrap()).unwrap();
            let hi = class_weights_from_counts(counts, Alpha::new(b).unwrap()).unwrap();
            for c in 0..K {
                if 3 * counts[c] < n {
                    prop_assert!(hi.weights[c] >= lo.weights[c]);
                } else if 3 * counts[c] > n {
                    prop_assert!(hi.weights[c] <= lo.weights[c]);
                }
                prop_assert!(lo.weights[c] > 0.0);
            }
        }
    }
}
