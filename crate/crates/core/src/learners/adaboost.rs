use serde::{Deserialize, Serialize};

use super::forest::{argmax, normalized};
use super::tree::{class_contrib, grow, Binned, GrowParams, Impurity, Stats, Tree};
use super::TrainSet;

/// Learner weight used when a weak learner fits its distribution perfectly.
const PERFECT_FIT_WEIGHT: f64 = 20.0;

/// Multi-class AdaBoost (SAMME) over shallow Gini trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub trees: Vec<Tree<[f64; 3]>>,
    pub learner_weights: Vec<f64>,
    /// Used when no weak learner beat chance.
    pub prior: [f64; 3],
    /// Unweighted ensemble training error after each accepted round.
    pub train_error: Vec<f64>,
}

impl AdaBoost {
    pub(crate) fn fit(ts: &TrainSet, rounds: usize, max_depth: usize) -> AdaBoost {
        let n = ts.rows.len();
        let x = Binned::new(ts.x, ts.d, ts.rows);
        let total: f64 = ts.weights.iter().sum();
        let mut dist: Vec<f64> = ts.weights.iter().map(|w| w / total).collect();
        let mut prior = [0.0; 3];
        for i in 0..n {
            prior[ts.labels[i]] += dist[i];
        }
        let params = GrowParams {
            max_depth: Some(max_depth),
            min_samples_leaf: 1,
            max_features: None,
        };
        let mut model = AdaBoost {
            trees: Vec::new(),
            learner_weights: Vec::new(),
            prior,
            train_error: Vec::new(),
        };
        let mut votes = vec![[0.0f64; 3]; n];
        for _ in 0..rounds {
            let contrib: Vec<Stats> = (0..n).map(|i| class_contrib(ts.labels[i], dist[i])).collect();
            let tree = grow::<_, rand_chacha::ChaCha8Rng>(&x, None, &contrib, Impurity::Gini, params, None, normalized);
            let pred: Vec<usize> = (0..n).map(|i| argmax(tree.leaf(ts.row(i)))).collect();
            let err: f64 = (0..n).filter(|&i| pred[i] != ts.labels[i]).map(|i| dist[i]).sum::<f64>()
                / dist.iter().sum::<f64>();
            if err >= 2.0 / 3.0 {
                break;
            }
            let perfect = err <= 1e-12;
            let a = if perfect {
                PERFECT_FIT_WEIGHT
            } else {
                ((1.0 - err) / err).ln() + 2f64.ln()
            };
            for i in 0..n {
                votes[i][pred[i]] += a;
            }
            let wrong = (0..n).filter(|&i| argmax(&votes[i]) != ts.labels[i]).count();
            model.train_error.push(wrong as f64 / n as f64);
            model.trees.push(tree);
            model.learner_weights.push(a);
            if perfect {
                break;
            }
            for i in 0..n {
                if pred[i] != ts.labels[i] {
                    dist[i] *= a.exp();
                }
            }
            let s: f64 = dist.iter().sum();
            dist.iter_mut().for_each(|v| *v /= s);
        }
        model
    }

    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        if self.trees.is_empty() {
            return self.prior;
        }
        let mut s = [0.0; 3];
        for (t, a) in self.trees.iter().zip(&self.learner_weights) {
            s[argmax(t.leaf(x))] += a;
        }
        let total: f64 = self.learner_weights.iter().sum();
        s.map(|v| v / total)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixture::Data;
    use super::*;

    #[test]
    fn perfect_weak_learner_stops_early() {
        // one feature, three classes in separate intervals: a depth-2 tree fits exactly
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let data = Data {
            labels: (0..30).map(|i| i / 10).collect(),
            x,
            d: 1,
            rows: (0..30).collect(),
            weights: vec![1.0; 30],
        };
        let model = AdaBoost::fit(&data.set(), 50, 2);
        assert_eq!(model.learner_weights, vec![PERFECT_FIT_WEIGHT]);
        assert_eq!(model.train_error, vec![0.0]);
    }

    #[test]
    fn rounds_beat_chance_and_reduce_error() {
        let data = Data::ternary(200, 4, 0.0, 6);
        let model = AdaBoost::fit(&data.set(), 40, 1);
        assert!(!model.trees.is_empty());
        // err < 2/3 is equivalent to a positive learner weight
        assert!(model.learner_weights.iter().all(|&a| a > 0.0));
        let first = model.train_error[0];
        let last = *model.train_error.last().unwrap();
        assert!(last <= first);
    }

    #[test]
    fn no_learner_falls_back_to_prior() {
        let data = Data::ternary(60, 3, 0.0, 1);
        let model = AdaBoost::fit(&data.set(), 0, 1);
        assert_eq!(model.scores(&[0.0, 0.0, 0.0]), model.prior);
    }
}
