use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::rng::rng_for;
use super::tree::{grow, Binned, GrowParams, Impurity, Stats, Tree};
use super::{softmax, TrainSet};

/// Multinomial-deviance gradient boosting with one regression tree per
/// class per round and single Newton-step leaf values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradBoost {
    pub init: [f64; 3],
    /// Leaf values already include shrinkage.
    pub trees: Vec<[Tree<f64>; 3]>,
    /// Weighted mean training deviance after initialization and each round.
    pub deviance: Vec<f64>,
}

pub(crate) struct BoostOptions {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub subsample: f64,
}

fn deviance(f: &[[f64; 3]], ts: &TrainSet) -> f64 {
    let mut total = 0.0;
    for (i, fi) in f.iter().enumerate() {
        let p = softmax(fi);
        total -= ts.weights[i] * p[ts.labels[i]].max(1e-300).ln();
    }
    total / ts.weights.iter().sum::<f64>()
}

impl GradBoost {
    pub(crate) fn fit(ts: &TrainSet, opts: &BoostOptions, seed: u64) -> GradBoost {
        let n = ts.rows.len();
        let x = Binned::new(ts.x, ts.d, ts.rows);
        let mut rng = rng_for(seed);
        let total: f64 = ts.weights.iter().sum();
        let mut prior = [0.0; 3];
        for i in 0..n {
            prior[ts.labels[i]] += ts.weights[i] / total;
        }
        let init = prior.map(|p| p.max(1e-12).ln());
        let mut f = vec![init; n];
        let mut model = GradBoost {
            init,
            trees: Vec::with_capacity(opts.rounds),
            deviance: vec![deviance(&f, ts)],
        };
        let params = GrowParams {
            max_depth: Some(opts.max_depth),
            min_samples_leaf: opts.min_samples_leaf,
            max_features: None,
        };
        let lr = opts.learning_rate;
        let scale = 2.0 / 3.0;
        for _ in 0..opts.rounds {
            let probs: Vec<[f64; 3]> = f.iter().map(softmax).collect();
            let mut keep = vec![true; n];
            if opts.subsample < 1.0 {
                let k = ((opts.subsample * n as f64).round() as usize).clamp(1, n);
                keep.fill(false);
                for i in sample(&mut rng, n, k) {
                    keep[i] = true;
                }
            }
            let round: [Tree<f64>; 3] = std::array::from_fn(|c| {
                let contrib: Vec<Stats> = (0..n)
                    .map(|i| {
                        let y = if ts.labels[i] == c { 1.0 } else { 0.0 };
                        let p = probs[i][c];
                        let r = y - p;
                        let w = ts.weights[i];
                        [w, w * r, w * r * r, w * p * (1.0 - p)]
                    })
                    .collect();
                let leaf = |s: &Stats| {
                    if s[3] > 1e-150 {
                        lr * scale * s[1] / s[3]
                    } else {
                        0.0
                    }
                };
                grow::<_, rand_chacha::ChaCha8Rng>(&x, Some(&keep), &contrib, Impurity::SquaredError, params, None, leaf)
            });
            for (i, fi) in f.iter_mut().enumerate() {
                let row = ts.row(i);
                for c in 0..3 {
                    fi[c] += *round[c].leaf(row);
                }
            }
            model.deviance.push(deviance(&f, ts));
            model.trees.push(round);
        }
        model
    }

    pub fn raw_scores(&self, x: &[f64]) -> [f64; 3] {
        let mut s = self.init;
        for round in &self.trees {
            for c in 0..3 {
                s[c] += *round[c].leaf(x);
            }
        }
        s
    }

    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        softmax(&self.raw_scores(x))
    }
}
