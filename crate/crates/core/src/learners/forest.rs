use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::rng_for;
use super::tree::{class_contrib, grow, Binned, GrowParams, Impurity, Stats, Tree};
use super::TrainSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    /// Leaves hold the normalized weighted class distribution.
    pub trees: Vec<Tree<[f64; 3]>>,
    pub oob_accuracy: Option<f64>,
}

pub(crate) fn normalized(s: &Stats) -> [f64; 3] {
    let w = s[0] + s[1] + s[2];
    if w > 0.0 {
        [s[0] / w, s[1] / w, s[2] / w]
    } else {
        [1.0 / 3.0; 3]
    }
}

pub(crate) struct ForestOptions {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl RandomForest {
    pub(crate) fn fit(ts: &TrainSet, opts: &ForestOptions, seed: u64) -> RandomForest {
        let n = ts.rows.len();
        let x = Binned::new(ts.x, ts.d, ts.rows);
        let mut rng = rng_for(seed);
        let params = GrowParams {
            max_depth: opts.max_depth,
            min_samples_leaf: opts.min_samples_leaf,
            max_features: opts.max_features,
        };
        let mut trees = Vec::with_capacity(opts.n_trees);
        let mut oob_votes = vec![[0.0f64; 3]; n];
        for _ in 0..opts.n_trees {
            let mut counts = vec![1u32; n];
            if opts.bootstrap {
                counts.fill(0);
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
            }
            let keep: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
            let contrib: Vec<Stats> = (0..n)
                .map(|i| class_contrib(ts.labels[i], ts.weights[i] * counts[i] as f64))
                .collect();
            let tree = grow(&x, Some(&keep), &contrib, Impurity::Gini, params, Some(&mut rng), normalized);
            if opts.bootstrap {
                for i in (0..n).filter(|&i| !keep[i]) {
                    let leaf = tree.leaf(ts.row(i));
                    for c in 0..3 {
                        oob_votes[i][c] += leaf[c];
                    }
                }
            }
            trees.push(tree);
        }
        let oob_accuracy = opts.bootstrap.then(|| {
            let voted: Vec<usize> = (0..n).filter(|&i| oob_votes[i].iter().sum::<f64>() > 0.0).collect();
            let hits = voted.iter().filter(|&&i| argmax(&oob_votes[i]) == ts.labels[i]).count();
            if voted.is_empty() {
                0.0
            } else {
                hits as f64 / voted.len() as f64
            }
        });
        RandomForest { trees, oob_accuracy }
    }

    /// Soft vote: mean of the leaf distributions.
    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        let mut s = [0.0; 3];
        for t in &self.trees {
            let leaf = t.leaf(x);
            for c in 0..3 {
                s[c] += leaf[c];
            }
        }
        let total: f64 = s.iter().sum();
        s.map(|v| v / total)
    }
}

pub(crate) fn argmax(s: &[f64; 3]) -> usize {
    let mut best = 0;
    for c in 1..3 {
        if s[c] > s[best] {
            best = c;
        }
    }
    best
}
