//! Three-class direction classifiers and the per-output model bank.

mod adaboost;
mod forest;
mod gboost;
mod linear;
mod model;
pub mod rng;
mod spec;
pub mod tree;
mod weights;

pub use adaboost::AdaBoost;
pub use forest::RandomForest;
pub use gboost::GradBoost;
pub use linear::{logreg_gradient, logreg_loss, LinearSvm, LogReg, Standardizer};
pub use model::{
    explain, load_model, predict, predict_many, save_model, train, Classifier, Evidence, EvidenceIndex, Forecast,
    OutputForecast, OutputModel, OutputStatus, TrainedModel, MODEL_FORMAT, MODEL_VERSION,
};
pub use spec::{AdaBoostParams, ForestParams, GradBoostParams, LogRegParams, ModelSpec, StayParams, SvmParams};
pub use weights::{class_weights, class_weights_from_counts, label_counts, Alpha, ClassWeights, MIN_CLASS_WEIGHT};

pub(crate) struct TrainSet<'a> {
    /// Row-major features of the full training set.
    pub x: &'a [f64],
    pub d: usize,
    /// Rows of `x` used here; the other fields are indexed like `rows`.
    pub rows: &'a [usize],
    pub labels: &'a [usize],
    pub weights: &'a [f64],
}

impl TrainSet<'_> {
    pub fn row(&self, i: usize) -> &[f64] {
        let r = self.rows[i];
        &self.x[r * self.d..(r + 1) * self.d]
    }
}

pub(crate) fn softmax(z: &[f64; 3]) -> [f64; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

#[cfg(test)]
pub(crate) mod fixture {
    use rand::Rng;

    use super::rng::rng_for;
    use super::TrainSet;

    /// Owned training data for learner tests.
    pub struct Data {
        pub x: Vec<f64>,
        pub d: usize,
        pub rows: Vec<usize>,
        pub labels: Vec<usize>,
        pub weights: Vec<f64>,
    }

    impl Data {
        pub fn set(&self) -> TrainSet<'_> {
            TrainSet {
                x: &self.x,
                d: self.d,
                rows: &self.rows,
                labels: &self.labels,
                weights: &self.weights,
            }
        }

        /// Features in {-1, 0, 1}; the label follows the sign of the first
        /// two features' sum, flipped to a random class with probability `noise`.
        pub fn ternary(n: usize, d: usize, noise: f64, seed: u64) -> Data {
            let mut rng = rng_for(seed);
            let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1i32..=1) as f64).collect();
            let labels = (0..n)
                .map(|i| {
                    if rng.random_bool(noise) {
                        return rng.random_range(0..3);
                    }
                    let s = x[i * d] + x[i * d + 1];
                    if s > 0.0 {
                        0
                    } else if s < 0.0 {
                        1
                    } else {
                        2
                    }
                })
                .collect();
            Data {
                x,
                d,
                rows: (0..n).collect(),
                labels,
                weights: vec![1.0; n],
            }
        }

        /// Continuous features, so every row is distinct.
        pub fn continuous(n: usize, d: usize, seed: u64) -> Data {
            let mut rng = rng_for(seed);
            let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let labels = (0..n).map(|_| rng.random_range(0..3)).collect();
            Data {
                x,
                d,
                rows: (0..n).collect(),
                labels,
                weights: vec![1.0; n],
            }
        }
    }
}
