use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StayParams {
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegParams {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lambda: 1e-4,
            epochs: 500,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 50,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// 0 grows trees until leaves are pure.
    pub max_depth: usize,
    /// Features tried per split; 0 means round(√d).
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 12,
            max_features: 0,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaBoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            rounds: 200,
            max_depth: 2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradBoostParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GradBoostParams {
    fn default() -> Self {
        GradBoostParams {
            rounds: 300,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// A classifier family with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ModelSpec {
    #[serde(rename = "stay")]
    Stay(StayParams),
    #[serde(rename = "logreg")]
    LogReg(LogRegParams),
    #[serde(rename = "linear_svm")]
    LinearSvm(SvmParams),
    #[serde(rename = "random_forest")]
    RandomForest(ForestParams),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoostParams),
    #[serde(rename = "gradboost")]
    GradBoost(GradBoostParams),
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidHyperparameters(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v >= 0.0, || format!("{name} must be >= 0, got {v}"))
}

fn at_least_one(name: &str, v: usize) -> Result<()> {
    check(v >= 1, || format!("{name} must be at least 1"))
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Stay(_) => "stay",
            ModelSpec::LogReg(_) => "logreg",
            ModelSpec::LinearSvm(_) => "linear_svm",
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::AdaBoost(_) => "adaboost",
            ModelSpec::GradBoost(_) => "gradboost",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::Stay(p) => p.seed,
            ModelSpec::LogReg(p) => p.seed,
            ModelSpec::LinearSvm(p) => p.seed,
            ModelSpec::RandomForest(p) => p.seed,
            ModelSpec::AdaBoost(p) => p.seed,
            ModelSpec::GradBoost(p) => p.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelSpec::Stay(p) => p.seed = seed,
            ModelSpec::LogReg(p) => p.seed = seed,
            ModelSpec::LinearSvm(p) => p.seed = seed,
            ModelSpec::RandomForest(p) => p.seed = seed,
            ModelSpec::AdaBoost(p) => p.seed = seed,
            ModelSpec::GradBoost(p) => p.seed = seed,
        }
        self
    }

    pub fn is_tree_ensemble(&self) -> bool {
        matches!(
            self,
            ModelSpec::RandomForest(_) | ModelSpec::AdaBoost(_) | ModelSpec::GradBoost(_)
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Stay(_) => Ok(()),
            ModelSpec::LogReg(p) => {
                non_negative("lambda", p.lambda)?;
                at_least_one("epochs", p.epochs)?;
                positive("learning_rate", p.learning_rate)
            }
            ModelSpec::LinearSvm(p) => {
                non_negative("lambda", p.lambda)?;
                at_least_one("epochs", p.epochs)?;
                positive("learning_rate", p.learning_rate)
            }
            ModelSpec::RandomForest(p) => {
                at_least_one("n_trees", p.n_trees)?;
                at_least_one("min_samples_leaf", p.min_samples_leaf)
            }
            ModelSpec::AdaBoost(p) => {
                at_least_one("rounds", p.rounds)?;
                at_least_one("max_depth", p.max_depth)
            }
            ModelSpec::GradBoost(p) => {
                at_least_one("rounds", p.rounds)?;
                at_least_one("max_depth", p.max_depth)?;
                at_least_one("min_samples_leaf", p.min_samples_leaf)?;
                positive("learning_rate", p.learning_rate)?;
                check(p.learning_rate <= 1.0, || {
                    format!("learning_rate must be <= 1, got {}", p.learning_rate)
                })?;
                check(p.subsample > 0.0 && p.subsample <= 1.0, || {
                    format!("subsample must lie in (0, 1], got {}", p.subsample)
                })
            }
        }
    }

    /// Short content hash of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
    }
}
