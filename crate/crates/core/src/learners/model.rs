use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adaboost::AdaBoost;
use super::forest::{ForestOptions, RandomForest};
use super::gboost::{BoostOptions, GradBoost};
use super::linear::{LinearSvm, LogReg};
use super::rng::output_seed;
use super::spec::ModelSpec;
use super::tree::LeafRouter;
use super::weights::{class_weights_from_counts, Alpha, ClassWeights};
use super::TrainSet;
use crate::error::{Error, Result};
use crate::panel::Direction;
use crate::window::{flatten_features, FeatureLayout, FeatureVector, WindowConfig, WindowExample};

pub const MODEL_FORMAT: &str = "mandi-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Constant(Direction),
    LogReg(LogReg),
    LinearSvm(LinearSvm),
    RandomForest(RandomForest),
    AdaBoost(AdaBoost),
    GradBoost(GradBoost),
}

impl Classifier {
    /// Normalized class scores in `Up, Down, Stay` order.
    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        match self {
            Classifier::Constant(d) => {
                let mut s = [0.0; 3];
                s[d.index()] = 1.0;
                s
            }
            Classifier::LogReg(m) => m.scores(x),
            Classifier::LinearSvm(m) => m.scores(x),
            Classifier::RandomForest(m) => m.scores(x),
            Classifier::AdaBoost(m) => m.scores(x),
            Classifier::GradBoost(m) => m.scores(x),
        }
    }

    /// Trees with their voting weights.
    pub fn trees(&self) -> Vec<(&dyn LeafRouter, f64)> {
        match self {
            Classifier::RandomForest(m) => m.trees.iter().map(|t| (t as &dyn LeafRouter, 1.0)).collect(),
            Classifier::AdaBoost(m) => m
                .trees
                .iter()
                .zip(&m.learner_weights)
                .map(|(t, &a)| (t as &dyn LeafRouter, a))
                .collect(),
            Classifier::GradBoost(m) => m
                .trees
                .iter()
                .flat_map(|round| round.iter().map(|t| (t as &dyn LeafRouter, 1.0)))
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputStatus {
    Fitted,
    /// Only one class observed in training; predicts it constantly.
    SingleClass,
    /// No observed targets; predicts the global majority class.
    NoTargets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputModel {
    pub market: usize,
    pub horizon: usize,
    pub status: OutputStatus,
    pub counts: [usize; 3],
    /// Empirical class frequencies of the observed targets.
    pub prior: [f64; 3],
    pub weights: Option<ClassWeights>,
    /// Training example indices this output was fitted on.
    pub rows: Vec<u32>,
    pub classifier: Classifier,
}

/// Training anchors and features kept for evidence retrieval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceIndex {
    pub anchors: Vec<NaiveDate>,
    pub features: Vec<f64>,
    /// Realized labels `M × f` per example; `None` where masked.
    pub labels: Vec<Vec<Option<Direction>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub layout: FeatureLayout,
    pub window: WindowConfig,
    pub alpha: Alpha,
    pub markets: Vec<String>,
    /// Row-major by market, then horizon.
    pub outputs: Vec<OutputModel>,
    pub evidence: Option<EvidenceIndex>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputForecast {
    pub label: Direction,
    pub scores: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forecast {
    pub markets: usize,
    pub f: usize,
    pub outputs: Vec<OutputForecast>,
}

impl Forecast {
    pub fn get(&self, market: usize, horizon: usize) -> OutputForecast {
        self.outputs[market * self.f + horizon]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evidence {
    /// Index into the training examples.
    pub example: usize,
    pub anchor: NaiveDate,
    pub similarity: f64,
    pub outcome: Option<Direction>,
}

fn fit_classifier(spec: &ModelSpec, ts: &TrainSet, seed: u64) -> Classifier {
    match spec {
        ModelSpec::Stay(_) => Classifier::Constant(Direction::Stay),
        ModelSpec::LogReg(p) => Classifier::LogReg(LogReg::fit(ts, p.lambda, p.epochs, p.learning_rate)),
        ModelSpec::LinearSvm(p) => Classifier::LinearSvm(LinearSvm::fit(ts, p.lambda, p.epochs, p.learning_rate)),
        ModelSpec::RandomForest(p) => {
            let max_features = if p.max_features == 0 {
                ((ts.d as f64).sqrt().round() as usize).max(1)
            } else {
                p.max_features
            };
            let opts = ForestOptions {
                n_trees: p.n_trees,
                max_depth: (p.max_depth > 0).then_some(p.max_depth),
                max_features: Some(max_features),
                min_samples_leaf: p.min_samples_leaf,
                bootstrap: p.bootstrap,
            };
            Classifier::RandomForest(RandomForest::fit(ts, &opts, seed))
        }
        ModelSpec::AdaBoost(p) => Classifier::AdaBoost(AdaBoost::fit(ts, p.rounds, p.max_depth)),
        ModelSpec::GradBoost(p) => {
            let opts = BoostOptions {
                rounds: p.rounds,
                learning_rate: p.learning_rate,
                max_depth: p.max_depth,
                min_samples_leaf: p.min_samples_leaf,
                subsample: p.subsample,
            };
            Classifier::GradBoost(GradBoost::fit(ts, &opts, seed))
        }
    }
}

fn argmax_counts(counts: &[usize; 3]) -> Direction {
    Direction::argmax(&counts.map(|c| c as f64))
}

/// Fit one classifier per (market, horizon) on the examples whose target
/// for that output is observed.
pub fn train(spec: &ModelSpec, examples: &[WindowExample], window: &WindowConfig, alpha: Alpha) -> Result<TrainedModel> {
    spec.validate()?;
    window.validate()?;
    let first = examples
        .first()
        .ok_or_else(|| Error::InvalidInput("training set is empty".into()))?;
    let (m_count, f) = (first.markets, window.f);
    if let Some(ex) = examples.iter().find(|e| e.markets != m_count || e.b != window.b || e.f != f) {
        return Err(Error::InvalidInput(format!(
            "example at {} has shape M={} b={} f={}, expected M={} b={} f={}",
            ex.anchor, ex.markets, ex.b, ex.f, m_count, window.b, f
        )));
    }
    let layout = FeatureLayout::new(m_count, window);
    let d = layout.len();
    let x: Vec<f64> = examples.iter().flat_map(|e| flatten_features(e, window).values).collect();

    let mut global = [0usize; 3];
    for e in examples {
        for (l, &seen) in e.future_labels.iter().zip(&e.future_mask) {
            if seen {
                global[l.index()] += 1;
            }
        }
    }
    if global.iter().sum::<usize>() == 0 {
        return Err(Error::EmptyLabels);
    }
    let majority = argmax_counts(&global);
    let keep_rows = spec.is_tree_ensemble();

    let outputs = (0..m_count * f)
        .into_par_iter()
        .map(|o| {
            let (m, k) = (o / f, o % f);
            let rows: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].target_observed(m, k)).collect();
            let labels: Vec<usize> = rows.iter().map(|&i| examples[i].future_label(m, k).index()).collect();
            let mut counts = [0usize; 3];
            for &l in &labels {
                counts[l] += 1;
            }
            let n = rows.len();
            let prior = counts.map(|c| if n > 0 { c as f64 / n as f64 } else { 0.0 });
            let classes = counts.iter().filter(|&&c| c > 0).count();
            let (status, weights, classifier) = if n == 0 {
                (OutputStatus::NoTargets, None, Classifier::Constant(majority))
            } else {
                let cw = class_weights_from_counts(counts, alpha)?;
                if classes == 1 {
                    (OutputStatus::SingleClass, Some(cw), Classifier::Constant(argmax_counts(&counts)))
                } else {
                    let w: Vec<f64> = labels.iter().map(|&l| cw.weights[l]).collect();
                    let ts = TrainSet {
                        x: &x,
                        d,
                        rows: &rows,
                        labels: &labels,
                        weights: &w,
                    };
                    let seed = output_seed(spec.seed(), m, k);
                    (OutputStatus::Fitted, Some(cw), fit_classifier(spec, &ts, seed))
                }
            };
            let classifier = match spec {
                ModelSpec::Stay(_) => Classifier::Constant(Direction::Stay),
                _ => classifier,
            };
            Ok(OutputModel {
                market: m,
                horizon: k,
                status,
                counts,
                prior,
                weights,
                rows: if keep_rows { rows.iter().map(|&r| r as u32).collect() } else { Vec::new() },
                classifier,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let evidence = keep_rows.then(|| EvidenceIndex {
        anchors: examples.iter().map(|e| e.anchor).collect(),
        features: x,
        labels: examples
            .iter()
            .map(|e| {
                e.future_labels
                    .iter()
                    .zip(&e.future_mask)
                    .map(|(&l, &seen)| seen.then_some(l))
                    .collect()
            })
            .collect(),
    });

    Ok(TrainedModel {
        spec: spec.clone(),
        layout,
        window: *window,
        alpha,
        markets: (0..m_count).map(|m| format!("m{m}")).collect(),
        outputs,
        evidence,
    })
}

impl TrainedModel {
    pub fn output(&self, market: usize, horizon: usize) -> &OutputModel {
        &self.outputs[market * self.layout.f + horizon]
    }

    fn check_layout(&self, features: &FeatureVector) -> Result<()> {
        if features.layout != self.layout || features.values.len() != self.layout.len() {
            return Err(Error::LayoutMismatch {
                expected: self.layout.describe(),
                found: features.layout.describe(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let container = serde_json::json!({
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "model": self,
        });
        serde_json::to_vec(&container).expect("model serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
        let mut value: serde_json::Value = serde_json::from_slice(bytes)?;
        let format = value.get("format").and_then(|v| v.as_str()).unwrap_or("");
        if format != MODEL_FORMAT {
            return Err(Error::VersionMismatch {
                expected: MODEL_FORMAT.into(),
                found: if format.is_empty() { "<none>".into() } else { format.into() },
            });
        }
        let version = value.get("version").and_then(|v| v.as_u64());
        if version != Some(MODEL_VERSION as u64) {
            return Err(Error::VersionMismatch {
                expected: MODEL_VERSION.to_string(),
                found: version.map_or("<none>".into(), |v| v.to_string()),
            });
        }
        Ok(serde_json::from_value(value["model"].take())?)
    }
}

pub fn predict(model: &TrainedModel, features: &FeatureVector) -> Result<Forecast> {
    model.check_layout(features)?;
    let outputs = model
        .outputs
        .iter()
        .map(|o| {
            let scores = o.classifier.scores(&features.values);
            OutputForecast {
                label: Direction::argmax(&scores),
                scores,
            }
        })
        .collect();
    Ok(Forecast {
        markets: model.layout.markets,
        f: model.layout.f,
        outputs,
    })
}

pub fn predict_many(model: &TrainedModel, features: &[FeatureVector]) -> Result<Vec<Forecast>> {
    features.par_iter().map(|fv| predict(model, fv)).collect()
}

/// Training examples that share the most leaves with the query in the
/// sub-model for `(market, horizon)`.
pub fn explain(
    model: &TrainedModel,
    features: &FeatureVector,
    market: usize,
    horizon: usize,
    top_k: usize,
) -> Result<Vec<Evidence>> {
    if !model.spec.is_tree_ensemble() {
        return Err(Error::NotTreeModel(model.spec.family().to_string()));
    }
    model.check_layout(features)?;
    if market >= model.layout.markets || horizon >= model.layout.f {
        return Err(Error::InvalidInput(format!(
            "output ({market}, {horizon}) outside {} markets x {} horizons",
            model.layout.markets, model.layout.f
        )));
    }
    let out = model.output(market, horizon);
    let trees = out.classifier.trees();
    if trees.is_empty() {
        return Err(Error::InvalidInput(format!(
            "output ({market}, {horizon}) has no trees (status {:?})",
            out.status
        )));
    }
    let index = model
        .evidence
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("model carries no evidence index".into()))?;
    let d = model.layout.len();
    let total: f64 = trees.iter().map(|(_, w)| w).sum();
    let query: Vec<usize> = trees.iter().map(|(t, _)| t.route(&features.values)).collect();
    let mut ranked: Vec<Evidence> = out
        .rows
        .par_iter()
        .map(|&r| {
            let r = r as usize;
            let row = &index.features[r * d..(r + 1) * d];
            let shared: f64 = trees
                .iter()
                .zip(&query)
                .filter(|((t, _), &q)| t.route(row) == q)
                .map(|((_, w), _)| w)
                .sum();
            Evidence {
                example: r,
                anchor: index.anchors[r],
                similarity: (shared / total).clamp(0.0, 1.0),
                outcome: index.labels[r][market * model.layout.f + horizon],
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.anchor.cmp(&b.anchor))
            .then(a.example.cmp(&b.example))
    });
    ranked.truncate(top_k);
    Ok(ranked)
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    TrainedModel::from_bytes(&bytes)
}
