use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{predict, Alpha, TrainedModel};
use crate::panel::Direction;
use crate::window::{forecast_features, SplitSpec, WindowExample};

/// Rows are truth, columns prediction, both in `Up, Down, Stay` order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: Direction, predicted: Direction) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(mut self, other: &ConfusionMatrix) -> ConfusionMatrix {
        for t in 0..3 {
            for p in 0..3 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|c| self.counts[c][c]).sum()
    }

    pub fn truth_count(&self, d: Direction) -> u64 {
        self.counts[d.index()].iter().sum()
    }

    pub fn raw_accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Recall per truth class; `None` when the class never occurs.
    pub fn recalls(&self) -> [Option<f64>; 3] {
        std::array::from_fn(|c| {
            let n: u64 = self.counts[c].iter().sum();
            (n > 0).then(|| self.counts[c][c] as f64 / n as f64)
        })
    }

    pub fn balanced_accuracy(&self) -> f64 {
        balanced_accuracy(&self.recalls())
    }
}

/// Mean of the recalls of the classes present.
pub fn balanced_accuracy(recalls: &[Option<f64>; 3]) -> f64 {
    let present: Vec<f64> = recalls.iter().flatten().copied().collect();
    present.iter().sum::<f64>() / present.len() as f64
}

/// Model-selection objective `(1 − α)·raw + α·balanced`.
pub fn objective(alpha: Alpha, raw: f64, balanced: f64) -> f64 {
    let a = alpha.value();
    if a == 0.0 {
        raw
    } else if a == 1.0 {
        balanced
    } else {
        (1.0 - a) * raw + a * balanced
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub raw_accuracy: f64,
    pub balanced_accuracy: f64,
    pub per_class_recall: [Option<f64>; 3],
    /// Truth classes missing from the evaluation set.
    pub absent_classes: Vec<Direction>,
    pub family: String,
    pub alpha: f64,
    pub b: usize,
    pub f: usize,
    pub split: Option<SplitSpec>,
    pub seed: u64,
    pub spec_digest: String,
    pub examples: usize,
}

impl EvalReport {
    pub fn with_split(mut self, split: SplitSpec) -> Self {
        self.split = Some(split);
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        writeln!(s, "[report]").unwrap();
        writeln!(s, "family = {}", self.family).unwrap();
        writeln!(s, "spec_digest = {}", self.spec_digest).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "alpha = {:.6}", self.alpha).unwrap();
        writeln!(s, "b = {}", self.b).unwrap();
        writeln!(s, "f = {}", self.f).unwrap();
        if let Some(sp) = &self.split {
            writeln!(s, "train_end = {}", sp.train_end).unwrap();
            writeln!(s, "val_end = {}", sp.val_end).unwrap();
            writeln!(s, "test_end = {}", sp.test_end).unwrap();
        }
        writeln!(s, "examples = {}", self.examples).unwrap();
        writeln!(s, "predictions = {}", self.confusion.total()).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "[metrics]").unwrap();
        writeln!(s, "raw_accuracy = {:.6}", self.raw_accuracy).unwrap();
        writeln!(s, "balanced_accuracy = {:.6}", self.balanced_accuracy).unwrap();
        for d in Direction::ALL {
            writeln!(s, "recall_{} = {}", d, fmt_opt(self.per_class_recall[d.index()])).unwrap();
        }
        let absent: Vec<String> = self.absent_classes.iter().map(|d| d.to_string()).collect();
        writeln!(s, "absent_classes = [{}]", absent.join(", ")).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "[confusion]").unwrap();
        writeln!(s, "# rows truth, columns predicted: up down stay").unwrap();
        for d in Direction::ALL {
            let r = self.confusion.counts[d.index()];
            writeln!(s, "{} = {} {} {}", d, r[0], r[1], r[2]).unwrap();
        }
        s
    }
}

/// Confusion matrix of pooled (example, market, horizon) predictions with an
/// observed target. Features use the forecasting view (future mask all
/// ones).
pub fn confusion(model: &TrainedModel, examples: &[WindowExample]) -> Result<ConfusionMatrix> {
    let parts = examples
        .par_iter()
        .map(|ex| {
            let fc = predict(model, &forecast_features(ex, &model.window))?;
            let mut cm = ConfusionMatrix::default();
            for m in 0..ex.markets {
                for k in 0..ex.f {
                    if ex.target_observed(m, k) {
                        cm.add(ex.future_label(m, k), fc.get(m, k).label);
                    }
                }
            }
            Ok(cm)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().fold(ConfusionMatrix::default(), |a, b| a.merge(b)))
}

pub fn report_from_confusion(model: &TrainedModel, cm: ConfusionMatrix, examples: usize) -> Result<EvalReport> {
    if cm.total() == 0 {
        return Err(Error::NoObservedTargets);
    }
    let recalls = cm.recalls();
    Ok(EvalReport {
        confusion: cm,
        raw_accuracy: cm.raw_accuracy(),
        balanced_accuracy: cm.balanced_accuracy(),
        per_class_recall: recalls,
        absent_classes: Direction::ALL.into_iter().filter(|d| recalls[d.index()].is_none()).collect(),
        family: model.spec.family().to_string(),
        alpha: model.alpha.value(),
        b: model.window.b,
        f: model.window.f,
        split: None,
        seed: model.spec.seed(),
        spec_digest: model.spec.digest(),
        examples,
    })
}

pub fn evaluate(model: &TrainedModel, examples: &[WindowExample]) -> Result<EvalReport> {
    let cm = confusion(model, examples)?;
    report_from_confusion(model, cm, examples.len())
}
