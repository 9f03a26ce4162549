use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, evaluate, objective, report_from_confusion, EvalReport};
use crate::error::{Error, Result};
use crate::learners::{train, Alpha, ModelSpec, TrainedModel};
use crate::panel::AlignedPanel;
use crate::window::{build_examples, split, SplitSpec, Splits, WindowConfig};

/// Windowed splits of one panel, built lazily per history length `b`.
pub struct SplitCache<'a> {
    panel: &'a AlignedPanel,
    window: WindowConfig,
    spec: SplitSpec,
    by_b: BTreeMap<usize, Splits>,
}

impl<'a> SplitCache<'a> {
    /// `window.b` is ignored; every other window setting is shared.
    pub fn new(panel: &'a AlignedPanel, window: WindowConfig, spec: SplitSpec) -> Result<Self> {
        spec.validate()?;
        Ok(SplitCache {
            panel,
            window,
            spec,
            by_b: BTreeMap::new(),
        })
    }

    pub fn window(&self, b: usize) -> WindowConfig {
        WindowConfig { b, ..self.window }
    }

    pub fn split_spec(&self) -> SplitSpec {
        self.spec
    }

    pub fn prepare(&mut self, bs: &[usize]) -> Result<()> {
        for &b in bs {
            if !self.by_b.contains_key(&b) {
                let ex = build_examples(self.panel, &self.window(b))?;
                self.by_b.insert(b, split(ex, &self.spec)?);
            }
        }
        Ok(())
    }

    pub fn get(&self, b: usize) -> &Splits {
        &self.by_b[&b]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub grid_index: usize,
    pub b: usize,
    pub val_raw: f64,
    pub val_balanced: f64,
    pub objective: f64,
}

pub struct TuneResult {
    pub spec: ModelSpec,
    pub b: usize,
    pub best: Candidate,
    /// Every candidate in evaluation order (ascending b, then grid order).
    pub candidates: Vec<Candidate>,
    /// The selected model, fitted on the training split.
    pub model: TrainedModel,
}

fn check_grids(specs: &[ModelSpec], bs: &[usize]) -> Result<Vec<usize>> {
    if specs.is_empty() || bs.is_empty() {
        return Err(Error::InvalidConfig("tuning needs a non-empty model grid and b grid".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let mut sorted = bs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// Pick the (spec, b) maximizing `(1 − α)·raw + α·balanced` on validation;
/// ties go to the smaller b, then the earlier grid entry.
pub fn tune(specs: &[ModelSpec], bs: &[usize], cache: &mut SplitCache, alpha: Alpha) -> Result<TuneResult> {
    let bs = check_grids(specs, bs)?;
    cache.prepare(&bs)?;
    let jobs: Vec<(usize, usize)> = bs
        .iter()
        .flat_map(|&b| (0..specs.len()).map(move |i| (b, i)))
        .collect();
    let cache = &*cache;
    let fitted = jobs
        .par_iter()
        .map(|&(b, i)| {
            let parts = cache.get(b);
            let model = train(&specs[i], &parts.train, &cache.window(b), alpha)?;
            let cm = confusion(&model, &parts.val)?;
            if cm.total() == 0 {
                return Err(Error::NoObservedTargets);
            }
            let (raw, bal) = (cm.raw_accuracy(), cm.balanced_accuracy());
            let cand = Candidate {
                grid_index: i,
                b,
                val_raw: raw,
                val_balanced: bal,
                objective: objective(alpha, raw, bal),
            };
            Ok((cand, model))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (j, (c, _)) in fitted.iter().enumerate() {
        if c.objective > fitted[best].0.objective {
            best = j;
        }
    }
    let candidates: Vec<Candidate> = fitted.iter().map(|(c, _)| c.clone()).collect();
    let (chosen, model) = fitted.into_iter().nth(best).expect("non-empty grid");
    Ok(TuneResult {
        spec: specs[chosen.grid_index].clone(),
        b: chosen.b,
        best: chosen,
        candidates,
        model,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub family: String,
    pub spec: ModelSpec,
    pub spec_digest: String,
    pub b: usize,
    pub val_raw: f64,
    pub val_balanced: f64,
    pub test_raw: f64,
    pub test_balanced: f64,
    pub report: EvalReport,
}

/// Tune, refit and test once per α. Alphas must be sorted ascending.
pub fn alpha_sweep(
    alphas: &[Alpha],
    specs: &[ModelSpec],
    bs: &[usize],
    cache: &mut SplitCache,
    refit_with_validation: bool,
) -> Result<Vec<SweepPoint>> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("alpha grid is empty".into()));
    }
    if alphas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("alpha grid must be sorted ascending".into()));
    }
    let bs = check_grids(specs, bs)?;
    cache.prepare(&bs)?;
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let tuned = tune(specs, &bs, cache, alpha)?;
        let parts = cache.get(tuned.b);
        let model = if refit_with_validation {
            let mut both = parts.train.clone();
            both.extend(parts.val.iter().cloned());
            train(&tuned.spec, &both, &cache.window(tuned.b), alpha)?
        } else {
            tuned.model
        };
        let report = evaluate(&model, &parts.test)?.with_split(cache.split_spec());
        points.push(SweepPoint {
            alpha: alpha.value(),
            family: tuned.spec.family().to_string(),
            spec_digest: tuned.spec.digest(),
            spec: tuned.spec,
            b: tuned.b,
            val_raw: tuned.best.val_raw,
            val_balanced: tuned.best.val_balanced,
            test_raw: report.raw_accuracy,
            test_balanced: report.balanced_accuracy,
            report,
        });
    }
    Ok(points)
}

/// Evaluate a model on a split part, attaching the split boundaries.
pub fn evaluate_part(model: &TrainedModel, cache: &SplitCache, part: &[crate::window::WindowExample]) -> Result<EvalReport> {
    let cm = confusion(model, part)?;
    Ok(report_from_confusion(model, cm, part.len())?.with_split(cache.split_spec()))
}
