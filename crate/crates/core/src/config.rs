//! Run configuration: one TOML file drives every CLI command.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DedupPolicy;
use crate::learners::{Alpha, GradBoostParams, ModelSpec, StayParams};
use crate::synth::SynthConfig;
use crate::window::{SplitSpec, WindowConfig};

/// Environment variable that overrides `out_dir` (a `--out-dir` flag wins).
pub const OUT_DIR_ENV: &str = "MANDI_OUT_DIR";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    /// Raw CSV exports.
    pub inputs: Vec<PathBuf>,
    /// Optional TOML column mapping; Agmarknet headers when absent.
    pub schema: Option<PathBuf>,
    pub dedup: DedupPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    /// History lengths tried during tuning; the first one is used when a
    /// single value is needed.
    pub b: Vec<usize>,
    pub f: usize,
    pub epsilon: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection {
            b: vec![7],
            f: 7,
            epsilon: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    /// sin/cos day-of-year features instead of raw ordinals.
    pub cyclic_doy: bool,
    /// Refit the selected model on train + validation before testing.
    pub refit_with_validation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Canonical dataset; `<out_dir>/dataset.mandiset` when unset.
    pub dataset: Option<PathBuf>,
    pub commodity: String,
    /// Seeds the synthetic generator and every learner.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Class-weight trade-off used by `train`.
    pub alpha: f64,
    /// Grid used by `sweep`.
    pub alphas: Vec<f64>,
    pub window: WindowSection,
    pub split: SplitSpec,
    pub flags: Flags,
    pub ingest: IngestSection,
    /// Candidate models; `train` tunes over them, `sweep` groups them by family.
    pub models: Vec<ModelSpec>,
    pub synth: SynthConfig,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            commodity: "onion".into(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            alpha: 1.0,
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            window: WindowSection::default(),
            split: SplitSpec {
                train_end: date(2014, 12, 31),
                val_end: date(2015, 6, 30),
                test_end: date(2015, 12, 31),
            },
            flags: Flags::default(),
            ingest: IngestSection::default(),
            models: vec![
                ModelSpec::Stay(StayParams::default()),
                ModelSpec::GradBoost(GradBoostParams {
                    rounds: 20,
                    learning_rate: 0.2,
                    ..GradBoostParams::default()
                }),
            ],
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        Ok(cfg.normalized())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Push the shared settings down into the nested sections.
    pub fn normalized(mut self) -> RunConfig {
        self.synth.seed = self.seed;
        self.synth.commodity = self.commodity.clone();
        self.models = self.models.iter().map(|m| m.clone().with_seed(self.seed)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.b.is_empty() {
            return Err(Error::InvalidConfig("window.b needs at least one value".into()));
        }
        for &b in &self.window.b {
            self.window_for(b).validate()?;
        }
        self.split.validate()?;
        Alpha::new(self.alpha).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.alphas.is_empty() {
            return Err(Error::InvalidConfig("alphas needs at least one value".into()));
        }
        for &a in &self.alphas {
            Alpha::new(a).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("models needs at least one entry".into()));
        }
        for m in &self.models {
            m.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        if self.commodity.trim().is_empty() {
            return Err(Error::InvalidConfig("commodity is empty".into()));
        }
        self.synth.validate()
    }

    pub fn window_for(&self, b: usize) -> WindowConfig {
        WindowConfig {
            b,
            f: self.window.f,
            epsilon: self.window.epsilon,
            cyclic_doy: self.flags.cyclic_doy,
        }
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| self.out_dir.join("dataset.mandiset"))
    }

    /// Sorted, de-duplicated alpha grid.
    pub fn alpha_grid(&self) -> Result<Vec<Alpha>> {
        let mut v: Vec<f64> = self.alphas.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.into_iter().map(Alpha::new).collect()
    }
}
