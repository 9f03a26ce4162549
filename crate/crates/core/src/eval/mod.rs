//! Pooled accuracy metrics, validation tuning, α-sweeps and trade-off curves.

mod curve;
mod metrics;
mod tune;

pub use curve::{curve_csv, curve_svg, emit_curve, CSV_HEADER};
pub use metrics::{balanced_accuracy, confusion, evaluate, objective, report_from_confusion, ConfusionMatrix, EvalReport};
pub use tune::{alpha_sweep, evaluate_part, tune, Candidate, SplitCache, SweepPoint, TuneResult};
