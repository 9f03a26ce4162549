//! Sweep alpha for gradient boosting and write the raw/balanced trade-off
//! curve.
//!
//! cargo run --release --example alpha_sweep [out_dir]

use std::path::PathBuf;

use mandi::eval::{alpha_sweep, emit_curve, SplitCache};
use mandi::learners::{Alpha, GradBoostParams, ModelSpec};
use mandi::synth::{generate, SynthConfig};
use mandi::window::{SplitSpec, WindowConfig};

fn main() -> mandi::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into()).into();
    std::fs::create_dir_all(&out).expect("create output directory");

    let cfg = SynthConfig {
        markets: 6,
        ..SynthConfig::default()
    };
    let (panel, _) = generate(&cfg)?;
    let split = SplitSpec {
        train_end: "2014-12-31".parse().unwrap(),
        val_end: "2015-06-30".parse().unwrap(),
        test_end: "2015-12-31".parse().unwrap(),
    };
    let mut cache = SplitCache::new(&panel, WindowConfig::new(7, 7), split)?;
    let specs = [ModelSpec::GradBoost(GradBoostParams {
        rounds: 15,
        learning_rate: 0.2,
        ..Default::default()
    })];
    let alphas: Vec<Alpha> = [0.0, 0.5, 1.0].into_iter().map(Alpha::new).collect::<mandi::Result<_>>()?;
    let points = alpha_sweep(&alphas, &specs, &[7], &mut cache, false)?;
    for p in &points {
        println!("alpha {:.2}: test raw {:.3}, balanced {:.3}", p.alpha, p.test_raw, p.test_balanced);
    }
    let (csv, svg) = emit_curve(&points, &out)?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
