//! Train every model family on a synthetic panel and score them on the
//! test split.
//!
//! cargo run --release --example train_predict

use mandi::eval::evaluate;
use mandi::learners::{
    predict, train, AdaBoostParams, Alpha, ForestParams, GradBoostParams, LogRegParams, ModelSpec, StayParams,
    SvmParams,
};
use mandi::synth::{generate, SynthConfig};
use mandi::window::{build_examples, inference_features, split, SplitSpec, WindowConfig};

fn main() -> mandi::Result<()> {
    let cfg = SynthConfig {
        markets: 6,
        ..SynthConfig::default()
    };
    let (panel, _) = generate(&cfg)?;
    let window = WindowConfig::new(7, 3);
    let spec = SplitSpec {
        train_end: "2014-12-31".parse().unwrap(),
        val_end: "2015-06-30".parse().unwrap(),
        test_end: "2015-12-31".parse().unwrap(),
    };
    let parts = split(build_examples(&panel, &window)?, &spec)?;
    println!("train {} / val {} / test {} examples", parts.train.len(), parts.val.len(), parts.test.len());

    let specs = [
        ModelSpec::Stay(StayParams::default()),
        ModelSpec::LogReg(LogRegParams {
            epochs: 100,
            ..Default::default()
        }),
        ModelSpec::LinearSvm(SvmParams {
            epochs: 10,
            ..Default::default()
        }),
        ModelSpec::RandomForest(ForestParams {
            n_trees: 30,
            max_depth: 8,
            ..Default::default()
        }),
        ModelSpec::AdaBoost(AdaBoostParams {
            rounds: 30,
            ..Default::default()
        }),
        ModelSpec::GradBoost(GradBoostParams {
            rounds: 20,
            learning_rate: 0.2,
            ..Default::default()
        }),
    ];
    let alpha = Alpha::BALANCED;
    for s in &specs {
        let model = train(s, &parts.train, &window, alpha)?;
        let r = evaluate(&model, &parts.test)?;
        println!(
            "{:<14} raw {:.3}  balanced {:.3}",
            s.family(),
            r.raw_accuracy,
            r.balanced_accuracy
        );
    }

    // forecast the week after the last day of data
    let model = train(&specs[5], &parts.train, &window, alpha)?;
    let last = panel.calendar().end;
    let fc = predict(&model, &inference_features(&panel, last, &window)?)?;
    println!("\nforecast after {last}:");
    for (m, id) in panel.markets().iter().enumerate() {
        let labels: Vec<String> = (0..window.f).map(|k| fc.get(m, k).label.to_string()).collect();
        println!("  {id}: {}", labels.join(" "));
    }
    Ok(())
}
