//! Explain a forest forecast by the past windows that share its leaves.
//!
//! cargo run --release --example explain_forecast

use mandi::learners::{explain, predict, train, Alpha, ForestParams, ModelSpec};
use mandi::synth::{generate, SynthConfig};
use mandi::window::{build_examples, inference_features, WindowConfig};

fn main() -> mandi::Result<()> {
    let cfg = SynthConfig {
        markets: 4,
        years: 3,
        ..SynthConfig::default()
    };
    let (panel, _) = generate(&cfg)?;
    let window = WindowConfig::new(7, 3);
    let examples = build_examples(&panel, &window)?;
    let cutoff = "2014-06-30".parse().unwrap();
    let history: Vec<_> = examples.into_iter().filter(|e| e.last_target() <= cutoff).collect();

    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 50,
        max_depth: 6,
        ..Default::default()
    });
    let mut model = train(&spec, &history, &window, Alpha::BALANCED)?;
    model.markets = panel.markets().to_vec();

    let anchor = "2014-10-15".parse().unwrap();
    let query = inference_features(&panel, anchor, &window)?;
    let (market, horizon) = (0, 0);
    let fc = predict(&model, &query)?.get(market, horizon);
    println!(
        "{} on the day after {anchor}: {} (scores {:.2?})",
        model.markets[market], fc.label, fc.scores
    );
    println!("\nmost similar past windows:");
    for e in explain(&model, &query, market, horizon, 5)? {
        let outcome = e.outcome.map_or("missing".into(), |d| d.to_string());
        println!("  {}  similarity {:.3}  next day was {outcome}", e.anchor, e.similarity);
    }
    Ok(())
}
