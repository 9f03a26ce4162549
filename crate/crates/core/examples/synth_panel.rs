//! Generate a synthetic panel and compare its statistics with the
//! configuration and with the latent-state reference accuracy.
//!
//! cargo run --release --example synth_panel

use mandi::panel::missing_fraction;
use mandi::synth::{direction_counts, generate, reference_accuracy, SynthConfig};

fn main() -> mandi::Result<()> {
    let cfg = SynthConfig::default();
    let (panel, truth) = generate(&cfg)?;
    println!(
        "{} markets x {} days of {} from {}",
        panel.n_markets(),
        panel.n_days(),
        panel.commodity(),
        panel.calendar().start
    );

    let counts = direction_counts(&panel);
    let total: usize = counts.iter().sum();
    println!(
        "directions up {} / down {} / stay {}  (stay share {:.3}, stickiness {})",
        counts[0],
        counts[1],
        counts[2],
        counts[2] as f64 / total as f64,
        cfg.stickiness
    );

    let range = panel.calendar();
    let mean_missing: f64 = panel
        .markets()
        .iter()
        .map(|id| missing_fraction(&panel, id, range))
        .sum::<mandi::Result<f64>>()?
        / panel.n_markets() as f64;
    println!(
        "missing fraction {:.3} (expected {:.3})",
        mean_missing,
        cfg.expected_missing()
    );

    // first market's seasonal log-mean, sampled monthly
    let season: Vec<String> = (0..365)
        .step_by(30)
        .map(|d| format!("{:+.2}", truth.seasonal_log_mean[d] - cfg.base_price.ln()))
        .collect();
    println!("seasonal log offset, market 1, monthly: {}", season.join(" "));

    let r = reference_accuracy(&cfg, 1)?;
    println!(
        "reference: raw {:.3}, balanced {:.3}, stay prevalence {:.3}",
        r.raw, r.balanced, r.stay_prevalence
    );
    Ok(())
}
