//! Turn a small panel with gaps into window examples, flatten them and split
//! chronologically.
//!
//! cargo run --example windowing

use chrono::NaiveDate;
use mandi::panel::{AlignedPanel, DateRange};
use mandi::window::{build_examples, flatten_features, inference_features, split, SplitSpec, WindowConfig};

fn main() -> mandi::Result<()> {
    let start = NaiveDate::from_ymd_opt(2014, 12, 20).unwrap();
    let end = NaiveDate::from_ymd_opt(2015, 1, 10).unwrap();
    let calendar = DateRange::new(start, end)?;
    let days = calendar.len();
    let mut prices = Vec::new();
    for m in 0..2 {
        for d in 0..days {
            let p = 1000.0 + 10.0 * ((d * (m + 2)) % 5) as f64;
            // market b skips every sixth day, which hides two changes each time
            prices.push(if m == 1 && d % 6 == 2 { None } else { Some(p) });
        }
    }
    let panel = AlignedPanel::from_prices(vec!["a".into(), "b".into()], "onion", calendar, prices, 0.0)?;

    let cfg = WindowConfig::new(4, 2);
    let examples = build_examples(&panel, &cfg)?;
    println!("{} examples from {} days (b={}, f={})", examples.len(), days, cfg.b, cfg.f);

    let ex = &examples[0];
    println!("\nanchor {}", ex.anchor);
    for m in 0..ex.markets {
        println!(
            "  market {m}: changes {:?} mask {:?} targets {:?} observed {:?}",
            &ex.past_changes[m * cfg.b..(m + 1) * cfg.b],
            &ex.past_mask[m * cfg.b..(m + 1) * cfg.b],
            &ex.future_labels[m * cfg.f..(m + 1) * cfg.f],
            &ex.future_mask[m * cfg.f..(m + 1) * cfg.f],
        );
    }
    println!("  day of year {:?}", ex.doy);

    let fv = flatten_features(ex, &cfg);
    println!("\nlayout {} ({} values)", fv.layout.describe(), fv.values.len());
    println!("{:?}", fv.values);

    let query = inference_features(&panel, end, &cfg)?;
    println!("\ninference at {end}: future mask segment {:?}", &query.values[16..20]);

    let spec = SplitSpec {
        train_end: NaiveDate::from_ymd_opt(2014, 12, 31).unwrap(),
        val_end: NaiveDate::from_ymd_opt(2015, 1, 5).unwrap(),
        test_end: end,
    };
    let parts = split(examples, &spec)?;
    let anchors = |v: &[mandi::window::WindowExample]| v.iter().map(|e| e.anchor.to_string()).collect::<Vec<_>>();
    println!("\ntrain {:?}", anchors(&parts.train));
    println!("val   {:?}", anchors(&parts.val));
    println!("test  {:?}", anchors(&parts.test));
    Ok(())
}
