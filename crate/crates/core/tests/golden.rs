//! Byte-for-byte comparisons against checked-in files. Set `UPDATE_GOLDEN=1`
//! to rewrite them after an intended format change.

use std::path::PathBuf;

use mandi::eval::{curve_csv, curve_svg, ConfusionMatrix, EvalReport, SweepPoint};
use mandi::ingest::{build_dataset, from_canonical_str, parse_csv, to_canonical_string, DedupPolicy, Schema};
use mandi::learners::{GradBoostParams, ModelSpec, StayParams};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden copy");
}

fn point(alpha: f64, spec: ModelSpec, raw: f64, bal: f64) -> SweepPoint {
    let report = EvalReport {
        confusion: ConfusionMatrix::default(),
        raw_accuracy: raw,
        balanced_accuracy: bal,
        per_class_recall: [None; 3],
        absent_classes: vec![],
        family: spec.family().into(),
        alpha,
        b: 7,
        f: 7,
        split: None,
        seed: 0,
        spec_digest: spec.digest(),
        examples: 0,
    };
    SweepPoint {
        alpha,
        family: spec.family().into(),
        spec_digest: spec.digest(),
        spec,
        b: 7,
        val_raw: raw + 0.01,
        val_balanced: bal - 0.01,
        test_raw: raw,
        test_balanced: bal,
        report,
    }
}

fn points() -> Vec<SweepPoint> {
    let gb = ModelSpec::GradBoost(GradBoostParams::default());
    let stay = ModelSpec::Stay(StayParams::default());
    let curve = [(0.0, 0.637, 0.366), (0.25, 0.61, 0.41), (0.5, 0.58, 0.45), (0.75, 0.54, 0.49), (1.0, 0.49, 0.52)];
    let mut v: Vec<SweepPoint> = curve.iter().map(|&(a, r, b)| point(a, gb.clone(), r, b)).collect();
    v.extend([0.0, 1.0].map(|a| point(a, stay.clone(), 0.605, 1.0 / 3.0)));
    v
}

#[test]
fn curve_csv_matches_golden() {
    check("curve.csv", &curve_csv(&points()));
}

#[test]
fn curve_svg_matches_golden() {
    check("curve.svg", &curve_svg(&points()));
}

#[test]
fn canonical_dataset_matches_golden_and_round_trips() {
    let raw = std::fs::read(golden("agmarknet_sample.csv")).unwrap();
    let (records, issues) = parse_csv(&raw, &Schema::agmarknet()).unwrap();
    assert_eq!(issues.len(), 1);
    let ds = build_dataset(&records, "Onion", DedupPolicy::ArrivalsWeightedMean).unwrap();
    let text = to_canonical_string(&ds).unwrap();
    check("onion.mandiset", &text);
    let back = from_canonical_str(&text).unwrap();
    assert_eq!(to_canonical_string(&back).unwrap(), text);
}
