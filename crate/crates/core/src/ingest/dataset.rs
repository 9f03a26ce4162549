//! Canonical dataset and its line-oriented file format.
//!
//! ```text
//! mandiset v1 <commodity>
//! # source: <file name>            (zero or more)
//! # ingested-at: <timestamp>       (optional)
//! # observations: <count>
//! <market_id>\t<YYYY-MM-DD>\t<price, 2 decimals>\t<arrivals or ->
//! ```
//!
//! Every line ends with `\n`. The observation count lets a reader detect a
//! file cut short on a line boundary.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::csv::RawRecord;
use crate::error::{Error, Result};
use crate::panel::{align, AlignedPanel, DateRange, PriceObservation, PriceSeries};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "mandiset";

/// How several same-day records of one market collapse into one price.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupPolicy {
    /// Arrivals-weighted mean of modal prices; plain mean when any record
    /// lacks arrivals or total arrivals are zero.
    #[default]
    ArrivalsWeightedMean,
    Mean,
    Median,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    pub ingested_at: Option<String>,
    pub format_version: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalDataset {
    commodity: String,
    series: Vec<PriceSeries>,
    provenance: Provenance,
}

impl CanonicalDataset {
    pub fn new(commodity: impl Into<String>, series: Vec<PriceSeries>, provenance: Provenance) -> Result<Self> {
        let commodity = commodity.into();
        let mut seen = HashSet::new();
        for s in &series {
            if !seen.insert(s.market_id().to_string()) {
                return Err(Error::DuplicateMarket(s.market_id().to_string()));
            }
            if s.is_empty() {
                return Err(Error::InvalidInput(format!("series `{}` is empty", s.market_id())));
            }
            if s.commodity() != commodity {
                return Err(Error::InvalidInput(format!(
                    "series `{}` is `{}`, dataset is `{commodity}`",
                    s.market_id(),
                    s.commodity()
                )));
            }
        }
        Ok(CanonicalDataset {
            commodity,
            series,
            provenance,
        })
    }

    /// Dataset holding the observed prices of a panel (markets with no
    /// observations are dropped).
    pub fn from_panel(panel: &AlignedPanel, provenance: Provenance) -> Result<Self> {
        let series = panel.to_series().into_iter().filter(|s| !s.is_empty()).collect();
        CanonicalDataset::new(panel.commodity(), series, provenance)
    }

    pub fn commodity(&self) -> &str {
        &self.commodity
    }

    pub fn series(&self) -> &[PriceSeries] {
        &self.series
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// First and last observation dates across all markets.
    pub fn date_span(&self) -> DateRange {
        let first = self.series.iter().filter_map(|s| s.observations().first()).map(|o| o.date).min();
        let last = self.series.iter().filter_map(|s| s.observations().last()).map(|o| o.date).max();
        // non-empty by construction
        DateRange {
            start: first.unwrap(),
            end: last.unwrap(),
        }
    }

    /// Align onto `range`, or onto the dataset's own span when `None`.
    pub fn to_panel(&self, range: Option<DateRange>) -> Result<AlignedPanel> {
        align(&self.series, range.unwrap_or_else(|| self.date_span()))
    }
}

fn round_cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn reduce_day(mut group: Vec<(f64, Option<f64>)>, policy: DedupPolicy) -> (f64, Option<f64>) {
    // canonical order so floating sums do not depend on input order
    group.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.unwrap_or(-1.0).total_cmp(&b.1.unwrap_or(-1.0))));
    let n = group.len() as f64;
    let present: Vec<f64> = group.iter().filter_map(|g| g.1).collect();
    let arrivals = if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>())
    };
    let mean = || group.iter().map(|g| g.0).sum::<f64>() / n;
    let price = match policy {
        DedupPolicy::ArrivalsWeightedMean => {
            let all_known = present.len() == group.len();
            let total: f64 = present.iter().sum();
            if all_known && total > 0.0 {
                group.iter().map(|g| g.0 * g.1.unwrap()).sum::<f64>() / total
            } else {
                mean()
            }
        }
        DedupPolicy::Mean => mean(),
        DedupPolicy::Median => {
            let k = group.len();
            if k % 2 == 1 {
                group[k / 2].0
            } else {
                (group[k / 2 - 1].0 + group[k / 2].0) / 2.0
            }
        }
    };
    (round_cents(price), arrivals)
}

/// Filter records to one commodity, key them by market, and collapse
/// same-day duplicates. Markets come out sorted by id, observations by date.
pub fn build_dataset(records: &[RawRecord], commodity: &str, policy: DedupPolicy) -> Result<CanonicalDataset> {
    let wanted = commodity.trim();
    let mut groups: BTreeMap<&str, BTreeMap<NaiveDate, Vec<(f64, Option<f64>)>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.commodity.trim().eq_ignore_ascii_case(wanted)) {
        groups
            .entry(r.market.as_str())
            .or_default()
            .entry(r.date)
            .or_default()
            .push((r.modal_price, r.arrivals));
    }
    if groups.is_empty() {
        return Err(Error::NoRecords(wanted.to_string()));
    }
    let series = groups
        .into_iter()
        .map(|(market, days)| {
            let observations = days
                .into_iter()
                .map(|(date, group)| {
                    let (price, arrivals) = reduce_day(group, policy);
                    PriceObservation { date, price, arrivals }
                })
                .collect();
            PriceSeries::new(market, wanted, observations)
        })
        .collect::<Result<Vec<_>>>()?;
    CanonicalDataset::new(
        wanted,
        series,
        Provenance {
            format_version: FORMAT_VERSION,
            ..Provenance::default()
        },
    )
}

fn check_field(what: &str, value: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidInput(format!("{what} {value:?} contains a tab or newline")));
    }
    Ok(())
}

pub fn to_canonical_string(ds: &CanonicalDataset) -> Result<String> {
    check_field("commodity", &ds.commodity)?;
    let total: usize = ds.series.iter().map(|s| s.observations().len()).sum();
    let mut out = String::new();
    writeln!(out, "{MAGIC} v{FORMAT_VERSION} {}", ds.commodity).unwrap();
    for src in &ds.provenance.sources {
        check_field("source", src)?;
        writeln!(out, "# source: {src}").unwrap();
    }
    if let Some(ts) = &ds.provenance.ingested_at {
        check_field("timestamp", ts)?;
        writeln!(out, "# ingested-at: {ts}").unwrap();
    }
    writeln!(out, "# observations: {total}").unwrap();
    for s in &ds.series {
        check_field("market id", s.market_id())?;
        for o in s.observations() {
            write!(out, "{}\t{}\t{:.2}\t", s.market_id(), o.date.format("%Y-%m-%d"), o.price).unwrap();
            match o.arrivals {
                Some(a) => writeln!(out, "{a}").unwrap(),
                None => out.push_str("-\n"),
            }
        }
    }
    Ok(out)
}

pub fn from_canonical_str(text: &str) -> Result<CanonicalDataset> {
    if !text.ends_with('\n') {
        return Err(Error::Truncated("file does not end with a newline".into()));
    }
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Truncated("empty file".into()))?;
    let mut parts = header.splitn(3, ' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::InvalidInput(format!("not a {MAGIC} file: {header:?}")));
    }
    let version = parts.next().unwrap_or("");
    let expected = format!("v{FORMAT_VERSION}");
    if version != expected {
        return Err(Error::VersionMismatch {
            expected,
            found: version.to_string(),
        });
    }
    let commodity = parts
        .next()
        .filter(|c| !c.is_empty())
        .ok_or_else(|| Error::Truncated("header lacks a commodity".into()))?
        .to_string();

    let mut provenance = Provenance {
        format_version: FORMAT_VERSION,
        ..Provenance::default()
    };
    let mut declared = None;
    let mut order: Vec<String> = Vec::new();
    let mut by_market: BTreeMap<String, Vec<PriceObservation>> = BTreeMap::new();
    let mut count = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some(v) = meta.strip_prefix("source: ") {
                provenance.sources.push(v.to_string());
            } else if let Some(v) = meta.strip_prefix("ingested-at: ") {
                provenance.ingested_at = Some(v.to_string());
            } else if let Some(v) = meta.strip_prefix("observations: ") {
                declared = Some(v.parse::<usize>().map_err(|_| Error::Truncated(format!("line {lineno}: bad count")))?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Truncated(format!("line {lineno}: expected 4 fields, found {}", fields.len())));
        }
        let bad = |what: &str| Error::Truncated(format!("line {lineno}: bad {what}"));
        let date = NaiveDate::parse_from_str(fields[1], "%Y-%m-%d").map_err(|_| bad("date"))?;
        let price = fields[2].parse::<f64>().map_err(|_| bad("price"))?;
        let arrivals = match fields[3] {
            "-" => None,
            v => Some(v.parse::<f64>().map_err(|_| bad("arrivals"))?),
        };
        let market = fields[0].to_string();
        if !by_market.contains_key(&market) {
            order.push(market.clone());
        }
        by_market.entry(market).or_default().push(PriceObservation { date, price, arrivals });
        count += 1;
    }
    match declared {
        Some(n) if n == count => {}
        Some(n) => return Err(Error::Truncated(format!("declared {n} observations, found {count}"))),
        None => return Err(Error::Truncated("missing observation count".into())),
    }
    let series = order
        .into_iter()
        .map(|m| {
            let obs = by_market.remove(&m).unwrap();
            PriceSeries::new(m, commodity.clone(), obs)
        })
        .collect::<Result<Vec<_>>>()?;
    CanonicalDataset::new(commodity, series, provenance)
}

pub fn save_dataset(ds: &CanonicalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_canonical_string(ds)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<CanonicalDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_canonical_str(&text)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rec(market: &str, commodity: &str, day: u32, modal: f64, arrivals: Option<f64>) -> RawRecord {
        RawRecord {
            date: NaiveDate::from_ymd_opt(2015, 3, day).unwrap(),
            state: None,
            district: None,
            market: market.into(),
            commodity: commodity.into(),
            variety: None,
            min_price: None,
            max_price: None,
            modal_price: modal,
            arrivals,
        }
    }

    #[test]
    fn same_day_records_use_arrivals_weighting() {
        let records = vec![rec("a", "Onion", 1, 1000.0, Some(2.0)), rec("a", "Onion", 1, 1300.0, Some(1.0))];
        let ds = build_dataset(&records, "Onion", DedupPolicy::default()).unwrap();
        let obs = ds.series()[0].observations();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].price, 1100.0);
        assert_eq!(obs[0].arrivals, Some(3.0));
    }

    #[test]
    fn weighting_falls_back_to_mean_without_arrivals() {
        let records = vec![rec("a", "Onion", 1, 1000.0, Some(2.0)), rec("a", "Onion", 1, 1300.0, None)];
        let ds = build_dataset(&records, "Onion", DedupPolicy::default()).unwrap();
        assert_eq!(ds.series()[0].observations()[0].price, 1150.0);
    }

    #[test]
    fn filters_commodity() {
        let records = vec![
            rec("a", "Onion", 1, 1000.0, None),
            rec("a", "Potato", 1, 700.0, None),
            rec("b", "Potato", 2, 710.0, None),
        ];
        let ds = build_dataset(&records, "Onion", DedupPolicy::Mean).unwrap();
        assert_eq!(ds.series().len(), 1);
        assert_eq!(ds.series()[0].observations()[0].price, 1000.0);
        assert!(matches!(
            build_dataset(&records, "Tomato", DedupPolicy::Mean),
            Err(Error::NoRecords(_))
        ));
    }

    /// Naive group-then-reduce: buckets in a HashMap, plain loops, no sorting
    /// inside the reduction.
    fn naive_reference(records: &[RawRecord], commodity: &str) -> BTreeMap<(String, NaiveDate), f64> {
        let mut buckets: HashMap<(String, NaiveDate), Vec<&RawRecord>> = HashMap::new();
        for r in records {
            if r.commodity == commodity {
                buckets.entry((r.market.clone(), r.date)).or_default().push(r);
            }
        }
        buckets
            .into_iter()
            .map(|(k, rs)| {
                let weighted = rs.iter().all(|r| r.arrivals.is_some())
                    && rs.iter().map(|r| r.arrivals.unwrap()).sum::<f64>() > 0.0;
                let v = if weighted {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for r in &rs {
                        num += r.modal_price * r.arrivals.unwrap();
                        den += r.arrivals.unwrap();
                    }
                    num / den
                } else {
                    rs.iter().map(|r| r.modal_price).sum::<f64>() / rs.len() as f64
                };
                (k, v)
            })
            .collect()
    }

    #[test]
    fn randomized_records_match_naive_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..60);
            let mut records: Vec<RawRecord> = (0..n)
                .map(|_| {
                    let market = ["a", "b", "c"][rng.random_range(0..3)];
                    let commodity = if rng.random_bool(0.8) { "Onion" } else { "Garlic" };
                    let arrivals = if rng.random_bool(0.8) {
                        Some(rng.random_range(0..20) as f64 * 0.5)
                    } else {
                        None
                    };
                    rec(market, commodity, rng.random_range(1..6), rng.random_range(500..2000) as f64, arrivals)
                })
                .collect();
            let reference = naive_reference(&records, "Onion");
            let built = match build_dataset(&records, "Onion", DedupPolicy::default()) {
                Ok(ds) => ds,
                Err(Error::NoRecords(_)) => {
                    assert!(reference.is_empty());
                    continue;
                }
                Err(e) => panic!("{e}"),
            };
            let mut flat = BTreeMap::new();
            for s in built.series() {
                for o in s.observations() {
                    flat.insert((s.market_id().to_string(), o.date), o.price);
                }
            }
            assert_eq!(flat.len(), reference.len());
            for (k, v) in &reference {
                assert!((flat[k] - v).abs() <= 0.005 + 1e-9, "{k:?}: {} vs {v}", flat[k]);
            }
            // input order does not matter
            records.shuffle(&mut rng);
            assert_eq!(build_dataset(&records, "Onion", DedupPolicy::default()).unwrap(), built);
        }
    }

    fn sample_dataset() -> CanonicalDataset {
        let records = vec![
            rec("Cuttack", "Onion", 1, 1000.0, Some(2.5)),
            rec("Cuttack", "Onion", 2, 1010.0, None),
            rec("Kendrapara", "Onion", 1, 990.0, Some(1.0)),
        ];
        build_dataset(&records, "Onion", DedupPolicy::default()).unwrap().with_provenance(Provenance {
            sources: vec!["odisha.csv".into()],
            ingested_at: Some("2016-07-03T00:00:00Z".into()),
            format_version: FORMAT_VERSION,
        })
    }

    #[test]
    fn canonical_text_layout() {
        let text = to_canonical_string(&sample_dataset()).unwrap();
        assert_eq!(
            text,
            "mandiset v1 Onion\n# source: odisha.csv\n# ingested-at: 2016-07-03T00:00:00Z\n# observations: 3\n\
             Cuttack\t2015-03-01\t1000.00\t2.5\nCuttack\t2015-03-02\t1010.00\t-\nKendrapara\t2015-03-01\t990.00\t1\n"
        );
    }

    #[test]
    fn round_trip_through_file() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("onion.mandiset");
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn version_and_truncation_errors() {
        let text = to_canonical_string(&sample_dataset()).unwrap();
        let v99 = text.replacen("mandiset v1", "mandiset v99", 1);
        match from_canonical_str(&v99) {
            Err(Error::VersionMismatch { expected, found }) => {
                assert_eq!(expected, "v1");
                assert_eq!(found, "v99");
            }
            other => panic!("unexpected {other:?}"),
        }
        // cut mid-line
        assert!(matches!(from_canonical_str(&text[..text.len() - 3]), Err(Error::Truncated(_))));
        // cut on a line boundary
        let last_line_start = text[..text.len() - 1].rfind('\n').unwrap() + 1;
        assert!(matches!(from_canonical_str(&text[..last_line_start]), Err(Error::Truncated(_))));
    }

    fn arb_dataset() -> impl Strategy<Value = CanonicalDataset> {
        let obs = proptest::collection::btree_map(0u64..400, (1u32..500_000, proptest::option::of(0u32..10_000)), 1..20);
        proptest::collection::vec(obs, 1..5).prop_map(|markets| {
            let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
            let series = markets
                .into_iter()
                .enumerate()
                .map(|(i, days)| {
                    let observations = days
                        .into_iter()
                        .map(|(d, (cents, arr))| PriceObservation {
                            date: start + chrono::Days::new(d),
                            price: cents as f64 / 100.0,
                            arrivals: arr.map(|a| a as f64 / 8.0),
                        })
                        .collect();
                    PriceSeries::new(format!("market {i}"), "Onion", observations).unwrap()
                })
                .collect();
            CanonicalDataset::new("Onion", series, Provenance { format_version: FORMAT_VERSION, ..Default::default() })
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn save_load_save_is_stable(ds in arb_dataset()) {
            let first = to_canonical_string(&ds).unwrap();
            let loaded = from_canonical_str(&first).unwrap();
            prop_assert_eq!(&loaded, &ds);
            prop_assert_eq!(to_canonical_string(&loaded).unwrap(), first);
        }
    }
}
