//! Sliding-window examples over an aligned panel.
//!
//! For an anchor day `d`, an example holds the last `b` days of changes for
//! every market (missing changes zero-filled, with a mask), the direction
//! labels of the next `f` days (missing labels filled with Stay, with a mask
//! that is revealed to the classifier), and the day-of-year of each past day.

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{direction_of, AlignedPanel, Direction};

/// Version tag of the flat feature layout produced by [`flatten_features`].
pub const LAYOUT_VERSION: &str = "flat-v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    /// Past days fed to the classifier.
    pub b: usize,
    /// Horizon days to forecast.
    pub f: usize,
    /// Stay dead-band applied to target changes.
    #[serde(default)]
    pub epsilon: f64,
    /// Encode day-of-year as sin/cos pairs instead of raw ordinals.
    #[serde(default)]
    pub cyclic_doy: bool,
}

impl WindowConfig {
    pub fn new(b: usize, f: usize) -> Self {
        WindowConfig {
            b,
            f,
            epsilon: 0.0,
            cyclic_doy: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.f == 0 {
            return Err(Error::InvalidConfig(format!(
                "window needs b >= 1 and f >= 1, got b={} f={}",
                self.b, self.f
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Identifies the exact shape and encoding of a feature vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub version: String,
    pub markets: usize,
    pub b: usize,
    pub f: usize,
}

impl FeatureLayout {
    pub fn new(markets: usize, cfg: &WindowConfig) -> Self {
        let version = if cfg.cyclic_doy {
            format!("{LAYOUT_VERSION}-cyclic")
        } else {
            LAYOUT_VERSION.to_string()
        };
        FeatureLayout {
            version,
            markets,
            b: cfg.b,
            f: cfg.f,
        }
    }

    pub fn cyclic(&self) -> bool {
        self.version.ends_with("-cyclic")
    }

    /// `2·M·b + M·f + b` (or `+ 2b` with cyclic day-of-year).
    pub fn len(&self) -> usize {
        let doy = if self.cyclic() { 2 * self.b } else { self.b };
        2 * self.markets * self.b + self.markets * self.f + doy
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of the future-mask segment.
    pub fn future_mask_offset(&self) -> usize {
        2 * self.markets * self.b
    }

    pub fn describe(&self) -> String {
        format!("{}/M={}/b={}/f={}", self.version, self.markets, self.b, self.f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub layout: FeatureLayout,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowExample {
    /// Last day of the past window.
    pub anchor: NaiveDate,
    pub markets: usize,
    pub b: usize,
    pub f: usize,
    /// `M × b`, row-major by market, oldest day first.
    pub past_changes: Vec<f64>,
    pub past_mask: Vec<bool>,
    /// `M × f`, row-major by market, horizon 1 first.
    pub future_mask: Vec<bool>,
    pub future_labels: Vec<Direction>,
    /// Day-of-year of each past-window day.
    pub doy: Vec<u16>,
}

impl WindowExample {
    pub fn past_change(&self, market: usize, j: usize) -> f64 {
        self.past_changes[market * self.b + j]
    }

    pub fn future_label(&self, market: usize, k: usize) -> Direction {
        self.future_labels[market * self.f + k]
    }

    pub fn target_observed(&self, market: usize, k: usize) -> bool {
        self.future_mask[market * self.f + k]
    }

    /// Date of the last forecast target.
    pub fn last_target(&self) -> NaiveDate {
        self.anchor + Days::new(self.f as u64)
    }
}

fn build_one(panel: &AlignedPanel, anchor: usize, cfg: &WindowConfig, with_future: bool) -> WindowExample {
    let m_count = panel.n_markets();
    let (b, f) = (cfg.b, cfg.f);
    let first = anchor + 1 - b;
    let mut past_changes = Vec::with_capacity(m_count * b);
    let mut past_mask = Vec::with_capacity(m_count * b);
    let mut future_mask = Vec::with_capacity(m_count * f);
    let mut future_labels = Vec::with_capacity(m_count * f);
    for m in 0..m_count {
        for d in first..=anchor {
            let c = panel.change(m, d);
            past_changes.push(c.unwrap_or(0.0));
            past_mask.push(c.is_some());
        }
        for k in 1..=f {
            let target = if with_future { panel.change(m, anchor + k) } else { None };
            future_mask.push(target.is_some());
            future_labels.push(target.map_or(Direction::Stay, |c| direction_of(c, cfg.epsilon)));
        }
    }
    WindowExample {
        anchor: panel.date_at(anchor),
        markets: m_count,
        b,
        f,
        past_changes,
        past_mask,
        future_mask,
        future_labels,
        doy: (first..=anchor).map(|d| panel.day_of_year(d)).collect(),
    }
}

/// One example per anchor with `b` change-days behind it and `f` days ahead,
/// in anchor order with stride 1.
pub fn build_examples(panel: &AlignedPanel, cfg: &WindowConfig) -> Result<Vec<WindowExample>> {
    cfg.validate()?;
    let days = panel.n_days();
    let needed = cfg.b + cfg.f + 1;
    if days < needed {
        return Err(Error::CalendarTooShort { days, needed });
    }
    // change grid starts at calendar day 1
    let anchors = cfg.b..days - cfg.f;
    Ok(anchors.into_par_iter().map(|a| build_one(panel, a, cfg, true)).collect())
}

fn push_doy(out: &mut Vec<f64>, doy: &[u16], cyclic: bool) {
    if cyclic {
        let angle = |d: u16| 2.0 * std::f64::consts::PI * d as f64 / 365.25;
        out.extend(doy.iter().map(|&d| angle(d).sin()));
        out.extend(doy.iter().map(|&d| angle(d).cos()));
    } else {
        out.extend(doy.iter().map(|&d| d as f64));
    }
}

fn flatten(ex: &WindowExample, cfg: &WindowConfig, future_mask: impl Iterator<Item = bool>) -> FeatureVector {
    let layout = FeatureLayout::new(ex.markets, cfg);
    let mut values = Vec::with_capacity(layout.len());
    values.extend_from_slice(&ex.past_changes);
    values.extend(ex.past_mask.iter().map(|&m| if m { 1.0 } else { 0.0 }));
    values.extend(future_mask.map(|m| if m { 1.0 } else { 0.0 }));
    push_doy(&mut values, &ex.doy, cfg.cyclic_doy);
    debug_assert_eq!(values.len(), layout.len());
    FeatureVector { layout, values }
}

/// `[past changes M·b] ++ [past mask M·b] ++ [future mask M·f] ++ [day-of-year b]`.
pub fn flatten_features(ex: &WindowExample, cfg: &WindowConfig) -> FeatureVector {
    flatten(ex, cfg, ex.future_mask.iter().copied())
}

/// The forecasting-time view of an example: past segments as in
/// [`flatten_features`], future mask all ones.
pub fn forecast_features(ex: &WindowExample, cfg: &WindowConfig) -> FeatureVector {
    flatten(ex, cfg, std::iter::repeat_n(true, ex.future_mask.len()))
}

/// Features for forecasting from `anchor`; reads nothing after the anchor.
pub fn inference_features(panel: &AlignedPanel, anchor: NaiveDate, cfg: &WindowConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let Some(a) = panel.day_index(anchor) else {
        if anchor < panel.calendar().start {
            return Err(Error::AnchorTooEarly { anchor, needed: cfg.b });
        }
        return Err(Error::InvalidInput(format!(
            "anchor {anchor} is after the panel calendar ending {}",
            panel.calendar().end
        )));
    };
    if a < cfg.b {
        return Err(Error::AnchorTooEarly { anchor, needed: cfg.b });
    }
    let ex = build_one(panel, a, cfg, false);
    Ok(forecast_features(&ex, cfg))
}

/// Chronological split boundaries (inclusive end dates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_end: NaiveDate,
    pub val_end: NaiveDate,
    pub test_end: NaiveDate,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_end < self.val_end && self.val_end < self.test_end) {
            return Err(Error::InvalidConfig(format!(
                "split boundaries must increase: {} < {} < {}",
                self.train_end, self.val_end, self.test_end
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitSpec {
    /// Part owning an example whose last target falls on `last_target`;
    /// `None` past `test_end`.
    pub fn part_of(&self, last_target: NaiveDate) -> Option<SplitPart> {
        if last_target <= self.train_end {
            Some(SplitPart::Train)
        } else if last_target <= self.val_end {
            Some(SplitPart::Validation)
        } else if last_target <= self.test_end {
            Some(SplitPart::Test)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Splits {
    pub train: Vec<WindowExample>,
    pub val: Vec<WindowExample>,
    pub test: Vec<WindowExample>,
}

/// Assign each example by its last target day, so a straddling window lands
/// in the later split and no training target lies past `train_end`.
pub fn split(examples: Vec<WindowExample>, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut out = Splits::default();
    for ex in examples {
        match spec.part_of(ex.last_target()) {
            Some(SplitPart::Train) => out.train.push(ex),
            Some(SplitPart::Validation) => out.val.push(ex),
            Some(SplitPart::Test) => out.test.push(ex),
            None => {}
        }
    }
    for (name, part) in [("train", &out.train), ("validation", &out.val), ("test", &out.test)] {
        if part.is_empty() {
            log::warn!("{name} split is empty");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::panel::DateRange;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn panel(prices: Vec<Vec<Option<f64>>>, start: NaiveDate) -> AlignedPanel {
        let days = prices[0].len();
        let range = DateRange::new(start, start + Days::new(days as u64 - 1)).unwrap();
        let markets = (0..prices.len()).map(|i| format!("m{i}")).collect();
        AlignedPanel::from_prices(markets, "Onion", range, prices.concat(), 0.0).unwrap()
    }

    #[test]
    fn fully_observed_counts_and_anchors() {
        // 9 calendar days = 8 change days
        let prices = vec![(0..9).map(|d| Some(100.0 + (d % 3) as f64)).collect()];
        let p = panel(prices, date(2015, 1, 1));
        let ex = build_examples(&p, &WindowConfig::new(4, 2)).unwrap();
        assert_eq!(ex.len(), 3);
        // change-grid positions 4, 5, 6 (1-based) are calendar days 5, 6, 7
        let anchors: Vec<_> = ex.iter().map(|e| e.anchor).collect();
        assert_eq!(anchors, vec![date(2015, 1, 5), date(2015, 1, 6), date(2015, 1, 7)]);
        assert_eq!(ex[0].doy, vec![2, 3, 4, 5]);
    }

    #[test]
    fn missing_past_is_zero_filled_and_missing_future_is_stay() {
        let row = vec![Some(100.0), Some(110.0), Some(120.0), None, Some(90.0), Some(80.0), Some(85.0), None, Some(70.0), Some(60.0)];
        let p = panel(vec![row], date(2015, 6, 1));
        let ex = build_examples(&p, &WindowConfig::new(4, 2)).unwrap();
        // anchor at calendar day 4: past days 1..=4, day 3 (missing price) and 4 (prev missing) masked
        let first = &ex[0];
        assert_eq!(first.past_mask, vec![true, true, false, false]);
        assert_eq!(first.past_changes[2], 0.0);
        assert_eq!(first.past_changes[3], 0.0);
        // anchor at calendar day 5: targets day 6 (85 vs 80: up) and day 7 (missing)
        let ex6 = ex.iter().find(|e| e.anchor == date(2015, 6, 6)).unwrap();
        assert_eq!(ex6.future_mask, vec![true, false]);
        assert_eq!(ex6.future_labels, vec![Direction::Up, Direction::Stay]);
    }

    #[test]
    fn too_short_calendar_is_rejected() {
        let p = panel(vec![vec![Some(1.0); 6]], date(2015, 1, 1));
        assert!(matches!(
            build_examples(&p, &WindowConfig::new(4, 2)),
            Err(Error::CalendarTooShort { days: 6, needed: 7 })
        ));
    }

    #[test]
    fn layout_length_and_segments() {
        let layout = FeatureLayout::new(3, &WindowConfig::new(4, 2));
        assert_eq!(layout.len(), 34);
        let prices = vec![(0..12).map(|d| Some(100.0 + d as f64)).collect::<Vec<_>>(); 3];
        let p = panel(prices, date(2015, 1, 1));
        let cfg = WindowConfig::new(4, 2);
        let ex = build_examples(&p, &cfg).unwrap();
        let v = flatten_features(&ex[0], &cfg);
        assert_eq!(v.values.len(), 34);
        assert!(v.values[12..24].iter().all(|&x| x == 1.0));
        assert!(v.values[24..30].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn two_market_vector_by_hand() {
        // market 0: 100, 110, 99, 99 ; market 1: 50, -, 60, 66
        let p = panel(
            vec![
                vec![Some(100.0), Some(110.0), Some(99.0), Some(99.0)],
                vec![Some(50.0), None, Some(60.0), Some(66.0)],
            ],
            date(2016, 2, 27),
        );
        let cfg = WindowConfig::new(2, 1);
        let ex = build_examples(&p, &cfg).unwrap();
        assert_eq!(ex.len(), 1);
        let v = flatten_features(&ex[0], &cfg);
        let c01 = (110.0 - 100.0) / 100.0;
        let c02 = (99.0 - 110.0) / 110.0;
        let expected = vec![
            c01, c02, 0.0, 0.0, // past changes
            1.0, 1.0, 0.0, 0.0, // past mask
            1.0, 1.0, // future mask
            59.0, 60.0, // day of year: Feb 28, Feb 29
        ];
        assert_eq!(v.values, expected);
        assert_eq!(ex[0].future_labels, vec![Direction::Stay, Direction::Up]);
    }

    #[test]
    fn cyclic_layout_is_longer_and_tagged() {
        let mut cfg = WindowConfig::new(4, 2);
        cfg.cyclic_doy = true;
        let layout = FeatureLayout::new(3, &cfg);
        assert_eq!(layout.len(), 38);
        assert_eq!(layout.version, "flat-v1-cyclic");
        assert_ne!(layout, FeatureLayout::new(3, &WindowConfig::new(4, 2)));
    }

    #[test]
    fn inference_matches_examples_on_past_segments() {
        let prices = vec![
            (0..20).map(|d| if d % 5 == 3 { None } else { Some(100.0 + (d * 7 % 5) as f64) }).collect::<Vec<_>>(),
            (0..20).map(|d| Some(80.0 + (d % 2) as f64)).collect(),
        ];
        let p = panel(prices, date(2015, 12, 25));
        let cfg = WindowConfig::new(3, 2);
        let layout = FeatureLayout::new(2, &cfg);
        let off = layout.future_mask_offset();
        for ex in build_examples(&p, &cfg).unwrap() {
            let full = flatten_features(&ex, &cfg);
            let inf = inference_features(&p, ex.anchor, &cfg).unwrap();
            assert_eq!(inf.values[..off], full.values[..off]);
            assert!(inf.values[off..off + 4].iter().all(|&x| x == 1.0));
            assert_eq!(inf.values[off + 4..], full.values[off + 4..]);
        }
        // last calendar day works, too-early anchor does not
        assert!(inference_features(&p, p.calendar().end, &cfg).is_ok());
        assert!(matches!(
            inference_features(&p, date(2015, 12, 27), &cfg),
            Err(Error::AnchorTooEarly { .. })
        ));
    }

    fn example_at(anchor: NaiveDate, f: usize) -> WindowExample {
        WindowExample {
            anchor,
            markets: 1,
            b: 1,
            f,
            past_changes: vec![0.0],
            past_mask: vec![false],
            future_mask: vec![false; f],
            future_labels: vec![Direction::Stay; f],
            doy: vec![1],
        }
    }

    fn default_split() -> SplitSpec {
        SplitSpec {
            train_end: date(2014, 12, 31),
            val_end: date(2015, 12, 31),
            test_end: date(2016, 12, 31),
        }
    }

    #[test]
    fn straddling_window_goes_to_validation() {
        let s = split(vec![example_at(date(2014, 12, 29), 7)], &default_split()).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (0, 1, 0));
        let all_2013: Vec<_> = (0..300).map(|d| example_at(date(2013, 1, 1) + Days::new(d), 7)).collect();
        let s = split(all_2013, &default_split()).unwrap();
        assert_eq!(s.train.len(), 300);
    }

    #[test]
    fn split_boundaries_must_increase() {
        let mut bad = default_split();
        bad.val_end = bad.train_end;
        assert!(split(vec![], &bad).is_err());
    }

    proptest! {
        #[test]
        fn split_matches_per_example_loop(offsets in proptest::collection::vec(0u64..1900, 0..80), f in 1usize..10) {
            let spec = default_split();
            let examples: Vec<_> = offsets.iter().map(|&o| example_at(date(2012, 1, 1) + Days::new(o), f)).collect();
            let s = split(examples.clone(), &spec).unwrap();
            let (mut tr, mut va, mut te) = (vec![], vec![], vec![]);
            for ex in &examples {
                let last = ex.anchor + Days::new(f as u64);
                if last <= spec.train_end {
                    tr.push(ex.anchor);
                } else if last <= spec.val_end {
                    va.push(ex.anchor);
                } else if last <= spec.test_end {
                    te.push(ex.anchor);
                }
            }
            prop_assert_eq!(s.train.iter().map(|e| e.anchor).collect::<Vec<_>>(), tr);
            prop_assert_eq!(s.val.iter().map(|e| e.anchor).collect::<Vec<_>>(), va);
            prop_assert_eq!(s.test.iter().map(|e| e.anchor).collect::<Vec<_>>(), te);
            for ex in &s.train {
                prop_assert!(ex.last_target() <= spec.train_end);
            }
        }

        #[test]
        fn zero_fill_soundness(grid in proptest::collection::vec(proptest::option::of(1u32..5), 2 * 16), b in 1usize..5, f in 1usize..4) {
            let rows: Vec<Vec<Option<f64>>> = grid.chunks(16).map(|r| r.iter().map(|p| p.map(|x| x as f64 * 10.0)).collect()).collect();
            let p = panel(rows, date(2015, 1, 1));
            let cfg = WindowConfig::new(b, f);
            for ex in build_examples(&p, &cfg).unwrap() {
                for (c, m) in ex.past_changes.iter().zip(&ex.past_mask) {
                    if !m {
                        prop_assert_eq!(*c, 0.0);
                    }
                }
                for (l, m) in ex.future_labels.iter().zip(&ex.future_mask) {
                    if !m {
                        prop_assert_eq!(*l, Direction::Stay);
                    }
                }
            }
            prop_assert_eq!(build_examples(&p, &cfg).unwrap(), build_examples(&p, &cfg).unwrap());
        }

        #[test]
        fn flatten_is_injective(a in proptest::collection::vec(-2i32..3, 4), b in proptest::collection::vec(-2i32..3, 4)) {
            // different past segments never collide
            let cfg = WindowConfig::new(2, 1);
            let mk = |v: &[i32]| WindowExample {
                anchor: date(2015, 1, 5),
                markets: 1,
                b: 2,
                f: 1,
                past_changes: vec![v[0] as f64 * 0.1, v[1] as f64 * 0.1],
                past_mask: vec![v[2] > 0, v[3] > 0],
                future_mask: vec![v[2] > 1],
                future_labels: vec![Direction::Stay],
                doy: vec![4, 5],
            };
            let (ea, eb) = (mk(&a), mk(&b));
            let same_inputs = ea.past_changes == eb.past_changes && ea.past_mask == eb.past_mask && ea.future_mask == eb.future_mask;
            prop_assert_eq!(flatten_features(&ea, &cfg) == flatten_features(&eb, &cfg), same_inputs);
        }
    }
}
