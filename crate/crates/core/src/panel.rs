//! Core price-panel data model.
//!
//! An [`AlignedPanel`] is a markets × calendar-days grid built from sparse
//! per-market price histories. For every cell it holds the observed price (if
//! any), the day-over-day fractional change, and the Up/Down/Stay direction of
//! that change. A change exists only where the price was observed on both the
//! day itself and the previous calendar day; nothing is imputed here.

use std::collections::HashSet;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of a day-over-day price change.
///
/// Integer codes are fixed for serialization and double as the class index
/// used throughout the learners: `Up = 0`, `Down = 1`, `Stay = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Up = 0,
    Down = 1,
    Stay = 2,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Up, Direction::Down, Direction::Stay];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Direction> {
        match code {
            0 => Some(Direction::Up),
            1 => Some(Direction::Down),
            2 => Some(Direction::Stay),
            _ => None,
        }
    }

    /// Argmax over a score triple; ties go to the earlier class (Up < Down < Stay).
    pub fn argmax(scores: &[f64; 3]) -> Direction {
        let mut best = 0;
        for c in 1..3 {
            if scores[c] > scores[best] {
                best = c;
            }
        }
        Direction::ALL[best]
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Stay => "stay",
        })
    }
}

/// Classify a fractional change with a symmetric dead-band `epsilon`.
pub fn direction_of(change: f64, epsilon: f64) -> Direction {
    if change > epsilon {
        Direction::Up
    } else if change < -epsilon {
        Direction::Down
    } else {
        Direction::Stay
    }
}

/// Ordinal day within the year, 1-based (Jan 1 is 1, Dec 31 of a leap year is 366).
pub fn day_of_year(date: NaiveDate) -> u16 {
    date.ordinal() as u16
}

/// Inclusive calendar range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::EmptyRange { start, end });
        }
        Ok(DateRange { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceObservation {
    pub date: NaiveDate,
    /// INR per quintal.
    pub price: f64,
    /// Metric tons.
    pub arrivals: Option<f64>,
}

/// One market's date-ordered price history for a single commodity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    market_id: String,
    commodity: String,
    observations: Vec<PriceObservation>,
}

impl PriceSeries {
    pub fn new(
        market_id: impl Into<String>,
        commodity: impl Into<String>,
        observations: Vec<PriceObservation>,
    ) -> Result<Self> {
        let market_id = market_id.into();
        for w in observations.windows(2) {
            if w[1].date <= w[0].date {
                return Err(Error::InvalidInput(format!(
                    "observations for `{market_id}` are not strictly increasing at {}",
                    w[1].date
                )));
            }
        }
        for obs in &observations {
            if !(obs.price.is_finite() && obs.price > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "non-positive price {} for `{market_id}` on {}",
                    obs.price, obs.date
                )));
            }
            if let Some(a) = obs.arrivals {
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "negative arrivals {a} for `{market_id}` on {}",
                        obs.date
                    )));
                }
            }
        }
        Ok(PriceSeries {
            market_id,
            commodity: commodity.into(),
            observations,
        })
    }

    pub fn market_id(&self) -> &str {
        &self.market_id
    }

    pub fn commodity(&self) -> &str {
        &self.commodity
    }

    pub fn observations(&self) -> &[PriceObservation] {
        &self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Markets × days grid of prices, changes and directions. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPanel {
    markets: Vec<String>,
    commodity: String,
    calendar: DateRange,
    epsilon: f64,
    price: Vec<Option<f64>>,
    change: Vec<Option<f64>>,
    direction: Vec<Option<Direction>>,
    day_of_year: Vec<u16>,
}

impl AlignedPanel {
    /// Build a panel from a dense row-major `markets × calendar` price grid.
    pub fn from_prices(
        markets: Vec<String>,
        commodity: impl Into<String>,
        calendar: DateRange,
        price: Vec<Option<f64>>,
        epsilon: f64,
    ) -> Result<Self> {
        let days = calendar.len();
        if price.len() != markets.len() * days {
            return Err(Error::InvalidInput(format!(
                "price grid has {} cells, expected {} × {}",
                price.len(),
                markets.len(),
                days
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidInput(format!("dead-band must be non-negative, got {epsilon}")));
        }
        let mut seen = HashSet::new();
        for m in &markets {
            if !seen.insert(m.as_str()) {
                return Err(Error::DuplicateMarket(m.clone()));
            }
        }
        if let Some(bad) = price.iter().flatten().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidInput(format!("non-positive price {bad} in grid")));
        }

        let mut change = vec![None; price.len()];
        let mut direction = vec![None; price.len()];
        for m in 0..markets.len() {
            let row = m * days;
            for d in 1..days {
                if let (Some(prev), Some(cur)) = (price[row + d - 1], price[row + d]) {
                    let c = (cur - prev) / prev;
                    change[row + d] = Some(c);
                    direction[row + d] = Some(direction_of(c, epsilon));
                }
            }
        }
        let day_of_year = calendar.iter().map(day_of_year).collect();

        Ok(AlignedPanel {
            markets,
            commodity: commodity.into(),
            calendar,
            epsilon,
            price,
            change,
            direction,
            day_of_year,
        })
    }

    pub fn markets(&self) -> &[String] {
        &self.markets
    }

    pub fn n_markets(&self) -> usize {
        self.markets.len()
    }

    pub fn commodity(&self) -> &str {
        &self.commodity
    }

    pub fn calendar(&self) -> DateRange {
        self.calendar
    }

    pub fn n_days(&self) -> usize {
        self.day_of_year.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn market_index(&self, market: &str) -> Result<usize> {
        self.markets
            .iter()
            .position(|m| m == market)
            .ok_or_else(|| Error::UnknownMarket(market.to_string()))
    }

    /// Calendar index of `date`, if inside the calendar.
    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        self.calendar
            .contains(date)
            .then(|| (date - self.calendar.start).num_days() as usize)
    }

    pub fn date_at(&self, day: usize) -> NaiveDate {
        self.calendar.start + chrono::Days::new(day as u64)
    }

    pub fn price(&self, market: usize, day: usize) -> Option<f64> {
        self.price[market * self.n_days() + day]
    }

    pub fn change(&self, market: usize, day: usize) -> Option<f64> {
        self.change[market * self.n_days() + day]
    }

    pub fn change_mask(&self, market: usize, day: usize) -> bool {
        self.change(market, day).is_some()
    }

    pub fn direction(&self, market: usize, day: usize) -> Option<Direction> {
        self.direction[market * self.n_days() + day]
    }

    pub fn direction_mask(&self, market: usize, day: usize) -> bool {
        self.direction(market, day).is_some()
    }

    pub fn day_of_year(&self, day: usize) -> u16 {
        self.day_of_year[day]
    }

    pub fn price_row(&self, market: usize) -> &[Option<f64>] {
        let n = self.n_days();
        &self.price[market * n..(market + 1) * n]
    }

    pub fn change_row(&self, market: usize) -> &[Option<f64>] {
        let n = self.n_days();
        &self.change[market * n..(market + 1) * n]
    }

    pub fn direction_row(&self, market: usize) -> &[Option<Direction>] {
        let n = self.n_days();
        &self.direction[market * n..(market + 1) * n]
    }

    /// Same prices, directions recomputed with another dead-band.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<AlignedPanel> {
        AlignedPanel::from_prices(
            self.markets.clone(),
            self.commodity.clone(),
            self.calendar,
            self.price.clone(),
            epsilon,
        )
    }

    /// Export observed prices as one series per market (empty markets included).
    pub fn to_series(&self) -> Vec<PriceSeries> {
        (0..self.n_markets())
            .map(|m| {
                let observations = self
                    .price_row(m)
                    .iter()
                    .enumerate()
                    .filter_map(|(d, p)| {
                        p.map(|price| PriceObservation {
                            date: self.date_at(d),
                            price,
                            arrivals: None,
                        })
                    })
                    .collect();
                PriceSeries {
                    market_id: self.markets[m].clone(),
                    commodity: self.commodity.clone(),
                    observations,
                }
            })
            .collect()
    }
}

/// Align series onto a contiguous daily calendar with the default dead-band of 0.
pub fn align(series: &[PriceSeries], range: DateRange) -> Result<AlignedPanel> {
    align_with_epsilon(series, range, 0.0)
}

pub fn align_with_epsilon(series: &[PriceSeries], range: DateRange, epsilon: f64) -> Result<AlignedPanel> {
    let commodity = match series.first() {
        Some(s) => s.commodity.clone(),
        None => return Err(Error::InvalidInput("no series to align".into())),
    };
    if let Some(other) = series.iter().find(|s| s.commodity != commodity) {
        return Err(Error::InvalidInput(format!(
            "mixed commodities `{commodity}` and `{}`",
            other.commodity
        )));
    }
    let days = range.len();
    let mut price = vec![None; series.len() * days];
    for (m, s) in series.iter().enumerate() {
        for obs in &s.observations {
            if range.contains(obs.date) {
                let d = (obs.date - range.start).num_days() as usize;
                price[m * days + d] = Some(obs.price);
            }
        }
    }
    let markets = series.iter().map(|s| s.market_id.clone()).collect();
    AlignedPanel::from_prices(markets, commodity, range, price, epsilon)
}

/// Fraction of days in `range` on which `market` has no observed price.
pub fn missing_fraction(panel: &AlignedPanel, market: &str, range: DateRange) -> Result<f64> {
    let m = panel.market_index(market)?;
    let (Some(lo), Some(hi)) = (panel.day_index(range.start), panel.day_index(range.end)) else {
        return Err(Error::RangeOutsideCalendar {
            start: range.start,
            end: range.end,
        });
    };
    let missing = panel.price_row(m)[lo..=hi].iter().filter(|p| p.is_none()).count();
    Ok(missing as f64 / range.len() as f64)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn series(id: &str, obs: &[(NaiveDate, f64)]) -> PriceSeries {
        PriceSeries::new(
            id,
            "Onion",
            obs.iter()
                .map(|&(date, price)| PriceObservation {
                    date,
                    price,
                    arrivals: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_day_series_has_one_up_change() {
        let s = series("a", &[(date(2015, 1, 1), 100.0), (date(2015, 1, 2), 110.0)]);
        let p = align(&[s], DateRange::new(date(2015, 1, 1), date(2015, 1, 2)).unwrap()).unwrap();
        assert_eq!(p.change_row(0)[0], None);
        assert!((p.change_row(0)[1].unwrap() - 0.10).abs() < 1e-12);
        assert_eq!(p.direction_row(0), &[None, Some(Direction::Up)]);
    }

    #[test]
    fn change_after_gap_is_missing() {
        let s = series("a", &[(date(2015, 1, 1), 100.0), (date(2015, 1, 3), 120.0)]);
        let p = align(&[s], DateRange::new(date(2015, 1, 1), date(2015, 1, 3)).unwrap()).unwrap();
        assert_eq!(p.change_row(0), &[None, None, None]);
        assert!(!p.direction_mask(0, 2));
    }

    #[test]
    fn rejects_duplicate_markets_and_empty_range() {
        let a = series("a", &[(date(2015, 1, 1), 100.0)]);
        let err = align(&[a.clone(), a], DateRange::new(date(2015, 1, 1), date(2015, 1, 2)).unwrap());
        assert!(matches!(err, Err(Error::DuplicateMarket(m)) if m == "a"));
        assert!(matches!(
            DateRange::new(date(2015, 1, 2), date(2015, 1, 1)),
            Err(Error::EmptyRange { .. })
        ));
    }

    #[test]
    fn direction_dead_band() {
        assert_eq!(direction_of(0.0, 0.0), Direction::Stay);
        assert_eq!(direction_of(0.10, 0.0), Direction::Up);
        assert_eq!(direction_of(-0.004, 0.005), Direction::Stay);
        assert_eq!(direction_of(-0.006, 0.005), Direction::Down);
    }

    #[test]
    fn day_of_year_ordinals() {
        assert_eq!(day_of_year(date(2015, 1, 2)), 2);
        assert_eq!(day_of_year(date(2016, 1, 1)), 1);
        assert_eq!(day_of_year(date(2016, 2, 29)), 60);
        assert_eq!(day_of_year(date(2016, 12, 31)), 366);
        assert_eq!(day_of_year(date(2015, 12, 31)), 365);
    }

    #[test]
    fn missing_fraction_counts_prices() {
        let start = date(2015, 3, 1);
        let obs: Vec<_> = (0..10)
            .filter(|d| ![2, 5, 6].contains(d))
            .map(|d| (start + chrono::Days::new(d), 100.0 + d as f64))
            .collect();
        let range = DateRange::new(start, date(2015, 3, 10)).unwrap();
        let p = align(&[series("a", &obs)], range).unwrap();
        assert!((missing_fraction(&p, "a", range).unwrap() - 0.30).abs() < 1e-15);
        let full = DateRange::new(start, date(2015, 3, 2)).unwrap();
        assert_eq!(missing_fraction(&p, "a", full).unwrap(), 0.0);
        assert!(matches!(missing_fraction(&p, "zz", range), Err(Error::UnknownMarket(_))));
        let outside = DateRange::new(start, date(2015, 4, 2)).unwrap();
        assert!(missing_fraction(&p, "a", outside).is_err());
    }

    /// Hand-placed gaps over 3 markets × 10 days, checked against a cell-by-cell
    /// construction through dictionary lookups.
    #[test]
    fn align_matches_cellwise_reference() {
        let start = date(2014, 12, 28);
        let range = DateRange::new(start, start + chrono::Days::new(9)).unwrap();
        let gaps: [&[u64]; 3] = [&[0, 4], &[3, 4, 5], &[9]];
        let prices = [[100.0, 101.0, 101.0, 99.0, 98.0, 98.0, 97.0, 99.0, 100.0, 100.0]; 3];
        let all: Vec<PriceSeries> = (0..3)
            .map(|m| {
                let obs: Vec<_> = (0..10u64)
                    .filter(|d| !gaps[m].contains(d))
                    .map(|d| (start + chrono::Days::new(d), prices[m][d as usize] + m as f64))
                    .collect();
                series(&format!("m{m}"), &obs)
            })
            .collect();
        let panel = align(&all, range).unwrap();

        for (m, s) in all.iter().enumerate() {
            let lookup: HashMap<NaiveDate, f64> = s.observations().iter().map(|o| (o.date, o.price)).collect();
            for (d, day) in range.iter().enumerate() {
                let cur = lookup.get(&day).copied();
                assert_eq!(panel.price(m, d), cur);
                let prev = day.pred_opt().and_then(|p| if range.contains(p) { lookup.get(&p).copied() } else { None });
                let expect_change = match (prev, cur) {
                    (Some(a), Some(b)) => Some((b - a) / a),
                    _ => None,
                };
                assert_eq!(panel.change(m, d), expect_change);
                let expect_dir = expect_change.map(|c| {
                    if c > 0.0 {
                        Direction::Up
                    } else if c < 0.0 {
                        Direction::Down
                    } else {
                        Direction::Stay
                    }
                });
                assert_eq!(panel.direction(m, d), expect_dir);
                assert_eq!(panel.day_of_year(d), day.ordinal() as u16);
            }
        }
    }

    fn arb_grid() -> impl Strategy<Value = (usize, usize, Vec<Option<f64>>)> {
        (1usize..4, 2usize..12).prop_flat_map(|(m, d)| {
            let cell = prop_oneof![Just(None), (1u32..50).prop_map(|p| Some(p as f64 * 10.0))];
            (Just(m), Just(d), proptest::collection::vec(cell, m * d))
        })
    }

    fn panel_from(m: usize, d: usize, grid: Vec<Option<f64>>) -> AlignedPanel {
        let start = date(2016, 2, 25);
        let range = DateRange::new(start, start + chrono::Days::new(d as u64 - 1)).unwrap();
        let markets = (0..m).map(|i| format!("m{i}")).collect();
        AlignedPanel::from_prices(markets, "Onion", range, grid, 0.0).unwrap()
    }

    proptest! {
        #[test]
        fn change_mask_implies_both_prices((m, d, grid) in arb_grid()) {
            let p = panel_from(m, d, grid);
            for mi in 0..m {
                prop_assert!(!p.change_mask(mi, 0));
                for di in 1..d {
                    let both = p.price(mi, di).is_some() && p.price(mi, di - 1).is_some();
                    prop_assert_eq!(p.change_mask(mi, di), both);
                    prop_assert_eq!(p.direction_mask(mi, di), p.change_mask(mi, di));
                }
            }
        }

        #[test]
        fn recomputed_changes_are_bit_exact((m, d, grid) in arb_grid()) {
            let p = panel_from(m, d, grid);
            let again = p.with_epsilon(p.epsilon()).unwrap();
            for mi in 0..m {
                for di in 0..d {
                    prop_assert_eq!(p.change(mi, di).map(f64::to_bits), again.change(mi, di).map(f64::to_bits));
                }
            }
        }

        #[test]
        fn dead_band_antisymmetry(c in -1.0f64..1.0, eps in 0.0f64..0.2) {
            prop_assume!(c.abs() > eps);
            prop_assert_eq!(direction_of(c, eps) == Direction::Up, direction_of(-c, eps) == Direction::Down);
        }

        #[test]
        fn align_permutes_rows((m, d, grid) in arb_grid(), rot in 0usize..4) {
            let p = panel_from(m, d, grid);
            let series = p.to_series();
            let k = rot % m;
            let mut rotated = series.clone();
            rotated.rotate_left(k);
            let q = align(&rotated, p.calendar()).unwrap();
            for mi in 0..m {
                let src = (mi + k) % m;
                prop_assert_eq!(q.markets()[mi].as_str(), p.markets()[src].as_str());
                prop_assert_eq!(q.change_row(mi), p.change_row(src));
                prop_assert_eq!(q.direction_row(mi), p.direction_row(src));
            }
        }
    }
}
