//! Seeded synthetic price panels with seasonality, sticky prices and gaps.
//!
//! Each market follows `ln p = ln base + A·cos(2π(t − peak)/365.25) + x_t`
//! with AR(1) noise `x_t`. Prices are rounded to whole currency units; on a
//! sticky day the previous price repeats exactly. Observations are then
//! masked outside the market's availability window, at random days, and in
//! geometric-length blocks.

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::rng::{rng_for, splitmix64};
use crate::panel::{AlignedPanel, DateRange, Direction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Availability {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockMissing {
    pub mean_length: f64,
    /// Chance that a block starts on any day outside a block.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub markets: usize,
    pub years: usize,
    pub start: NaiveDate,
    pub commodity: String,
    pub base_price: f64,
    /// Spread of per-market base prices, as a log-scale half-width.
    pub base_spread: f64,
    /// Log-scale amplitude of the annual cycle.
    pub season_amplitude: f64,
    /// Day of year of the seasonal price peak.
    pub peak_day: f64,
    /// Per-market peak offsets are uniform in `±peak_jitter` days.
    pub peak_jitter: f64,
    pub stickiness: f64,
    /// Innovation standard deviation of the AR(1) log-noise.
    pub noise_scale: f64,
    pub ar_coef: f64,
    /// Empty, or one window per market.
    pub availability: Vec<Availability>,
    pub random_missing: f64,
    pub block_missing: BlockMissing,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            markets: 14,
            years: 4,
            start: NaiveDate::from_ymd_opt(2012, 1, 1).unwrap(),
            commodity: "onion".into(),
            base_price: 1500.0,
            base_spread: 0.15,
            season_amplitude: 0.5,
            peak_day: 330.0,
            peak_jitter: 20.0,
            stickiness: 0.6,
            noise_scale: 0.002,
            ar_coef: 0.5,
            availability: Vec::new(),
            random_missing: 0.15,
            block_missing: BlockMissing {
                mean_length: 10.0,
                rate: 0.01,
            },
            seed: 0,
        }
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl SynthConfig {
    pub fn calendar(&self) -> Result<DateRange> {
        let end = self
            .start
            .with_year(self.start.year() + self.years as i32)
            .and_then(|d| d.pred_opt())
            .ok_or_else(|| Error::InvalidConfig("calendar end overflows".into()))?;
        DateRange::new(self.start, end)
    }

    pub fn validate(&self) -> Result<()> {
        if self.markets == 0 || self.years == 0 {
            return Err(Error::InvalidConfig("synthetic panel needs markets >= 1 and years >= 1".into()));
        }
        if !(self.base_price.is_finite() && self.base_price >= 1.0) {
            return Err(Error::InvalidConfig(format!("base_price must be >= 1, got {}", self.base_price)));
        }
        for (name, v) in [
            ("base_spread", self.base_spread),
            ("season_amplitude", self.season_amplitude),
            ("peak_jitter", self.peak_jitter),
            ("noise_scale", self.noise_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.ar_coef.abs() < 1.0) {
            return Err(Error::InvalidConfig(format!("ar_coef must lie in (-1, 1), got {}", self.ar_coef)));
        }
        probability("stickiness", self.stickiness)?;
        probability("random_missing", self.random_missing)?;
        probability("block_missing.rate", self.block_missing.rate)?;
        if !(self.block_missing.mean_length >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "block_missing.mean_length must be >= 1, got {}",
                self.block_missing.mean_length
            )));
        }
        let cal = self.calendar()?;
        if !self.availability.is_empty() {
            if self.availability.len() != self.markets {
                return Err(Error::InvalidConfig(format!(
                    "availability lists {} windows for {} markets",
                    self.availability.len(),
                    self.markets
                )));
            }
            for (m, w) in self.availability.iter().enumerate() {
                if w.start > w.end || w.end < cal.start || w.start > cal.end {
                    return Err(Error::InvalidConfig(format!(
                        "availability window {}..={} of market {m} is empty or outside {}..={}",
                        w.start, w.end, cal.start, cal.end
                    )));
                }
            }
        }
        Ok(())
    }

    /// Long-run fraction of days masked by random and block missingness,
    /// ignoring availability windows.
    pub fn expected_missing(&self) -> f64 {
        let r = self.block_missing.rate;
        let l = self.block_missing.mean_length;
        let block = r * l / (1.0 - r + r * l);
        1.0 - (1.0 - self.random_missing) * (1.0 - block)
    }

    pub fn market_ids(&self) -> Vec<String> {
        (0..self.markets).map(|m| format!("market-{:02}", m + 1)).collect()
    }
}

/// Latent quantities behind a generated panel, `markets × days` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub days: usize,
    /// Seasonal component of the log price.
    pub seasonal_log_mean: Vec<f64>,
    /// Every day's price before masking.
    pub prices: Vec<f64>,
    /// Direction of each unmasked day-over-day move; Stay on day 0.
    pub intended: Vec<Direction>,
    pub sticky: Vec<bool>,
}

impl GroundTruth {
    /// Day-over-day change of the seasonal log mean; 0 on day 0.
    pub fn seasonal_drift(&self, market: usize, day: usize) -> f64 {
        if day == 0 {
            return 0.0;
        }
        let i = market * self.days + day;
        self.seasonal_log_mean[i] - self.seasonal_log_mean[i - 1]
    }
}

struct MarketDraw {
    seasonal: Vec<f64>,
    prices: Vec<f64>,
    sticky: Vec<bool>,
    observed: Vec<bool>,
}

fn generate_market(cfg: &SynthConfig, cal: &DateRange, m: usize) -> MarketDraw {
    let days = cal.len();
    let mut rng = rng_for(splitmix64(cfg.seed ^ splitmix64(m as u64 + 1)));
    let base = cfg.base_price.ln() + rng.random_range(-1.0..=1.0) * cfg.base_spread;
    let peak = cfg.peak_day + rng.random_range(-1.0..=1.0) * cfg.peak_jitter;
    let noise = Normal::new(0.0, cfg.noise_scale).expect("validated scale");
    let stationary_sd = cfg.noise_scale / (1.0 - cfg.ar_coef * cfg.ar_coef).sqrt();
    let mut x = Normal::new(0.0, stationary_sd).expect("validated scale").sample(&mut rng);
    let window = cfg.availability.get(m);

    let mut seasonal = Vec::with_capacity(days);
    let mut prices = Vec::with_capacity(days);
    let mut sticky = Vec::with_capacity(days);
    let mut observed = Vec::with_capacity(days);
    let mut block_left = 0u64;
    let q = 1.0 / cfg.block_missing.mean_length;
    for (t, date) in cal.iter().enumerate() {
        let doy = date.ordinal0() as f64;
        let s = base + cfg.season_amplitude * (2.0 * std::f64::consts::PI * (doy - peak) / 365.25).cos();
        if t > 0 {
            x = cfg.ar_coef * x + noise.sample(&mut rng);
        }
        let candidate = (s + x).exp().round().max(1.0);
        let repeat = t > 0 && rng.random_bool(cfg.stickiness);
        let price = if repeat { prices[t - 1] } else { candidate };
        seasonal.push(s);
        prices.push(price);
        sticky.push(repeat);

        let random_gap = rng.random_bool(cfg.random_missing);
        if block_left == 0 && rng.random_bool(cfg.block_missing.rate) {
            let mut len = 1;
            while q < 1.0 && !rng.random_bool(q) {
                len += 1;
            }
            block_left = len;
        }
        let in_block = block_left > 0;
        block_left = block_left.saturating_sub(1);
        let available = window.is_none_or(|w| w.start <= date && date <= w.end);
        observed.push(available && !random_gap && !in_block);
    }
    MarketDraw {
        seasonal,
        prices,
        sticky,
        observed,
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<(AlignedPanel, GroundTruth)> {
    cfg.validate()?;
    let cal = cfg.calendar()?;
    let days = cal.len();
    let draws: Vec<MarketDraw> = (0..cfg.markets)
        .into_par_iter()
        .map(|m| generate_market(cfg, &cal, m))
        .collect();

    let mut truth = GroundTruth {
        days,
        seasonal_log_mean: Vec::with_capacity(cfg.markets * days),
        prices: Vec::with_capacity(cfg.markets * days),
        intended: Vec::with_capacity(cfg.markets * days),
        sticky: Vec::with_capacity(cfg.markets * days),
    };
    let mut grid = Vec::with_capacity(cfg.markets * days);
    for d in draws {
        for t in 0..days {
            truth.intended.push(if t == 0 {
                Direction::Stay
            } else {
                crate::panel::direction_of((d.prices[t] - d.prices[t - 1]) / d.prices[t - 1], 0.0)
            });
            grid.push(d.observed[t].then_some(d.prices[t]));
        }
        truth.seasonal_log_mean.extend(d.seasonal);
        truth.prices.extend(d.prices);
        truth.sticky.extend(d.sticky);
    }
    let panel = AlignedPanel::from_prices(cfg.market_ids(), cfg.commodity.clone(), cal, grid, 0.0)?;
    Ok((panel, truth))
}

/// Best accuracies of a rule that sees only the seasonal drift of the
/// target day, estimated over `trials` independent panels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceAccuracy {
    pub raw: f64,
    /// Mean recall over the classes present.
    pub balanced: f64,
    pub present: [bool; 3],
    pub stay_prevalence: f64,
}

const DRIFT_BINS: usize = 21;

pub fn reference_accuracy(cfg: &SynthConfig, trials: usize) -> Result<ReferenceAccuracy> {
    if trials == 0 {
        return Err(Error::InvalidInput("reference_accuracy needs at least one trial".into()));
    }
    let mut samples: Vec<(f64, Direction)> = Vec::new();
    for trial in 0..trials {
        let mut c = cfg.clone();
        c.seed = splitmix64(cfg.seed.wrapping_add(trial as u64));
        let (panel, truth) = generate(&c)?;
        for m in 0..panel.n_markets() {
            for d in 1..panel.n_days() {
                if let Some(dir) = panel.direction(m, d) {
                    samples.push((truth.seasonal_drift(m, d), dir));
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::NoObservedTargets);
    }
    let span = samples.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max);
    let bins = if span > 0.0 { DRIFT_BINS } else { 1 };
    let bin_of = |v: f64| {
        if bins == 1 {
            0
        } else {
            (((v + span) / (2.0 * span) * bins as f64) as usize).min(bins - 1)
        }
    };
    let mut counts = vec![[0usize; 3]; bins];
    let mut totals = [0usize; 3];
    for &(v, dir) in &samples {
        counts[bin_of(v)][dir.index()] += 1;
        totals[dir.index()] += 1;
    }
    let n = samples.len() as f64;
    let raw = counts.iter().map(|c| *c.iter().max().unwrap()).sum::<usize>() as f64 / n;
    let present = totals.map(|t| t > 0);
    let mut hits = [0usize; 3];
    for c in &counts {
        let rate: [f64; 3] = std::array::from_fn(|k| if totals[k] > 0 { c[k] as f64 / totals[k] as f64 } else { 0.0 });
        let pick = Direction::argmax(&rate).index();
        hits[pick] += c[pick];
    }
    let recalls: Vec<f64> = (0..3)
        .filter(|&k| present[k])
        .map(|k| hits[k] as f64 / totals[k] as f64)
        .collect();
    Ok(ReferenceAccuracy {
        raw,
        balanced: recalls.iter().sum::<f64>() / recalls.len() as f64,
        present,
        stay_prevalence: totals[2] as f64 / n,
    })
}

/// Observed directions of a panel tallied by class.
pub fn direction_counts(panel: &AlignedPanel) -> [usize; 3] {
    let mut c = [0; 3];
    for m in 0..panel.n_markets() {
        for d in panel.direction_row(m).iter().flatten() {
            c[d.index()] += 1;
        }
    }
    c
}

/// Date `n` days after the calendar start.
pub fn day(cfg: &SynthConfig, n: u64) -> NaiveDate {
    cfg.start + Days::new(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::missing_fraction;

    fn small() -> SynthConfig {
        SynthConfig {
            markets: 3,
            years: 1,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn full_stickiness_means_all_stay() {
        let cfg = SynthConfig {
            stickiness: 1.0,
            ..small()
        };
        let (panel, _) = generate(&cfg).unwrap();
        let c = direction_counts(&panel);
        assert_eq!(c[0] + c[1], 0);
        assert!(c[2] > 0);
        let r = reference_accuracy(&cfg, 1).unwrap();
        assert_eq!(r.raw, 1.0);
        assert_eq!(r.present, [false, false, true]);
    }

    #[test]
    fn no_missingness_means_full_masks() {
        let cfg = SynthConfig {
            random_missing: 0.0,
            block_missing: BlockMissing {
                mean_length: 5.0,
                rate: 0.0,
            },
            ..small()
        };
        let (panel, _) = generate(&cfg).unwrap();
        for m in 0..panel.n_markets() {
            assert!(!panel.change_mask(m, 0));
            assert!((1..panel.n_days()).all(|d| panel.change_mask(m, d)));
        }
    }

    #[test]
    fn stay_prevalence_tracks_stickiness() {
        for seed in 0..5 {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::default()
            };
            let (panel, _) = generate(&cfg).unwrap();
            let c = direction_counts(&panel);
            let stay = c[2] as f64 / c.iter().sum::<usize>() as f64;
            assert!((stay - 0.6).abs() <= 0.03, "seed {seed}: stay prevalence {stay}");
        }
    }

    #[test]
    fn missing_rate_matches_configuration() {
        let cfg = SynthConfig::default();
        let (panel, _) = generate(&cfg).unwrap();
        let cal = panel.calendar();
        let want = cfg.expected_missing();
        let mean: f64 = panel
            .markets()
            .iter()
            .map(|m| missing_fraction(&panel, m, cal).unwrap())
            .sum::<f64>()
            / cfg.markets as f64;
        assert!((mean - want).abs() <= 0.02, "missing {mean} vs {want}");
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let (a, ta) = generate(&small()).unwrap();
        let (b, tb) = generate(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate(&SynthConfig { seed: 9, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn availability_windows_mask_outside_days() {
        let cfg = SynthConfig {
            markets: 2,
            random_missing: 0.0,
            block_missing: BlockMissing {
                mean_length: 1.0,
                rate: 0.0,
            },
            availability: vec![
                Availability {
                    start: day(&small(), 30),
                    end: day(&small(), 200),
                },
                Availability {
                    start: day(&small(), 0),
                    end: day(&small(), 364),
                },
            ],
            ..small()
        };
        let (panel, _) = generate(&cfg).unwrap();
        assert!(panel.price(0, 29).is_none());
        assert!(panel.price(0, 30).is_some());
        assert!(panel.price(0, 201).is_none());
        assert!(panel.price(1, 300).is_some());

        let bad = SynthConfig {
            availability: vec![Availability {
                start: day(&small(), 10),
                end: day(&small(), 5),
            }],
            markets: 1,
            ..small()
        };
        assert!(matches!(generate(&bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn pure_noise_reference_is_chance() {
        let cfg = SynthConfig {
            season_amplitude: 0.0,
            stickiness: 0.0,
            ..small()
        };
        let r = reference_accuracy(&cfg, 3).unwrap();
        assert!((r.balanced - 1.0 / 3.0).abs() <= 0.02, "{r:?}");
    }

    #[test]
    fn default_reference_beats_always_stay() {
        let r = reference_accuracy(&SynthConfig::default(), 1).unwrap();
        assert!(r.raw >= r.stay_prevalence);
    }
}
