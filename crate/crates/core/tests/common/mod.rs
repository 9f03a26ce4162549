//! Brute-force oracles shared by the integration tests. Everything here is
//! written from the definitions, without calling the code under test.

#![allow(dead_code)]

use chrono::{Datelike, Days, NaiveDate};
use mandi::learners::tree::{Node, Tree};
use mandi::panel::{AlignedPanel, DateRange, Direction};
use mandi::window::WindowExample;
use rand::Rng;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Random panel with repeats, gaps and a random start date.
pub fn random_panel(rng: &mut impl Rng, markets: usize, days: usize, epsilon: f64) -> AlignedPanel {
    let start = date(2011, 1, 1) + Days::new(rng.random_range(0..1500));
    let calendar = DateRange::new(start, start + Days::new(days as u64 - 1)).unwrap();
    let gap = rng.random_range(0.0..0.5);
    let mut prices = Vec::with_capacity(markets * days);
    for _ in 0..markets {
        let mut p: f64 = rng.random_range(500.0..3000.0);
        for _ in 0..days {
            match rng.random_range(0..3) {
                0 => {}
                1 => p += rng.random_range(1.0..40.0),
                _ => p = (p - rng.random_range(1.0..40.0)).max(1.0),
            }
            p = p.round();
            prices.push(if rng.random_bool(gap) { None } else { Some(p) });
        }
    }
    let names = (0..markets).map(|m| format!("m{m}")).collect();
    AlignedPanel::from_prices(names, "onion", calendar, prices, epsilon).unwrap()
}

fn label(change: f64, epsilon: f64) -> Direction {
    if change > epsilon {
        Direction::Up
    } else if change < -epsilon {
        Direction::Down
    } else {
        Direction::Stay
    }
}

/// Change between calendar days `day - 1` and `day`, from raw prices.
fn change_at(panel: &AlignedPanel, m: usize, day: usize) -> Option<f64> {
    if day == 0 {
        return None;
    }
    match (panel.price(m, day - 1), panel.price(m, day)) {
        (Some(a), Some(b)) => Some((b - a) / a),
        _ => None,
    }
}

/// Every window, materialized one anchor at a time.
pub fn naive_examples(panel: &AlignedPanel, b: usize, f: usize, epsilon: f64) -> Vec<WindowExample> {
    let days = panel.n_days();
    let markets = panel.n_markets();
    let mut out = Vec::new();
    for anchor in 0..days {
        // b change-days ending at the anchor, all after calendar day 0
        if anchor < b || anchor + f >= days {
            continue;
        }
        let mut ex = WindowExample {
            anchor: panel.calendar().start + Days::new(anchor as u64),
            markets,
            b,
            f,
            past_changes: vec![],
            past_mask: vec![],
            future_mask: vec![],
            future_labels: vec![],
            doy: vec![],
        };
        for m in 0..markets {
            for j in 0..b {
                let c = change_at(panel, m, anchor + 1 - b + j);
                ex.past_changes.push(c.unwrap_or(0.0));
                ex.past_mask.push(c.is_some());
            }
            for k in 1..=f {
                let c = change_at(panel, m, anchor + k);
                ex.future_mask.push(c.is_some());
                ex.future_labels.push(c.map_or(Direction::Stay, |c| label(c, epsilon)));
            }
        }
        for j in 0..b {
            let d = panel.calendar().start + Days::new((anchor + 1 - b + j) as u64);
            ex.doy.push(d.ordinal() as u16);
        }
        out.push(ex);
    }
    out
}

/// Flat feature vector by direct concatenation.
pub fn naive_flatten(ex: &WindowExample, cyclic: bool, forecast: bool) -> Vec<f64> {
    let mut v = ex.past_changes.clone();
    v.extend(ex.past_mask.iter().map(|&m| m as u8 as f64));
    v.extend(ex.future_mask.iter().map(|&m| if forecast || m { 1.0 } else { 0.0 }));
    for &d in &ex.doy {
        if cyclic {
            v.push((2.0 * std::f64::consts::PI * d as f64 / 365.25).sin());
        } else {
            v.push(d as f64);
        }
    }
    if cyclic {
        for &d in &ex.doy {
            v.push((2.0 * std::f64::consts::PI * d as f64 / 365.25).cos());
        }
    }
    v
}

/// Raw accuracy, balanced accuracy and per-class recalls by counting.
pub fn tally(pairs: &[(Direction, Direction)]) -> (f64, f64, [Option<f64>; 3]) {
    let mut hits = 0u64;
    let mut seen = [0u64; 3];
    let mut right = [0u64; 3];
    for &(truth, pred) in pairs {
        let t = match truth {
            Direction::Up => 0,
            Direction::Down => 1,
            Direction::Stay => 2,
        };
        seen[t] += 1;
        if truth == pred {
            hits += 1;
            right[t] += 1;
        }
    }
    let mut recalls = [None; 3];
    let mut sum = 0.0;
    let mut present = 0;
    for c in 0..3 {
        if seen[c] > 0 {
            let r = right[c] as f64 / seen[c] as f64;
            recalls[c] = Some(r);
            sum += r;
            present += 1;
        }
    }
    (hits as f64 / pairs.len() as f64, sum / present as f64, recalls)
}

/// Leaf index reached by `x`, walking the node list recursively.
pub fn walk<L>(tree: &Tree<L>, x: &[f64]) -> usize {
    fn go<L>(nodes: &[Node<L>], i: usize, x: &[f64]) -> usize {
        match &nodes[i] {
            Node::Leaf(_) => i,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature as usize] > *threshold {
                    go(nodes, *right as usize, x)
                } else {
                    go(nodes, *left as usize, x)
                }
            }
        }
    }
    go(&tree.nodes, 0, x)
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}
