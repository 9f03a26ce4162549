//! CART tree growth over exact per-value histograms.
//!
//! Every distinct training value of a feature gets its own bin, so a node's
//! histogram lists exactly its split candidates: midpoints between
//! consecutive distinct values present in the node. Among equal scores the
//! lower feature index and then the lower threshold win.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Per-row statistics. Gini: weighted class indicators in slots 0..3.
/// Squared error: `[w, w·r, w·r², w·h]`.
pub(crate) type Stats = [f64; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Impurity {
    Gini,
    SquaredError,
}

impl Impurity {
    fn weight(self, s: &Stats) -> f64 {
        match self {
            Impurity::Gini => s[0] + s[1] + s[2],
            Impurity::SquaredError => s[0],
        }
    }

    /// Σ over classes of squared sums (Gini) or the squared residual sum
    /// (squared error); divided by the node weight this is the quantity
    /// whose sum over both children the best split maximises.
    #[inline]
    fn numerator(self, s: &Stats) -> f64 {
        match self {
            Impurity::Gini => s[0] * s[0] + s[1] * s[1] + s[2] * s[2],
            Impurity::SquaredError => s[1] * s[1],
        }
    }

    /// Children score `nl/wl + nr/wr` as a fraction `(num, den)` so that
    /// candidates compare without dividing.
    #[inline]
    fn split_score(self, l: &Stats, r: &Stats) -> (f64, f64) {
        let (wl, wr) = (self.weight(l), self.weight(r));
        (self.numerator(l) * wr + self.numerator(r) * wl, wl * wr)
    }

    fn is_pure(self, s: &Stats) -> bool {
        match self {
            Impurity::Gini => s[..3].iter().filter(|&&v| v > 0.0).count() <= 1,
            Impurity::SquaredError => {
                let w = s[0];
                w <= 0.0 || s[2] - s[1] * s[1] / w <= 1e-14 * s[2].abs().max(1e-300)
            }
        }
    }
}

/// Training rows with each feature value replaced by its rank among the
/// feature's distinct values.
pub(crate) struct Binned {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major bin indices.
    bins: Vec<u32>,
    /// Start of each feature's bins in `values`; `n_cols + 1` entries.
    offsets: Vec<usize>,
    /// Distinct values, ascending within each feature.
    values: Vec<f64>,
}

impl Binned {
    /// `rows` index into the row-major `features` matrix with `n_cols` columns.
    pub fn new(features: &[f64], n_cols: usize, rows: &[usize]) -> Self {
        let n_rows = rows.len();
        let mut bins = vec![0u32; n_rows * n_cols];
        let mut offsets = Vec::with_capacity(n_cols + 1);
        let mut values: Vec<f64> = Vec::new();
        let mut order: Vec<u32> = (0..n_rows as u32).collect();
        for f in 0..n_cols {
            let at = |i: u32| features[rows[i as usize] * n_cols + f];
            order.sort_unstable_by(|&a, &b| at(a).total_cmp(&at(b)));
            offsets.push(values.len());
            let start = values.len();
            for &i in &order {
                let v = at(i);
                if values.len() == start || v != values[values.len() - 1] {
                    values.push(v);
                }
                bins[i as usize * n_cols + f] = (values.len() - 1 - start) as u32;
            }
        }
        offsets.push(values.len());
        Binned {
            n_rows,
            n_cols,
            bins,
            offsets,
            values,
        }
    }

    #[inline]
    fn bin(&self, row: u32, f: usize) -> usize {
        self.bins[row as usize * self.n_cols + f] as usize
    }

    fn total_bins(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node<L> {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(L),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    /// Node index of the leaf `x` falls into (`x <= threshold` goes left).
    pub fn leaf_id(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf(_) => return i,
            }
        }
    }

    pub fn leaf(&self, x: &[f64]) -> &L {
        match &self.nodes[self.leaf_id(x)] {
            Node::Leaf(l) => l,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

/// Anything that routes a feature vector to a leaf; used for co-leaf
/// similarity regardless of the leaf payload type.
pub trait LeafRouter: Sync {
    fn route(&self, x: &[f64]) -> usize;
}

impl<L: Sync> LeafRouter for Tree<L> {
    fn route(&self, x: &[f64]) -> usize {
        self.leaf_id(x)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features drawn per node; `None` means all.
    pub max_features: Option<usize>,
}

/// Per-bin statistics and row counts, laid out like `Binned::values`.
#[derive(Clone)]
struct Hist {
    stats: Vec<Stats>,
    counts: Vec<u32>,
}

impl Hist {
    fn zeros(len: usize) -> Hist {
        Hist {
            stats: vec![[0.0; 4]; len],
            counts: vec![0; len],
        }
    }
}

struct BestSplit {
    num: f64,
    den: f64,
    feature: usize,
    threshold: f64,
}

#[inline]
fn add(acc: &mut Stats, c: &Stats) {
    for j in 0..4 {
        acc[j] += c[j];
    }
}

struct Grower<'a, R> {
    x: &'a Binned,
    contrib: &'a [Stats],
    impurity: Impurity,
    params: GrowParams,
    rng: Option<&'a mut R>,
    scratch: Vec<u32>,
    /// Reused histogram for nodes that draw a feature subset.
    subset_hist: Hist,
}

impl<R: Rng> Grower<'_, R> {
    fn node_stats(&self, rows: &[u32]) -> Stats {
        let mut s = [0.0; 4];
        for &r in rows {
            add(&mut s, &self.contrib[r as usize]);
        }
        s
    }

    fn draw_features(&mut self, k: usize) -> Vec<usize> {
        let d = self.x.n_cols;
        let mut pool: Vec<usize> = (0..d).collect();
        if let Some(rng) = self.rng.as_deref_mut() {
            for i in 0..k {
                let j = rng.random_range(i..d);
                pool.swap(i, j);
            }
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }

    fn fill_all(&self, hist: &mut Hist, rows: &[u32]) {
        let x = self.x;
        for &r in rows {
            let c = &self.contrib[r as usize];
            let start = r as usize * x.n_cols;
            for (f, &b) in x.bins[start..start + x.n_cols].iter().enumerate() {
                let i = x.offsets[f] + b as usize;
                add(&mut hist.stats[i], c);
                hist.counts[i] += 1;
            }
        }
    }

    fn fill_subset(&self, hist: &mut Hist, rows: &[u32], features: &[usize]) {
        let x = self.x;
        for &f in features {
            let (lo, hi) = (x.offsets[f], x.offsets[f + 1]);
            hist.stats[lo..hi].fill([0.0; 4]);
            hist.counts[lo..hi].fill(0);
        }
        for &r in rows {
            let c = &self.contrib[r as usize];
            for &f in features {
                let i = x.offsets[f] + x.bin(r, f);
                add(&mut hist.stats[i], c);
                hist.counts[i] += 1;
            }
        }
    }

    fn scan(&self, hist: &Hist, features: impl Iterator<Item = usize>, parent: &Stats, count: usize) -> Option<BestSplit> {
        let msl = self.params.min_samples_leaf.max(1) as u32;
        let count = count as u32;
        let mut best: Option<BestSplit> = None;
        for f in features {
            let (lo, hi) = (self.x.offsets[f], self.x.offsets[f + 1]);
            let mut left = [0.0; 4];
            let mut n_left = 0u32;
            let mut prev = f64::NAN;
            for i in lo..hi {
                let c = hist.counts[i];
                if c == 0 {
                    continue;
                }
                if n_left >= msl && count - n_left >= msl {
                    let right = [
                        parent[0] - left[0],
                        parent[1] - left[1],
                        parent[2] - left[2],
                        parent[3] - left[3],
                    ];
                    let (num, den) = self.impurity.split_score(&left, &right);
                    if den > 0.0 && best.as_ref().is_none_or(|b| num * b.den > b.num * den) {
                        let v = self.x.values[i];
                        let mut threshold = prev + (v - prev) / 2.0;
                        if threshold >= v {
                            threshold = prev;
                        }
                        best = Some(BestSplit {
                            num,
                            den,
                            feature: f,
                            threshold,
                        });
                    }
                }
                add(&mut left, &hist.stats[i]);
                n_left += c;
                prev = self.x.values[i];
            }
        }
        best
    }

    fn may_split(&self, depth: usize, count: usize) -> bool {
        self.params.max_depth.is_none_or(|m| depth < m) && count >= 2 * self.params.min_samples_leaf.max(1)
    }

    /// Stable in-place partition; returns the number of rows going left.
    fn partition(&mut self, rows: &mut [u32], split: &BestSplit) -> usize {
        let (f, t) = (split.feature, split.threshold);
        let base = self.x.offsets[f];
        let mut w = 0;
        self.scratch.clear();
        for i in 0..rows.len() {
            let r = rows[i];
            if self.x.values[base + self.x.bin(r, f)] <= t {
                rows[w] = r;
                w += 1;
            } else {
                self.scratch.push(r);
            }
        }
        rows[w..].copy_from_slice(&self.scratch);
        w
    }

    /// `hist` is the node's full histogram; it is present whenever every
    /// feature is a candidate and the node may split.
    fn grow<L>(
        &mut self,
        rows: &mut [u32],
        depth: usize,
        hist: Option<Hist>,
        nodes: &mut Vec<Node<L>>,
        leaf: &impl Fn(&Stats) -> L,
    ) -> u32 {
        let id = nodes.len() as u32;
        let stats = self.node_stats(rows);
        let mut split = None;
        if self.may_split(depth, rows.len()) && !self.impurity.is_pure(&stats) {
            split = match (&hist, self.params.max_features) {
                (Some(h), _) => self.scan(h, 0..self.x.n_cols, &stats, rows.len()),
                (None, Some(k)) => {
                    let fs = self.draw_features(k);
                    let mut h = std::mem::replace(&mut self.subset_hist, Hist::zeros(0));
                    self.fill_subset(&mut h, rows, &fs);
                    let best = self.scan(&h, fs.iter().copied(), &stats, rows.len());
                    self.subset_hist = h;
                    best
                }
                (None, None) => unreachable!("full histogram missing"),
            };
        }
        let Some(s) = split else {
            nodes.push(Node::Leaf(leaf(&stats)));
            return id;
        };
        let n_left = self.partition(rows, &s);
        nodes.push(Node::Split {
            feature: s.feature as u32,
            threshold: s.threshold,
            left: 0,
            right: 0,
        });
        let (left_rows, right_rows) = rows.split_at_mut(n_left);
        let (mut lh, mut rh) = (None, None);
        if let Some(parent) = hist {
            let (nl, nr) = (left_rows.len(), right_rows.len());
            if self.may_split(depth + 1, nl.max(nr)) {
                let left_small = nl <= nr;
                let mut small = Hist::zeros(self.x.total_bins());
                self.fill_all(&mut small, if left_small { left_rows } else { right_rows });
                let mut large = parent;
                // large = parent − small, reusing the parent's buffer
                for (p, s) in large.stats.iter_mut().zip(&small.stats) {
                    for j in 0..4 {
                        p[j] -= s[j];
                    }
                }
                for (p, s) in large.counts.iter_mut().zip(&small.counts) {
                    *p -= s;
                }
                (lh, rh) = if left_small { (Some(small), Some(large)) } else { (Some(large), Some(small)) };
            }
        }
        let l = self.grow(left_rows, depth + 1, lh, nodes, leaf);
        let r = self.grow(right_rows, depth + 1, rh, nodes, leaf);
        if let Node::Split { left, right, .. } = &mut nodes[id as usize] {
            *left = l;
            *right = r;
        }
        id
    }
}

/// Grow one tree over the rows with `include[row]` (all rows when `None`).
/// `contrib[row]` carries that row's weighted statistics and `leaf` turns a
/// node's summed statistics into its payload.
pub(crate) fn grow<L, R: Rng>(
    x: &Binned,
    include: Option<&[bool]>,
    contrib: &[Stats],
    impurity: Impurity,
    params: GrowParams,
    rng: Option<&mut R>,
    leaf: impl Fn(&Stats) -> L,
) -> Tree<L> {
    let mut rows: Vec<u32> = (0..x.n_rows as u32)
        .filter(|&r| include.is_none_or(|inc| inc[r as usize]))
        .collect();
    let all_features = params.max_features.is_none_or(|k| k >= x.n_cols);
    let params = GrowParams {
        max_features: if all_features { None } else { params.max_features },
        ..params
    };
    let mut g = Grower {
        x,
        contrib,
        impurity,
        params,
        rng,
        scratch: Vec::with_capacity(rows.len()),
        subset_hist: Hist::zeros(if all_features { 0 } else { x.total_bins() }),
    };
    let root_hist = (all_features && g.may_split(0, rows.len())).then(|| {
        let mut h = Hist::zeros(x.total_bins());
        g.fill_all(&mut h, &rows);
        h
    });
    let mut nodes = Vec::new();
    g.grow(&mut rows, 0, root_hist, &mut nodes, &leaf);
    Tree { nodes }
}

/// Gini contribution of a row: its weight in its class slot.
pub(crate) fn class_contrib(label: usize, weight: f64) -> Stats {
    let mut s = [0.0; 4];
    s[label] = weight;
    s
}
