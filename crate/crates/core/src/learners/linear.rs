use serde::{Deserialize, Serialize};

use super::{softmax, TrainSet};

/// Per-feature z-scoring fitted on training rows; constant features keep
/// scale 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub(crate) fn fit(ts: &TrainSet) -> Standardizer {
        let n = ts.rows.len() as f64;
        let mut mean = vec![0.0; ts.d];
        for i in 0..ts.rows.len() {
            for (m, v) in mean.iter_mut().zip(ts.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; ts.d];
        for i in 0..ts.rows.len() {
            for ((s, v), m) in var.iter_mut().zip(ts.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub(crate) fn apply_all(&self, ts: &TrainSet) -> Vec<f64> {
        (0..ts.rows.len()).flat_map(|i| self.apply(ts.row(i))).collect()
    }
}

/// Multinomial logistic regression on standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub scaler: Standardizer,
    /// `3 × d` coefficients followed by 3 intercepts.
    pub params: Vec<f64>,
}

/// Weighted mean cross-entropy plus `λ/2 · ‖W‖²` (intercepts unpenalized).
/// `params` is `3 × d` coefficients then 3 intercepts; `x` is row-major.
pub fn logreg_loss(params: &[f64], x: &[f64], d: usize, labels: &[usize], weights: &[f64], lambda: f64) -> f64 {
    logreg_loss_grad(params, x, d, labels, weights, lambda, false).0
}

/// Loss and its analytic gradient with respect to `params`.
pub fn logreg_gradient(
    params: &[f64],
    x: &[f64],
    d: usize,
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
) -> (f64, Vec<f64>) {
    logreg_loss_grad(params, x, d, labels, weights, lambda, true)
}

fn margins(params: &[f64], row: &[f64], d: usize) -> [f64; 3] {
    std::array::from_fn(|c| {
        let w = &params[c * d..(c + 1) * d];
        params[3 * d + c] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
    })
}

fn logreg_loss_grad(
    params: &[f64],
    x: &[f64],
    d: usize,
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
    want_grad: bool,
) -> (f64, Vec<f64>) {
    let total: f64 = weights.iter().sum();
    let mut loss = 0.0;
    let mut grad = if want_grad { vec![0.0; params.len()] } else { Vec::new() };
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        let row = &x[i * d..(i + 1) * d];
        let z = margins(params, row, d);
        let zmax = z[0].max(z[1]).max(z[2]);
        let lse = zmax + z.iter().map(|v| (v - zmax).exp()).sum::<f64>().ln();
        loss += w * (lse - z[y]);
        if want_grad {
            let p = softmax(&z);
            for c in 0..3 {
                let g = w * (p[c] - if c == y { 1.0 } else { 0.0 }) / total;
                let gw = &mut grad[c * d..(c + 1) * d];
                for (a, b) in gw.iter_mut().zip(row) {
                    *a += g * b;
                }
                grad[3 * d + c] += g;
            }
        }
    }
    loss /= total;
    let coef = &params[..3 * d];
    loss += 0.5 * lambda * coef.iter().map(|v| v * v).sum::<f64>();
    if want_grad {
        for (g, v) in grad[..3 * d].iter_mut().zip(coef) {
            *g += lambda * v;
        }
    }
    (loss, grad)
}

impl LogReg {
    /// Full-batch gradient descent; the step halves whenever it would raise
    /// the objective.
    pub(crate) fn fit(ts: &TrainSet, lambda: f64, epochs: usize, learning_rate: f64) -> LogReg {
        let scaler = Standardizer::fit(ts);
        let x = scaler.apply_all(ts);
        let d = ts.d;
        let mut params = vec![0.0; 3 * d + 3];
        let mut lr = learning_rate;
        let (mut loss, mut grad) = logreg_gradient(&params, &x, d, ts.labels, ts.weights, lambda);
        for _ in 0..epochs {
            loop {
                let next: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
                let (l, g) = logreg_gradient(&next, &x, d, ts.labels, ts.weights, lambda);
                if l <= loss || lr < 1e-12 {
                    params = next;
                    loss = l;
                    grad = g;
                    break;
                }
                lr /= 2.0;
            }
        }
        LogReg { scaler, params }
    }

    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        let z = self.scaler.apply(x);
        softmax(&margins(&self.params, &z, self.scaler.mean.len()))
    }
}

/// One-vs-rest linear SVM; the three margins are softmax-normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub scaler: Standardizer,
    /// `3 × d` weights followed by 3 biases.
    pub params: Vec<f64>,
}

impl LinearSvm {
    /// Epoch-ordered subgradient descent on the weighted hinge loss with
    /// step `η0 / (1 + η0·λ·t)`.
    pub(crate) fn fit(ts: &TrainSet, lambda: f64, epochs: usize, eta0: f64) -> LinearSvm {
        let scaler = Standardizer::fit(ts);
        let x = scaler.apply_all(ts);
        let d = ts.d;
        let n = ts.rows.len();
        let mut params = vec![0.0; 3 * d + 3];
        for c in 0..3 {
            let mut t = 0u64;
            for _ in 0..epochs {
                for i in 0..n {
                    let eta = eta0 / (1.0 + eta0 * lambda * t as f64);
                    t += 1;
                    let row = &x[i * d..(i + 1) * d];
                    let y = if ts.labels[i] == c { 1.0 } else { -1.0 };
                    let (w, rest) = params.split_at_mut(3 * d);
                    let w = &mut w[c * d..(c + 1) * d];
                    let b = &mut rest[c];
                    let margin = y * (*b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>());
                    let shrink = 1.0 - eta * lambda;
                    w.iter_mut().for_each(|a| *a *= shrink);
                    if margin < 1.0 {
                        let step = eta * ts.weights[i] * y;
                        for (a, v) in w.iter_mut().zip(row) {
                            *a += step * v;
                        }
                        *b += step;
                    }
                }
            }
        }
        LinearSvm { scaler, params }
    }

    pub fn margins(&self, x: &[f64]) -> [f64; 3] {
        let z = self.scaler.apply(x);
        margins(&self.params, &z, self.scaler.mean.len())
    }

    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        softmax(&self.margins(x))
    }
}
