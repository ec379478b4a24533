//! Gradient boosting with logistic loss over depth-1 regression stumps.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::RiskFeatures;

pub const DEFAULT_ROUNDS: usize = 100;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

/// Hessian mass below which a leaf gets no update.
const MIN_HESSIAN: f64 = 1e-12;

/// Step halvings tried before a round is dropped to a zero update.
const MAX_HALVINGS: usize = 60;

/// Rows with `x[feature] <= threshold` take `left`, the rest `right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn output(&self, x: &[f64]) -> f64 {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Log-odds before any stump.
    pub base_score: f64,
    pub learning_rate: f64,
    pub stumps: Vec<Stump>,
}

impl GbdtModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        let sum = self.stumps.iter().fold(0.0, |acc, s| acc + s.output(x));
        self.base_score + self.learning_rate * sum
    }

    fn check_layout(&self, x: &[f64]) -> Result<()> {
        match self.stumps.iter().find(|s| s.feature >= x.len()) {
            Some(s) => Err(Error::Layout(format!(
                "stump uses feature {} but the vector has {} features",
                s.feature,
                x.len()
            ))),
            None => Ok(()),
        }
    }

    /// The first `rounds` stumps only.
    pub fn truncated(&self, rounds: usize) -> GbdtModel {
        GbdtModel {
            stumps: self.stumps.iter().take(rounds).copied().collect(),
            ..self.clone()
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn predict_vector(model: &GbdtModel, x: &[f64]) -> Result<f64> {
    model.check_layout(x)?;
    Ok(sigmoid(model.raw_score(x)))
}

pub fn predict_risk(model: &GbdtModel, f: &RiskFeatures) -> Result<f64> {
    predict_vector(model, &f.to_vector())
}

fn point_loss(z: f64, y: bool) -> f64 {
    softplus(z) - if y { z } else { 0.0 }
}

fn mean_loss(scores: impl Iterator<Item = f64>, ys: &[bool]) -> f64 {
    let total: f64 = scores.zip(ys).map(|(z, &y)| point_loss(z, y)).sum();
    total / ys.len() as f64
}

/// Mean logistic loss.
pub fn log_loss(model: &GbdtModel, xs: &[Vec<f64>], ys: &[bool]) -> f64 {
    mean_loss(xs.iter().map(|x| model.raw_score(x)), ys)
}

/// A fitted model with the mean training loss after the base score (index 0)
/// and after each boosting round.
#[derive(Debug, Clone)]
pub struct GbdtFit {
    pub model: GbdtModel,
    pub train_loss: Vec<f64>,
}

/// Best split of one feature for residuals `g` by least squares, scanning
/// thresholds in ascending order. Returns `(gain, threshold)` where larger
/// gain means lower squared error.
fn best_split(order: &[usize], column: &[f64], g: &[f64], total: f64) -> Option<(f64, f64)> {
    let n = order.len();
    let mut best: Option<(f64, f64)> = None;
    let mut left_sum = 0.0;
    for k in 0..n - 1 {
        let i = order[k];
        left_sum += g[i];
        let (here, next) = (column[i], column[order[k + 1]]);
        if here == next {
            continue;
        }
        let nl = (k + 1) as f64;
        let nr = (n - k - 1) as f64;
        let right_sum = total - left_sum;
        let gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if best.is_none_or(|(b, _)| gain > b) {
            best = Some((gain, here + (next - here) / 2.0));
        }
    }
    best
}

fn newton_leaf(g: &[f64], h: &[f64], rows: impl Iterator<Item = usize>) -> f64 {
    let (sg, sh) = rows.fold((0.0, 0.0), |(a, b), i| (a + g[i], b + h[i]));
    if sh < MIN_HESSIAN {
        0.0
    } else {
        sg / sh
    }
}

/// Halves leaf values until the round does not raise the mean training loss,
/// starting from the full Newton step. Only leaves whose own loss rose are
/// halved. Returns the stump and the loss after it.
fn damp(
    mut stump: Stump,
    column: &[f64],
    sums: &[f64],
    ys: &[bool],
    base: f64,
    lr: f64,
    prev: f64,
) -> (Stump, f64) {
    let n = ys.len();
    let before: Vec<f64> = sums.iter().map(|s| base + lr * s).collect();
    let mut after = vec![0.0; n];
    for _ in 0..MAX_HALVINGS {
        let (mut dl, mut dr) = (0.0, 0.0);
        for i in 0..n {
            let left = column[i] <= stump.threshold;
            after[i] = base + lr * (sums[i] + if left { stump.left } else { stump.right });
            let d = point_loss(after[i], ys[i]) - point_loss(before[i], ys[i]);
            if left {
                dl += d;
            } else {
                dr += d;
            }
        }
        let loss = mean_loss(after.iter().copied(), ys);
        if loss <= prev {
            return (stump, loss);
        }
        let (halve_left, halve_right) = if dl > 0.0 || dr > 0.0 {
            (dl > 0.0, dr > 0.0)
        } else {
            (true, true)
        };
        if halve_left {
            stump.left /= 2.0;
        }
        if halve_right {
            stump.right /= 2.0;
        }
    }
    stump.left = 0.0;
    stump.right = 0.0;
    (stump, prev)
}

/// Fits on a dense feature matrix. Ties between equally good splits go to the
/// lowest feature index, then the lowest threshold.
pub fn fit_gbdt_matrix(xs: &[Vec<f64>], ys: &[bool], rounds: usize, lr: f64) -> Result<GbdtFit> {
    if rounds == 0 {
        return Err(Error::Domain("rounds must be >= 1".into()));
    }
    if !(lr > 0.0 && lr <= 1.0) {
        return Err(Error::Domain(format!(
            "learning rate must lie in (0, 1], got {lr}"
        )));
    }
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Layout(format!(
            "{} feature rows for {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let width = xs[0].len();
    if width == 0 || xs.iter().any(|x| x.len() != width) {
        return Err(Error::Layout(
            "feature rows must share one non-zero width".into(),
        ));
    }
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("features must be finite".into()));
    }
    let positives = ys.iter().filter(|&&y| y).count();
    if positives == 0 || positives == ys.len() {
        return Err(Error::InsufficientData(
            "labels must contain both classes".into(),
        ));
    }

    let n = xs.len();
    let rate = positives as f64 / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let columns: Vec<Vec<f64>> = (0..width)
        .map(|j| xs.iter().map(|x| x[j]).collect())
        .collect();
    let orders: Vec<Vec<usize>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            idx
        })
        .collect();

    let mut model = GbdtModel {
        base_score,
        learning_rate: lr,
        stumps: Vec::with_capacity(rounds),
    };
    // Per-row running sum of stump outputs, accumulated exactly as
    // `raw_score` does so the recorded loss matches `log_loss`.
    let mut sums = vec![0.0; n];
    let mut loss = log_loss(&model, xs, ys);
    let mut train_loss = vec![loss];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];

    for _ in 0..rounds {
        for i in 0..n {
            let p = sigmoid(base_score + lr * sums[i]);
            g[i] = if ys[i] { 1.0 } else { 0.0 } - p;
            h[i] = p * (1.0 - p);
        }
        let total: f64 = g.iter().sum();

        let mut choice: Option<(f64, usize, f64)> = None;
        for (j, order) in orders.iter().enumerate() {
            if let Some((gain, thr)) = best_split(order, &columns[j], &g, total) {
                if choice.is_none_or(|(b, _, _)| gain > b) {
                    choice = Some((gain, j, thr));
                }
            }
        }
        let newton = match choice {
            Some((_, feature, threshold)) => {
                let col = &columns[feature];
                Stump {
                    feature,
                    threshold,
                    left: newton_leaf(&g, &h, (0..n).filter(|&i| col[i] <= threshold)),
                    right: newton_leaf(&g, &h, (0..n).filter(|&i| col[i] > threshold)),
                }
            }
            None => {
                // Every feature is constant: a single-leaf stump.
                let v = newton_leaf(&g, &h, 0..n);
                Stump {
                    feature: 0,
                    threshold: f64::INFINITY,
                    left: v,
                    right: v,
                }
            }
        };
        let (mut stump, next) = damp(
            newton,
            &columns[newton.feature],
            &sums,
            ys,
            base_score,
            lr,
            loss,
        );
        if stump.threshold.is_infinite() {
            stump.right = stump.left;
        }
        for (s, x) in sums.iter_mut().zip(xs) {
            *s += stump.output(x);
        }
        model.stumps.push(stump);
        loss = next;
        train_loss.push(loss);
    }
    Ok(GbdtFit { model, train_loss })
}

pub fn fit_gbdt(
    features: &[RiskFeatures],
    labels: &[bool],
    rounds: usize,
    lr: f64,
) -> Result<GbdtModel> {
    let xs: Vec<Vec<f64>> = features.iter().map(RiskFeatures::to_vector).collect();
    Ok(fit_gbdt_matrix(&xs, labels, rounds, lr)?.model)
}

/// `base_score,lr` header and value line, then one
/// `feature_index,threshold,left_value,right_value` row per stump.
pub fn write_gbdt_model(path: impl AsRef<Path>, model: &GbdtModel) -> Result<()> {
    let mut out = format!(
        "base_score,lr\n{},{}\n",
        model.base_score, model.learning_rate
    );
    for s in &model.stumps {
        out += &format!("{},{},{},{}\n", s.feature, s.threshold, s.left, s.right);
    }
    let path = path.as_ref();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_gbdt_model(path: impl AsRef<Path>) -> Result<GbdtModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    if lines.next().map(|(_, l)| l.trim()) != Some("base_score,lr") {
        return Err(Error::Schema {
            file: path.to_path_buf(),
            message: "expected header `base_score,lr`".into(),
        });
    }
    let parse = |line: usize, col: &str, raw: &str| -> Result<f64> {
        raw.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| Error::Parse {
                file: path.to_path_buf(),
                line: line as u64 + 1,
                column: col.into(),
                message: format!("invalid number `{raw}`"),
            })
    };
    let (i, head) = lines.next().ok_or_else(|| Error::Schema {
        file: path.to_path_buf(),
        message: "missing base_score,lr values".into(),
    })?;
    let head: Vec<&str> = head.split(',').collect();
    if head.len() != 2 {
        return Err(Error::Parse {
            file: path.to_path_buf(),
            line: i as u64 + 1,
            column: "lr".into(),
            message: "expected two values".into(),
        });
    }
    let base_score = parse(i, "base_score", head[0])?;
    let learning_rate = parse(i, "lr", head[1])?;

    let columns = ["feature_index", "threshold", "left_value", "right_value"];
    let mut stumps = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                file: path.to_path_buf(),
                line: i as u64 + 1,
                column: "feature_index".into(),
                message: "expected four values".into(),
            });
        }
        let feature = f[0].trim().parse::<usize>().map_err(|_| Error::Parse {
            file: path.to_path_buf(),
            line: i as u64 + 1,
            column: columns[0].into(),
            message: format!("invalid index `{}`", f[0]),
        })?;
        stumps.push(Stump {
            feature,
            threshold: parse(i, columns[1], f[1])?,
            left: parse(i, columns[2], f[2])?,
            right: parse(i, columns[3], f[3])?,
        });
    }
    Ok(GbdtModel {
        base_score,
        learning_rate,
        stumps,
    })
}
