//! Ridge-regularised autoregressive models with optional exogenous lags.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{interpolate_linear, HourlySeries, Timestamp};

/// Relative size below which a diagonal entry of R marks a dependent column.
const RANK_TOLERANCE: f64 = 1e-10;
/// Minimum usable rows per fitted coefficient.
const ROWS_PER_COEFF: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExoChannel {
    pub name: String,
    pub lags: Vec<usize>,
    pub coeffs: Vec<f64>,
}

/// `y_t = intercept + sum_i ar[i] * y_{t-1-i} + sum_c sum_j exo[c].coeffs[j] * x_c(t - lags[j])`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    pub intercept: f64,
    pub ar_coeffs: Vec<f64>,
    pub exo: Vec<ExoChannel>,
    pub ridge_lambda: f64,
}

impl ArModel {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.ar_coeffs.len() != self.order {
            return Err(Error::Layout(format!(
                "order {} with {} autoregressive coefficients",
                self.order,
                self.ar_coeffs.len()
            )));
        }
        for ch in &self.exo {
            if ch.lags.len() != ch.coeffs.len() {
                return Err(Error::Layout(format!(
                    "channel `{}` has {} lags but {} coefficients",
                    ch.name,
                    ch.lags.len(),
                    ch.coeffs.len()
                )));
            }
        }
        let finite = std::iter::once(self.intercept)
            .chain(self.ar_coeffs.iter().copied())
            .chain(self.exo.iter().flat_map(|c| c.coeffs.iter().copied()))
            .all(f64::is_finite);
        if !finite || self.ridge_lambda.is_nan() || self.ridge_lambda < 0.0 {
            return Err(Error::Domain("model parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn num_coeffs(&self) -> usize {
        self.order + self.exo.iter().map(|c| c.lags.len()).sum::<usize>()
    }
}

/// A training-time exogenous regressor: a series and the lags it enters with.
#[derive(Debug, Clone)]
pub struct ExoSeries<'a> {
    pub name: &'a str,
    pub series: &'a HourlySeries,
    pub lags: Vec<usize>,
}

/// Exogenous values at forecast time. `history` supplies hours up to the
/// origin, `future` the hours after it.
#[derive(Debug, Clone)]
pub struct ExoInput {
    pub history: HourlySeries,
    pub future: Option<HourlySeries>,
}

/// Fits by ridge least squares over the lagged design, leaving the intercept
/// unpenalised. All inputs are linearly interpolated first; rows with any
/// remaining gap are dropped.
pub fn fit_ar(
    train: &HourlySeries,
    order: usize,
    lambda: f64,
    exo: &[ExoSeries<'_>],
) -> Result<ArModel> {
    if order == 0 {
        return Err(Error::Domain("autoregressive order must be >= 1".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "ridge lambda must be >= 0, got {lambda}"
        )));
    }
    let y = interpolate_linear(train);
    let exo_filled: Vec<HourlySeries> = exo.iter().map(|e| interpolate_linear(e.series)).collect();
    let k = order + exo.iter().map(|e| e.lags.len()).sum::<usize>();
    let cols = k + 1;

    let mut rows: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut row = vec![0.0; cols];
    'rows: for (t, target) in y.iter() {
        let Some(target) = target else { continue };
        row[0] = 1.0;
        for (lag, slot) in (1..=order).zip(&mut row[1..]) {
            match y.get(t - lag as i64) {
                Some(v) => *slot = v,
                None => continue 'rows,
            }
        }
        let mut c = order + 1;
        for (e, filled) in exo.iter().zip(&exo_filled) {
            for &lag in &e.lags {
                match filled.get(t - lag as i64) {
                    Some(v) => row[c] = v,
                    None => continue 'rows,
                }
                c += 1;
            }
        }
        rows.extend_from_slice(&row);
        targets.push(target);
    }

    let n = targets.len();
    if n < ROWS_PER_COEFF * k {
        return Err(Error::InsufficientData(format!(
            "{n} usable rows for {k} coefficients; need at least {}",
            ROWS_PER_COEFF * k
        )));
    }

    let ridge = lambda.sqrt();
    let extra = if lambda > 0.0 { k } else { 0 };
    let mut design = DMatrix::<f64>::zeros(n + extra, cols);
    for (i, r) in rows.chunks_exact(cols).enumerate() {
        for (j, v) in r.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n + extra);
    for (i, t) in targets.iter().enumerate() {
        rhs[i] = *t;
    }
    for j in 0..extra {
        design[(n + j, j + 1)] = ridge;
    }

    let qr = design.qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal()
        .iter()
        .any(|v| v.abs() <= RANK_TOLERANCE * diag_max)
    {
        return Err(Error::RankDeficient);
    }
    let qtb = qr.q().transpose() * rhs;
    let w = r.solve_upper_triangular(&qtb).ok_or(Error::RankDeficient)?;

    let mut next = order + 1;
    let exo_channels = exo
        .iter()
        .map(|e| {
            let coeffs = w.as_slice()[next..next + e.lags.len()].to_vec();
            next += e.lags.len();
            ExoChannel {
                name: e.name.to_string(),
                lags: e.lags.clone(),
                coeffs,
            }
        })
        .collect();
    let model = ArModel {
        order,
        intercept: w[0],
        ar_coeffs: w.as_slice()[1..=order].to_vec(),
        exo: exo_channels,
        ridge_lambda: lambda,
    };
    model.validate()?;
    Ok(model)
}

fn exo_value(ch: &ExoChannel, input: &ExoInput, origin: Timestamp, t: Timestamp) -> Result<f64> {
    if t <= origin {
        input.history.get(t).ok_or_else(|| {
            Error::InsufficientData(format!("channel `{}` has no value at {t}", ch.name))
        })
    } else {
        input
            .future
            .as_ref()
            .and_then(|f| f.get(t))
            .ok_or_else(|| Error::MissingExoFuture(ch.name.clone()))
    }
}

/// Recursive multi-step forecast from the last context slot. Each prediction
/// is clamped at 0 and fed back as a lag for the next step.
///
/// `exo` must match the model's channels by position.
pub fn forecast_ar(
    model: &ArModel,
    context: &HourlySeries,
    horizon: usize,
    exo: &[ExoInput],
) -> Result<Vec<f64>> {
    model.validate()?;
    if exo.len() != model.exo.len() {
        return Err(Error::Layout(format!(
            "model expects {} exogenous channels, got {}",
            model.exo.len(),
            exo.len()
        )));
    }
    let filled = interpolate_linear(context);
    let origin = filled
        .last_timestamp()
        .ok_or_else(|| Error::InsufficientData("empty context".into()))?;
    let mut lags = Vec::with_capacity(model.order + horizon);
    for i in (0..model.order as i64).rev() {
        let t = origin - i;
        lags.push(filled.get(t).ok_or_else(|| {
            Error::InsufficientData(format!(
                "context needs {} present values ending at {origin}; missing {t}",
                model.order
            ))
        })?);
    }

    let mut out = Vec::with_capacity(horizon);
    for step in 1..=horizon as i64 {
        let t = origin + step;
        let n = lags.len();
        let mut y = model.intercept;
        for (i, c) in model.ar_coeffs.iter().enumerate() {
            y += c * lags[n - 1 - i];
        }
        for (ch, input) in model.exo.iter().zip(exo) {
            for (&lag, c) in ch.lags.iter().zip(&ch.coeffs) {
                y += c * exo_value(ch, input, origin, t - lag as i64)?;
            }
        }
        let y = y.max(0.0);
        out.push(y);
        lags.push(y);
    }
    Ok(out)
}
