//! Two-hour-ahead overflow risk.
//!
//! Features are the maximum rainfall accumulated over several window lengths
//! within the past 24 hours, the current basin level, and sin/cos encodings of
//! month, day and hour. A boosted stump classifier turns them into a score in
//! `[0, 1]` which maps onto a traffic-light band.

mod gbdt;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::timeseries::{interpolate_linear, slice_window, HourlySeries, Timestamp};

pub use gbdt::{
    fit_gbdt, fit_gbdt_matrix, log_loss, predict_risk, predict_vector, read_gbdt_model,
    write_gbdt_model, GbdtFit, GbdtModel, Stump, DEFAULT_LEARNING_RATE, DEFAULT_ROUNDS,
};

/// Accumulation windows in hours.
pub const RISK_WINDOWS: [usize; 6] = [1, 2, 3, 6, 12, 24];
pub const RAIN_LOOKBACK_HOURS: usize = 24;
pub const RISK_LEAD_HOURS: usize = 2;
pub const LOW_RISK_UPPER: f64 = 0.33;
pub const MEDIUM_RISK_UPPER: f64 = 0.67;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskFeatures {
    /// `(window_hours, max accumulated mm)` in ascending window order.
    pub max_accum: Vec<(usize, f64)>,
    pub current_level: f64,
    /// sin/cos of month, day-of-month and hour angles.
    pub cyc: [f64; 6],
}

impl RiskFeatures {
    /// Flat layout: accumulations, level, cyclic pairs.
    pub fn to_vector(&self) -> Vec<f64> {
        self.max_accum
            .iter()
            .map(|(_, v)| *v)
            .chain(std::iter::once(self.current_level))
            .chain(self.cyc)
            .collect()
    }

    pub fn accum(&self, window: usize) -> Option<f64> {
        self.max_accum
            .iter()
            .find(|(w, _)| *w == window)
            .map(|(_, v)| *v)
    }
}

pub fn cyclic_features(at: Timestamp) -> [f64; 6] {
    let month = TAU * (at.month() - 1) as f64 / 12.0;
    let day = TAU * (at.day() - 1) as f64 / 31.0;
    let hour = TAU * at.hour() as f64 / 24.0;
    [
        month.sin(),
        month.cos(),
        day.sin(),
        day.cos(),
        hour.sin(),
        hour.cos(),
    ]
}

/// [`engineer_features_with`] over [`RISK_WINDOWS`].
pub fn engineer_features(
    rain_24h: &HourlySeries,
    current_level: f64,
    at: Timestamp,
) -> Result<RiskFeatures> {
    engineer_features_with(&RISK_WINDOWS, rain_24h, current_level, at)
}

/// Gaps in the rainfall window count as 0 mm.
pub fn engineer_features_with(
    windows: &[usize],
    rain_24h: &HourlySeries,
    current_level: f64,
    at: Timestamp,
) -> Result<RiskFeatures> {
    if rain_24h.len() != RAIN_LOOKBACK_HOURS || rain_24h.last_timestamp() != Some(at) {
        return Err(Error::Layout(format!(
            "rainfall window must hold {RAIN_LOOKBACK_HOURS} hours ending at {at}, got {} hours from {}",
            rain_24h.len(),
            rain_24h.start
        )));
    }
    if windows.windows(2).any(|w| w[0] >= w[1])
        || windows.iter().any(|&w| w == 0 || w > RAIN_LOOKBACK_HOURS)
    {
        return Err(Error::Domain(format!(
            "windows must be strictly increasing within 1..=24, got {windows:?}"
        )));
    }
    let rain: Vec<f64> = rain_24h.values.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut prefix = vec![0.0; rain.len() + 1];
    for (i, r) in rain.iter().enumerate() {
        prefix[i + 1] = prefix[i] + r;
    }
    let mut running = 0.0f64;
    let max_accum = windows
        .iter()
        .map(|&w| {
            let best = (w..=rain.len())
                .map(|end| (prefix[end] - prefix[end - w]).max(0.0))
                .fold(0.0f64, f64::max);
            // Sums of non-negative rain cannot shrink as the window grows.
            running = running.max(best);
            (w, running)
        })
        .collect();
    Ok(RiskFeatures {
        max_accum,
        current_level,
        cyc: cyclic_features(at),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskBand {
    Low,
    Medium,
    High,
}

/// Low below 0.33, High above 0.67, Medium in between (both ends inclusive).
pub fn classify_risk(score: f64) -> Result<RiskBand> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Domain(format!(
            "risk score must lie in [0, 1], got {score}"
        )));
    }
    Ok(if score < LOW_RISK_UPPER {
        RiskBand::Low
    } else if score <= MEDIUM_RISK_UPPER {
        RiskBand::Medium
    } else {
        RiskBand::High
    })
}

/// `labels[i]` is true iff the level reaches `level_max` at some hour in
/// `(t_i, t_i + lead]`.
pub fn label_overflows(level: &HourlySeries, level_max: f64, lead: usize) -> Result<Vec<bool>> {
    if lead == 0 {
        return Err(Error::Domain("lead must be >= 1 hour".into()));
    }
    let hit: Vec<bool> = level
        .values
        .iter()
        .map(|v| v.is_some_and(|v| v >= level_max))
        .collect();
    Ok((0..hit.len())
        .map(|i| hit.iter().skip(i + 1).take(lead).any(|&h| h))
        .collect())
}

/// Risk features at `at` from a dataset: site-mean rainfall over the previous
/// 24 hours and the interpolated basin level.
pub fn features_at(dataset: &Dataset, at: Timestamp) -> Result<RiskFeatures> {
    let from = at - (RAIN_LOOKBACK_HOURS as i64 - 1);
    let rain = dataset.site_mean_rainfall(from, at + 1);
    if rain.present_count() == 0 {
        return Err(Error::InsufficientData(format!(
            "no rainfall observed in the 24 h before {at}"
        )));
    }
    let level_window = interpolate_linear(&slice_window(
        dataset.basin_series(),
        at,
        RAIN_LOOKBACK_HOURS,
    )?);
    let level = level_window
        .get(at)
        .ok_or_else(|| Error::InsufficientData(format!("no basin level at {at}")))?;
    engineer_features(&rain, level, at)
}

/// Builds one training row per hour of the basin series that has a full
/// rainfall lookback and a (possibly interpolated) level.
pub fn training_set(dataset: &Dataset, level_max: f64) -> Result<(Vec<RiskFeatures>, Vec<bool>)> {
    let basin = dataset.basin_series();
    let labels = label_overflows(basin, level_max, RISK_LEAD_HOURS)?;
    let level = interpolate_linear(basin);
    let lookback = RAIN_LOOKBACK_HOURS as i64;
    let rain = dataset.site_mean_rainfall(basin.start - lookback, basin.end());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    // The final `lead` hours have no complete future window.
    let usable = basin.len().saturating_sub(RISK_LEAD_HOURS);
    for (i, &label) in labels.iter().enumerate().take(usable) {
        let at = basin.start + i as i64;
        let Some(current) = level.get(at) else {
            continue;
        };
        let window = rain.range(at - lookback + 1, at + 1);
        if window.present_count() < RAIN_LOOKBACK_HOURS {
            continue;
        }
        xs.push(engineer_features(&window, current, at)?);
        ys.push(label);
    }
    Ok((xs, ys))
}

/// Default booster on [`training_set`].
pub fn fit_risk_model(train: &Dataset, level_max: f64) -> Result<GbdtModel> {
    let (xs, ys) = training_set(train, level_max)?;
    fit_gbdt(&xs, &ys, DEFAULT_ROUNDS, DEFAULT_LEARNING_RATE)
}
