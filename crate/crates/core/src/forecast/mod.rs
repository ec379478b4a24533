//! Basin filling-level forecasting under the two deployment regimes.
//!
//! Cloud forecasts see 72 hours of basin history plus network-wide rainfall
//! and the rain forecast, and predict 12 hours ahead. Edge forecasts see only
//! the last 24 hours of the basin's own level and predict one hour ahead.

mod ar;
mod baseline;
mod metrics;
mod model_file;
mod precomputed;
mod regime;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Timestamp;

pub use ar::{fit_ar, forecast_ar, ArModel, ExoChannel, ExoInput, ExoSeries};
pub use baseline::{persistence_forecast, seasonal_naive_forecast};
pub use metrics::{evaluate, Metrics};
pub use model_file::{read_ar_model, write_ar_model};
pub use precomputed::{load_precomputed, write_precomputed, PrecomputedForecasts};
pub use regime::{
    default_registry, fit_cloud_model, fit_edge_model, regime_inputs, run_regime, ArForecaster,
    Forecaster, ModelRegistry, Persistence, Precomputed, RegimeInputs, SeasonalNaive,
    CLOUD_AR_ORDER, CLOUD_RAIN_LAGS, DEFAULT_LAMBDA, EDGE_AR_ORDER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastRegime {
    /// Standard operation: 72 h multi-sensor context, 12 h horizon.
    Cloud,
    /// Network outage: 24 h basin-only context, 1 h horizon.
    Edge,
}

impl ForecastRegime {
    pub const fn context_hours(self) -> usize {
        match self {
            ForecastRegime::Cloud => 72,
            ForecastRegime::Edge => 24,
        }
    }

    pub const fn horizon_hours(self) -> usize {
        match self {
            ForecastRegime::Cloud => 12,
            ForecastRegime::Edge => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ForecastRegime::Cloud => "cloud",
            ForecastRegime::Edge => "edge",
        }
    }
}

impl fmt::Display for ForecastRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForecastRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cloud" => Ok(ForecastRegime::Cloud),
            "edge" => Ok(ForecastRegime::Edge),
            _ => Err(Error::Domain(format!(
                "unknown regime `{s}` (expected cloud or edge)"
            ))),
        }
    }
}

/// Predicted levels for hours `origin + 1 ..= origin + horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub origin: Timestamp,
    pub regime: ForecastRegime,
    pub model_id: String,
    pub values: Vec<f64>,
}

impl ForecastResult {
    /// Validates horizon length and non-negativity.
    pub fn new(
        origin: Timestamp,
        regime: ForecastRegime,
        model_id: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != regime.horizon_hours() {
            return Err(Error::Layout(format!(
                "{regime} forecast at {origin} has {} values, expected {}",
                values.len(),
                regime.horizon_hours()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "forecast at {origin} contains invalid level {v}"
            )));
        }
        Ok(ForecastResult {
            origin,
            regime,
            model_id: model_id.into(),
            values,
        })
    }

    pub fn target_times(&self) -> impl Iterator<Item = Timestamp> + '_ {
        (1..=self.values.len() as i64).map(move |k| self.origin + k)
    }
}
