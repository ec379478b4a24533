//! A single-instant view of everything the dashboard shows.

use serde::{Deserialize, Serialize};

use crate::forecast::{run_regime, ForecastRegime, ForecastResult, ModelRegistry};
use crate::ingest::Dataset;
use crate::ops::{OperationalMode, SystemState};
use crate::replay::{ClockView, ReplayClock};
use crate::risk::{
    classify_risk, features_at, predict_risk, GbdtModel, RiskBand, RAIN_LOOKBACK_HOURS,
};
use crate::timeseries::{
    classify_filling_level, slice_window, FillingBand, HourlySeries, Timestamp,
};

/// Hours of basin history shown alongside every forecast.
pub const LEVEL_HISTORY_HOURS: usize = 72;

/// Forecasters plus the optional overflow-risk model.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub forecasters: ModelRegistry,
    pub risk: Option<GbdtModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesView {
    pub start: Timestamp,
    pub values: Vec<Option<f64>>,
}

impl From<&HourlySeries> for SeriesView {
    fn from(s: &HourlySeries) -> Self {
        SeriesView {
            start: s.start,
            values: s.values.clone(),
        }
    }
}

impl SeriesView {
    pub fn last_timestamp(&self) -> Option<Timestamp> {
        (!self.values.is_empty()).then(|| self.start + self.values.len() as i64 - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ForecastView {
    Ok(ForecastResult),
    InsufficientContext { reason: String },
}

impl ForecastView {
    pub fn result(&self) -> Option<&ForecastResult> {
        match self {
            ForecastView::Ok(f) => Some(f),
            ForecastView::InsufficientContext { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskView {
    pub score: f64,
    pub band: RiskBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sim_time: Timestamp,
    pub state: SystemState,
    pub clock: ClockView,
    pub forecast: ForecastView,
    /// `None` when no risk model is loaded or the inputs are unavailable.
    pub risk: Option<RiskView>,
    /// Site-mean rainfall for the 24 hours ending at `sim_time`.
    pub rainfall_past: SeriesView,
    /// Rain forecast for the next 12 hours; absent during a full outage.
    pub rainfall_future: Option<SeriesView>,
    pub level_past: SeriesView,
    /// Observed levels over the forecast horizon, for comparison only.
    pub level_future_truth: SeriesView,
    /// Band per slot of `level_past` followed by one per forecast value.
    pub bands: Vec<Option<FillingBand>>,
}

impl Snapshot {
    /// True when every view in the snapshot refers to `sim_time`.
    pub fn is_consistent(&self) -> bool {
        let t = self.sim_time;
        let horizon = self.state.regime.horizon_hours();
        let forecast_ok = match &self.forecast {
            ForecastView::Ok(f) => {
                f.origin == t && f.regime == self.state.regime && f.values.len() == horizon
            }
            ForecastView::InsufficientContext { .. } => true,
        };
        let future_ok = match (&self.rainfall_future, self.state.mode) {
            (None, OperationalMode::FullOutage) => true,
            (Some(f), OperationalMode::Standard) => f.start == t + 1,
            _ => false,
        };
        let forecast_len = self.forecast.result().map_or(0, |f| f.values.len());
        forecast_ok
            && future_ok
            && self.state.sim_time == t
            && self.clock.sim_time == t
            && self.rainfall_past.last_timestamp() == Some(t)
            && self.level_past.last_timestamp() == Some(t)
            && self.level_future_truth.start == t + 1
            && self.level_future_truth.values.len() == horizon
            && self.bands.len() == self.level_past.values.len() + forecast_len
    }
}

fn band(v: Option<f64>) -> Option<FillingBand> {
    v.and_then(|v| classify_filling_level(v).ok())
}

/// Derives a snapshot at `state.sim_time`. Forecast failures, including too
/// little history, surface as [`ForecastView::InsufficientContext`].
pub fn build_snapshot(
    dataset: &Dataset,
    state: &SystemState,
    clock: &ReplayClock,
    models: &Models,
) -> Snapshot {
    let t = state.sim_time;
    let regime = state.regime;
    let forecast = match run_regime(
        regime,
        dataset,
        t,
        &models.forecasters,
        &state.selected_model,
    ) {
        Ok(f) => ForecastView::Ok(f),
        Err(e) => ForecastView::InsufficientContext {
            reason: e.to_string(),
        },
    };
    let risk = models.risk.as_ref().and_then(|m| {
        let features = features_at(dataset, t).ok()?;
        let score = predict_risk(m, &features).ok()?;
        Some(RiskView {
            score,
            band: classify_risk(score).ok()?,
        })
    });

    let rainfall_past = dataset.site_mean_rainfall(t - (RAIN_LOOKBACK_HOURS as i64 - 1), t + 1);
    let future_hours = ForecastRegime::Cloud.horizon_hours() as i64;
    let rainfall_future = match state.mode {
        OperationalMode::FullOutage => None,
        OperationalMode::Standard => Some(match &dataset.rain_forecast {
            Some(rf) => SeriesView::from(&rf.range(t + 1, t + 1 + future_hours)),
            None => SeriesView {
                start: t + 1,
                values: vec![None; future_hours as usize],
            },
        }),
    };
    let basin = dataset.basin_series();
    let level_past = slice_window(basin, t, LEVEL_HISTORY_HOURS).expect("non-zero window");
    let truth = basin.range(t + 1, t + 1 + regime.horizon_hours() as i64);

    let mut bands: Vec<Option<FillingBand>> = level_past.values.iter().map(|v| band(*v)).collect();
    if let Some(f) = forecast.result() {
        bands.extend(f.values.iter().map(|v| band(Some(*v))));
    }

    Snapshot {
        sim_time: t,
        state: state.clone(),
        clock: clock.view(),
        forecast,
        risk,
        rainfall_past: SeriesView::from(&rainfall_past),
        rainfall_future,
        level_past: SeriesView::from(&level_past),
        level_future_truth: SeriesView::from(&truth),
        bands,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::default_registry;
    use crate::ingest::{generate_synthetic, SynthConfig};
    use crate::ops::ModelSelection;
    use crate::risk::fit_risk_model;

    fn setup() -> (Dataset, Models) {
        let cfg = SynthConfig {
            span_hours: 24 * 200,
            ..SynthConfig::default()
        };
        let d = generate_synthetic(&cfg, 21).unwrap();
        let models = Models {
            forecasters: default_registry(&d).unwrap(),
            risk: fit_risk_model(&d, cfg.level_max_m).ok(),
        };
        (d, models)
    }

    fn snapshot_at(d: &Dataset, models: &Models, mode: OperationalMode, offset: i64) -> Snapshot {
        let start = d.basin_series().start;
        let t = start + offset;
        let state = SystemState::new(mode, t, ModelSelection::default(), d);
        let clock = ReplayClock::new(start, d.basin_series().end() - 1, t, 1.0, true).unwrap();
        build_snapshot(d, &state, &clock, models)
    }

    #[test]
    fn outage_hides_rain_forecast() {
        let (d, m) = setup();
        let s = snapshot_at(&d, &m, OperationalMode::FullOutage, 500);
        assert!(s.rainfall_future.is_none());
        assert_eq!(s.forecast.result().unwrap().values.len(), 1);
        assert!(s.is_consistent());
    }

    #[test]
    fn standard_has_twelve_hour_forecast_and_risk() {
        let (d, m) = setup();
        assert!(m.risk.is_some(), "synthetic span should contain overflows");
        let s = snapshot_at(&d, &m, OperationalMode::Standard, 500);
        assert_eq!(s.forecast.result().unwrap().values.len(), 12);
        assert!(s.risk.is_some());
        assert!(s.rainfall_future.is_some());
        assert_eq!(s.bands.len(), 72 + 12);
        assert!(s.is_consistent());
    }

    #[test]
    fn early_sim_time_reports_insufficient_context() {
        let (d, m) = setup();
        let s = snapshot_at(&d, &m, OperationalMode::Standard, 10);
        assert!(matches!(
            s.forecast,
            ForecastView::InsufficientContext { .. }
        ));
        assert!(s.is_consistent());
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["forecast"]["status"], "insufficient_context");
    }

    #[test]
    fn snapshot_is_deterministic() {
        let (d, m) = setup();
        let a = snapshot_at(&d, &m, OperationalMode::Standard, 900);
        let b = snapshot_at(&d, &m, OperationalMode::Standard, 900);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
