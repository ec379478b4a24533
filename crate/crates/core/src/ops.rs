//! Operating mode, per-sensor status and regime selection.
//!
//! In standard operation the cloud sees every sensor. During a full network
//! outage only the monitoring node at the basin is reachable, so every remote
//! sensor is reported inactive and forecasting falls back to the edge regime.

use serde::{Deserialize, Serialize};

use crate::forecast::ForecastRegime;
use crate::ingest::Dataset;
use crate::timeseries::Timestamp;

/// Hours of silence after which a sensor counts as inactive.
pub const DEFAULT_ACTIVITY_WINDOW_HOURS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationalMode {
    Standard,
    FullOutage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStatus {
    pub sensor_id: String,
    pub status: Activity,
    pub is_basin: bool,
}

/// Model id chosen for each regime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub cloud: String,
    pub edge: String,
}

impl Default for ModelSelection {
    fn default() -> Self {
        ModelSelection {
            cloud: "arx".into(),
            edge: "ar".into(),
        }
    }
}

impl ModelSelection {
    pub fn for_regime(&self, regime: ForecastRegime) -> &str {
        match regime {
            ForecastRegime::Cloud => &self.cloud,
            ForecastRegime::Edge => &self.edge,
        }
    }

    pub fn with(&self, regime: ForecastRegime, model_id: impl Into<String>) -> ModelSelection {
        let mut next = self.clone();
        match regime {
            ForecastRegime::Cloud => next.cloud = model_id.into(),
            ForecastRegime::Edge => next.edge = model_id.into(),
        }
        next
    }
}

pub fn select_regime(mode: OperationalMode) -> ForecastRegime {
    match mode {
        OperationalMode::Standard => ForecastRegime::Cloud,
        OperationalMode::FullOutage => ForecastRegime::Edge,
    }
}

pub fn derive_statuses(
    mode: OperationalMode,
    dataset: &Dataset,
    at: Timestamp,
) -> Vec<SensorStatus> {
    derive_statuses_with(mode, dataset, at, DEFAULT_ACTIVITY_WINDOW_HOURS)
}

/// A sensor is active when it reported at least once in the `window` hours
/// ending at `at`. During a full outage that rule applies to the basin sensor
/// only; every other sensor is inactive.
pub fn derive_statuses_with(
    mode: OperationalMode,
    dataset: &Dataset,
    at: Timestamp,
    window: usize,
) -> Vec<SensorStatus> {
    dataset
        .sensors
        .iter()
        .map(|meta| {
            let reachable = mode == OperationalMode::Standard || meta.is_basin_level;
            let series = &dataset.series[&meta.id];
            let recent = (0..window as i64).any(|k| series.get(at - k).is_some());
            SensorStatus {
                sensor_id: meta.id.clone(),
                status: if reachable && recent {
                    Activity::Active
                } else {
                    Activity::Inactive
                },
                is_basin: meta.is_basin_level,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub mode: OperationalMode,
    pub regime: ForecastRegime,
    pub sim_time: Timestamp,
    /// Model used for the active regime.
    pub selected_model: String,
    pub models: ModelSelection,
    pub statuses: Vec<SensorStatus>,
}

impl SystemState {
    pub fn new(
        mode: OperationalMode,
        sim_time: Timestamp,
        models: ModelSelection,
        dataset: &Dataset,
    ) -> Self {
        let regime = select_regime(mode);
        SystemState {
            mode,
            regime,
            sim_time,
            selected_model: models.for_regime(regime).to_string(),
            statuses: derive_statuses(mode, dataset, sim_time),
            models,
        }
    }

    /// Switches mode and re-derives regime, model and statuses. A no-op when
    /// the mode is unchanged.
    pub fn set_mode(&self, mode: OperationalMode, dataset: &Dataset) -> SystemState {
        if mode == self.mode {
            return self.clone();
        }
        SystemState::new(mode, self.sim_time, self.models.clone(), dataset)
    }

    pub fn at_time(&self, sim_time: Timestamp, dataset: &Dataset) -> SystemState {
        SystemState::new(self.mode, sim_time, self.models.clone(), dataset)
    }

    pub fn with_models(&self, models: ModelSelection, dataset: &Dataset) -> SystemState {
        SystemState::new(self.mode, self.sim_time, models, dataset)
    }
}
