//! Combined-sewer overflow monitoring: hourly telemetry, basin filling-level
//! forecasting under cloud and edge regimes, two-hour overflow risk, failover
//! state and replay.

pub mod error;
pub mod forecast;
pub mod ingest;
pub mod ops;
pub mod replay;
pub mod risk;
pub mod session;
pub mod snapshot;
pub mod timeseries;

pub use error::{Error, Result};
pub use forecast::{ForecastRegime, ForecastResult};
pub use ingest::Dataset;
pub use ops::{OperationalMode, SystemState};
pub use replay::{ClockView, Direction, ReplayClock};
pub use risk::{GbdtModel, RiskBand, RiskFeatures};
pub use session::{Command, Engine, SessionConfig, Workspace};
pub use snapshot::Snapshot;
pub use timeseries::{
    classify_filling_level, interpolate_linear, resample_hourly, slice_window, FillingBand,
    HourlySeries, SensorKind, SensorMeta, Timestamp,
};
