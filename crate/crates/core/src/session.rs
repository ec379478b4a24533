//! The replay session: dataset, trained models, system state and clock, driven
//! by a single writer through [`Command`]s.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{default_registry, load_precomputed, ForecastRegime, Precomputed};
use crate::ingest::{default_partition, load_data_dir, DataDir, Dataset};
use crate::ops::{ModelSelection, OperationalMode, SystemState};
use crate::replay::{Direction, ReplayClock};
use crate::risk::fit_risk_model;
use crate::snapshot::{build_snapshot, Models, Snapshot};
use crate::timeseries::{HourlySeries, Timestamp};

/// Optional file of precomputed forecasts inside a data directory.
pub const PRECOMPUTED_FILE: &str = "precomputed.csv";
pub const PRECOMPUTED_MODEL_ID: &str = "precomputed";

fn default_speed() -> f64 {
    1.0
}

fn default_paused() -> bool {
    true
}

/// Persisted session settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub data_dir: PathBuf,
    pub mode: OperationalMode,
    #[serde(default)]
    pub models: ModelSelection,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_paused")]
    pub paused: bool,
    /// Defaults to the start of the replay span.
    #[serde(default)]
    pub sim_time: Option<Timestamp>,
}

impl SessionConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        SessionConfig {
            data_dir: data_dir.into(),
            mode: OperationalMode::Standard,
            models: ModelSelection::default(),
            speed: default_speed(),
            paused: default_paused(),
            sim_time: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Writes to a sibling temporary file and renames it over `path`.
    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        std::fs::write(&tmp, self.to_toml()?).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetMode(OperationalMode),
    SelectModel {
        regime: ForecastRegime,
        model_id: String,
    },
    SetSpeed(f64),
    /// `+1` or `-1` hour.
    Step(i64),
    SetPaused(bool),
    SeekRain {
        threshold_mm: f64,
        direction: Direction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Applied,
    Seek { found: bool, sim_time: Timestamp },
}

/// Data and models shared by every session over the same directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub dataset: Arc<Dataset>,
    pub models: Arc<Models>,
    /// Inclusive replay span.
    pub span: (Timestamp, Timestamp),
}

impl Workspace {
    /// Trains the default models on the data before the replay span.
    ///
    /// With two or more calendar years of basin data the last year is
    /// replayed and earlier years train the models; otherwise the whole
    /// series is used for both.
    pub fn from_data_dir(dir: &DataDir, precomputed: Option<&Path>) -> Result<Workspace> {
        let dataset = &dir.dataset;
        let basin = dataset.basin_series();
        let last = basin
            .last_timestamp()
            .ok_or_else(|| Error::InsufficientData("basin series is empty".into()))?;
        let (train, span) = match default_partition(dataset) {
            Ok(p) => {
                let eval = p.eval.basin_series();
                (p.train, (eval.start, last))
            }
            Err(Error::InsufficientData(_)) => (dataset.clone(), (basin.start, last)),
            Err(e) => return Err(e),
        };
        let mut forecasters = default_registry(&train)?;
        if let Some(path) = precomputed {
            let forecasts = load_precomputed(path)?;
            for regime in [ForecastRegime::Cloud, ForecastRegime::Edge] {
                forecasters.register(
                    regime,
                    Arc::new(Precomputed {
                        id: PRECOMPUTED_MODEL_ID.into(),
                        forecasts: forecasts.clone(),
                    }),
                );
            }
        }
        // A span without any overflow cannot train the classifier.
        let risk = fit_risk_model(&train, dir.overflow_level()).ok();
        Ok(Workspace {
            dataset: Arc::new(dataset.clone()),
            models: Arc::new(Models { forecasters, risk }),
            span,
        })
    }

    pub fn load(data_dir: &Path) -> Result<Workspace> {
        let dir = load_data_dir(data_dir)?;
        let pre = data_dir.join(PRECOMPUTED_FILE);
        Self::from_data_dir(&dir, pre.exists().then_some(pre.as_path()))
    }
}

/// Single-writer session state.
#[derive(Debug, Clone)]
pub struct Engine {
    workspace: Workspace,
    data_dir: PathBuf,
    rain: HourlySeries,
    state: SystemState,
    clock: ReplayClock,
}

impl Engine {
    pub fn new(workspace: Workspace, config: &SessionConfig) -> Result<Engine> {
        let (start, end) = workspace.span;
        let dataset = &workspace.dataset;
        for regime in [ForecastRegime::Cloud, ForecastRegime::Edge] {
            workspace
                .models
                .forecasters
                .get(regime, config.models.for_regime(regime))?;
        }
        let clock = ReplayClock::new(
            start,
            end,
            config.sim_time.unwrap_or(start),
            config.speed,
            config.paused,
        )?;
        let state = SystemState::new(config.mode, clock.sim_time, config.models.clone(), dataset);
        let rain = dataset.site_mean_rainfall(start, end + 1);
        Ok(Engine {
            workspace,
            data_dir: config.data_dir.clone(),
            rain,
            state,
            clock,
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn clock(&self) -> &ReplayClock {
        &self.clock
    }

    pub fn dataset(&self) -> &Dataset {
        &self.workspace.dataset
    }

    pub fn snapshot(&self) -> Snapshot {
        build_snapshot(
            &self.workspace.dataset,
            &self.state,
            &self.clock,
            &self.workspace.models,
        )
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            data_dir: self.data_dir.clone(),
            mode: self.state.mode,
            models: self.state.models.clone(),
            speed: self.clock.speed,
            paused: self.clock.paused,
            sim_time: Some(self.clock.sim_time),
        }
    }

    fn sync_time(&mut self) {
        if self.state.sim_time != self.clock.sim_time {
            self.state = self
                .state
                .at_time(self.clock.sim_time, &self.workspace.dataset);
        }
    }

    pub fn apply(&mut self, cmd: Command) -> Result<Outcome> {
        let dataset = &self.workspace.dataset;
        let mut outcome = Outcome::Applied;
        match cmd {
            Command::SetMode(mode) => self.state = self.state.set_mode(mode, dataset),
            Command::SelectModel { regime, model_id } => {
                self.workspace.models.forecasters.get(regime, &model_id)?;
                let models = self.state.models.with(regime, model_id);
                self.state = self.state.with_models(models, dataset);
            }
            Command::SetSpeed(speed) => self.clock = self.clock.set_speed(speed)?,
            Command::Step(delta) => {
                if delta != 1 && delta != -1 {
                    return Err(Error::Domain(format!(
                        "step delta must be +1 or -1, got {delta}"
                    )));
                }
                self.clock = self.clock.step(delta);
            }
            Command::SetPaused(paused) => self.clock = self.clock.set_paused(paused),
            Command::SeekRain {
                threshold_mm,
                direction,
            } => {
                let (clock, found) =
                    self.clock
                        .seek_rainfall(&self.rain, threshold_mm, direction)?;
                self.clock = clock;
                outcome = Outcome::Seek {
                    found,
                    sim_time: clock.sim_time,
                };
            }
        }
        self.sync_time();
        Ok(outcome)
    }

    /// Advances the clock by `wall_dt` seconds and returns one snapshot per
    /// whole simulated hour that elapsed, in order.
    pub fn advance(&mut self, wall_dt: f64) -> Vec<Snapshot> {
        let target = self.clock.tick(wall_dt);
        let mut out = Vec::new();
        while self.clock.sim_time < target.sim_time {
            self.clock = self.clock.step(1);
            if self.clock.sim_time == target.sim_time {
                self.clock = target;
            }
            self.sync_time();
            out.push(self.snapshot());
        }
        self.clock = target;
        self.sync_time();
        out
    }
}
