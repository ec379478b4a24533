//! Datasets: CSV loading and writing, calendar-year partitioning and the
//! synthetic rainfall-driven generator.

mod csv_io;
mod synth;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::timeseries::{HourlySeries, SensorKind, SensorMeta, Timestamp};

pub use csv_io::{
    load_csv, load_data_dir, load_rain_forecast, write_csv, write_data_dir, DataDir, DATA_FILE,
    META_FILE, RAIN_FORECAST_FILE, RAIN_FORECAST_ID, SYNTH_FILE,
};
pub use synth::{generate_synthetic, simulate_reservoir, SynthConfig};

/// Identifier of the derived site-mean rainfall signal.
pub const SITE_MEAN_RAIN_ID: &str = "rain_site_mean";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sensors: Vec<SensorMeta>,
    pub series: BTreeMap<String, HourlySeries>,
    /// Forecast rainfall in mm/h, one value per target hour.
    pub rain_forecast: Option<HourlySeries>,
}

impl Dataset {
    /// Checks id uniqueness, the single-basin rule and series/metadata agreement.
    pub fn new(
        sensors: Vec<SensorMeta>,
        series: BTreeMap<String, HourlySeries>,
        rain_forecast: Option<HourlySeries>,
    ) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for s in &sensors {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Domain(format!("duplicate sensor id `{}`", s.id)));
            }
        }
        let basins = sensors.iter().filter(|s| s.is_basin_level).count();
        if basins != 1 {
            return Err(Error::Domain(format!(
                "dataset must have exactly one basin-level sensor, found {basins}"
            )));
        }
        for key in series.keys() {
            if !ids.contains(key.as_str()) {
                return Err(Error::Domain(format!(
                    "series `{key}` has no sensor metadata"
                )));
            }
        }
        let mut series = series;
        for s in &sensors {
            series
                .entry(s.id.clone())
                .or_insert_with(|| HourlySeries::empty(s.clone(), Timestamp::default()));
        }
        Ok(Dataset {
            sensors,
            series,
            rain_forecast,
        })
    }

    pub fn basin(&self) -> &SensorMeta {
        self.sensors
            .iter()
            .find(|s| s.is_basin_level)
            .expect("dataset invariant: one basin sensor")
    }

    pub fn basin_series(&self) -> &HourlySeries {
        &self.series[&self.basin().id]
    }

    pub fn sensor(&self, id: &str) -> Option<&SensorMeta> {
        self.sensors.iter().find(|s| s.id == id)
    }

    pub fn rainfall_sensors(&self) -> impl Iterator<Item = &SensorMeta> {
        self.sensors
            .iter()
            .filter(|s| s.kind == SensorKind::Rainfall)
    }

    /// Earliest start and latest end over all non-empty series.
    pub fn span(&self) -> Option<(Timestamp, Timestamp)> {
        self.series
            .values()
            .filter(|s| !s.is_empty())
            .fold(None, |acc, s| match acc {
                None => Some((s.start, s.end())),
                Some((a, b)) => Some((a.min(s.start), b.max(s.end()))),
            })
    }

    /// Mean over all rainfall sensors of the present values in each hour of
    /// `[from, to)`. Hours where no gauge reports are gaps.
    pub fn site_mean_rainfall(&self, from: Timestamp, to: Timestamp) -> HourlySeries {
        let n = (to - from).max(0) as usize;
        let mut sums = vec![0.0; n];
        let mut counts = vec![0u32; n];
        for meta in self.rainfall_sensors() {
            let s = &self.series[&meta.id];
            for (i, (sum, count)) in sums.iter_mut().zip(counts.iter_mut()).enumerate() {
                if let Some(v) = s.get(from + i as i64) {
                    *sum += v;
                    *count += 1;
                }
            }
        }
        let values = sums
            .into_iter()
            .zip(counts)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect();
        HourlySeries {
            sensor: SensorMeta::derived(SITE_MEAN_RAIN_ID, SensorKind::Rainfall),
            start: from,
            values,
        }
    }

    /// Restricts every series (and the rain forecast) to `[from, to)`,
    /// clipped to what each series actually stores.
    pub fn clip(&self, from: Timestamp, to: Timestamp) -> Dataset {
        let clip_one = |s: &HourlySeries| {
            let lo = from.max(s.start);
            let hi = to.min(s.end());
            if lo >= hi {
                HourlySeries::empty(s.sensor.clone(), from)
            } else {
                s.range(lo, hi)
            }
        };
        Dataset {
            sensors: self.sensors.clone(),
            series: self
                .series
                .iter()
                .map(|(k, s)| (k.clone(), clip_one(s)))
                .collect(),
            rain_forecast: self.rain_forecast.as_ref().map(clip_one),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train: Dataset,
    pub eval: Dataset,
}

/// Splits a dataset on UTC calendar-year boundaries. The train span runs from
/// the first to the last train year inclusive.
pub fn partition_by_year(
    d: &Dataset,
    train_years: &BTreeSet<i32>,
    eval_year: i32,
) -> Result<Partition> {
    let (Some(&first), Some(&last)) = (train_years.first(), train_years.last()) else {
        return Err(Error::Domain("train_years must not be empty".into()));
    };
    if train_years.contains(&eval_year) {
        return Err(Error::Domain(format!(
            "eval year {eval_year} is also a train year"
        )));
    }
    if eval_year < last {
        return Err(Error::Domain(format!(
            "eval year {eval_year} must follow every train year (latest {last})"
        )));
    }
    Ok(Partition {
        train: d.clip(
            Timestamp::year_start(first),
            Timestamp::year_start(last + 1),
        ),
        eval: d.clip(
            Timestamp::year_start(eval_year),
            Timestamp::year_start(eval_year + 1),
        ),
    })
}

/// Default split used by the tools: the last calendar year with basin data is
/// held out, every earlier year trains.
pub fn default_partition(d: &Dataset) -> Result<Partition> {
    let basin = d.basin_series();
    let last = basin
        .last_timestamp()
        .ok_or_else(|| Error::InsufficientData("basin series is empty".into()))?;
    let eval_year = last.year();
    let first_year = basin.start.year();
    if first_year >= eval_year {
        return Err(Error::InsufficientData(format!(
            "basin data covers only {eval_year}; at least two calendar years are needed"
        )));
    }
    partition_by_year(d, &(first_year..eval_year).collect(), eval_year)
}
