//! Hourly gridded time series with explicit gaps.
//!
//! Every signal in the system lives on a UTC hourly grid. A [`HourlySeries`]
//! stores a start hour and one optional value per hour; `None` marks a gap.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const SECONDS_PER_HOUR: i64 = 3600;

/// Whole hours since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_ymdh(year: i32, month: u32, day: u32, hour: u32) -> Result<Self> {
        let dt = NaiveDate::from_ymd_opt(year, month, day)
            .and_then(|d| d.and_hms_opt(hour, 0, 0))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "invalid date {year:04}-{month:02}-{day:02}T{hour:02}"
                ))
            })?;
        Ok(Timestamp(
            dt.and_utc().timestamp().div_euclid(SECONDS_PER_HOUR),
        ))
    }

    /// First hour of a calendar year.
    pub fn year_start(year: i32) -> Self {
        // Jan 1 exists for every representable year.
        Self::from_ymdh(year, 1, 1, 0).expect("valid year start")
    }

    /// The hour bucket containing a wall-clock instant given in Unix seconds.
    pub fn from_unix_seconds(secs: i64) -> Self {
        Timestamp(secs.div_euclid(SECONDS_PER_HOUR))
    }

    pub fn unix_seconds(self) -> i64 {
        self.0 * SECONDS_PER_HOUR
    }

    fn datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.unix_seconds(), 0).expect("timestamp in chrono range")
    }

    pub fn year(self) -> i32 {
        self.datetime().year()
    }

    pub fn month(self) -> u32 {
        self.datetime().month()
    }

    pub fn day(self) -> u32 {
        self.datetime().day()
    }

    pub fn hour(self) -> u32 {
        self.datetime().hour()
    }
}

impl Add<i64> for Timestamp {
    type Output = Timestamp;
    fn add(self, hours: i64) -> Timestamp {
        Timestamp(self.0 + hours)
    }
}

impl Sub<i64> for Timestamp {
    type Output = Timestamp;
    fn sub(self, hours: i64) -> Timestamp {
        Timestamp(self.0 - hours)
    }
}

impl Sub for Timestamp {
    type Output = i64;
    fn sub(self, other: Timestamp) -> i64 {
        self.0 - other.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.datetime().format("%Y-%m-%dT%H:00:00Z"))
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    /// Parses `YYYY-MM-DDTHH:MM:SSZ`; minutes and seconds must be zero.
    fn from_str(s: &str) -> Result<Self> {
        let dt = DateTime::parse_from_rfc3339(s.trim())
            .map_err(|e| Error::Domain(format!("invalid timestamp `{s}`: {e}")))?;
        let secs = dt.timestamp();
        if secs.rem_euclid(SECONDS_PER_HOUR) != 0 || dt.timestamp_subsec_nanos() != 0 {
            return Err(Error::Domain(format!(
                "timestamp not hourly-aligned: `{s}`"
            )));
        }
        Ok(Timestamp(secs / SECONDS_PER_HOUR))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    /// Meters.
    FillingLevel,
    /// mm per hour.
    Rainfall,
    /// kWh per hour.
    PumpEnergy,
    /// 0 closed, 1 open.
    ValveState,
    Other,
}

impl SensorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SensorKind::FillingLevel => "filling_level",
            SensorKind::Rainfall => "rainfall",
            SensorKind::PumpEnergy => "pump_energy",
            SensorKind::ValveState => "valve_state",
            SensorKind::Other => "other",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SensorKind::FillingLevel => "m",
            SensorKind::Rainfall => "mm/h",
            SensorKind::PumpEnergy => "kWh",
            SensorKind::ValveState => "0/1",
            SensorKind::Other => "",
        }
    }

    fn non_negative(self) -> bool {
        matches!(self, SensorKind::FillingLevel | SensorKind::Rainfall)
    }
}

impl FromStr for SensorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "filling_level" => SensorKind::FillingLevel,
            "rainfall" => SensorKind::Rainfall,
            "pump_energy" => SensorKind::PumpEnergy,
            "valve_state" => SensorKind::ValveState,
            "other" => SensorKind::Other,
            _ => return Err(Error::Domain(format!("unknown sensor kind `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMeta {
    pub id: String,
    pub site_id: String,
    pub kind: SensorKind,
    pub is_basin_level: bool,
    pub lat: f64,
    pub lon: f64,
}

impl SensorMeta {
    /// Metadata for a derived signal that does not belong to a physical sensor.
    pub fn derived(id: impl Into<String>, kind: SensorKind) -> Self {
        SensorMeta {
            id: id.into(),
            site_id: String::new(),
            kind,
            is_basin_level: false,
            lat: 0.0,
            lon: 0.0,
        }
    }
}

/// Measurements for one sensor on the hourly grid. Slot `i` is hour `start + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub sensor: SensorMeta,
    pub start: Timestamp,
    pub values: Vec<Option<f64>>,
}

impl HourlySeries {
    /// Builds a series, rejecting negative levels/rainfall and non-finite values.
    pub fn new(sensor: SensorMeta, start: Timestamp, values: Vec<Option<f64>>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "{}: non-finite value at {}",
                        sensor.id,
                        start + i as i64
                    )));
                }
                if sensor.kind.non_negative() && v < 0.0 {
                    return Err(Error::Domain(format!(
                        "{}: negative {} value {v} at {}",
                        sensor.id,
                        sensor.kind.as_str(),
                        start + i as i64
                    )));
                }
            }
        }
        Ok(HourlySeries {
            sensor,
            start,
            values,
        })
    }

    pub fn empty(sensor: SensorMeta, start: Timestamp) -> Self {
        HourlySeries {
            sensor,
            start,
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One past the last slot.
    pub fn end(&self) -> Timestamp {
        self.start + self.values.len() as i64
    }

    /// Last slot, if any.
    pub fn last_timestamp(&self) -> Option<Timestamp> {
        (!self.values.is_empty()).then(|| self.end() - 1)
    }

    pub fn get(&self, t: Timestamp) -> Option<f64> {
        let offset = t - self.start;
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied().flatten()
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn last_present(&self) -> Option<(Timestamp, f64)> {
        self.values
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, v)| v.map(|v| (self.start + i as i64, v)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Timestamp, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.start + i as i64, *v))
    }

    /// Slots in `[from, to)`, gaps where outside the stored range.
    pub fn range(&self, from: Timestamp, to: Timestamp) -> HourlySeries {
        let n = (to - from).max(0) as usize;
        let values = (0..n).map(|i| self.get(from + i as i64)).collect();
        HourlySeries {
            sensor: self.sensor.clone(),
            start: from,
            values,
        }
    }
}

/// Filling-level traffic-light band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillingBand {
    Low,
    Medium,
    High,
}

pub const LOW_BAND_UPPER_M: f64 = 3.0;
pub const MEDIUM_BAND_UPPER_M: f64 = 4.0;

/// Low is `[0, 3)`, Medium `[3, 4]`, High `(4, inf)`.
pub fn classify_filling_level(level: f64) -> Result<FillingBand> {
    if !level.is_finite() || level < 0.0 {
        return Err(Error::Domain(format!(
            "filling level must be finite and >= 0, got {level}"
        )));
    }
    Ok(if level < LOW_BAND_UPPER_M {
        FillingBand::Low
    } else if level <= MEDIUM_BAND_UPPER_M {
        FillingBand::Medium
    } else {
        FillingBand::High
    })
}

/// Buckets wall-clock readings `(unix_seconds, value)` onto the hourly grid.
///
/// Rainfall readings in the same hour are summed (accumulation); every other
/// kind is averaged. Empty buckets between the first and last occupied hour
/// become gaps.
pub fn resample_hourly(sensor: SensorMeta, readings: &[(i64, f64)]) -> Result<HourlySeries> {
    if readings.is_empty() {
        return Ok(HourlySeries::empty(sensor, Timestamp::default()));
    }
    if let Some((t, v)) = readings.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite reading {v} at {t}s")));
    }
    let mut sorted = readings.to_vec();
    sorted.sort_by_key(|&(t, _)| t);

    let first = Timestamp::from_unix_seconds(sorted[0].0);
    let last = Timestamp::from_unix_seconds(sorted[sorted.len() - 1].0);
    let n = (last - first + 1) as usize;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    for &(t, v) in &sorted {
        let i = (Timestamp::from_unix_seconds(t) - first) as usize;
        sums[i] += v;
        counts[i] += 1;
    }
    let summed = sensor.kind == SensorKind::Rainfall;
    let values = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| match c {
            0 => None,
            _ if summed => Some(s),
            _ => Some(s / c as f64),
        })
        .collect();
    HourlySeries::new(sensor, first, values)
}

/// Fills interior gaps by linear interpolation between the bounding present
/// values. Leading and trailing gaps are left untouched.
pub fn interpolate_linear(series: &HourlySeries) -> HourlySeries {
    let mut values = series.values.clone();
    let mut prev: Option<(usize, f64)> = None;
    for i in 0..values.len() {
        if let Some(v) = series.values[i] {
            if let Some((j, pv)) = prev {
                let span = (i - j) as f64;
                for (k, slot) in values.iter_mut().enumerate().take(i).skip(j + 1) {
                    let frac = (k - j) as f64 / span;
                    *slot = Some(pv + (v - pv) * frac);
                }
            }
            prev = Some((i, v));
        }
    }
    HourlySeries {
        sensor: series.sensor.clone(),
        start: series.start,
        values,
    }
}

/// The `length` hourly slots covering `(end - length, end]`.
pub fn slice_window(series: &HourlySeries, end: Timestamp, length: usize) -> Result<HourlySeries> {
    if length == 0 {
        return Err(Error::Domain("window length must be >= 1".into()));
    }
    Ok(series.range(end - length as i64 + 1, end + 1))
}
