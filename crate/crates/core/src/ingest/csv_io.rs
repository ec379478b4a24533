use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, SynthConfig};
use crate::timeseries::{HourlySeries, SensorKind, SensorMeta, Timestamp};

pub const DATA_FILE: &str = "data.csv";
pub const META_FILE: &str = "meta.csv";
pub const RAIN_FORECAST_FILE: &str = "rain_forecast.csv";
pub const SYNTH_FILE: &str = "synth.toml";

/// Sensor id used for the rain forecast channel in its measurement file.
pub const RAIN_FORECAST_ID: &str = "rain_forecast";

const DATA_HEADER: [&str; 3] = ["sensor_id", "timestamp_utc", "value"];
const META_HEADER: [&str; 6] = [
    "sensor_id",
    "site_id",
    "kind",
    "is_basin_level",
    "lat",
    "lon",
];

/// A loaded data directory: the dataset plus the generator settings when the
/// directory was produced synthetically.
#[derive(Debug, Clone)]
pub struct DataDir {
    pub dataset: Dataset,
    pub synth: Option<SynthConfig>,
}

impl DataDir {
    /// Level at which the basin overflows. Taken from the generator settings,
    /// otherwise the highest level ever observed.
    pub fn overflow_level(&self) -> f64 {
        match &self.synth {
            Some(cfg) => cfg.level_max_m,
            None => self
                .dataset
                .basin_series()
                .values
                .iter()
                .flatten()
                .fold(0.0, |m: f64, &v| m.max(v)),
        }
    }
}

fn parse_err(file: &Path, line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader
        .headers()
        .map_err(|e| parse_err(path, 1, "header", e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Schema {
            file: path.to_path_buf(),
            message: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(reader)
}

fn records(
    path: &Path,
    reader: csv::Reader<fs::File>,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + '_ {
    reader.into_records().map(move |r| {
        let record = r.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, "record", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        Ok((line, record))
    })
}

fn load_meta(path: &Path) -> Result<Vec<SensorMeta>> {
    let mut sensors = Vec::new();
    for row in records(path, open(path, &META_HEADER)?) {
        let (line, rec) = row?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let number = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(
                        path,
                        line,
                        META_HEADER[i],
                        format!("invalid number `{}`", field(i)),
                    )
                })
        };
        let id = field(0);
        if id.is_empty() {
            return Err(parse_err(path, line, "sensor_id", "empty sensor id"));
        }
        let kind: SensorKind = field(2)
            .parse()
            .map_err(|e: Error| parse_err(path, line, "kind", e.to_string()))?;
        let is_basin_level = match field(3) {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    path,
                    line,
                    "is_basin_level",
                    format!("expected 0 or 1, found `{other}`"),
                ))
            }
        };
        sensors.push(SensorMeta {
            id: id.to_string(),
            site_id: field(1).to_string(),
            kind,
            is_basin_level,
            lat: number(4)?,
            lon: number(5)?,
        });
    }
    Ok(sensors)
}

fn load_measurements(
    path: &Path,
    resolve: impl Fn(&str) -> Option<SensorMeta>,
) -> Result<BTreeMap<String, HourlySeries>> {
    let mut rows: BTreeMap<String, (SensorMeta, BTreeMap<Timestamp, Option<f64>>)> =
        BTreeMap::new();
    for row in records(path, open(path, &DATA_HEADER)?) {
        let (line, rec) = row?;
        let id = rec.get(0).unwrap_or("");
        let meta = resolve(id).ok_or_else(|| {
            parse_err(path, line, "sensor_id", format!("unknown sensor id `{id}`"))
        })?;
        let ts = rec.get(1).unwrap_or("");
        let t: Timestamp = ts.parse().map_err(|e: Error| {
            parse_err(
                path,
                line,
                "timestamp_utc",
                e.to_string()
                    .trim_start_matches("domain error: ")
                    .to_string(),
            )
        })?;
        let raw = rec.get(2).unwrap_or("");
        let value = if raw.is_empty() {
            None
        } else {
            Some(
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(path, line, "value", format!("invalid number `{raw}`"))
                    })?,
            )
        };
        let entry = rows
            .entry(id.to_string())
            .or_insert_with(|| (meta, BTreeMap::new()));
        if entry.1.insert(t, value).is_some() {
            return Err(parse_err(
                path,
                line,
                "timestamp_utc",
                format!("duplicate measurement for sensor `{id}` at {t}"),
            ));
        }
    }

    let mut out = BTreeMap::new();
    for (id, (meta, points)) in rows {
        let (&first, _) = points.first_key_value().expect("at least one row");
        let (&last, _) = points.last_key_value().expect("at least one row");
        let mut values = vec![None; (last - first + 1) as usize];
        for (t, v) in points {
            values[(t - first) as usize] = v;
        }
        let series = HourlySeries::new(meta, first, values).map_err(|e| Error::Schema {
            file: path.to_path_buf(),
            message: e.to_string(),
        })?;
        out.insert(id, series);
    }
    Ok(out)
}

/// Reads a long-format measurement file and its sensor metadata.
pub fn load_csv(path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<Dataset> {
    let sensors = load_meta(meta_path.as_ref())?;
    let by_id: BTreeMap<&str, &SensorMeta> = sensors.iter().map(|s| (s.id.as_str(), s)).collect();
    let series = load_measurements(path.as_ref(), |id| by_id.get(id).map(|m| (*m).clone()))?;
    Dataset::new(sensors, series, None).map_err(|e| Error::Schema {
        file: meta_path.as_ref().to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a rain forecast stored in the measurement schema under the
/// [`RAIN_FORECAST_ID`] sensor id.
pub fn load_rain_forecast(path: impl AsRef<Path>) -> Result<Option<HourlySeries>> {
    let meta = SensorMeta::derived(RAIN_FORECAST_ID, SensorKind::Rainfall);
    let mut map = load_measurements(path.as_ref(), |id| {
        (id == RAIN_FORECAST_ID).then(|| meta.clone())
    })?;
    Ok(map.remove(RAIN_FORECAST_ID))
}

fn write_rows<W: std::io::Write>(w: &mut csv::Writer<W>, s: &HourlySeries) -> csv::Result<()> {
    for (t, v) in s.iter() {
        let value = v.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([s.sensor.id.as_str(), &t.to_string(), &value])?;
    }
    Ok(())
}

fn csv_failure(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema {
            file: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes every slot of every series, gaps included as empty values, so that
/// [`load_csv`] reproduces the same spans.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<()> {
    let meta_path = meta_path.as_ref();
    let mut w = csv::Writer::from_path(meta_path).map_err(|e| csv_failure(meta_path, e))?;
    w.write_record(META_HEADER)
        .map_err(|e| csv_failure(meta_path, e))?;
    for s in &d.sensors {
        w.write_record([
            s.id.as_str(),
            &s.site_id,
            s.kind.as_str(),
            if s.is_basin_level { "1" } else { "0" },
            &s.lat.to_string(),
            &s.lon.to_string(),
        ])
        .map_err(|e| csv_failure(meta_path, e))?;
    }
    w.flush().map_err(|e| Error::io(meta_path, e))?;

    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_failure(path, e))?;
    w.write_record(DATA_HEADER)
        .map_err(|e| csv_failure(path, e))?;
    for s in &d.sensors {
        write_rows(&mut w, &d.series[&s.id]).map_err(|e| csv_failure(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_data_dir(
    dir: impl AsRef<Path>,
    d: &Dataset,
    synth: Option<&SynthConfig>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(d, dir.join(DATA_FILE), dir.join(META_FILE))?;
    if let Some(rf) = &d.rain_forecast {
        let path = dir.join(RAIN_FORECAST_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_failure(&path, e))?;
        w.write_record(DATA_HEADER)
            .map_err(|e| csv_failure(&path, e))?;
        let mut rf = rf.clone();
        rf.sensor.id = RAIN_FORECAST_ID.to_string();
        write_rows(&mut w, &rf).map_err(|e| csv_failure(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    if let Some(cfg) = synth {
        let path = dir.join(SYNTH_FILE);
        fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Loads `data.csv` and `meta.csv`, plus `rain_forecast.csv` and `synth.toml`
/// when present.
pub fn load_data_dir(dir: impl AsRef<Path>) -> Result<DataDir> {
    let dir = dir.as_ref();
    let mut dataset = load_csv(dir.join(DATA_FILE), dir.join(META_FILE))?;
    let rf: PathBuf = dir.join(RAIN_FORECAST_FILE);
    if rf.exists() {
        dataset.rain_forecast = load_rain_forecast(&rf)?;
    }
    let synth_path = dir.join(SYNTH_FILE);
    let synth = if synth_path.exists() {
        Some(SynthConfig::from_file(&synth_path)?)
    } else {
        None
    };
    Ok(DataDir { dataset, synth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const META: &str = "sensor_id,site_id,kind,is_basin_level,lat,lon\n\
                        basin,s0,filling_level,1,51.5,6.7\n\
                        rain,s0,rainfall,0,51.5,6.7\n";

    fn fixture(data: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("data.csv");
        let m = dir.path().join("meta.csv");
        fs::File::create(&d)
            .unwrap()
            .write_all(data.as_bytes())
            .unwrap();
        fs::File::create(&m)
            .unwrap()
            .write_all(META.as_bytes())
            .unwrap();
        (dir, d, m)
    }

    #[test]
    fn three_rows_map_to_three_slots() {
        let (_dir, d, m) = fixture(
            "sensor_id,timestamp_utc,value\n\
             basin,2023-01-01T00:00:00Z,1.0\n\
             basin,2023-01-01T02:00:00Z,3.0\n\
             basin,2023-01-01T01:00:00Z,2.0\n",
        );
        let ds = load_csv(&d, &m).unwrap();
        let s = ds.basin_series();
        assert_eq!(s.start, Timestamp::from_ymdh(2023, 1, 1, 0).unwrap());
        assert_eq!(s.values, vec![Some(1.0), Some(2.0), Some(3.0)]);
        assert!(ds.series["rain"].is_empty());
    }

    #[test]
    fn empty_value_is_gap() {
        let (_dir, d, m) = fixture(
            "sensor_id,timestamp_utc,value\n\
             basin,2023-01-01T00:00:00Z,1.0\n\
             basin,2023-01-01T01:00:00Z,\n\
             basin,2023-01-01T02:00:00Z,3.0\n",
        );
        let ds = load_csv(&d, &m).unwrap();
        assert_eq!(ds.basin_series().values[1], None);
    }

    #[test]
    fn off_hour_timestamp_names_file_line_and_column() {
        let (_dir, d, m) = fixture(
            "sensor_id,timestamp_utc,value\n\
             basin,2023-01-01T00:00:00Z,1.0\n\
             basin,2023-01-01T01:30:00Z,2.0\n",
        );
        let msg = load_csv(&d, &m).unwrap_err().to_string();
        assert!(msg.contains("timestamp not hourly-aligned"), "{msg}");
        assert!(msg.contains("data.csv:3"), "{msg}");
        assert!(msg.contains("timestamp_utc"), "{msg}");
    }

    #[test]
    fn unknown_sensor_and_duplicates_fail() {
        let (_dir, d, m) =
            fixture("sensor_id,timestamp_utc,value\nghost,2023-01-01T00:00:00Z,1.0\n");
        assert!(load_csv(&d, &m)
            .unwrap_err()
            .to_string()
            .contains("unknown sensor id"));

        let (_dir, d, m) = fixture(
            "sensor_id,timestamp_utc,value\n\
             basin,2023-01-01T00:00:00Z,1.0\n\
             basin,2023-01-01T00:00:00Z,2.0\n",
        );
        assert!(load_csv(&d, &m)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn malformed_value_names_column() {
        let (_dir, d, m) =
            fixture("sensor_id,timestamp_utc,value\nbasin,2023-01-01T00:00:00Z,abc\n");
        let msg = load_csv(&d, &m).unwrap_err().to_string();
        assert!(msg.contains(":2") && msg.contains("`value`"), "{msg}");
    }

    #[test]
    fn wrong_header_rejected() {
        let (_dir, d, m) = fixture("sensor,time,value\n");
        assert!(load_csv(&d, &m)
            .unwrap_err()
            .to_string()
            .contains("expected header"));
    }
}
