use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forecast::{ForecastRegime, ForecastResult};
use crate::timeseries::Timestamp;

pub type PrecomputedForecasts = BTreeMap<(Timestamp, ForecastRegime), ForecastResult>;

const MAX_HORIZON: usize = 12;

fn header() -> Vec<String> {
    let mut h = vec!["origin_utc".to_string(), "regime".into(), "model_id".into()];
    h.extend((1..=MAX_HORIZON).map(|k| format!("h{k}")));
    h
}

/// Reads forecasts in the `origin_utc,regime,model_id,h1,...,h12` layout. Edge
/// rows fill `h1` only.
pub fn load_precomputed(path: impl AsRef<Path>) -> Result<PrecomputedForecasts> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let schema_err = |message: String| Error::Schema {
        file: path.to_path_buf(),
        message,
    };
    let found = reader
        .headers()
        .map_err(|e| schema_err(e.to_string()))?
        .clone();
    if found.iter().ne(header().iter().map(String::as_str)) {
        return Err(schema_err(format!(
            "expected header `{}`",
            header().join(",")
        )));
    }

    let mut out = PrecomputedForecasts::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| schema_err(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse = |col: &str, msg: String| Error::Parse {
            file: path.to_path_buf(),
            line,
            column: col.to_string(),
            message: msg,
        };
        let origin: Timestamp = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| parse("origin_utc", e.to_string()))?;
        let regime: ForecastRegime = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| parse("regime", e.to_string()))?;
        let model_id = rec.get(2).unwrap_or("").to_string();

        let mut values = Vec::new();
        let mut seen_empty = false;
        for k in 0..MAX_HORIZON {
            let raw = rec.get(3 + k).unwrap_or("");
            if raw.is_empty() {
                seen_empty = true;
                continue;
            }
            if seen_empty {
                return Err(parse(
                    &format!("h{}", k + 1),
                    "value after an empty horizon slot".into(),
                ));
            }
            let v = raw
                .parse::<f64>()
                .map_err(|_| parse(&format!("h{}", k + 1), format!("invalid number `{raw}`")))?;
            values.push(v);
        }
        let result = ForecastResult::new(origin, regime, model_id, values)
            .map_err(|e| schema_err(format!("forecast at origin {origin}: {e}")))?;
        if out.insert((origin, regime), result).is_some() {
            return Err(schema_err(format!(
                "duplicate {regime} forecast at origin {origin}"
            )));
        }
    }
    Ok(out)
}

pub fn write_precomputed<'a>(
    path: impl AsRef<Path>,
    forecasts: impl IntoIterator<Item = &'a ForecastResult>,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Schema {
            file: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header()).map_err(io)?;
    for f in forecasts {
        let mut row = vec![
            f.origin.to_string(),
            f.regime.to_string(),
            f.model_id.clone(),
        ];
        row.extend(
            (0..MAX_HORIZON).map(|k| f.values.get(k).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
