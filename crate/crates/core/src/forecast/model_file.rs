//! `term,value` CSV for fitted autoregressive models.
//!
//! ```text
//! term,value
//! regime,cloud
//! order,24
//! lambda,0.001
//! intercept,0.013
//! ar_1,0.91
//! ...
//! exo:rain_site_mean:1,0.02
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forecast::{ArModel, ExoChannel, ForecastRegime};

pub fn write_ar_model(
    path: impl AsRef<Path>,
    regime: ForecastRegime,
    model: &ArModel,
) -> Result<()> {
    let mut out = String::from("term,value\n");
    out += &format!(
        "regime,{regime}\norder,{}\nlambda,{}\nintercept,{}\n",
        model.order, model.ridge_lambda, model.intercept
    );
    for (i, c) in model.ar_coeffs.iter().enumerate() {
        out += &format!("ar_{},{c}\n", i + 1);
    }
    for ch in &model.exo {
        for (lag, c) in ch.lags.iter().zip(&ch.coeffs) {
            out += &format!("exo:{}:{lag},{c}\n", ch.name);
        }
    }
    let path = path.as_ref();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_ar_model(path: impl AsRef<Path>) -> Result<(ForecastRegime, ArModel)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "term,value")) => {}
        _ => {
            return Err(Error::Schema {
                file: path.to_path_buf(),
                message: "expected header `term,value`".into(),
            })
        }
    }
    let err = |line: usize, col: &str, msg: String| Error::Parse {
        file: path.to_path_buf(),
        line: line as u64 + 1,
        column: col.into(),
        message: msg,
    };

    let mut regime = None;
    let mut order = None;
    let mut lambda = 0.0;
    let mut intercept = None;
    let mut ar: Vec<(usize, f64)> = Vec::new();
    let mut exo: Vec<ExoChannel> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (term, value) = line
            .split_once(',')
            .ok_or_else(|| err(i, "term", "expected `term,value`".into()))?;
        let num = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| err(i, "value", format!("invalid number `{value}`")))
        };
        match term {
            "regime" => {
                regime = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|e: Error| err(i, "value", e.to_string()))?,
                )
            }
            "order" => {
                order = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| err(i, "value", "invalid order".into()))?,
                )
            }
            "lambda" => lambda = num()?,
            "intercept" => intercept = Some(num()?),
            t if t.starts_with("ar_") => {
                let k = t[3..]
                    .parse::<usize>()
                    .map_err(|_| err(i, "term", format!("bad lag in `{t}`")))?;
                ar.push((k, num()?));
            }
            t if t.starts_with("exo:") => {
                let (name, lag) = t[4..]
                    .rsplit_once(':')
                    .ok_or_else(|| err(i, "term", format!("bad exogenous term `{t}`")))?;
                let lag = lag
                    .parse::<usize>()
                    .map_err(|_| err(i, "term", format!("bad lag in `{t}`")))?;
                let c = num()?;
                match exo.iter_mut().find(|ch| ch.name == name) {
                    Some(ch) => {
                        ch.lags.push(lag);
                        ch.coeffs.push(c);
                    }
                    None => exo.push(ExoChannel {
                        name: name.to_string(),
                        lags: vec![lag],
                        coeffs: vec![c],
                    }),
                }
            }
            other => return Err(err(i, "term", format!("unknown term `{other}`"))),
        }
    }

    let missing = |what: &str| Error::Schema {
        file: path.to_path_buf(),
        message: format!("missing `{what}` row"),
    };
    let regime = regime.ok_or_else(|| missing("regime"))?;
    let order = order.ok_or_else(|| missing("order"))?;
    ar.sort_by_key(|(k, _)| *k);
    if ar.iter().map(|(k, _)| *k).ne(1..=order) {
        return Err(Error::Schema {
            file: path.to_path_buf(),
            message: format!("expected ar_1..ar_{order}"),
        });
    }
    let model = ArModel {
        order,
        intercept: intercept.ok_or_else(|| missing("intercept"))?,
        ar_coeffs: ar.into_iter().map(|(_, c)| c).collect(),
        exo,
        ridge_lambda: lambda,
    };
    model.validate()?;
    Ok((regime, model))
}
