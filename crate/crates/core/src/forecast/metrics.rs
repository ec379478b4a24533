use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::ForecastResult;
use crate::timeseries::HourlySeries;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    /// MSE per lead time (index 0 is one hour ahead); `None` where nothing
    /// could be compared.
    pub per_horizon_mse: Vec<Option<f64>>,
    pub compared: usize,
    /// Forecast slots whose truth was a gap or outside the truth series.
    pub skipped: usize,
}

pub fn evaluate(forecasts: &[ForecastResult], truth: &HourlySeries) -> Result<Metrics> {
    let horizon = forecasts.iter().map(|f| f.values.len()).max().unwrap_or(0);
    let mut sq = vec![0.0; horizon];
    let mut counts = vec![0usize; horizon];
    let (mut sse, mut sae, mut compared, mut skipped) = (0.0, 0.0, 0usize, 0usize);
    for f in forecasts {
        for (k, (t, pred)) in f.target_times().zip(&f.values).enumerate() {
            match truth.get(t) {
                Some(actual) => {
                    let e = pred - actual;
                    sse += e * e;
                    sae += e.abs();
                    sq[k] += e * e;
                    counts[k] += 1;
                    compared += 1;
                }
                None => skipped += 1,
            }
        }
    }
    if compared == 0 {
        return Err(Error::InsufficientData(
            "no forecast slot has a truth value".into(),
        ));
    }
    Ok(Metrics {
        mse: sse / compared as f64,
        mae: sae / compared as f64,
        per_horizon_mse: sq
            .into_iter()
            .zip(counts)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect(),
        compared,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::ForecastRegime;
    use crate::timeseries::{SensorKind, SensorMeta, Timestamp};

    fn truth(values: Vec<Option<f64>>) -> HourlySeries {
        HourlySeries::new(
            SensorMeta::derived("t", SensorKind::FillingLevel),
            Timestamp(0),
            values,
        )
        .unwrap()
    }

    fn edge(origin: i64, v: f64) -> ForecastResult {
        ForecastResult::new(Timestamp(origin), ForecastRegime::Edge, "m", vec![v]).unwrap()
    }

    #[test]
    fn perfect_forecast() {
        let t = truth(vec![Some(1.0), Some(2.0), Some(3.0)]);
        let m = evaluate(&[edge(0, 2.0), edge(1, 3.0)], &t).unwrap();
        assert_eq!((m.mse, m.mae), (0.0, 0.0));
    }

    #[test]
    fn constant_offset() {
        let t = truth(vec![Some(1.0); 20]);
        let f =
            ForecastResult::new(Timestamp(2), ForecastRegime::Cloud, "m", vec![3.0; 12]).unwrap();
        let m = evaluate(&[f], &t).unwrap();
        assert_eq!((m.mse, m.mae), (4.0, 2.0));
        assert_eq!(m.per_horizon_mse, vec![Some(4.0); 12]);
    }

    #[test]
    fn single_term_and_gaps() {
        let t = truth(vec![None, Some(1.0), None]);
        let m = evaluate(&[edge(0, 3.0), edge(1, 0.0)], &t).unwrap();
        assert_eq!(m.mse, 4.0);
        assert_eq!((m.compared, m.skipped), (1, 1));
        assert!(evaluate(&[edge(1, 0.0)], &t).is_err());
    }
}
