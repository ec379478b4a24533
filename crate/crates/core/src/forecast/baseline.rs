use crate::error::{Error, Result};
use crate::timeseries::{interpolate_linear, HourlySeries};

/// Repeats the last present context value over the horizon.
pub fn persistence_forecast(context: &HourlySeries, horizon: usize) -> Result<Vec<f64>> {
    let (_, last) = context.last_present().ok_or(Error::NoAnchor)?;
    Ok(vec![last; horizon])
}

/// Copies the value observed one `period` earlier for every forecast slot.
///
/// The origin is the last context slot. Forecast slot `k` (1-based) takes the
/// interpolated context value at `origin + k - period`, so `horizon` may not
/// exceed `period`.
pub fn seasonal_naive_forecast(
    context: &HourlySeries,
    horizon: usize,
    period: usize,
) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(Error::Domain("period must be >= 1".into()));
    }
    if context.len() < period {
        return Err(Error::InsufficientData(format!(
            "context of {} hours is shorter than the {period} h period",
            context.len()
        )));
    }
    if horizon > period {
        return Err(Error::Domain(format!(
            "horizon {horizon} exceeds the seasonal period {period}"
        )));
    }
    let filled = interpolate_linear(context);
    let origin = filled.end() - 1;
    (1..=horizon as i64)
        .map(|k| {
            let t = origin + k - period as i64;
            filled.get(t).ok_or_else(|| {
                Error::InsufficientData(format!("no value one period before {}", origin + k))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{SensorKind, SensorMeta, Timestamp};

    fn ctx(values: Vec<Option<f64>>) -> HourlySeries {
        HourlySeries::new(
            SensorMeta::derived("b", SensorKind::FillingLevel),
            Timestamp(0),
            values,
        )
        .unwrap()
    }

    #[test]
    fn persistence_repeats_last_value() {
        let c = ctx(vec![Some(1.0), Some(3.2), None]);
        assert_eq!(persistence_forecast(&c, 12).unwrap(), vec![3.2; 12]);
        assert_eq!(persistence_forecast(&c, 1).unwrap(), vec![3.2]);
        assert!(matches!(
            persistence_forecast(&ctx(vec![None; 4]), 3),
            Err(Error::NoAnchor)
        ));
    }

    #[test]
    fn seasonal_naive_reproduces_periodic_signal() {
        let wave = |t: usize| 2.0 + (t % 24) as f64 * 0.1;
        let c = ctx((0..72).map(|t| Some(wave(t))).collect());
        let f = seasonal_naive_forecast(&c, 12, 24).unwrap();
        let expected: Vec<f64> = (72..84).map(wave).collect();
        assert_eq!(f, expected);
    }

    #[test]
    fn seasonal_naive_constant_and_short_context() {
        let c = ctx(vec![Some(1.5); 24]);
        assert_eq!(seasonal_naive_forecast(&c, 1, 24).unwrap(), vec![1.5]);
        assert!(seasonal_naive_forecast(&ctx(vec![Some(1.0); 23]), 1, 24).is_err());
    }
}
