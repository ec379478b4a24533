use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forecast::{
    fit_ar, forecast_ar, persistence_forecast, seasonal_naive_forecast, ArModel, ExoInput,
    ExoSeries, ForecastRegime, ForecastResult, PrecomputedForecasts,
};
use crate::ingest::{Dataset, SITE_MEAN_RAIN_ID};
use crate::timeseries::{interpolate_linear, slice_window, HourlySeries, Timestamp};

pub const EDGE_AR_ORDER: usize = 12;
pub const CLOUD_AR_ORDER: usize = 24;
pub const CLOUD_RAIN_LAGS: [usize; 6] = [1, 2, 3, 4, 5, 6];
pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// Everything a forecaster may look at for one origin.
///
/// Edge inputs carry the basin level only; `rainfall` and `rain_forecast` are
/// always `None` there.
#[derive(Debug, Clone)]
pub struct RegimeInputs {
    pub regime: ForecastRegime,
    pub origin: Timestamp,
    /// Interpolated basin level over the regime's context window.
    pub level: HourlySeries,
    /// Interpolated site-mean rainfall over the context window.
    pub rainfall: Option<HourlySeries>,
    /// Forecast rainfall for `origin + 1 ..= origin + horizon`.
    pub rain_forecast: Option<HourlySeries>,
}

/// Builds the context for `regime` at `origin`. The edge branch reads nothing
/// but the basin series.
pub fn regime_inputs(
    regime: ForecastRegime,
    dataset: &Dataset,
    origin: Timestamp,
) -> Result<RegimeInputs> {
    let context = regime.context_hours();
    let basin = dataset.basin_series();
    let first_needed = origin - (context as i64 - 1);
    if basin.is_empty() || first_needed < basin.start || origin >= basin.end() {
        return Err(Error::InsufficientData(format!(
            "{regime} context needs basin data over {first_needed}..={origin}"
        )));
    }
    let level = interpolate_linear(&slice_window(basin, origin, context)?);
    let (rainfall, rain_forecast) = match regime {
        ForecastRegime::Edge => (None, None),
        ForecastRegime::Cloud => {
            let rain = dataset.site_mean_rainfall(first_needed, origin + 1);
            let future = dataset
                .rain_forecast
                .as_ref()
                .map(|rf| rf.range(origin + 1, origin + 1 + regime.horizon_hours() as i64));
            (Some(interpolate_linear(&rain)), future)
        }
    };
    Ok(RegimeInputs {
        regime,
        origin,
        level,
        rainfall,
        rain_forecast,
    })
}

pub trait Forecaster: Send + Sync {
    fn id(&self) -> &str;

    /// Returns `inputs.regime.horizon_hours()` predicted levels.
    fn forecast(&self, inputs: &RegimeInputs) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn id(&self) -> &str {
        "persistence"
    }

    fn forecast(&self, inputs: &RegimeInputs) -> Result<Vec<f64>> {
        persistence_forecast(&inputs.level, inputs.regime.horizon_hours())
    }
}

#[derive(Debug, Clone)]
pub struct SeasonalNaive {
    pub period: usize,
}

impl Default for SeasonalNaive {
    fn default() -> Self {
        SeasonalNaive { period: 24 }
    }
}

impl Forecaster for SeasonalNaive {
    fn id(&self) -> &str {
        "seasonal_naive"
    }

    fn forecast(&self, inputs: &RegimeInputs) -> Result<Vec<f64>> {
        seasonal_naive_forecast(&inputs.level, inputs.regime.horizon_hours(), self.period)
    }
}

/// Wraps a fitted [`ArModel`]. The only exogenous channel it knows how to feed
/// is the site-mean rainfall, whose future hours come from the rain forecast.
#[derive(Debug, Clone)]
pub struct ArForecaster {
    pub id: String,
    pub model: ArModel,
}

impl Forecaster for ArForecaster {
    fn id(&self) -> &str {
        &self.id
    }

    fn forecast(&self, inputs: &RegimeInputs) -> Result<Vec<f64>> {
        let exo = self
            .model
            .exo
            .iter()
            .map(|ch| match ch.name.as_str() {
                SITE_MEAN_RAIN_ID => {
                    let history = inputs.rainfall.clone().ok_or_else(|| {
                        Error::Layout(format!(
                            "model `{}` needs rainfall, which the {} regime does not provide",
                            self.id, inputs.regime
                        ))
                    })?;
                    Ok(ExoInput {
                        history,
                        future: inputs.rain_forecast.clone(),
                    })
                }
                other => Err(Error::Layout(format!(
                    "unsupported exogenous channel `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        forecast_ar(
            &self.model,
            &inputs.level,
            inputs.regime.horizon_hours(),
            &exo,
        )
    }
}

/// Serves forecasts loaded from a file, keyed by origin and regime.
#[derive(Debug, Clone)]
pub struct Precomputed {
    pub id: String,
    pub forecasts: PrecomputedForecasts,
}

impl Forecaster for Precomputed {
    fn id(&self) -> &str {
        &self.id
    }

    fn forecast(&self, inputs: &RegimeInputs) -> Result<Vec<f64>> {
        self.forecasts
            .get(&(inputs.origin, inputs.regime))
            .map(|f| f.values.clone())
            .ok_or_else(|| {
                Error::InsufficientData(format!(
                    "no precomputed {} forecast at {}",
                    inputs.regime, inputs.origin
                ))
            })
    }
}

/// Forecasters available per regime, addressed by model id.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    entries: BTreeMap<(ForecastRegime, String), Arc<dyn Forecaster>>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, regime: ForecastRegime, forecaster: Arc<dyn Forecaster>) {
        self.entries
            .insert((regime, forecaster.id().to_string()), forecaster);
    }

    pub fn get(&self, regime: ForecastRegime, model_id: &str) -> Result<&Arc<dyn Forecaster>> {
        self.entries
            .get(&(regime, model_id.to_string()))
            .ok_or_else(|| Error::UnknownModel {
                regime: regime.to_string(),
                model_id: model_id.to_string(),
            })
    }

    pub fn contains(&self, regime: ForecastRegime, model_id: &str) -> bool {
        self.entries.contains_key(&(regime, model_id.to_string()))
    }

    pub fn ids(&self, regime: ForecastRegime) -> impl Iterator<Item = &str> {
        self.entries
            .keys()
            .filter(move |(r, _)| *r == regime)
            .map(|(_, id)| id.as_str())
    }
}

/// Forecast at `origin` with the selected model under `regime`.
pub fn run_regime(
    regime: ForecastRegime,
    dataset: &Dataset,
    origin: Timestamp,
    models: &ModelRegistry,
    model_id: &str,
) -> Result<ForecastResult> {
    let forecaster = models.get(regime, model_id)?;
    let inputs = regime_inputs(regime, dataset, origin)?;
    let values = forecaster.forecast(&inputs)?;
    ForecastResult::new(origin, regime, model_id, values)
}

/// Edge model: basin-only AR(12).
pub fn fit_edge_model(train: &Dataset) -> Result<ArModel> {
    fit_ar(train.basin_series(), EDGE_AR_ORDER, DEFAULT_LAMBDA, &[])
}

/// Cloud model: ARX(24) on the basin level with site-mean rainfall lags 1..6.
pub fn fit_cloud_model(train: &Dataset) -> Result<ArModel> {
    let basin = train.basin_series();
    let rain = train.site_mean_rainfall(basin.start, basin.end());
    fit_ar(
        basin,
        CLOUD_AR_ORDER,
        DEFAULT_LAMBDA,
        &[ExoSeries {
            name: SITE_MEAN_RAIN_ID,
            series: &rain,
            lags: CLOUD_RAIN_LAGS.to_vec(),
        }],
    )
}

/// Baselines for both regimes plus `ar` (edge) and `arx` (cloud) fitted on
/// `train`.
pub fn default_registry(train: &Dataset) -> Result<ModelRegistry> {
    let mut reg = ModelRegistry::new();
    for regime in [ForecastRegime::Cloud, ForecastRegime::Edge] {
        reg.register(regime, Arc::new(Persistence));
        reg.register(regime, Arc::new(SeasonalNaive::default()));
    }
    reg.register(
        ForecastRegime::Edge,
        Arc::new(ArForecaster {
            id: "ar".into(),
            model: fit_edge_model(train)?,
        }),
    );
    reg.register(
        ForecastRegime::Cloud,
        Arc::new(ArForecaster {
            id: "arx".into(),
            model: fit_cloud_model(train)?,
        }),
    );
    Ok(reg)
}
