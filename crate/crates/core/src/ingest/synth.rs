//! Synthetic combined-sewer dataset.
//!
//! Regional storms arrive as a Bernoulli-per-hour approximation of a Poisson
//! process. Each site sees the storm intensity scaled by its own per-hour
//! factor. The overflow basin is a discrete linear reservoir driven by the
//! site-mean rainfall and clamped to its physical ceiling.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::timeseries::{HourlySeries, SensorKind, SensorMeta, Timestamp};

/// kWh drawn per hour for each meter of water in a pumped chamber.
const PUMP_KWH_PER_M: f64 = 2.5;

fn default_start() -> Timestamp {
    Timestamp::year_start(2021)
}

/// Generator settings. Keys missing from a config file take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_sites: usize,
    pub span_hours: usize,
    pub storm_rate_per_day: f64,
    pub storm_mean_duration_h: f64,
    pub storm_mean_intensity_mm: f64,
    /// Meters of basin level per mm of site-mean rainfall.
    pub inflow_gain_a: f64,
    /// Fraction of the current level drained per hour.
    pub drainage_b: f64,
    pub noise_sigma: f64,
    pub level_max_m: f64,
    pub valve_threshold_m: f64,
    /// Standard deviation of the multiplicative rain-forecast error.
    pub forecast_noise: f64,
    pub start: Timestamp,
    pub initial_level_m: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_sites: 6,
            span_hours: 3 * 365 * 24,
            storm_rate_per_day: 0.3,
            storm_mean_duration_h: 6.0,
            storm_mean_intensity_mm: 2.0,
            inflow_gain_a: 0.12,
            drainage_b: 0.05,
            noise_sigma: 0.02,
            level_max_m: 5.0,
            valve_threshold_m: 3.0,
            forecast_noise: 0.2,
            start: default_start(),
            initial_level_m: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SynthConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.num_sites < 1 {
            return bad("num_sites must be >= 1");
        }
        if self.span_hours < 48 {
            return bad("span_hours must be >= 48");
        }
        let non_negative = [
            ("storm_rate_per_day", self.storm_rate_per_day),
            ("drainage_b", self.drainage_b),
            ("noise_sigma", self.noise_sigma),
            ("forecast_noise", self.forecast_noise),
            ("initial_level_m", self.initial_level_m),
            ("valve_threshold_m", self.valve_threshold_m),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        let positive = [
            ("storm_mean_duration_h", self.storm_mean_duration_h),
            ("storm_mean_intensity_mm", self.storm_mean_intensity_mm),
            ("inflow_gain_a", self.inflow_gain_a),
            ("level_max_m", self.level_max_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if self.storm_rate_per_day / 24.0 > 1.0 {
            return bad("storm_rate_per_day must be <= 24");
        }
        if self.drainage_b > 1.0 {
            return bad("drainage_b must be <= 1");
        }
        if self.initial_level_m > self.level_max_m {
            return bad("initial_level_m exceeds level_max_m");
        }
        Ok(())
    }
}

/// Runs `L[t+1] = clamp(L[t] + a*R[t] - b*L[t] + eps[t], 0, max)` from
/// `L[0] = initial`, returning one level per rainfall hour.
pub fn simulate_reservoir(
    rain: &[f64],
    inflow_gain: f64,
    drainage: f64,
    noise: &[f64],
    initial: f64,
    level_max: f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(rain.len());
    let mut level = initial.clamp(0.0, level_max);
    for (t, r) in rain.iter().enumerate() {
        out.push(level);
        let eps = noise.get(t).copied().unwrap_or(0.0);
        level = (level + inflow_gain * r - drainage * level + eps).clamp(0.0, level_max);
    }
    out
}

fn storm_rain(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = cfg.span_hours;
    let mut base = vec![0.0; n];
    let p_start = cfg.storm_rate_per_day / 24.0;
    let duration = Exp::new(1.0 / cfg.storm_mean_duration_h).expect("validated rate");
    let intensity = Exp::new(1.0 / cfg.storm_mean_intensity_mm).expect("validated rate");
    for t in 0..n {
        if p_start > 0.0 && rng.random_bool(p_start) {
            let d = duration.sample(rng).ceil().max(1.0) as usize;
            let i = intensity.sample(rng);
            for slot in base.iter_mut().skip(t).take(d) {
                *slot += i;
            }
        }
    }
    base
}

fn site_coords(site: usize, num_sites: usize) -> (f64, f64) {
    if site == 0 {
        return (0.0, 0.0);
    }
    let angle = TAU * (site - 1) as f64 / (num_sites - 1).max(1) as f64;
    (angle.sin() * 0.02, angle.cos() * 0.03)
}

struct Builder {
    start: Timestamp,
    sensors: Vec<SensorMeta>,
    series: BTreeMap<String, HourlySeries>,
}

impl Builder {
    fn add(
        &mut self,
        site: usize,
        num_sites: usize,
        name: &str,
        kind: SensorKind,
        basin: bool,
        values: Vec<f64>,
    ) {
        let (lat, lon) = site_coords(site, num_sites);
        let k = self
            .sensors
            .iter()
            .filter(|s| s.site_id == format!("site{site}"))
            .count() as f64;
        let meta = SensorMeta {
            id: format!("site{site}_{name}"),
            site_id: format!("site{site}"),
            kind,
            is_basin_level: basin,
            lat: lat + 0.0004 * k,
            lon: lon + 0.0003 * k,
        };
        let series = HourlySeries {
            sensor: meta.clone(),
            start: self.start,
            values: values.into_iter().map(Some).collect(),
        };
        self.series.insert(meta.id.clone(), series);
        self.sensors.push(meta);
    }
}

/// Generates a full dataset. Identical `(cfg, seed)` pairs produce identical
/// datasets.
///
/// Site 0 hosts the overflow basin with five sensors. Every other site carries
/// six, so the default six sites yield 35 sensors.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.span_hours;
    let base = storm_rain(cfg, &mut rng);

    let site_rain: Vec<Vec<f64>> = (0..cfg.num_sites)
        .map(|_| {
            base.iter()
                .map(|&r| {
                    let factor: f64 = rng.random_range(0.5..1.5);
                    r * factor
                })
                .collect()
        })
        .collect();
    let rain_agg: Vec<f64> = (0..n)
        .map(|t| site_rain.iter().map(|s| s[t]).sum::<f64>() / cfg.num_sites as f64)
        .collect();

    let noise: Vec<f64> = if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
        let bound = 3.0 * cfg.noise_sigma;
        (0..n)
            .map(|_| normal.sample(&mut rng).clamp(-bound, bound))
            .collect()
    } else {
        vec![0.0; n]
    };
    let basin = simulate_reservoir(
        &rain_agg,
        cfg.inflow_gain_a,
        cfg.drainage_b,
        &noise,
        cfg.initial_level_m,
        cfg.level_max_m,
    );

    let forecast: Vec<Option<f64>> = if cfg.forecast_noise > 0.0 {
        let normal = Normal::new(0.0, cfg.forecast_noise).expect("validated noise");
        rain_agg
            .iter()
            .map(|&r| Some(r * (1.0 + normal.sample(&mut rng)).max(0.0)))
            .collect()
    } else {
        rain_agg.iter().map(|&r| Some(r)).collect()
    };

    let mut b = Builder {
        start: cfg.start,
        sensors: Vec::new(),
        series: BTreeMap::new(),
    };
    let valve = |levels: &[f64]| -> Vec<f64> {
        levels
            .iter()
            .map(|&l| if l > cfg.valve_threshold_m { 1.0 } else { 0.0 })
            .collect()
    };
    let pump = |levels: &[f64], share: f64| -> Vec<f64> {
        levels.iter().map(|&l| PUMP_KWH_PER_M * share * l).collect()
    };

    let sites = cfg.num_sites;
    b.add(
        0,
        sites,
        "basin_level",
        SensorKind::FillingLevel,
        true,
        basin.clone(),
    );
    b.add(
        0,
        sites,
        "rain",
        SensorKind::Rainfall,
        false,
        site_rain[0].clone(),
    );
    b.add(
        0,
        sites,
        "pump_energy",
        SensorKind::PumpEnergy,
        false,
        pump(&basin, 1.0),
    );
    b.add(
        0,
        sites,
        "valve",
        SensorKind::ValveState,
        false,
        valve(&basin),
    );
    b.add(
        0,
        sites,
        "outflow",
        SensorKind::Other,
        false,
        basin.iter().map(|l| cfg.drainage_b * l).collect(),
    );

    for (site, rain) in site_rain.iter().enumerate().skip(1) {
        let chamber = simulate_reservoir(
            rain,
            cfg.inflow_gain_a,
            cfg.drainage_b,
            &[],
            0.0,
            cfg.level_max_m,
        );
        b.add(
            site,
            sites,
            "rain",
            SensorKind::Rainfall,
            false,
            rain.clone(),
        );
        b.add(
            site,
            sites,
            "chamber_level",
            SensorKind::FillingLevel,
            false,
            chamber.clone(),
        );
        b.add(
            site,
            sites,
            "pump1_energy",
            SensorKind::PumpEnergy,
            false,
            pump(&chamber, 0.6),
        );
        b.add(
            site,
            sites,
            "pump2_energy",
            SensorKind::PumpEnergy,
            false,
            pump(&chamber, 0.4),
        );
        b.add(
            site,
            sites,
            "valve",
            SensorKind::ValveState,
            false,
            valve(&chamber),
        );
        b.add(
            site,
            sites,
            "flow",
            SensorKind::Other,
            false,
            chamber.iter().map(|l| cfg.drainage_b * l).collect(),
        );
    }

    let rain_forecast = HourlySeries {
        sensor: SensorMeta::derived(crate::ingest::RAIN_FORECAST_ID, SensorKind::Rainfall),
        start: cfg.start,
        values: forecast,
    };
    Dataset::new(b.sensors, b.series, Some(rain_forecast))
}
