//! Shared fixtures for the benchmarks.

use sentinel_core::ingest::{generate_synthetic, DataDir, SynthConfig};
use sentinel_core::{Engine, SessionConfig, Workspace};

/// Synthetic data directory covering `days` days.
pub fn data(days: usize) -> DataDir {
    let cfg = SynthConfig {
        span_hours: days * 24,
        ..SynthConfig::default()
    };
    let dataset = generate_synthetic(&cfg, 7).expect("default config is valid");
    DataDir {
        dataset,
        synth: Some(cfg),
    }
}

/// Engine with trained models, paused at the start of the replay span.
pub fn engine(days: usize) -> Engine {
    let ws = Workspace::from_data_dir(&data(days), None).expect("fixture trains");
    Engine::new(ws, &SessionConfig::new("bench")).expect("default selection exists")
}
