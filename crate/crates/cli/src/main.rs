use std::io::IsTerminal;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sentinel_core::forecast::{
    evaluate, fit_cloud_model, fit_edge_model, read_ar_model, run_regime, write_ar_model,
    ArForecaster, ModelRegistry, Persistence,
};
use sentinel_core::ingest::{
    default_partition, generate_synthetic, load_csv, load_data_dir, write_data_dir, SynthConfig,
};
use sentinel_core::risk::{
    classify_risk, features_at, fit_risk_model, predict_risk, read_gbdt_model, write_gbdt_model,
};
use sentinel_core::{ForecastRegime, RiskBand, Timestamp};
use sentinel_server::ServeOptions;

#[derive(Parser)]
#[command(
    name = "sentinel",
    version,
    about = "Overflow-basin replay, forecasting and risk tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    #[command(subcommand)]
    Ingest(Ingest),
    #[command(subcommand)]
    Forecast(Forecast),
    #[command(subcommand)]
    Risk(Risk),
    /// Run the replay service.
    Serve {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "session.toml")]
        config: PathBuf,
        /// Overridden by SENTINEL_BIND.
        #[arg(long)]
        bind: Option<String>,
        /// Dashboard assets to serve under `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Ingest {
    /// Generate a synthetic data directory.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a measurements file against its metadata.
    Validate { data: PathBuf, meta: PathBuf },
}

#[derive(Subcommand)]
enum Forecast {
    /// Fit the regime's autoregressive model on the training years.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        regime: ForecastRegime,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a fitted model against persistence over the held-out year.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Subcommand)]
enum Risk {
    /// Fit the overflow-risk booster on the training years.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Risk score and band at one hour.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        at: Timestamp,
        #[arg(long)]
        data: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match Cli::parse().command {
        Top::Ingest(cmd) => ingest(cmd),
        Top::Forecast(cmd) => forecast(cmd),
        Top::Risk(cmd) => risk(cmd),
        Top::Serve {
            data,
            config,
            bind,
            static_dir,
        } => tokio::runtime::Runtime::new()?.block_on(sentinel_server::serve(ServeOptions {
            config,
            data,
            bind,
            static_dir,
        })),
    }
}

fn ingest(cmd: Ingest) -> anyhow::Result<()> {
    match cmd {
        Ingest::Synth { config, seed, out } => {
            let cfg = SynthConfig::from_file(&config)?;
            let d = generate_synthetic(&cfg, seed)?;
            write_data_dir(&out, &d, Some(&cfg))?;
            let (from, to) = d.span().context("generated dataset is empty")?;
            println!(
                "wrote {} sensors, {from} .. {to} to {}",
                d.sensors.len(),
                out.display()
            );
        }
        Ingest::Validate { data, meta } => {
            let d = load_csv(&data, &meta)?;
            let (from, to) = d.span().context("no measurements")?;
            let (mut slots, mut gaps) = (0usize, 0usize);
            for s in d.series.values() {
                slots += s.len();
                gaps += s.len() - s.present_count();
            }
            println!(
                "ok: {} sensors, basin {}, {from} .. {to}, {slots} hourly slots, {gaps} gaps",
                d.sensors.len(),
                d.basin().id
            );
        }
    }
    Ok(())
}

fn forecast(cmd: Forecast) -> anyhow::Result<()> {
    match cmd {
        Forecast::Fit { data, regime, out } => {
            let dir = load_data_dir(&data)?;
            let train = default_partition(&dir.dataset)?.train;
            let model = match regime {
                ForecastRegime::Cloud => fit_cloud_model(&train)?,
                ForecastRegime::Edge => fit_edge_model(&train)?,
            };
            write_ar_model(&out, regime, &model)?;
            println!(
                "{regime} model with {} coefficients written to {}",
                model.num_coeffs(),
                out.display()
            );
        }
        Forecast::Eval {
            data,
            model,
            report,
        } => {
            let (regime, model) = read_ar_model(&model)?;
            let dir = load_data_dir(&data)?;
            let d = &dir.dataset;
            let eval = default_partition(d)?.eval;
            let truth = eval.basin_series();
            let mut registry = ModelRegistry::new();
            registry.register(
                regime,
                Arc::new(ArForecaster {
                    id: "model".into(),
                    model,
                }),
            );
            registry.register(regime, Arc::new(Persistence));

            // Origins whose whole horizon lies in the held-out span.
            let horizon = regime.horizon_hours() as i64;
            let mut w = csv::Writer::from_path(&report)
                .with_context(|| format!("creating {}", report.display()))?;
            w.write_record(["model_id", "lead_h", "mse", "count"])?;
            for id in ["model", "persistence"] {
                let mut runs = Vec::new();
                let mut t = truth.start;
                while t + horizon < truth.end() {
                    runs.push(run_regime(regime, d, t, &registry, id)?);
                    t = t + 1;
                }
                let m = evaluate(&runs, truth)?;
                for (k, mse) in m.per_horizon_mse.iter().enumerate() {
                    let mse = mse.map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([id, &(k + 1).to_string(), &mse, &runs.len().to_string()])?;
                }
                w.write_record([id, "all", &m.mse.to_string(), &m.compared.to_string()])?;
                println!(
                    "{id}: {regime} MSE {:.6} over {} origins",
                    m.mse,
                    runs.len()
                );
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn risk(cmd: Risk) -> anyhow::Result<()> {
    match cmd {
        Risk::Fit { data, out } => {
            let dir = load_data_dir(&data)?;
            let train = default_partition(&dir.dataset)?.train;
            let model = fit_risk_model(&train, dir.overflow_level())?;
            write_gbdt_model(&out, &model)?;
            println!("{} stumps written to {}", model.stumps.len(), out.display());
        }
        Risk::Score { model, at, data } => {
            let model = read_gbdt_model(&model)?;
            let dir = load_data_dir(&data)?;
            let features = features_at(&dir.dataset, at)?;
            let score = predict_risk(&model, &features)?;
            let band = match classify_risk(score)? {
                RiskBand::Low => "low",
                RiskBand::Medium => "medium",
                RiskBand::High => "high",
            };
            println!("{at},{score:.6},{band}");
        }
    }
    Ok(())
}
