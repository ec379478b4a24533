//! HTTP and event-stream service over a replay session.

pub mod api;
pub mod driver;

use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use axum::Router;
use sentinel_core::{Engine, SessionConfig, Workspace};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use driver::{Handle, DEFAULT_TICK};

pub const BIND_ENV: &str = "SENTINEL_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Session file; created from `data` when missing.
    pub config: PathBuf,
    /// Overrides the data directory named in the session file.
    pub data: Option<PathBuf>,
    pub bind: Option<String>,
    /// Directory of dashboard assets served under `/`.
    pub static_dir: Option<PathBuf>,
}

/// `SENTINEL_BIND` wins over the command-line value.
pub fn resolve_bind(cli: Option<&str>) -> String {
    match std::env::var(BIND_ENV) {
        Ok(v) if !v.is_empty() => v,
        _ => cli.unwrap_or(DEFAULT_BIND).to_string(),
    }
}

pub fn load_session(opts: &ServeOptions) -> anyhow::Result<SessionConfig> {
    let mut config = if opts.config.exists() {
        SessionConfig::load(&opts.config)?
    } else {
        let data = opts.data.clone().with_context(|| {
            format!(
                "{} does not exist and no data directory was given",
                opts.config.display()
            )
        })?;
        SessionConfig::new(data)
    };
    if let Some(data) = &opts.data {
        config.data_dir = data.clone();
    }
    Ok(config)
}

/// Loads data, trains models and builds the engine. Blocking.
pub fn build_engine(config: &SessionConfig) -> anyhow::Result<Engine> {
    let workspace = Workspace::load(&config.data_dir)
        .with_context(|| format!("loading dataset from {}", config.data_dir.display()))?;
    Ok(Engine::new(workspace, config)?)
}

/// The router plus its driver task.
pub fn app(
    engine: Engine,
    persist: Option<PathBuf>,
    static_dir: Option<PathBuf>,
    tick: Duration,
) -> (Router, JoinHandle<()>) {
    let (handle, join) = driver::spawn(engine, persist, tick);
    (api::router(handle, static_dir), join)
}

pub async fn serve(opts: ServeOptions) -> anyhow::Result<()> {
    let config = load_session(&opts)?;
    let engine = {
        let config = config.clone();
        tokio::task::spawn_blocking(move || build_engine(&config)).await??
    };
    engine.session_config().save_atomic(&opts.config)?;
    let bind = resolve_bind(opts.bind.as_deref());
    let listener = TcpListener::bind(&bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    tracing::info!(
        "serving {} on http://{}",
        config.data_dir.display(),
        listener.local_addr()?
    );
    let (router, driver) = app(
        engine,
        Some(opts.config.clone()),
        opts.static_dir.clone(),
        DEFAULT_TICK,
    );
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    driver.await?;
    Ok(())
}
