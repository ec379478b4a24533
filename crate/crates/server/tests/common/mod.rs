#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::StreamExt;
use sentinel_core::ingest::{generate_synthetic, write_data_dir, SynthConfig};
use sentinel_core::{SessionConfig, Snapshot};
use sentinel_server::{app, build_engine, load_session, ServeOptions, DEFAULT_TICK};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub const EVENT_TIMEOUT: Duration = Duration::from_secs(10);

/// A synthetic data directory spanning `days` days from 2021-01-01.
pub fn synth_dir(days: usize, seed: u64) -> tempfile::TempDir {
    let cfg = SynthConfig {
        span_hours: days * 24,
        ..SynthConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let d = generate_synthetic(&cfg, seed).unwrap();
    write_data_dir(dir.path(), &d, Some(&cfg)).unwrap();
    dir
}

pub fn write_config(path: &Path, config: &SessionConfig) {
    std::fs::write(path, config.to_toml().unwrap()).unwrap();
}

pub struct TestServer {
    pub base: String,
    pub config_path: PathBuf,
    shutdown: oneshot::Sender<()>,
    server: JoinHandle<()>,
    driver: JoinHandle<()>,
}

impl TestServer {
    pub async fn start(config_path: &Path) -> TestServer {
        let opts = ServeOptions {
            config: config_path.to_path_buf(),
            data: None,
            bind: None,
            static_dir: None,
        };
        let config = load_session(&opts).unwrap();
        let engine = tokio::task::spawn_blocking(move || build_engine(&config))
            .await
            .unwrap()
            .unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (router, driver) = app(engine, Some(config_path.to_path_buf()), None, DEFAULT_TICK);
        let (shutdown, rx) = oneshot::channel::<()>();
        let server = tokio::spawn(async move {
            axum::serve(listener, router)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
                .unwrap();
        });
        TestServer {
            base: format!("http://{addr}/api/v1"),
            config_path: config_path.to_path_buf(),
            shutdown,
            server,
            driver,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn get(&self, path: &str) -> (u16, serde_json::Value) {
        let r = reqwest::get(self.url(path)).await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    pub async fn post(&self, path: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
        let r = reqwest::Client::new()
            .post(self.url(path))
            .json(&body)
            .send()
            .await
            .unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    pub async fn state(&self) -> Snapshot {
        let (status, body) = self.get("/state").await;
        assert_eq!(status, 200);
        serde_json::from_value(body).unwrap()
    }

    /// Stops the server. Open streams must be dropped first.
    pub async fn stop(self) {
        let _ = self.shutdown.send(());
        tokio::time::timeout(EVENT_TIMEOUT, self.server)
            .await
            .unwrap()
            .unwrap();
        tokio::time::timeout(EVENT_TIMEOUT, self.driver)
            .await
            .unwrap()
            .unwrap();
    }
}

/// Minimal event-stream reader for `snapshot` events.
pub struct SnapshotStream {
    body: futures::stream::BoxStream<'static, reqwest::Result<Vec<u8>>>,
    buf: String,
}

impl SnapshotStream {
    pub async fn connect(server: &TestServer) -> SnapshotStream {
        let r = reqwest::get(server.url("/stream")).await.unwrap();
        assert_eq!(r.status().as_u16(), 200);
        SnapshotStream {
            body: r.bytes_stream().map(|c| c.map(|b| b.to_vec())).boxed(),
            buf: String::new(),
        }
    }

    async fn next_event(&mut self) -> (String, String) {
        loop {
            if let Some(end) = self.buf.find("\n\n") {
                let raw: String = self.buf.drain(..end + 2).collect();
                let mut name = String::new();
                let mut data = String::new();
                for line in raw.lines() {
                    if let Some(v) = line.strip_prefix("event:") {
                        name = v.trim().to_string();
                    } else if let Some(v) = line.strip_prefix("data:") {
                        data.push_str(v.strip_prefix(' ').unwrap_or(v));
                    }
                }
                if name.is_empty() && data.is_empty() {
                    // keep-alive comment
                    continue;
                }
                return (name, data);
            }
            let chunk = self.body.next().await.expect("stream ended").unwrap();
            self.buf.push_str(&String::from_utf8_lossy(&chunk));
        }
    }

    pub async fn next(&mut self) -> Snapshot {
        let (name, data) = tokio::time::timeout(EVENT_TIMEOUT, self.next_event())
            .await
            .expect("timed out waiting for a snapshot event");
        assert_eq!(name, "snapshot");
        serde_json::from_str(&data).unwrap()
    }
}
