//! The single writer. One task owns the [`Engine`]; HTTP handlers enqueue
//! commands and read the latest published snapshot.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use sentinel_core::session::Outcome;
use sentinel_core::{Command, Engine, Error, SensorMeta, Snapshot};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::{Instant, MissedTickBehavior};

pub const DEFAULT_TICK: Duration = Duration::from_millis(100);
const QUEUE_DEPTH: usize = 64;
const EVENT_BUFFER: usize = 256;

struct Request {
    cmd: Command,
    reply: oneshot::Sender<Result<Outcome, Error>>,
}

/// Cloneable access to a running driver.
#[derive(Clone)]
pub struct Handle {
    tx: mpsc::Sender<Request>,
    latest: watch::Receiver<Arc<Snapshot>>,
    events: broadcast::Sender<Arc<Snapshot>>,
    sensors: Arc<Vec<SensorMeta>>,
}

#[derive(Debug)]
pub enum SendError {
    Rejected(Error),
    Stopped,
}

impl Handle {
    /// Resolves once the command is applied and the resulting snapshot is
    /// published.
    pub async fn send(&self, cmd: Command) -> Result<Outcome, SendError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Request { cmd, reply })
            .await
            .map_err(|_| SendError::Stopped)?;
        match rx.await {
            Ok(r) => r.map_err(SendError::Rejected),
            Err(_) => Err(SendError::Stopped),
        }
    }

    pub fn latest(&self) -> Arc<Snapshot> {
        self.latest.borrow().clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<Snapshot>> {
        self.events.subscribe()
    }

    pub fn sensors(&self) -> &[SensorMeta] {
        &self.sensors
    }
}

struct Driver {
    engine: Engine,
    persist: Option<PathBuf>,
    latest: watch::Sender<Arc<Snapshot>>,
    events: broadcast::Sender<Arc<Snapshot>>,
}

impl Driver {
    fn publish(&self, snapshot: Snapshot) {
        let snapshot = Arc::new(snapshot);
        self.latest.send_replace(snapshot.clone());
        // No subscribers is fine.
        let _ = self.events.send(snapshot);
    }

    fn save(&self) {
        if let Some(path) = &self.persist {
            if let Err(e) = self.engine.session_config().save_atomic(path) {
                tracing::warn!("failed to persist session: {e}");
            }
        }
    }

    fn handle(&mut self, req: Request) {
        let result = self.engine.apply(req.cmd);
        if result.is_ok() {
            self.save();
            self.publish(self.engine.snapshot());
        }
        let _ = req.reply.send(result);
    }

    async fn run(mut self, mut rx: mpsc::Receiver<Request>, tick: Duration) {
        let mut ticker = tokio::time::interval(tick);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        let mut last = Instant::now();
        loop {
            tokio::select! {
                req = rx.recv() => match req {
                    Some(req) => self.handle(req),
                    None => break,
                },
                now = ticker.tick() => {
                    let dt = now.duration_since(last).as_secs_f64();
                    last = now;
                    let was_paused = self.engine.clock().paused;
                    for s in self.engine.advance(dt) {
                        self.publish(s);
                    }
                    if !was_paused && self.engine.clock().paused {
                        self.save();
                    }
                }
            }
        }
        self.save();
    }
}

/// Starts the driver task. `persist` receives the session config after every
/// applied command.
pub fn spawn(engine: Engine, persist: Option<PathBuf>, tick: Duration) -> (Handle, JoinHandle<()>) {
    let initial = Arc::new(engine.snapshot());
    let (latest_tx, latest_rx) = watch::channel(initial);
    let (events, _) = broadcast::channel(EVENT_BUFFER);
    let (tx, rx) = mpsc::channel(QUEUE_DEPTH);
    let handle = Handle {
        tx,
        latest: latest_rx,
        events: events.clone(),
        sensors: Arc::new(engine.dataset().sensors.clone()),
    };
    let driver = Driver {
        engine,
        persist,
        latest: latest_tx,
        events,
    };
    let join = tokio::spawn(driver.run(rx, tick));
    (handle, join)
}
