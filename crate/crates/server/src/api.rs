//! HTTP routes under `/api/v1`.

use std::convert::Infallible;
use std::path::PathBuf;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use sentinel_core::ops::Activity;
use sentinel_core::session::Outcome;
use sentinel_core::snapshot::{ForecastView, RiskView, SeriesView};
use sentinel_core::timeseries::FillingBand;
use sentinel_core::{
    Command, Direction, Error, ForecastRegime, OperationalMode, SensorKind, Snapshot, Timestamp,
};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;

use crate::driver::{Handle, SendError};

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
        }
        (
            self.status,
            Json(Body {
                error: self.message,
            }),
        )
            .into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl From<SendError> for ApiError {
    fn from(e: SendError) -> Self {
        match e {
            SendError::Stopped => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "session driver stopped")
            }
            SendError::Rejected(e) => {
                let status = match e {
                    Error::UnknownModel { .. } => StatusCode::NOT_FOUND,
                    Error::Domain(_) | Error::Config(_) => StatusCode::BAD_REQUEST,
                    _ => StatusCode::INTERNAL_SERVER_ERROR,
                };
                ApiError::new(status, e.to_string())
            }
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Serialize)]
pub struct SensorView {
    pub sensor_id: String,
    pub site_id: String,
    pub lat: f64,
    pub lon: f64,
    pub kind: SensorKind,
    pub status: Activity,
    pub is_basin: bool,
}

#[derive(Serialize)]
pub struct ForecastFragment {
    pub sim_time: Timestamp,
    pub forecast: ForecastView,
    pub level_past: SeriesView,
    pub level_future_truth: SeriesView,
    pub bands: Vec<Option<FillingBand>>,
}

#[derive(Serialize)]
pub struct RiskFragment {
    pub sim_time: Timestamp,
    pub risk: Option<RiskView>,
}

#[derive(Serialize)]
pub struct RainfallFragment {
    pub sim_time: Timestamp,
    pub rainfall_past: SeriesView,
    pub rainfall_future: Option<SeriesView>,
}

#[derive(Deserialize)]
pub struct ModeBody {
    pub mode: OperationalMode,
}

#[derive(Deserialize)]
pub struct ModelBody {
    pub regime: ForecastRegime,
    pub model_id: String,
}

#[derive(Deserialize)]
pub struct SpeedBody {
    pub speed: f64,
}

#[derive(Deserialize)]
pub struct StepBody {
    pub delta: i64,
}

#[derive(Deserialize)]
pub struct PauseBody {
    pub paused: bool,
}

#[derive(Deserialize)]
pub struct SeekBody {
    pub threshold_mm: f64,
    pub direction: Direction,
}

#[derive(Serialize)]
pub struct SeekReply {
    pub found: bool,
    pub sim_time: Timestamp,
}

async fn state(State(h): State<Handle>) -> Json<Snapshot> {
    Json(Snapshot::clone(&h.latest()))
}

async fn sensors(State(h): State<Handle>) -> Json<Vec<SensorView>> {
    let snap = h.latest();
    let views = h
        .sensors()
        .iter()
        .map(|m| {
            let status = snap
                .state
                .statuses
                .iter()
                .find(|s| s.sensor_id == m.id)
                .map_or(Activity::Inactive, |s| s.status);
            SensorView {
                sensor_id: m.id.clone(),
                site_id: m.site_id.clone(),
                lat: m.lat,
                lon: m.lon,
                kind: m.kind,
                status,
                is_basin: m.is_basin_level,
            }
        })
        .collect();
    Json(views)
}

async fn forecast(State(h): State<Handle>) -> Json<ForecastFragment> {
    let s = h.latest();
    Json(ForecastFragment {
        sim_time: s.sim_time,
        forecast: s.forecast.clone(),
        level_past: s.level_past.clone(),
        level_future_truth: s.level_future_truth.clone(),
        bands: s.bands.clone(),
    })
}

async fn risk(State(h): State<Handle>) -> Json<RiskFragment> {
    let s = h.latest();
    Json(RiskFragment {
        sim_time: s.sim_time,
        risk: s.risk,
    })
}

async fn rainfall(State(h): State<Handle>) -> Json<RainfallFragment> {
    let s = h.latest();
    Json(RainfallFragment {
        sim_time: s.sim_time,
        rainfall_past: s.rainfall_past.clone(),
        rainfall_future: s.rainfall_future.clone(),
    })
}

async fn apply(h: &Handle, cmd: Command) -> ApiResult<Snapshot> {
    h.send(cmd).await?;
    Ok(Json(Snapshot::clone(&h.latest())))
}

async fn set_mode(
    State(h): State<Handle>,
    body: Result<Json<ModeBody>, JsonRejection>,
) -> ApiResult<Snapshot> {
    let Json(b) = body?;
    apply(&h, Command::SetMode(b.mode)).await
}

async fn set_model(
    State(h): State<Handle>,
    body: Result<Json<ModelBody>, JsonRejection>,
) -> ApiResult<Snapshot> {
    let Json(b) = body?;
    apply(
        &h,
        Command::SelectModel {
            regime: b.regime,
            model_id: b.model_id,
        },
    )
    .await
}

async fn set_speed(
    State(h): State<Handle>,
    body: Result<Json<SpeedBody>, JsonRejection>,
) -> ApiResult<Snapshot> {
    let Json(b) = body?;
    apply(&h, Command::SetSpeed(b.speed)).await
}

async fn step(
    State(h): State<Handle>,
    body: Result<Json<StepBody>, JsonRejection>,
) -> ApiResult<Snapshot> {
    let Json(b) = body?;
    apply(&h, Command::Step(b.delta)).await
}

async fn pause(
    State(h): State<Handle>,
    body: Result<Json<PauseBody>, JsonRejection>,
) -> ApiResult<Snapshot> {
    let Json(b) = body?;
    apply(&h, Command::SetPaused(b.paused)).await
}

async fn seek_rain(
    State(h): State<Handle>,
    body: Result<Json<SeekBody>, JsonRejection>,
) -> ApiResult<SeekReply> {
    let Json(b) = body?;
    let outcome = h
        .send(Command::SeekRain {
            threshold_mm: b.threshold_mm,
            direction: b.direction,
        })
        .await?;
    match outcome {
        Outcome::Seek { found, sim_time } => Ok(Json(SeekReply { found, sim_time })),
        Outcome::Applied => Err(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "unexpected outcome",
        )),
    }
}

fn snapshot_event(s: &Snapshot) -> Event {
    match Event::default().event("snapshot").json_data(s) {
        Ok(e) => e,
        Err(e) => Event::default().event("error").data(e.to_string()),
    }
}

/// The latest snapshot first, then one per published change.
async fn stream(State(h): State<Handle>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = h.subscribe();
    let first = h.latest();
    let rest = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(s) => return Some((s, rx)),
                Err(RecvError::Lagged(n)) => {
                    tracing::warn!("stream subscriber skipped {n} snapshots")
                }
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let events = futures::stream::once(async move { first })
        .chain(rest)
        .map(|s| Ok(snapshot_event(&s)));
    Sse::new(events).keep_alive(KeepAlive::default())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint")
}

pub fn router(handle: Handle, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/state", get(state))
        .route("/sensors", get(sensors))
        .route("/forecast", get(forecast))
        .route("/risk", get(risk))
        .route("/rainfall", get(rainfall))
        .route("/stream", get(stream))
        .route("/mode", post(set_mode))
        .route("/model", post(set_model))
        .route("/clock/speed", post(set_speed))
        .route("/clock/step", post(step))
        .route("/clock/pause", post(pause))
        .route("/clock/seek_rain", post(seek_rain))
        .fallback(not_found)
        .with_state(handle);
    let app = Router::new().nest("/api/v1", api);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}
