mod common;

use common::{synth_dir, write_config, SnapshotStream, TestServer};
use sentinel_core::ops::Activity;
use sentinel_core::{ForecastRegime, OperationalMode, SessionConfig};
use serde_json::json;

async fn server(days: usize) -> (tempfile::TempDir, TestServer) {
    let dir = synth_dir(days, 11);
    let config_path = dir.path().join("session.toml");
    write_config(&config_path, &SessionConfig::new(dir.path()));
    let s = TestServer::start(&config_path).await;
    (dir, s)
}

#[tokio::test(flavor = "multi_thread")]
async fn read_endpoints_respond() {
    let (_dir, s) = server(400).await;
    let snap = s.state().await;
    assert!(snap.is_consistent());
    assert_eq!(snap.state.regime, ForecastRegime::Cloud);

    let (status, sensors) = s.get("/sensors").await;
    assert_eq!(status, 200);
    let sensors = sensors.as_array().unwrap();
    assert_eq!(sensors.len(), 35);
    assert_eq!(sensors.iter().filter(|v| v["is_basin"] == true).count(), 1);
    for key in ["sensor_id", "site_id", "lat", "lon", "kind", "status"] {
        assert!(sensors[0].get(key).is_some(), "missing {key}");
    }

    let (_, forecast) = s.get("/forecast").await;
    assert_eq!(forecast["forecast"]["values"].as_array().unwrap().len(), 12);
    let (_, rain) = s.get("/rainfall").await;
    assert_eq!(
        rain["rainfall_past"]["values"].as_array().unwrap().len(),
        24
    );
    let (_, risk) = s.get("/risk").await;
    assert!(risk["risk"]["score"].is_number());
    assert!(risk["sim_time"].as_str().unwrap().ends_with(":00:00Z"));

    let (status, body) = s.get("/nope").await;
    assert_eq!(status, 404);
    assert!(body["error"].is_string());
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn control_errors_are_json() {
    let (_dir, s) = server(400).await;
    let (status, body) = s.post("/clock/step", json!({"delta": 3})).await;
    assert_eq!(status, 400);
    assert!(body["error"].as_str().unwrap().contains("delta"));
    let (status, body) = s.post("/mode", json!({"mode": "sideways"})).await;
    assert_eq!(status, 400);
    assert!(body["error"].is_string());
    let (status, _) = s
        .post("/model", json!({"regime": "edge", "model_id": "missing"}))
        .await;
    assert_eq!(status, 404);
    let (status, _) = s.post("/clock/speed", json!({"speed": 0})).await;
    assert_eq!(status, 400);
    let (status, _) = s
        .post(
            "/clock/seek_rain",
            json!({"threshold_mm": -1, "direction": "forward"}),
        )
        .await;
    assert_eq!(status, 400);
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn mutations_are_read_after_write_and_persisted() {
    let (_dir, s) = server(400).await;
    let t0 = s.state().await.sim_time;

    let (status, _) = s.post("/mode", json!({"mode": "full_outage"})).await;
    assert_eq!(status, 200);
    let snap = s.state().await;
    assert_eq!(snap.state.regime, ForecastRegime::Edge);
    assert!(snap.rainfall_future.is_none());
    let inactive = snap
        .state
        .statuses
        .iter()
        .filter(|st| st.status == Activity::Inactive)
        .count();
    assert_eq!(inactive, 34);

    s.post(
        "/model",
        json!({"regime": "edge", "model_id": "persistence"}),
    )
    .await;
    assert_eq!(
        s.state().await.forecast.result().unwrap().model_id,
        "persistence"
    );

    s.post("/clock/step", json!({"delta": 1})).await;
    assert_eq!(s.state().await.sim_time, t0 + 1);
    s.post("/clock/speed", json!({"speed": 20})).await;

    let saved = SessionConfig::load(&s.config_path).unwrap();
    assert_eq!(saved.speed, 15.0);
    assert_eq!(saved.mode, OperationalMode::FullOutage);
    assert_eq!(saved.models.edge, "persistence");
    assert_eq!(saved.sim_time, Some(t0 + 1));
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn seek_reports_found_and_time() {
    let (_dir, s) = server(400).await;
    let t0 = s.state().await.sim_time;
    let (status, body) = s
        .post(
            "/clock/seek_rain",
            json!({"threshold_mm": 0.5, "direction": "forward"}),
        )
        .await;
    assert_eq!(status, 200);
    assert_eq!(body["found"], true);
    let t: sentinel_core::Timestamp = body["sim_time"].as_str().unwrap().parse().unwrap();
    assert!(t > t0);
    assert_eq!(s.state().await.sim_time, t);

    let (_, body) = s
        .post(
            "/clock/seek_rain",
            json!({"threshold_mm": 1e6, "direction": "forward"}),
        )
        .await;
    assert_eq!(body["found"], false);
    assert_eq!(s.state().await.sim_time, t);
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn stream_pushes_after_mutation_and_each_hour() {
    let (_dir, s) = server(400).await;
    let mut stream = SnapshotStream::connect(&s).await;
    let first = stream.next().await;
    s.post("/mode", json!({"mode": "full_outage"})).await;
    let after = stream.next().await;
    assert_eq!(after.sim_time, first.sim_time);
    assert_eq!(after.state.mode, OperationalMode::FullOutage);

    s.post("/clock/speed", json!({"speed": 15})).await;
    stream.next().await;
    s.post("/clock/pause", json!({"paused": false})).await;
    let mut prev = stream.next().await;
    assert!(!prev.clock.paused);
    for _ in 0..10 {
        let next = stream.next().await;
        assert_eq!(next.sim_time, prev.sim_time + 1);
        assert!(next.is_consistent());
        assert_eq!(next.forecast.result().unwrap().values.len(), 1);
        prev = next;
    }
    drop(stream);
    s.stop().await;
}
