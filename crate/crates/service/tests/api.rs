use std::path::Path;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mmschema_core::synth::{self, Fixture};
use mmschema_service::{router, Service};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Sse {
    event: String,
    id: Option<String>,
    data: Value,
}

fn parse_sse(text: &str) -> Vec<Sse> {
    text.split("\n\n")
        .filter(|b| !b.trim().is_empty() && !b.starts_with(':'))
        .map(|block| {
            let mut ev = Sse { event: "message".into(), id: None, data: Value::Null };
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event: ") {
                    ev.event = v.into();
                } else if let Some(v) = line.strip_prefix("id: ") {
                    ev.id = Some(v.into());
                } else if let Some(v) = line.strip_prefix("data: ") {
                    ev.data = serde_json::from_str(v).unwrap();
                }
            }
            ev
        })
        .collect()
}

async fn call(app: &Router, method: &str, uri: &str, body: &str, headers: &[(&str, &str)]) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let res = app.clone().oneshot(req.body(Body::from(body.to_string())).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = call(app, "GET", uri, "", &[]).await;
    (s, serde_json::from_str(&b).unwrap_or(Value::String(b)))
}

async fn post(app: &Router, uri: &str, body: &str) -> (StatusCode, Value) {
    let (s, b) = call(app, "POST", uri, body, &[]).await;
    (s, serde_json::from_str(&b).unwrap())
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// Loads a fixture through the API and returns the app.
async fn loaded(runs: &Path, fx: &Fixture, params: Value) -> Router {
    let app = router(Service::new(runs, fx.manifest.parent().unwrap()));
    assert_eq!(post(&app, "/v1/dataset", &read(&fx.manifest)).await.0, StatusCode::OK);
    assert_eq!(post(&app, "/v1/constraints", &read(&fx.constraints)).await.0, StatusCode::OK);
    assert_eq!(post(&app, "/v1/workload", &read(&fx.workload)).await.0, StatusCode::OK);
    assert_eq!(post(&app, "/v1/params", &params.to_string()).await.0, StatusCode::OK);
    app
}

async fn wait_idle(app: &Router) -> Value {
    let t = Instant::now();
    loop {
        let (_, s) = get(app, "/v1/status").await;
        if s["phase"] != "RUNNING" {
            return s;
        }
        assert!(t.elapsed() < Duration::from_secs(120), "run did not end");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

#[tokio::test]
async fn configuration_follows_the_phase_rules() {
    let d = tempfile::tempdir().unwrap();
    let fx = synth::write_demo(&d.path().join("data"), 7).unwrap();
    let app = router(Service::new(d.path().join("runs"), fx.manifest.parent().unwrap()));

    assert_eq!(get(&app, "/v1/status").await.1["phase"], "IDLE");
    assert_eq!(post(&app, "/v1/run/start", "").await.0, StatusCode::CONFLICT);
    assert_eq!(post(&app, "/v1/constraints", "4 = 8").await.0, StatusCode::CONFLICT);
    assert_eq!(post(&app, "/v1/run/stop", "").await.0, StatusCode::CONFLICT);

    let (s, e) =
        post(&app, "/v1/dataset", r#"{"sources":[{"path":"nope.json","model":"JSON","entity_label":"x"}]}"#).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(e["error"].as_str().unwrap().contains("nope.json"), "{e}");

    let (s, cat) = post(&app, "/v1/dataset", &read(&fx.manifest)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(cat["attributes"].as_array().unwrap().len(), 12);
    assert_eq!(cat["attributes"][5]["name"], "title");
    assert_eq!(get(&app, "/v1/status").await.1["phase"], "LOADED");
    // no workload yet
    assert_eq!(post(&app, "/v1/run/start", "").await.0, StatusCode::CONFLICT);

    assert_eq!(post(&app, "/v1/constraints", "4 = 99").await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, c) = post(&app, "/v1/constraints", &read(&fx.constraints)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(c["classes"], json!([[4, 8], [7, 9]]));

    assert_eq!(post(&app, "/v1/workload", "{").await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, w) = post(&app, "/v1/workload", &read(&fx.workload)).await;
    assert_eq!(s, StatusCode::OK);
    let queries = w["queries"].as_array().unwrap();
    assert_eq!(queries.len(), 6);
    assert!(queries.iter().all(|q| q["answerable"] == true));

    assert_eq!(post(&app, "/v1/params", r#"{"alpha": 2.0}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(&app, "/v1/params", r#"{"alpha": 0.5, "bogus": 1}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, p) = post(&app, "/v1/params", r#"{"episodes": 3, "baseline_time": 9000}"#).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((p["episodes"].clone(), p["alpha"].clone()), (json!(3), json!(0.1)));

    assert_eq!(get(&app, "/v1/schemas").await.0, StatusCode::CONFLICT);
    assert_eq!(get(&app, "/v1/run/events").await.0, StatusCode::CONFLICT);
    let singletons: Vec<Vec<u32>> = (0..12).map(|i| vec![i]).collect();
    let (s, o) = post(&app, "/v1/whatif", &serde_json::to_string(&singletons).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(o["status"], "realizable");
    assert!(o["report"]["total"].as_u64().unwrap() > 0);
    assert_eq!(post(&app, "/v1/whatif", "[[0,1]]").await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn stop_lands_on_an_episode_boundary() {
    let d = tempfile::tempdir().unwrap();
    let fx = synth::write_demo(&d.path().join("data"), 7).unwrap();
    let runs = d.path().join("runs");
    let app = loaded(&runs, &fx, json!({ "episodes": 1_000_000 })).await;

    let (s, started) = post(&app, "/v1/run/start", "").await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(started["run"], "run-0001");
    assert_eq!(post(&app, "/v1/run/start", "").await.0, StatusCode::CONFLICT);
    assert_eq!(post(&app, "/v1/dataset", &read(&fx.manifest)).await.0, StatusCode::CONFLICT);
    assert_eq!(post(&app, "/v1/params", "{}").await.0, StatusCode::CONFLICT);
    assert_eq!(post(&app, "/v1/run/stop", "").await.0, StatusCode::ACCEPTED);

    let status = wait_idle(&app).await;
    assert_eq!(status["phase"], "STOPPED");
    let done = status["episode_done"].as_u64().unwrap();
    assert!((1..=1_000_000).contains(&done), "{status}");
    assert_eq!(post(&app, "/v1/run/stop", "").await.0, StatusCode::CONFLICT);

    // every logged line is a complete step record
    let dir = runs.join("run-0001");
    let log = read(&dir.join("episodes.jsonl"));
    let mut last_episode = 0;
    for line in log.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["episode", "step", "left", "right", "reward", "cost", "storage", "signature"]);
        last_episode = v["episode"].as_u64().unwrap();
    }
    assert_eq!(last_episode, done);
    let result: Value = serde_json::from_str(&read(&dir.join("result.json"))).unwrap();
    assert_eq!(result["stopped"], true);
    assert_eq!(result["episodes"].as_array().unwrap().len() as u64, done);

    // a stopped session may start again into a fresh directory
    assert_eq!(post(&app, "/v1/params", r#"{"episodes": 2}"#).await.0, StatusCode::OK);
    assert_eq!(get(&app, "/v1/status").await.1["phase"], "LOADED");
    assert_eq!(post(&app, "/v1/run/start", "").await.1["run"], "run-0002");
    assert_eq!(wait_idle(&app).await["phase"], "DONE");
}

#[tokio::test]
async fn finished_run_streams_lists_and_agrees_with_the_engine() {
    let d = tempfile::tempdir().unwrap();
    let fx = synth::write_small(&d.path().join("data"), 3, 6).unwrap();
    let runs = d.path().join("runs");
    let app = loaded(&runs, &fx, json!({ "episodes": 20, "seed": 4, "baseline_time": 500.0 })).await;
    assert_eq!(post(&app, "/v1/run/start", "").await.0, StatusCode::ACCEPTED);

    // the stream follows the live run and closes after the end event
    let (s, text) = call(&app, "GET", "/v1/run/events", "", &[]).await;
    assert_eq!(s, StatusCode::OK);
    let events = parse_sse(&text);
    let episodes: Vec<&Sse> = events.iter().filter(|e| e.event == "episode").collect();
    assert_eq!(episodes.len(), 20);
    for (i, e) in episodes.iter().enumerate() {
        assert_eq!(e.id.as_deref(), Some((i + 1).to_string().as_str()));
        assert_eq!(e.data["episode"], i + 1);
        assert_eq!(e.data["baseline_time"], 500.0);
        assert_eq!(e.data["baseline_space"], Value::Null);
    }
    let end = events.last().unwrap();
    assert_eq!((end.event.as_str(), end.data["phase"].as_str()), ("end", Some("DONE")));
    assert_eq!(end.data["episode_done"], 20);

    let (_, resumed) = call(&app, "GET", "/v1/run/events", "", &[("last-event-id", "15")]).await;
    let ids: Vec<String> = parse_sse(&resumed).into_iter().filter_map(|e| e.id).collect();
    assert_eq!(ids, ["16", "17", "18", "19", "20"]);

    let dir = runs.join("run-0001");
    let result: Value = serde_json::from_str(&read(&dir.join("result.json"))).unwrap();
    for (sort, best, a, b) in
        [("time", "best_by_time", "cost", "storage"), ("space", "best_by_space", "storage", "cost")]
    {
        let (s, rows) = get(&app, &format!("/v1/schemas?sort={sort}")).await;
        assert_eq!(s, StatusCode::OK);
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), result["all_seen"].as_object().unwrap().len());
        assert_eq!(rows[0]["signature"], result[best]["signature"]);
        let key =
            |r: &Value| (r[a].as_u64().unwrap(), r[b].as_u64().unwrap(), r["signature"].as_str().unwrap().to_string());
        assert!(rows.windows(2).all(|w| key(&w[0]) <= key(&w[1])));
    }
    assert_eq!(get(&app, "/v1/schemas?sort=size").await.0, StatusCode::UNPROCESSABLE_ENTITY);

    // what-if on the best schema reproduces the persisted numbers
    let sig = result["best_by_time"]["signature"].as_str().unwrap();
    let groups = mmschema_core::schema::parse_partition(sig).unwrap();
    let (s, o) = post(&app, "/v1/whatif", &serde_json::to_string(&groups).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(o["signature"], sig);
    assert_eq!(o["report"]["total"], result["best_by_time"]["cost"]);
    assert_eq!(o["report"]["storage_bytes"], result["best_by_time"]["storage"]);

    let (s, ddl) = call(&app, "GET", "/v1/export/ddl", "", &[]).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ddl, read(&dir.join("ddl.sql")));
    let initial = result["initial"]["signature"].as_str().unwrap();
    let (s, ddl) = call(&app, "GET", &format!("/v1/export/ddl?signature={}", urlencode(initial)), "", &[]).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ddl.matches("CREATE TABLE").count(), 6);
    assert_eq!(get(&app, "/v1/export/ddl?signature=%7B0%7D").await.0, StatusCode::NOT_FOUND);
}

fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'0'..=b'9' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}
