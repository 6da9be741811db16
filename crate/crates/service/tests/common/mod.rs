#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use qualnet_core::provider::{Backend, ProviderSpec};
use qualnet_service::{app, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn backend(spec: &str) -> Arc<dyn Backend> {
    spec.parse::<ProviderSpec>()
        .unwrap()
        .resolve(&fixtures())
        .build()
        .unwrap()
}

pub fn mock6_backend() -> Arc<dyn Backend> {
    backend("mock:mock6/mock_script.json")
}

pub fn open(dir: &Path, backend: Arc<dyn Backend>) -> Router {
    let config = ServiceConfig {
        data_dir: dir.to_path_buf(),
        ..ServiceConfig::default()
    };
    app(AppState::open(config, backend).unwrap())
}

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.bytes).into_owned()
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let builder = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(v) => builder
            .header("content-type", "application/json")
            .body(Body::from(v.to_string())),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    raw(app, request).await
}

pub async fn send_text(app: &Router, method: Method, uri: &str, text: &str) -> Reply {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "text/plain")
        .body(Body::from(text.to_string()))
        .unwrap();
    raw(app, request).await
}

pub async fn raw(app: &Router, request: Request<Body>) -> Reply {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, bytes }
}

/// Polls a job until it leaves `pending`/`running`.
pub async fn wait_job(app: &Router, job_id: &str) -> Value {
    for _ in 0..2000 {
        let job = send(app, Method::GET, &format!("/jobs/{job_id}"), None).await.json();
        match job["state"].as_str() {
            Some("pending") | Some("running") => tokio::time::sleep(Duration::from_millis(5)).await,
            _ => return job,
        }
    }
    panic!("job {job_id} did not finish");
}

fn expect(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn expect_status(reply: &Reply, status: StatusCode, step: &str) -> Result<Value, String> {
    if reply.status != status {
        return Err(format!("{step}: expected {status}, got {} {}", reply.status, reply.text()));
    }
    Ok(if reply.bytes.is_empty() { Value::Null } else { reply.json() })
}

fn revision(v: &Value, step: &str) -> Result<u64, String> {
    v["revision"].as_u64().ok_or_else(|| format!("{step}: no revision in {v}"))
}

/// What a scripted session observed.
#[derive(Debug)]
pub struct SessionOutcome {
    pub final_revision: u64,
    pub indicators: usize,
    pub stale_status: StatusCode,
}

/// create, upload, run (mock), edit an indicator, map a concept, rebuild,
/// fetch views, evaluate; every mutation must advance the revision by one
/// and a stale edit must be refused with 409.
pub async fn scripted_session(app: &Router) -> Result<SessionOutcome, String> {
    let overview = fixture("mock6/overview.txt");
    let created = send(app, Method::POST, "/projects", Some(json!({"project_id": "mock6", "overview": overview.trim()}))).await;
    let v = expect_status(&created, StatusCode::CREATED, "create")?;
    let mut rev = revision(&v, "create")?;
    let echoed = expect_status(&send(app, Method::GET, "/projects/mock6", None).await, StatusCode::OK, "get")?;
    expect(echoed == v, "GET /projects/{id} does not echo the created project")?;

    let step = |name: &'static str, v: &Value, rev: &mut u64| -> Result<(), String> {
        let r = revision(v, name)?;
        expect(r == *rev + 1, format!("{name}: revision {r}, expected {}", *rev + 1))?;
        *rev = r;
        Ok(())
    };

    let uri = format!("/projects/mock6/corpus?expected_revision={rev}");
    let v = expect_status(&send_text(app, Method::POST, &uri, &fixture("mock6/corpus.txt")).await, StatusCode::OK, "upload")?;
    step("upload", &v, &mut rev)?;

    let concepts: Value = serde_json::from_str(&fixture("mock6/concepts.json")).map_err(|e| e.to_string())?;
    for c in concepts.as_array().ok_or("concepts fixture")? {
        let mut body = c.clone();
        body["expected_revision"] = rev.into();
        let v = expect_status(&send(app, Method::POST, "/projects/mock6/concepts", Some(body)).await, StatusCode::CREATED, "concept")?;
        step("concept", &v, &mut rev)?;
    }

    let uri = format!("/projects/mock6/run?stages=extract,map,classify,merge&expected_revision={rev}");
    let job = expect_status(&send(app, Method::POST, &uri, None).await, StatusCode::ACCEPTED, "run")?;
    let job = wait_job(app, job["job_id"].as_str().ok_or("job id")?).await;
    expect(job["state"] == "done", format!("run: job ended as {job}"))?;
    let report = &job["report"];
    let r = revision(report, "run")?;
    expect(r == rev + 4, format!("run: revision {r}, expected {} (one per stage)", rev + 4))?;
    rev = r;
    let indicators = report["indicators"].as_u64().ok_or("indicator count")? as usize;

    // a stale edit is refused and changes nothing
    let stale = send(
        app,
        Method::PATCH,
        "/projects/mock6/indicators/0",
        Some(json!({"text": "unforeseen events", "expected_revision": rev - 1})),
    )
    .await;
    let v = expect_status(&stale, StatusCode::CONFLICT, "stale edit")?;
    expect(v["code"] == "conflict", "stale edit: error code")?;
    let now = expect_status(&send(app, Method::GET, "/projects/mock6", None).await, StatusCode::OK, "get")?;
    expect(revision(&now, "get")? == rev, "stale edit changed the revision")?;

    // edit by span: "Unforeseen events" -> "Unforeseen"
    let v = expect_status(
        &send(
            app,
            Method::PATCH,
            "/projects/mock6/indicators/0",
            Some(json!({"span": {"start": 0, "end": 10}, "expected_revision": rev})),
        )
        .await,
        StatusCode::OK,
        "edit indicator",
    )?;
    step("edit indicator", &v, &mut rev)?;
    expect(v["indicator"]["text"] == "Unforeseen", format!("edit indicator: {}", v["indicator"]))?;
    expect(v["indicator"]["status"] == "edited", "edit indicator: status")?;

    // map indicator 2 ("mood swings") to "affective response"
    let v = expect_status(
        &send(
            app,
            Method::PATCH,
            "/projects/mock6/indicators/2",
            Some(json!({"concept_id": 2, "expected_revision": rev})),
        )
        .await,
        StatusCode::OK,
        "map concept",
    )?;
    step("map concept", &v, &mut rev)?;
    expect(v["concept"]["name"] == "affective response", "map concept: concept")?;
    let refs = v["concept"]["references"].as_array().ok_or("references")?;
    expect(refs.iter().any(|r| r == "mood swings"), "map concept: reference not recorded")?;

    let v = expect_status(
        &send(app, Method::POST, &format!("/projects/mock6/rebuild?expected_revision={rev}"), None).await,
        StatusCode::OK,
        "rebuild",
    )?;
    step("rebuild", &v, &mut rev)?;

    // views are pure reads at the current revision
    for uri in [
        "/projects/mock6/network?view=indicator&fraction=0.3",
        "/projects/mock6/network?view=concept",
        "/projects/mock6/network/component?node=0",
        "/projects/mock6/search?q=mood&k=3",
    ] {
        let a = send(app, Method::GET, uri, None).await;
        let b = send(app, Method::GET, uri, None).await;
        let v = expect_status(&a, StatusCode::OK, uri)?;
        expect(a.bytes == b.bytes, format!("{uri}: repeated reads differ"))?;
        expect(revision(&v, uri)? == rev, format!("{uri}: stale revision"))?;
    }
    let all = send(app, Method::GET, "/projects/mock6/network?view=indicator", None).await.json();
    let n = all["nodes"].as_array().ok_or("nodes")?.len();
    let some = send(app, Method::GET, "/projects/mock6/network?view=indicator&fraction=0.3", None).await.json();
    let kept = some["nodes"].as_array().ok_or("nodes")?.len();
    expect(kept == (0.3 * n as f64).ceil() as usize, format!("fraction 0.3 kept {kept} of {n}"))?;
    let concept_view = send(app, Method::GET, "/projects/mock6/network?view=concept", None).await.json();
    let weight: u64 = concept_view["concept_edges"]
        .as_array()
        .ok_or("concept edges")?
        .iter()
        .map(|e| e["weight"].as_u64().unwrap_or(0))
        .sum();
    expect(
        Some(weight) == concept_view["total_indicator_edges"].as_u64(),
        "concept view: weights do not add up",
    )?;

    let gold: Value = serde_json::from_str(&fixture("mock6/gold.json")).map_err(|e| e.to_string())?;
    let v = expect_status(
        &send(app, Method::POST, "/projects/mock6/evaluate", Some(json!({"gold": gold}))).await,
        StatusCode::OK,
        "evaluate",
    )?;
    expect(revision(&v, "evaluate")? == rev, "evaluate: revision")?;
    let tp = v["indicators"]["true_positive"].as_u64().ok_or("evaluate: tp")?;
    expect(tp > 0, "evaluate: no indicator matched")?;

    Ok(SessionOutcome {
        final_revision: rev,
        indicators,
        stale_status: stale.status,
    })
}
