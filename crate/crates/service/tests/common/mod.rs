//! Golden-response replay: runs the request sequence in `cases.json` against
//! a fresh router and compares each status and body with the recorded file.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{header, Request};
use axum::Router;
use caliper_core::dataset::{ingest_features, ingest_predictions, EvaluationSession, ModelRecord, Predictions};
use caliper_core::selection::SubgroupPredicate;
use caliper_service::{router, AppState};
use http_body_util::BodyExt;
use serde::Deserialize;
use tower::ServiceExt;

#[derive(Debug, Clone, Deserialize)]
pub struct Case {
    pub name: String,
    pub method: String,
    pub uri: String,
    pub content_type: Option<String>,
    pub body: Option<String>,
    pub body_file: Option<String>,
}

pub fn fresh_app() -> Router {
    router(AppState::default())
}

pub async fn call(app: &Router, method: &str, uri: &str, content_type: Option<&str>, body: Vec<u8>) -> (u16, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = content_type {
        req = req.header(header::CONTENT_TYPE, ct);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub fn load_cases(dir: &Path) -> Vec<Case> {
    serde_json::from_str(&std::fs::read_to_string(dir.join("cases.json")).unwrap()).unwrap()
}

fn case_body(dir: &Path, case: &Case) -> Vec<u8> {
    match (&case.body, &case.body_file) {
        (Some(b), None) => b.clone().into_bytes(),
        (None, Some(f)) => std::fs::read(dir.join(f)).unwrap(),
        (None, None) => Vec::new(),
        _ => panic!("case {} has both body and body_file", case.name),
    }
}

/// A fresh app after the setup cases (session, models and subgroups).
pub async fn setup_app(dir: &Path) -> Router {
    let app = fresh_app();
    for case in load_cases(dir)
        .iter()
        .filter(|c| c.name.starts_with("create_") || c.name.starts_with("add_model"))
    {
        let (status, text) = call(&app, &case.method, &case.uri, case.content_type.as_deref(), case_body(dir, case)).await;
        assert_eq!(status, 201, "{}: {text}", case.name);
    }
    app
}

/// Replays every case in order on one fresh app; returns `(case, status, body)`.
pub async fn replay(dir: &Path) -> Vec<(Case, u16, String)> {
    let app = fresh_app();
    let mut out = Vec::new();
    for case in load_cases(dir) {
        let body = case_body(dir, &case);
        let (status, text) = call(&app, &case.method, &case.uri, case.content_type.as_deref(), body).await;
        out.push((case, status, text));
    }
    out
}

pub fn expected_path(dir: &Path, name: &str) -> PathBuf {
    dir.join("expected").join(format!("{name}.txt"))
}

pub fn render(status: u16, body: &str) -> String {
    format!("{status}\n{body}\n")
}

/// Mismatching case names. With `CALIPER_UPDATE_GOLDEN=1` the recorded files
/// are rewritten instead.
pub async fn check_golden(dir: &Path) -> (usize, Vec<String>) {
    let update = std::env::var("CALIPER_UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    let results = replay(dir).await;
    let mut failures = Vec::new();
    for (case, status, body) in &results {
        let path = expected_path(dir, &case.name);
        let actual = render(*status, body);
        if update {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &actual).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected == actual => {}
            _ => failures.push(case.name.clone()),
        }
    }
    (results.len(), failures)
}

#[derive(Deserialize)]
struct CsvModel {
    name: String,
    probs_csv: String,
    labels_csv: String,
}

#[derive(Deserialize)]
struct InlineModel {
    name: String,
    probs: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

/// The golden fixture session built directly with the core library.
pub fn direct_session(dir: &Path) -> (EvaluationSession, Vec<SubgroupPredicate>) {
    let d = dir.join("fixture");
    let features = std::fs::read(d.join("features.csv")).unwrap();
    let mut s = EvaluationSession::new("s1", ingest_features(features.as_slice(), &HashMap::new()).unwrap());
    let risk: CsvModel = serde_json::from_slice(&std::fs::read(d.join("risk_model.json")).unwrap()).unwrap();
    let preds = ingest_predictions(risk.probs_csv.as_bytes(), risk.labels_csv.as_bytes()).unwrap();
    s.add_model(ModelRecord::new(risk.name, preds).unwrap()).unwrap();
    let coin: InlineModel = serde_json::from_slice(&std::fs::read(d.join("coin_model.json")).unwrap()).unwrap();
    let preds = Predictions {
        classes: coin.probs[0].len(),
        probs: coin.probs.into_iter().flatten().collect(),
        labels: coin.labels,
    };
    s.add_model(ModelRecord::new(coin.name, preds).unwrap()).unwrap();
    let groups = load_cases(dir)
        .into_iter()
        .filter(|c| c.name.starts_with("create_subgroup"))
        .map(|c| serde_json::from_str(c.body.as_deref().unwrap()).unwrap())
        .collect();
    (s, groups)
}
