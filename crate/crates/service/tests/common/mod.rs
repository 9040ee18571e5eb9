#![allow(dead_code)]

use std::collections::BTreeMap;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use fstlab::config::TokenGrant;
use fstlab::{router, AppState, ServiceConfig};
use fstlab_core::{ProtocolConfig, Role};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const ADMIN: &str = "tok-admin";
pub const EXPERT: &str = "tok-dr1";

pub fn annotator_token(i: usize) -> String {
    format!("tok-a{i}")
}

pub fn config(dir: &std::path::Path, protocol: ProtocolConfig) -> ServiceConfig {
    let mut tokens = BTreeMap::new();
    tokens.insert(
        ADMIN.to_string(),
        TokenGrant {
            principal_id: "admin".into(),
            role: Role::Admin,
        },
    );
    tokens.insert(
        EXPERT.to_string(),
        TokenGrant {
            principal_id: "dr1".into(),
            role: Role::Expert,
        },
    );
    for i in 0..30 {
        tokens.insert(
            annotator_token(i),
            TokenGrant {
                principal_id: format!("a{i}"),
                role: Role::Annotator,
            },
        );
    }
    ServiceConfig {
        data_dir: dir.join("data"),
        image_root: Some(dir.to_owned()),
        gold_probe_rate: 0.0,
        fsync: false,
        protocol,
        tokens,
        ..ServiceConfig::default()
    }
}

pub fn app(cfg: &ServiceConfig) -> Router {
    router(AppState::open(cfg.clone()).unwrap())
}

pub async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call_raw(app, method, uri, token, body).await;
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

pub async fn call_raw(
    app: &Router,
    method: &str,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

/// Keys that would leak crowd label distributions.
pub const TALLY_KEYS: [&str; 9] = [
    "tally",
    "counts",
    "total_qualified",
    "total_all",
    "agreement",
    "difficulty",
    "settled_label",
    "crowd_label",
    "annotations",
];

pub fn tally_keys(v: &Value) -> Vec<String> {
    let mut found = Vec::new();
    match v {
        Value::Object(m) => {
            for (k, inner) in m {
                if TALLY_KEYS.contains(&k.as_str()) {
                    found.push(k.clone());
                }
                found.extend(tally_keys(inner));
            }
        }
        Value::Array(a) => a.iter().for_each(|x| found.extend(tally_keys(x))),
        _ => {}
    }
    found
}
