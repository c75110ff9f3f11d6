use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bitext_core::SentencePair;
use bitext_curation::http::router;
use bitext_curation::log::{read_log, LogEvent};
use bitext_curation::{CurationService, QueueItem, ServiceOptions, Verdict};
use chrono::{DateTime, Duration};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Fixture {
    _dir: TempDir,
    queue: PathBuf,
    log: PathBuf,
    clock: Arc<AtomicI64>,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = TempDir::new().unwrap();
        let queue = dir.path().join("queue.jsonl");
        let items: Vec<QueueItem> = (0..n)
            .map(|i| QueueItem {
                pair: SentencePair::new(
                    format!("q{i}"),
                    format!("source {i}"),
                    format!("लक्ष्य {i}"),
                ),
                score: (i % 3 != 2).then_some(0.70 + i as f64 / 1000.0),
            })
            .collect();
        bitext_curation::sample::write_queue(&queue, &items).unwrap();
        Fixture {
            log: dir.path().join("decisions.jsonl"),
            queue,
            _dir: dir,
            clock: Arc::new(AtomicI64::new(1_700_000_000)),
        }
    }

    fn service(&self) -> Arc<CurationService> {
        let clock = self.clock.clone();
        let opts = ServiceOptions {
            lease_window: Duration::minutes(10),
            clock: Arc::new(move || {
                DateTime::from_timestamp(clock.load(Ordering::SeqCst), 0).unwrap()
            }),
        };
        Arc::new(CurationService::open(&self.queue, &self.log, opts).unwrap())
    }

    fn app(&self) -> Router {
        router(self.service(), None)
    }

    fn advance(&self, secs: i64) {
        self.clock.fetch_add(secs, Ordering::SeqCst);
    }
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Reply {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

async fn next(app: &Router, reviewer: &str) -> Reply {
    call(
        app,
        "GET",
        &format!("/api/queue/next?reviewer={reviewer}"),
        None,
    )
    .await
}

async fn decide(
    app: &Router,
    pair_id: &str,
    verdict: &str,
    label: Option<&str>,
    reviewer: &str,
) -> Reply {
    let mut body = json!({ "pair_id": pair_id, "verdict": verdict, "reviewer": reviewer });
    if let Some(l) = label {
        body["label"] = json!(l);
    }
    call(app, "POST", "/api/decision", Some(body)).await
}

fn keys(v: &Value) -> BTreeSet<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

#[tokio::test]
async fn next_returns_the_documented_fields() {
    let fx = Fixture::new(3);
    let app = fx.app();
    let r = next(&app, "asha").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(
        keys(&v),
        BTreeSet::from(["pair_id", "src", "tgt", "score", "lease_expiry"])
    );
    assert_eq!(v["pair_id"], "q0");
    assert_eq!(v["src"], "source 0");
    assert_eq!(v["tgt"], "लक्ष्य 0");
    assert_eq!(v["score"], 0.7);
    assert_eq!(v["lease_expiry"], "2023-11-14T22:23:20Z");

    // q2 has no score, so the field is absent
    next(&app, "bo").await;
    let v = next(&app, "cy").await.json();
    assert_eq!(v["pair_id"], "q2");
    assert!(v.get("score").is_none());

    assert_eq!(next(&app, "dee").await.status, StatusCode::NO_CONTENT);
    assert_eq!(
        call(&app, "GET", "/api/queue/next", None).await.status,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn leases_are_exclusive_renewable_and_expire() {
    let fx = Fixture::new(2);
    let app = fx.app();
    let a = next(&app, "asha").await.json();
    let b = next(&app, "bo").await.json();
    assert_ne!(a["pair_id"], b["pair_id"]);
    fx.advance(300);
    // asking again renews the same pair
    let again = next(&app, "asha").await.json();
    assert_eq!(again["pair_id"], a["pair_id"]);
    assert_eq!(next(&app, "cy").await.status, StatusCode::NO_CONTENT);
    // bo's lease (taken at t=0) has lapsed; asha's renewal has not
    fx.advance(301);
    let c = next(&app, "cy").await.json();
    assert_eq!(c["pair_id"], b["pair_id"]);
    // bo's late decision now conflicts with cy's lease
    let late = decide(&app, b["pair_id"].as_str().unwrap(), "Accept", None, "bo").await;
    assert_eq!(late.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn decisions_and_their_errors() {
    let fx = Fixture::new(3);
    let app = fx.app();
    let id = next(&app, "asha").await.json()["pair_id"]
        .as_str()
        .unwrap()
        .to_string();
    let ok = decide(&app, &id, "Accept", None, "asha").await;
    assert_eq!(ok.status, StatusCode::OK);
    assert_eq!(ok.json(), json!({ "ok": true }));
    assert_eq!(
        decide(&app, &id, "Reject", None, "asha").await.status,
        StatusCode::CONFLICT
    );
    assert_eq!(
        decide(&app, "nope", "Accept", None, "asha").await.status,
        StatusCode::NOT_FOUND
    );
    // a pending pair can be decided without a lease
    let r = decide(&app, "q1", "Reject", Some("DifferentMeaning"), "bo").await;
    assert_eq!(r.status, StatusCode::OK);
    for bad in [
        json!({ "pair_id": "q2", "verdict": "Accept", "label": "Ambiguous", "reviewer": "bo" }),
        json!({ "pair_id": "q2", "verdict": "Reject", "label": "Accurate", "reviewer": "bo" }),
        json!({ "pair_id": "q2", "verdict": "Maybe", "reviewer": "bo" }),
        json!({ "pair_id": "q2", "verdict": "Flag", "reviewer": "" }),
        json!({ "pair_id": "q2", "verdict": "Flag", "reviewer": "bo", "extra": 1 }),
    ] {
        let r = call(&app, "POST", "/api/decision", Some(bad.clone())).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{bad}");
    }
    let log: Vec<LogEvent> = read_log(&fx.log).unwrap();
    let decisions: Vec<_> = log.iter().filter_map(LogEvent::as_decision).collect();
    assert_eq!(decisions.len(), 2);
    assert_eq!(
        decisions[1].label.map(|l| l.as_str()),
        Some("DifferentMeaning")
    );
}

#[tokio::test]
async fn stats_shape_and_values() {
    let fx = Fixture::new(4);
    let app = fx.app();
    let v = call(&app, "GET", "/api/stats", None).await.json();
    assert_eq!(
        keys(&v),
        BTreeSet::from(["pending", "leased", "decided", "per_label", "defect_rate"])
    );
    assert_eq!(v["pending"], 4);
    assert!(v["defect_rate"].is_null());
    assert_eq!(
        keys(&v["per_label"]),
        BTreeSet::from([
            "NuanceLoss",
            "DifferentMeaning",
            "Ambiguous",
            "MissingContext",
            "SimilarContextDistinctMeaning",
            "Accurate",
            "Unlabeled",
        ])
    );

    next(&app, "asha").await;
    decide(&app, "q1", "Accept", None, "bo").await;
    decide(&app, "q2", "Flag", None, "bo").await;
    let v = call(&app, "GET", "/api/stats", None).await.json();
    assert_eq!(
        (
            v["pending"].as_u64(),
            v["leased"].as_u64(),
            v["decided"].as_u64()
        ),
        (Some(1), Some(1), Some(2))
    );
    assert_eq!(v["per_label"]["Accurate"], 1);
    assert_eq!(v["per_label"]["Unlabeled"], 1);
    assert_eq!(v["defect_rate"], 0.5);
}

#[tokio::test]
async fn hundred_accepts_and_hundred_rejects() {
    let fx = Fixture::new(200);
    let app = fx.app();
    for i in 0..200 {
        let id = next(&app, "asha").await.json()["pair_id"]
            .as_str()
            .unwrap()
            .to_string();
        let r = if i % 2 == 0 {
            decide(&app, &id, "Accept", None, "asha").await
        } else {
            decide(&app, &id, "Reject", Some("NuanceLoss"), "asha").await
        };
        assert_eq!(r.status, StatusCode::OK);
    }
    let v = call(&app, "GET", "/api/stats", None).await.json();
    assert_eq!(v["defect_rate"], 0.5);
    assert_eq!(v["decided"], 200);
    assert_eq!(
        bitext_curation::record_assessment_stats(&fx.log)
            .unwrap()
            .defect_rate,
        0.5
    );
}

fn export_ids(body: &[u8]) -> Vec<String> {
    String::from_utf8(body.to_vec())
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect()
}

#[tokio::test]
async fn export_streams_accepted_pairs() {
    let fx = Fixture::new(6);
    let app = fx.app();
    assert_eq!(
        call(&app, "GET", "/api/export", None).await.status,
        StatusCode::NOT_FOUND
    );
    for (id, verdict) in [
        ("q4", "Accept"),
        ("q0", "Reject"),
        ("q1", "Accept"),
        ("q5", "Accept"),
        ("q3", "Flag"),
    ] {
        assert_eq!(
            decide(&app, id, verdict, None, "asha").await.status,
            StatusCode::OK
        );
    }
    let r = call(&app, "GET", "/api/export?limit=10", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type.as_deref(), Some("application/x-ndjson"));
    assert_eq!(export_ids(&r.body), ["q4", "q1", "q5"]);
    let r = call(&app, "GET", "/api/export?order=score", None).await;
    // q5 has no score, q4 = 0.704 beats q1 = 0.701
    assert_eq!(export_ids(&r.body), ["q4", "q1", "q5"]);
    let r = call(&app, "GET", "/api/export?order=decision&limit=2", None).await;
    assert_eq!(export_ids(&r.body), ["q4", "q1"]);
    assert_eq!(
        call(&app, "GET", "/api/export?order=random", None)
            .await
            .status,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        call(&app, "GET", "/api/export?limit=0", None).await.status,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn restart_replays_the_log() {
    let fx = Fixture::new(5);
    let before = {
        let app = fx.app();
        next(&app, "asha").await;
        decide(&app, "q0", "Accept", None, "asha").await;
        next(&app, "bo").await;
        decide(&app, "q3", "Reject", Some("Ambiguous"), "cy").await;
        call(&app, "GET", "/api/stats", None).await.json()
    };
    // simulate a crash in the middle of an append
    let mut bytes = std::fs::read(&fx.log).unwrap();
    bytes.extend_from_slice(b"{\"kind\":\"decision\",\"pair_id\":\"q2\",\"ver");
    std::fs::write(&fx.log, bytes).unwrap();

    let app = fx.app();
    assert_eq!(call(&app, "GET", "/api/stats", None).await.json(), before);
    // bo still holds q1; the next free pair is q2
    assert_eq!(next(&app, "bo").await.json()["pair_id"], "q1");
    assert_eq!(next(&app, "dee").await.json()["pair_id"], "q2");
    assert_eq!(
        decide(&app, "q0", "Reject", None, "asha").await.status,
        StatusCode::CONFLICT
    );
}

#[tokio::test]
async fn twenty_pair_session_exports_the_accepted_subset() {
    let fx = Fixture::new(20);
    let app = fx.app();
    let mut submitted = Vec::new();
    let mut accepted = Vec::new();
    loop {
        let r = next(&app, "asha").await;
        if r.status == StatusCode::NO_CONTENT {
            break;
        }
        let id = r.json()["pair_id"].as_str().unwrap().to_string();
        let n = submitted.len();
        let (verdict, label) = match n % 4 {
            0 | 3 => ("Accept", None),
            1 => ("Reject", Some("DifferentMeaning")),
            _ => ("Reject", Some("MissingContext")),
        };
        assert_eq!(
            decide(&app, &id, verdict, label, "asha").await.status,
            StatusCode::OK
        );
        if verdict == "Accept" {
            accepted.push(id.clone());
        }
        submitted.push(id);
    }
    let logged: Vec<String> = read_log(&fx.log)
        .unwrap()
        .iter()
        .filter_map(LogEvent::as_decision)
        .map(|d| d.pair_id.clone())
        .collect();
    assert_eq!(logged, submitted);
    assert_eq!(logged.len(), 20);
    let r = call(&app, "GET", "/api/export", None).await;
    assert_eq!(export_ids(&r.body), accepted);
}

#[tokio::test]
async fn root_serves_the_ui() {
    let fx = Fixture::new(1);
    let r = call(&fx.app(), "GET", "/", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.unwrap().starts_with("text/html"));

    let ui = TempDir::new().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>review</html>").unwrap();
    std::fs::write(ui.path().join("app.js"), "console.log(1)").unwrap();
    let app = router(fx.service(), Some(ui.path().to_path_buf()));
    let r = call(&app, "GET", "/", None).await;
    assert_eq!(r.body, b"<html>review</html>");
    assert_eq!(
        call(&app, "GET", "/app.js", None).await.status,
        StatusCode::OK
    );
    // API routes still win over the static fallback
    assert_eq!(
        call(&app, "GET", "/api/stats", None).await.status,
        StatusCode::OK
    );
}

#[test]
fn concurrent_reviewers_never_share_a_pair() {
    let fx = Fixture::new(64);
    let svc = fx.service();
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let svc = svc.clone();
            std::thread::spawn(move || {
                let reviewer = format!("r{t}");
                let mut got = Vec::new();
                while let Some(a) = svc.next_pending(&reviewer).unwrap() {
                    got.push(a.pair_id.clone());
                    svc.record_decision(bitext_curation::DecisionRequest {
                        pair_id: a.pair_id,
                        verdict: Verdict::Accept,
                        label: None,
                        reviewer: reviewer.clone(),
                        note: None,
                    })
                    .unwrap();
                }
                got
            })
        })
        .collect();
    let mut all: Vec<String> = handles
        .into_iter()
        .flat_map(|h| h.join().unwrap())
        .collect();
    assert_eq!(all.len(), 64);
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 64);
    assert_eq!(svc.stats().decided, 64);
}

#[test]
fn offline_export_matches_the_api() {
    let fx = Fixture::new(8);
    let svc = fx.service();
    for (i, v) in [
        Verdict::Accept,
        Verdict::Reject,
        Verdict::Accept,
        Verdict::Accept,
    ]
    .into_iter()
    .enumerate()
    {
        svc.record_decision(bitext_curation::DecisionRequest {
            pair_id: format!("q{}", 7 - i),
            verdict: v,
            label: None,
            reviewer: "asha".into(),
            note: Some("checked".into()),
        })
        .unwrap();
    }
    let out: &Path = &fx.queue.with_file_name("gold.jsonl");
    let n = bitext_curation::export_gold(
        &fx.queue,
        &fx.log,
        bitext_curation::ExportOrder::Score,
        None,
        out,
    )
    .unwrap();
    assert_eq!(n, 3);
    assert_eq!(
        std::fs::read(out).unwrap(),
        svc.export(bitext_curation::ExportOrder::Score, None)
            .unwrap()
    );
}
