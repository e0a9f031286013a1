use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use cwb_core::ach::{inconsistency_score, rank_hypotheses, AchMatrix, ConsistencyRating, Level};
use cwb_core::classify::Prediction;
use cwb_core::corpus::{LabeledSample, SampleSource, Split};
use cwb_service::{router, AppState, ScoresResponse, Store, StoredRun};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn state() -> (tempfile::TempDir, AppState) {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    (dir, Arc::new(store))
}

async fn call(state: &AppState, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn sample(i: usize, label: u8) -> LabeledSample {
    LabeledSample {
        id: format!("s{i}"),
        text: format!("sentence number {i}"),
        label,
        substitutions: Vec::new(),
        source: SampleSource::EnronSynth,
        split: Split::Test,
    }
}

/// Ten samples with scores 0.05, 0.15, ..., some repeated to exercise ties.
fn fixture_run(store: &Store) -> StoredRun {
    let samples: Vec<LabeledSample> = (0..10).map(|i| sample(i, u8::from(i % 3 == 0))).collect();
    let scores = [0.05, 0.95, 0.15, 0.5, 0.95, 0.7, 0.3, 0.7, 0.01, 0.6];
    let preds: Vec<Prediction> = samples.iter().zip(scores).map(|(s, p)| Prediction::new(s.id.clone(), p)).collect();
    let run = StoredRun::new("run1", "tfidf", "desk/test.jsonl", 0, &samples, &preds).unwrap();
    store.put_run(&run).unwrap();
    run
}

#[tokio::test]
async fn health() {
    let (_d, st) = state();
    let (s, v) = call(&st, Method::GET, "/api/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"status": "ok"}));
}

#[tokio::test]
async fn matrix_lifecycle_and_revisions() {
    let (_d, st) = state();
    let (s, m) = call(&st, Method::POST, "/api/matrices", Some(json!({"id": "case", "title": "Case"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(m["revision"], 0);
    let (s, _) = call(&st, Method::POST, "/api/matrices", Some(json!({"id": "case"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (s, m) =
        call(&st, Method::POST, "/api/matrices/case/hypotheses", Some(json!({"statement": "A is acting alone"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(m["revision"], 1);
    assert_eq!(m["hypotheses"]["H1"]["statement"], "A is acting alone");
    let (_, m) =
        call(&st, Method::POST, "/api/matrices/case/hypotheses", Some(json!({"statement": "A and B are colluding"})))
            .await;
    assert_eq!(m["revision"], 2);
    let (_, m) = call(
        &st,
        Method::POST,
        "/api/matrices/case/evidence",
        Some(json!({"description": "Invoices above limit", "credibility": "high", "relevance": "medium", "question_tags": ["how"]})),
    )
    .await;
    assert_eq!(m["revision"], 3);
    assert_eq!(m["evidence"]["E1"]["question_tags"], json!(["how"]));

    let rate = |rev: u64, r: &str| json!({"evidence_id": "E1", "hypothesis_id": "H1", "rating": r, "revision": rev});
    let (s, m) = call(&st, Method::PUT, "/api/matrices/case/ratings", Some(rate(3, "I"))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["revision"], 4);
    // Stale revision.
    let (s, e) = call(&st, Method::PUT, "/api/matrices/case/ratings", Some(rate(3, "II"))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["error"]["code"], "stale_revision");
    let (_, m) = call(&st, Method::GET, "/api/matrices/case", None).await;
    assert_eq!(m["ratings"]["E1"]["H1"], "I");
    assert_eq!(m["revision"], 4);

    let (s, list) = call(&st, Method::GET, "/api/matrices", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(list[0]["id"], "case");
    assert_eq!(list[0]["evidence"], 1);
}

#[tokio::test]
async fn error_statuses() {
    let (_d, st) = state();
    call(&st, Method::POST, "/api/matrices", Some(json!({"id": "m"}))).await;
    let cases: Vec<(Method, &str, Option<Value>, StatusCode)> = vec![
        (Method::GET, "/api/matrices/nope", None, StatusCode::NOT_FOUND),
        (Method::GET, "/api/matrices/..%2Fetc", None, StatusCode::BAD_REQUEST),
        (Method::POST, "/api/matrices/m/hypotheses", Some(json!({"statement": ""})), StatusCode::BAD_REQUEST),
        (Method::POST, "/api/matrices/m/hypotheses", Some(json!({"nope": 1})), StatusCode::BAD_REQUEST),
        (
            Method::PUT,
            "/api/matrices/m/ratings",
            Some(json!({"evidence_id": "E1", "hypothesis_id": "H1", "rating": "I", "revision": 0})),
            StatusCode::NOT_FOUND,
        ),
        (
            Method::PUT,
            "/api/matrices/m/ratings",
            Some(json!({"evidence_id": "E1", "hypothesis_id": "H1", "rating": "Z", "revision": 0})),
            StatusCode::BAD_REQUEST,
        ),
        (Method::GET, "/api/matrices/m/sensitivity", None, StatusCode::BAD_REQUEST),
        (Method::GET, "/api/matrices/m/sensitivity?hypothesis=H7", None, StatusCode::NOT_FOUND),
        (Method::GET, "/api/runs/none/report", None, StatusCode::NOT_FOUND),
        (Method::GET, "/api/runs/none/detections", None, StatusCode::NOT_FOUND),
        (Method::GET, "/api/elsewhere", None, StatusCode::NOT_FOUND),
    ];
    for (method, uri, body, want) in cases {
        let (s, v) = call(&st, method.clone(), uri, body).await;
        assert_eq!(s, want, "{method} {uri}: {v}");
        assert!(v["error"]["code"].is_string(), "{uri}: {v}");
    }
    // Invalid body on a bad request does not bump the revision.
    let (_, m) = call(&st, Method::GET, "/api/matrices/m", None).await;
    assert_eq!(m["revision"], 0);
}

#[tokio::test]
async fn gets_are_repeatable() {
    let (_d, st) = state();
    call(&st, Method::POST, "/api/matrices", Some(json!({"id": "m"}))).await;
    call(&st, Method::POST, "/api/matrices/m/hypotheses", Some(json!({"statement": "x"}))).await;
    for uri in
        ["/api/matrices/m", "/api/matrices/m/scores", "/api/matrices", "/api/matrices/m/sensitivity?hypothesis=H1"]
    {
        let a = call(&st, Method::GET, uri, None).await;
        let b = call(&st, Method::GET, uri, None).await;
        assert_eq!(a, b, "{uri}");
    }
}

#[tokio::test]
async fn detections_paging_and_order() {
    let (_d, st) = state();
    let run = fixture_run(&st);
    let (s, page) = call(&st, Method::GET, "/api/runs/run1/detections?min_score=0.0&page_size=1000", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(page["total"], 10);
    // Sort oracle: stable sort by descending score.
    let mut expected: Vec<(usize, f64)> = run.predictions.iter().map(|p| p.score).enumerate().collect();
    expected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let got: Vec<String> =
        page["items"].as_array().unwrap().iter().map(|i| i["sample_id"].as_str().unwrap().to_string()).collect();
    assert_eq!(got, expected.iter().map(|(i, _)| format!("s{i}")).collect::<Vec<_>>());

    let (_, empty) = call(&st, Method::GET, "/api/runs/run1/detections?min_score=1.01", None).await;
    assert_eq!(empty["total"], 0);
    assert_eq!(empty["items"], json!([]));

    let mut paged = Vec::new();
    for p in 1..=4 {
        let (_, v) =
            call(&st, Method::GET, &format!("/api/runs/run1/detections?min_score=0.5&page={p}&page_size=2"), None)
                .await;
        assert_eq!(v["total"], 6);
        paged.extend(v["items"].as_array().unwrap().iter().map(|i| i["sample_id"].as_str().unwrap().to_string()));
    }
    let (_, all) = call(&st, Method::GET, "/api/runs/run1/detections?min_score=0.5", None).await;
    let all: Vec<String> =
        all["items"].as_array().unwrap().iter().map(|i| i["sample_id"].as_str().unwrap().to_string()).collect();
    assert_eq!(paged, all);
    let (s, _) = call(&st, Method::GET, "/api/runs/run1/detections?page=0", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (_, runs) = call(&st, Method::GET, "/api/runs", None).await;
    assert_eq!(runs[0]["id"], "run1");
    let (_, rep) = call(&st, Method::GET, "/api/runs/run1/report", None).await;
    assert_eq!(rep["report"]["n"], 10);
    assert!(rep["table"].as_str().unwrap().contains("tfidf"));
}

#[tokio::test]
async fn promote_rate_scores_end_to_end() {
    let (_d, st) = state();
    fixture_run(&st);
    call(&st, Method::POST, "/api/matrices", Some(json!({"id": "case"}))).await;
    call(
        &st,
        Method::POST,
        "/api/matrices/case/hypotheses",
        Some(json!({"id": "H1", "statement": "A is acting alone"})),
    )
    .await;
    call(
        &st,
        Method::POST,
        "/api/matrices/case/hypotheses",
        Some(json!({"id": "H2", "statement": "A and B are colluding"})),
    )
    .await;

    let body = json!({"matrix_id": "case", "participants": ["A", "B", "C"]});
    let (s, v) = call(&st, Method::POST, "/api/runs/run1/detections/s1/promote", Some(body.clone())).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["revision"], 3);
    let eid = v["evidence"]["id"].as_str().unwrap().to_string();
    assert_eq!(v["evidence"]["description"], "Use of code words between A, B and C");
    assert_eq!(v["evidence"]["credibility"], "high");
    assert_eq!(v["evidence"]["relevance"], "medium");
    assert_eq!(v["evidence"]["source"], "detection");

    let (s, v) = call(&st, Method::POST, "/api/runs/run1/detections/s1/promote", Some(body)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "duplicate_promotion");
    for (uri, m) in [
        ("/api/runs/run1/detections/s99/promote", "case"),
        ("/api/runs/zz/detections/s1/promote", "case"),
        ("/api/runs/run1/detections/s2/promote", "nope"),
    ] {
        let (s, _) = call(&st, Method::POST, uri, Some(json!({"matrix_id": m}))).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
    }

    // Unrated: contributes nothing.
    let (_, sens) = call(&st, Method::GET, "/api/matrices/case/sensitivity?hypothesis=H1", None).await;
    assert_eq!(sens["items"][0]["evidence_id"], eid.as_str());
    assert_eq!(sens["items"][0]["contribution"], 0.0);

    for (h, r, rev) in [("H1", "I", 3), ("H2", "CC", 4)] {
        let (s, _) = call(
            &st,
            Method::PUT,
            "/api/matrices/case/ratings",
            Some(json!({"evidence_id": eid, "hypothesis_id": h, "rating": r, "revision": rev})),
        )
        .await;
        assert_eq!(s, StatusCode::OK);
    }
    let (_, scores) = call(&st, Method::GET, "/api/matrices/case/scores", None).await;
    let scores: ScoresResponse = serde_json::from_value(scores).unwrap();

    // Oracle: the same matrix built directly with the engine.
    let (_, m) = call(&st, Method::GET, "/api/matrices/case", None).await;
    let m: AchMatrix = serde_json::from_value(m).unwrap();
    assert_eq!(m.rating(&eid, "H1"), ConsistencyRating::I);
    assert_eq!((m.evidence[&eid].credibility, m.evidence[&eid].relevance), (Level::High, Level::Medium));
    assert_eq!(scores.ranking, rank_hypotheses(&m).unwrap());
    assert_eq!(scores.raw["H1"], inconsistency_score(&m, "H1").unwrap());
    assert_eq!(scores.raw["H1"], -1.5);
    assert_eq!(scores.raw["H2"], 0.0);
    assert_eq!(scores.ranking[0].id, "H2");
    assert_eq!(scores.normalized["H1"], 0.0);
    assert_eq!(scores.revision, 5);

    // Deleting the item restores zero scores.
    let (s, m) = call(&st, Method::DELETE, &format!("/api/matrices/case/evidence/{eid}?revision=5"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["revision"], 6);
    let (_, scores) = call(&st, Method::GET, "/api/matrices/case/scores", None).await;
    assert_eq!(scores["raw"]["H1"], 0.0);
}

#[tokio::test]
async fn concurrent_writers_each_bump_once() {
    let (_d, st) = state();
    call(&st, Method::POST, "/api/matrices", Some(json!({"id": "m"}))).await;
    let tasks: Vec<_> = (0..16)
        .map(|i| {
            let st = st.clone();
            tokio::spawn(async move {
                call(
                    &st,
                    Method::POST,
                    "/api/matrices/m/hypotheses",
                    Some(json!({"id": format!("h{i}"), "statement": "s"})),
                )
                .await
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap().0, StatusCode::CREATED);
    }
    let (_, m) = call(&st, Method::GET, "/api/matrices/m", None).await;
    assert_eq!(m["revision"], 16);
    assert_eq!(m["hypotheses"].as_object().unwrap().len(), 16);
}

#[tokio::test]
async fn score_table_update_and_validation() {
    let (_d, st) = state();
    call(&st, Method::POST, "/api/matrices", Some(json!({"id": "m"}))).await;
    let (_, m) = call(&st, Method::GET, "/api/matrices/m", None).await;
    let mut table = m["score_table"].clone();
    table["weights"]["high"] = json!(3.0);
    let (s, m) =
        call(&st, Method::PUT, "/api/matrices/m/score_table", Some(json!({"score_table": table, "revision": 0}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["score_table"]["weights"]["high"], 3.0);
    table["weights"]["low"] = json!(-1.0);
    let (s, _) =
        call(&st, Method::PUT, "/api/matrices/m/score_table", Some(json!({"score_table": table, "revision": 1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[test]
fn interrupted_write_leaves_previous_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(store.create_matrix(Some("m".into()), "t".into())).unwrap();
    let before = store.matrix("m").unwrap();
    // A crash after writing the temp file but before the rename leaves a
    // partial sibling behind.
    std::fs::write(dir.path().join("matrices").join(".m.json.999.0.tmp"), b"{\"id\": \"m\", \"hyp").unwrap();
    assert_eq!(store.matrix("m").unwrap(), before);
    assert_eq!(store.matrices().unwrap().len(), 1);
}

#[test]
fn runs_are_immutable() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let run = fixture_run(&store);
    assert_eq!(store.put_run(&run).unwrap_err().status, StatusCode::CONFLICT);
    assert_eq!(store.run("run1").unwrap(), run);
}

#[test]
fn run_rejects_misaligned_predictions() {
    let samples = vec![sample(0, 1), sample(1, 0)];
    let preds = vec![Prediction::new("s0", 0.9)];
    assert!(StoredRun::new("r", "m", "d", 0, &samples, &preds).is_err());
}
