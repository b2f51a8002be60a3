use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use patternforge::composition::DEFAULT_ITERATION_CAP;
use patternforge::{evaluate, load_catalog, load_network, plan, verify, Catalog, Limits, Network, Ranking};
use patternforge_service::router;
use serde_json::{json, Value};
use tower::ServiceExt;

const FIG2: &str = "seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)";

fn read(rel: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    std::fs::read_to_string(path).unwrap()
}

fn load(dir: &str) -> (Catalog, Network) {
    let c = load_catalog(&read(&format!("{dir}/catalog.json"))).unwrap();
    let n = load_network(&read(&format!("{dir}/network.json")), &c).unwrap();
    (c, n)
}

fn app(dir: &str) -> Router {
    let (c, n) = load(dir);
    router(c, n)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", uri, Some(body.to_string())).await
}

fn fig2_state() -> Value {
    json!({"effort": 0, "requirements_document": "incomplete"})
}

#[tokio::test]
async fn verify_figure_two() {
    let app = app("fig2");
    let (status, body) = post(
        &app,
        "/api/verify",
        json!({"state": fig2_state(), "combination": FIG2,
               "goal": "effort < 700 & requirements_document = 'verified'"}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["verified"], true);
    assert_eq!(body["final_state"]["effort"], 654.0);
    assert_eq!(body["breakdown"]["node"], "and");
}

#[tokio::test]
async fn verify_matches_the_library() {
    let (c, n) = load("fig2");
    let app = router(c.clone(), n);
    let goal = "effort < 600 & requirements_document = 'verified'";
    let (_, body) = post(&app, "/api/verify", json!({"state": fig2_state(), "combination": FIG2, "goal": goal})).await;
    let state = c.validate_state(serde_json::from_value::<std::collections::BTreeMap<String, patternforge::Value>>(fig2_state()).unwrap()).unwrap();
    let direct = verify(
        &c.parse_combination(FIG2).unwrap(),
        &state,
        &c.parse_goal(goal).unwrap(),
        &c,
        DEFAULT_ITERATION_CAP,
    )
    .unwrap();
    assert_eq!(body, serde_json::to_value(&direct).unwrap());
    assert_eq!(body["verified"], false);
}

#[tokio::test]
async fn evaluate_accepts_trees_and_matches_the_library() {
    let (c, n) = load("fig2");
    let app = router(c.clone(), n);
    let tree = serde_json::to_value(c.parse_combination(FIG2).unwrap()).unwrap();
    let (status, from_tree) = post(&app, "/api/evaluate", json!({"state": fig2_state(), "combination": tree})).await;
    assert_eq!(status, StatusCode::OK);
    let (_, from_text) = post(&app, "/api/evaluate", json!({"state": fig2_state(), "combination": FIG2})).await;
    assert_eq!(from_tree, from_text);
    let state = c
        .validate_state([
            ("effort".to_string(), 0.0.into()),
            ("requirements_document".to_string(), "incomplete".into()),
        ])
        .unwrap();
    let direct = evaluate(&c.parse_combination(FIG2).unwrap(), &state, &c, DEFAULT_ITERATION_CAP).unwrap();
    assert_eq!(from_text, serde_json::to_value(&direct).unwrap());
    assert_eq!(from_text["trace"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn goals_accept_trees() {
    let (c, n) = load("fig2");
    let app = router(c.clone(), n);
    let goal = serde_json::to_value(c.parse_goal("effort = 654").unwrap()).unwrap();
    let (status, body) = post(&app, "/api/verify", json!({"state": fig2_state(), "combination": FIG2, "goal": goal})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["verified"], true);
}

#[tokio::test]
async fn unknown_pattern_is_a_client_error() {
    let app = app("fig2");
    let (status, body) = post(&app, "/api/evaluate", json!({"state": fig2_state(), "combination": "seq(ghost, verify_requirements)"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "UNKNOWN_PATTERN");
}

#[tokio::test]
async fn parse_errors_carry_a_location() {
    let app = app("fig2");
    let (status, body) = post(&app, "/api/verify", json!({"state": fig2_state(), "combination": FIG2, "goal": "effort <"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "PARSE_ERROR");
    assert_eq!(body["location"]["column"], 9);
}

#[tokio::test]
async fn semantic_failures_are_unprocessable() {
    let app = app("fig2");
    let (status, body) = post(&app, "/api/evaluate", json!({"state": fig2_state(), "combination": "par(elicit_functional, verify_requirements)"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "PARALLEL_CONFLICT");

    let app = self::app("case_study");
    let (status, body) = post(
        &app,
        "/api/evaluate",
        json!({"state": {"effort": 0}, "combination": "while(effort < 1000, add_ten)", "iteration_cap": 5}),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "ITERATION_LIMIT");
}

#[tokio::test]
async fn malformed_requests() {
    let app = app("fig2");
    let (status, body) = call(&app, "POST", "/api/verify", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "INVALID_REQUEST");
    let (status, body) = post(&app, "/api/check", json!({"combination": FIG2, "extra": 1})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "INVALID_REQUEST");
    let (status, body) = post(&app, "/api/evaluate", json!({"state": {"effort": "lots"}, "combination": FIG2})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "TYPE_MISMATCH");
    let (status, body) = call(&app, "GET", "/api/nothing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "NOT_FOUND");
}

#[tokio::test]
async fn plan_figure_two() {
    let (c, n) = load("fig2");
    let app = router(c.clone(), n.clone());
    let goal = "effort < 700 & requirements_document = 'verified'";
    let (status, body) = post(&app, "/api/plan", json!({"state": fig2_state(), "goal": goal, "ranking": "min effort"})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["candidates"][0]["final_state"]["effort"], 654.0);
    assert_eq!(body["candidates"][0]["combination_text"], FIG2);

    let state = c
        .validate_state([
            ("effort".to_string(), 0.0.into()),
            ("requirements_document".to_string(), "incomplete".into()),
        ])
        .unwrap();
    let direct = plan(&c, &n, &state, &c.parse_goal(goal).unwrap(), &Limits::default(), &Ranking::minimize("effort")).unwrap();
    assert_eq!(body, json!({ "candidates": direct }));

    let (_, body) = post(&app, "/api/plan", json!({"state": fig2_state(), "goal": "effort < 100 & requirements_document = 'verified'"})).await;
    assert_eq!(body["candidates"], json!([]));
}

#[tokio::test]
async fn plan_options() {
    let app = app("cluster_a");
    let state: Value = serde_json::from_str::<Value>(&read("cluster_a/project.json")).unwrap()["state"].clone();
    let (status, body) = post(
        &app,
        "/api/plan",
        json!({"state": state, "goal": "design_document = 'verified'",
               "limits": {"max_results": 3},
               "ranking": [{"attribute": "defect_density", "direction": "minimize"}]}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let cands = body["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 3);
    let scores: Vec<f64> = cands.iter().map(|c| c["score"][0].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));

    let (status, body) = post(&app, "/api/plan", json!({"state": state, "goal": "true", "ranking": "min tool"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "TYPE_MISMATCH");
    let (status, _) = post(&app, "/api/plan", json!({"state": state, "goal": "true", "limits": {"max_atoms": 0}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn check_reports_violations() {
    let app = app("case_study");
    let (status, body) = post(&app, "/api/check", json!({"combination": "seq(kickoff_meeting, risk_analysis)"})).await;
    assert_eq!(status, StatusCode::OK);
    let v = &body["violations"][0];
    assert_eq!(v["kind"], "compatibility");
    assert_eq!(v["location"]["pair"], json!(["kickoff_meeting", "risk_analysis"]));
    assert!(v["message"].as_str().unwrap().contains("left.tool = right.tool"));

    let (_, body) = post(&app, "/api/check", json!({"combination": "seq(elicit_functional, kickoff_meeting)"})).await;
    assert_eq!(body["violations"], json!([]));
}

#[tokio::test]
async fn successors() {
    let app = app("cluster_a");
    let (status, body) = post(&app, "/api/successors", json!({"prefix_atoms": []})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["pattern_ids"], json!(["rap_architecture_formal", "rap_architecture_lightweight"]));
    let (_, body) = post(
        &app,
        "/api/successors",
        json!({"prefix_atoms": ["rap_architecture_formal"], "artifacts": ["rap_architecture_model"]}),
    )
    .await;
    assert_eq!(body["pattern_ids"], json!(["rap_design_inspection", "rap_design_review"]));
    let (status, body) = post(&app, "/api/successors", json!({"prefix_atoms": ["ghost"]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "UNKNOWN_PATTERN");
}

#[tokio::test]
async fn catalog_and_network_snapshots() {
    let app = app("fig2");
    let (status, catalog) = call(&app, "GET", "/api/catalog", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(catalog["patterns"].as_array().unwrap().len(), 3);
    let ef = &catalog["patterns"][0];
    assert_eq!(ef["id"], "elicit_functional");
    assert_eq!(ef["goal"], "requirements_document = 'complete'");
    assert_eq!(ef["transformations"][0], "effort := effort + 250");
    assert_eq!(ef["consumes"], json!(["problem_statement"]));
    assert_eq!(catalog["schema"][0]["merge"], "additive");

    let (_, network) = call(&app, "GET", "/api/network", None).await;
    assert_eq!(network["initial_artifacts"], json!(["problem_statement"]));
    assert_eq!(network["adjacency"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn repeated_requests_give_identical_bodies() {
    let app = app("cluster_b");
    let state: Value = serde_json::from_str::<Value>(&read("cluster_b/project.json")).unwrap()["state"].clone();
    let req = json!({"state": state, "goal": "design_document = 'verified'", "ranking": "min effort, max reliability"});
    let (_, first) = post(&app, "/api/plan", req.clone()).await;
    for _ in 0..3 {
        let (_, again) = post(&app, "/api/plan", req.clone()).await;
        assert_eq!(first, again);
    }
}

#[tokio::test]
async fn cross_origin_requests_are_allowed() {
    let app = app("fig2");
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/verify")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}

#[test]
fn bind_address_defaults_to_loopback() {
    std::env::remove_var(patternforge_service::BIND_ENV);
    let addr = patternforge_service::bind_address(8080).unwrap();
    assert_eq!(addr.to_string(), "127.0.0.1:8080");
}
