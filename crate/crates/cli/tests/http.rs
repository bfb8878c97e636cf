use std::sync::Arc;

use cryptoblocks::corpus;
use cryptoblocks_cli::{router, AppState, SessionStore};
use serde_json::{json, Value};

async fn spawn(store: SessionStore) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(AppState {
        sessions: Arc::new(store),
    });
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn doc(file: &str) -> Value {
    serde_json::from_str(corpus::get(file).unwrap()).unwrap()
}

#[tokio::test]
async fn task_endpoints() {
    let base = spawn(SessionStore::in_memory()).await;
    let c = reqwest::Client::new();
    let tasks: Value = c.get(format!("{base}/tasks")).send().await.unwrap().json().await.unwrap();
    assert_eq!(tasks.as_array().unwrap().len(), 8);

    let help: Value = c
        .get(format!("{base}/tasks/task8_pgp/help"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(help["help"].as_str().unwrap().contains("K{M}|{K}_B"));

    let starter = c.get(format!("{base}/tasks/task8_pgp/starter")).send().await.unwrap();
    assert_eq!(starter.status(), 200);
    let starter: Value = starter.json().await.unwrap();
    assert_eq!(starter["task"]["id"], "task8_pgp");

    let missing = c.get(format!("{base}/tasks/nope/help")).send().await.unwrap();
    assert_eq!(missing.status(), 404);

    let blocks: Value = c.get(format!("{base}/blocks")).send().await.unwrap().json().await.unwrap();
    assert!(blocks.as_array().unwrap().iter().any(|b| b["opcode"] == "rsa_encrypt"));
}

#[tokio::test]
async fn execute_status_codes() {
    let base = spawn(SessionStore::in_memory()).await;
    let c = reqwest::Client::new();
    let post = |body: String| {
        c.post(format!("{base}/execute"))
            .header("content-type", "application/json")
            .body(body)
            .send()
    };

    let ok = post(json!({ "program": doc("task1_reference.json"), "seed": 1 }).to_string())
        .await
        .unwrap();
    assert_eq!(ok.status(), 200);
    let body: Value = ok.json().await.unwrap();
    assert_eq!(body["feedback"]["verdict"], "SUCCESS");
    assert!(body["session_id"].is_string());

    assert_eq!(post("{not json".into()).await.unwrap().status(), 400);
    assert_eq!(post(json!({ "program": { "version": 1 } }).to_string()).await.unwrap().status(), 400);

    let mut unknown = doc("task1_reference.json");
    unknown["task"]["id"] = json!("nope");
    assert_eq!(post(json!({ "program": unknown }).to_string()).await.unwrap().status(), 404);

    let mut invalid = doc("task1_reference.json");
    invalid["body"][0]["value"]["args"][1]["name"] = json!("Missing");
    let resp = post(json!({ "program": invalid }).to_string()).await.unwrap();
    assert_eq!(resp.status(), 422);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["diagnostics"][0]["code"], "UNBOUND_VARIABLE");

    // Learner runtime failures are still a 200.
    let mut broken = doc("task2_reference.json");
    broken["body"][0]["value"]["args"][1]["name"] = json!("EncryptedMessage");
    let resp = post(json!({ "program": broken, "seed": 0 }).to_string()).await.unwrap();
    assert_eq!(resp.status(), 200);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["feedback"]["verdict"], "RUNTIME_ERROR");
}

#[tokio::test]
async fn validate_endpoint() {
    let base = spawn(SessionStore::in_memory()).await;
    let c = reqwest::Client::new();
    let resp = c
        .post(format!("{base}/validate"))
        .json(&json!({ "program": doc("task7_reference.json") }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["diagnostics"], json!([]));

    let mut bad = doc("task7_reference.json");
    bad["body"][0]["value"]["args"][0]["name"] = json!("Nothing");
    let resp = c
        .post(format!("{base}/validate"))
        .json(&json!({ "program": bad }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 422);
}

#[tokio::test]
async fn sessions_persist_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.jsonl");
    let base = spawn(SessionStore::open(&path).unwrap()).await;
    let c = reqwest::Client::new();
    let body: Value = c
        .post(format!("{base}/execute"))
        .json(&json!({ "program": doc("task8_wrongkey.json"), "seed": 4 }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = body["session_id"].as_str().unwrap().to_owned();

    let record: Value = c
        .get(format!("{base}/sessions/{id}"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(record["feedback"], body["feedback"]);
    assert_eq!(record["program"], doc("task8_wrongkey.json"));
    assert_eq!(record["task_id"], "task8_pgp");

    let list: Value = c.get(format!("{base}/sessions")).send().await.unwrap().json().await.unwrap();
    assert_eq!(list[0]["verdict"], "INCORRECT_RESULT");
    assert_eq!(c.get(format!("{base}/sessions/nope")).send().await.unwrap().status(), 404);

    let reloaded = SessionStore::open(&path).unwrap();
    let stored = serde_json::to_value(reloaded.get(&id).unwrap()).unwrap();
    assert_eq!(stored, record);
}

#[tokio::test]
async fn help_mode_returns_help() {
    let base = spawn(SessionStore::in_memory()).await;
    let mut program = doc("task7_reference.json");
    program["task"]["mode"] = json!("HELP");
    let body: Value = reqwest::Client::new()
        .post(format!("{base}/execute"))
        .json(&json!({ "program": program }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(body["help"].as_str().unwrap().contains("M|[H(M)]_A"));
}
