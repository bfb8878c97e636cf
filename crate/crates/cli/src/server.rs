use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cryptoblocks::blocks::palette;
use cryptoblocks::format::program_to_json;
use cryptoblocks::tasks::{Submission, TaskRegistry};
use serde_json::{json, Value as Json_};

use crate::engine::{self, EngineError};
use crate::sessions::{SessionRecord, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub sessions: Arc<SessionStore>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}/help", get(task_help))
        .route("/tasks/{id}/starter", get(task_starter))
        .route("/blocks", get(blocks))
        .route("/execute", post(execute))
        .route("/validate", post(validate))
        .route("/sessions", get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .with_state(state)
}

struct ApiError(StatusCode, Json_);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::Format(_) => StatusCode::BAD_REQUEST,
            EngineError::Invalid(_) | EngineError::NoTaskBinding => StatusCode::UNPROCESSABLE_ENTITY,
            EngineError::UnknownTask(_) => StatusCode::NOT_FOUND,
        };
        ApiError(status, e.to_json())
    }
}

fn not_found(what: &str, id: &str) -> ApiError {
    ApiError(
        StatusCode::NOT_FOUND,
        json!({ "error": "NotFound", "message": format!("no {what} {id:?}") }),
    )
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(
        StatusCode::BAD_REQUEST,
        json!({ "error": "ParseError", "message": message.into() }),
    )
}

async fn list_tasks() -> Json<Json_> {
    let tasks: Vec<_> = TaskRegistry::builtin()
        .tasks()
        .iter()
        .map(|t| json!({ "id": t.id, "title": t.title }))
        .collect();
    Json(json!(tasks))
}

async fn task_help(Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let task = TaskRegistry::builtin().get(&id).map_err(|_| not_found("task", &id))?;
    Ok(Json(json!({ "id": task.id, "help": task.help })))
}

async fn task_starter(Path(id): Path<String>) -> Result<Json<Json_>, ApiError> {
    let task = TaskRegistry::builtin().get(&id).map_err(|_| not_found("task", &id))?;
    Ok(Json(program_to_json(&task.starter)))
}

async fn blocks() -> Json<Json_> {
    Json(serde_json::to_value(palette()).expect("palette serializes"))
}

/// `{program, seed?}`; the program may be an embedded document or a string.
fn request_parts(body: &[u8]) -> Result<(Json_, Option<u64>), ApiError> {
    let req: Json_ =
        serde_json::from_slice(body).map_err(|e| bad_request(format!("request body: {e}")))?;
    let Json_::Object(mut fields) = req else {
        return Err(bad_request("request body must be an object"));
    };
    let program = match fields.remove("program") {
        Some(Json_::String(text)) => serde_json::from_str(&text)
            .map_err(|e| bad_request(format!("program document: {e}")))?,
        Some(doc) => doc,
        None => return Err(bad_request("missing \"program\"")),
    };
    let seed = match fields.remove("seed") {
        None | Some(Json_::Null) => None,
        Some(s) => Some(s.as_u64().ok_or_else(|| bad_request("seed must be a non-negative integer"))?),
    };
    Ok((program, seed))
}

async fn execute(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let (doc, seed) = request_parts(&body)?;
    let program = engine::parse_json_document(&doc)?;
    let seed = seed.unwrap_or_else(engine::fresh_seed);
    let graded = tokio::task::spawn_blocking({
        let program = program.clone();
        move || engine::grade(&program, seed)
    })
    .await
    .map_err(|e| {
        ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({ "error": "Internal", "message": e.to_string() }),
        )
    })??;

    let graded = match graded {
        Submission::Help(help) => {
            let id = &program.task().expect("help needs a task").task_id;
            return Ok(Json(json!({ "help": help, "task_id": id })).into_response());
        }
        Submission::Graded(g) => g,
    };
    let feedback = serde_json::to_value(&graded.feedback).expect("feedback serializes");
    let record = SessionRecord {
        session_id: uuid::Uuid::new_v4().to_string(),
        task_id: program.task().map(|t| t.task_id.clone()).unwrap_or_default(),
        program: doc,
        outcome: engine::graded_summary(&graded),
        feedback: feedback.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let session_id = record.session_id.clone();
    if let Err(e) = state.sessions.append(record) {
        tracing::error!("could not persist session {session_id}: {e}");
    }
    Ok(Json(json!({
        "feedback": feedback,
        "say_outputs": graded.outcome.say_outputs,
        "seed": seed,
        "session_id": session_id,
    }))
    .into_response())
}

async fn validate(body: Bytes) -> Result<Response, ApiError> {
    let (doc, _) = request_parts(&body)?;
    let program = engine::parse_json_document(&doc)?;
    let diags = engine::diagnostics(&program)?;
    let status = if diags.is_empty() {
        StatusCode::OK
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    Ok((status, Json(json!({ "diagnostics": diags }))).into_response())
}

async fn list_sessions(State(state): State<AppState>) -> Json<Json_> {
    let list: Vec<_> = state
        .sessions
        .list()
        .into_iter()
        .map(|r| {
            json!({
                "session_id": r.session_id,
                "task_id": r.task_id,
                "timestamp": r.timestamp,
                "verdict": r.feedback["verdict"],
            })
        })
        .collect();
    Json(json!(list))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionRecord>, ApiError> {
    state.sessions.get(&id).map(Json).ok_or_else(|| not_found("session", &id))
}
