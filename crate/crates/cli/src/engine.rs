//! Document-level entry points shared by the CLI and the HTTP service, so
//! both produce the same bytes for the same input.

use std::collections::BTreeSet;

use cryptoblocks::format::{program_from_json, FormatError, Position};
use cryptoblocks::interpreter::{run, Environment, ResourceLimits, RunOutcome};
use cryptoblocks::program::BlockProgram;
use cryptoblocks::tasks::{Graded, Submission, TaskError, TaskRegistry};
use cryptoblocks::validate::{validate_program, Diagnostic};
use serde_json::{json, Value as Json};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{0}")]
    Format(#[from] FormatError),
    #[error("the program has {} validation problem(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("no task named {0:?}")]
    UnknownTask(String),
    #[error("the program is not bound to a task")]
    NoTaskBinding,
}

impl From<TaskError> for EngineError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::UnknownTask(id) => EngineError::UnknownTask(id),
            TaskError::NoTaskBinding => EngineError::NoTaskBinding,
            TaskError::Invalid(d) => EngineError::Invalid(d),
        }
    }
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Format(e) => e.kind(),
            EngineError::Invalid(_) => "ValidationError",
            EngineError::UnknownTask(_) => "UnknownTask",
            EngineError::NoTaskBinding => "NoTaskBinding",
        }
    }

    pub fn to_json(&self) -> Json {
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        match self {
            EngineError::Format(FormatError::Parse { position, .. }) => {
                body["position"] = match position {
                    Position::LineColumn { line, column } => json!({ "line": line, "column": column }),
                    Position::Pointer(p) => json!({ "pointer": p }),
                };
            }
            EngineError::Format(FormatError::Schema { path, .. }) => {
                body["path"] = json!(path);
            }
            EngineError::Invalid(diags) => {
                body["diagnostics"] = serde_json::to_value(diags).expect("diagnostics serialize");
            }
            _ => {}
        }
        body
    }
}

pub fn parse_document(bytes: &[u8]) -> Result<BlockProgram, EngineError> {
    Ok(cryptoblocks::format::parse_program(bytes)?)
}

pub fn parse_json_document(doc: &Json) -> Result<BlockProgram, EngineError> {
    Ok(program_from_json(doc)?)
}

/// Structural diagnostics, using the task environment's names when the
/// program is bound to a known task.
pub fn diagnostics(program: &BlockProgram) -> Result<Vec<Diagnostic>, EngineError> {
    let prebound = match program.task() {
        Some(t) => TaskRegistry::builtin().get(&t.task_id)?.prebound(),
        None => BTreeSet::new(),
    };
    Ok(validate_program(program, &prebound))
}

pub fn grade(program: &BlockProgram, seed: u64) -> Result<Submission, EngineError> {
    Ok(TaskRegistry::builtin().submit(program, seed)?)
}

/// Runs without grading. Task-bound programs get their task environment.
pub fn execute(program: &BlockProgram, seed: u64) -> Result<RunOutcome, EngineError> {
    let diags = diagnostics(program)?;
    if !diags.is_empty() {
        return Err(EngineError::Invalid(diags));
    }
    let env = match program.task() {
        Some(t) => TaskRegistry::builtin().get(&t.task_id)?.environment(seed),
        None => Environment::new().with_seed(seed),
    };
    Ok(run(program, &env, &ResourceLimits::default()))
}

pub fn run_summary(outcome: &RunOutcome, with_trace: bool) -> Json {
    let mut out = json!({
        "final_bindings": outcome.final_bindings,
        "say_outputs": outcome.say_outputs,
        "seed": outcome.seed,
        "status": outcome.status,
        "steps": outcome.steps,
    });
    if with_trace {
        out["trace"] = serde_json::to_value(&outcome.trace).expect("trace serializes");
    }
    out
}

pub fn graded_summary(graded: &Graded) -> Json {
    json!({
        "say_outputs": graded.outcome.say_outputs,
        "seed": graded.outcome.seed,
        "status": graded.outcome.status,
        "steps": graded.outcome.steps,
    })
}

pub fn fresh_seed() -> u64 {
    rand::random()
}
