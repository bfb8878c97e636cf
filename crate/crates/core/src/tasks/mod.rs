//! The eight challenges: environments, starters, verifiers and grading.

mod fixture;
mod verify;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::analyzer::{analyze_with, Finding, FindingCode, RuleCatalog};
use crate::crypto::{caesar_shift, Direction};
use crate::interpreter::{run, Environment, ResourceLimits, RunOutcome, RunStatus};
use crate::program::{BlockProgram, Mode};
use crate::validate::{validate_program, Diagnostic};
use crate::value::Value;

pub use self::fixture::FixtureError;
pub use self::verify::{
    verify, verify_caesar_cryptanalysis, verify_exact, verify_pgp, verify_signature, Verification,
    Verifier,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Success,
    IncorrectResult,
    MalformedResult,
    StarterUnchanged,
    RuntimeError,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Success => "SUCCESS",
            Verdict::IncorrectResult => "INCORRECT_RESULT",
            Verdict::MalformedResult => "MALFORMED_RESULT",
            Verdict::StarterUnchanged => "STARTER_UNCHANGED",
            Verdict::RuntimeError => "RUNTIME_ERROR",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fields are declared in key order so the JSON form is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Feedback {
    pub details: Vec<String>,
    pub findings: Vec<Finding>,
    pub message: String,
    pub verdict: Verdict,
}

impl Feedback {
    pub fn new(verdict: Verdict, findings: Vec<Finding>, details: Vec<String>) -> Self {
        let mut message = match verdict {
            Verdict::Success => "Well done! Your result is correct.".to_owned(),
            Verdict::IncorrectResult => "Your program ran, but the result is not correct yet.".to_owned(),
            Verdict::MalformedResult => {
                "Your program ran, but the result does not have the shape this task asks for.".to_owned()
            }
            Verdict::StarterUnchanged => "This is still the starter code. Add blocks to build your \
                                          solution, then run it again."
                .to_owned(),
            Verdict::RuntimeError => "Your program stopped with an error.".to_owned(),
        };
        if !findings.is_empty() {
            message.push_str(" Look at the warnings: part of the solution is not secure.");
        }
        Feedback {
            details,
            findings,
            message,
            verdict,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feedback serializes")
    }

    pub fn codes(&self) -> Vec<FindingCode> {
        self.findings.iter().map(|f| f.code).collect()
    }
}

/// A corpus program with a known grading outcome.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlawedVariant {
    pub name: String,
    pub file: String,
    pub verdict: Verdict,
    pub findings: Vec<FindingCode>,
}

#[derive(Debug, Clone)]
pub struct TaskDefinition {
    pub id: String,
    pub title: String,
    pub help: String,
    pub env: BTreeMap<String, Value>,
    pub verifier: Verifier,
    /// Finding codes the default catalog may raise for this task.
    pub rules: Vec<FindingCode>,
    pub starter: BlockProgram,
    /// Corpus file holding a correct solution.
    pub reference: String,
    pub flawed_variants: Vec<FlawedVariant>,
}

/// A finished grading run.
#[derive(Debug, Clone)]
pub struct Graded {
    pub feedback: Feedback,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone)]
pub enum Submission {
    Help(String),
    Graded(Graded),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("no task named {0:?}")]
    UnknownTask(String),
    #[error("the program is not bound to a task")]
    NoTaskBinding,
    #[error("the program does not validate ({} problem(s))", .0.len())]
    Invalid(Vec<Diagnostic>),
}

impl TaskDefinition {
    pub fn prebound(&self) -> BTreeSet<String> {
        self.env.keys().cloned().collect()
    }

    pub fn environment(&self, seed: u64) -> Environment {
        Environment {
            bindings: self.env.clone(),
            ..Environment::new().with_seed(seed)
        }
    }

    pub fn is_starter(&self, program: &BlockProgram) -> bool {
        program.body() == self.starter.body()
            && program.task().map(|t| &t.result_variable)
                == self.starter.task().map(|t| &t.result_variable)
    }

    pub fn execute(&self, program: &BlockProgram, seed: u64) -> Result<Graded, TaskError> {
        self.execute_with(program, seed, &RuleCatalog::default(), &ResourceLimits::default())
    }

    /// Runs, verifies, then analyzes. The verdict never looks at findings.
    pub fn execute_with(
        &self,
        program: &BlockProgram,
        seed: u64,
        catalog: &RuleCatalog,
        limits: &ResourceLimits,
    ) -> Result<Graded, TaskError> {
        let diags = validate_program(program, &self.prebound());
        if !diags.is_empty() {
            return Err(TaskError::Invalid(diags));
        }
        let outcome = run(program, &self.environment(seed), limits);
        let (verdict, details) = match &outcome.status {
            RunStatus::Completed if self.is_starter(program) => (Verdict::StarterUnchanged, Vec::new()),
            RunStatus::Completed => {
                let result_var = program
                    .task()
                    .map(|t| t.result_variable.as_str())
                    .unwrap_or("Result");
                match outcome.final_bindings.get(result_var) {
                    Some(v) => {
                        let Verification { verdict, details } = verify(self, v);
                        (verdict, details)
                    }
                    None => (
                        Verdict::RuntimeError,
                        vec![format!("{result_var:?} was never set")],
                    ),
                }
            }
            RunStatus::RuntimeError { detail } | RunStatus::ResourceLimit { detail } => {
                (Verdict::RuntimeError, vec![detail.clone()])
            }
        };
        let findings = if verdict == Verdict::StarterUnchanged {
            Vec::new()
        } else {
            analyze_with(catalog, &outcome.trace, program, &self.id)
        };
        Ok(Graded {
            feedback: Feedback::new(verdict, findings, details),
            outcome,
        })
    }

    /// Task 3 with a different secret shift. The plaintext and known
    /// fragment stay the same.
    pub fn caesar_challenge(shift: i64) -> TaskDefinition {
        let mut task = TaskRegistry::builtin()
            .get("task3_caesar_cryptanalysis")
            .expect("task 3 is bundled")
            .clone();
        let Verifier::CaesarCryptanalysis { plaintext, .. } = &task.verifier else {
            unreachable!("task 3 uses the caesar verifier")
        };
        let ciphertext = caesar_shift(plaintext, shift, Direction::Encrypt);
        task.env.insert("Ciphertext".into(), Value::Text(ciphertext));
        task.verifier = Verifier::CaesarCryptanalysis {
            shift,
            plaintext: plaintext.clone(),
        };
        task
    }
}

#[derive(Debug, Clone)]
pub struct TaskRegistry {
    tasks: Vec<TaskDefinition>,
}

static BUILTIN: OnceLock<TaskRegistry> = OnceLock::new();

static FIXTURES: &[&str] = &[
    include_str!("../../fixtures/tasks/task1_aes_encrypt.json"),
    include_str!("../../fixtures/tasks/task2_aes_decrypt.json"),
    include_str!("../../fixtures/tasks/task3_caesar_cryptanalysis.json"),
    include_str!("../../fixtures/tasks/task4_rsa_encrypt.json"),
    include_str!("../../fixtures/tasks/task5_rsa_decrypt.json"),
    include_str!("../../fixtures/tasks/task6_sha256.json"),
    include_str!("../../fixtures/tasks/task7_signature.json"),
    include_str!("../../fixtures/tasks/task8_pgp.json"),
];

impl TaskRegistry {
    /// The bundled tasks, parsed once.
    pub fn builtin() -> &'static TaskRegistry {
        BUILTIN.get_or_init(|| {
            let tasks = FIXTURES
                .iter()
                .map(|text| fixture::parse_task(text).expect("bundled task fixture is valid"))
                .collect();
            TaskRegistry { tasks }
        })
    }

    pub fn from_fixtures<'a>(
        texts: impl IntoIterator<Item = &'a str>,
    ) -> Result<TaskRegistry, FixtureError> {
        let tasks = texts
            .into_iter()
            .map(fixture::parse_task)
            .collect::<Result<_, _>>()?;
        Ok(TaskRegistry { tasks })
    }

    pub fn tasks(&self) -> &[TaskDefinition] {
        &self.tasks
    }

    pub fn get(&self, id: &str) -> Result<&TaskDefinition, TaskError> {
        self.tasks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| TaskError::UnknownTask(id.to_owned()))
    }

    /// Grades `program` against the task it is bound to.
    pub fn execute(&self, program: &BlockProgram, seed: u64) -> Result<Graded, TaskError> {
        let binding = program.task().ok_or(TaskError::NoTaskBinding)?;
        self.get(&binding.task_id)?.execute(program, seed)
    }

    /// HELP-mode programs get the task text; EXECUTE-mode ones are graded.
    pub fn submit(&self, program: &BlockProgram, seed: u64) -> Result<Submission, TaskError> {
        let binding = program.task().ok_or(TaskError::NoTaskBinding)?;
        let task = self.get(&binding.task_id)?;
        match binding.mode {
            Mode::Help => Ok(Submission::Help(task.help.clone())),
            Mode::Execute => task.execute(program, seed).map(Submission::Graded),
        }
    }
}

/// One corpus program graded against its recorded expectation.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusCheck {
    pub file: String,
    pub task_id: String,
    pub expected_verdict: Verdict,
    pub expected_findings: Vec<FindingCode>,
    pub verdict: Option<Verdict>,
    pub findings: Vec<FindingCode>,
    pub error: Option<String>,
}

impl CorpusCheck {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.verdict == Some(self.expected_verdict)
            && self.findings == self.expected_findings
    }
}

impl TaskRegistry {
    /// Grades every reference solution and flawed variant the tasks list.
    pub fn check_corpus(&self, seed: u64) -> Vec<CorpusCheck> {
        let mut out = Vec::new();
        for task in &self.tasks {
            let reference = (task.reference.as_str(), Verdict::Success, Vec::new());
            let variants = task
                .flawed_variants
                .iter()
                .map(|v| (v.file.as_str(), v.verdict, v.findings.clone()));
            for (file, verdict, findings) in std::iter::once(reference).chain(variants) {
                let graded = crate::corpus::get(file)
                    .ok_or_else(|| format!("no corpus file {file}"))
                    .and_then(|text| crate::format::parse_program_str(text).map_err(|e| e.to_string()))
                    .and_then(|p| task.execute(&p, seed).map_err(|e| e.to_string()));
                let (actual, codes, error) = match graded {
                    Ok(g) => (Some(g.feedback.verdict), g.feedback.codes(), None),
                    Err(e) => (None, Vec::new(), Some(e)),
                };
                out.push(CorpusCheck {
                    file: file.to_owned(),
                    task_id: task.id.clone(),
                    expected_verdict: verdict,
                    expected_findings: findings,
                    verdict: actual,
                    findings: codes,
                    error,
                });
            }
        }
        out
    }
}

pub fn list_tasks() -> Vec<(&'static str, &'static str)> {
    TaskRegistry::builtin()
        .tasks()
        .iter()
        .map(|t| (t.id.as_str(), t.title.as_str()))
        .collect()
}

pub fn help(task_id: &str) -> Result<&'static str, TaskError> {
    TaskRegistry::builtin().get(task_id).map(|t| t.help.as_str())
}

pub fn starter(task_id: &str) -> Result<&'static BlockProgram, TaskError> {
    TaskRegistry::builtin().get(task_id).map(|t| &t.starter)
}

pub fn execute(task_id: &str, program: &BlockProgram, seed: u64) -> Result<Feedback, TaskError> {
    TaskRegistry::builtin()
        .get(task_id)?
        .execute(program, seed)
        .map(|g| g.feedback)
}
