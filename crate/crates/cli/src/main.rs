use std::io::Read;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{error::ErrorKind, Parser, Subcommand};
use cryptoblocks::crypto::RsaKeypair;
use cryptoblocks::format::serialize_program;
use cryptoblocks::interpreter::RunStatus;
use cryptoblocks::tasks::{Submission, TaskRegistry, Verdict};
use cryptoblocks_cli::engine::{self, EngineError};
use cryptoblocks_cli::{router, AppState, SessionStore};
use serde_json::json;

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_SOFTWARE: u8 = 70;
const EX_IOERR: u8 = 74;

#[derive(Parser)]
#[command(name = "cryptoblocks", version, about = "Block-program runner and grader for cryptography challenges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the bundled challenges.
    Tasks {
        #[command(subcommand)]
        command: TasksCommand,
    },
    /// Run a program document and print its outcome.
    Run {
        /// Program document, or `-` for stdin.
        program: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        emit_trace: bool,
    },
    /// Grade a task-bound program and print its feedback.
    Grade {
        program: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "CRYPTOBLOCKS_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Append graded sessions to this JSONL file.
        #[arg(long)]
        sessions: Option<PathBuf>,
    },
    /// Check the bundled reference and flawed programs.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Generate an RSA keypair and print both export documents.
    Keygen {
        #[arg(long)]
        owner: String,
        #[arg(long, default_value_t = 1024)]
        bits: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
#[command(disable_help_subcommand = true)]
enum TasksCommand {
    List,
    Help { id: String },
    Starter {
        id: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Failure {
    code: u8,
    body: serde_json::Value,
}

impl Failure {
    fn new(code: u8, error: &str, message: impl std::fmt::Display) -> Self {
        Failure {
            code,
            body: json!({ "error": error, "message": message.to_string() }),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure {
            code: EX_DATAERR,
            body: e.to_json(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": "UsageError", "message": e.to_string().trim_end() });
            eprintln!("{body}");
            return ExitCode::from(EX_USAGE);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}

fn read_input(path: &PathBuf) -> Result<Vec<u8>, Failure> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::new(EX_NOINPUT, "IoError", e))?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| Failure::new(EX_NOINPUT, "IoError", format!("{}: {e}", path.display())))
}

fn unknown_task(id: &str) -> Failure {
    EngineError::UnknownTask(id.to_owned()).into()
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    let registry = TaskRegistry::builtin();
    match command {
        Command::Tasks { command } => match command {
            TasksCommand::List => {
                for t in registry.tasks() {
                    println!("{}\t{}", t.id, t.title);
                }
                Ok(0)
            }
            TasksCommand::Help { id } => {
                let task = registry.get(&id).map_err(|_| unknown_task(&id))?;
                println!("{}", task.help);
                Ok(0)
            }
            TasksCommand::Starter { id, output } => {
                let task = registry.get(&id).map_err(|_| unknown_task(&id))?;
                let text = serialize_program(&task.starter);
                match output {
                    Some(path) => std::fs::write(&path, text)
                        .map_err(|e| Failure::new(EX_IOERR, "IoError", format!("{}: {e}", path.display())))?,
                    None => print!("{text}"),
                }
                Ok(0)
            }
        },
        Command::Run {
            program,
            seed,
            emit_trace,
        } => {
            let program = engine::parse_document(&read_input(&program)?)?;
            let outcome = engine::execute(&program, seed.unwrap_or_else(engine::fresh_seed))?;
            let summary = engine::run_summary(&outcome, emit_trace);
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(match outcome.status {
                RunStatus::Completed => 0,
                _ => 3,
            })
        }
        Command::Grade { program, seed } => {
            let program = engine::parse_document(&read_input(&program)?)?;
            match engine::grade(&program, seed.unwrap_or_else(engine::fresh_seed))? {
                Submission::Help(text) => {
                    println!("{text}");
                    Ok(0)
                }
                Submission::Graded(g) => {
                    println!("{}", g.feedback.to_json());
                    Ok(match g.feedback.verdict {
                        Verdict::Success => 0,
                        Verdict::RuntimeError => 3,
                        Verdict::IncorrectResult | Verdict::MalformedResult | Verdict::StarterUnchanged => 2,
                    })
                }
            }
        }
        Command::Serve { addr, sessions } => serve(addr, sessions),
        Command::Corpus {
            command: CorpusCommand::Verify { seed },
        } => {
            let checks = registry.check_corpus(seed);
            let failed = checks.iter().filter(|c| !c.passed()).count();
            for c in &checks {
                let status = if c.passed() { "ok  " } else { "FAIL" };
                let actual = c.verdict.map(|v| v.as_str()).unwrap_or("-");
                let codes: Vec<_> = c.findings.iter().map(|f| f.as_str()).collect();
                println!("{status} {:<28} {actual} [{}]", c.file, codes.join(", "));
                if let Some(e) = &c.error {
                    println!("     {e}");
                }
            }
            println!("{} checked, {failed} failed", checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
        Command::Keygen { owner, bits, seed } => {
            let seed = seed.unwrap_or_else(engine::fresh_seed);
            let kp = RsaKeypair::generate_seeded(bits, &owner, seed)
                .map_err(|e| Failure::new(EX_DATAERR, "CryptoError", e))?;
            println!("{}", kp.public_key().export_text());
            println!("{}", kp.private_key().export_text());
            Ok(0)
        }
    }
}

fn serve(addr: SocketAddr, sessions: Option<PathBuf>) -> Result<u8, Failure> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let store = match sessions {
        Some(path) => SessionStore::open(&path).map_err(|e| Failure::new(EX_IOERR, "IoError", e))?,
        None => SessionStore::in_memory(),
    };
    let app = router(AppState {
        sessions: Arc::new(store),
    });
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EX_SOFTWARE, "Internal", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::new(EX_IOERR, "IoError", format!("bind {addr}: {e}")))?;
        tracing::info!("listening on http://{}", listener.local_addr().expect("bound address"));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::new(EX_SOFTWARE, "Internal", e))?;
        Ok(0)
    })
}
