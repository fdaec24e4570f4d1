use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use canoe::argcore::{ArgumentGraph, Role};
use canoe::contestation::{
    audit_to_csv, load_session, participation_to_csv, verify_session_dir, Command,
    ContestationError, EditAction, ErrorClass, SessionConfigs,
};
use canoe::dot::to_dot;
use canoe::pipeline::RuleBook;
use canoe::plangen::Calendar;
use canoe::semantics::{score_all_options, AggregationConfig, Schedule, SolverConfig, Squash};
use canoe_service::{ops, AppState, ServiceError};
use clap::{Parser, Subcommand, ValueEnum};

/// Contestable multi-agent care planning.
#[derive(Parser)]
#[command(name = "canoe", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assess, recruit, retrieve, debate and solve; writes a new session directory.
    Run {
        case: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory with complexity.toml / recruitment.toml / options.toml overrides.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// TOML file with solver, aggregation, debate, scorer and plan tables.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Solves a graph file and writes its degrees.
    Solve {
        graph: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        damping: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_iter: Option<u64>,
        #[arg(long, value_enum)]
        squash: Option<SquashArg>,
        #[arg(long)]
        logistic_k: Option<f64>,
        #[arg(long, value_enum)]
        schedule: Option<ScheduleArg>,
    },
    /// Applies one edit action from a JSON file.
    Edit {
        session: PathBuf,
        #[arg(long)]
        action: PathBuf,
    },
    /// Re-solves the edited graph.
    Revalidate {
        session: PathBuf,
        #[arg(long, default_value = "human_reviewer")]
        actor: Role,
    },
    /// Freezes the graph for planning.
    Approve {
        session: PathBuf,
        /// Accept every pending argument as part of the approval.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value = "human_care_planner")]
        actor: Role,
    },
    /// Synthesizes the care plan and books tasks.
    Plan {
        session: PathBuf,
        #[arg(long)]
        calendar: Option<PathBuf>,
        #[arg(long, default_value = "human_care_planner")]
        actor: Role,
    },
    /// Replays the audit log and checks every stored file against it.
    Replay { session: PathBuf },
    /// Writes the argument graph in Graphviz DOT format.
    ExportDot {
        session: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes the audit log or the participation summary as CSV.
    ExportCsv {
        session: PathBuf,
        #[arg(long, value_enum, default_value = "audit")]
        table: CsvTable,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Starts the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SquashArg {
    Clip,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Condensed,
    Synchronous,
}

#[derive(Clone, Copy, ValueEnum)]
enum CsvTable {
    Audit,
    Participation,
}

enum Failure {
    Service(ServiceError),
    Other(String),
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        Failure::Service(e)
    }
}

impl From<ContestationError> for Failure {
    fn from(e: ContestationError) -> Self {
        Failure::Service(e.into())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        let Failure::Service(e) = self else { return 1 };
        match e {
            ServiceError::Conflict(_) => 2,
            ServiceError::NotFound(_) => 1,
            ServiceError::Session(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::WrongPhase => 3,
                ErrorClass::NonConvergence => 4,
                ErrorClass::BackendFailure => 5,
                ErrorClass::BrokenChain => 6,
                ErrorClass::NotFound | ErrorClass::Internal => 1,
            },
        }
    }

    fn line(&self) -> String {
        let v = match self {
            Failure::Service(e) => serde_json::to_value(e.to_api()).expect("error serializes"),
            Failure::Other(msg) => {
                serde_json::json!({"code": "internal", "message": msg, "detail": null})
            }
        };
        serde_json::json!({ "error": v }).to_string()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ServiceError::NotFound(path.display().to_string()).into(),
        _ => Failure::Other(format!("{}: {e}", path.display())),
    })
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Other(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(session: &Path, cmd: Command) -> Result<canoe::contestation::Session, Failure> {
    Ok(ops::execute_in(session, cmd, canoe::clock::now())?)
}

fn scores_line(s: &canoe::contestation::Session) -> String {
    let scores = s.degrees().map(|d| &d.option_scores);
    let line = serde_json::json!({
        "session_id": s.session_id(),
        "phase": s.phase(),
        "option_scores": scores,
    });
    canoe::canonical::to_canonical_string(&line).expect("summary serializes")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Run {
            case,
            corpus,
            out,
            rules,
            config,
        } => {
            let case = ops::read_case(&case)?;
            let rules = match rules {
                Some(dir) => RuleBook::load(&dir).map_err(ContestationError::from)?,
                None => RuleBook::builtin(),
            };
            let configs = match config {
                Some(p) => ops::read_configs(&p)?,
                None => SessionConfigs::default(),
            };
            let s = ops::run_to_dir(&case, &corpus, &rules, configs, &out)?;
            println!("{}", scores_line(&s));
        }
        Cmd::Solve {
            graph,
            out,
            damping,
            tolerance,
            max_iter,
            squash,
            logistic_k,
            schedule,
        } => {
            let g = ArgumentGraph::from_json(&read(&graph)?).map_err(ContestationError::from)?;
            let mut cfg = SolverConfig::default();
            if let Some(v) = damping {
                cfg.damping = v;
            }
            if let Some(v) = tolerance {
                cfg.tolerance = v;
            }
            if let Some(v) = max_iter {
                cfg.max_iterations = v;
            }
            if let Some(v) = logistic_k {
                cfg.logistic_k = v;
            }
            if let Some(v) = squash {
                cfg.squash = match v {
                    SquashArg::Clip => Squash::Clip,
                    SquashArg::Logistic => Squash::Logistic,
                };
            }
            if let Some(v) = schedule {
                cfg.schedule = match v {
                    ScheduleArg::Condensed => Schedule::Condensed,
                    ScheduleArg::Synchronous => Schedule::Synchronous,
                };
            }
            let degrees = score_all_options(&g, &cfg, &AggregationConfig::default())
                .map_err(ContestationError::from)?
                .canonicalized();
            write_out(out.as_deref(), &degrees.to_canonical())?;
        }
        Cmd::Edit { session, action } => {
            let action = EditAction::from_json(&read(&action)?)?;
            let s = execute(&session, Command::Edit(action))?;
            println!("{}", s.audit().last().expect("recorded").to_line());
        }
        Cmd::Revalidate { session, actor } => {
            let s = execute(&session, Command::Revalidate { actor })?;
            println!("{}", scores_line(&s));
        }
        Cmd::Approve {
            session,
            force,
            actor,
        } => {
            let cmd = Command::Approve {
                actor,
                force,
                bulk_accepted: Vec::new(),
            };
            let s = execute(&session, cmd)?;
            println!("{}", s.audit().last().expect("recorded").to_line());
        }
        Cmd::Plan {
            session,
            calendar,
            actor,
        } => {
            let calendar = match calendar {
                Some(p) => Some(Calendar::from_json(&read(&p)?).map_err(ContestationError::from)?),
                None => None,
            };
            let s = execute(&session, Command::Plan { actor, calendar })?;
            print!("{}", s.plan().expect("planned").to_canonical());
        }
        Cmd::Replay { session } => {
            let s = verify_session_dir(&session)?;
            let head = s
                .audit()
                .last()
                .map_or(canoe::contestation::GENESIS_HASH, |e| e.entry_hash.as_str());
            println!(
                "{}",
                serde_json::json!({"session_id": s.session_id(), "entries": s.audit().len(), "head": head, "phase": s.phase()})
            );
        }
        Cmd::ExportDot { session, out } => {
            let s = load_session(&session)?;
            write_out(out.as_deref(), &to_dot(s.graph(), s.degrees()))?;
        }
        Cmd::ExportCsv {
            session,
            table,
            out,
        } => {
            let s = load_session(&session)?;
            let text = match table {
                CsvTable::Audit => audit_to_csv(s.audit()),
                CsvTable::Participation => participation_to_csv(s.graph()),
            };
            write_out(out.as_deref(), &text)?;
        }
        Cmd::Serve { port, data } => {
            let (env_data, env_port) = canoe_service::config_from_env().map_err(Failure::Other)?;
            let data = data.unwrap_or(env_data);
            let port = port.unwrap_or(env_port);
            let state = AppState::new(data)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Other(e.to_string()))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
                    .await
                    .map_err(|e| Failure::Other(format!("bind port {port}: {e}")))?;
                eprintln!(
                    "listening on {}",
                    listener
                        .local_addr()
                        .map_err(|e| Failure::Other(e.to_string()))?
                );
                canoe_service::serve(listener, state)
                    .await
                    .map_err(|e| Failure::Other(e.to_string()))
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}
