//! `omni`: run sessions, benchmarks and pool checks from the shell.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use omni_core::eval::{emit_report, load_dataset, run_benchmark, BenchError, BenchOptions, ReportFormat};
use omni_core::pool::{BackendKind, PoolConfigError, PoolFile};
use omni_core::trace::{read_trace, render_trace, write_trace, TraceError};
use omni_core::{InputItem, LoopConfig, ModalityKind, ModelPool, Orchestrator};

#[derive(Parser)]
#[command(name = "omni", version, about = "Master-agent orchestration over a pool of modality models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and print the final answer.
    Ask(AskArgs),
    /// Run a multiple-choice benchmark and write a report.
    Bench(BenchArgs),
    /// Inspect saved traces.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
    /// Validate a pool file.
    Pool {
        #[command(subcommand)]
        command: PoolCommand,
    },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Print a trace round by round.
    Show { path: PathBuf },
}

#[derive(Subcommand)]
enum PoolCommand {
    /// Check the pool file and, with --live, ping remote backends.
    Check {
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long)]
        live: bool,
    },
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long = "pool", env = "OMNI_POOL", default_value = "pool.toml")]
    file: PathBuf,
}

#[derive(Args)]
struct LoopArgs {
    #[arg(long, env = "OMNI_MAX_LOOPS")]
    max_loops: Option<u32>,
    #[arg(long, env = "OMNI_TIMEOUT_S")]
    timeout_s: Option<f64>,
    #[arg(long, env = "OMNI_REPAIR_RETRIES")]
    repair_retries: Option<u32>,
}

#[derive(Args)]
struct AskArgs {
    query: String,
    #[command(flatten)]
    pool: PoolArgs,
    #[command(flatten)]
    loop_args: LoopArgs,
    #[arg(long, env = "OMNI_TRACE_DIR", default_value = "traces")]
    trace_dir: PathBuf,
    #[arg(long = "text", value_name = "PATH")]
    texts: Vec<PathBuf>,
    #[arg(long = "image", value_name = "PATH")]
    images: Vec<PathBuf>,
    #[arg(long = "audio", value_name = "PATH")]
    audios: Vec<PathBuf>,
    /// A directory of frame images.
    #[arg(long = "video", value_name = "DIR")]
    videos: Vec<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dataset: PathBuf,
    #[command(flatten)]
    pool: PoolArgs,
    #[command(flatten)]
    loop_args: LoopArgs,
    #[arg(long, env = "OMNI_PARALLEL", default_value_t = 1)]
    parallel: usize,
    /// Per-item traces and results.jsonl go here when set.
    #[arg(long, env = "OMNI_TRACE_DIR")]
    trace_dir: Option<PathBuf>,
    #[arg(long, env = "OMNI_REPORT", default_value = "markdown")]
    report: ReportFormat,
    /// Report path; defaults to `report.<ext>` in the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One exit code per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Failure {
    Config = 2,
    Stage = 3,
    Io = 4,
    Live = 5,
}

struct CliError {
    kind: Failure,
    message: String,
}

impl CliError {
    fn new(kind: Failure, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

fn pool_error(err: PoolConfigError) -> CliError {
    CliError::new(Failure::Config, err.to_string())
}

fn load_pool(args: &PoolArgs) -> Result<(PoolFile, ModelPool), CliError> {
    let file = PoolFile::load(&args.file).map_err(pool_error)?;
    let pool = file.build().map_err(pool_error)?;
    Ok((file, pool))
}

/// Flags and environment win over the pool file's `[loop]` table.
fn loop_config(file: &PoolFile, args: &LoopArgs) -> Result<LoopConfig, CliError> {
    let mut cfg = file.loop_config.clone().unwrap_or_default();
    if let Some(n) = args.max_loops {
        cfg.max_loops = n;
    }
    if let Some(t) = args.timeout_s {
        cfg.per_call_timeout_s = t;
    }
    if let Some(r) = args.repair_retries {
        cfg.json_repair_retries = r;
    }
    cfg.validate()
        .map_err(|e| CliError::new(Failure::Config, e.to_string()))?;
    Ok(cfg)
}

fn collect_inputs(args: &AskArgs) -> Result<Vec<InputItem>, CliError> {
    let mut inputs: Vec<InputItem> = Vec::new();
    let groups = [
        (ModalityKind::Text, &args.texts),
        (ModalityKind::Image, &args.images),
        (ModalityKind::Audio, &args.audios),
        (ModalityKind::Video, &args.videos),
    ];
    for (modality, paths) in groups {
        for path in paths {
            let mut id = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| modality.to_string());
            if inputs.iter().any(|i| i.id == id) {
                id = format!("{id}#{}", inputs.len() + 1);
            }
            let item = match modality {
                ModalityKind::Text => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::new(Failure::Io, format!("cannot read {}: {e}", path.display()))
                    })?;
                    InputItem::text(id, text)
                }
                ModalityKind::Video if !path.is_dir() => {
                    return Err(CliError::new(
                        Failure::Io,
                        format!("video input {} must be a directory of frames", path.display()),
                    ))
                }
                _ if !path.exists() => {
                    return Err(CliError::new(
                        Failure::Io,
                        format!("cannot read {}: not found", path.display()),
                    ))
                }
                _ => InputItem::media(id, modality, path),
            };
            inputs.push(item);
        }
    }
    Ok(inputs)
}

fn trace_io(err: TraceError) -> CliError {
    CliError::new(Failure::Io, err.to_string())
}

fn cmd_ask(args: AskArgs) -> Result<(), CliError> {
    let (file, pool) = load_pool(&args.pool)?;
    let config = loop_config(&file, &args.loop_args)?;
    let inputs = collect_inputs(&args)?;
    let orchestrator = Orchestrator::new(&pool, config);
    match orchestrator.run_session(&args.query, &inputs) {
        Ok(trace) => {
            let path = write_trace(&args.trace_dir, &trace).map_err(trace_io)?;
            println!("{}", trace.final_answer);
            eprintln!("trace: {}", path.display());
            Ok(())
        }
        Err(failure) => {
            let path = write_trace(&args.trace_dir, &failure.trace).map_err(trace_io)?;
            eprintln!("partial trace: {}", path.display());
            Err(CliError::new(Failure::Stage, failure.error.to_string()))
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let (file, pool) = load_pool(&args.pool)?;
    let config = loop_config(&file, &args.loop_args)?;
    let items = load_dataset(&args.dataset).map_err(|e| CliError::new(Failure::Io, e.to_string()))?;
    let options = BenchOptions {
        parallelism: args.parallel,
        trace_dir: args.trace_dir.clone(),
        prompts: None,
    };
    let report = run_benchmark(&items, &pool, &config, &options).map_err(|e| match e {
        BenchError::Dataset(_) | BenchError::Empty | BenchError::Trace(_) => {
            CliError::new(Failure::Io, e.to_string())
        }
        BenchError::Parallelism | BenchError::NoMaster | BenchError::Config(_) => {
            CliError::new(Failure::Config, e.to_string())
        }
    })?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("report.{}", args.report.extension())));
    std::fs::write(&out, emit_report(&report, args.report))
        .map_err(|e| CliError::new(Failure::Io, format!("cannot write {}: {e}", out.display())))?;
    println!("{}", report.summary_line());
    eprintln!("report: {}", out.display());
    Ok(())
}

fn cmd_trace_show(path: &Path) -> Result<(), CliError> {
    let trace = read_trace(path).map_err(trace_io)?;
    print!("{}", render_trace(&trace));
    Ok(())
}

fn cmd_pool_check(args: &PoolArgs, live: bool) -> Result<(), CliError> {
    let (file, pool) = load_pool(args)?;
    let timeout = Duration::from_secs_f64(
        file.loop_config
            .as_ref()
            .map_or(LoopConfig::default().per_call_timeout_s, |c| c.per_call_timeout_s),
    );
    let mut pings: Vec<(String, Result<(), String>)> = Vec::new();
    if live {
        for (config, backend) in pool.backends() {
            if config.kind == BackendKind::Remote {
                let t = config.timeout_s.map_or(timeout, Duration::from_secs_f64);
                pings.push((config.backend_id.clone(), backend.ping(t).map_err(|e| e.to_string())));
            }
        }
    }
    let mut failed = false;
    for spec in pool.specs() {
        match pings.iter().find(|(id, _)| *id == spec.backend_id) {
            Some((_, Err(reason))) => {
                failed = true;
                println!("FAIL {} ({}) via {}: {reason}", spec.agent_name, spec.modality, spec.backend_id);
            }
            _ => println!("OK {} ({}) via {}", spec.agent_name, spec.modality, spec.backend_id),
        }
    }
    if failed {
        return Err(CliError::new(Failure::Live, "one or more backends did not answer"));
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ask(args) => cmd_ask(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Trace {
            command: TraceCommand::Show { path },
        } => cmd_trace_show(&path),
        Command::Pool {
            command: PoolCommand::Check { pool, live },
        } => cmd_pool_check(&pool, live),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.kind as u8)
        }
    }
}
