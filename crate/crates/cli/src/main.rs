use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use hybrid_core::adapter::{ast_to_blocks, palette_json};
use hybrid_core::assess::{
    self, load_corpus, read_submission, render_table, write_reference_submissions,
};
use hybrid_core::batch::{grade_all, Exec};
use hybrid_core::blocks::to_markup;
use hybrid_core::interp::{run, DEFAULT_STEP_LIMIT};
use hybrid_core::{parse, print, Diagnostic, Program};
use hybrid_service::Config;

/// MiniPencil hybrid block/text editor tools.
#[derive(Parser)]
#[command(name = "hybrid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a program and report diagnostics.
    Parse {
        /// Source file, or `-` for stdin.
        file: PathBuf,
    },
    /// Print a program in canonical form.
    Fmt { file: PathBuf },
    /// Print the block markup (.blx) of a program.
    Blocks { file: PathBuf },
    /// Run a program and print what it writes.
    Run {
        file: PathBuf,
        /// Print the whole execution trace as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT, value_parser = clap::value_parser!(u64).range(1..))]
        step_limit: u64,
    },
    /// Grade a directory of submissions against a task corpus.
    Grade {
        corpus: PathBuf,
        /// Holds `<task-id>.mp` files and `<task-id>.choice` files.
        submissions: PathBuf,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write every task's reference submission into a directory.
    References { corpus: PathBuf, out: PathBuf },
    /// Print the block palette as JSON.
    Palette,
    /// Start the HTTP service.
    Serve {
        /// Overrides HYBRID_PORT.
        #[arg(long)]
        port: Option<u16>,
    },
}

/// Exit code for bad input files; clap uses the same code for bad flags.
const USAGE: u8 = 2;

enum Failure {
    Usage(anyhow::Error),
    Diagnostics,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn read_source(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn report(path: &Path, diags: &[Diagnostic]) {
    let mut err = std::io::stderr().lock();
    for d in diags {
        let _ = writeln!(err, "{}:{d}", path.display());
    }
}

fn parsed(path: &Path) -> Result<Program, Failure> {
    let src = read_source(path)?;
    parse(&src).map_err(|d| {
        report(path, &d);
        Failure::Diagnostics
    })
}

fn execute(command: Command) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match command {
        Command::Parse { file } => {
            parsed(&file)?;
        }
        Command::Fmt { file } => {
            let p = parsed(&file)?;
            write!(out, "{}", print(&p)).context("writing stdout")?;
        }
        Command::Blocks { file } => {
            let p = parsed(&file)?;
            write!(out, "{}", to_markup(&ast_to_blocks(&p))).context("writing stdout")?;
        }
        Command::Run {
            file,
            json,
            step_limit,
        } => {
            let p = parsed(&file)?;
            match run(&p, step_limit) {
                Ok(trace) if json => {
                    serde_json::to_writer_pretty(&mut out, &trace).context("writing stdout")?;
                    writeln!(out).context("writing stdout")?;
                }
                Ok(trace) => {
                    for line in &trace.output {
                        writeln!(out, "{line}").context("writing stdout")?;
                    }
                }
                Err(e) => {
                    eprintln!(
                        "{}:{}: error[{}]: {}",
                        file.display(),
                        e.line,
                        e.code,
                        e.message
                    );
                    return Err(Failure::Diagnostics);
                }
            }
        }
        Command::Grade {
            corpus,
            submissions,
            json,
        } => {
            let tasks = load_corpus(&corpus).map_err(|e| {
                eprintln!("{}: {e}", corpus.display());
                Failure::Diagnostics
            })?;
            if !submissions.is_dir() {
                return Err(anyhow::anyhow!("{} is not a directory", submissions.display()).into());
            }
            let subs = tasks
                .iter()
                .map(|t| read_submission(t, &submissions))
                .collect::<Result<Vec<_>, _>>()
                .context("reading submissions")?;
            let reports = grade_all(&tasks, &subs, Exec::default());
            if json {
                serde_json::to_writer_pretty(&mut out, &reports).context("writing stdout")?;
                writeln!(out).context("writing stdout")?;
            } else {
                write!(out, "{}", render_table(&reports)).context("writing stdout")?;
            }
        }
        Command::References { corpus, out: dir } => {
            let tasks: Vec<assess::Task> = load_corpus(&corpus).map_err(|e| {
                eprintln!("{}: {e}", corpus.display());
                Failure::Diagnostics
            })?;
            write_reference_submissions(&tasks, &dir)
                .with_context(|| format!("writing {}", dir.display()))?;
        }
        Command::Palette => {
            writeln!(out, "{}", palette_json()).context("writing stdout")?;
        }
        Command::Serve { port } => {
            let mut cfg = Config::from_env().map_err(anyhow::Error::msg)?;
            if let Some(p) = port {
                cfg.port = p;
            }
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            rt.block_on(hybrid_service::serve(cfg)).context("serving")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}
