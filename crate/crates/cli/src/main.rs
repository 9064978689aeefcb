//! `gapforge`: command-line front end for band scans and gap design on
//! periodic quantum graphs.
//!
//! Exit status: 0 on success, 2 for invalid input or usage, 3 for numerical
//! failure. Errors are printed to stderr as one JSON object.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapforge::{Error, ValidationReport};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "gapforge", version, about = "Band structures and gap design for periodic quantum graphs")]
struct Cli {
    /// Worker threads for θ-parallel band scans.
    #[arg(long, global = true, env = "GAPFORGE_THREADS")]
    threads: Option<usize>,

    /// Output format; `both` needs `--out` and writes the CSV next to it.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Graph spec (JSON).
    #[arg(long)]
    input: PathBuf,

    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Finite elements per unit length.
    #[arg(long, default_value_t = 32)]
    mesh: usize,

    /// Disable two-mesh Richardson extrapolation.
    #[arg(long)]
    no_richardson: bool,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    mesh: MeshArgs,

    /// θ-grid points per direction, comma separated (default 64 for n = 1,
    /// 24 per direction otherwise).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,

    /// Number of bands (default max(6, m + 2)).
    #[arg(long)]
    kmax: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Limit endpoints A_j and B_j for the given couplings.
    Limit {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Couplings whose limit endpoints equal the targets.
    Design {
        #[command(flatten)]
        io: IoArgs,
    },
    /// The window constant Λ₀.
    Lambda0 {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        mesh: MeshArgs,
    },
    /// Band structure and gaps at one ε.
    Bands {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        epsilon: f64,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Gap endpoint errors over a decreasing list of ε.
    Convergence {
        #[command(flatten)]
        io: IoArgs,
        /// Strictly decreasing, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon_list: Vec<f64>,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Fixed-ε calibration of α so the left gap endpoints hit the targets.
    Calibrate {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        epsilon: f64,
        #[command(flatten)]
        scan: ScanArgs,
        /// Required residual |F_k(α) − Ã_k|.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Box half width δ (default ¼ · min|α̃_k|).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 50)]
        max_sweeps: usize,
    },
}

impl Command {
    fn io(&self) -> &IoArgs {
        match self {
            Command::Limit { io }
            | Command::Design { io }
            | Command::Lambda0 { io, .. }
            | Command::Bands { io, .. }
            | Command::Convergence { io, .. }
            | Command::Calibrate { io, .. } => io,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Limit { .. } => "limit",
            Command::Design { .. } => "design",
            Command::Lambda0 { .. } => "lambda0",
            Command::Bands { .. } => "bands",
            Command::Convergence { .. } => "convergence",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Invalid(ValidationReport),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            _ => 2,
        }
    }

    fn to_json(&self) -> Value {
        let code = self.exit_code();
        match self {
            CliError::Core(e) => {
                let mut v = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code });
                if let Error::Parse { path, .. } = e {
                    v["path"] = json!(path);
                }
                if let Error::NotConverged { alpha, residual, sweeps } = e {
                    v["alpha"] = json!(alpha);
                    v["residual"] = json!(residual);
                    v["sweeps"] = json!(sweeps);
                }
                v
            }
            CliError::Invalid(report) => json!({
                "error": "validation",
                "message": report.summary(),
                "violations": report.violations,
                "exit_code": code,
            }),
            CliError::Io { path, message } => json!({
                "error": "io",
                "message": message,
                "path": path.display().to_string(),
                "exit_code": code,
            }),
            CliError::Usage(message) => json!({ "error": "usage", "message": message, "exit_code": code }),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produces before it is routed to files or stdout.
struct Output {
    config: Value,
    result: Value,
    csv: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let io = cli.command.io();
    if cli.format == Format::Both {
        match &io.out {
            None => return Err(CliError::Usage("--format both requires --out".into())),
            Some(p) if p.extension().is_some_and(|e| e == "csv") => {
                return Err(CliError::Usage("--format both writes the CSV beside --out; use a non-.csv path".into()))
            }
            Some(_) => {}
        }
    }
    let text = fs::read_to_string(&io.input)
        .map_err(|e| CliError::Io { path: io.input.clone(), message: e.to_string() })?;
    let raw: Value = gapforge::io::from_json(&text)?;
    let spec = gapforge::parse_spec::<f64>(&text)?;

    let output = commands::execute(&cli.command, &spec)?;
    if cli.format != Format::Json && output.csv.is_none() {
        return Err(CliError::Usage(format!("`{}` has no CSV output", cli.command.name())));
    }
    let mut config = output.config;
    config["command"] = json!(cli.command.name());
    config["input"] = json!(io.input.display().to_string());
    config["format"] = json!(cli.format);
    let envelope = json!({
        "command": cli.command.name(),
        "config": config,
        "input": raw,
        "result": output.result,
    });
    let json_text = gapforge::io::to_json(&envelope)?;

    match (cli.format, &io.out) {
        (Format::Json, None) => print!("{json_text}"),
        (Format::Json, Some(path)) => write(path, &json_text)?,
        (Format::Csv, None) => print!("{}", output.csv.unwrap_or_default()),
        (Format::Csv, Some(path)) => write(path, output.csv.as_deref().unwrap_or_default())?,
        (Format::Both, Some(path)) => {
            write(path, &json_text)?;
            write(&path.with_extension("csv"), output.csv.as_deref().unwrap_or_default())?;
        }
        (Format::Both, None) => unreachable!("checked above"),
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}
