//! `rtdb`: check schemas, emit DDL, run simulations.
//!
//! Exit codes: 0 success, 1 schema validation errors, 2 unreadable or
//! unparsable input, 3 output write failure, 4 workload inconsistent with
//! the schema, 64 usage error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rtdb::dsl::{parse_with_map, SourceMap};
use rtdb::engine::{self, EngineError, WorkloadSpec};
use rtdb::schema::{has_errors, validate};
use rtdb::{ddl, Schema};
use sha2::{Digest, Sha256};

const EXIT_VALIDATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_WRITE: u8 = 3;
const EXIT_WORKLOAD: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "rtdb", version, about = "Real-time database kernel: schema checks, DDL and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a schema file.
    Check { schema: PathBuf },
    /// Emit object-relational DDL for a schema.
    Ddl {
        schema: PathBuf,
        /// Output file, `-` for standard output.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simulate a workload against a schema.
    Sim {
        schema: PathBuf,
        #[arg(short, long)]
        workload: PathBuf,
        /// Report file, `-` for standard output.
        #[arg(short, long)]
        out: PathBuf,
        /// Write the event log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Override the workload seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the simulated horizon: `500ms`, `60s` or plain milliseconds.
        #[arg(long, value_parser = parse_duration)]
        duration: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn parse_duration(s: &str) -> Result<u64, String> {
    let (num, scale) = if let Some(n) = s.strip_suffix("ms") {
        (n, 1)
    } else if let Some(n) = s.strip_suffix('s') {
        (n, 1000)
    } else {
        (s, 1)
    };
    num.parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(scale))
        .ok_or_else(|| format!("`{s}` is not a duration (use e.g. 500ms, 60s or 60000)"))
}

/// Failure carrying its exit code; the message is already printed.
struct Exit(u8);

fn read(path: &Path) -> Result<String, Exit> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: cannot read: {e}", path.display());
        Exit(EXIT_INPUT)
    })
}

fn write_out(path: &Path, text: &str) -> Result<(), Exit> {
    let res = if path.as_os_str() == "-" {
        io::stdout().lock().write_all(text.as_bytes())
    } else {
        fs::write(path, text)
    };
    res.map_err(|e| {
        eprintln!("{}: cannot write: {e}", path.display());
        Exit(EXIT_WRITE)
    })
}

/// Parses and validates, printing diagnostics as `file:line:col: severity: message`.
fn load_schema(path: &Path) -> Result<(Schema, String), Exit> {
    let src = read(path)?;
    let (schema, map): (Schema, SourceMap) = parse_with_map(&src).map_err(|e| {
        eprintln!("{}:{}: error: expected {}, found {}", path.display(), e.pos, e.expected, e.found);
        Exit(EXIT_INPUT)
    })?;
    let diags = validate(&schema);
    for d in &diags {
        let pos = map.locate(d.site).unwrap_or_default();
        eprintln!("{}:{pos}: {d}", path.display());
    }
    if has_errors(&diags) {
        return Err(Exit(EXIT_VALIDATION));
    }
    Ok((schema, src))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn run(cli: Cli) -> Result<(), Exit> {
    match cli.command {
        Command::Check { schema } => load_schema(&schema).map(drop),
        Command::Ddl { schema, out } => {
            let (schema, _) = load_schema(&schema)?;
            let script = ddl::compile(&schema).map_err(|e| {
                eprintln!("{e}");
                Exit(EXIT_VALIDATION)
            })?;
            write_out(&out, &script.render())
        }
        Command::Sim {
            schema,
            workload,
            out,
            log,
            seed,
            duration,
            format,
        } => {
            let (schema, schema_src) = load_schema(&schema)?;
            let wl_src = read(&workload)?;
            let mut spec = WorkloadSpec::from_json(&wl_src).map_err(|e| {
                eprintln!("{}: {e}", workload.display());
                Exit(EXIT_INPUT)
            })?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(d) = duration {
                spec.duration_ms = d;
            }
            let (mut report, events) = engine::run(&schema, &spec).map_err(|e| {
                eprintln!("{}: {e}", workload.display());
                match e {
                    EngineError::ValidationFailed(_) => Exit(EXIT_VALIDATION),
                    EngineError::InconsistentWorkload(_) => Exit(EXIT_WORKLOAD),
                }
            })?;
            let mut h = Sha256::new();
            h.update(schema_src.as_bytes());
            h.update(wl_src.as_bytes());
            report.digest = Some(hex(&h.finalize()));
            let text = match format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            write_out(&out, &text)?;
            if let Some(path) = log {
                write_out(&path, &events.to_text())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code)) => ExitCode::from(code),
    }
}
