//! Command-line harness: standard-target benchmark, pseudo-target and
//! scalar tuning, transformed-draw diagnostics, and the regression and
//! state-space examples.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 runtime or
//! sampler error.

pub mod bench;
pub mod examples;
pub mod tune;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<qslice::Error> for CliError {
    fn from(e: qslice::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Maps a library error raised while validating user input to a config error
/// that names the offending field.
pub(crate) fn field_err(field: &str) -> impl Fn(qslice::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; chain `i` uses seed + i.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicate chains (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Parser)]
#[command(name = "qslice", version, about = "Quantile slice sampling benchmark harness")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run kernels on the standard targets and write one row per chain.
    Bench(bench::BenchArgs),
    /// Fit a pseudo-target or race a scalar tuning parameter.
    Tune(tune::TuneArgs),
    /// Histogram diagnostics of draws transformed by a pseudo-target.
    Diag(tune::DiagArgs),
    /// Hyper-g regression Gibbs sampler.
    Gprior(examples::GpriorArgs),
    /// Truncated state-space block samplers.
    Ssm(examples::SsmArgs),
}

/// Parses arguments and runs a subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qslice: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let c = cli.common;
    match cli.command {
        Command::Bench(a) => bench::cmd_bench(&c, &a),
        Command::Tune(a) => tune::cmd_tune(&c, &a),
        Command::Diag(a) => tune::cmd_diag(&c, &a),
        Command::Gprior(a) => examples::cmd_gprior(&c, &a),
        Command::Ssm(a) => examples::cmd_ssm(&c, &a),
    }
}

pub(crate) fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn no_config(c: &Common, cmd: &str) -> CliResult<()> {
    match &c.config {
        Some(_) => Err(CliError::Config(format!("--config is not used by `{cmd}`"))),
        None => Ok(()),
    }
}

pub(crate) fn thread_pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    if jobs == Some(0) {
        return Err(CliError::Config("jobs: must be at least 1".into()));
    }
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

pub(crate) fn write_csv<R: Serialize>(out: Option<&Path>, rows: &[R]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub(crate) fn write_json<V: Serialize + ?Sized>(out: Option<&Path>, value: &V) -> CliResult<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Writes one value per line.
pub(crate) fn write_column(path: &Path, values: &[f64]) -> CliResult<()> {
    let mut w = sink(Some(path))?;
    for v in values {
        writeln!(w, "{v}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads one real per line, skipping blank lines and a non-numeric header.
pub(crate) fn read_column(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_nan() => {
                return Err(CliError::Config(format!("{} line {}: NaN", path.display(), i + 1)))
            }
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(CliError::Config(format!("{} line {}: `{s}` is not a number", path.display(), i + 1))),
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{}: no values", path.display())));
    }
    Ok(out)
}

/// NaN and infinities become absent fields.
pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
