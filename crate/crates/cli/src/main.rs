// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eid_core::Verdict;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(
    name = "eid-lab",
    version,
    about = "Equilibrium-independent dissipativity checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// System description (JSON).
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    /// Analysis config (JSON); omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "EIDLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Overrides the command's main tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for CSV artifacts and report.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Continuous-time EID certificate over sampled pairs.
    Certify,
    /// Discrete-time EID certificate with a quadratic storage.
    CertifyDt,
    /// KYP matrix check for an `lti` system.
    Kyp,
    /// Feasible passivity parameters of the gradient feedforward system.
    Region,
    /// Closed-form gain bounds over a parameter grid.
    Gain,
    /// Search for a composition weight making the closed-loop supply negative definite.
    Compose,
    /// Circle criterion via loop transformation.
    Circle,
    /// Simulate a trajectory from `x0` around a forced equilibrium.
    Simulate,
    /// Dissipation inequality along a simulated trajectory.
    Audit,
    /// Convergence from probes around an equilibrium.
    Stability,
    /// Sample the equilibrium input-output relation and test a supply on it.
    IoRelation,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::CertifyDt => "certify-dt",
            Command::Kyp => "kyp",
            Command::Region => "region",
            Command::Gain => "gain",
            Command::Compose => "compose",
            Command::Circle => "circle",
            Command::Simulate => "simulate",
            Command::Audit => "audit",
            Command::Stability => "stability",
            Command::IoRelation => "io-relation",
        }
    }
}

#[derive(Debug)]
pub struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

impl From<eid_core::Error> for CliError {
    fn from(e: eid_core::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Inputs shared by every command.
pub struct Ctx {
    pub seed: u64,
    pub tol: Option<f64>,
    out: Option<PathBuf>,
    system_path: Option<PathBuf>,
    system_text: Option<String>,
    config_text: Option<String>,
    artifacts: Vec<String>,
}

impl Ctx {
    pub fn system(&self) -> CliResult<eid_core::systems::System> {
        let text = self
            .system_text
            .as_deref()
            .ok_or_else(|| CliError::new("this command needs --system FILE"))?;
        eid_core::io::parse_system(text).map_err(|e| {
            let path = self.system_path.as_deref().unwrap_or(Path::new("-"));
            CliError(format!("{}: {e}", path.display()))
        })
    }

    /// Raw system file, for commands that need the parameters themselves.
    pub fn system_file(&self) -> CliResult<eid_core::io::SystemFile> {
        let text = self
            .system_text
            .as_deref()
            .ok_or_else(|| CliError::new("this command needs --system FILE"))?;
        serde_json::from_str(text).map_err(|e| CliError(format!("system file: {e}")))
    }

    pub fn config<T: serde::de::DeserializeOwned + Default>(&self) -> CliResult<T> {
        match &self.config_text {
            None => Ok(T::default()),
            Some(text) => serde_json::from_str(text).map_err(|e| CliError(format!("config: {e}"))),
        }
    }

    /// Path for an artifact, or `None` when no `--out` was given.
    pub fn artifact(&mut self, name: &str) -> Option<PathBuf> {
        let dir = self.out.as_ref()?;
        self.artifacts.push(name.to_string());
        Some(dir.join(name))
    }
}

/// What a command hands back: its verdict, metrics, and the resolved config
/// that goes into the hash.
pub struct Outcome {
    pub verdict: Verdict,
    pub metrics: Value,
    pub resolved: Value,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    config_hash: String,
    seed: u64,
    verdict: Verdict,
    metrics: Value,
    artifacts: Vec<String>,
}

fn config_hash(command: &str, resolved: &Value, system: Option<&str>, tol: Option<f64>) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(resolved.to_string().as_bytes());
    h.update(b"\n");
    // re-serialize so whitespace and key order don't matter
    if let Some(text) = system {
        let canon = serde_json::from_str::<Value>(text)
            .map(|v| v.to_string())
            .unwrap_or_else(|_| text.to_string());
        h.update(canon.as_bytes());
    }
    h.update(b"\n");
    if let Some(t) = tol {
        h.update(t.to_string().as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Option<PathBuf>) -> CliResult<Option<String>> {
    path.as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| CliError(format!("{}: {e}", p.display()))))
        .transpose()
}

fn run(cli: Cli) -> CliResult<Report> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::new("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError(e.to_string()))?;
    }
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::new("--tol must be a finite nonnegative number"));
        }
    }
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError(format!("{}: {e}", dir.display())))?;
    }
    let mut ctx = Ctx {
        seed: cli.seed,
        tol: cli.tol,
        out: cli.out.clone(),
        system_text: read(&cli.system)?,
        system_path: cli.system.clone(),
        config_text: read(&cli.config)?,
        artifacts: Vec::new(),
    };
    let outcome = match cli.command {
        Command::Certify => commands::certify(&mut ctx)?,
        Command::CertifyDt => commands::certify_dt(&mut ctx)?,
        Command::Kyp => commands::kyp(&mut ctx)?,
        Command::Region => commands::region(&mut ctx)?,
        Command::Gain => commands::gain(&mut ctx)?,
        Command::Compose => commands::compose(&mut ctx)?,
        Command::Circle => commands::circle(&mut ctx)?,
        Command::Simulate => commands::simulate(&mut ctx)?,
        Command::Audit => commands::audit(&mut ctx)?,
        Command::Stability => commands::stability(&mut ctx)?,
        Command::IoRelation => commands::io_relation(&mut ctx)?,
    };
    let name = cli.command.name();
    let report = Report {
        command: name,
        config_hash: config_hash(name, &outcome.resolved, ctx.system_text.as_deref(), ctx.tol),
        seed: ctx.seed,
        verdict: outcome.verdict,
        metrics: outcome.metrics,
        artifacts: ctx.artifacts.clone(),
    };
    if let Some(dir) = &cli.out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError(e.to_string()))?;
        std::fs::write(dir.join("report.json"), text)?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report) {
                Ok(s) => println!("{s}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            if report.verdict.is_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
