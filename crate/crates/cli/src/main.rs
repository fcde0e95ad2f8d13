//! `dioph`: batch experiments over the dioph-core library.
//!
//! Exit codes: 0 pass, 2 invariant violation, 3 budget exceeded, 4 bad
//! configuration or usage.

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_box, EpsSchedule, ExperimentConfig};

pub const EXIT_VIOLATION: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn violation(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VIOLATION,
            message: msg.into(),
        }
    }

    pub fn output(e: impl fmt::Display) -> Self {
        Failure::config(format!("cannot write output: {e}"))
    }
}

impl From<dioph_core::Error> for Failure {
    fn from(e: dioph_core::Error) -> Self {
        use dioph_core::Error::*;
        let code = match e {
            Budget { .. } => EXIT_BUDGET,
            InvalidArgument(_) | Domain { .. } | Unsupported(_) => EXIT_CONFIG,
            _ => EXIT_VIOLATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "dioph", version, about = "Rational points near manifolds: arcs, counts and exponents")]
struct Cli {
    /// Worker threads (default: DIOPH_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the tube and split the count across major/minor arcs.
    Count(Common),
    /// Classify a grid, estimate the minor measure and audit the inclusion.
    Arcs {
        #[command(flatten)]
        common: Common,
        /// Skip the inclusion audit.
        #[arg(long)]
        no_audit: bool,
    },
    /// Conjugation identities, Mahler bounds and dual checks.
    Identities(Common),
    /// Spectrum constants and the exponent window.
    Spectrum(Common),
    /// Classify a series built from ψ(q) = c q^{-τ} (log q)^{-β}.
    Series(Common),
    /// Estimate the simultaneous approximation exponent of (x, …, xⁿ).
    Exponent(Common),
}

#[derive(Args, Default)]
struct Common {
    /// TOML or JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for JSON/CSV artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// veronese:N, circle:R[,margin] or mixed:D,N.
    #[arg(long)]
    chart: Option<String>,
    /// lo,hi per axis, axes separated by ';'.
    #[arg(long = "box")]
    bbox: Option<String>,
    /// Fixed ε.
    #[arg(long, conflicts_with = "eps_exp")]
    eps: Option<f64>,
    /// ε = e^{-ct}.
    #[arg(long)]
    eps_exp: Option<f64>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    #[arg(long)]
    spacing_div: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// khintchine, hausdorff or minor.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// A number, sqrt(k) or liouville.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    q_max: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let eps = match (self.eps, self.eps_exp) {
            (Some(e), _) => Some(EpsSchedule::Fixed(e)),
            (None, Some(c)) => Some(EpsSchedule::Exp(c)),
            _ => None,
        };
        let flags = ExperimentConfig {
            chart: self.chart.clone().map(config::ChartField::Short),
            bbox: self.bbox.as_deref().map(parse_box).transpose()?,
            eps,
            t: self.t.clone(),
            spacing_div: self.spacing_div,
            seed: self.seed,
            samples: self.samples,
            n: self.n,
            d: self.d,
            l: self.l,
            tau: self.tau,
            beta: self.beta,
            c: self.c,
            kind: self.kind.clone(),
            s: self.s,
            alpha: self.alpha,
            x: self.x.clone(),
            q_max: self.q_max,
            out_dir: self.out_dir.clone(),
        };
        Ok(base.overlay(flags))
    }
}

fn workers(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("DIOPH_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::config(format!("DIOPH_WORKERS={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(k) = workers(cli.workers)? {
        if k == 0 {
            return Err(Failure::config("worker count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    match cli.command {
        Command::Count(c) => commands::count(&c.resolve()?),
        Command::Arcs { common, no_audit } => commands::arcs(&common.resolve()?, !no_audit),
        Command::Identities(c) => commands::identities(&c.resolve()?),
        Command::Spectrum(c) => commands::spectrum(&c.resolve()?),
        Command::Series(c) => commands::series(&c.resolve()?),
        Command::Exponent(c) => commands::exponent(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dioph: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
