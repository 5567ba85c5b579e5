use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use w_expander::bounds;
use w_expander::circuit::{build_hm, build_lossy, build_optimal, compile, CircuitSpec};
use w_expander::expansion::{verify_exact_w, WExpansionProblem};
use w_expander::optimizer::{maximize_h, SearchConfig};
use w_expander::{Error, STATE_TOL};

mod verify;

#[derive(Parser, Debug)]
#[command(
    name = "w-expander",
    version,
    about = "Linear-optical W-state expansion toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build one of the reference circuits and write it as JSON.
    Build {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Number of ancilla photons.
        #[arg(short = 'n')]
        n: usize,
        /// Number of outputs on the transmitted arm (hm only).
        #[arg(short = 'm')]
        m: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Evaluate a circuit file. Exits 3 when it is not an exact expander.
    Eval {
        #[arg(short = 'c')]
        circuit: PathBuf,
        /// Photons in the initial W state.
        #[arg(short = 'N', default_value_t = 2)]
        w_photons: usize,
        #[arg(long, default_value_t = STATE_TOL)]
        tol: f64,
    },
    /// Tabulate P_max, P_lossy, H_1 and H_lossy over (n, N).
    Scan {
        #[arg(long = "n-max")]
        n_max: usize,
        #[arg(long = "N-max")]
        w_max: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Numerically maximize H over the coupling region.
    Optimize {
        #[arg(short = 'n')]
        n: usize,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the per-restart trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the verification suites. Exits 3 if any check fails.
    Verify {
        /// Largest n for the closed-form sweeps.
        #[arg(long = "n-max", default_value_t = 20)]
        n_max: usize,
        /// Largest n for checks that evaluate circuits photon by photon.
        #[arg(short = 'n', long = "engine-n-max", default_value_t = 6)]
        engine_n_max: usize,
        #[arg(long, hide = true)]
        tamper: bool,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Optimal,
    Hm,
    Lossy,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Failure carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const EXIT_USAGE: u8 = 2;
const EXIT_NEGATIVE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: anyhow::anyhow!(msg.into()),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Validation(_) | Error::Domain(_) => EXIT_USAGE,
            Error::Dimension(_) => EXIT_NUMERIC,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            error,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            error: e.into(),
        }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn print_json<T: Serialize>(value: &T) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

fn cmd_build(kind: Kind, n: usize, m: Option<usize>, output: Option<PathBuf>) -> CmdResult {
    let spec = match (kind, m) {
        (Kind::Hm, Some(m)) => build_hm(n, m)?,
        (Kind::Hm, None) => return Err(usage("--kind hm requires -m")),
        (_, Some(_)) => return Err(usage("-m is only valid with --kind hm")),
        (Kind::Optimal, None) => build_optimal(n)?,
        (Kind::Lossy, None) => build_lossy(n)?,
    };
    let json = spec.to_json();
    match output {
        Some(path) => {
            fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            print!("{}", spec.element_table());
        }
        None => {
            println!("{json}");
            eprint!("{}", spec.element_table());
        }
    }
    Ok(0)
}

fn cmd_eval(path: PathBuf, w_photons: usize, tol: f64) -> CmdResult {
    let text = fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let spec = CircuitSpec::from_json(&text)?;
    let problem = WExpansionProblem::new(w_photons, compile(&spec)?)?;
    let report = verify_exact_w(&problem, tol)?;
    print_json(&report)?;
    if report.exact_w {
        Ok(0)
    } else {
        for v in &report.violations {
            eprintln!(
                "violation {:?} at {}: {:.3e}",
                v.condition, v.location, v.magnitude
            );
        }
        Ok(EXIT_NEGATIVE)
    }
}

#[derive(Debug, Serialize)]
struct ScanRow {
    n: usize,
    #[serde(rename = "N")]
    w_photons: usize,
    #[serde(rename = "P_max")]
    p_max: f64,
    #[serde(rename = "P_lossy")]
    p_lossy: f64,
    #[serde(rename = "H_1")]
    h_1: f64,
    #[serde(rename = "H_lossy")]
    h_lossy: f64,
}

fn scan_rows(n_max: usize, w_max: usize) -> w_expander::Result<Vec<ScanRow>> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let (h_1, h_lossy) = (bounds::h1(n)?, bounds::h_lossy(n)?);
        for w in 2..=w_max {
            rows.push(ScanRow {
                n,
                w_photons: w,
                p_max: bounds::p_max(n, w)?,
                p_lossy: bounds::p_lossy(n, w)?,
                h_1,
                h_lossy,
            });
        }
    }
    Ok(rows)
}

fn cmd_scan(n_max: usize, w_max: usize, format: Format) -> CmdResult {
    if n_max < 1 || w_max < 1 {
        return Err(usage("--n-max and --N-max must be >= 1"));
    }
    let rows = scan_rows(n_max, w_max)?;
    match format {
        Format::Json => print_json(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            for row in &rows {
                w.serialize(row).context("writing csv")?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

fn cmd_optimize(
    n: usize,
    restarts: Option<usize>,
    seed: Option<u64>,
    trace: Option<PathBuf>,
) -> CmdResult {
    let mut cfg = SearchConfig::default();
    if let Some(r) = restarts {
        cfg.restarts = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = maximize_h(n, &cfg)?;
    if !result.converged {
        log::warn!("best restart did not meet the simplex tolerances");
    }
    if let Some(path) = trace {
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(["restart", "iterations", "H"])
            .context("writing trace")?;
        for t in &result.trace {
            w.write_record([
                t.restart.to_string(),
                t.iterations.to_string(),
                format!("{:e}", t.value),
            ])
            .context("writing trace")?;
        }
        w.flush()?;
    }
    print_json(&result)?;
    Ok(0)
}

fn cmd_verify(n_max: usize, engine_n_max: usize, tamper: bool) -> CmdResult {
    if n_max < 1 || engine_n_max < 1 {
        return Err(usage("--n-max and --engine-n-max must be >= 1"));
    }
    let report = verify::run(n_max, engine_n_max, tamper)?;
    print_json(&report)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    Ok(if report.all_passed { 0 } else { EXIT_NEGATIVE })
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("W_EXPANDER_THREADS") {
        let threads: usize = value.parse().with_context(|| {
            format!("W_EXPANDER_THREADS must be a positive integer, got {value:?}")
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    let outcome = match cli.command {
        Command::Build { kind, n, m, output } => cmd_build(kind, n, m, output),
        Command::Eval {
            circuit,
            w_photons,
            tol,
        } => cmd_eval(circuit, w_photons, tol),
        Command::Scan {
            n_max,
            w_max,
            format,
        } => cmd_scan(n_max, w_max, format),
        Command::Optimize {
            n,
            restarts,
            seed,
            trace,
        } => cmd_optimize(n, restarts, seed, trace),
        Command::Verify {
            n_max,
            engine_n_max,
            tamper,
        } => cmd_verify(n_max, engine_n_max, tamper),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
