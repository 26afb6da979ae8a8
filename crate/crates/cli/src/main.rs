//! `tauberlab`: scenario configs in, CSV tables and a JSON verdict out.
//!
//! Exit codes: 0 when every invariant holds, 1 when one fails (the report is
//! still written), 2 for usage and config errors.

mod output;
mod run;
mod scenario;

use clap::{Parser, Subcommand};
use output::{write_table, Outcome, Summary};
use run::RunError;
use scenario::{AtomsParams, Backend, Command, ContourParams, DivergenceParams, Scenario, ShiftParams, SuiteParams, WaveParams, WeightsParams};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "tauberlab", version, about = "Numerical checks for quantified Tauberian theorems and semigroup decay rates")]
struct Cli {
    /// Worker threads; falls back to the config file, then TAUBERLAB_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV tables and summary.json.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Evaluator for atom transforms.
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rate functions, their log-corrected inverse and the weighted tail integral.
    Weights(WeightsParams),
    /// Atom blocks and their transform bounds.
    Atoms {
        #[command(subcommand)]
        op: AtomsOp,
    },
    /// Contour reconstruction of an atom block.
    Contour(ContourParams),
    /// The damped wave equation on a finite grid.
    Wave {
        #[command(subcommand)]
        op: WaveOp,
    },
    /// Lacunary counterexample sums.
    Counterexample {
        #[command(subcommand)]
        op: CounterexampleOp,
    },
    /// Runs one registered acceptance suite.
    Suite(SuiteParams),
    /// Runs a scenario config file.
    Run {
        config: PathBuf,
    },
    /// Lists the registered acceptance suites.
    ListSuites,
}

#[derive(Subcommand)]
enum AtomsOp {
    /// Samples one block and fits its four inequalities.
    Verify(AtomsParams),
}

#[derive(Subcommand)]
enum WaveOp {
    /// Resolvent scan, orbit norms and the two-sided rate estimate.
    Sandwich(WaveParams),
    /// Energy balance along a trajectory.
    Energy(WaveParams),
}

#[derive(Subcommand)]
enum CounterexampleOp {
    /// Window bounds and weighted contributions of the divergent sum.
    Divergence(DivergenceParams),
    /// Shift-semigroup orbit bounds and the resolvent envelope.
    Shift(ShiftParams),
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg_threads = None;
    let mut cfg_backend = None;
    let mut cfg_out = None;
    let command = match cli.cmd {
        Cmd::ListSuites => {
            print!("{}", tauberlab::suites::list_suites());
            return ExitCode::SUCCESS;
        }
        Cmd::Weights(p) => Command::Weights(p),
        Cmd::Atoms { op: AtomsOp::Verify(p) } => Command::AtomsVerify(p),
        Cmd::Contour(p) => Command::Contour(p),
        Cmd::Wave { op: WaveOp::Sandwich(p) } => Command::WaveSandwich(p),
        Cmd::Wave { op: WaveOp::Energy(p) } => Command::WaveEnergy(p),
        Cmd::Counterexample { op: CounterexampleOp::Divergence(p) } => Command::CounterexampleDivergence(p),
        Cmd::Counterexample { op: CounterexampleOp::Shift(p) } => Command::CounterexampleShift(p),
        Cmd::Suite(p) => Command::Suite(p),
        Cmd::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return usage(format!("cannot read {}: {e}", config.display())),
            };
            match scenario::parse_config(&text) {
                Ok(r) => {
                    cfg_threads = r.threads;
                    cfg_backend = r.backend;
                    cfg_out = r.out_dir;
                    r.command
                }
                Err(e) => return usage(format!("{}: {e}", config.display())),
            }
        }
    };

    let env_threads = match std::env::var("TAUBERLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => Some(n),
            Err(_) => return usage(format!("TAUBERLAB_THREADS = `{v}` is not a thread count")),
        },
        Err(_) => None,
    };
    if let Some(n) = cli.threads.or(cfg_threads).or(env_threads) {
        if n == 0 {
            return usage("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage(format!("cannot size the thread pool: {e}"));
        }
    }

    let scenario = Scenario {
        command,
        backend: cli.backend.or(cfg_backend).unwrap_or(Backend::Series),
        out_dir: cli.out_dir.or(cfg_out).unwrap_or_else(|| PathBuf::from("tauberlab-out")),
    };
    if let Err(e) = std::fs::create_dir_all(&scenario.out_dir) {
        return usage(format!("cannot create {}: {e}", scenario.out_dir.display()));
    }

    let start = Instant::now();
    let (outcome, error) = match run::run(&scenario) {
        Ok(o) => (o, None),
        Err(RunError::Usage(m)) => return usage(m),
        Err(RunError::Failed(m)) => (Outcome::default(), Some(m)),
    };
    let mut files = vec![];
    for t in &outcome.tables {
        match write_table(&scenario.out_dir, t) {
            Ok(p) => files.push(p.display().to_string()),
            Err(e) => {
                eprintln!("error: writing {}: {e}", t.name);
                return ExitCode::FAILURE;
            }
        }
    }
    let summary = Summary::new(&scenario, &outcome, files, error, start.elapsed().as_secs_f64());
    let path = scenario.out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if let Err(e) = std::fs::write(&path, json + "\n") {
        eprintln!("error: writing {}: {e}", path.display());
        return ExitCode::FAILURE;
    }
    for inv in &summary.invariants {
        println!("{} {}{}", if inv.pass { "ok  " } else { "FAIL" }, inv.name, if inv.detail.is_empty() { String::new() } else { format!(": {}", inv.detail) });
    }
    if let Some(e) = &summary.error {
        println!("FAIL {}: {e}", scenario.command.name());
    }
    println!("summary: {}", path.display());
    if summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
