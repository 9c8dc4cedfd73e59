use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use replankit::bench::{self, load_scenario, Overrides, RunStatistics, Scenario};
use replankit::manager::{ExecutionReport, Mode};
use replankit::replanners::Registry;
use replankit::trace::{JsonlSink, NullSink, TraceSink};

const CONFIG_ERROR: u8 = 2;
const EXECUTION_FAILURE: u8 = 1;

#[derive(Parser)]
#[command(version, about = "Run, benchmark and audit path replanning scenarios")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Verbosity::Info, global = true)]
    verbosity: Verbosity,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, PartialOrd, ValueEnum)]
enum Verbosity {
    Quiet,
    Info,
    Debug,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Threaded,
    Deterministic,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario once.
    Run {
        #[command(flatten)]
        common: Common,
        /// Trace file (line-delimited JSON).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Execute a scenario repeatedly with consecutive seeds and aggregate.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Directory receiving one trace per run.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Recompute statistics from a trace and audit it for collisions.
    Replay {
        trace: PathBuf,
        /// Audit edge resolution is the recorded one divided by this.
        #[arg(long, default_value_t = 10)]
        refinement: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load-check a scenario file.
    Validate { scenario: PathBuf },
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    replanner: Option<String>,
    #[arg(long)]
    max_replan_time: Option<f64>,
    #[arg(long)]
    dt_repl: Option<f64>,
    /// JSON report file.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn scenario(&self, registry: &Registry) -> Result<Scenario, String> {
        let overrides = Overrides {
            seed: self.seed,
            mode: self.mode.map(|m| match m {
                ModeArg::Threaded => Mode::Threaded,
                ModeArg::Deterministic => Mode::Deterministic,
            }),
            replanner: self.replanner.clone(),
            max_replanning_time: self.max_replan_time,
            dt_repl: self.dt_repl,
        };
        load_scenario(&self.scenario)
            .and_then(|s| s.with_overrides(&overrides, registry))
            .map_err(|e| format!("{}: {e}", self.scenario.display()))
    }
}

fn write_json(path: &PathBuf, value: &impl Serialize) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct RunOutput<'a> {
    statistics: RunStatistics,
    report: &'a ExecutionReport,
}

fn run(cli_verbosity: Verbosity, common: &Common, trace: Option<&PathBuf>) -> Result<u8, (u8, String)> {
    let registry = Registry::default();
    let scenario = common.scenario(&registry).map_err(|e| (CONFIG_ERROR, e))?;
    let seed = scenario.seed;
    let mut file_sink = match trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| (CONFIG_ERROR, format!("{}: {e}", path.display())))?;
            Some(JsonlSink::new(BufWriter::new(file)))
        }
        None => None,
    };
    let sink: &mut dyn TraceSink = match &mut file_sink {
        Some(s) => s,
        None => &mut NullSink,
    };
    let report = bench::run_scenario(&scenario, seed, &registry, sink).map_err(|e| (EXECUTION_FAILURE, e.to_string()))?;
    if let Some(s) = file_sink {
        s.into_inner().flush().map_err(|e| (EXECUTION_FAILURE, e.to_string()))?;
    }
    let statistics = RunStatistics::from_report(seed, &report);
    if cli_verbosity >= Verbosity::Debug {
        for e in &report.replan_events {
            println!(
                "t={:.3} replan started {:.3} took {:.4}s -> {}",
                e.t, e.started, e.elapsed, e.status
            );
        }
    }
    if cli_verbosity >= Verbosity::Info {
        println!(
            "{} seed {}: {:?} after {:.3}s, traversed {:.4}, {} replans ({} new paths), {} collisions",
            scenario.name,
            seed,
            report.outcome,
            report.wall_time,
            report.traversed_length,
            statistics.replan_time.count,
            statistics.new_paths,
            report.collision_count
        );
    }
    if let Some(out) = &common.out {
        write_json(out, &RunOutput {
            statistics,
            report: &report,
        })
        .map_err(|e| (EXECUTION_FAILURE, e))?;
    }
    Ok(if report.outcome.is_success() { 0 } else { EXECUTION_FAILURE })
}

fn bench(verbosity: Verbosity, common: &Common, repetitions: usize, trace: Option<&PathBuf>) -> Result<u8, (u8, String)> {
    let registry = Registry::default();
    let scenario = common.scenario(&registry).map_err(|e| (CONFIG_ERROR, e))?;
    let report = bench::run_benchmark(&scenario, repetitions, &registry, trace.map(PathBuf::as_path))
        .map_err(|e| (CONFIG_ERROR, e.to_string()))?;
    if verbosity >= Verbosity::Debug {
        for row in &report.rows {
            println!(
                "seed {}: {:?} traversed {:.4} replans {} audited collisions {:?}{}",
                row.seed,
                row.outcome,
                row.traversed_length,
                row.replan_time.count,
                row.audited_collisions,
                row.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default()
            );
        }
    }
    if verbosity >= Verbosity::Info {
        let s = &report.summary;
        println!(
            "{} with {} x{}: success {:.1}%, traversed {:.4} ± {:.4}, replan time {:.4} ± {:.4} s (max {:.4})",
            report.scenario,
            report.replanner,
            report.repetitions,
            100.0 * s.success_rate,
            s.traversed_length.mean,
            s.traversed_length.std,
            s.replan_time.mean,
            s.replan_time.std,
            s.replan_time_max
        );
    }
    if let Some(out) = &common.out {
        write_json(out, &report).map_err(|e| (EXECUTION_FAILURE, e))?;
    }
    Ok(if report.summary.success_rate == 1.0 { 0 } else { EXECUTION_FAILURE })
}

fn replay(verbosity: Verbosity, trace: &PathBuf, refinement: u32, out: Option<&PathBuf>) -> Result<u8, (u8, String)> {
    let report = bench::replay_file(trace, refinement).map_err(|e| (CONFIG_ERROR, format!("{}: {e}", trace.display())))?;
    let a = &report.audit;
    if verbosity >= Verbosity::Debug {
        for t in &a.colliding_ticks {
            println!("collision at t={t}");
        }
        for t in &a.colliding_motions {
            println!("colliding motion ending at t={t}");
        }
    }
    if verbosity >= Verbosity::Info {
        println!(
            "{} ({}): {:?}, traversed {:.6} (recorded error {:?}), {} ticks, {} audited collisions, architecture {}",
            report.scenario,
            report.replanner,
            report.statistics.outcome,
            report.statistics.traversed_length,
            report.traversed_length_error,
            a.ticks,
            a.collisions(),
            if a.architecture_ok() { "ok" } else { "VIOLATED" }
        );
    }
    if let Some(out) = out {
        write_json(out, &report).map_err(|e| (EXECUTION_FAILURE, e))?;
    }
    Ok(if a.clean() && report.consistent() { 0 } else { EXECUTION_FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let v = cli.verbosity;
    let result = match &cli.command {
        Command::Run { common, trace } => run(v, common, trace.as_ref()),
        Command::Bench {
            common,
            repetitions,
            trace,
        } => bench(v, common, *repetitions, trace.as_ref()),
        Command::Replay { trace, refinement, out } => replay(v, trace, *refinement, out.as_ref()),
        Command::Validate { scenario } => load_scenario(scenario)
            .map(|s| {
                if v >= Verbosity::Info {
                    println!("{}: ok ({} obstacles, replanner {})", s.name, s.obstacles.len(), s.replanner.name);
                }
                0
            })
            .map_err(|e| (CONFIG_ERROR, format!("{}: {e}", scenario.display()))),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
