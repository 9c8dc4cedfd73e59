//! Scenario files, single runs, seeded batches with statistics, and trace
//! replay with a post-hoc collision audit.

mod replay;
mod scenario;

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manager::{header_record, ExecutionReport, Manager, Mode};
use crate::replanners::{Registry, ReplanStatus, ReplannerContext};
use crate::trace::{JsonlSink, MemorySink, Outcome, Tee, TraceLine, TraceSink};

pub use replay::{audit, audit_against, replay, replay_file, AuditReport, RecordedOutcome, ReplayError, ReplayReport};
pub use scenario::{
    load_scenario, spawn_random_obstacles, BoundsSpec, ReplannerSpec, RobotSpec, Scenario, ScenarioError, SpawnShape,
    SpawnerSpec, MAX_SPAWN_ATTEMPTS, SCENARIO_SCHEMA_VERSION,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Command-line style overrides applied on top of a loaded scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub replanner: Option<String>,
    pub max_replanning_time: Option<f64>,
    pub dt_repl: Option<f64>,
}

impl Scenario {
    pub fn with_overrides(mut self, o: &Overrides, registry: &Registry) -> Result<Scenario, ScenarioError> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(mode) = o.mode {
            self.manager.mode = mode;
        }
        if let Some(name) = &o.replanner {
            registry.check(name).map_err(|source| ScenarioError::Invalid {
                field: "replanner.name".into(),
                source,
            })?;
            self.replanner.name = name.clone();
        }
        if let Some(t) = o.max_replanning_time {
            self.manager.max_replanning_time = t;
        }
        if o.dt_repl.is_some() {
            self.manager.dt_repl = o.dt_repl;
        }
        self.manager.validate().map_err(|source| ScenarioError::Invalid {
            field: "manager".into(),
            source,
        })?;
        Ok(self)
    }
}

/// Runs `scenario` once with `seed`, writing the trace to `sink`.
pub fn run_scenario(scenario: &Scenario, seed: u64, registry: &Registry, sink: &mut dyn TraceSink) -> Result<ExecutionReport> {
    let mut problem = scenario.problem(seed);
    let path = scenario.initial_path(&mut problem)?;
    let scene = scenario.scene(seed, &path)?;
    let ctx = ReplannerContext::for_problem(&problem, seed);
    let replanner = registry.create(&scenario.replanner.name, ctx, &scenario.replanner.params)?;
    let manager = Manager::new(problem, scenario.solver.clone(), scenario.manager.clone())?;
    let header = header_record(&scenario.name, seed, &scenario.replanner.name, &manager, &path);
    sink.emit(&TraceLine::new(0.0, header)).map_err(|e| Error::Trace(e.to_string()))?;
    manager.run(path, replanner, scene, sink)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplanTimeStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub count: usize,
}

impl ReplanTimeStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let MeanStd { mean, std } = MeanStd::of(samples);
        Self {
            mean,
            std,
            max: samples.iter().copied().fold(0.0, f64::max),
            count: samples.len(),
        }
    }
}

/// Population mean and standard deviation; zeros for no samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// One row of a benchmark: what a single execution measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub seed: u64,
    /// Absent when the run crashed or could not start.
    pub outcome: Option<Outcome>,
    pub success: bool,
    pub replan_time: ReplanTimeStats,
    pub new_paths: usize,
    pub traversed_length: f64,
    pub collision_count: u32,
    /// Collisions found by the post-hoc audit of the trace.
    pub audited_collisions: Option<usize>,
    /// `None` when infinite or unknown.
    pub path_cost_final: Option<f64>,
    pub wall_time: f64,
    pub error: Option<String>,
}

impl RunStatistics {
    pub fn from_report(seed: u64, report: &ExecutionReport) -> Self {
        let times: Vec<f64> = report.replan_events.iter().map(|e| e.elapsed).collect();
        Self {
            seed,
            outcome: Some(report.outcome),
            success: report.outcome.is_success(),
            replan_time: ReplanTimeStats::from_samples(&times),
            new_paths: report
                .replan_events
                .iter()
                .filter(|e| e.status == ReplanStatus::NewPath)
                .count(),
            traversed_length: report.traversed_length,
            collision_count: report.collision_count,
            audited_collisions: None,
            path_cost_final: Some(report.final_path_cost).filter(|c| c.is_finite()),
            wall_time: report.wall_time,
            error: None,
        }
    }

    pub fn failed(seed: u64, error: String) -> Self {
        Self {
            seed,
            outcome: None,
            success: false,
            replan_time: ReplanTimeStats::default(),
            new_paths: 0,
            traversed_length: 0.0,
            collision_count: 0,
            audited_collisions: None,
            path_cost_final: None,
            wall_time: 0.0,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub success_rate: f64,
    pub traversed_length: MeanStd,
    /// Over every replan event of every run.
    pub replan_time: MeanStd,
    pub replan_time_max: f64,
    pub collision_count: u64,
    pub audited_collisions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub scenario: String,
    pub replanner: String,
    pub mode: Mode,
    pub seed_base: u64,
    pub repetitions: usize,
    pub rows: Vec<RunStatistics>,
    pub summary: BenchSummary,
}

impl BenchReport {
    fn summarize(rows: &[RunStatistics], replan_times: &[f64]) -> BenchSummary {
        let lengths: Vec<f64> = rows.iter().filter(|r| r.outcome.is_some()).map(|r| r.traversed_length).collect();
        BenchSummary {
            success_rate: rows.iter().filter(|r| r.success).count() as f64 / rows.len() as f64,
            traversed_length: MeanStd::of(&lengths),
            replan_time: MeanStd::of(replan_times),
            replan_time_max: replan_times.iter().copied().fold(0.0, f64::max),
            collision_count: rows.iter().map(|r| u64::from(r.collision_count)).sum(),
            audited_collisions: rows.iter().filter_map(|r| r.audited_collisions).map(|c| c as u64).sum(),
        }
    }
}

/// Runs with seeds `seed`, `seed + 1`, … and also audits every trace. A run
/// that errors or panics becomes a failure row; the batch carries on. With
/// `trace_dir`, each run's trace goes to `<scenario>-<seed>.jsonl` there.
pub fn run_benchmark(
    scenario: &Scenario,
    repetitions: usize,
    registry: &Registry,
    trace_dir: Option<&FsPath>,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter {
            name: "repetitions",
            reason: "must be at least 1".into(),
        });
    }
    if let Some(dir) = trace_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Trace(e.to_string()))?;
    }
    let mut rows = Vec::with_capacity(repetitions);
    let mut replan_times = Vec::new();
    for k in 0..repetitions {
        let seed = scenario.seed.wrapping_add(k as u64);
        let attempt = panic::catch_unwind(AssertUnwindSafe(|| run_one(scenario, seed, registry, trace_dir)));
        let row = match attempt {
            Ok(Ok((row, times))) => {
                replan_times.extend(times);
                row
            }
            Ok(Err(e)) => RunStatistics::failed(seed, e.to_string()),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                RunStatistics::failed(seed, format!("run panicked: {msg}"))
            }
        };
        rows.push(row);
    }
    let summary = BenchReport::summarize(&rows, &replan_times);
    Ok(BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        replanner: scenario.replanner.name.clone(),
        mode: scenario.manager.mode,
        seed_base: scenario.seed,
        repetitions,
        rows,
        summary,
    })
}

fn run_one(
    scenario: &Scenario,
    seed: u64,
    registry: &Registry,
    trace_dir: Option<&FsPath>,
) -> Result<(RunStatistics, Vec<f64>)> {
    let mut memory = MemorySink::default();
    let report = match trace_dir {
        Some(dir) => {
            let path = dir.join(format!("{}-{seed}.jsonl", scenario.name));
            let file = File::create(&path).map_err(|e| Error::Trace(format!("{}: {e}", path.display())))?;
            let mut file = JsonlSink::new(BufWriter::new(file));
            let report = run_scenario(scenario, seed, registry, &mut Tee(&mut memory, &mut file));
            io::Write::flush(&mut file.into_inner()).map_err(|e| Error::Trace(e.to_string()))?;
            report?
        }
        None => run_scenario(scenario, seed, registry, &mut memory)?,
    };
    let mut row = RunStatistics::from_report(seed, &report);
    let audit = audit(&memory.lines, 10).map_err(|e| Error::Trace(e.to_string()))?;
    row.audited_collisions = Some(audit.collisions());
    Ok((row, report.replan_events.iter().map(|e| e.elapsed).collect()))
}
