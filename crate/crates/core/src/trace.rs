//! Line-delimited JSON execution traces.
//!
//! Every line is one [`TraceLine`]: a schema version, a timestamp and a
//! record tagged by `kind`. Floats are written in shortest round-trip form,
//! so parsing a trace gives back bit-identical values. Infinite costs are
//! written as `null`.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cspace::{Configuration, Metric};
use crate::replanners::ReplanStatus;
use crate::scene::{PlacedObstacle, RobotModel};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    GoalReached,
    SafetyStopped,
    Collided,
    Aborted,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::GoalReached
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Obstruction within the stop distance after a failed replan.
    ReplanFailed,
    /// Obstruction about to enter the braking distance.
    Emergency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    /// First line: what is needed to audit the rest.
    Header {
        scenario: String,
        seed: u64,
        replanner: String,
        mode: String,
        robot: RobotModel,
        metric: Metric,
        resolution: f64,
        start: Configuration,
        goal: Configuration,
        initial_path: Vec<Configuration>,
        exec_period: f64,
        max_replanning_time: f64,
        v_max: f64,
        a_max: f64,
    },
    /// One command of the execution loop.
    Tick {
        /// Time the command applies to; equals the line time in deterministic mode.
        at: f64,
        q: Configuration,
        qdot: Vec<f64>,
        /// Abscissa of the projection on the current path.
        s: f64,
        speed: f64,
        path_version: u64,
        /// Whether the trajectory sampled runs on the current path.
        coherent: bool,
    },
    Snapshot {
        version: u64,
        capture_time: f64,
        obstacles: Vec<PlacedObstacle>,
    },
    Replan {
        /// Time the replanner was called.
        started: f64,
        elapsed: f64,
        status: ReplanStatus,
        /// Cost of the new path, if one was found.
        cost: Option<f64>,
    },
    PathSwap {
        version: u64,
        /// Robot configuration read at upload time.
        x_curr: Configuration,
        nodes: Vec<Configuration>,
    },
    SafetyStop {
        s: f64,
        speed: f64,
        reason: StopReason,
    },
    Outcome {
        outcome: Outcome,
        traversed_length: f64,
        collision_count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub v: u32,
    pub t: f64,
    #[serde(flatten)]
    pub record: TraceRecord,
}

impl TraceLine {
    pub fn new(t: f64, record: TraceRecord) -> Self {
        Self {
            v: TRACE_SCHEMA_VERSION,
            t,
            record,
        }
    }
}

/// Destination of trace lines. Each call appends one whole line.
pub trait TraceSink: Send {
    fn emit(&mut self, line: &TraceLine) -> io::Result<()>;
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn emit(&mut self, _: &TraceLine) -> io::Result<()> {
        Ok(())
    }
}

/// Keeps lines in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub lines: Vec<TraceLine>,
}

impl TraceSink for MemorySink {
    fn emit(&mut self, line: &TraceLine) -> io::Result<()> {
        self.lines.push(line.clone());
        Ok(())
    }
}

/// Writes one JSON object per line.
#[derive(Debug)]
pub struct JsonlSink<W> {
    out: W,
}

impl<W: Write + Send> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write + Send> TraceSink for JsonlSink<W> {
    fn emit(&mut self, line: &TraceLine) -> io::Result<()> {
        let mut text = serde_json::to_vec(line).map_err(io::Error::other)?;
        text.push(b'\n');
        self.out.write_all(&text)
    }
}

/// Forwards to two sinks.
pub struct Tee<'a>(pub &'a mut dyn TraceSink, pub &'a mut dyn TraceSink);

impl TraceSink for Tee<'_> {
    fn emit(&mut self, line: &TraceLine) -> io::Result<()> {
        self.0.emit(line)?;
        self.1.emit(line)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("trace line {line}: unsupported schema version {version}")]
    Version { line: usize, version: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses a whole trace.
pub fn read_trace(input: impl BufRead) -> Result<Vec<TraceLine>, TraceError> {
    let mut lines = Vec::new();
    for (i, text) in input.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let line: TraceLine = serde_json::from_str(&text).map_err(|source| TraceError::Parse { line: i + 1, source })?;
        if line.v != TRACE_SCHEMA_VERSION {
            return Err(TraceError::Version {
                line: i + 1,
                version: line.v,
            });
        }
        lines.push(line);
    }
    Ok(lines)
}
