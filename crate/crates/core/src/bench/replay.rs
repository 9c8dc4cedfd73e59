use std::fs::File;
use std::io::BufReader;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::cspace::{Configuration, Metric};
use crate::error::Error;
use crate::replanners::ReplanStatus;
use crate::scene::{CollisionChecker, Scene, SceneSnapshot};
use crate::trace::{read_trace, Outcome, TraceError, TraceLine, TraceRecord};

use super::{ReplanTimeStats, RunStatistics};

/// Slack on abscissa monotonicity, for projection round-off.
const ABSCISSA_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("trace has no header record")]
    MissingHeader,
    #[error("trace header: {0}")]
    Header(Error),
}

/// What the run itself reported in its outcome line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordedOutcome {
    pub outcome: Outcome,
    pub traversed_length: f64,
    pub collision_count: u32,
}

/// Post-hoc checks of an execution trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Edge checks between consecutive ticks use the recorded resolution
    /// divided by this.
    pub refinement: u32,
    pub ticks: usize,
    pub snapshots: usize,
    /// Command times of ticks whose configuration collides.
    pub colliding_ticks: Vec<f64>,
    /// Command times of ticks whose motion from the previous tick collides.
    pub colliding_motions: Vec<f64>,
    /// Largest metric step between consecutive ticks.
    pub max_step: f64,
    pub swap_start_mismatches: usize,
    pub swaps_without_new_path: usize,
    pub incoherent_ticks: usize,
    pub abscissa_regressions: usize,
    pub unordered_lines: usize,
}

impl AuditReport {
    /// Ticks at which the robot or its last motion was in collision.
    pub fn collisions(&self) -> usize {
        let mut times: Vec<f64> = self.colliding_ticks.iter().chain(&self.colliding_motions).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.len()
    }

    /// The structural properties every trace must have.
    pub fn architecture_ok(&self) -> bool {
        self.swap_start_mismatches == 0
            && self.swaps_without_new_path == 0
            && self.incoherent_ticks == 0
            && self.abscissa_regressions == 0
            && self.unordered_lines == 0
    }

    pub fn clean(&self) -> bool {
        self.collisions() == 0 && self.architecture_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub scenario: String,
    pub replanner: String,
    /// Statistics recomputed from the trace alone.
    pub statistics: RunStatistics,
    pub recorded: Option<RecordedOutcome>,
    /// `|recomputed - recorded|` traversed length.
    pub traversed_length_error: Option<f64>,
    pub audit: AuditReport,
}

impl ReplayReport {
    /// Complete trace whose recorded figures match the recomputed ones.
    pub fn consistent(&self) -> bool {
        match (&self.recorded, self.traversed_length_error) {
            (Some(r), Some(err)) => err <= 1e-9 && Some(r.outcome) == self.statistics.outcome,
            _ => false,
        }
    }
}

struct Header {
    scenario: String,
    replanner: String,
    seed: u64,
    metric: Metric,
    checker: CollisionChecker,
    initial_path: Vec<Configuration>,
}

fn header(lines: &[TraceLine], refinement: u32) -> Result<Header, ReplayError> {
    let first = lines.first().ok_or(ReplayError::MissingHeader)?;
    let TraceRecord::Header {
        scenario,
        seed,
        replanner,
        robot,
        metric,
        resolution,
        initial_path,
        ..
    } = &first.record
    else {
        return Err(ReplayError::MissingHeader);
    };
    let checker = CollisionChecker::new(robot.clone(), metric.clone(), resolution / f64::from(refinement.max(1)))
        .map_err(ReplayError::Header)?;
    Ok(Header {
        scenario: scenario.clone(),
        replanner: replanner.clone(),
        seed: *seed,
        metric: metric.clone(),
        checker,
        initial_path: initial_path.clone(),
    })
}

/// Audits `lines` against the snapshots recorded in them: each tick is
/// checked against the latest snapshot captured no later than its command
/// time (the first snapshot for ticks before any), and so is the motion
/// from the previous tick, at `refinement` times the recorded resolution.
pub fn audit(lines: &[TraceLine], refinement: u32) -> Result<AuditReport, ReplayError> {
    let mut snapshots: Vec<SceneSnapshot> = lines
        .iter()
        .filter_map(|l| match &l.record {
            TraceRecord::Snapshot {
                version,
                capture_time,
                obstacles,
            } => Some(SceneSnapshot {
                capture_time: *capture_time,
                version: *version,
                obstacles: obstacles.clone(),
            }),
            _ => None,
        })
        .collect();
    snapshots.sort_by(|a, b| a.capture_time.total_cmp(&b.capture_time));
    let empty = SceneSnapshot::empty();
    let mut report = audit_with(lines, refinement, |t| {
        let k = snapshots.partition_point(|s| s.capture_time <= t);
        snapshots.get(k.saturating_sub(1)).unwrap_or(&empty).clone()
    })?;
    report.snapshots = snapshots.len();
    Ok(report)
}

/// Like [`audit`], but against the true state of `scene` at every command time.
pub fn audit_against(lines: &[TraceLine], refinement: u32, scene: &Scene) -> Result<AuditReport, ReplayError> {
    audit_with(lines, refinement, |t| scene.world_at(t, 0))
}

fn audit_with(
    lines: &[TraceLine],
    refinement: u32,
    mut world_at: impl FnMut(f64) -> SceneSnapshot,
) -> Result<AuditReport, ReplayError> {
    let head = header(lines, refinement)?;
    let checker = &head.checker;
    let mut report = AuditReport {
        refinement,
        ..AuditReport::default()
    };
    let mut last_t = f64::NEG_INFINITY;
    let mut prev: Option<(&Configuration, f64, u64)> = None;
    let mut unclaimed_new_paths = 0usize;
    for line in lines {
        if line.t < last_t {
            report.unordered_lines += 1;
        }
        last_t = last_t.max(line.t);
        match &line.record {
            TraceRecord::Tick {
                at,
                q,
                s,
                path_version,
                coherent,
                ..
            } => {
                report.ticks += 1;
                let snap = world_at(*at);
                if !checker.check_configuration(&snap, q).unwrap_or(false) {
                    report.colliding_ticks.push(*at);
                }
                if !coherent {
                    report.incoherent_ticks += 1;
                }
                if let Some((q_prev, s_prev, v_prev)) = prev {
                    report.max_step = report.max_step.max(head.metric.distance(q_prev, q));
                    if !checker.check_edge(&snap, q_prev, q) {
                        report.colliding_motions.push(*at);
                    }
                    if v_prev == *path_version && *s < s_prev - ABSCISSA_SLACK {
                        report.abscissa_regressions += 1;
                    }
                }
                prev = Some((q, *s, *path_version));
            }
            TraceRecord::Replan { status, .. } if *status == ReplanStatus::NewPath => unclaimed_new_paths += 1,
            TraceRecord::PathSwap { x_curr, nodes, .. } => {
                if unclaimed_new_paths == 0 {
                    report.swaps_without_new_path += 1;
                } else {
                    unclaimed_new_paths -= 1;
                }
                if nodes.first() != Some(x_curr) {
                    report.swap_start_mismatches += 1;
                }
            }
            _ => {}
        }
    }
    Ok(report)
}

fn polyline_cost(metric: &Metric, nodes: &[Configuration]) -> f64 {
    nodes.windows(2).map(|w| metric.distance(&w[0], &w[1])).sum()
}

/// Recomputes statistics from a trace and audits it.
pub fn replay(lines: &[TraceLine], refinement: u32) -> Result<ReplayReport, ReplayError> {
    let head = header(lines, refinement)?;
    let audit = audit(lines, refinement)?;
    let mut traversed = 0.0;
    let mut prev: Option<&Configuration> = None;
    let mut replan_times = Vec::new();
    let mut new_paths = 0;
    let mut final_nodes: &[Configuration] = &head.initial_path;
    let mut recorded = None;
    for line in lines {
        match &line.record {
            TraceRecord::Tick { q, .. } => {
                if let Some(p) = prev {
                    traversed += head.metric.distance(p, q);
                }
                prev = Some(q);
            }
            TraceRecord::Replan { elapsed, status, .. } => {
                replan_times.push(*elapsed);
                new_paths += usize::from(*status == ReplanStatus::NewPath);
            }
            TraceRecord::PathSwap { nodes, .. } => final_nodes = nodes,
            TraceRecord::Outcome {
                outcome,
                traversed_length,
                collision_count,
            } => {
                recorded = Some(RecordedOutcome {
                    outcome: *outcome,
                    traversed_length: *traversed_length,
                    collision_count: *collision_count,
                })
            }
            _ => {}
        }
    }
    let statistics = RunStatistics {
        seed: head.seed,
        outcome: recorded.map(|r| r.outcome),
        success: recorded.is_some_and(|r| r.outcome.is_success()),
        replan_time: ReplanTimeStats::from_samples(&replan_times),
        new_paths,
        traversed_length: traversed,
        collision_count: recorded.map_or(0, |r| r.collision_count),
        audited_collisions: Some(audit.collisions()),
        path_cost_final: Some(polyline_cost(&head.metric, final_nodes)),
        wall_time: lines.last().map_or(0.0, |l| l.t),
        error: None,
    };
    Ok(ReplayReport {
        scenario: head.scenario,
        replanner: head.replanner,
        traversed_length_error: recorded.map(|r| (r.traversed_length - traversed).abs()),
        recorded,
        statistics,
        audit,
    })
}

pub fn replay_file(path: impl AsRef<FsPath>, refinement: u32) -> Result<ReplayReport, ReplayError> {
    let file = File::open(path).map_err(TraceError::Io)?;
    let lines = read_trace(BufReader::new(file))?;
    replay(&lines, refinement)
}
