use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use crate::clock::{Budget, Clock, WallClock};
use crate::cspace::{Configuration, Metric};
use crate::error::Result;
use crate::graph::{NodeIds, Path};
use crate::replanners::{trigger, ReplanOutcome, ReplanRequest, ReplanStatus, Replanner};
use crate::scene::{CollisionChecker, Scene, SceneSnapshot};
use crate::solvers::{PlanningProblem, SolverConfig};
use crate::trace::{Outcome, StopReason, TraceLine, TraceRecord, TraceSink};
use crate::trajectory::{get_replan_conf, RobotState, Trajectory};

use super::{start_path_from_conf, ExecutionReport, ManagerConfig, ReplanEvent};

/// Serializes trace lines from all loops; remembers the first write failure.
/// With a wall clock, lines are stamped at emission under the sink lock, so
/// timestamps never decrease whichever thread writes.
pub(crate) struct Tracer<'s> {
    sink: Mutex<&'s mut dyn TraceSink>,
    clock: Option<&'s WallClock>,
    failed: AtomicBool,
}

impl<'s> Tracer<'s> {
    pub(crate) fn new(sink: &'s mut dyn TraceSink, clock: Option<&'s WallClock>) -> Self {
        Self {
            sink: Mutex::new(sink),
            clock,
            failed: AtomicBool::new(false),
        }
    }

    pub(crate) fn emit(&self, t: f64, record: TraceRecord) {
        let mut sink = self.sink.lock().expect("trace sink lock");
        let t = self.clock.map_or(t, |c| c.now());
        let line = TraceLine::new(t, record);
        if sink.emit(&line).is_err() {
            self.failed.store(true, Ordering::SeqCst);
        }
    }

    pub(crate) fn failed(&self) -> bool {
        self.failed.load(Ordering::SeqCst)
    }
}

/// Latest state published by the execution loop.
#[derive(Debug, Clone)]
pub struct Execution {
    pub tick: u64,
    pub state: RobotState,
    /// Projection abscissa on the current path.
    pub s: f64,
    pub speed: f64,
    /// Path version the abscissa refers to.
    pub version: u64,
}

/// Result of the last collision check of the current path.
#[derive(Debug, Clone)]
pub struct PathStatus {
    pub version: u64,
    /// Current path with obstruction flags from `snapshot`.
    pub flagged: Arc<Path>,
    /// Remaining cost from the robot's abscissa.
    pub cost: f64,
    pub obstruction: Option<f64>,
    pub snapshot: Arc<SceneSnapshot>,
}

/// The only channel between the loops. Payloads are immutable and shared by
/// `Arc`, so every critical section is a handful of pointer copies.
#[derive(Debug)]
pub struct SharedState {
    pub current_path: Arc<Path>,
    pub current_trajectory: Arc<Trajectory>,
    pub path_version: u64,
    pub status: Option<PathStatus>,
    pub execution: Execution,
    pub outcome: Option<Outcome>,
    pub traversed_length: f64,
    pub collision_count: u32,
    pub last_replan: Option<ReplanStatus>,
    /// When the robot last came to rest under a braking trajectory.
    pub rest_since: Option<f64>,
    pub failures_at_rest: u32,
    pub replan_events: Vec<ReplanEvent>,
    pub path_swaps: u64,
}

/// Collision loop private data: the scene it samples and its path copy.
pub(crate) struct CollisionLocal {
    scene: Scene,
    path: Option<(u64, Path)>,
}

/// A replan call that has returned but whose result is not yet applied.
pub(crate) struct Begun {
    started: f64,
    version: u64,
    old_path: Arc<Path>,
    s_repl: f64,
    outcome: ReplanOutcome,
}

/// Loop iterations over one shared state.
pub(crate) struct Loops {
    shared: Mutex<SharedState>,
    cfg: ManagerConfig,
    checker: CollisionChecker,
    metric: Metric,
    goal: Configuration,
    ids: NodeIds,
    solver_config: SolverConfig,
    budget: Budget,
}

impl Loops {
    pub(crate) fn new(
        problem: &PlanningProblem,
        solver_config: &SolverConfig,
        cfg: &ManagerConfig,
        initial_path: Path,
    ) -> Result<Self> {
        let path = Arc::new(initial_path);
        let trajectory = Trajectory::along(path.clone(), cfg.v_max, cfg.a_max, 0.0, 0.0)?;
        let start = trajectory.sample(0.0);
        let shared = SharedState {
            current_path: path,
            current_trajectory: Arc::new(trajectory),
            path_version: 0,
            status: None,
            execution: Execution {
                tick: 0,
                state: start.state,
                s: 0.0,
                speed: 0.0,
                version: 0,
            },
            outcome: None,
            traversed_length: 0.0,
            collision_count: 0,
            last_replan: None,
            rest_since: None,
            failures_at_rest: 0,
            replan_events: Vec::new(),
            path_swaps: 0,
        };
        Ok(Self {
            shared: Mutex::new(shared),
            cfg: cfg.clone(),
            checker: problem.checker.clone(),
            metric: problem.metric.clone(),
            goal: problem.goal.clone(),
            ids: problem.ids.clone(),
            solver_config: solver_config.clone(),
            budget: cfg.budget(),
        })
    }

    fn lock(&self) -> MutexGuard<'_, SharedState> {
        self.shared.lock().expect("shared state lock")
    }

    pub(crate) fn collision_local(&self, scene: Scene) -> CollisionLocal {
        CollisionLocal { scene, path: None }
    }

    pub(crate) fn finished(&self) -> bool {
        self.lock().outcome.is_some()
    }

    pub(crate) fn abort(&self) {
        let mut s = self.lock();
        s.outcome.get_or_insert(Outcome::Aborted);
    }

    /// Samples the trajectory at tick `tick`, projects on the current path and
    /// publishes the state.
    pub(crate) fn execution_iteration(&self, tick: u64, t: f64, tracer: &Tracer) {
        let record = {
            let mut s = self.lock();
            if s.outcome.is_some() {
                return;
            }
            let trajectory = s.current_trajectory.clone();
            let sample = trajectory.sample(t);
            let hint = if s.execution.version == s.path_version {
                s.execution.s
            } else {
                0.0
            };
            let (abscissa, _) = s.current_path.project(&sample.state.q, Some(hint));
            if tick > 0 {
                s.traversed_length += self.metric.distance(&s.execution.state.q, &sample.state.q);
            }
            let at_rest = trajectory.is_braking() && sample.speed == 0.0 && t >= trajectory.end_time();
            if !at_rest {
                s.rest_since = None;
            } else if s.rest_since.is_none() {
                s.rest_since = Some(t);
            }
            let arrived = !trajectory.is_braking()
                && t >= trajectory.end_time()
                && self.metric.distance(&sample.state.q, &self.goal) <= self.cfg.goal_tolerance;
            if arrived {
                s.outcome = Some(Outcome::GoalReached);
            }
            let coherent = Arc::ptr_eq(&trajectory.path, &s.current_path);
            s.execution = Execution {
                tick,
                state: sample.state.clone(),
                s: abscissa,
                speed: sample.speed,
                version: s.path_version,
            };
            TraceRecord::Tick {
                at: t,
                q: sample.state.q,
                qdot: sample.state.qdot,
                s: abscissa,
                speed: sample.speed,
                path_version: s.path_version,
                coherent,
            }
        };
        tracer.emit(t, record);
    }

    /// Snapshots the scene, re-checks the current path from the robot onward
    /// and publishes the result. Also commands a stop when an obstruction
    /// gets close, and resumes a stopped robot whose path cleared.
    pub(crate) fn collision_iteration(&self, local: &mut CollisionLocal, now: f64, tracer: &Tracer) {
        let snap = Arc::new(local.scene.capture_snapshot(now));
        tracer.emit(
            now,
            TraceRecord::Snapshot {
                version: snap.version,
                capture_time: snap.capture_time,
                obstacles: snap.obstacles.clone(),
            },
        );
        let (version, shared_path, s_curr, x_curr) = {
            let s = self.lock();
            if s.outcome.is_some() {
                return;
            }
            (
                s.path_version,
                s.current_path.clone(),
                s.execution.s,
                s.execution.state.q.clone(),
            )
        };
        if local.path.as_ref().map(|(v, _)| *v) != Some(version) {
            local.path = Some((version, (*shared_path).clone()));
        }
        let path = &mut local.path.as_mut().expect("downloaded above").1;
        path.update_cost(&self.checker, &snap, s_curr);
        let cost = path.remaining_cost(s_curr);
        let obstruction = path.first_obstruction_after(s_curr);
        let in_collision = !self.checker.is_free(&snap, &x_curr);
        let flagged = Arc::new(path.clone());

        let mut lines = Vec::new();
        {
            let mut s = self.lock();
            if in_collision {
                s.collision_count += 1;
                s.outcome.get_or_insert(Outcome::Collided);
            }
            if s.path_version == version && s.outcome.is_none() {
                s.status = Some(PathStatus {
                    version,
                    flagged,
                    cost,
                    obstruction,
                    snapshot: snap,
                });
                let braking = s.current_trajectory.is_braking();
                match obstruction.map(|o| o - s.execution.s) {
                    Some(gap) if !braking => {
                        let reason = if gap <= self.cfg.emergency_distance(self.checker.resolution()) {
                            Some(StopReason::Emergency)
                        } else if gap <= self.cfg.stop_distance() && s.last_replan == Some(ReplanStatus::Failed) {
                            Some(StopReason::ReplanFailed)
                        } else {
                            None
                        };
                        if let Some(reason) = reason {
                            lines.extend(self.command_stop(&mut s, reason));
                        }
                    }
                    None if braking && cost.is_finite() => self.resume(&mut s),
                    _ => {}
                }
            }
        }
        for record in lines {
            tracer.emit(now, record);
        }
    }

    /// Replaces the trajectory by a maximum-deceleration stop on the current path.
    fn command_stop(&self, s: &mut SharedState, reason: StopReason) -> Option<TraceRecord> {
        let e = &s.execution;
        let stop = Trajectory::braking(
            s.current_path.clone(),
            e.s,
            e.speed,
            self.cfg.v_max,
            self.cfg.a_max,
            e.state.t,
        )
        .ok()?;
        let record = TraceRecord::SafetyStop {
            s: e.s,
            speed: e.speed,
            reason,
        };
        s.current_trajectory = Arc::new(stop);
        Some(record)
    }

    /// Nominal trajectory from the robot's state to the end of the current path.
    fn resume(&self, s: &mut SharedState) {
        let e = &s.execution;
        if let Ok(resumed) = Trajectory::along_from(
            s.current_path.clone(),
            e.s,
            self.cfg.v_max,
            self.cfg.a_max,
            e.speed,
            e.state.t,
        ) {
            s.current_trajectory = Arc::new(resumed);
        }
    }

    /// Downloads the checked path, evaluates the trigger and, when it fires,
    /// runs the replanner from the replan-ahead configuration.
    pub(crate) fn begin_replan(&self, replanner: &mut dyn Replanner, now: f64) -> Option<Begun> {
        let (status, trajectory, execution, version) = {
            let s = self.lock();
            if s.outcome.is_some() {
                return None;
            }
            let status = s.status.clone()?;
            if status.version != s.path_version {
                return None;
            }
            (status, s.current_trajectory.clone(), s.execution.clone(), s.path_version)
        };
        if !trigger(self.cfg.trigger_policy, status.cost, status.obstruction.is_some()) {
            return None;
        }
        let path = &status.flagged;
        let (mut x_repl, mut s_repl) =
            get_replan_conf(&trajectory, path, execution.state.t, self.cfg.dt_repl(), execution.s).ok()?;
        // Never plan from beyond the obstruction: the prefix up to x_repl must stay usable.
        if let Some(blocked) = status.obstruction {
            let limit = blocked - 2.0 * self.checker.resolution();
            if s_repl > limit {
                s_repl = limit.max(execution.s);
                x_repl = path.point_at(s_repl);
            }
        }
        let request = ReplanRequest {
            x_repl,
            s_repl,
            current_path: (**path).clone(),
            current_tree: None,
            snapshot: status.snapshot.clone(),
            budget: self.budget,
            solver_config: self.solver_config.clone(),
        };
        let outcome = replanner.replan(&request);
        Some(Begun {
            started: now,
            version,
            old_path: status.flagged,
            s_repl,
            outcome,
        })
    }

    /// Applies a replan result: on a new path, re-roots it at the current
    /// robot configuration, re-times it from the current speed and swaps path
    /// and trajectory in one critical section.
    pub(crate) fn finish_replan(&self, begun: Begun, now: f64, tracer: &Tracer) {
        let Begun {
            started,
            version,
            old_path,
            s_repl,
            outcome,
        } = begun;
        let status = outcome.status;
        let new_cost = outcome.path.as_ref().map(Path::cost);
        tracer.emit(
            now,
            TraceRecord::Replan {
                started,
                elapsed: outcome.elapsed,
                status,
                cost: new_cost,
            },
        );
        let mut lines = Vec::new();
        {
            let mut s = self.lock();
            if s.outcome.is_some() {
                return;
            }
            s.replan_events.push(ReplanEvent {
                t: now,
                started,
                elapsed: outcome.elapsed,
                status,
                new_cost,
            });
            s.last_replan = Some(status);
            if status == ReplanStatus::Failed {
                if s.rest_since.is_some_and(|rest| rest <= started) {
                    s.failures_at_rest += 1;
                    if s.failures_at_rest >= self.cfg.stop_patience {
                        s.outcome = Some(Outcome::SafetyStopped);
                    }
                }
                let near = s
                    .status
                    .as_ref()
                    .filter(|st| st.version == s.path_version)
                    .and_then(|st| st.obstruction)
                    .is_some_and(|o| o - s.execution.s <= self.cfg.stop_distance());
                if near && !s.current_trajectory.is_braking() && s.outcome.is_none() {
                    lines.extend(self.command_stop(&mut s, StopReason::ReplanFailed));
                }
            }
        }
        for record in lines {
            tracer.emit(now, record);
        }
        if let (ReplanStatus::NewPath, Some(new_path)) = (status, outcome.path) {
            self.swap_in(&old_path, &new_path, version, s_repl, now, tracer);
        }
    }

    /// Builds path and trajectory outside the critical section and swaps them
    /// in, rebuilding if the robot moved in between.
    fn swap_in(&self, old_path: &Path, new_path: &Path, version: u64, s_repl: f64, now: f64, tracer: &Tracer) {
        const ATTEMPTS: usize = 8;
        for _ in 0..ATTEMPTS {
            let execution = {
                let s = self.lock();
                if s.outcome.is_some() || s.path_version != version {
                    return;
                }
                s.execution.clone()
            };
            let x_curr = &execution.state.q;
            let Ok(path) = start_path_from_conf(old_path, new_path, x_curr, execution.s, s_repl, &self.ids) else {
                return;
            };
            let path = Arc::new(path);
            let Ok(trajectory) = Trajectory::along(
                path.clone(),
                self.cfg.v_max,
                self.cfg.a_max,
                execution.speed,
                execution.state.t,
            ) else {
                return;
            };
            let record = {
                let mut s = self.lock();
                if s.outcome.is_some() || s.path_version != version {
                    return;
                }
                if s.execution.tick != execution.tick {
                    continue;
                }
                s.current_path = path.clone();
                s.current_trajectory = Arc::new(trajectory);
                s.path_version += 1;
                s.status = None;
                s.failures_at_rest = 0;
                s.path_swaps += 1;
                TraceRecord::PathSwap {
                    version: s.path_version,
                    x_curr: execution.state.q.clone(),
                    nodes: path.configurations().cloned().collect(),
                }
            };
            tracer.emit(now, record);
            return;
        }
    }

    /// Final report; also emits the outcome line.
    pub(crate) fn finish(&self, wall_time: f64, lateness: f64, tracer: &Tracer) -> ExecutionReport {
        let s = self.lock();
        let outcome = s.outcome.unwrap_or(Outcome::Aborted);
        let outcome = if tracer.failed() { Outcome::Aborted } else { outcome };
        let report = ExecutionReport {
            outcome,
            traversed_length: s.traversed_length,
            replan_events: s.replan_events.clone(),
            collision_count: s.collision_count,
            wall_time,
            final_state: s.execution.state.clone(),
            final_speed: s.execution.speed,
            path_swaps: s.path_swaps,
            final_path_cost: s.current_path.cost(),
            ticks: s.execution.tick + 1,
            max_exec_lateness: lateness,
        };
        drop(s);
        tracer.emit(
            report.final_state.t,
            TraceRecord::Outcome {
                outcome: report.outcome,
                traversed_length: report.traversed_length,
                collision_count: report.collision_count,
            },
        );
        report
    }
}
