//! The replanner manager: trajectory execution, collision checking and
//! replanning loops exchanging a current path through one shared state.
//!
//! The loops run either on three threads against the wall clock, or
//! cooperatively on a virtual clock in a fixed round-robin order. Both modes
//! run the same iteration code.

mod loops;

use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clock::{Budget, Clock, VirtualClock, WallClock};
use crate::cspace::Configuration;
use crate::error::{Error, Result};
use crate::graph::{NodeIds, Path, ABSCISSA_EPS};
use crate::replanners::{ReplanStatus, Replanner, TriggerPolicy};
use crate::scene::Scene;
use crate::solvers::{PlanningProblem, SolverConfig};
use crate::trace::{Outcome, TraceRecord, TraceSink};
use crate::trajectory::RobotState;

pub use loops::{Execution, PathStatus, SharedState};
use loops::{Loops, Tracer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Threaded,
    /// Single-threaded on a virtual clock; reproducible bit for bit.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManagerConfig {
    /// Execution loop rate, Hz.
    pub exec_rate: f64,
    /// Collision checking loop rate, Hz.
    pub cc_rate: f64,
    pub max_replanning_time: f64,
    /// Replan-ahead horizon; defaults to 1.1 × `max_replanning_time`.
    pub dt_repl: Option<f64>,
    pub trigger_policy: TriggerPolicy,
    /// Defaults to 1.5 × the braking distance from `v_max`.
    pub stop_distance: Option<f64>,
    pub goal_tolerance: f64,
    pub mode: Mode,
    pub v_max: f64,
    pub a_max: f64,
    /// Runs longer than this end as aborted.
    pub max_duration: f64,
    /// Virtual seconds charged per solver iteration in deterministic mode.
    pub iteration_cost: f64,
    /// Failed replans at rest before giving up with a safety stop.
    pub stop_patience: u32,
}

impl Default for ManagerConfig {
    fn default() -> Self {
        Self {
            exec_rate: 500.0,
            cc_rate: 25.0,
            max_replanning_time: 0.1,
            dt_repl: None,
            trigger_policy: TriggerPolicy::OnObstruction,
            stop_distance: None,
            goal_tolerance: 1e-6,
            mode: Mode::Threaded,
            v_max: 1.0,
            a_max: 1.0,
            max_duration: 120.0,
            iteration_cost: 5e-5,
            stop_patience: 3,
        }
    }
}

impl ManagerConfig {
    pub fn dt_repl(&self) -> f64 {
        self.dt_repl.unwrap_or(1.1 * self.max_replanning_time)
    }

    pub fn braking_distance(&self) -> f64 {
        self.v_max * self.v_max / (2.0 * self.a_max)
    }

    pub fn stop_distance(&self) -> f64 {
        self.stop_distance.unwrap_or(1.5 * self.braking_distance())
    }

    /// Obstructions closer than this are braked for whatever the replanner is
    /// doing: full-speed braking plus one collision period of travel.
    pub fn emergency_distance(&self, resolution: f64) -> f64 {
        self.braking_distance() + self.v_max / self.cc_rate + 2.0 * resolution
    }

    pub fn exec_period(&self) -> f64 {
        1.0 / self.exec_rate
    }

    /// Execution ticks per collision check.
    pub fn cc_every(&self) -> u64 {
        (self.exec_rate / self.cc_rate).round().max(1.0) as u64
    }

    pub fn budget(&self) -> Budget {
        match self.mode {
            Mode::Threaded => Budget::Wall(self.max_replanning_time),
            Mode::Deterministic => Budget::Virtual {
                seconds: self.max_replanning_time,
                iteration_cost: self.iteration_cost,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("exec_rate", self.exec_rate),
            ("cc_rate", self.cc_rate),
            ("max_replanning_time", self.max_replanning_time),
            ("dt_repl", self.dt_repl()),
            ("stop_distance", self.stop_distance()),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("max_duration", self.max_duration),
            ("iteration_cost", self.iteration_cost),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        if self.exec_rate < self.cc_rate {
            return Err(Error::InvalidParameter {
                name: "exec_rate",
                reason: "execution must run at least as fast as collision checking".into(),
            });
        }
        if self.dt_repl() < self.max_replanning_time {
            return Err(Error::InvalidParameter {
                name: "dt_repl",
                reason: "must not be shorter than max_replanning_time".into(),
            });
        }
        if !(self.goal_tolerance >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "goal_tolerance",
                reason: "must be non-negative".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanEvent {
    /// When the result was known.
    pub t: f64,
    pub started: f64,
    pub elapsed: f64,
    pub status: ReplanStatus,
    pub new_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub outcome: Outcome,
    pub traversed_length: f64,
    pub replan_events: Vec<ReplanEvent>,
    pub collision_count: u32,
    /// Seconds of run time; virtual seconds in deterministic mode.
    pub wall_time: f64,
    pub final_state: RobotState,
    pub final_speed: f64,
    pub path_swaps: u64,
    /// Cost of the path being followed at the end.
    pub final_path_cost: f64,
    pub ticks: u64,
    /// Largest lateness of an execution tick, threaded mode only.
    pub max_exec_lateness: f64,
}

/// Re-roots a freshly planned path at the robot's latest configuration.
///
/// `new_path` starts at the replan configuration, abscissa `s_repl` on
/// `old_path`; the robot sits at `x_curr`, abscissa `s_curr`. When the robot
/// is still short of the replan configuration, the old path between the two
/// is prepended. Otherwise `x_curr` is projected on `new_path`, which is
/// truncated there provided the robot lies on it.
pub fn start_path_from_conf(
    old_path: &Path,
    new_path: &Path,
    x_curr: &Configuration,
    s_curr: f64,
    s_repl: f64,
    ids: &NodeIds,
) -> Result<Path> {
    if *x_curr == new_path.start().q {
        return Ok(new_path.clone());
    }
    if s_curr < s_repl - ABSCISSA_EPS {
        let prefix = old_path.section(s_curr, s_repl, ids).with_exact_start(x_curr.clone());
        return prefix.concat(new_path);
    }
    let (s, on_path) = new_path.project(x_curr, None);
    let off = new_path.metric().distance(&on_path, x_curr);
    if off > 1e-6 {
        return Err(Error::OffPath(off));
    }
    Ok(new_path.subpath_from(s, ids).with_exact_start(x_curr.clone()))
}

/// Runs one execution from `initial_path` to the goal of `problem`.
pub struct Manager {
    pub problem: PlanningProblem,
    pub solver_config: SolverConfig,
    pub cfg: ManagerConfig,
}

impl Manager {
    pub fn new(problem: PlanningProblem, solver_config: SolverConfig, cfg: ManagerConfig) -> Result<Self> {
        cfg.validate()?;
        solver_config.validate()?;
        Ok(Self {
            problem,
            solver_config,
            cfg,
        })
    }

    fn check_initial_path(&self, initial_path: &Path, scene: &Scene) -> Result<()> {
        let metric = &self.problem.metric;
        if metric.distance(&initial_path.start().q, &self.problem.start) > ABSCISSA_EPS {
            return Err(Error::InitialPathMismatch);
        }
        let snap = scene.world_at(0.0, 0);
        let checker = &self.problem.checker;
        let nodes = initial_path.nodes();
        if !nodes.windows(2).all(|w| checker.check_edge(&snap, &w[0].q, &w[1].q)) {
            return Err(Error::InitialPathObstructed);
        }
        Ok(())
    }

    /// Runs in the configured mode.
    pub fn run(
        &self,
        initial_path: Path,
        replanner: Box<dyn Replanner>,
        scene: Scene,
        sink: &mut dyn TraceSink,
    ) -> Result<ExecutionReport> {
        match self.cfg.mode {
            Mode::Threaded => self.run_threaded(initial_path, replanner, scene, sink),
            Mode::Deterministic => self.run_deterministic(initial_path, replanner, scene, sink),
        }
    }

    /// Drives the three loops cooperatively on a virtual clock: each tick runs
    /// the execution loop, then the collision loop when due, then completes a
    /// replan whose virtual budget has elapsed, then starts the next one.
    pub fn run_deterministic(
        &self,
        initial_path: Path,
        mut replanner: Box<dyn Replanner>,
        scene: Scene,
        sink: &mut dyn TraceSink,
    ) -> Result<ExecutionReport> {
        self.check_initial_path(&initial_path, &scene)?;
        let mut cfg = self.cfg.clone();
        cfg.mode = Mode::Deterministic;
        let loops = Loops::new(&self.problem, &self.solver_config, &cfg, initial_path)?;
        let tracer = Tracer::new(sink, None);
        let mut collision = loops.collision_local(scene);
        let mut clock = VirtualClock::new(cfg.exec_period());
        let replan_ticks = clock.ticks_for(cfg.max_replanning_time);
        let cc_every = cfg.cc_every();
        let mut pending = None;
        loop {
            let tick = clock.tick();
            let now = clock.now();
            loops.execution_iteration(tick, now, &tracer);
            if loops.finished() {
                break;
            }
            if tick.is_multiple_of(cc_every) {
                loops.collision_iteration(&mut collision, now, &tracer);
            }
            if let Some((due, _)) = &pending {
                if *due == tick {
                    let (_, begun) = pending.take().expect("checked above");
                    loops.finish_replan(begun, now, &tracer);
                }
            }
            if pending.is_none() && !loops.finished() {
                pending = loops
                    .begin_replan(replanner.as_mut(), now)
                    .map(|begun| (tick + replan_ticks, begun));
            }
            if loops.finished() {
                break;
            }
            if now >= cfg.max_duration || tracer.failed() {
                loops.abort();
                break;
            }
            clock.advance();
        }
        Ok(loops.finish(clock.now(), 0.0, &tracer))
    }

    /// Runs the three loops on their own threads against the wall clock.
    pub fn run_threaded(
        &self,
        initial_path: Path,
        mut replanner: Box<dyn Replanner>,
        scene: Scene,
        sink: &mut dyn TraceSink,
    ) -> Result<ExecutionReport> {
        self.check_initial_path(&initial_path, &scene)?;
        let mut cfg = self.cfg.clone();
        cfg.mode = Mode::Threaded;
        let loops = Loops::new(&self.problem, &self.solver_config, &cfg, initial_path)?;
        let clock = WallClock::new();
        let started = Instant::now();
        let tracer = Tracer::new(sink, Some(&clock));
        let mut collision = loops.collision_local(scene);
        let lateness = Mutex::new(0.0_f64);
        let (loops, tracer, clock, cfg, lateness) = (&loops, &tracer, &clock, &cfg, &lateness);
        thread::scope(|scope| {
            scope.spawn(move || {
                let dt = cfg.exec_period();
                let mut tick = 0;
                while !loops.finished() {
                    let due = tick as f64 * dt;
                    clock.sleep_until(due);
                    let late = clock.now() - due;
                    let mut worst = lateness.lock().expect("lateness lock");
                    *worst = worst.max(late);
                    drop(worst);
                    loops.execution_iteration(tick, due, tracer);
                    tick += 1;
                }
            });
            scope.spawn(move || {
                let period = 1.0 / cfg.cc_rate;
                let mut k = 0;
                while !loops.finished() {
                    clock.sleep_until(k as f64 * period);
                    loops.collision_iteration(&mut collision, clock.now(), tracer);
                    k += 1;
                }
            });
            scope.spawn(move || {
                let idle = std::time::Duration::from_secs_f64(cfg.exec_period());
                while !loops.finished() {
                    match loops.begin_replan(replanner.as_mut(), clock.now()) {
                        Some(begun) => loops.finish_replan(begun, clock.now(), tracer),
                        None => thread::sleep(idle),
                    }
                }
            });
            while !loops.finished() {
                if clock.now() >= cfg.max_duration || tracer.failed() {
                    loops.abort();
                }
                thread::sleep(std::time::Duration::from_millis(5));
            }
        });
        let worst = *lateness.lock().expect("lateness lock");
        Ok(loops.finish(started.elapsed().as_secs_f64(), worst, tracer))
    }
}

/// Records the start of a run; callers emit it before [`Manager::run`].
pub fn header_record(
    scenario: &str,
    seed: u64,
    replanner: &str,
    manager: &Manager,
    initial_path: &Path,
) -> TraceRecord {
    let p = &manager.problem;
    TraceRecord::Header {
        scenario: scenario.to_string(),
        seed,
        replanner: replanner.to_string(),
        mode: match manager.cfg.mode {
            Mode::Threaded => "threaded".into(),
            Mode::Deterministic => "deterministic".into(),
        },
        robot: p.checker.robot().clone(),
        metric: p.metric.clone(),
        resolution: p.checker.resolution(),
        start: p.start.clone(),
        goal: p.goal.clone(),
        initial_path: initial_path.configurations().cloned().collect(),
        exec_period: manager.cfg.exec_period(),
        max_replanning_time: manager.cfg.max_replanning_time,
        v_max: manager.cfg.v_max,
        a_max: manager.cfg.a_max,
    }
}
