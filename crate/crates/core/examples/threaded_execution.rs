//! The same setup as `deterministic_execution`, but with execution,
//! collision checking and replanning on their own threads against the wall
//! clock. Takes about eleven seconds.

use std::sync::Arc;

use replankit::cspace::{Configuration, JointBounds, Metric};
use replankit::graph::Path;
use replankit::manager::{Manager, ManagerConfig};
use replankit::replanners::{MultiParallelRrt, ReplannerContext, ReplannerParams};
use replankit::scene::{CollisionChecker, Motion, Obstacle, RobotModel, Scene, SceneSnapshot};
use replankit::solvers::{PlanningProblem, SolverConfig};
use replankit::trace::MemorySink;

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn main() -> replankit::error::Result<()> {
    let checker = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01)?;
    let bounds = JointBounds::new(q(&[-1.0, -3.0]), q(&[11.0, 3.0]))?;
    let problem = PlanningProblem::new(q(&[0.0, 0.0]), q(&[10.0, 0.0]), bounds, checker, Arc::new(SceneSnapshot::empty()), 1)?;
    let path = Path::from_configurations(Metric::Euclidean, &problem.ids, [q(&[0.0, 0.0]), q(&[10.0, 0.0])])?;
    let replanner = MultiParallelRrt::new(ReplannerContext::for_problem(&problem, 1), &ReplannerParams::default())?;
    let scene = Scene::new(vec![
        Obstacle::sphere("drop", [6.0, 0.0, 0.0], 0.5).with_motion(Motion::SpawnAt { time: 2.0 })
    ])?;
    let manager = Manager::new(problem, SolverConfig::default(), ManagerConfig::default())?;
    let mut sink = MemorySink::default();
    let report = manager.run(path, Box::new(replanner), scene, &mut sink)?;
    println!(
        "{:?} after {:.3}s wall: traversed {:.4}, {} ticks, worst tick lateness {:.2} ms",
        report.outcome,
        report.wall_time,
        report.traversed_length,
        report.ticks,
        1e3 * report.max_exec_lateness
    );
    for e in &report.replan_events {
        println!("replan at {:.3}s took {:.2} ms -> {}", e.started, 1e3 * e.elapsed, e.status);
    }
    println!("{} trace lines", sink.lines.len());
    Ok(())
}
