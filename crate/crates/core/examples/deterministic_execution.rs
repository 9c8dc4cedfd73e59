//! Execute a path on a virtual clock while a sphere drops in front of the
//! robot. Runs are reproducible bit for bit, so the trace is printed with
//! a digest of its bytes.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use replankit::cspace::{Configuration, JointBounds, Metric};
use replankit::manager::{Manager, ManagerConfig, Mode};
use replankit::replanners::{Drrt, ReplannerContext, ReplannerParams};
use replankit::scene::{CollisionChecker, Motion, Obstacle, RobotModel, Scene, SceneSnapshot};
use replankit::solvers::{PlanningProblem, SolverConfig};
use replankit::trace::{JsonlSink, TraceRecord, TraceSink};
use replankit::graph::Path;

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn run() -> replankit::error::Result<Vec<u8>> {
    let checker = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01)?;
    let bounds = JointBounds::new(q(&[-1.0, -3.0]), q(&[11.0, 3.0]))?;
    let problem = PlanningProblem::new(q(&[0.0, 0.0]), q(&[10.0, 0.0]), bounds, checker, Arc::new(SceneSnapshot::empty()), 5)?;
    let path = Path::from_configurations(Metric::Euclidean, &problem.ids, [q(&[0.0, 0.0]), q(&[10.0, 0.0])])?;
    let replanner = Drrt::new(ReplannerContext::for_problem(&problem, 5), &ReplannerParams::default())?;
    let scene = Scene::new(vec![
        Obstacle::sphere("drop", [6.0, 0.0, 0.0], 0.5).with_motion(Motion::SpawnAt { time: 2.0 })
    ])?;
    let cfg = ManagerConfig {
        mode: Mode::Deterministic,
        ..ManagerConfig::default()
    };
    let manager = Manager::new(problem, SolverConfig::default(), cfg)?;
    let mut sink = JsonlSink::new(Vec::new());
    let report = manager.run(path, Box::new(replanner), scene, &mut sink as &mut dyn TraceSink)?;
    println!(
        "{:?} at t={:.3}: traversed {:.4}, {} replans, {} swaps",
        report.outcome,
        report.wall_time,
        report.traversed_length,
        report.replan_events.len(),
        report.path_swaps
    );
    Ok(sink.into_inner())
}

fn main() -> replankit::error::Result<()> {
    let first = run()?;
    let second = run()?;
    let digest = |bytes: &[u8]| {
        let mut h = DefaultHasher::new();
        bytes.hash(&mut h);
        h.finish()
    };
    println!("trace {} bytes, digests {:016x} {:016x}", first.len(), digest(&first), digest(&second));
    assert_eq!(first, second);

    let lines = replankit::trace::read_trace(first.as_slice()).expect("own trace parses");
    for line in &lines {
        match &line.record {
            TraceRecord::Replan { started, elapsed, status, .. } => {
                println!("t={:.3} replan started {started:.3} took {elapsed:.3} -> {status}", line.t)
            }
            TraceRecord::PathSwap { version, nodes, .. } => {
                println!("t={:.3} swap to version {version} with {} nodes", line.t, nodes.len())
            }
            _ => {}
        }
    }
    Ok(())
}
