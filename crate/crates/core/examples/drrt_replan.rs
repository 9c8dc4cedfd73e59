//! One DRRT replanning query: an obstacle lands on the current path and the
//! replanner repairs its goal-rooted tree back to the robot.

use std::sync::Arc;

use replankit::clock::Budget;
use replankit::cspace::{Configuration, JointBounds, Metric};
use replankit::graph::{NodeIds, Path};
use replankit::replanners::{Drrt, ReplanRequest, Replanner, ReplannerContext, ReplannerParams};
use replankit::scene::{CollisionChecker, Obstacle, RobotModel, Scene};
use replankit::solvers::SolverConfig;

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn main() -> replankit::error::Result<()> {
    let checker = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01)?;
    let ids = NodeIds::new();
    let ctx = ReplannerContext {
        goal: q(&[10.0, 0.0]),
        bounds: JointBounds::new(q(&[-1.0, -3.0]), q(&[11.0, 3.0]))?,
        checker: checker.clone(),
        ids: ids.clone(),
        seed: 7,
    };
    let mut drrt = Drrt::new(ctx, &ReplannerParams::default())?;

    let snapshot = Arc::new(Scene::new(vec![Obstacle::sphere("rock", [6.0, 0.0, 0.0], 0.5)])?.capture_snapshot(1.0));
    let mut path = Path::from_configurations(Metric::Euclidean, &ids, (0..=5).map(|k| q(&[2.0 * k as f64, 0.0])))?;
    path.update_cost(&checker, &snapshot, 0.0);
    println!("current path cost after the rock appeared: {}", path.cost());

    let request = ReplanRequest {
        x_repl: path.point_at(3.0),
        s_repl: 3.0,
        current_path: path,
        current_tree: None,
        snapshot,
        budget: Budget::Wall(0.1),
        solver_config: SolverConfig::default(),
    };
    let outcome = drrt.replan(&request);
    println!("status {} after {:.4}s, pruned {} nodes", outcome.status, outcome.elapsed, drrt.last_pruned());
    if let Some(p) = &outcome.path {
        println!("new path cost {:.3} through {} nodes", p.cost(), p.nodes().len());
    }
    Ok(())
}
