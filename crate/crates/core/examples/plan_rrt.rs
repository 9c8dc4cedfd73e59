//! Plan around a wall with RRT, then shorten the result.

use std::sync::Arc;

use replankit::clock::Budget;
use replankit::cspace::{Configuration, JointBounds, Metric};
use replankit::scene::{CollisionChecker, Obstacle, RobotModel, Scene};
use replankit::solvers::{rrt_solve, shortcut, PlanningProblem, SolverConfig};

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn main() -> replankit::error::Result<()> {
    let wall = (0..7).map(|k| Obstacle::sphere(format!("w{k}"), [5.0, -1.5 + 0.5 * k as f64, 0.0], 0.3));
    let mut scene = Scene::new(wall.collect())?;
    let checker = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01)?;
    let bounds = JointBounds::new(q(&[-1.0, -4.0]), q(&[11.0, 4.0]))?;
    let snapshot = Arc::new(scene.capture_snapshot(0.0));
    let mut problem = PlanningProblem::new(q(&[0.0, 0.0]), q(&[10.0, 0.0]), bounds, checker, snapshot, 42)?;

    let cfg = SolverConfig::default();
    let found = rrt_solve(&mut problem, &cfg, Budget::Unlimited)?;
    let path = found.path.expect("the wall has open ends");
    println!("rrt: {} iterations, {} nodes, cost {:.3}", found.iterations, path.nodes().len(), path.cost());

    let short = shortcut(&path, &mut problem, &SolverConfig { max_iterations: 300, ..cfg }, Budget::Unlimited);
    println!("shortcut: {} nodes, cost {:.3}", short.nodes().len(), short.cost());
    for q in short.configurations() {
        println!("  {:?}", q.as_slice());
    }
    Ok(())
}
