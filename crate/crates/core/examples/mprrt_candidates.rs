//! Multi-parallel RRT: several seeded instances race within one budget and
//! the cheapest path wins.

use std::sync::Arc;

use replankit::clock::Budget;
use replankit::cspace::{Configuration, JointBounds, Metric};
use replankit::graph::{NodeIds, Path};
use replankit::replanners::{MultiParallelRrt, ReplanRequest, ReplannerContext, ReplannerParams};
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
        seed: 3,
    };
    let params = ReplannerParams {
        parallel_instances: 4,
        ..ReplannerParams::default()
    };
    let mut mprrt = MultiParallelRrt::new(ctx, &params)?;

    let snapshot = Arc::new(Scene::new(vec![Obstacle::sphere("rock", [6.0, 0.0, 0.0], 0.5)])?.capture_snapshot(0.0));
    let mut path = Path::from_configurations(Metric::Euclidean, &ids, (0..=5).map(|k| q(&[2.0 * k as f64, 0.0])))?;
    path.update_cost(&checker, &snapshot, 0.0);
    let request = ReplanRequest {
        x_repl: path.point_at(3.0),
        s_repl: 3.0,
        current_path: path,
        current_tree: None,
        snapshot,
        budget: Budget::Virtual {
            seconds: 0.1,
            iteration_cost: 5e-5,
        },
        solver_config: SolverConfig::default(),
    };
    let (outcome, candidates) = mprrt.replan_with_candidates(&request);
    for c in &candidates {
        let cost = c.path.as_ref().map(Path::cost);
        println!("instance {}: cost {:?} in {:.4} virtual s", c.index, cost, c.elapsed);
    }
    println!("winner: {} with cost {:?}", outcome.status, outcome.path.as_ref().map(Path::cost));
    Ok(())
}
