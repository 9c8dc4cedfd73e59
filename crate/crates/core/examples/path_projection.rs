//! Path bookkeeping: projection with a monotone hint, splitting, and cost
//! updates against a changed scene.

use replankit::cspace::{Configuration, Metric};
use replankit::graph::{NodeIds, Path};
use replankit::scene::{CollisionChecker, Obstacle, RobotModel, Scene};

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn main() -> replankit::error::Result<()> {
    let ids = NodeIds::new();
    let path = Path::from_configurations(
        Metric::Euclidean,
        &ids,
        [q(&[0.0, 0.0]), q(&[4.0, 0.0]), q(&[4.0, 3.0]), q(&[8.0, 3.0])],
    )?;
    println!("length {}", path.length());

    // The robot drifts slightly off the path; the hint keeps the projection
    // from jumping back to an earlier segment.
    let (s, on) = path.project(&q(&[3.9, 0.2]), None);
    println!("project (3.9, 0.2) -> s = {s:.3} at {:?}", on.as_slice());
    let (s2, _) = path.project(&q(&[4.1, 1.0]), Some(s));
    println!("next projection with hint: s = {s2:.3}");

    let tail = path.subpath_from(5.0, &ids);
    println!("tail from s=5 starts at {:?}, length {}", tail.start().q.as_slice(), tail.length());

    let checker = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01)?;
    let mut scene = Scene::new(vec![Obstacle::sphere("box", [4.0, 2.0, 0.0], 0.3)])?;
    let mut flagged = path.clone();
    let update = flagged.update_cost(&checker, &scene.capture_snapshot(0.0), s2);
    println!(
        "after update: {} edges checked, cost {}, remaining from s2 {}, first obstruction {:?}",
        update.edges_checked,
        flagged.cost(),
        flagged.remaining_cost(s2),
        flagged.first_obstruction_after(s2)
    );
    Ok(())
}
