//! Configuration and edge checks for a point robot and a planar arm.

use replankit::cspace::{Configuration, Metric};
use replankit::scene::{forward_kinematics, CollisionChecker, Obstacle, RobotModel, Scene, Shape};

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn main() -> replankit::error::Result<()> {
    let mut scene = Scene::new(vec![Obstacle::sphere("ball", [2.0, 0.0, 0.0], 0.5)])?;
    scene.add_obstacle(Obstacle {
        id: "crate".into(),
        shape: Shape::Box {
            half_extents: [0.3, 0.3, 0.3],
        },
        position: [0.0, 2.0, 0.0],
        motion: Default::default(),
    })?;
    let snap = scene.capture_snapshot(0.0);

    let point = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01)?;
    println!("point at (2, 0.4) free: {}", point.check_configuration(&snap, &q(&[2.0, 0.4]))?);
    println!("point at (2, 0.6) free: {}", point.check_configuration(&snap, &q(&[2.0, 0.6]))?);
    let (a, b) = (q(&[0.0, 0.0]), q(&[4.0, 0.0]));
    println!("edge through the ball free: {}", point.check_edge(&snap, &a, &b));
    if let Some(s) = point.first_collision(&snap, &a, &b) {
        println!("  first colliding sample at fraction {s:.3}");
    }

    let links = vec![1.0, 1.0];
    let arm = CollisionChecker::new(RobotModel::planar_arm(links.clone(), [0.0, 0.0], 0.02), Metric::Euclidean, 0.01)?;
    for angles in [[0.0, 0.0], [1.2, 0.3], [std::f64::consts::FRAC_PI_2, 0.0]] {
        let q = q(&angles);
        let joints = forward_kinematics(&links, [0.0, 0.0], &q);
        println!("arm {angles:?}: joints {joints:?}, free {}", arm.check_configuration(&snap, &q)?);
    }
    Ok(())
}
