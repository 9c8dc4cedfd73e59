//! Dynamic obstacle world, immutable snapshots and discretized collision
//! checking for a 2D point robot and a planar serial arm.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cspace::{Configuration, Metric};
use crate::error::{Error, Result};

/// Default edge discretization step, in configuration-space metric units.
pub const DEFAULT_RESOLUTION: f64 = 0.01;

/// Workspace position. Planar robots live in the `z = 0` plane.
pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Sphere { radius } => radius.is_finite() && *radius > 0.0,
            Shape::Box { half_extents } => half_extents.iter().all(|h| h.is_finite() && *h > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "shape",
                reason: format!("sizes must be positive: {self:?}"),
            })
        }
    }

    /// Distance from `p` to the shape placed at `center`, zero when inside.
    /// Spheres report negative values for interior points.
    #[inline]
    fn distance_to_point(&self, center: &Point3, p: &Point3) -> f64 {
        match self {
            Shape::Sphere { radius } => norm(sub(p, center)) - radius,
            Shape::Box { half_extents } => box_distance(center, half_extents, p),
        }
    }

    fn distance_to_segment(&self, center: &Point3, a: &Point3, b: &Point3) -> f64 {
        match self {
            Shape::Sphere { radius } => point_segment_distance(center, a, b) - radius,
            Shape::Box { half_extents } => {
                // Distance to a convex set is convex along a line.
                let f = |u: f64| box_distance(center, half_extents, &lerp3(a, b, u));
                golden_section_min(f, 0.0, 1.0)
            }
        }
    }

    /// Radius of a sphere enclosing the shape.
    fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Sphere { radius } => *radius,
            Shape::Box { half_extents } => norm(*half_extents),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Motion {
    #[default]
    Static,
    /// Constant velocity from the declared position at time zero.
    LinearVelocity { velocity: [f64; 3] },
    /// Static, but absent from the world before `time`.
    SpawnAt { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: String,
    pub shape: Shape,
    /// Position at time zero.
    pub position: Point3,
    #[serde(default)]
    pub motion: Motion,
}

impl Obstacle {
    pub fn sphere(id: impl Into<String>, position: Point3, radius: f64) -> Self {
        Self {
            id: id.into(),
            shape: Shape::Sphere { radius },
            position,
            motion: Motion::Static,
        }
    }

    pub fn with_motion(mut self, motion: Motion) -> Self {
        self.motion = motion;
        self
    }

    /// Pose at `t`, or `None` when the obstacle does not exist yet.
    pub fn pose_at(&self, t: f64) -> Option<Point3> {
        match &self.motion {
            Motion::Static => Some(self.position),
            Motion::LinearVelocity { velocity } => Some([
                self.position[0] + velocity[0] * t,
                self.position[1] + velocity[1] * t,
                self.position[2] + velocity[2] * t,
            ]),
            Motion::SpawnAt { time } => (t >= *time).then_some(self.position),
        }
    }
}

/// Obstacle frozen at a snapshot's capture time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObstacle {
    pub id: String,
    pub shape: Shape,
    pub position: Point3,
}

/// Immutable view of the world at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub capture_time: f64,
    pub version: u64,
    pub obstacles: Vec<PlacedObstacle>,
}

impl SceneSnapshot {
    pub fn empty() -> Self {
        Self {
            capture_time: 0.0,
            version: 0,
            obstacles: Vec::new(),
        }
    }
}

/// Live world state. Obstacle motion is a closed-form function of time, so
/// captures are exact at any instant.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    obstacles: Vec<Obstacle>,
    last_version: u64,
}

impl Scene {
    pub fn new(obstacles: Vec<Obstacle>) -> Result<Self> {
        for o in &obstacles {
            o.shape.validate()?;
        }
        Ok(Self {
            obstacles,
            last_version: 0,
        })
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn add_obstacle(&mut self, obstacle: Obstacle) -> Result<()> {
        obstacle.shape.validate()?;
        self.obstacles.push(obstacle);
        Ok(())
    }

    pub fn capture_snapshot(&mut self, at_time: f64) -> SceneSnapshot {
        self.last_version += 1;
        self.world_at(at_time, self.last_version)
    }

    /// Ground truth at `t` without consuming a version number.
    pub fn world_at(&self, t: f64, version: u64) -> SceneSnapshot {
        SceneSnapshot {
            capture_time: t,
            version,
            obstacles: self
                .obstacles
                .iter()
                .filter_map(|o| {
                    o.pose_at(t).map(|position| PlacedObstacle {
                        id: o.id.clone(),
                        shape: o.shape.clone(),
                        position,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RobotKind {
    PointRobot2D,
    PlanarArm { link_lengths: Vec<f64>, base: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub kind: RobotKind,
    #[serde(default)]
    pub clearance: f64,
}

impl RobotModel {
    pub fn point(clearance: f64) -> Self {
        Self {
            kind: RobotKind::PointRobot2D,
            clearance,
        }
    }

    pub fn planar_arm(link_lengths: Vec<f64>, base: [f64; 2], clearance: f64) -> Self {
        Self {
            kind: RobotKind::PlanarArm { link_lengths, base },
            clearance,
        }
    }

    pub fn dof(&self) -> usize {
        match &self.kind {
            RobotKind::PointRobot2D => 2,
            RobotKind::PlanarArm { link_lengths, .. } => link_lengths.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clearance.is_finite() && self.clearance >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "clearance",
                reason: format!("must be non-negative, got {}", self.clearance),
            });
        }
        if let RobotKind::PlanarArm { link_lengths, .. } = &self.kind {
            if link_lengths.is_empty() || link_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(Error::InvalidParameter {
                    name: "link_lengths",
                    reason: "need at least one positive link length".into(),
                });
            }
        }
        Ok(())
    }

    /// Workspace points occupied by the robot: the point itself, or the arm's
    /// joint chain from the base to the tip.
    pub fn body_points(&self, q: &Configuration) -> Vec<Point3> {
        match &self.kind {
            RobotKind::PointRobot2D => vec![[q[0], q[1], 0.0]],
            RobotKind::PlanarArm { link_lengths, base } => {
                forward_kinematics(link_lengths, *base, q)
                    .into_iter()
                    .map(|[x, y]| [x, y, 0.0])
                    .collect()
            }
        }
    }
}

/// Joint positions of a planar serial arm: the base followed by the end of
/// each link, with joint angles accumulated along the chain.
pub fn forward_kinematics(link_lengths: &[f64], base: [f64; 2], q: &Configuration) -> Vec<[f64; 2]> {
    debug_assert_eq!(link_lengths.len(), q.dim());
    let mut points = Vec::with_capacity(link_lengths.len() + 1);
    let [mut x, mut y] = base;
    let mut angle = 0.0;
    points.push(base);
    for (length, joint) in link_lengths.iter().zip(q.as_slice()) {
        angle += joint;
        x += length * angle.cos();
        y += length * angle.sin();
        points.push([x, y]);
    }
    points
}

/// Counters shared by clones of an instrumented checker.
#[derive(Debug, Default)]
pub struct CheckStats {
    configurations: AtomicU64,
    edges: AtomicU64,
}

impl CheckStats {
    pub fn configurations(&self) -> u64 {
        self.configurations.load(AtomicOrdering::Relaxed)
    }

    pub fn edges(&self) -> u64 {
        self.edges.load(AtomicOrdering::Relaxed)
    }
}

#[derive(Debug, Clone)]
pub struct CollisionChecker {
    robot: RobotModel,
    resolution: f64,
    metric: Metric,
    stats: Option<Arc<CheckStats>>,
}

impl CollisionChecker {
    pub fn new(robot: RobotModel, metric: Metric, resolution: f64) -> Result<Self> {
        robot.validate()?;
        metric.validate_dim(robot.dof())?;
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidParameter {
                name: "resolution",
                reason: format!("must be positive, got {resolution}"),
            });
        }
        Ok(Self {
            robot,
            resolution,
            metric,
            stats: None,
        })
    }

    /// Enables call counting; the returned handle observes all clones.
    pub fn instrument(&mut self) -> Arc<CheckStats> {
        let stats = Arc::new(CheckStats::default());
        self.stats = Some(stats.clone());
        stats
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Copy of this checker with a different edge step.
    pub fn with_resolution(&self, resolution: f64) -> Result<Self> {
        let mut checker = Self::new(self.robot.clone(), self.metric.clone(), resolution)?;
        checker.stats = self.stats.clone();
        Ok(checker)
    }

    /// `true` when `q` is collision-free.
    pub fn check_configuration(&self, snap: &SceneSnapshot, q: &Configuration) -> Result<bool> {
        q.ensure_dim(self.robot.dof())?;
        Ok(self.is_free(snap, q))
    }

    pub(crate) fn is_free(&self, snap: &SceneSnapshot, q: &Configuration) -> bool {
        self.is_free_by(snap, q, 0.0)
    }

    /// Upper bound on how far any body point moves per unit of metric distance.
    fn lipschitz(&self) -> f64 {
        let min_weight = (0..self.robot.dof())
            .map(|i| self.metric.weight_sq(i).sqrt())
            .fold(f64::INFINITY, f64::min);
        let joint_space = match &self.robot.kind {
            RobotKind::PointRobot2D => 1.0,
            // Joint j moves every point beyond it by at most the remaining reach
            // times its angle change.
            RobotKind::PlanarArm { link_lengths, .. } => (0..link_lengths.len())
                .map(|j| link_lengths[j..].iter().sum::<f64>().powi(2))
                .sum::<f64>()
                .sqrt(),
        };
        joint_space / min_weight
    }

    fn is_free_by(&self, snap: &SceneSnapshot, q: &Configuration, margin: f64) -> bool {
        if let Some(stats) = &self.stats {
            stats.configurations.fetch_add(1, AtomicOrdering::Relaxed);
        }
        let clearance = self.robot.clearance + margin;
        match &self.robot.kind {
            RobotKind::PointRobot2D => {
                let p = [q[0], q[1], 0.0];
                snap.obstacles
                    .iter()
                    .all(|o| o.shape.distance_to_point(&o.position, &p) > clearance)
            }
            RobotKind::PlanarArm { link_lengths, base } => {
                let joints = forward_kinematics(link_lengths, *base, q);
                let reach: f64 = link_lengths.iter().sum();
                snap.obstacles.iter().all(|o| {
                    // Cheap rejection: obstacle beyond the arm's reach.
                    let far = norm(sub(&o.position, &[base[0], base[1], 0.0]))
                        - o.shape.bounding_radius();
                    if far > reach + clearance {
                        return true;
                    }
                    joints.windows(2).all(|w| {
                        let a = [w[0][0], w[0][1], 0.0];
                        let b = [w[1][0], w[1][1], 0.0];
                        o.shape.distance_to_segment(&o.position, &a, &b) > clearance
                    })
                })
            }
        }
    }

    /// Number of interior steps used to discretize an edge of the given metric length.
    fn steps(&self, length: f64) -> usize {
        if length <= 0.0 {
            0
        } else {
            (length / self.resolution).ceil().max(1.0) as usize
        }
    }

    /// `true` when every discretized configuration on the straight segment
    /// `a → b`, endpoints included, is free. Samples must clear obstacles by
    /// the distance the body can sweep in half a step, so the whole segment is
    /// free, not just the samples. Symmetric in `a` and `b`.
    pub fn check_edge(&self, snap: &SceneSnapshot, a: &Configuration, b: &Configuration) -> bool {
        self.first_collision(snap, a, b).is_none()
    }

    /// Fraction along `a → b` of the first colliding sample, if any.
    pub fn first_collision(
        &self,
        snap: &SceneSnapshot,
        a: &Configuration,
        b: &Configuration,
    ) -> Option<f64> {
        if let Some(stats) = &self.stats {
            stats.edges.fetch_add(1, AtomicOrdering::Relaxed);
        }
        // Samples are generated from a canonical endpoint order so that the
        // sampled set does not depend on the direction of the query.
        let reversed = lexicographic(a, b) == Ordering::Greater;
        let (lo, hi) = if reversed { (b, a) } else { (a, b) };
        let length = self.metric.distance(lo, hi);
        let n = self.steps(length);
        if n == 0 {
            return (!self.is_free(snap, a)).then_some(0.0);
        }
        let margin = 0.5 * self.lipschitz() * length / n as f64;
        let at = |i: usize| lo.lerp(hi, i as f64 / n as f64);
        for k in 0..=n {
            let i = if reversed { n - k } else { k };
            if !self.is_free_by(snap, &at(i), margin) {
                return Some(k as f64 / n as f64);
            }
        }
        None
    }
}

fn lexicographic(a: &Configuration, b: &Configuration) -> Ordering {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[inline]
fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

fn lerp3(a: &Point3, b: &Point3, u: f64) -> Point3 {
    [
        a[0] + u * (b[0] - a[0]),
        a[1] + u * (b[1] - a[1]),
        a[2] + u * (b[2] - a[2]),
    ]
}

/// Distance from `p` to the segment `a b`.
pub fn point_segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = sub(b, a);
    let len_sq = dot(ab, ab);
    let u = if len_sq > 0.0 {
        (dot(sub(p, a), ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, &lerp3(a, b, u)))
}

fn box_distance(center: &Point3, half: &[f64; 3], p: &Point3) -> f64 {
    let mut sq = 0.0;
    for i in 0..3 {
        let d = (p[i] - center[i]).abs() - half[i];
        if d > 0.0 {
            sq += d * d;
        }
    }
    sq.sqrt()
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(f(0.0)).min(f(1.0))
}
