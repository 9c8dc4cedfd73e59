use std::fs;
use std::path::Path as FsPath;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Budget;
use crate::cspace::{Configuration, JointBounds, Metric};
use crate::error::Error;
use crate::graph::Path;
use crate::manager::ManagerConfig;
use crate::replanners::{Registry, ReplannerParams, TriggerPolicy};
use crate::scene::{CollisionChecker, Motion, Obstacle, Point3, RobotKind, RobotModel, Scene, SceneSnapshot, Shape};
use crate::solvers::{rrt_solve, shortcut, PlanningProblem, SolverConfig};
use crate::trajectory::Trajectory;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Resamples allowed per random obstacle before giving up.
pub const MAX_SPAWN_ATTEMPTS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {found}, expected {SCENARIO_SCHEMA_VERSION}")]
    SchemaVersion { found: u32 },
    #[error("`{field}`: {source}")]
    Invalid { field: String, source: Error },
}

impl ScenarioError {
    fn at(field: impl Into<String>) -> impl FnOnce(Error) -> ScenarioError {
        let field = field.into();
        move |source| ScenarioError::Invalid { field, source }
    }
}

/// Robot section of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RobotSpec {
    Point {
        #[serde(default)]
        clearance: f64,
    },
    PlanarArm {
        link_lengths: Vec<f64>,
        #[serde(default)]
        base: [f64; 2],
        #[serde(default)]
        clearance: f64,
    },
}

impl RobotSpec {
    pub fn model(&self) -> RobotModel {
        match self {
            RobotSpec::Point { clearance } => RobotModel::point(*clearance),
            RobotSpec::PlanarArm {
                link_lengths,
                base,
                clearance,
            } => RobotModel::planar_arm(link_lengths.clone(), *base, *clearance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplannerSpec {
    pub name: String,
    #[serde(default)]
    pub trigger_policy: TriggerPolicy,
    #[serde(default)]
    pub params: ReplannerParams,
}

impl Default for ReplannerSpec {
    fn default() -> Self {
        Self {
            name: "drrt".into(),
            trigger_policy: TriggerPolicy::default(),
            params: ReplannerParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpawnShape {
    Sphere,
    /// Axis-aligned cube; the size is its half extent.
    Box,
}

/// Obstacles appearing at random places and times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnerSpec {
    pub count: usize,
    #[serde(default = "default_spawn_shape")]
    pub shape: SpawnShape,
    /// Radius or half extent, uniform in `[min, max]`.
    pub size: [f64; 2],
    pub region_lower: Point3,
    pub region_upper: Point3,
    pub time_window: [f64; 2],
}

fn default_spawn_shape() -> SpawnShape {
    SpawnShape::Sphere
}

impl SpawnerSpec {
    fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |field: &str, reason: &str| ScenarioError::Invalid {
            field: format!("random_spawner.{field}"),
            source: Error::InvalidParameter {
                name: "random_spawner",
                reason: reason.into(),
            },
        };
        let [lo, hi] = self.size;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(bad("size", "need 0 < min <= max"));
        }
        for k in 0..3 {
            let (l, u) = (self.region_lower[k], self.region_upper[k]);
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(bad("region_lower", "region lower corner must not exceed the upper one"));
            }
        }
        let [t0, t1] = self.time_window;
        if !(t0.is_finite() && t1.is_finite() && 0.0 <= t0 && t0 <= t1) {
            return Err(bad("time_window", "need 0 <= start <= end"));
        }
        Ok(())
    }
}

/// On-disk layout; turned into a [`Scenario`] by validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    name: String,
    #[serde(default)]
    seed: u64,
    robot: RobotSpec,
    bounds: BoundsSpec,
    start: Vec<f64>,
    goal: Vec<f64>,
    #[serde(default)]
    metric: Metric,
    #[serde(default = "default_resolution")]
    resolution: f64,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    replanner: ReplannerSpec,
    #[serde(default)]
    manager: ManagerConfig,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
    random_spawner: Option<SpawnerSpec>,
    initial_path: Option<Vec<Vec<f64>>>,
}

fn default_resolution() -> f64 {
    0.01
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub robot: RobotSpec,
    pub bounds: JointBounds,
    pub start: Configuration,
    pub goal: Configuration,
    pub metric: Metric,
    pub resolution: f64,
    pub solver: SolverConfig,
    pub replanner: ReplannerSpec,
    pub manager: ManagerConfig,
    pub obstacles: Vec<Obstacle>,
    pub random_spawner: Option<SpawnerSpec>,
    /// Waypoints of the initial path; planned when absent.
    pub initial_path: Option<Vec<Configuration>>,
}

/// Reads and validates a scenario file against the default registry.
pub fn load_scenario(path: impl AsRef<FsPath>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::parse(&text, &Registry::default())
}

fn configuration(field: &str, values: Vec<f64>, dim: usize) -> Result<Configuration, ScenarioError> {
    let q = Configuration::new(values).map_err(ScenarioError::at(field))?;
    if q.dim() != dim {
        return Err(ScenarioError::Invalid {
            field: field.into(),
            source: Error::DimensionMismatch {
                expected: dim,
                found: q.dim(),
            },
        });
    }
    Ok(q)
}

impl Scenario {
    /// Parses TOML text; replanner names are checked against `registry`.
    pub fn parse(text: &str, registry: &Registry) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion {
                found: file.schema_version,
            });
        }
        let robot = file.robot.model();
        robot.validate().map_err(ScenarioError::at("robot"))?;
        let dof = robot.dof();
        let lower = configuration("bounds.lower", file.bounds.lower, dof)?;
        let upper = configuration("bounds.upper", file.bounds.upper, dof)?;
        let bounds = JointBounds::new(lower, upper).map_err(ScenarioError::at("bounds"))?;
        let start = configuration("start", file.start, dof)?;
        let goal = configuration("goal", file.goal, dof)?;
        for (field, q) in [("start", &start), ("goal", &goal)] {
            if !bounds.contains(q) {
                return Err(ScenarioError::Invalid {
                    field: field.into(),
                    source: Error::InvalidParameter {
                        name: "bounds",
                        reason: "configuration outside joint bounds".into(),
                    },
                });
            }
        }
        if start == goal {
            return Err(ScenarioError::Invalid {
                field: "goal".into(),
                source: Error::InvalidParameter {
                    name: "goal",
                    reason: "must differ from start".into(),
                },
            });
        }
        file.metric.validate_dim(dof).map_err(ScenarioError::at("metric"))?;
        CollisionChecker::new(robot, file.metric.clone(), file.resolution).map_err(ScenarioError::at("resolution"))?;
        file.solver.validate().map_err(ScenarioError::at("solver"))?;
        registry.check(&file.replanner.name).map_err(ScenarioError::at("replanner.name"))?;
        file.replanner.params.validate().map_err(ScenarioError::at("replanner.params"))?;
        let mut manager = file.manager;
        manager.trigger_policy = file.replanner.trigger_policy;
        manager.validate().map_err(|source| {
            let field = match &source {
                Error::InvalidParameter { name, .. } => format!("manager.{name}"),
                _ => "manager".into(),
            };
            ScenarioError::Invalid { field, source }
        })?;
        for (i, o) in file.obstacles.iter().enumerate() {
            o.shape.validate().map_err(ScenarioError::at(format!("obstacles[{i}].shape")))?;
        }
        if let Some(spawner) = &file.random_spawner {
            spawner.validate()?;
        }
        let initial_path = file
            .initial_path
            .map(|waypoints| {
                waypoints
                    .into_iter()
                    .enumerate()
                    .map(|(i, w)| configuration(&format!("initial_path[{i}]"), w, dof))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        if let Some(waypoints) = &initial_path {
            if waypoints.len() < 2 || waypoints[0] != start || *waypoints.last().unwrap() != goal {
                return Err(ScenarioError::Invalid {
                    field: "initial_path".into(),
                    source: Error::InitialPathMismatch,
                });
            }
        }
        Ok(Scenario {
            name: file.name,
            seed: file.seed,
            robot: file.robot,
            bounds,
            start,
            goal,
            metric: file.metric,
            resolution: file.resolution,
            solver: file.solver,
            replanner: file.replanner,
            manager,
            obstacles: file.obstacles,
            random_spawner: file.random_spawner,
            initial_path,
        })
    }

    pub fn checker(&self) -> CollisionChecker {
        CollisionChecker::new(self.robot.model(), self.metric.clone(), self.resolution).expect("validated at load")
    }

    /// Planning problem over the world at time zero.
    pub fn problem(&self, seed: u64) -> PlanningProblem {
        let snapshot = Scene::new(self.obstacles.clone()).expect("validated at load").world_at(0.0, 0);
        PlanningProblem::new(
            self.start.clone(),
            self.goal.clone(),
            self.bounds.clone(),
            self.checker(),
            Arc::new(snapshot),
            seed,
        )
        .expect("validated at load")
    }

    /// The declared waypoints, else the straight segment when free, else an
    /// RRT path shortened by shortcutting.
    pub fn initial_path(&self, problem: &mut PlanningProblem) -> crate::error::Result<Path> {
        let metric = problem.metric.clone();
        if let Some(waypoints) = &self.initial_path {
            return Path::from_configurations(metric, &problem.ids, waypoints.iter().cloned());
        }
        if problem.checker.check_edge(&problem.snapshot, &problem.start, &problem.goal) {
            return Path::from_configurations(metric, &problem.ids, [problem.start.clone(), problem.goal.clone()]);
        }
        let found = rrt_solve(problem, &self.solver, Budget::Unlimited)?;
        let path = found.path.ok_or(Error::NoInitialPath)?;
        let cfg = SolverConfig {
            max_iterations: 500,
            ..self.solver.clone()
        };
        Ok(shortcut(&path, problem, &cfg, Budget::Unlimited))
    }

    /// Declared obstacles plus the random ones for `seed`.
    pub fn scene(&self, seed: u64, initial_path: &Path) -> crate::error::Result<Scene> {
        let mut obstacles = self.obstacles.clone();
        if let Some(spec) = &self.random_spawner {
            obstacles.extend(spawn_random_obstacles(spec, seed, &self.checker(), initial_path, &self.manager)?);
        }
        Scene::new(obstacles)
    }

    pub fn robot_model(&self) -> RobotModel {
        self.robot.model()
    }

    pub fn is_arm(&self) -> bool {
        matches!(self.robot_model().kind, RobotKind::PlanarArm { .. })
    }
}

/// Draws `spec.count` obstacles appearing at random times. None may overlap
/// the robot where it is expected at its spawn time, following the nominal
/// motion along `path`.
pub fn spawn_random_obstacles(
    spec: &SpawnerSpec,
    seed: u64,
    checker: &CollisionChecker,
    path: &Path,
    cfg: &ManagerConfig,
) -> crate::error::Result<Vec<Obstacle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let nominal = Trajectory::along(Arc::new(path.clone()), cfg.v_max, cfg.a_max, 0.0, 0.0)?;
    let mut draw = |lo: f64, hi: f64| if lo < hi { rng.gen_range(lo..hi) } else { lo };
    let mut obstacles = Vec::with_capacity(spec.count);
    for k in 0..spec.count {
        let mut placed = None;
        for _ in 0..MAX_SPAWN_ATTEMPTS {
            let position = [0, 1, 2].map(|i| draw(spec.region_lower[i], spec.region_upper[i]));
            let size = draw(spec.size[0], spec.size[1]);
            let time = draw(spec.time_window[0], spec.time_window[1]);
            let shape = match spec.shape {
                SpawnShape::Sphere => Shape::Sphere { radius: size },
                SpawnShape::Box => Shape::Box {
                    half_extents: [size; 3],
                },
            };
            let candidate = Obstacle {
                id: format!("random{k}"),
                shape,
                position,
                motion: Motion::SpawnAt { time },
            };
            let robot_then = nominal.sample(time).state.q;
            let alone = SceneSnapshot {
                capture_time: time,
                version: 0,
                obstacles: Scene::new(vec![candidate.clone()])?.world_at(time, 0).obstacles,
            };
            if checker.check_configuration(&alone, &robot_then)? {
                placed = Some(candidate);
                break;
            }
        }
        obstacles.push(placed.ok_or(Error::InvalidParameter {
            name: "random_spawner",
            reason: format!("no free placement for obstacle {k} after {MAX_SPAWN_ATTEMPTS} attempts; region too small"),
        })?);
    }
    Ok(obstacles)
}
