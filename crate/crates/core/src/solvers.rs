//! RRT path planning and randomized shortcutting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::{Budget, BudgetMeter};
use crate::cspace::{Configuration, JointBounds, Metric, Sampler};
use crate::error::{Error, Result};
use crate::graph::{Node, NodeIds, Path, Tree};
use crate::scene::{CollisionChecker, SceneSnapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Longest step taken towards a sample.
    pub max_extension: f64,
    /// Probability of sampling the target instead of the space.
    pub goal_bias: f64,
    pub max_iterations: usize,
    pub goal_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_extension: 0.5,
            goal_bias: 0.1,
            max_iterations: 100_000,
            goal_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.max_extension.is_finite() && self.max_extension > 0.0) {
            return fail("max_extension", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return fail("goal_bias", "must lie in [0, 1]");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations", "must be at least 1");
        }
        if !(self.goal_tolerance.is_finite() && self.goal_tolerance >= 0.0) {
            return fail("goal_tolerance", "must be non-negative");
        }
        Ok(())
    }
}

/// Everything a solver needs to plan from `start` to `goal` in one snapshot.
#[derive(Debug, Clone)]
pub struct PlanningProblem {
    pub start: Configuration,
    pub goal: Configuration,
    pub bounds: JointBounds,
    pub metric: Metric,
    pub sampler: Sampler,
    pub checker: CollisionChecker,
    pub snapshot: Arc<SceneSnapshot>,
    pub ids: NodeIds,
}

impl PlanningProblem {
    pub fn new(
        start: Configuration,
        goal: Configuration,
        bounds: JointBounds,
        checker: CollisionChecker,
        snapshot: Arc<SceneSnapshot>,
        seed: u64,
    ) -> Result<Self> {
        let dim = checker.robot().dof();
        start.ensure_dim(dim)?;
        goal.ensure_dim(dim)?;
        bounds.lower().ensure_dim(dim)?;
        for (name, q) in [("start", &start), ("goal", &goal)] {
            if !bounds.contains(q) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "outside joint bounds".into(),
                });
            }
        }
        Ok(Self {
            metric: checker.metric().clone(),
            sampler: Sampler::uniform(bounds.clone(), seed),
            start,
            goal,
            bounds,
            checker,
            snapshot,
            ids: NodeIds::new(),
        })
    }

    /// Same problem from a different start, snapshot and seed, sharing ids.
    pub fn replan_from(&self, start: Configuration, snapshot: Arc<SceneSnapshot>, seed: u64) -> Self {
        let mut sampler = self.sampler.clone();
        sampler.reseed(seed);
        Self {
            start,
            snapshot,
            sampler,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Tree rooted at the problem start; always valid.
    pub tree: Tree,
    pub path: Option<Path>,
    pub iterations: u64,
    /// Seconds on the budget's clock.
    pub elapsed: f64,
}

/// Grows `tree` towards `target` with single-step extensions, trying a direct
/// connection to the target after every successful extension. Returns the
/// index of the node reaching the target.
#[allow(clippy::too_many_arguments)]
pub(crate) fn grow_towards(
    tree: &mut Tree,
    target: &Configuration,
    sampler: &mut Sampler,
    checker: &CollisionChecker,
    snap: &SceneSnapshot,
    cfg: &SolverConfig,
    ids: &NodeIds,
    meter: &mut BudgetMeter,
) -> Result<Option<usize>> {
    let metric = tree.metric().clone();
    let mut iterations = 0;
    while iterations < cfg.max_iterations && !meter.exhausted() {
        iterations += 1;
        meter.tick();
        let sample = if sampler.chance(cfg.goal_bias) {
            target.clone()
        } else {
            sampler.sample()?
        };
        let near = tree.nearest(&sample);
        let near_q = &tree.node(near).q;
        let d = metric.distance(near_q, &sample);
        if d == 0.0 {
            continue;
        }
        let q_new = if d <= cfg.max_extension {
            sample
        } else {
            near_q.lerp(&sample, cfg.max_extension / d)
        };
        if !checker.check_edge(snap, near_q, &q_new) {
            continue;
        }
        let new = tree.add(q_new, near, ids);
        if let Some(hit) = try_connect(tree, new, target, checker, snap, cfg, ids) {
            return Ok(Some(hit));
        }
    }
    Ok(None)
}

/// Direct connection from node `from` to `target`.
pub(crate) fn try_connect(
    tree: &mut Tree,
    from: usize,
    target: &Configuration,
    checker: &CollisionChecker,
    snap: &SceneSnapshot,
    cfg: &SolverConfig,
    ids: &NodeIds,
) -> Option<usize> {
    let q = &tree.node(from).q;
    if tree.metric().distance(q, target) <= cfg.goal_tolerance {
        return Some(from);
    }
    if checker.check_edge(snap, q, target) {
        return Some(tree.add(target.clone(), from, ids));
    }
    None
}

/// Plans a path from `prob.start` to `prob.goal` with RRT.
pub fn rrt_solve(prob: &mut PlanningProblem, cfg: &SolverConfig, budget: Budget) -> Result<SolveResult> {
    rrt_solve_metered(prob, cfg, BudgetMeter::start(budget))
}

/// [`rrt_solve`] charging an already running meter.
pub(crate) fn rrt_solve_metered(
    prob: &mut PlanningProblem,
    cfg: &SolverConfig,
    mut meter: BudgetMeter,
) -> Result<SolveResult> {
    cfg.validate()?;
    if !prob.checker.is_free(&prob.snapshot, &prob.start) {
        return Err(Error::StartInCollision);
    }
    let mut tree = Tree::new(prob.metric.clone(), Node::new(prob.ids.next(), prob.start.clone()));
    let finish = |tree: Tree, hit: Option<usize>, meter: &BudgetMeter| {
        let path = hit.map(|i| tree.path_from_root(i));
        SolveResult {
            tree,
            path,
            iterations: meter.iterations(),
            elapsed: meter.elapsed(),
        }
    };
    if !prob.checker.is_free(&prob.snapshot, &prob.goal) {
        return Ok(finish(tree, None, &meter));
    }
    let snap = prob.snapshot.clone();
    if let Some(hit) = try_connect(&mut tree, 0, &prob.goal, &prob.checker, &snap, cfg, &prob.ids) {
        return Ok(finish(tree, Some(hit), &meter));
    }
    let hit = grow_towards(
        &mut tree,
        &prob.goal,
        &mut prob.sampler,
        &prob.checker,
        &snap,
        cfg,
        &prob.ids,
        &mut meter,
    )?;
    Ok(finish(tree, hit, &meter))
}

/// Randomized shortcutting: replaces the stretch between two random abscissae
/// by a straight edge when it is free and strictly shorter.
pub fn shortcut(path: &Path, prob: &mut PlanningProblem, cfg: &SolverConfig, budget: Budget) -> Path {
    shortcut_metered(path, prob, cfg, &mut BudgetMeter::start(budget))
}

pub(crate) fn shortcut_metered(
    path: &Path,
    prob: &mut PlanningProblem,
    cfg: &SolverConfig,
    meter: &mut BudgetMeter,
) -> Path {
    let mut current = path.clone();
    if !current.cost().is_finite() {
        return current;
    }
    let mut attempts = 0;
    while attempts < cfg.max_iterations && !meter.exhausted() {
        attempts += 1;
        meter.tick();
        if current.connections().len() < 2 {
            break;
        }
        let length = current.length();
        let a = prob.sampler.uniform_scalar(0.0, length);
        let b = prob.sampler.uniform_scalar(0.0, length);
        let (s1, s2) = if a < b { (a, b) } else { (b, a) };
        let head = current.section(0.0, s1, &prob.ids);
        let tail = current.subpath_from(s2, &prob.ids);
        let (p1, p2) = (&head.goal().q, &tail.start().q);
        let direct = prob.metric.distance(p1, p2);
        let along = current.length() - head.length() - tail.length();
        if direct >= along - 1e-12 {
            continue;
        }
        if !prob.checker.check_edge(&prob.snapshot, p1, p2) {
            continue;
        }
        let bridge = Path::new(prob.metric.clone(), vec![head.goal().clone(), tail.start().clone()])
            .expect("same dimension");
        let candidate = head
            .concat(&bridge)
            .and_then(|p| p.concat(&tail))
            .expect("pieces are contiguous");
        if candidate.cost() < current.cost() {
            current = candidate;
        }
    }
    current
}
