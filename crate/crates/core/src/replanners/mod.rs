//! The replanner abstraction, its name-keyed registry, the trigger rule and
//! two implementations: DRRT and multi-parallel RRT.

mod drrt;
mod mprrt;
#[cfg(test)]
mod tests_scenarios;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Budget;
use crate::cspace::{Configuration, JointBounds};
use crate::error::{Error, Result};
use crate::graph::{NodeIds, Path, Tree};
use crate::scene::{CollisionChecker, SceneSnapshot};
use crate::solvers::{PlanningProblem, SolverConfig};

pub use drrt::Drrt;
pub use mprrt::{Candidate, MultiParallelRrt};

/// When the replanning loop calls the replanner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerPolicy {
    /// Only while the current path is obstructed.
    #[default]
    OnObstruction,
    /// Every cycle, to refine the current solution.
    Continuous,
}

/// Whether the replanner runs this cycle. The obstruction flag is informative
/// only: an obstructed path always has infinite cost.
pub fn trigger(policy: TriggerPolicy, path_cost_now: f64, _path_was_obstructed: bool) -> bool {
    match policy {
        TriggerPolicy::OnObstruction => path_cost_now == f64::INFINITY,
        TriggerPolicy::Continuous => true,
    }
}

/// One replanning query. Everything here is a private copy for the call.
#[derive(Debug, Clone)]
pub struct ReplanRequest {
    /// Replan-ahead configuration; every new path starts exactly here.
    pub x_repl: Configuration,
    /// Abscissa of `x_repl` on `current_path`.
    pub s_repl: f64,
    /// Path with obstruction flags computed against `snapshot`.
    pub current_path: Path,
    pub current_tree: Option<Tree>,
    pub snapshot: Arc<SceneSnapshot>,
    /// `max_replanning_time` and the clock it is measured on.
    pub budget: Budget,
    pub solver_config: SolverConfig,
}

impl ReplanRequest {
    pub fn max_replanning_time(&self) -> f64 {
        self.budget.seconds().unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_replanning_time() > 0.0) {
            return Err(Error::InvalidParameter {
                name: "max_replanning_time",
                reason: "must be positive".into(),
            });
        }
        let (_, on_path) = self.current_path.project(&self.x_repl, None);
        let off = self.current_path.metric().distance(&on_path, &self.x_repl);
        if off > 1e-6 {
            return Err(Error::OffPath(off));
        }
        self.solver_config.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanStatus {
    NewPath,
    PathUnchanged,
    Failed,
}

impl fmt::Display for ReplanStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReplanStatus::NewPath => "new_path",
            ReplanStatus::PathUnchanged => "path_unchanged",
            ReplanStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReplanOutcome {
    pub status: ReplanStatus,
    pub path: Option<Path>,
    pub tree: Option<Tree>,
    /// Seconds on the request budget's clock.
    pub elapsed: f64,
}

impl ReplanOutcome {
    pub fn new_path(path: Path, tree: Option<Tree>, elapsed: f64) -> Self {
        Self {
            status: ReplanStatus::NewPath,
            path: Some(path),
            tree,
            elapsed,
        }
    }

    pub fn unchanged(tree: Option<Tree>, elapsed: f64) -> Self {
        Self {
            status: ReplanStatus::PathUnchanged,
            path: None,
            tree,
            elapsed,
        }
    }

    pub fn failed(tree: Option<Tree>, elapsed: f64) -> Self {
        Self {
            status: ReplanStatus::Failed,
            path: None,
            tree,
            elapsed,
        }
    }
}

/// A replanning algorithm. Instances keep whatever state they like between
/// calls; the manager only calls `replan` from the replanning loop.
pub trait Replanner: Send {
    fn name(&self) -> &str;
    fn replan(&mut self, req: &ReplanRequest) -> ReplanOutcome;
}

/// Problem data that stays fixed for a whole execution.
#[derive(Debug, Clone)]
pub struct ReplannerContext {
    pub goal: Configuration,
    pub bounds: JointBounds,
    pub checker: CollisionChecker,
    pub ids: NodeIds,
    pub seed: u64,
}

impl ReplannerContext {
    /// Goal, bounds, checker and id allocator of `problem`.
    pub fn for_problem(problem: &PlanningProblem, seed: u64) -> Self {
        Self {
            goal: problem.goal.clone(),
            bounds: problem.bounds.clone(),
            checker: problem.checker.clone(),
            ids: problem.ids.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplannerParams {
    /// Independent RRT instances per multi-parallel cycle.
    pub parallel_instances: usize,
    /// Extra instance aiming at the old path beyond the obstruction.
    pub reconnect: bool,
    /// DRRT rebuilds its tree from the current path past this size.
    pub max_tree_nodes: usize,
}

impl Default for ReplannerParams {
    fn default() -> Self {
        Self {
            parallel_instances: 4,
            reconnect: true,
            max_tree_nodes: 2000,
        }
    }
}

impl ReplannerParams {
    pub fn validate(&self) -> Result<()> {
        if self.parallel_instances == 0 {
            return Err(Error::InvalidParameter {
                name: "parallel_instances",
                reason: "must be at least 1".into(),
            });
        }
        if self.max_tree_nodes < 2 {
            return Err(Error::InvalidParameter {
                name: "max_tree_nodes",
                reason: "must be at least 2".into(),
            });
        }
        Ok(())
    }
}

pub type Factory = Arc<dyn Fn(ReplannerContext, &ReplannerParams) -> Result<Box<dyn Replanner>> + Send + Sync>;

/// Replanner constructors keyed by name.
#[derive(Clone)]
pub struct Registry {
    factories: BTreeMap<String, Factory>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register("drrt", |ctx, params| Ok(Box::new(Drrt::new(ctx, params)?)));
        registry.register("mprrt", |ctx, params| Ok(Box::new(MultiParallelRrt::new(ctx, params)?)));
        registry
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Adds or replaces the constructor for `name`.
    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn(ReplannerContext, &ReplannerParams) -> Result<Box<dyn Replanner>> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Arc::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    /// Error naming the known replanners unless `name` is registered.
    pub fn check(&self, name: &str) -> Result<()> {
        if self.contains(name) {
            Ok(())
        } else {
            Err(Error::UnknownReplanner {
                name: name.to_string(),
                known: self.names().join(", "),
            })
        }
    }

    pub fn create(&self, name: &str, ctx: ReplannerContext, params: &ReplannerParams) -> Result<Box<dyn Replanner>> {
        self.check(name)?;
        params.validate()?;
        (self.factories[name])(ctx, params)
    }
}

/// Seed of instance `index` in replanning cycle `cycle` of a run seeded with `base`.
pub fn derive_seed(base: u64, cycle: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(cycle);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}
