use crate::clock::BudgetMeter;
use crate::cspace::Sampler;
use crate::error::Result;
use crate::graph::{Path, Tree};

use crate::solvers::grow_towards;

use super::{ReplanOutcome, ReplanRequest, Replanner, ReplannerContext, ReplannerParams};

/// Surviving nodes tried for a direct reconnection before growing the tree.
const RECONNECT_CANDIDATES: usize = 16;

/// Dynamic RRT. Keeps a goal-rooted tree across cycles; each cycle removes
/// the branches invalidated by the new snapshot and regrows from the goal side
/// until the replan configuration is reached again.
#[derive(Debug, Clone)]
pub struct Drrt {
    ctx: ReplannerContext,
    max_tree_nodes: usize,
    sampler: Sampler,
    tree: Option<Tree>,
    last_pruned: usize,
}

impl Drrt {
    pub fn new(ctx: ReplannerContext, params: &ReplannerParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            sampler: Sampler::uniform(ctx.bounds.clone(), ctx.seed),
            max_tree_nodes: params.max_tree_nodes,
            ctx,
            tree: None,
            last_pruned: 0,
        })
    }

    /// The tree kept for the next cycle.
    pub fn tree(&self) -> Option<&Tree> {
        self.tree.as_ref()
    }

    /// Nodes removed by the last prune.
    pub fn last_pruned(&self) -> usize {
        self.last_pruned
    }

    fn is_goal(&self, tree: &Tree, index: usize) -> bool {
        tree.metric().distance(&tree.node(index).q, &self.ctx.goal) == 0.0
    }

    /// The persistent tree, or one rebuilt goal-rooted from the request.
    fn goal_tree(&mut self, req: &ReplanRequest) -> Tree {
        if let Some(tree) = self.tree.take() {
            if tree.len() <= self.max_tree_nodes {
                return tree;
            }
        }
        if let Some(tree) = &req.current_tree {
            if tree.len() <= self.max_tree_nodes {
                if let Some(goal) = (0..tree.len()).find(|&i| self.is_goal(tree, i)) {
                    return if goal == 0 { tree.clone() } else { tree.reroot(goal) };
                }
            }
        }
        let remainder = req.current_path.subpath_from(req.s_repl, &self.ctx.ids);
        Tree::goal_rooted_from_path(&remainder)
    }
}

impl Replanner for Drrt {
    fn name(&self) -> &str {
        "drrt"
    }

    fn replan(&mut self, req: &ReplanRequest) -> ReplanOutcome {
        let mut meter = BudgetMeter::start(req.budget);
        let tree = self.goal_tree(req);
        let checker = &self.ctx.checker;
        let snap = &*req.snapshot;
        let (mut tree, pruned) = match tree.prune_invalid(checker, snap) {
            Ok(pruned) => pruned,
            Err(_) => {
                self.tree = None;
                return ReplanOutcome::failed(None, meter.elapsed());
            }
        };
        self.last_pruned = pruned;
        if !checker.is_free(snap, &req.x_repl) {
            self.tree = Some(tree.clone());
            return ReplanOutcome::failed(Some(tree), meter.elapsed());
        }
        if pruned == 0 && req.current_path.remaining_cost(req.s_repl).is_finite() {
            self.tree = Some(tree.clone());
            return ReplanOutcome::unchanged(Some(tree), meter.elapsed());
        }

        let x_repl = &req.x_repl;
        let metric = tree.metric().clone();
        let costs = tree.costs_to_root();
        let mut order: Vec<(f64, f64, usize)> = (0..tree.len())
            .map(|i| {
                let d = metric.distance(&tree.node(i).q, x_repl);
                (d + costs[i], d, i)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

        let mut reached = None;
        for &(_, d, i) in order.iter().take(RECONNECT_CANDIDATES) {
            if meter.exhausted() {
                break;
            }
            meter.tick();
            if d == 0.0 {
                reached = Some(i);
                break;
            }
            if checker.check_edge(snap, &tree.node(i).q, x_repl) {
                reached = Some(tree.add(x_repl.clone(), i, &self.ctx.ids));
                break;
            }
        }
        if reached.is_none() {
            let grown = grow_towards(
                &mut tree,
                x_repl,
                &mut self.sampler,
                checker,
                snap,
                &req.solver_config,
                &self.ctx.ids,
                &mut meter,
            );
            reached = match grown {
                Ok(Some(i)) if tree.node(i).q == *x_repl => Some(i),
                // Within goal tolerance but not exact: close the gap explicitly.
                Ok(Some(i)) if checker.check_edge(snap, &tree.node(i).q, x_repl) => {
                    Some(tree.add(x_repl.clone(), i, &self.ctx.ids))
                }
                _ => None,
            };
        }
        let outcome = match reached {
            Some(i) => {
                let path: Path = tree.path_to_root(i);
                debug_assert!(path.start().q == *x_repl);
                ReplanOutcome::new_path(path, Some(tree.clone()), meter.elapsed())
            }
            None => ReplanOutcome::failed(Some(tree.clone()), meter.elapsed()),
        };
        self.tree = Some(tree);
        outcome
    }
}
