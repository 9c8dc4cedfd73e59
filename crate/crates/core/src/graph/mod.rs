//! Search structures shared by solvers and replanners: nodes, connections,
//! rooted trees and piecewise-linear paths.

mod path;
mod tree;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cspace::Configuration;

pub use path::{
    path_cost, project_on_path, split_at, subpath_from, update_path_cost, CostUpdate, Path,
    ABSCISSA_EPS,
};
pub use tree::{prune_invalid, Tree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

/// Monotone node id allocator. Clones share the counter.
#[derive(Debug, Clone, Default)]
pub struct NodeIds(Arc<AtomicU64>);

impl NodeIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next(&self) -> NodeId {
        NodeId(self.0.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub q: Configuration,
}

impl Node {
    pub fn new(id: NodeId, q: Configuration) -> Self {
        Self { id, q }
    }
}

/// Directed edge between two nodes of a path or tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub parent: NodeId,
    pub child: NodeId,
    /// Metric length of the edge, always finite.
    pub length: f64,
    /// `length` while free, `+inf` once found obstructed.
    pub cost: f64,
    /// Snapshot version this edge was last checked against.
    pub checked_version: Option<u64>,
    /// Fraction along the edge of the first colliding sample.
    pub block_fraction: Option<f64>,
}

impl Connection {
    pub fn free(parent: NodeId, child: NodeId, length: f64) -> Self {
        Self {
            parent,
            child,
            length,
            cost: length,
            checked_version: None,
            block_fraction: None,
        }
    }

    pub fn is_obstructed(&self) -> bool {
        self.cost == f64::INFINITY
    }

    pub(crate) fn mark(&mut self, version: u64, block: Option<f64>) {
        self.checked_version = Some(version);
        self.block_fraction = block;
        self.cost = if block.is_some() {
            f64::INFINITY
        } else {
            self.length
        };
    }
}
