use std::collections::VecDeque;

use crate::cspace::{Configuration, Metric};
use crate::error::{Error, Result};
use crate::scene::{CollisionChecker, SceneSnapshot};

use super::{Connection, Node, NodeId, NodeIds, Path};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub q: Configuration,
    /// Index of the parent node; `None` only for the root.
    pub parent: Option<usize>,
    /// Metric length of the edge to the parent.
    pub edge_cost: f64,
}

/// Rooted tree stored in topological order: the root sits at index 0 and
/// every parent index is smaller than its child's index.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    metric: Metric,
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn new(metric: Metric, root: Node) -> Self {
        Self {
            metric,
            nodes: vec![TreeNode {
                id: root.id,
                q: root.q,
                parent: None,
                edge_cost: 0.0,
            }],
        }
    }

    /// Chain tree rooted at the path's start.
    pub fn from_path(path: &Path) -> Self {
        let mut tree = Self::new(path.metric().clone(), path.start().clone());
        for (k, n) in path.nodes().iter().enumerate().skip(1) {
            tree.push(n.clone(), k - 1);
        }
        tree
    }

    /// Chain tree rooted at the path's goal, with edges pointing back towards the start.
    pub fn goal_rooted_from_path(path: &Path) -> Self {
        let mut nodes = path.nodes().iter().rev();
        let mut tree = Self::new(path.metric().clone(), nodes.next().expect("non-empty").clone());
        for (k, n) in nodes.enumerate() {
            tree.push(n.clone(), k);
        }
        tree
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &TreeNode {
        &self.nodes[index]
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Parent-to-child connections of the tree.
    pub fn connections(&self) -> impl Iterator<Item = Connection> + '_ {
        self.nodes.iter().filter_map(|n| {
            n.parent
                .map(|p| Connection::free(self.nodes[p].id, n.id, n.edge_cost))
        })
    }

    fn push(&mut self, node: Node, parent: usize) -> usize {
        let edge_cost = self.metric.distance(&self.nodes[parent].q, &node.q);
        self.nodes.push(TreeNode {
            id: node.id,
            q: node.q,
            parent: Some(parent),
            edge_cost,
        });
        self.nodes.len() - 1
    }

    /// Adds `q` as a child of `parent` and returns its index.
    pub fn add(&mut self, q: Configuration, parent: usize, ids: &NodeIds) -> usize {
        self.push(Node::new(ids.next(), q), parent)
    }

    /// Index of the node closest to `q` (linear scan, first minimum wins).
    pub fn nearest(&self, q: &Configuration) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = self.metric.distance(&n.q, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Node indices from `index` up to the root, inclusive.
    pub fn branch(&self, index: usize) -> Vec<usize> {
        let mut out = vec![index];
        let mut i = index;
        while let Some(p) = self.nodes[i].parent {
            out.push(p);
            i = p;
        }
        out
    }

    /// Accumulated edge cost from `index` to the root.
    pub fn cost_to_root(&self, index: usize) -> f64 {
        self.branch(index)
            .iter()
            .map(|&i| self.nodes[i].edge_cost)
            .sum()
    }

    /// Cost to root for every node, computed in one pass.
    pub fn costs_to_root(&self) -> Vec<f64> {
        let mut costs = vec![0.0; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                costs[i] = costs[p] + n.edge_cost;
            }
        }
        costs
    }

    /// Path following parent links from `index` to the root.
    pub fn path_to_root(&self, index: usize) -> Path {
        let nodes = self
            .branch(index)
            .into_iter()
            .map(|i| Node::new(self.nodes[i].id, self.nodes[i].q.clone()))
            .collect();
        Path::new(self.metric.clone(), nodes).expect("tree nodes share one dimension")
    }

    /// Path from the root down to `index`.
    pub fn path_from_root(&self, index: usize) -> Path {
        let mut branch = self.branch(index);
        branch.reverse();
        let nodes = branch
            .into_iter()
            .map(|i| Node::new(self.nodes[i].id, self.nodes[i].q.clone()))
            .collect();
        Path::new(self.metric.clone(), nodes).expect("tree nodes share one dimension")
    }

    /// Checks the structural invariants: single root at index 0, parents
    /// precede children (hence acyclic and connected), unique ids.
    pub fn is_valid(&self) -> bool {
        if self.nodes.is_empty() || self.nodes[0].parent.is_some() {
            return false;
        }
        let ordered = self
            .nodes
            .iter()
            .enumerate()
            .skip(1)
            .all(|(i, n)| matches!(n.parent, Some(p) if p < i));
        let mut ids: Vec<_> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ordered && ids.len() == self.nodes.len()
    }

    /// Same tree re-rooted at `index`, edges along the old root path reversed.
    pub fn reroot(&self, index: usize) -> Tree {
        let n = self.nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                adjacency[p].push(i);
                adjacency[i].push(p);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut parent_of = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([index]);
        seen[index] = true;
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    parent_of[j] = Some(i);
                    queue.push_back(j);
                }
            }
        }
        let mut new_index = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            new_index[i] = k;
        }
        let nodes = order
            .iter()
            .map(|&i| {
                let parent = parent_of[i].map(|p| new_index[p]);
                let edge_cost = parent_of[i]
                    .map(|p| self.metric.distance(&self.nodes[p].q, &self.nodes[i].q))
                    .unwrap_or(0.0);
                TreeNode {
                    id: self.nodes[i].id,
                    q: self.nodes[i].q.clone(),
                    parent,
                    edge_cost,
                }
            })
            .collect();
        Tree {
            metric: self.metric.clone(),
            nodes,
        }
    }

    /// Removes every edge failing `check_edge` together with the subtree below it.
    /// Returns the surviving tree and the number of removed nodes.
    pub fn prune_invalid(&self, cc: &CollisionChecker, snap: &SceneSnapshot) -> Result<(Tree, usize)> {
        if !cc.is_free(snap, &self.nodes[0].q) {
            return Err(Error::RootInCollision);
        }
        let mut keep = vec![false; self.nodes.len()];
        let mut new_index = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let alive = match n.parent {
                None => true,
                Some(p) => keep[p] && cc.check_edge(snap, &self.nodes[p].q, &n.q),
            };
            if alive {
                keep[i] = true;
                new_index[i] = nodes.len();
                nodes.push(TreeNode {
                    parent: n.parent.map(|p| new_index[p]),
                    ..n.clone()
                });
            }
        }
        let removed = self.nodes.len() - nodes.len();
        Ok((
            Tree {
                metric: self.metric.clone(),
                nodes,
            },
            removed,
        ))
    }
}

/// Tree without any connection that fails `check_edge` under `snap`.
pub fn prune_invalid(t: &Tree, cc: &CollisionChecker, snap: &SceneSnapshot) -> Result<Tree> {
    t.prune_invalid(cc, snap).map(|(tree, _)| tree)
}
