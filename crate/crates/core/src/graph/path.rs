use crate::cspace::{Configuration, Metric};
use crate::error::{Error, Result};
use crate::scene::{CollisionChecker, SceneSnapshot};

use super::{Connection, Node, NodeIds};

/// Abscissae closer than this to a node are treated as that node.
pub const ABSCISSA_EPS: f64 = 1e-9;

/// Piecewise-linear path. Connection `k` joins node `k` to node `k + 1`, so
/// chain contiguity holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    metric: Metric,
    nodes: Vec<Node>,
    connections: Vec<Connection>,
    /// Cumulative arc length at each node.
    abscissae: Vec<f64>,
}

/// Result of re-checking a path against a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostUpdate {
    pub edges_checked: usize,
    /// Abscissa of the first colliding sample beyond the start of the check.
    pub first_obstruction: Option<f64>,
}

impl Path {
    pub fn new(metric: Metric, nodes: Vec<Node>) -> Result<Self> {
        let first = nodes.first().ok_or(Error::EmptyConfiguration)?;
        let dim = first.q.dim();
        metric.validate_dim(dim)?;
        for n in &nodes {
            n.q.ensure_dim(dim)?;
        }
        let connections = nodes
            .windows(2)
            .map(|w| Connection::free(w[0].id, w[1].id, metric.distance(&w[0].q, &w[1].q)))
            .collect();
        Ok(Self::assemble(metric, nodes, connections))
    }

    pub fn from_configurations(
        metric: Metric,
        ids: &NodeIds,
        configurations: impl IntoIterator<Item = Configuration>,
    ) -> Result<Self> {
        let nodes = configurations
            .into_iter()
            .map(|q| Node::new(ids.next(), q))
            .collect();
        Self::new(metric, nodes)
    }

    fn assemble(metric: Metric, nodes: Vec<Node>, connections: Vec<Connection>) -> Self {
        debug_assert_eq!(nodes.len(), connections.len() + 1);
        let mut abscissae = Vec::with_capacity(nodes.len());
        let mut s = 0.0;
        abscissae.push(0.0);
        for c in &connections {
            s += c.length;
            abscissae.push(s);
        }
        Self {
            metric,
            nodes,
            connections,
            abscissae,
        }
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn start(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn goal(&self) -> &Node {
        self.nodes.last().expect("path has at least one node")
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.nodes.iter().map(|n| &n.q)
    }

    /// Total arc length.
    pub fn length(&self) -> f64 {
        *self.abscissae.last().expect("path has at least one node")
    }

    /// Sum of connection costs; `+inf` when any connection is obstructed.
    pub fn cost(&self) -> f64 {
        self.connections.iter().map(|c| c.cost).sum()
    }

    /// Cost of the portion beyond abscissa `s`.
    pub fn remaining_cost(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let blocked = self
            .connections
            .iter()
            .zip(&self.abscissae[1..])
            .any(|(c, &end)| end > s && c.is_obstructed());
        if blocked {
            f64::INFINITY
        } else {
            self.length() - s
        }
    }

    /// Abscissa of the earliest recorded obstruction at or beyond `s`.
    pub fn first_obstruction_after(&self, s: f64) -> Option<f64> {
        self.connections
            .iter()
            .enumerate()
            .filter(|(k, c)| self.abscissae[k + 1] > s && c.is_obstructed())
            .map(|(k, c)| {
                let at = self.abscissae[k] + c.block_fraction.unwrap_or(0.0) * c.length;
                at.max(s)
            })
            .next()
    }

    /// Whether two paths share the same node sequence.
    pub fn same_nodes(&self, other: &Path) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| a.id == b.id)
    }

    /// Segment index and local fraction for abscissa `s`, preferring the
    /// segment that starts at `s` when `s` sits on a node.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        if self.connections.is_empty() {
            return (0, 0.0);
        }
        let s = s.clamp(0.0, self.length());
        let last = self.connections.len() - 1;
        let k = match self.abscissae[1..].iter().position(|&end| end > s) {
            Some(k) => k,
            None => last,
        };
        let length = self.connections[k].length;
        let u = if length > 0.0 {
            ((s - self.abscissae[k]) / length).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (k, u)
    }

    pub fn point_at(&self, s: f64) -> Configuration {
        if self.connections.is_empty() {
            return self.nodes[0].q.clone();
        }
        if s >= self.length() {
            return self.goal().q.clone();
        }
        let (k, u) = self.locate(s);
        self.nodes[k].q.lerp(&self.nodes[k + 1].q, u)
    }

    /// Unit tangent (in metric units) of the segment containing `s`.
    pub fn tangent_at(&self, s: f64) -> Option<Vec<f64>> {
        if self.connections.is_empty() {
            return None;
        }
        let (mut k, _) = self.locate(s);
        // Skip degenerate segments.
        while k < self.connections.len() && self.connections[k].length <= 0.0 {
            k += 1;
        }
        let c = self.connections.get(k)?;
        let (a, b) = (&self.nodes[k].q, &self.nodes[k + 1].q);
        Some(
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(x, y)| (y - x) / c.length)
                .collect(),
        )
    }

    /// Closest point of the path to `q` under the path metric. With a hint,
    /// only abscissae `>= hint` are considered. Ties go to the smaller abscissa.
    pub fn project(&self, q: &Configuration, hint: Option<f64>) -> (f64, Configuration) {
        let hint = hint.map(|h| h.clamp(0.0, self.length()));
        if self.connections.is_empty() {
            return (0.0, self.nodes[0].q.clone());
        }
        let mut best: Option<(f64, f64, Configuration)> = None;
        for (k, c) in self.connections.iter().enumerate() {
            let (s0, s1) = (self.abscissae[k], self.abscissae[k + 1]);
            let mut u_min = 0.0;
            if let Some(h) = hint {
                if s1 < h {
                    continue;
                }
                if h > s0 && c.length > 0.0 {
                    u_min = ((h - s0) / c.length).clamp(0.0, 1.0);
                }
            }
            let (a, b) = (&self.nodes[k].q, &self.nodes[k + 1].q);
            let u = self.closest_fraction(a, b, q).clamp(u_min, 1.0);
            let p = a.lerp(b, u);
            let d = self.metric.distance(&p, q);
            let mut s = (s0 + u * c.length).min(s1);
            if let Some(h) = hint {
                s = s.max(h);
            }
            let better = match &best {
                None => true,
                Some((bd, _, _)) => d < bd - 1e-12,
            };
            if better {
                best = Some((d, s, p));
            }
        }
        let (_, s, p) = best.expect("at least one segment is eligible");
        (s, p)
    }

    /// Unclamped fraction minimizing the weighted distance from `q` to the line `a b`.
    fn closest_fraction(&self, a: &Configuration, b: &Configuration, q: &Configuration) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..a.dim() {
            let w = self.metric.weight_sq(i);
            let d = b[i] - a[i];
            num += w * (q[i] - a[i]) * d;
            den += w * d * d;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Index of a node lying within [`ABSCISSA_EPS`] of `s`.
    fn node_at(&self, s: f64) -> Option<usize> {
        self.abscissae
            .iter()
            .position(|&a| (a - s).abs() <= ABSCISSA_EPS)
    }

    /// Inserts a node at abscissa `s` unless one already sits there.
    pub fn split_at(&self, s: f64, ids: &NodeIds) -> Path {
        let mut out = self.clone();
        out.split_in_place(s, ids);
        out
    }

    /// Returns the index of the node at `s`, inserting it if needed.
    fn split_in_place(&mut self, s: f64, ids: &NodeIds) -> usize {
        let s = s.clamp(0.0, self.length());
        if let Some(i) = self.node_at(s) {
            return i;
        }
        let (k, u) = self.locate(s);
        let a = self.nodes[k].q.clone();
        let b = self.nodes[k + 1].q.clone();
        let mid = Node::new(ids.next(), a.lerp(&b, u));
        let old = self.connections[k].clone();
        let mut first = Connection::free(old.parent, mid.id, self.metric.distance(&a, &mid.q));
        let mut second = Connection::free(mid.id, old.child, self.metric.distance(&mid.q, &b));
        if let Some(version) = old.checked_version {
            match old.block_fraction {
                // Samples before the block were free.
                Some(block) if block >= u => {
                    first.mark(version, None);
                    let rel = if u < 1.0 { (block - u) / (1.0 - u) } else { 0.0 };
                    second.mark(version, Some(rel.clamp(0.0, 1.0)));
                }
                // Nothing is known past the block: keep the remainder obstructed.
                Some(block) => {
                    let rel = if u > 0.0 { block / u } else { 0.0 };
                    first.mark(version, Some(rel.clamp(0.0, 1.0)));
                    second.mark(version, Some(0.0));
                }
                None => {
                    first.mark(version, None);
                    second.mark(version, None);
                }
            }
        } else if old.is_obstructed() {
            first.cost = f64::INFINITY;
            second.cost = f64::INFINITY;
        }
        self.nodes.insert(k + 1, mid);
        self.connections.splice(k..=k, [first, second]);
        self.recompute_abscissae();
        k + 1
    }

    fn recompute_abscissae(&mut self) {
        let mut s = 0.0;
        self.abscissae.clear();
        self.abscissae.push(0.0);
        for c in &self.connections {
            s += c.length;
            self.abscissae.push(s);
        }
    }

    /// Remainder of the path starting at the point at abscissa `s`.
    pub fn subpath_from(&self, s: f64, ids: &NodeIds) -> Path {
        let mut out = self.clone();
        let i = out.split_in_place(s, ids);
        if i == 0 {
            return out;
        }
        out.nodes.drain(..i);
        out.connections.drain(..i);
        out.recompute_abscissae();
        out
    }

    /// Portion of the path between abscissae `from` and `to`.
    pub fn section(&self, from: f64, to: f64, ids: &NodeIds) -> Path {
        let mut out = self.clone();
        let to = to.clamp(0.0, self.length());
        let j = out.split_in_place(to, ids);
        out.nodes.truncate(j + 1);
        out.connections.truncate(j);
        out.recompute_abscissae();
        out.subpath_from(from.min(to), ids)
    }

    /// Appends `tail`, whose start must coincide with this path's goal.
    pub fn concat(&self, tail: &Path) -> Result<Path> {
        let gap = self.metric.distance(&self.goal().q, &tail.start().q);
        if gap > ABSCISSA_EPS {
            return Err(Error::OffPath(gap));
        }
        let joint = self.goal().id;
        let mut nodes = self.nodes.clone();
        nodes.extend(tail.nodes[1..].iter().cloned());
        let mut connections = self.connections.clone();
        connections.extend(tail.connections.iter().cloned());
        if let Some(c) = connections.get_mut(self.connections.len()) {
            c.parent = joint;
        }
        Ok(Self::assemble(self.metric.clone(), nodes, connections))
    }

    /// Same path with the first node's configuration replaced by `q`, which
    /// must lie within projection tolerance (1e-6) of it.
    pub(crate) fn with_exact_start(mut self, q: Configuration) -> Path {
        debug_assert!(self.metric.distance(&self.nodes[0].q, &q) <= 1e-6);
        self.nodes[0].q = q;
        if let Some(c) = self.connections.first_mut() {
            c.length = self.metric.distance(&self.nodes[0].q, &self.nodes[1].q);
            if !c.is_obstructed() {
                c.cost = c.length;
            }
        }
        self.recompute_abscissae();
        self
    }

    /// Re-checks every connection lying beyond abscissa `from` against `snap`.
    /// A connection straddling `from` is checked only from the point at `from`.
    pub fn update_cost(&mut self, cc: &CollisionChecker, snap: &SceneSnapshot, from: f64) -> CostUpdate {
        let from = from.clamp(0.0, self.length());
        let mut update = CostUpdate {
            edges_checked: 0,
            first_obstruction: None,
        };
        for k in 0..self.connections.len() {
            let (s0, s1) = (self.abscissae[k], self.abscissae[k + 1]);
            // Entirely behind the robot (zero-length edges at `from` are kept).
            if s1 < from || (s1 == from && s1 > s0) {
                continue;
            }
            let length = self.connections[k].length;
            let u0 = if from > s0 && length > 0.0 {
                ((from - s0) / length).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let a = self.nodes[k].q.lerp(&self.nodes[k + 1].q, u0);
            let b = &self.nodes[k + 1].q;
            update.edges_checked += 1;
            let block = cc
                .first_collision(snap, &a, b)
                .map(|f| u0 + f * (1.0 - u0));
            if let (Some(u), None) = (block, update.first_obstruction) {
                update.first_obstruction = Some(s0 + u * length);
            }
            self.connections[k].mark(snap.version, block);
        }
        update
    }
}

/// Sum of connection costs.
pub fn path_cost(p: &Path) -> f64 {
    p.cost()
}

/// Copy of `p` re-checked against `snap` from abscissa `from` onwards.
pub fn update_path_cost(p: &Path, cc: &CollisionChecker, snap: &SceneSnapshot, from: f64) -> Path {
    let mut out = p.clone();
    out.update_cost(cc, snap, from);
    out
}

pub fn project_on_path(p: &Path, q: &Configuration, hint: Option<f64>) -> (f64, Configuration) {
    p.project(q, hint)
}

pub fn split_at(p: &Path, s: f64, ids: &NodeIds) -> Path {
    p.split_at(s, ids)
}

pub fn subpath_from(p: &Path, s: f64, ids: &NodeIds) -> Path {
    p.subpath_from(s, ids)
}
