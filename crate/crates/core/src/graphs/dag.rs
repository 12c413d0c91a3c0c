use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{NodeSet, MAX_NODES};

/// Whether a variable is real-valued or takes values in {0, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Continuous,
    Binary,
}

/// A directed acyclic graph over variables `0..node_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableDag {
    kinds: Vec<NodeKind>,
    parents: Vec<NodeSet>,
    children: Vec<NodeSet>,
    order: Vec<usize>,
}

impl VariableDag {
    /// Builds a DAG, rejecting self-loops, duplicate edges and cycles.
    pub fn new(kinds: Vec<NodeKind>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = kinds.len();
        if n > MAX_NODES {
            return Err(Error::Capacity {
                what: "variable count",
                got: n,
                limit: MAX_NODES,
            });
        }
        let mut parents = vec![NodeSet::EMPTY; n];
        let mut children = vec![NodeSet::EMPTY; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::arg(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::arg(format!("self-loop on {u}")));
            }
            if children[u].contains(v) {
                return Err(Error::arg(format!("duplicate edge ({u},{v})")));
            }
            children[u].insert(v);
            parents[v].insert(u);
        }
        let order = topological_order(&parents, &children)
            .ok_or_else(|| Error::Cycle("variable graph".into()))?;
        Ok(VariableDag {
            kinds,
            parents,
            children,
            order,
        })
    }

    /// An edgeless graph of `n` continuous nodes.
    pub fn empty(n: usize) -> Result<Self> {
        VariableDag::new(vec![NodeKind::Continuous; n], &[])
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Same edges, different node kinds.
    pub fn with_kinds(&self, kinds: Vec<NodeKind>) -> Result<Self> {
        if kinds.len() != self.node_count() {
            return Err(Error::arg("kind vector length mismatch"));
        }
        Ok(VariableDag {
            kinds,
            ..self.clone()
        })
    }

    pub fn parents(&self, v: usize) -> NodeSet {
        self.parents[v]
    }

    pub fn children(&self, v: usize) -> NodeSet {
        self.children[v]
    }

    pub fn neighbors(&self, v: usize) -> NodeSet {
        self.parents[v].union(self.children[v])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.children[u].contains(v)
    }

    /// Edges sorted by (parent, child).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.node_count() {
            for v in self.children[u] {
                out.push((u, v));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(|c| c.len()).sum()
    }

    /// A topological order (parents before children).
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Nodes reachable from `v` by directed paths, excluding `v`.
    pub fn descendants(&self, v: usize) -> NodeSet {
        reach(&self.children, NodeSet::singleton(v)).without(v)
    }

    /// `set` together with all of its ancestors.
    pub fn ancestors_of_set(&self, set: NodeSet) -> NodeSet {
        reach(&self.parents, set)
    }

    /// Copy of the graph without the listed edges.
    pub fn without_edges(&self, drop: impl Fn(usize, usize) -> bool) -> VariableDag {
        let edges: Vec<_> = self.edges().into_iter().filter(|&(u, v)| !drop(u, v)).collect();
        VariableDag::new(self.kinds.clone(), &edges).expect("subgraph of a DAG is a DAG")
    }

    /// Adds one node with the given parents; the new node gets the next id.
    pub fn with_appended(&self, kind: NodeKind, parents: NodeSet) -> Result<VariableDag> {
        let id = self.node_count();
        let mut kinds = self.kinds.clone();
        kinds.push(kind);
        let mut edges = self.edges();
        edges.extend(parents.iter().map(|p| (p, id)));
        VariableDag::new(kinds, &edges)
    }
}

/// Closure of `start` under the adjacency `step`.
pub(crate) fn reach(step: &[NodeSet], start: NodeSet) -> NodeSet {
    let mut seen = start;
    let mut frontier = start;
    while !frontier.is_empty() {
        let mut next = NodeSet::EMPTY;
        for v in frontier {
            next = next.union(step[v]);
        }
        frontier = next.minus(seen);
        seen = seen.union(next);
    }
    seen
}

fn topological_order(parents: &[NodeSet], children: &[NodeSet]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for c in children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// True when `x` and `y` are d-separated by `z` in `dag`.
///
/// Reachability search over (node, direction) states; a collider passes
/// when it or one of its descendants is in `z`.
pub fn dsep_variables(dag: &VariableDag, x: NodeSet, y: NodeSet, z: NodeSet) -> Result<bool> {
    let all = NodeSet::full(dag.node_count());
    if !x.union(y).union(z).is_subset(all) {
        return Err(Error::arg("node id out of range"));
    }
    if x.intersects(y) || x.intersects(z) || y.intersects(z) {
        return Err(Error::arg("x, y, z must be pairwise disjoint"));
    }
    Ok(!active_reach(dag, x, z).intersects(y))
}

/// Nodes connected to `x` by an active path given `z`.
pub(crate) fn active_reach(dag: &VariableDag, x: NodeSet, z: NodeSet) -> NodeSet {
    let anz = dag.ancestors_of_set(z);
    // up[v]: v reached from one of its children; down[v]: reached from a parent.
    let mut up = NodeSet::EMPTY;
    let mut down = NodeSet::EMPTY;
    let mut stack: Vec<(usize, bool)> = x.iter().map(|v| (v, true)).collect();
    let mut reached = NodeSet::EMPTY;
    while let Some((v, going_up)) = stack.pop() {
        let seen = if going_up { &mut up } else { &mut down };
        if seen.contains(v) {
            continue;
        }
        seen.insert(v);
        if !z.contains(v) {
            reached.insert(v);
        }
        if going_up {
            if !z.contains(v) {
                stack.extend(dag.parents(v).iter().map(|p| (p, true)));
                stack.extend(dag.children(v).iter().map(|c| (c, false)));
            }
        } else {
            if !z.contains(v) {
                stack.extend(dag.children(v).iter().map(|c| (c, false)));
            }
            if anz.contains(v) {
                stack.extend(dag.parents(v).iter().map(|p| (p, true)));
            }
        }
    }
    reached
}
