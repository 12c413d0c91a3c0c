use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dag::{dsep_variables, reach, VariableDag};
use super::partition::ClusterPartition;
use crate::error::{Error, Result};
use crate::set::{subsets_by_size, NodeSet};

/// State of an independence arc over a cluster triplet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcState {
    /// The separating set contains the middle cluster.
    Marg,
    /// Separated without the middle cluster, connected once it is added.
    Cond,
    /// Separated with or without the middle cluster.
    Never,
}

/// Annotation over a triplet `<left, mid, right>` with `left < right`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceArc {
    pub triplet: [usize; 3],
    pub state: ArcState,
    pub connection_marks: NodeSet,
    pub separation_marks: NodeSet,
}

/// Arcs keyed by canonical triplet.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArcMap(BTreeMap<(usize, usize, usize), IndependenceArc>);

impl ArcMap {
    fn key(i: usize, k: usize, j: usize) -> (usize, usize, usize) {
        (i.min(j), k, i.max(j))
    }

    /// Arc over `<i, k, j>` in either orientation.
    pub fn get(&self, i: usize, k: usize, j: usize) -> Option<&IndependenceArc> {
        self.0.get(&Self::key(i, k, j))
    }

    pub fn insert(&mut self, arc: IndependenceArc) {
        let [i, k, j] = arc.triplet;
        let mut arc = arc;
        arc.triplet = [i.min(j), k, i.max(j)];
        self.0.insert(Self::key(i, k, j), arc);
    }

    pub fn iter(&self) -> impl Iterator<Item = &IndependenceArc> {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every cluster named in some connection mark.
    pub fn connection_marked(&self) -> NodeSet {
        self.iter().fold(NodeSet::EMPTY, |acc, a| acc.union(a.connection_marks))
    }
}

/// Read access shared by cluster DAGs and cluster CPDAGs.
pub trait ClusterGraph {
    fn cluster_count(&self) -> usize;
    fn adjacent(&self, c: usize) -> NodeSet;
    fn arcs(&self) -> &ArcMap;

    fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacent(a).contains(b)
    }

    /// Undirected edges `(a, b)` with `a < b`.
    fn skeleton(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.cluster_count() {
            for b in self.adjacent(a) {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Cluster-level causal DAG with independence arcs and marks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterDag {
    parents: Vec<NodeSet>,
    children: Vec<NodeSet>,
    arcs: ArcMap,
}

impl ClusterDag {
    /// Assembles a cluster DAG from explicit edges and arcs.
    pub fn new(d: usize, edges: &[(usize, usize)], arcs: ArcMap) -> Result<Self> {
        let mut parents = vec![NodeSet::EMPTY; d];
        let mut children = vec![NodeSet::EMPTY; d];
        for &(u, v) in edges {
            if u >= d || v >= d || u == v {
                return Err(Error::arg(format!("bad cluster edge ({u},{v})")));
            }
            children[u].insert(v);
            parents[v].insert(u);
        }
        if has_cycle(&children) {
            return Err(Error::Cycle("cluster graph".into()));
        }
        for arc in arcs.iter() {
            let [i, k, j] = arc.triplet;
            if i >= d || k >= d || j >= d || i == k || k == j || i == j {
                return Err(Error::arg(format!("bad arc triplet {:?}", arc.triplet)));
            }
        }
        Ok(ClusterDag {
            parents,
            children,
            arcs,
        })
    }

    pub fn parents(&self, c: usize) -> NodeSet {
        self.parents[c]
    }

    pub fn children(&self, c: usize) -> NodeSet {
        self.children[c]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.parents.len() {
            for v in self.children[u] {
                out.push((u, v));
            }
        }
        out
    }

    /// Clusters reachable by directed paths, excluding `c`.
    pub fn descendants(&self, c: usize) -> NodeSet {
        reach(&self.children, NodeSet::singleton(c)).without(c)
    }

    /// Same skeleton and annotations, with each skeleton edge oriented by
    /// `forward(a, b)` for `a < b` (true means `a -> b`).
    pub fn reoriented(&self, forward: impl Fn(usize, usize) -> bool) -> Result<ClusterDag> {
        let edges: Vec<_> = self
            .skeleton()
            .into_iter()
            .map(|(a, b)| if forward(a, b) { (a, b) } else { (b, a) })
            .collect();
        ClusterDag::new(self.cluster_count(), &edges, self.arcs.clone())
    }
}

impl ClusterGraph for ClusterDag {
    fn cluster_count(&self) -> usize {
        self.parents.len()
    }
    fn adjacent(&self, c: usize) -> NodeSet {
        self.parents[c].union(self.children[c])
    }
    fn arcs(&self) -> &ArcMap {
        &self.arcs
    }
}

pub(crate) fn has_cycle(children: &[NodeSet]) -> bool {
    let n = children.len();
    let mut indeg = vec![0usize; n];
    for c in children {
        for v in *c {
            indeg[v] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for c in children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                stack.push(c);
            }
        }
    }
    seen != n
}

/// Cluster edges `C_i -> C_j` induced by variable edges, sorted.
pub fn project_clusters(dag: &VariableDag, partition: &ClusterPartition) -> Result<Vec<(usize, usize)>> {
    if partition.var_count() != dag.node_count() {
        return Err(Error::arg(format!(
            "partition covers {} variables, graph has {}",
            partition.var_count(),
            dag.node_count()
        )));
    }
    let mut edges = std::collections::BTreeSet::new();
    for (u, v) in dag.edges() {
        let (cu, cv) = (partition.cluster_of(u), partition.cluster_of(v));
        if cu != cv {
            edges.insert((cu, cv));
        }
    }
    Ok(edges.into_iter().collect())
}

/// True when the projected cluster graph is acyclic.
pub fn is_admissible(dag: &VariableDag, partition: &ClusterPartition) -> Result<bool> {
    let edges = project_clusters(dag, partition)?;
    let mut children = vec![NodeSet::EMPTY; partition.len()];
    for (u, v) in edges {
        children[u].insert(v);
    }
    Ok(!has_cycle(&children))
}

fn cluster_adjacency(d: usize, edges: &[(usize, usize)]) -> Vec<NodeSet> {
    let mut adj = vec![NodeSet::EMPTY; d];
    for &(u, v) in edges {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    adj
}

/// The graph used to search separating sets for `(i, j)`: when the two
/// clusters are adjacent, every variable edge between them is dropped.
fn manipulated(dag: &VariableDag, partition: &ClusterPartition, i: usize, j: usize) -> VariableDag {
    let (ci, cj) = (partition.cluster(i), partition.cluster(j));
    dag.without_edges(|u, v| (ci.contains(u) && cj.contains(v)) || (cj.contains(u) && ci.contains(v)))
}

/// Smallest (then lexicographically first) cluster set separating `i` and `j`.
fn separating_set(dag: &VariableDag, partition: &ClusterPartition, i: usize, j: usize) -> Option<NodeSet> {
    let rest = NodeSet::full(partition.len()).without(i).without(j);
    let (xi, xj) = (partition.cluster(i), partition.cluster(j));
    subsets_by_size(rest).find(|&s| dsep_variables(dag, xi, xj, partition.union_of(s)).expect("disjoint clusters"))
}

fn arc_state_with(
    dag: &VariableDag,
    partition: &ClusterPartition,
    (i, k, j): (usize, usize, usize),
    sep: Option<NodeSet>,
) -> Option<ArcState> {
    let s = sep?;
    if s.contains(k) {
        return Some(ArcState::Marg);
    }
    let z = partition.union_of(s.with(k));
    let still = dsep_variables(dag, partition.cluster(i), partition.cluster(j), z).expect("disjoint clusters");
    Some(if still { ArcState::Never } else { ArcState::Cond })
}

/// State of the arc over `<i, k, j>`, or `None` when no separating set
/// exists (the triplet then carries no arc).
pub fn compute_arc_state(
    dag: &VariableDag,
    partition: &ClusterPartition,
    triplet: (usize, usize, usize),
) -> Result<Option<ArcState>> {
    let (i, k, j) = triplet;
    let d = partition.len();
    if i >= d || k >= d || j >= d {
        return Err(Error::arg("triplet cluster out of range"));
    }
    if i == k || k == j || i == j {
        return Err(Error::arg("triplet clusters must be distinct"));
    }
    let edges = project_clusters(dag, partition)?;
    let adjacent = edges.contains(&(i, j)) || edges.contains(&(j, i));
    let g = if adjacent {
        manipulated(dag, partition, i, j)
    } else {
        dag.clone()
    };
    let sep = separating_set(&g, partition, i, j);
    Ok(arc_state_with(&g, partition, triplet, sep))
}

/// True when `vpath` is analogous to `cpath` under `partition`.
pub fn is_analogous(vpath: &[usize], cpath: &[usize], partition: &ClusterPartition) -> bool {
    if vpath.is_empty() || cpath.is_empty() {
        return false;
    }
    let mut last_pos = 0;
    let mut used = vec![false; cpath.len()];
    for &v in vpath {
        let c = partition.cluster_of(v);
        let Some(pos) = cpath.iter().position(|&x| x == c) else {
            return false;
        };
        if pos < last_pos {
            return false;
        }
        last_pos = pos;
        used[pos] = true;
    }
    used.iter().all(|&u| u)
}

/// Search limits for exhaustive path enumeration.
#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    /// Maximum DFS expansions per variable-path search.
    pub variable_steps: usize,
    /// Maximum cluster paths examined for separation marks.
    pub cluster_paths: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            variable_steps: 200_000,
            cluster_paths: 50_000,
        }
    }
}

/// How far below a collider the connection-mark set reaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MarkReach {
    /// Clusters holding children of the collider.
    Children,
    /// Clusters holding any descendant of the collider.
    #[default]
    Descendants,
}

/// Options for ground-truth annotation.
#[derive(Clone, Copy, Debug, Default)]
pub struct AnnotationOptions {
    pub budget: SearchBudget,
    pub mark_reach: MarkReach,
}

struct MarkContext<'a> {
    dag: &'a VariableDag,
    partition: &'a ClusterPartition,
    /// Clusters holding `v` or one of its descendants.
    desc_clusters: Vec<NodeSet>,
    budget: SearchBudget,
}

impl<'a> MarkContext<'a> {
    fn new(dag: &'a VariableDag, partition: &'a ClusterPartition, budget: SearchBudget) -> Self {
        let desc_clusters = (0..dag.node_count())
            .map(|v| partition.clusters_touching(dag.descendants(v).with(v)))
            .collect();
        MarkContext {
            dag,
            partition,
            desc_clusters,
            budget,
        }
    }

    /// Colliders on simple variable paths from `from` to `to` that visit
    /// `via`. `None` when the search budget runs out.
    fn colliders_via(&self, from: NodeSet, to: NodeSet, via: NodeSet) -> Option<NodeSet> {
        let mut found = NodeSet::EMPTY;
        let mut steps = 0usize;
        for s in from {
            let mut path = vec![s];
            if !self.collect_colliders(&mut path, NodeSet::singleton(s), to, via, &mut found, &mut steps) {
                return None;
            }
        }
        Some(found)
    }

    fn collect_colliders(
        &self,
        path: &mut Vec<usize>,
        used: NodeSet,
        to: NodeSet,
        via: NodeSet,
        found: &mut NodeSet,
        steps: &mut usize,
    ) -> bool {
        *steps += 1;
        if *steps > self.budget.variable_steps {
            return false;
        }
        let tip = *path.last().expect("nonempty");
        if path.len() >= 2 && to.contains(tip) && used.intersects(via) {
            for w in path.windows(3) {
                if self.dag.has_edge(w[0], w[1]) && self.dag.has_edge(w[2], w[1]) {
                    found.insert(w[1]);
                }
            }
        }
        for w in self.dag.neighbors(tip).minus(used) {
            path.push(w);
            let ok = self.collect_colliders(path, used.with(w), to, via, found, steps);
            path.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Whether some variable path analogous to `cpath` is d-connecting
    /// relative to some cluster set disjoint from its end clusters.
    /// Exceeding the budget answers `true`.
    fn analogous_connectable(&self, cpath: &[usize]) -> bool {
        let mut steps = 0usize;
        let start = self.partition.cluster(cpath[0]);
        for v in start {
            let mut path = vec![v];
            if self.analogous_dfs(cpath, 0, &mut path, NodeSet::singleton(v), &mut steps) {
                return true;
            }
        }
        false
    }

    fn analogous_dfs(&self, cpath: &[usize], t: usize, path: &mut Vec<usize>, used: NodeSet, steps: &mut usize) -> bool {
        *steps += 1;
        if *steps > self.budget.variable_steps {
            return true;
        }
        let n = cpath.len();
        if t == n - 1 && self.connectable(path, cpath[0], cpath[n - 1]) {
            return true;
        }
        let tip = *path.last().expect("nonempty");
        let mut allowed = self.partition.cluster(cpath[t]);
        if t + 1 < n {
            allowed = allowed.union(self.partition.cluster(cpath[t + 1]));
        }
        for w in self.dag.neighbors(tip).intersect(allowed).minus(used) {
            let nt = if self.partition.cluster_of(w) == cpath[t] { t } else { t + 1 };
            path.push(w);
            if self.analogous_dfs(cpath, nt, path, used.with(w), steps) {
                return true;
            }
            path.pop();
        }
        false
    }

    fn connectable(&self, path: &[usize], first: usize, last: usize) -> bool {
        let mut forbidden = NodeSet::singleton(first).with(last);
        let mut colliders = Vec::new();
        for w in path.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            if self.dag.has_edge(a, b) && self.dag.has_edge(c, b) {
                colliders.push(b);
            } else {
                forbidden.insert(self.partition.cluster_of(b));
            }
        }
        colliders
            .iter()
            .all(|&b| !self.desc_clusters[b].minus(forbidden).is_empty())
    }
}

/// Adds connection and separation marks to `arcs`.
pub fn compute_marks(
    dag: &VariableDag,
    partition: &ClusterPartition,
    cluster_edges: &[(usize, usize)],
    arcs: &ArcMap,
) -> ArcMap {
    compute_marks_with(dag, partition, cluster_edges, arcs, AnnotationOptions::default())
}

/// [`compute_marks`] with explicit options.
pub fn compute_marks_with(
    dag: &VariableDag,
    partition: &ClusterPartition,
    cluster_edges: &[(usize, usize)],
    arcs: &ArcMap,
    opts: AnnotationOptions,
) -> ArcMap {
    let ctx = MarkContext::new(dag, partition, opts.budget);
    let mut out = ArcMap::default();
    for arc in arcs.iter() {
        let mut arc = arc.clone();
        arc.connection_marks = NodeSet::EMPTY;
        arc.separation_marks = NodeSet::EMPTY;
        if arc.state == ArcState::Never {
            let [i, k, j] = arc.triplet;
            let (ci, cj) = (partition.cluster(i), partition.cluster(j));
            let marks = match ctx.colliders_via(ci, cj, partition.cluster(k)) {
                Some(colliders) => colliders.iter().fold(NodeSet::EMPTY, |acc, v| {
                    acc.union(match opts.mark_reach {
                        MarkReach::Children => partition.clusters_touching(dag.children(v).with(v)),
                        MarkReach::Descendants => ctx.desc_clusters[v],
                    })
                }),
                None => {
                    log::warn!("connection-mark search truncated at {:?}; marking all clusters", arc.triplet);
                    NodeSet::full(partition.len())
                }
            };
            arc.connection_marks = marks.without(i).without(k).without(j);
        }
        out.insert(arc);
    }
    let adj = cluster_adjacency(partition.len(), cluster_edges);
    for (first, last, mark_first, mark_last) in separation_paths(&ctx, &adj, &out) {
        if let Some(a) = out.0.get_mut(&ArcMap::key(first.0, first.1, first.2)) {
            a.separation_marks.insert(mark_first);
        }
        if let Some(a) = out.0.get_mut(&ArcMap::key(last.0, last.1, last.2)) {
            a.separation_marks.insert(mark_last);
        }
    }
    out
}

type Triplet = (usize, usize, usize);

/// Cluster paths of four or more clusters meeting the separation-mark
/// conditions, as (first arc, last arc, mark for first, mark for last).
fn separation_paths(ctx: &MarkContext, adj: &[NodeSet], arcs: &ArcMap) -> Vec<(Triplet, Triplet, usize, usize)> {
    let d = adj.len();
    let mut found = Vec::new();
    let mut examined = 0usize;
    let mut memo: BTreeMap<Vec<usize>, bool> = BTreeMap::new();
    let mut connectable = |p: &[usize]| -> bool {
        if let Some(&b) = memo.get(p) {
            return b;
        }
        let b = ctx.analogous_connectable(p);
        memo.insert(p.to_vec(), b);
        b
    };
    let mut stack: Vec<Vec<usize>> = (0..d).map(|s| vec![s]).collect();
    while let Some(path) = stack.pop() {
        let n = path.len();
        if n >= 4 && path[0] < path[n - 1] {
            examined += 1;
            if examined > ctx.budget.cluster_paths {
                log::warn!("separation-mark search truncated after {} paths", examined - 1);
                break;
            }
            if !connectable(&path) && connectable(&path[..n - 1]) && connectable(&path[1..]) {
                let first = (path[0], path[1], path[2]);
                let last = (path[n - 3], path[n - 2], path[n - 1]);
                found.push((first, last, path[n - 1], path[0]));
            }
        }
        let tip = path[n - 1];
        for w in adj[tip] {
            if path.contains(&w) {
                continue;
            }
            if n >= 2 {
                let prev = path[n - 2];
                if matches!(arcs.get(prev, tip, w), Some(a) if a.state == ArcState::Never) {
                    continue;
                }
            }
            let mut next = path.clone();
            next.push(w);
            stack.push(next);
        }
    }
    found
}

/// Ground-truth cluster DAG: projection, arcs over every unshielded and
/// manipulated-unshielded triplet, then marks.
pub fn build_cluster_dag(dag: &VariableDag, partition: &ClusterPartition) -> Result<ClusterDag> {
    build_cluster_dag_with(dag, partition, AnnotationOptions::default())
}

/// [`build_cluster_dag`] with explicit options.
pub fn build_cluster_dag_with(
    dag: &VariableDag,
    partition: &ClusterPartition,
    opts: AnnotationOptions,
) -> Result<ClusterDag> {
    if !is_admissible(dag, partition)? {
        return Err(Error::Inadmissible);
    }
    let d = partition.len();
    let edges = project_clusters(dag, partition)?;
    let adj = cluster_adjacency(d, &edges);
    let mut seps: BTreeMap<(usize, usize), (Option<NodeSet>, Option<VariableDag>)> = BTreeMap::new();
    let mut arcs = ArcMap::default();
    for k in 0..d {
        let nb = adj[k].to_vec();
        for (x, &i) in nb.iter().enumerate() {
            for &j in &nb[x + 1..] {
                let entry = seps.entry((i, j)).or_insert_with(|| {
                    if adj[i].contains(j) {
                        let g = manipulated(dag, partition, i, j);
                        (separating_set(&g, partition, i, j), Some(g))
                    } else {
                        (separating_set(dag, partition, i, j), None)
                    }
                });
                let g = entry.1.as_ref().unwrap_or(dag);
                if let Some(state) = arc_state_with(g, partition, (i, k, j), entry.0) {
                    arcs.insert(IndependenceArc {
                        triplet: [i, k, j],
                        state,
                        connection_marks: NodeSet::EMPTY,
                        separation_marks: NodeSet::EMPTY,
                    });
                }
            }
        }
    }
    let arcs = compute_marks_with(dag, partition, &edges, &arcs, opts);
    ClusterDag::new(d, &edges, arcs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::dag::NodeKind;

    fn dag(n: usize, e: &[(usize, usize)]) -> VariableDag {
        VariableDag::new(vec![NodeKind::Continuous; n], e).unwrap()
    }

    #[test]
    fn singleton_chain_is_marg() {
        let g = dag(3, &[(0, 1), (1, 2)]);
        let p = ClusterPartition::singletons(3);
        assert_eq!(compute_arc_state(&g, &p, (0, 1, 2)).unwrap(), Some(ArcState::Marg));
    }

    #[test]
    fn variable_collider_is_cond() {
        let g = dag(3, &[(0, 1), (2, 1)]);
        let p = ClusterPartition::singletons(3);
        assert_eq!(compute_arc_state(&g, &p, (0, 1, 2)).unwrap(), Some(ArcState::Cond));
    }

    #[test]
    fn cluster_collider_without_variable_collider_is_never() {
        // X -> Z1, Y -> Z2 with Z = {Z1, Z2}
        let g = dag(4, &[(0, 1), (3, 2)]);
        let p = ClusterPartition::plain(4, &[&[0], &[1, 2], &[3]]).unwrap();
        assert_eq!(compute_arc_state(&g, &p, (0, 1, 2)).unwrap(), Some(ArcState::Never));
        assert!(compute_arc_state(&g, &p, (0, 1, 1)).is_err());
    }

    #[test]
    fn shielded_triplet_uses_manipulated_graph() {
        // 0 -> 1 -> 2 plus 0 -> 2: with the 0-2 edge dropped, {1} separates.
        let g = dag(3, &[(0, 1), (1, 2), (0, 2)]);
        let p = ClusterPartition::singletons(3);
        assert_eq!(compute_arc_state(&g, &p, (0, 1, 2)).unwrap(), Some(ArcState::Marg));
    }

    #[test]
    fn analogous_paths() {
        let p = ClusterPartition::plain(4, &[&[0, 1], &[2], &[3]]).unwrap();
        assert!(is_analogous(&[0, 2], &[0, 1], &p));
        assert!(is_analogous(&[0, 1, 2, 3], &[0, 1, 2], &p));
        assert!(!is_analogous(&[0], &[0, 1], &p));
        assert!(!is_analogous(&[0, 2, 1], &[0, 1], &p));
        assert!(!is_analogous(&[0, 3], &[0, 1], &p));
    }

    #[test]
    fn admissibility() {
        // U_i -> U_j and V_j -> V_i with C_i = {U_i, V_i}, C_j = {U_j, V_j}
        let g = dag(4, &[(0, 2), (3, 1)]);
        let p = ClusterPartition::plain(4, &[&[0, 1], &[2, 3]]).unwrap();
        assert!(!is_admissible(&g, &p).unwrap());
        assert!(matches!(build_cluster_dag(&g, &p), Err(Error::Inadmissible)));
        assert!(is_admissible(&g, &ClusterPartition::singletons(4)).unwrap());
    }

    #[test]
    fn projection_basics() {
        let g = dag(4, &[(0, 1), (2, 3), (1, 3)]);
        assert_eq!(project_clusters(&g, &ClusterPartition::singletons(4)).unwrap(), g.edges());
        let p = ClusterPartition::plain(4, &[&[0, 1], &[2, 3]]).unwrap();
        assert_eq!(project_clusters(&g, &p).unwrap(), vec![(0, 1)]);
        let e = dag(3, &[]);
        let cd = build_cluster_dag(&e, &ClusterPartition::singletons(3)).unwrap();
        assert!(cd.edges().is_empty() && cd.arcs().is_empty());
        assert!(project_clusters(&g, &ClusterPartition::singletons(3)).is_err());
    }

    #[test]
    fn never_arc_gets_descendant_marks() {
        // I -> K1 <- L -> K2 -> J with K = {K1, K2}; K1 -> D1 -> D2.
        // vars: I0 K1_1 K2_2 L3 J4 D1_5 D2_6
        let g = dag(7, &[(0, 1), (3, 1), (3, 2), (2, 4), (1, 5), (5, 6)]);
        let p = ClusterPartition::plain(7, &[&[0], &[1, 2], &[3], &[4], &[5], &[6]]).unwrap();
        let cd = build_cluster_dag(&g, &p).unwrap();
        let arc = cd.arcs().get(0, 1, 3).unwrap();
        assert_eq!(arc.state, ArcState::Never);
        assert_eq!(arc.connection_marks, NodeSet::from_ids([4, 5]));
        let opts = AnnotationOptions {
            mark_reach: MarkReach::Children,
            ..Default::default()
        };
        let cd1 = build_cluster_dag_with(&g, &p, opts).unwrap();
        assert_eq!(cd1.arcs().get(0, 1, 3).unwrap().connection_marks, NodeSet::from_ids([4]));
    }
}
