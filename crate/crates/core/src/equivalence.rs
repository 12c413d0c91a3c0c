//! Cluster-level d-separation, brute-force cluster MEC enumeration, and
//! cluster CPDAGs.

use crate::error::{Error, Result};
use crate::graphs::{arc_docs, has_cycle, ArcMap, ArcState, ClusterDag, ClusterGraph, ClusterPartition, GraphDocument};
use crate::set::{all_subsets, NodeSet};

/// Default limit on clusters for MEC enumeration.
pub const DEFAULT_MEC_CAP: usize = 12;

fn triplet_blocked(
    arcs: &ArcMap,
    desc: &dyn Fn(usize) -> NodeSet,
    (i, k, j): (usize, usize, usize),
    z: NodeSet,
    on_path: NodeSet,
) -> bool {
    let Some(arc) = arcs.get(i, k, j) else {
        return false;
    };
    let sep = arc.separation_marks.intersects(on_path);
    match arc.state {
        ArcState::Marg => z.contains(k) || sep,
        ArcState::Cond => {
            (!z.contains(k) && !desc(k).intersects(z) && !arc.connection_marks.intersects(z)) || sep
        }
        ArcState::Never => !arc.connection_marks.intersects(z),
    }
}

fn path_blocked(arcs: &ArcMap, desc: &dyn Fn(usize) -> NodeSet, path: &[usize], z: NodeSet) -> bool {
    let on_path: NodeSet = path.iter().copied().collect();
    path.windows(3)
        .any(|w| triplet_blocked(arcs, desc, (w[0], w[1], w[2]), z, on_path))
}

/// Cluster d-separation with an explicit descendant oracle.
pub(crate) fn dsep_with<G: ClusterGraph + ?Sized>(
    g: &G,
    desc: &dyn Fn(usize) -> NodeSet,
    x: NodeSet,
    y: NodeSet,
    z: NodeSet,
) -> bool {
    let arcs = g.arcs();
    let stop = x.union(y);
    for s in x {
        let mut path = vec![s];
        if connected_from(g, arcs, desc, &mut path, NodeSet::singleton(s), y, stop, z) {
            return false;
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn connected_from<G: ClusterGraph + ?Sized>(
    g: &G,
    arcs: &ArcMap,
    desc: &dyn Fn(usize) -> NodeSet,
    path: &mut Vec<usize>,
    used: NodeSet,
    y: NodeSet,
    stop: NodeSet,
    z: NodeSet,
) -> bool {
    let tip = *path.last().expect("nonempty");
    for w in g.adjacent(tip).minus(used) {
        let on_path = used.with(w);
        if path.len() >= 2 && triplet_blocked(arcs, desc, (path[path.len() - 2], tip, w), z, on_path) {
            continue;
        }
        path.push(w);
        let hit = if y.contains(w) {
            !path_blocked(arcs, desc, path, z)
        } else if stop.contains(w) {
            false
        } else {
            connected_from(g, arcs, desc, path, on_path, y, stop, z)
        };
        path.pop();
        if hit {
            return true;
        }
    }
    false
}

fn check_query(d: usize, x: NodeSet, y: NodeSet, z: NodeSet) -> Result<()> {
    if !x.union(y).union(z).is_subset(NodeSet::full(d)) {
        return Err(Error::arg("unknown cluster id"));
    }
    if x.intersects(y) || x.intersects(z) || y.intersects(z) {
        return Err(Error::arg("x, y, z must be pairwise disjoint"));
    }
    Ok(())
}

/// Cluster d-separation over a cluster DAG, with true descendants.
pub fn dsep_clusters(g: &ClusterDag, x: NodeSet, y: NodeSet, z: NodeSet) -> Result<bool> {
    check_query(g.cluster_count(), x, y, z)?;
    let desc: Vec<NodeSet> = (0..g.cluster_count()).map(|c| g.descendants(c)).collect();
    Ok(dsep_with(g, &|c| desc[c], x, y, z))
}

/// Cluster d-separation over a CPDAG, with possible descendants standing
/// in for true descendants.
pub fn dsep_clusters_cpdag(g: &ClusterCpdag, x: NodeSet, y: NodeSet, z: NodeSet) -> Result<bool> {
    check_query(g.cluster_count(), x, y, z)?;
    let desc: Vec<NodeSet> = (0..g.cluster_count()).map(|c| g.possible_descendants_unchecked(c)).collect();
    Ok(dsep_with(g, &|c| desc[c], x, y, z))
}

/// A cluster MEC: all orientations sharing the generator's relations.
#[derive(Clone, Debug)]
pub struct MecFamily {
    pub members: Vec<ClusterDag>,
    pub generator: ClusterDag,
}

/// Precomputed paths for every unordered cluster pair, so relation sets
/// can be re-evaluated cheaply under different orientations.
struct RelationOracle {
    pairs: Vec<PairPaths>,
}

struct PairPaths {
    rest: NodeSet,
    paths: Vec<Vec<usize>>,
}

impl RelationOracle {
    fn new<G: ClusterGraph>(g: &G) -> Self {
        let d = g.cluster_count();
        let mut pairs = Vec::new();
        for x in 0..d {
            for y in x + 1..d {
                let mut paths = Vec::new();
                let mut path = vec![x];
                simple_paths(g, &mut path, NodeSet::singleton(x), y, &mut paths);
                pairs.push(PairPaths {
                    rest: NodeSet::full(d).without(x).without(y),
                    paths,
                });
            }
        }
        RelationOracle { pairs }
    }

    /// Relation bits: for each pair, for each subset of `rest` in
    /// enumeration order, whether the pair is separated.
    fn relations(&self, arcs: &ArcMap, desc: &[NodeSet]) -> Vec<Vec<bool>> {
        let f = |c: usize| desc[c];
        self.pairs
            .iter()
            .map(|p| {
                all_subsets(p.rest)
                    .map(|z| p.paths.iter().all(|path| path_blocked(arcs, &f, path, z)))
                    .collect()
            })
            .collect()
    }

    fn matches(&self, arcs: &ArcMap, desc: &[NodeSet], reference: &[Vec<bool>]) -> bool {
        let f = |c: usize| desc[c];
        self.pairs.iter().zip(reference).all(|(p, r)| {
            all_subsets(p.rest)
                .zip(r)
                .all(|(z, &sep)| p.paths.iter().all(|path| path_blocked(arcs, &f, path, z)) == sep)
        })
    }
}

fn simple_paths<G: ClusterGraph>(g: &G, path: &mut Vec<usize>, used: NodeSet, target: usize, out: &mut Vec<Vec<usize>>) {
    let tip = *path.last().expect("nonempty");
    for w in g.adjacent(tip).minus(used) {
        path.push(w);
        if w == target {
            out.push(path.clone());
        } else {
            simple_paths(g, path, used.with(w), target, out);
        }
        path.pop();
    }
}

fn descendants_of(children: &[NodeSet]) -> Vec<NodeSet> {
    (0..children.len())
        .map(|c| {
            let mut seen = NodeSet::EMPTY;
            let mut frontier = children[c];
            while !frontier.is_empty() {
                seen = seen.union(frontier);
                let mut next = NodeSet::EMPTY;
                for v in frontier {
                    next = next.union(children[v]);
                }
                frontier = next.minus(seen);
            }
            seen
        })
        .collect()
}

/// Enumerates the cluster MEC of `g` with the default cap.
pub fn enumerate_cluster_mec(g: &ClusterDag) -> Result<MecFamily> {
    enumerate_cluster_mec_capped(g, DEFAULT_MEC_CAP)
}

/// Every acyclic orientation of `g`'s skeleton, carrying `g`'s
/// annotations, whose singleton-pair cluster d-separation relations equal
/// those of `g`. Unshielded Marg triplets stay non-colliders and unshielded
/// Cond triplets stay colliders, wherever `g` itself follows that rule.
pub fn enumerate_cluster_mec_capped(g: &ClusterDag, cap: usize) -> Result<MecFamily> {
    let d = g.cluster_count();
    if d > cap {
        return Err(Error::Capacity {
            what: "cluster count for MEC enumeration",
            got: d,
            limit: cap,
        });
    }
    let edges = g.skeleton();
    let arcs = g.arcs();
    let edge_index = |a: usize, b: usize| edges.iter().position(|&e| e == (a.min(b), a.max(b))).expect("edge");
    // Unshielded triplets whose arc fixes collider status, indexed by the
    // later of their two edges: Marg forbids a collider, Cond requires one.
    // A rule the generator itself breaks is not imposed.
    let mut constraints: Vec<Vec<(usize, usize, usize, bool)>> = vec![Vec::new(); edges.len()];
    for arc in arcs.iter() {
        let [i, k, j] = arc.triplet;
        if g.is_adjacent(i, j) {
            continue;
        }
        let collide = match arc.state {
            ArcState::Marg => false,
            ArcState::Cond => true,
            ArcState::Never => continue,
        };
        let gen_collides = g.children(i).contains(k) && g.children(j).contains(k);
        if gen_collides != collide {
            log::debug!("generator breaks the {:?} collider rule at {:?}", arc.state, arc.triplet);
            continue;
        }
        let last = edge_index(i, k).max(edge_index(k, j));
        constraints[last].push((i, k, j, collide));
    }
    let oracle = RelationOracle::new(g);
    let gen_children: Vec<NodeSet> = (0..d).map(|c| g.children(c)).collect();
    let gen_desc = descendants_of(&gen_children);
    let reference = oracle.relations(arcs, &gen_desc);
    let cond_mid: NodeSet = arcs
        .iter()
        .filter(|a| a.state == ArcState::Cond)
        .map(|a| a.triplet[1])
        .collect();

    let mut orientations: Vec<Vec<bool>> = Vec::new();
    let mut children = vec![NodeSet::EMPTY; d];
    let mut dirs = vec![false; edges.len()];
    let mut stack: Vec<(usize, u8)> = vec![(0, 0)];
    // Iterative backtracking: (edge index, next choice to try).
    while let Some((e, choice)) = stack.pop() {
        if e == edges.len() {
            let desc = descendants_of(&children);
            let same = cond_mid.iter().all(|c| desc[c] == gen_desc[c]);
            if same || oracle.matches(arcs, &desc, &reference) {
                orientations.push(dirs.clone());
            }
            continue;
        }
        let (a, b) = edges[e];
        // Undo whatever this edge held before trying the next choice.
        children[a].remove(b);
        children[b].remove(a);
        if choice >= 2 {
            continue;
        }
        stack.push((e, choice + 1));
        let forward = choice == 0;
        let (u, v) = if forward { (a, b) } else { (b, a) };
        if reaches(&children, v, u) {
            continue;
        }
        children[u].insert(v);
        dirs[e] = forward;
        let ok = constraints[e]
            .iter()
            .all(|&(i, k, j, collide)| (children[i].contains(k) && children[j].contains(k)) == collide);
        if !ok {
            children[u].remove(v);
            continue;
        }
        stack.push((e + 1, 0));
    }
    let mut members = Vec::with_capacity(orientations.len());
    for dirs in &orientations {
        let m = g.reoriented(|a, b| dirs[edge_index(a, b)])?;
        members.push(m);
    }
    members.sort_by_key(|m| m.edges());
    debug_assert!(members.iter().any(|m| m.edges() == g.edges()));
    Ok(MecFamily {
        members,
        generator: g.clone(),
    })
}

fn reaches(children: &[NodeSet], from: usize, to: usize) -> bool {
    if from == to {
        return true;
    }
    let mut seen = NodeSet::singleton(from);
    let mut frontier = seen;
    while !frontier.is_empty() {
        let mut next = NodeSet::EMPTY;
        for v in frontier {
            next = next.union(children[v]);
        }
        if next.contains(to) {
            return true;
        }
        frontier = next.minus(seen);
        seen = seen.union(next);
    }
    false
}

/// Shared representation of a cluster MEC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterCpdag {
    children: Vec<NodeSet>,
    parents: Vec<NodeSet>,
    undirected: Vec<NodeSet>,
    arcs: ArcMap,
}

impl ClusterCpdag {
    /// Assembles a CPDAG from directed edges, undirected pairs and arcs.
    pub fn new(d: usize, directed: &[(usize, usize)], undirected: &[(usize, usize)], arcs: ArcMap) -> Result<Self> {
        let mut children = vec![NodeSet::EMPTY; d];
        let mut parents = vec![NodeSet::EMPTY; d];
        let mut und = vec![NodeSet::EMPTY; d];
        for &(u, v) in directed {
            if u >= d || v >= d || u == v {
                return Err(Error::arg(format!("bad edge ({u},{v})")));
            }
            children[u].insert(v);
            parents[v].insert(u);
        }
        for &(u, v) in undirected {
            if u >= d || v >= d || u == v || children[u].contains(v) || children[v].contains(u) {
                return Err(Error::arg(format!("bad undirected edge ({u},{v})")));
            }
            und[u].insert(v);
            und[v].insert(u);
        }
        if has_cycle(&children) {
            return Err(Error::Cycle("directed part of CPDAG".into()));
        }
        Ok(ClusterCpdag {
            children,
            parents,
            undirected: und,
            arcs,
        })
    }

    /// Directed parents.
    pub fn parents(&self, c: usize) -> NodeSet {
        self.parents[c]
    }

    /// Directed children.
    pub fn children(&self, c: usize) -> NodeSet {
        self.children[c]
    }

    /// Undirected neighbours.
    pub fn siblings(&self, c: usize) -> NodeSet {
        self.undirected[c]
    }

    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.children.len() {
            for v in self.children[u] {
                out.push((u, v));
            }
        }
        out
    }

    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.undirected.len() {
            for v in self.undirected[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn check(&self, c: usize) -> Result<()> {
        if c >= self.cluster_count() {
            return Err(Error::arg(format!("unknown cluster {c}")));
        }
        Ok(())
    }

    fn possible_descendants_unchecked(&self, q: usize) -> NodeSet {
        let mut seen = NodeSet::singleton(q);
        let mut frontier = seen;
        while !frontier.is_empty() {
            let mut next = NodeSet::EMPTY;
            for v in frontier {
                next = next.union(self.children[v]).union(self.undirected[v]);
            }
            frontier = next.minus(seen);
            seen = seen.union(next);
        }
        seen.without(q)
    }

    /// Clusters reachable from `q` along directed edges and undirected
    /// edges taken as pointing away.
    pub fn possible_descendants(&self, q: usize) -> Result<NodeSet> {
        self.check(q)?;
        Ok(self.possible_descendants_unchecked(q))
    }

    /// Clusters reachable from `a` along directed edges only.
    pub fn definite_descendants(&self, a: usize) -> Result<NodeSet> {
        self.check(a)?;
        Ok(descendants_of(&self.children)[a])
    }

    /// Whether some directed path leads from `from` to `to`.
    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        from != to && reaches(&self.children, from, to)
    }

    pub fn to_document(&self, partition: &ClusterPartition) -> GraphDocument {
        GraphDocument {
            nodes: (0..self.cluster_count()).collect(),
            edges: self.directed_edges().into_iter().map(|(u, v)| [u, v]).collect(),
            undirected: Some(self.undirected_edges().into_iter().map(|(u, v)| [u, v]).collect()),
            kinds: None,
            partition: partition.clusters().iter().map(|c| c.to_vec()).collect(),
            roles: partition.roles().to_vec(),
            arcs: arc_docs(&self.arcs),
        }
    }
}

impl ClusterGraph for ClusterCpdag {
    fn cluster_count(&self) -> usize {
        self.children.len()
    }
    fn adjacent(&self, c: usize) -> NodeSet {
        self.children[c].union(self.parents[c]).union(self.undirected[c])
    }
    fn arcs(&self) -> &ArcMap {
        &self.arcs
    }
}

/// Directed where every member agrees, undirected otherwise; arcs and
/// marks from the generator.
pub fn build_cluster_cpdag(mec: &MecFamily) -> Result<ClusterCpdag> {
    let first = mec.members.first().ok_or_else(|| Error::arg("empty MEC"))?;
    let d = first.cluster_count();
    let mut directed = Vec::new();
    let mut undirected = Vec::new();
    for (a, b) in first.skeleton() {
        let fwd = mec.members.iter().filter(|m| m.children(a).contains(b)).count();
        if fwd == mec.members.len() {
            directed.push((a, b));
        } else if fwd == 0 {
            directed.push((b, a));
        } else {
            undirected.push((a, b));
        }
    }
    let arcs = mec
        .generator
        .arcs()
        .iter()
        .filter(|arc| {
            let [i, k, j] = arc.triplet;
            mec.members.iter().all(|m| m.arcs().get(i, k, j).is_some())
        })
        .cloned()
        .fold(ArcMap::default(), |mut acc, a| {
            acc.insert(a);
            acc
        });
    ClusterCpdag::new(d, &directed, &undirected, arcs)
}
