#![allow(dead_code)]

use clusterfair::graphs::{is_admissible, ClusterPartition, NodeKind, VariableDag};
use clusterfair::NodeSet;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random admissible (DAG, partition) with `d` clusters of 1..=`max_size`
/// variables and edge probability `p` over a random topological order.
pub fn random_instance<R: Rng>(rng: &mut R, d: usize, max_size: usize, p: f64) -> (VariableDag, ClusterPartition) {
    loop {
        let sizes: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=max_size)).collect();
        let n: usize = sizes.iter().sum();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push((order[a], order[b]));
                }
            }
        }
        let dag = VariableDag::new(vec![NodeKind::Continuous; n], &edges).unwrap();
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(rng);
        let mut clusters = Vec::new();
        let mut at = 0;
        for &s in &sizes {
            clusters.push(NodeSet::from_ids(vars[at..at + s].iter().copied()));
            at += s;
        }
        let part = ClusterPartition::new(n, clusters, vec![clusterfair::graphs::Role::Plain; d]).unwrap();
        if is_admissible(&dag, &part).unwrap() {
            return (dag, part);
        }
    }
}

/// Exhaustive-path d-separation oracle.
pub fn brute_dsep(dag: &VariableDag, x: NodeSet, y: NodeSet, z: NodeSet) -> bool {
    let n = dag.node_count();
    let desc: Vec<NodeSet> = (0..n).map(|v| dag.descendants(v).with(v)).collect();
    fn walk(
        dag: &VariableDag,
        desc: &[NodeSet],
        path: &mut Vec<usize>,
        used: NodeSet,
        y: NodeSet,
        z: NodeSet,
    ) -> bool {
        let tip = *path.last().unwrap();
        if path.len() >= 2 && y.contains(tip) {
            return true;
        }
        for w in dag.neighbors(tip).minus(used) {
            if path.len() >= 2 {
                let prev = path[path.len() - 2];
                let collider = dag.has_edge(prev, tip) && dag.has_edge(w, tip);
                let active = if collider {
                    desc[tip].intersects(z)
                } else {
                    !z.contains(tip)
                };
                if !active {
                    continue;
                }
            }
            path.push(w);
            let hit = walk(dag, desc, path, used.with(w), y, z);
            path.pop();
            if hit {
                return true;
            }
        }
        false
    }
    for s in x {
        let mut path = vec![s];
        if walk(dag, &desc, &mut path, NodeSet::singleton(s), y, z) {
            return false;
        }
    }
    true
}

/// Whether `z` blocks every back-door path from the variables in `a` to a
/// prediction node that is a child of every variable.
pub fn blocks_backdoor(dag: &VariableDag, a: NodeSet, z: NodeSet) -> bool {
    let n = dag.node_count();
    let edges: Vec<(usize, usize)> = dag
        .edges()
        .into_iter()
        .filter(|&(u, _)| !a.contains(u))
        .chain((0..n).filter(|v| !a.contains(*v)).map(|v| (v, n)))
        .collect();
    let g = VariableDag::new(vec![NodeKind::Continuous; n + 1], &edges).unwrap();
    clusterfair::graphs::dsep_variables(&g, a, NodeSet::singleton(n), z.minus(a)).unwrap()
}

/// All-binary SCM over `d_v` features in singleton clusters, with the
/// sensitive variable chosen among nodes that have both parents and
/// children. Returns the model and the sensitive variable.
pub fn binary_toy_scm<R: Rng>(rng: &mut R, d_v: usize, kind: clusterfair::scm::ScmKind) -> (clusterfair::scm::Scm, usize) {
    use clusterfair::graphs::Role;
    loop {
        let dag = clusterfair::scm::sample_er_dag(d_v, 2.0, rng).unwrap();
        let dag = dag.with_kinds(vec![NodeKind::Binary; d_v]).unwrap();
        let picks: Vec<usize> = (0..d_v)
            .filter(|&v| !dag.parents(v).is_empty() && !dag.children(v).is_empty())
            .collect();
        let Some(&a) = picks.choose(rng) else { continue };
        let part = ClusterPartition::singletons(d_v).with_role(a, Role::Sensitive).unwrap();
        let scm = clusterfair::scm::build_scm(&dag, &part, kind, rng).unwrap();
        return (scm, a);
    }
}

/// `P(f(X) = 1 | do(a_var = a))` by summing the truncated factorization
/// over every binary assignment of the features.
pub fn exact_do(scm: &clusterfair::scm::Scm, a_var: usize, a: f64, f: impl Fn(&[f64]) -> bool) -> f64 {
    let d = scm.feature_count();
    let mut total = 0.0;
    for code in 0u32..(1 << d) {
        let x: Vec<f64> = (0..d).map(|v| f64::from((code >> v) & 1)).collect();
        if x[a_var] != a {
            continue;
        }
        let mut p = 1.0;
        for v in (0..d).filter(|&v| v != a_var) {
            let eq = &scm.equations()[v];
            let t: f64 = eq.parents.iter().zip(&eq.weights).map(|(&u, &w)| w * x[u]).sum();
            let t = eq.xi.map_or(t, |g| g.apply(t));
            let q = clusterfair::scm::sigmoid(t);
            p *= if x[v] == 1.0 { q } else { 1.0 - q };
        }
        if f(&x) {
            total += p;
        }
    }
    total
}
