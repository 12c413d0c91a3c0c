mod common;

use clusterfair::adjustment::{enumerate_adjustment_sets, CandidateStatus};
use clusterfair::equivalence::{build_cluster_cpdag, enumerate_cluster_mec};
use clusterfair::graphs::{build_cluster_dag, is_admissible, ArcState, ClusterGraph, ClusterPartition, NodeKind, Role, VariableDag};
use common::blocks_backdoor;

fn dag(n: usize, edges: &[(usize, usize)]) -> VariableDag {
    VariableDag::new(vec![NodeKind::Continuous; n], edges).unwrap()
}

// Hiring example. Variables: A1 0, A2 1, Xad1 2, Xad2 3, D1 4, D2 5, E1 6.
// Clusters: A 0, Xad 1, D 2, E 3.
fn hiring() -> (VariableDag, ClusterPartition) {
    let g = dag(7, &[(0, 2), (5, 2), (6, 2), (1, 0), (1, 4), (0, 6), (4, 3)]);
    let p = ClusterPartition::plain(7, &[&[0, 1], &[2, 3], &[4, 5], &[6]]).unwrap();
    (g, p)
}

#[test]
fn hiring_cluster_dag() {
    let (g, p) = hiring();
    assert!(is_admissible(&g, &p).unwrap());
    let cd = build_cluster_dag(&g, &p).unwrap();
    let mut edges = cd.edges();
    edges.sort_unstable();
    assert_eq!(edges, vec![(0, 1), (0, 2), (0, 3), (2, 1), (3, 1)]);
}

#[test]
fn hiring_cpdag_has_two_undirected_edges_at_a() {
    let (g, p) = hiring();
    let cd = build_cluster_dag(&g, &p).unwrap();
    let cp = build_cluster_cpdag(&enumerate_cluster_mec(&cd).unwrap()).unwrap();
    assert_eq!(cp.undirected_edges(), vec![(0, 2), (0, 3)]);
    let mut directed = cp.directed_edges();
    directed.sort_unstable();
    assert_eq!(directed, vec![(0, 1), (2, 1), (3, 1)]);
}

#[test]
fn hiring_gives_several_candidates() {
    let (g, p) = hiring();
    let p = p.with_role(0, Role::Sensitive).unwrap();
    let res = enumerate_adjustment_sets(&g, &p).unwrap();
    let mut sets: Vec<u64> = res.family.candidates.iter().map(|c| c.clusters.0).collect();
    sets.sort_unstable();
    assert_eq!(sets, vec![0b0000, 0b0100, 0b1000]);
    assert_eq!(res.family.refinement_rounds, 0);
    assert!(res
        .family
        .candidates
        .iter()
        .filter(|c| c.status == CandidateStatus::Completed)
        .any(|c| blocks_backdoor(&g, p.cluster(0), res.partition.union_of(c.clusters))));
}

#[test]
fn admissible_parents_join_every_candidate() {
    let (g, p) = hiring();
    let p = p.with_role(0, Role::Sensitive).unwrap().with_role(1, Role::Admissible).unwrap();
    let res = enumerate_adjustment_sets(&g, &p).unwrap();
    assert_eq!(res.family.m(), 1);
    assert_eq!(res.family.candidates[0].clusters.0, 0b1100);
    assert_eq!(res.family.candidates[0].status, CandidateStatus::Completed);
}

// Connection-mark graph. Variables: I 0, K1 1, K2 2, L 3, J 4, W 5, A1 6, Xad 7, A2 8.
// Clusters: I 0, K 1, L 2, J 3, W 4, A 5, Xad 6. The only I-J path through K
// runs I -> K1 <- L -> K2 -> J, so the arc over <I, K, J> is never
// connecting unless a descendant of the collider K1, such as W, is given.
fn marked() -> (VariableDag, ClusterPartition) {
    let g = dag(9, &[(0, 1), (3, 1), (3, 2), (2, 4), (1, 5), (5, 6), (6, 7), (8, 7), (4, 8)]);
    let p = ClusterPartition::plain(9, &[&[0], &[1, 2], &[3], &[4], &[5], &[6, 8], &[7]]).unwrap();
    (g, p)
}

#[test]
fn parent_of_a_carries_a_connection_mark() {
    let (g, p) = marked();
    assert!(is_admissible(&g, &p).unwrap());
    let cd = build_cluster_dag(&g, &p).unwrap();
    assert!(cd.parents(5).contains(4));
    let arc = cd.arcs().get(0, 1, 3).unwrap();
    assert_eq!(arc.state, ArcState::Never);
    assert!(arc.connection_marks.contains(4), "{arc:?}");
}

#[test]
fn marked_parent_needs_at_most_one_refinement() {
    let (g, p) = marked();
    let p = p.with_role(5, Role::Sensitive).unwrap().with_role(6, Role::Admissible).unwrap();
    let res = enumerate_adjustment_sets(&g, &p).unwrap();
    assert!(res.family.refinement_rounds <= 1, "{:?}", res.family);
    let a = p.cluster(5);
    let completed: Vec<_> = res
        .family
        .candidates
        .iter()
        .filter(|c| c.status == CandidateStatus::Completed)
        .collect();
    assert!(!completed.is_empty());
    assert!(completed
        .iter()
        .any(|c| blocks_backdoor(&g, a, res.partition.union_of(c.clusters))));
}
