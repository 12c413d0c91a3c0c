//! Candidate adjustment cluster sets: possible parents, completion, and
//! refinement of clusters named in connection marks.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::equivalence::{build_cluster_cpdag, enumerate_cluster_mec_capped, ClusterCpdag, DEFAULT_MEC_CAP};
use crate::error::{Error, Result};
use crate::graphs::{build_cluster_dag_with, AnnotationOptions, ArcState, ClusterGraph, ClusterPartition, VariableDag};
use crate::set::{all_subsets, NodeSet};

/// Where a candidate stands in the two-step procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateStatus {
    ParentsOnly,
    Completed,
    Failed,
}

/// One candidate adjustment set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub clusters: NodeSet,
    pub status: CandidateStatus,
}

/// Candidate sets Z^1..Z^M with their status.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustmentFamily {
    pub candidates: Vec<Candidate>,
    pub refinement_rounds: usize,
}

impl AdjustmentFamily {
    pub fn m(&self) -> usize {
        self.candidates.len()
    }

    /// Cluster sets of the completed candidates.
    pub fn completed(&self) -> Vec<NodeSet> {
        self.candidates
            .iter()
            .filter(|c| c.status == CandidateStatus::Completed)
            .map(|c| c.clusters)
            .collect()
    }
}

/// Options for the adjustment pipeline.
#[derive(Clone, Copy, Debug)]
pub struct AdjustmentOptions {
    /// Add `Q` on Never arcs during completion.
    pub never_adds: bool,
    pub mec_cap: usize,
    pub annotation: AnnotationOptions,
}

impl Default for AdjustmentOptions {
    fn default() -> Self {
        AdjustmentOptions {
            never_adds: true,
            mec_cap: DEFAULT_MEC_CAP,
            annotation: AnnotationOptions::default(),
        }
    }
}

fn canonical_key(s: NodeSet) -> (usize, Vec<usize>) {
    (s.len(), s.to_vec())
}

/// Subsets `S` of the siblings of `a` that can be its parents in some
/// member: no two non-adjacent members of `S` without a Never arc through
/// `a`, and no directed path from a sibling outside `S` into `S`.
pub fn enumerate_possible_parent_sets(g: &ClusterCpdag, a: usize) -> Vec<NodeSet> {
    let sib = g.siblings(a);
    let mut out: Vec<NodeSet> = all_subsets(sib)
        .filter(|&s| {
            let members = s.to_vec();
            let colliders_ok = members.iter().enumerate().all(|(x, &u)| {
                members[x + 1..].iter().all(|&v| {
                    g.is_adjacent(u, v) || matches!(g.arcs().get(u, a, v), Some(arc) if arc.state == ArcState::Never)
                })
            });
            colliders_ok
                && s.iter()
                    .all(|u| sib.minus(s).iter().all(|v| !g.has_directed_path(v, u)))
        })
        .collect();
    out.sort_by_key(|&s| canonical_key(s));
    out
}

/// `pa(a) ∪ S` for every possible parent set `S`.
pub fn adjustment_candidates(g: &ClusterCpdag, a: usize) -> AdjustmentFamily {
    let pa = g.parents(a);
    let candidates = enumerate_possible_parent_sets(g, a)
        .into_iter()
        .map(|s| Candidate {
            clusters: pa.union(s),
            status: CandidateStatus::ParentsOnly,
        })
        .collect();
    AdjustmentFamily {
        candidates,
        refinement_rounds: 0,
    }
}

/// Outcome of completing one candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Completion {
    Ok(NodeSet),
    Fail,
}

/// Completes `z` for treatment `a` by walking outward from members named
/// in connection marks.
pub fn complete_adjustment_set(z: NodeSet, a: usize, g: &ClusterCpdag) -> Completion {
    complete_with(z, a, g, true)
}

/// [`complete_adjustment_set`] with the Never-branch addition switchable.
pub fn complete_with(z: NodeSet, a: usize, g: &ClusterCpdag, never_adds: bool) -> Completion {
    let mut z = z;
    let marked = g.arcs().connection_marked();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for p in z.intersect(marked) {
        for q in g.adjacent(p).without(a) {
            queue.push_back((p, q));
        }
    }
    let mut processed: BTreeSet<(usize, usize)> = BTreeSet::new();
    while let Some((p, q)) = queue.pop_front() {
        if !processed.insert((p, q)) {
            continue;
        }
        for r in g.adjacent(q).without(p) {
            let Some(arc) = g.arcs().get(p, q, r) else {
                continue;
            };
            match arc.state {
                ArcState::Marg => z.insert(q),
                ArcState::Never => {
                    if never_adds {
                        z.insert(q);
                    }
                    if arc.connection_marks.intersects(z) && r != a {
                        queue.push_back((q, r));
                    }
                }
                ArcState::Cond => {
                    let e = z.intersect(g.possible_descendants(q).expect("q in graph"));
                    if !e.is_empty() && !z.intersects(arc.separation_marks) {
                        return Completion::Fail;
                    }
                }
            }
        }
    }
    if let Ok(dd) = g.definite_descendants(a) {
        if dd.intersects(z) {
            log::warn!("completed set {:?} contains definite descendants {:?} of {a}", z, dd.intersect(z));
        }
    }
    Completion::Ok(z)
}

fn complete_all(g: &ClusterCpdag, a: usize, never_adds: bool) -> Vec<Candidate> {
    adjustment_candidates(g, a)
        .candidates
        .into_iter()
        .map(|c| match complete_with(c.clusters, a, g, never_adds) {
            Completion::Ok(z) => Candidate {
                clusters: z,
                status: CandidateStatus::Completed,
            },
            Completion::Fail => Candidate {
                clusters: c.clusters,
                status: CandidateStatus::Failed,
            },
        })
        .collect()
}

/// Sorted, deduplicated candidates; a set reached as both completed and
/// failed is kept as completed.
fn canonicalize(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    cands.sort_by(|x, y| {
        canonical_key(x.clusters)
            .cmp(&canonical_key(y.clusters))
            .then((x.status != CandidateStatus::Completed).cmp(&(y.status != CandidateStatus::Completed)))
    });
    cands.dedup_by(|later, earlier| later.clusters == earlier.clusters);
    cands
}

/// Full adjustment result with the partition its cluster ids refer to.
#[derive(Clone, Debug)]
pub struct AdjustmentResult {
    pub family: AdjustmentFamily,
    pub partition: ClusterPartition,
    pub cpdag: ClusterCpdag,
}

impl AdjustmentResult {
    /// Variable unions of the completed candidates.
    pub fn completed_variable_sets(&self) -> Vec<NodeSet> {
        self.family
            .completed()
            .into_iter()
            .map(|z| self.partition.union_of(z))
            .collect()
    }

    /// JSON report `{candidates: [{clusters, status}], M, refinement_rounds}`.
    pub fn report(&self) -> serde_json::Value {
        serde_json::json!({
            "candidates": self.family.candidates.iter().map(|c| serde_json::json!({
                "clusters": c.clusters.to_vec(),
                "variables": self.partition.union_of(c.clusters).to_vec(),
                "status": c.status,
            })).collect::<Vec<_>>(),
            "M": self.family.m(),
            "refinement_rounds": self.family.refinement_rounds,
        })
    }
}

/// Builds the cluster CPDAG, enumerates and completes candidates for the
/// sensitive cluster (and the admissible cluster, when present), and
/// splits connection-marked clusters into singletons after any failure.
pub fn enumerate_adjustment_sets(dag: &VariableDag, partition: &ClusterPartition) -> Result<AdjustmentResult> {
    enumerate_adjustment_sets_with(dag, partition, AdjustmentOptions::default())
}

/// [`enumerate_adjustment_sets`] with explicit options.
pub fn enumerate_adjustment_sets_with(
    dag: &VariableDag,
    partition: &ClusterPartition,
    opts: AdjustmentOptions,
) -> Result<AdjustmentResult> {
    if partition.sensitive().is_none() {
        return Err(Error::arg("no sensitive cluster designated"));
    }
    let d = partition.len();
    let mut part = partition.clone();
    let mut rounds = 0;
    loop {
        let cdag = build_cluster_dag_with(dag, &part, opts.annotation)?;
        let mec = enumerate_cluster_mec_capped(&cdag, opts.mec_cap)?;
        let cpdag = build_cluster_cpdag(&mec)?;
        let a = part.sensitive().expect("checked");
        let protected = match part.admissible() {
            Some(x) => NodeSet::singleton(a).with(x),
            None => NodeSet::singleton(a),
        };
        let for_a = complete_all(&cpdag, a, opts.never_adds);
        let combined: Vec<Candidate> = match part.admissible() {
            None => for_a,
            Some(x) => {
                let for_x = complete_all(&cpdag, x, opts.never_adds);
                let mut out = Vec::new();
                for ca in &for_a {
                    for cx in &for_x {
                        let failed = ca.status == CandidateStatus::Failed || cx.status == CandidateStatus::Failed;
                        out.push(Candidate {
                            clusters: ca.clusters.union(cx.clusters),
                            status: if failed {
                                CandidateStatus::Failed
                            } else {
                                CandidateStatus::Completed
                            },
                        });
                    }
                }
                out
            }
        };
        let candidates = canonicalize(
            combined
                .into_iter()
                .map(|c| Candidate {
                    clusters: c.clusters.minus(protected),
                    status: c.status,
                })
                .collect(),
        );
        let any_fail = candidates.iter().any(|c| c.status == CandidateStatus::Failed);
        let splittable: NodeSet = cdag
            .arcs()
            .connection_marked()
            .minus(protected)
            .iter()
            .filter(|&c| part.cluster(c).len() > 1)
            .collect();
        if !any_fail || rounds >= d || splittable.is_empty() {
            if any_fail {
                log::warn!("refinement stopped after {rounds} rounds with failed candidates");
            }
            return Ok(AdjustmentResult {
                family: AdjustmentFamily {
                    candidates,
                    refinement_rounds: rounds,
                },
                partition: part,
                cpdag,
            });
        }
        part = part.split(splittable).0;
        rounds += 1;
    }
}
