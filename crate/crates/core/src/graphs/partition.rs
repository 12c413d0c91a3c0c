use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::NodeSet;

/// What a cluster stands for in the fairness problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sensitive,
    Admissible,
    Plain,
    Target,
}

/// A partition of variables into disjoint clusters with roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterPartition {
    clusters: Vec<NodeSet>,
    roles: Vec<Role>,
    cluster_of: Vec<usize>,
}

impl ClusterPartition {
    /// Validates disjointness, coverage of `0..n_vars`, and role counts
    /// (at most one sensitive, admissible and target cluster each).
    pub fn new(n_vars: usize, clusters: Vec<NodeSet>, roles: Vec<Role>) -> Result<Self> {
        if clusters.len() != roles.len() {
            return Err(Error::arg("one role per cluster required"));
        }
        let mut cluster_of = vec![usize::MAX; n_vars];
        for (c, set) in clusters.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::arg(format!("cluster {c} is empty")));
            }
            for v in *set {
                if v >= n_vars {
                    return Err(Error::arg(format!("variable {v} out of range")));
                }
                if cluster_of[v] != usize::MAX {
                    return Err(Error::arg(format!("variable {v} in two clusters")));
                }
                cluster_of[v] = c;
            }
        }
        if let Some(v) = cluster_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::arg(format!("variable {v} not covered")));
        }
        for role in [Role::Sensitive, Role::Admissible, Role::Target] {
            if roles.iter().filter(|&&r| r == role).count() > 1 {
                return Err(Error::arg(format!("more than one {role:?} cluster")));
            }
        }
        Ok(ClusterPartition {
            clusters,
            roles,
            cluster_of,
        })
    }

    /// Every variable in its own plain cluster.
    pub fn singletons(n_vars: usize) -> Self {
        ClusterPartition::new(
            n_vars,
            (0..n_vars).map(NodeSet::singleton).collect(),
            vec![Role::Plain; n_vars],
        )
        .expect("singleton partition is valid")
    }

    /// Plain clusters from lists of variable ids.
    pub fn plain(n_vars: usize, clusters: &[&[usize]]) -> Result<Self> {
        let sets: Vec<NodeSet> = clusters.iter().map(|c| NodeSet::from_ids(c.iter().copied())).collect();
        let roles = vec![Role::Plain; sets.len()];
        ClusterPartition::new(n_vars, sets, roles)
    }

    /// Same clusters with `role` assigned to cluster `c`.
    pub fn with_role(&self, c: usize, role: Role) -> Result<Self> {
        if c >= self.len() {
            return Err(Error::arg(format!("cluster {c} out of range")));
        }
        let mut roles = self.roles.clone();
        if role != Role::Plain {
            for r in roles.iter_mut() {
                if *r == role {
                    *r = Role::Plain;
                }
            }
        }
        roles[c] = role;
        ClusterPartition::new(self.var_count(), self.clusters.clone(), roles)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn cluster(&self, c: usize) -> NodeSet {
        self.clusters[c]
    }

    pub fn clusters(&self) -> &[NodeSet] {
        &self.clusters
    }

    pub fn role(&self, c: usize) -> Role {
        self.roles[c]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.cluster_of[v]
    }

    fn find(&self, role: Role) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    pub fn sensitive(&self) -> Option<usize> {
        self.find(Role::Sensitive)
    }

    pub fn admissible(&self) -> Option<usize> {
        self.find(Role::Admissible)
    }

    pub fn target(&self) -> Option<usize> {
        self.find(Role::Target)
    }

    /// Variables in the union of the clusters in `cs`.
    pub fn union_of(&self, cs: NodeSet) -> NodeSet {
        cs.iter().fold(NodeSet::EMPTY, |acc, c| acc.union(self.clusters[c]))
    }

    /// Clusters that contain at least one variable of `vars`.
    pub fn clusters_touching(&self, vars: NodeSet) -> NodeSet {
        vars.iter().map(|v| self.cluster_of[v]).collect()
    }

    /// Replaces each cluster in `split` by singleton clusters, in place and
    /// in variable order. Returns the new partition and, for each old
    /// cluster, the new ids it maps to.
    pub fn split(&self, split: NodeSet) -> (ClusterPartition, Vec<NodeSet>) {
        let mut clusters = Vec::new();
        let mut roles = Vec::new();
        let mut map = Vec::with_capacity(self.len());
        for (c, &set) in self.clusters.iter().enumerate() {
            let start = clusters.len();
            if split.contains(c) && set.len() > 1 {
                for v in set {
                    clusters.push(NodeSet::singleton(v));
                    roles.push(self.roles[c]);
                }
            } else {
                clusters.push(set);
                roles.push(self.roles[c]);
            }
            map.push((start..clusters.len()).collect());
        }
        let p = ClusterPartition::new(self.var_count(), clusters, roles)
            .expect("splitting keeps a valid partition");
        (p, map)
    }

    /// Largest cluster size.
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(|c| c.len()).max().unwrap_or(0)
    }
}
