use serde::{Deserialize, Serialize};

use super::cluster::{ArcMap, ArcState, ClusterDag, ClusterGraph, IndependenceArc};
use super::dag::{NodeKind, VariableDag};
use super::partition::{ClusterPartition, Role};
use crate::error::{Error, Result};
use crate::set::NodeSet;

/// One serialized independence arc.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcDoc {
    pub triplet: [usize; 3],
    pub state: ArcState,
    pub conn_marks: Vec<usize>,
    pub sep_marks: Vec<usize>,
}

/// JSON form shared by variable DAGs, cluster DAGs and cluster CPDAGs.
///
/// `nodes` are variable ids for a variable graph and cluster ids otherwise;
/// `partition[c]` lists the variables of cluster `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undirected: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<NodeKind>>,
    pub partition: Vec<Vec<usize>>,
    pub roles: Vec<Role>,
    pub arcs: Vec<ArcDoc>,
}

fn partition_lists(p: &ClusterPartition) -> Vec<Vec<usize>> {
    p.clusters().iter().map(|c| c.to_vec()).collect()
}

pub(crate) fn arc_docs(arcs: &ArcMap) -> Vec<ArcDoc> {
    arcs.iter()
        .map(|a| ArcDoc {
            triplet: a.triplet,
            state: a.state,
            conn_marks: a.connection_marks.to_vec(),
            sep_marks: a.separation_marks.to_vec(),
        })
        .collect()
}

pub(crate) fn arcs_from_docs(docs: &[ArcDoc]) -> ArcMap {
    let mut m = ArcMap::default();
    for a in docs {
        m.insert(IndependenceArc {
            triplet: a.triplet,
            state: a.state,
            connection_marks: NodeSet::from_ids(a.conn_marks.iter().copied()),
            separation_marks: NodeSet::from_ids(a.sep_marks.iter().copied()),
        });
    }
    m
}

impl GraphDocument {
    pub fn from_variable_dag(dag: &VariableDag, partition: &ClusterPartition) -> Self {
        GraphDocument {
            nodes: (0..dag.node_count()).collect(),
            edges: dag.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            undirected: None,
            kinds: Some(dag.kinds().to_vec()),
            partition: partition_lists(partition),
            roles: partition.roles().to_vec(),
            arcs: Vec::new(),
        }
    }

    pub fn from_cluster_dag(g: &ClusterDag, partition: &ClusterPartition) -> Self {
        GraphDocument {
            nodes: (0..g.cluster_count()).collect(),
            edges: g.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            undirected: None,
            kinds: None,
            partition: partition_lists(partition),
            roles: partition.roles().to_vec(),
            arcs: arc_docs(g.arcs()),
        }
    }

    /// Recovers a variable DAG and its partition.
    pub fn to_variable_dag(&self) -> Result<(VariableDag, ClusterPartition)> {
        let n = self.nodes.len();
        let kinds = self.kinds.clone().unwrap_or_else(|| vec![NodeKind::Continuous; n]);
        let edges: Vec<_> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let dag = VariableDag::new(kinds, &edges)?;
        let partition = self.partition(n)?;
        Ok((dag, partition))
    }

    /// Recovers a cluster DAG and its partition.
    pub fn to_cluster_dag(&self) -> Result<(ClusterDag, ClusterPartition)> {
        if self.undirected.as_ref().is_some_and(|u| !u.is_empty()) {
            return Err(Error::arg("document has undirected edges"));
        }
        let edges: Vec<_> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = ClusterDag::new(self.nodes.len(), &edges, arcs_from_docs(&self.arcs))?;
        let n_vars = self.partition.iter().map(|c| c.len()).sum();
        Ok((g, self.partition(n_vars)?))
    }

    pub(crate) fn partition(&self, n_vars: usize) -> Result<ClusterPartition> {
        let sets = self
            .partition
            .iter()
            .map(|c| NodeSet::checked(c.iter().copied(), n_vars))
            .collect::<Result<Vec<_>>>()?;
        ClusterPartition::new(n_vars, sets, self.roles.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
