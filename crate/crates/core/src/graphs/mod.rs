//! Variable DAGs, cluster partitions, and annotated cluster DAGs.

mod cluster;
mod dag;
mod io;
mod partition;

pub use cluster::{
    build_cluster_dag, build_cluster_dag_with, compute_arc_state, compute_marks, compute_marks_with, is_admissible,
    is_analogous, project_clusters, AnnotationOptions, ArcMap, ArcState, ClusterDag, ClusterGraph, IndependenceArc,
    MarkReach, SearchBudget,
};
pub(crate) use cluster::has_cycle;
pub use dag::{dsep_variables, NodeKind, VariableDag};
pub(crate) use io::arc_docs;
pub use io::{ArcDoc, GraphDocument};
pub use partition::{ClusterPartition, Role};
