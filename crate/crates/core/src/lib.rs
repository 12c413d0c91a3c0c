//! Interventional fairness when the causal graph is only known up to a
//! cluster-level equivalence class.
//!
//! The pipeline runs from a variable-level DAG to a cluster CPDAG
//! ([`graphs`], [`equivalence`]), enumerates candidate adjustment sets
//! ([`adjustment`]), and trains predictors under a worst-case kernel
//! penalty ([`fairness`], [`learn`]) evaluated against the true SCM
//! ([`scm`], [`metrics`]). [`harness`] drives the synthetic experiments.

pub mod adjustment;
pub mod equivalence;
pub mod error;
pub mod fairness;
pub mod graphs;
pub mod harness;
pub mod learn;
pub mod metrics;
pub mod scm;
pub mod set;

pub use error::{Error, Result};
pub use set::NodeSet;
