//! Random graphs, linear and nonlinear structural causal models, and
//! observational or interventional sampling.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{project_clusters, ClusterPartition, NodeKind, Role, VariableDag};
use crate::set::NodeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScmKind {
    Linear,
    Nonlinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Sin,
    Cos,
    Tanh,
}

impl Nonlinearity {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Nonlinearity::Sin => t.sin(),
            Nonlinearity::Cos => t.cos(),
            Nonlinearity::Tanh => t.tanh(),
        }
    }
}

/// Structural equation of one node: `xi(sum_u w_u x_u)` plus noise, or a
/// Bernoulli draw through the logistic function for binary nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub parents: Vec<usize>,
    pub weights: Vec<f64>,
    pub xi: Option<Nonlinearity>,
}

impl Equation {
    fn signal(&self, row: ArrayView1<f64>) -> f64 {
        let t: f64 = self.parents.iter().zip(&self.weights).map(|(&u, &w)| w * row[u]).sum();
        match self.xi {
            Some(f) => f.apply(t),
            None => t,
        }
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Erdos-Renyi DAG over a uniformly random order. All nodes continuous.
pub fn sample_er_dag<R: Rng + ?Sized>(d_v: usize, expected_degree: f64, rng: &mut R) -> Result<VariableDag> {
    if d_v < 2 {
        return Err(Error::arg("need at least two variables"));
    }
    if !(expected_degree >= 0.0) || expected_degree >= d_v as f64 {
        return Err(Error::arg(format!(
            "expected degree {expected_degree} must lie in [0, {d_v})"
        )));
    }
    let p = expected_degree / (d_v - 1) as f64;
    let mut order: Vec<usize> = (0..d_v).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..d_v {
        for j in i + 1..d_v {
            if rng.gen::<f64>() < p {
                edges.push((order[i], order[j]));
            }
        }
    }
    VariableDag::new(vec![NodeKind::Continuous; d_v], &edges)
}

/// Randomly assigns variables to clusters of `per_cluster` members.
pub fn random_partition<R: Rng + ?Sized>(d_v: usize, per_cluster: usize, rng: &mut R) -> Result<ClusterPartition> {
    if per_cluster == 0 || d_v % per_cluster != 0 {
        return Err(Error::arg(format!("{d_v} variables do not split into clusters of {per_cluster}")));
    }
    let mut vars: Vec<usize> = (0..d_v).collect();
    vars.shuffle(rng);
    let clusters: Vec<NodeSet> = vars.chunks(per_cluster).map(|c| NodeSet::from_ids(c.iter().copied())).collect();
    let roles = vec![Role::Plain; clusters.len()];
    ClusterPartition::new(d_v, clusters, roles)
}

/// Per-cluster node kinds: each cluster is binary or continuous with equal
/// probability.
pub fn random_cluster_kinds<R: Rng + ?Sized>(partition: &ClusterPartition, rng: &mut R) -> Vec<NodeKind> {
    let mut kinds = vec![NodeKind::Continuous; partition.var_count()];
    for c in 0..partition.len() {
        let kind = if rng.gen_bool(0.5) {
            NodeKind::Binary
        } else {
            NodeKind::Continuous
        };
        for v in partition.cluster(c) {
            kinds[v] = kind;
        }
    }
    kinds
}

/// Lowest-id all-binary cluster whose degree in the projected cluster graph
/// is at least two.
pub fn choose_sensitive(dag: &VariableDag, partition: &ClusterPartition) -> Option<usize> {
    let edges = project_clusters(dag, partition).ok()?;
    let mut degree = vec![0usize; partition.len()];
    for (u, v) in edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    (0..partition.len()).find(|&c| {
        degree[c] >= 2 && partition.cluster(c).iter().all(|v| dag.kind(v) == NodeKind::Binary)
    })
}

/// All-binary child clusters of `a` in the projected cluster graph.
pub fn binary_child_clusters(dag: &VariableDag, partition: &ClusterPartition, a: usize) -> Vec<usize> {
    let edges = project_clusters(dag, partition).unwrap_or_default();
    let mut out: Vec<usize> = edges
        .into_iter()
        .filter(|&(u, v)| u == a && partition.cluster(v).iter().all(|x| dag.kind(x) == NodeKind::Binary))
        .map(|(_, v)| v)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn draw_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    s * rng.gen_range(0.5..2.0)
}

fn draw_xi<R: Rng + ?Sized>(rng: &mut R) -> Nonlinearity {
    [Nonlinearity::Sin, Nonlinearity::Cos, Nonlinearity::Tanh][rng.gen_range(0..3)]
}

/// A structural causal model over features plus one continuous target,
/// which is always the last node and sits alone in a target cluster.
#[derive(Clone, Debug)]
pub struct Scm {
    dag: VariableDag,
    partition: ClusterPartition,
    kind: ScmKind,
    equations: Vec<Equation>,
}

/// Builds random equations for `dag` and appends the target node. Every
/// feature variable is a parent of the target; weights from the sensitive
/// cluster are amplified fivefold.
pub fn build_scm<R: Rng + ?Sized>(
    dag: &VariableDag,
    partition: &ClusterPartition,
    kind: ScmKind,
    rng: &mut R,
) -> Result<Scm> {
    if partition.var_count() != dag.node_count() {
        return Err(Error::arg("partition does not match the graph"));
    }
    let a = partition
        .sensitive()
        .ok_or_else(|| Error::arg("no sensitive cluster designated"))?;
    if partition.target().is_some() {
        return Err(Error::arg("feature partition must not contain a target cluster"));
    }
    let n = dag.node_count();
    let mut equations = Vec::with_capacity(n + 1);
    for v in 0..n {
        let parents = dag.parents(v).to_vec();
        let weights = parents.iter().map(|_| draw_weight(rng)).collect();
        let xi = (kind == ScmKind::Nonlinear && !parents.is_empty()).then(|| draw_xi(rng));
        equations.push(Equation { parents, weights, xi });
    }
    let y_parents: Vec<usize> = (0..n).collect();
    let y_weights = y_parents
        .iter()
        .map(|&u| {
            let w = draw_weight(rng);
            if partition.cluster_of(u) == a {
                5.0 * w
            } else {
                w
            }
        })
        .collect();
    let xi = (kind == ScmKind::Nonlinear).then(|| draw_xi(rng));
    let full_dag = dag.with_appended(NodeKind::Continuous, NodeSet::from_ids(y_parents.iter().copied()))?;
    equations.push(Equation {
        parents: y_parents,
        weights: y_weights,
        xi,
    });
    let mut clusters = partition.clusters().to_vec();
    clusters.push(NodeSet::singleton(n));
    let mut roles = partition.roles().to_vec();
    roles.push(Role::Target);
    let partition = ClusterPartition::new(n + 1, clusters, roles)?;
    Scm::from_parts(full_dag, partition, kind, equations)
}

/// Fixed values for whole clusters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub assignments: BTreeMap<usize, f64>,
}

impl Intervention {
    /// Assigns the bits of `code` to `vars`, lowest variable as bit zero.
    pub fn binary(vars: NodeSet, code: u32) -> Self {
        let assignments = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v, f64::from((code >> i) & 1)))
            .collect();
        Intervention { assignments }
    }

    pub fn and(mut self, other: &Intervention) -> Self {
        self.assignments.extend(other.assignments.iter().map(|(&k, &v)| (k, v)));
        self
    }

    pub fn variables(&self) -> NodeSet {
        NodeSet::from_ids(self.assignments.keys().copied())
    }
}

/// Exogenous inputs: Gaussian noise for continuous nodes, uniforms for
/// binary ones. Reusing one draw across interventions couples the samples.
#[derive(Clone, Debug)]
pub struct Noise(pub Array2<f64>);

impl Scm {
    /// Validates shapes against the graph. The last node must be the
    /// target.
    pub fn from_parts(
        dag: VariableDag,
        partition: ClusterPartition,
        kind: ScmKind,
        equations: Vec<Equation>,
    ) -> Result<Scm> {
        let n = dag.node_count();
        if equations.len() != n || partition.var_count() != n {
            return Err(Error::arg("equation or partition size mismatch"));
        }
        let t = partition
            .target()
            .ok_or_else(|| Error::arg("no target cluster"))?;
        if partition.cluster(t) != NodeSet::singleton(n - 1) {
            return Err(Error::arg("target cluster must hold only the last node"));
        }
        for (v, eq) in equations.iter().enumerate() {
            if NodeSet::from_ids(eq.parents.iter().copied()) != dag.parents(v) || eq.weights.len() != eq.parents.len() {
                return Err(Error::arg(format!("equation of node {v} does not match its parents")));
            }
        }
        if dag.kind(n - 1) != NodeKind::Continuous {
            return Err(Error::arg("target must be continuous"));
        }
        Ok(Scm {
            dag,
            partition,
            kind,
            equations,
        })
    }

    pub fn dag(&self) -> &VariableDag {
        &self.dag
    }

    pub fn partition(&self) -> &ClusterPartition {
        &self.partition
    }

    pub fn kind(&self) -> ScmKind {
        self.kind
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn target(&self) -> usize {
        self.dag.node_count() - 1
    }

    pub fn feature_count(&self) -> usize {
        self.dag.node_count() - 1
    }

    /// The graph without the target node.
    pub fn feature_dag(&self) -> VariableDag {
        let t = self.target();
        let edges: Vec<(usize, usize)> = self.dag.edges().into_iter().filter(|&(_, v)| v != t).collect();
        VariableDag::new(self.dag.kinds()[..t].to_vec(), &edges).expect("subgraph of a DAG")
    }

    /// The partition without the target cluster.
    pub fn feature_partition(&self) -> ClusterPartition {
        let t = self.partition.target().expect("validated");
        let keep: Vec<usize> = (0..self.partition.len()).filter(|&c| c != t).collect();
        ClusterPartition::new(
            self.feature_count(),
            keep.iter().map(|&c| self.partition.cluster(c)).collect(),
            keep.iter().map(|&c| self.partition.role(c)).collect(),
        )
        .expect("dropping the target cluster keeps the partition valid")
    }

    pub fn sensitive_vars(&self) -> NodeSet {
        self.partition.cluster(self.partition.sensitive().expect("validated"))
    }

    pub fn admissible_vars(&self) -> NodeSet {
        self.partition
            .admissible()
            .map_or(NodeSet::EMPTY, |c| self.partition.cluster(c))
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Noise {
        let d = self.dag.node_count();
        let mut m = Array2::zeros((n, d));
        for mut row in m.rows_mut() {
            for v in 0..d {
                row[v] = match self.dag.kind(v) {
                    NodeKind::Continuous => rng.sample(StandardNormal),
                    NodeKind::Binary => rng.gen::<f64>(),
                };
            }
        }
        Noise(m)
    }

    /// Ancestral evaluation of every node, with intervened nodes fixed.
    pub fn propagate(&self, noise: &Noise, intervention: Option<&Intervention>) -> Result<Array2<f64>> {
        let d = self.dag.node_count();
        if noise.0.ncols() != d {
            return Err(Error::arg("noise width does not match the model"));
        }
        if let Some(iv) = intervention {
            self.check_intervention(iv)?;
        }
        let mut out = Array2::zeros(noise.0.raw_dim());
        for (mut row, u) in out.rows_mut().into_iter().zip(noise.0.rows()) {
            for &v in self.dag.topological_order() {
                if let Some(&val) = intervention.and_then(|iv| iv.assignments.get(&v)) {
                    row[v] = val;
                    continue;
                }
                let t = self.equations[v].signal(row.view());
                row[v] = match self.dag.kind(v) {
                    NodeKind::Continuous => t + u[v],
                    NodeKind::Binary => f64::from(u8::from(u[v] < sigmoid(t))),
                };
            }
        }
        Ok(out)
    }

    fn check_intervention(&self, iv: &Intervention) -> Result<()> {
        let vars = iv.variables();
        if vars.contains(self.target()) {
            return Err(Error::arg("cannot intervene on the target"));
        }
        for c in self.partition.clusters_touching(vars) {
            if !self.partition.cluster(c).is_subset(vars) {
                return Err(Error::arg(format!("intervention covers cluster {c} only partially")));
            }
        }
        for (&v, &x) in &iv.assignments {
            if self.dag.kind(v) == NodeKind::Binary && x != 0.0 && x != 1.0 {
                return Err(Error::arg(format!("binary node {v} assigned {x}")));
            }
        }
        Ok(())
    }

    fn dataset_from(&self, values: Array2<f64>) -> Dataset {
        let t = self.target();
        Dataset {
            x: values.slice(s![.., ..t]).to_owned(),
            y: values.column(t).to_owned(),
            partition: self.feature_partition(),
            kinds: self.dag.kinds()[..t].to_vec(),
            split: Split::All,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ScmDocument {
            kinds: self.dag.kinds().to_vec(),
            edges: self.dag.edges(),
            clusters: self.partition.clusters().iter().map(|c| c.to_vec()).collect(),
            roles: self.partition.roles().to_vec(),
            kind: self.kind,
            equations: self.equations.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Scm> {
        let doc: ScmDocument = serde_json::from_str(s)?;
        let dag = VariableDag::new(doc.kinds, &doc.edges)?;
        let clusters = doc.clusters.iter().map(|c| NodeSet::from_ids(c.iter().copied())).collect();
        let partition = ClusterPartition::new(dag.node_count(), clusters, doc.roles)?;
        Scm::from_parts(dag, partition, doc.kind, doc.equations)
    }
}

#[derive(Serialize, Deserialize)]
struct ScmDocument {
    kinds: Vec<NodeKind>,
    edges: Vec<(usize, usize)>,
    clusters: Vec<Vec<usize>>,
    roles: Vec<Role>,
    kind: ScmKind,
    equations: Vec<Equation>,
}

pub fn sample_observational<R: Rng + ?Sized>(scm: &Scm, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::arg("sample size must be positive"));
    }
    let noise = scm.draw_noise(n, rng);
    Ok(scm.dataset_from(scm.propagate(&noise, None)?))
}

pub fn sample_interventional<R: Rng + ?Sized>(
    scm: &Scm,
    intervention: &Intervention,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::arg("sample size must be positive"));
    }
    let noise = scm.draw_noise(n, rng);
    Ok(scm.dataset_from(scm.propagate(&noise, Some(intervention))?))
}

/// Interventional sample driven by a given noise draw.
pub fn sample_with_noise(scm: &Scm, noise: &Noise, intervention: Option<&Intervention>) -> Result<Dataset> {
    Ok(scm.dataset_from(scm.propagate(noise, intervention)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    All,
    Train,
    Validation,
    Test,
}

/// Feature matrix, target column and the feature partition with roles.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub partition: ClusterPartition,
    pub kinds: Vec<NodeKind>,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn rows(&self, idx: &[usize], split: Split) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), idx),
            y: self.y.select(Axis(0), idx),
            partition: self.partition.clone(),
            kinds: self.kinds.clone(),
            split,
        }
    }

    /// Shuffled split by the given fractions of train and validation; the
    /// rest is test.
    pub fn split<R: Rng + ?Sized>(&self, train: f64, validation: f64, rng: &mut R) -> Result<(Dataset, Dataset, Dataset)> {
        if !(train > 0.0 && validation >= 0.0 && train + validation < 1.0) {
            return Err(Error::arg("split fractions must be positive and sum below one"));
        }
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let n_tr = (train * n as f64).round() as usize;
        let n_va = (validation * n as f64).round() as usize;
        if n_tr == 0 || n_tr + n_va >= n {
            return Err(Error::arg("split leaves an empty part"));
        }
        Ok((
            self.rows(&idx[..n_tr], Split::Train),
            self.rows(&idx[n_tr..n_tr + n_va], Split::Validation),
            self.rows(&idx[n_tr + n_va..], Split::Test),
        ))
    }

    /// Columns of `vars` as a matrix.
    pub fn columns(&self, vars: NodeSet) -> Array2<f64> {
        self.x.select(Axis(1), &vars.to_vec())
    }

    /// Joint binary code of `vars` per row, lowest variable as bit zero.
    pub fn codes(&self, vars: NodeSet) -> Vec<u32> {
        let vs = vars.to_vec();
        self.x
            .rows()
            .into_iter()
            .map(|r| vs.iter().enumerate().map(|(i, &v)| u32::from(r[v] > 0.5) << i).sum())
            .collect()
    }

    /// Writes `x0,...,x{d-1},y` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.x.ncols()).map(|v| format!("x{v}")).chain(["y".to_string()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (row, y) in self.x.rows().into_iter().zip(self.y.iter()) {
            let cells: Vec<String> = row.iter().chain([y]).map(|v| format!("{v}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Reads the format of [`Dataset::write_csv`].
    pub fn read_csv<Rd: Read>(r: Rd, partition: ClusterPartition, kinds: Vec<NodeKind>, split: Split) -> Result<Dataset> {
        let mut lines = BufReader::new(r).lines();
        let header = lines.next().ok_or_else(|| Error::arg("empty csv"))??;
        let width = header.split(',').count();
        if width != partition.var_count() + 1 {
            return Err(Error::arg("csv width does not match the partition"));
        }
        let mut flat = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let row = row.map_err(|e| Error::arg(format!("bad csv cell: {e}")))?;
            if row.len() != width {
                return Err(Error::arg("ragged csv row"));
            }
            flat.extend(row);
        }
        let all = Array2::from_shape_vec((flat.len() / width, width), flat).map_err(|e| Error::arg(e.to_string()))?;
        Ok(Dataset {
            x: all.slice(s![.., ..width - 1]).to_owned(),
            y: all.column(width - 1).to_owned(),
            partition,
            kinds,
            split,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> Scm {
        let dag = VariableDag::new(vec![NodeKind::Continuous; 3], &[(0, 1), (1, 2)]).unwrap();
        let part = ClusterPartition::new(
            3,
            vec![NodeSet::singleton(0), NodeSet::singleton(1), NodeSet::singleton(2)],
            vec![Role::Sensitive, Role::Plain, Role::Target],
        )
        .unwrap();
        let eqs = vec![
            Equation { parents: vec![], weights: vec![], xi: None },
            Equation { parents: vec![0], weights: vec![1.0], xi: None },
            Equation { parents: vec![1], weights: vec![1.0], xi: None },
        ];
        Scm::from_parts(dag, part, ScmKind::Linear, eqs).unwrap()
    }

    #[test]
    fn zero_degree_gives_no_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_er_dag(10, 0.0, &mut rng).unwrap().edge_count(), 0);
        assert!(sample_er_dag(5, 5.0, &mut rng).is_err());
    }

    #[test]
    fn er_mean_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let total: usize = (0..1000).map(|_| sample_er_dag(30, 2.0, &mut rng).unwrap().edge_count()).sum();
        let mean = total as f64 / 1000.0;
        // 435 pairs at p = 2/29: sd of the mean is about 0.17
        assert!((mean - 30.0).abs() < 1.0, "{mean}");
    }

    #[test]
    fn chain_correlation() {
        let scm = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = sample_observational(&scm, 100_000, &mut rng).unwrap();
        let (x, y) = (d.x.column(0), d.x.column(1));
        let (mx, my) = (x.mean().unwrap(), y.mean().unwrap());
        let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
        let vx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let vy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>();
        let r = cov / (vx * vy).sqrt();
        assert!((r - 1.0 / 2f64.sqrt()).abs() < 0.01, "{r}");
    }

    #[test]
    fn intervention_fixes_columns_and_rejects_partial_clusters() {
        let scm = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let iv = Intervention { assignments: [(0, 2.5)].into_iter().collect() };
        let d = sample_interventional(&scm, &iv, 100, &mut rng).unwrap();
        assert!(d.x.column(0).iter().all(|&v| v == 2.5));
        let bad = Intervention { assignments: [(2, 0.0)].into_iter().collect() };
        assert!(sample_interventional(&scm, &bad, 10, &mut rng).is_err());
    }

    #[test]
    fn built_weights_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let dag = sample_er_dag(15, 2.0, &mut rng).unwrap();
            let part = random_partition(15, 3, &mut rng).unwrap().with_role(0, Role::Sensitive).unwrap();
            let scm = build_scm(&dag, &part, ScmKind::Nonlinear, &mut rng).unwrap();
            let a = scm.sensitive_vars();
            let t = scm.target();
            for (v, eq) in scm.equations().iter().enumerate() {
                assert_eq!(eq.xi.is_some(), !eq.parents.is_empty());
                for (&u, &w) in eq.parents.iter().zip(&eq.weights) {
                    let (lo, hi) = if v == t && a.contains(u) { (2.5, 10.0) } else { (0.5, 2.0) };
                    assert!(w.abs() >= lo && w.abs() < hi, "{w}");
                }
            }
            let ycl = scm.feature_partition().clusters_touching(scm.dag().parents(t));
            assert_eq!(ycl, NodeSet::full(5));
        }
    }

    #[test]
    fn binary_columns_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dag = sample_er_dag(9, 2.0, &mut rng).unwrap();
        let part = random_partition(9, 3, &mut rng).unwrap();
        let kinds = random_cluster_kinds(&part, &mut rng);
        let dag = dag.with_kinds(kinds).unwrap();
        let part = part.with_role(1, Role::Sensitive).unwrap();
        let scm = build_scm(&dag, &part, ScmKind::Linear, &mut rng).unwrap();
        let a = sample_observational(&scm, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_observational(&scm, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        for v in 0..9 {
            if dag.kind(v) == NodeKind::Binary {
                assert!(a.x.column(v).iter().all(|&x| x == 0.0 || x == 1.0));
            }
        }
        let back = Scm::from_json(&scm.to_json().unwrap()).unwrap();
        assert_eq!(back.equations(), scm.equations());
    }

    #[test]
    fn csv_roundtrip() {
        let scm = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = sample_observational(&scm, 20, &mut rng).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(&buf[..], d.partition.clone(), d.kinds.clone(), Split::All).unwrap();
        assert_eq!(back.x, d.x);
        assert_eq!(back.y, d.y);
    }
}
