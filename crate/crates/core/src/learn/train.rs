use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Head, Mlp};
use super::optim::AdamW;
use crate::error::{Error, Result};
use crate::fairness::{median_heuristic, penalty, PenaltyBatch, PenaltyConfig, PenaltyValue, RffMap};
use crate::graphs::{ClusterPartition, VariableDag};
use crate::harness::mix_seed;
use crate::set::NodeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "c-ifair")]
    CIfair,
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "unaware")]
    Unaware,
    #[serde(rename = "no-descs")]
    NoDescs,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Full, Method::Unaware, Method::NoDescs, Method::CIfair, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::CIfair => "c-ifair",
            Method::Full => "full",
            Method::Unaware => "unaware",
            Method::NoDescs => "no-descs",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown method {s}")))
    }
}

/// Feature variables a method may read.
///
/// `definite_descendants` are clusters reachable from the sensitive cluster
/// along directed edges of the cluster CPDAG.
pub fn input_variables(
    method: Method,
    dag: &VariableDag,
    partition: &ClusterPartition,
    definite_descendants: NodeSet,
) -> Result<NodeSet> {
    let all = NodeSet::full(partition.var_count());
    let a = partition
        .sensitive()
        .ok_or_else(|| Error::arg("no sensitive cluster designated"))?;
    let a_vars = partition.cluster(a);
    Ok(match method {
        Method::Full | Method::CIfair => all,
        Method::Unaware => all.minus(a_vars),
        Method::NoDescs => all.minus(a_vars).minus(partition.union_of(definite_descendants)),
        Method::Oracle => {
            let desc = a_vars.iter().fold(NodeSet::EMPTY, |acc, v| acc.union(dag.descendants(v)));
            all.minus(a_vars).minus(desc)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

/// Default c-ifair search grid: 0, 0.5, 1, then 2 to 20 in steps of 2.
pub fn lambda_grid() -> Vec<f64> {
    let mut grid = vec![0.0, 0.5, 1.0];
    grid.extend((1..=10).map(|k| 2.0 * f64::from(k)));
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    /// One value fixes lambda; several are searched on validation data.
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub method: Method,
    pub task: Task,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            epochs: 1000,
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            hidden: 32,
            lambdas: lambda_grid(),
            seed: 0,
            method: Method::Full,
            task: Task::Regression,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.hidden == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::arg("batch size, epochs, hidden width and learning rate must be positive"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::arg("lambda list must be nonempty and nonnegative"));
        }
        Ok(())
    }
}

/// Group classes and per-candidate own-class propensities of every row.
#[derive(Clone, Debug)]
pub struct FairnessData {
    pub classes: Vec<usize>,
    pub n_a: usize,
    pub n_x: usize,
    pub own_propensity: Vec<Vec<f64>>,
}

impl FairnessData {
    fn batch(&self, idx: &[usize]) -> (Vec<usize>, Vec<Vec<f64>>) {
        let classes = idx.iter().map(|&i| self.classes[i]).collect();
        let props = self
            .own_propensity
            .iter()
            .map(|p| idx.iter().map(|&i| p[i]).collect())
            .collect();
        (classes, props)
    }
}

/// Model inputs (already masked and standardized) and targets.
#[derive(Clone, Debug)]
pub struct TrainSet {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub fairness: Option<FairnessData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub penalty: f64,
    pub per_candidate: Vec<f64>,
}

/// Training log as CSV: epoch, loss, penalty, then one column per candidate.
pub fn epoch_log_csv(log: &[EpochLog]) -> String {
    let m = log.iter().map(|e| e.per_candidate.len()).max().unwrap_or(0);
    let mut out = String::from("epoch,loss,penalty");
    for k in 0..m {
        out.push_str(&format!(",candidate_{k}"));
    }
    out.push('\n');
    for e in log {
        out.push_str(&format!("{},{},{}", e.epoch, e.loss, e.penalty));
        for k in 0..m {
            match e.per_candidate.get(k) {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub val_rmse: f64,
    pub val_penalty: f64,
    pub score: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Mlp,
    pub lambda: f64,
    pub log: Vec<EpochLog>,
    pub selection: Vec<LambdaScore>,
}

/// Value and parameter gradient of `loss + lambda * penalty` on a batch.
#[derive(Clone, Debug)]
pub struct Objective {
    pub loss: f64,
    pub penalty: Option<PenaltyValue>,
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Evaluates the training objective on one batch. The kernel bandwidth is
/// `gamma` when given, otherwise the median heuristic on the predictions;
/// either way it is held constant for the gradient.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    model: &Mlp,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    task: Task,
    fair: Option<&PenaltyBatch>,
    map: &mut RffMap,
    pcfg: &PenaltyConfig,
    lambda: f64,
    gamma: Option<f64>,
) -> Result<Objective> {
    let n = x.nrows();
    if y.len() != n || n == 0 {
        return Err(Error::arg("batch inputs and targets differ in length"));
    }
    let (out, cache) = model.forward(x)?;
    let p = out.column(0);
    let (loss, mut grad_logits) = match task {
        Task::Regression => {
            let r = &p - &y;
            let loss = r.mapv(|v| v * v).mean().expect("nonempty");
            (loss, r.mapv(|v| 2.0 * v / n as f64))
        }
        Task::Classification => {
            let eps = 1e-12;
            let loss = p
                .iter()
                .zip(y)
                .map(|(&q, &t)| -(t * (q + eps).ln() + (1.0 - t) * (1.0 - q + eps).ln()))
                .sum::<f64>()
                / n as f64;
            (loss, (&p - &y) / n as f64)
        }
    };
    let mut value = loss;
    let mut pen = None;
    if lambda > 0.0 && n >= 2 {
        if let Some(batch) = fair {
            let g = match gamma {
                Some(g) => g,
                None => median_heuristic(out.view())?,
            };
            map.set_gamma(g)?;
            let pv = penalty(out.view(), batch, map, pcfg)?;
            value += lambda * pv.value;
            let gp = pv.grad.column(0);
            match task {
                Task::Regression => grad_logits.scaled_add(lambda, &gp),
                Task::Classification => {
                    let chain = &gp * &p.mapv(|q| q * (1.0 - q));
                    grad_logits.scaled_add(lambda, &chain)
                }
            }
            pen = Some(pv);
        }
    }
    let grad = model.backward_logits(&cache, grad_logits.insert_axis(Axis(1)).view())?;
    Ok(Objective {
        loss,
        penalty: pen,
        value,
        grad,
    })
}

fn new_map(cfg: &TrainConfig, pcfg: &PenaltyConfig) -> Result<RffMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0xFEA7));
    RffMap::new(1, pcfg.d_rff, &pcfg.bandwidths, 1.0, &mut rng)
}

/// Trains with one fixed lambda.
pub fn train_fixed(data: &TrainSet, cfg: &TrainConfig, pcfg: &PenaltyConfig, lambda: f64) -> Result<(Mlp, Vec<EpochLog>)> {
    cfg.validate()?;
    pcfg.validate()?;
    let n = data.y.len();
    if data.x.nrows() != n || n == 0 {
        return Err(Error::arg("training inputs and targets differ in length"));
    }
    let fair = if lambda > 0.0 {
        let f = data
            .fairness
            .as_ref()
            .ok_or_else(|| Error::Identification("penalized training without adjustment data".into()))?;
        if f.own_propensity.is_empty() {
            return Err(Error::Identification("no completed adjustment candidate".into()));
        }
        Some(f)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let head = match cfg.task {
        Task::Regression => Head::Identity,
        Task::Classification => Head::Sigmoid,
    };
    let mut model = Mlp::new(data.x.ncols(), cfg.hidden, 1, head, &mut rng);
    let mut opt = AdamW::new(model.param_count(), cfg.weight_decay);
    let mut map = new_map(cfg, pcfg)?;
    let gamma = target_bandwidth(data.y.view())?;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        idx.shuffle(&mut rng);
        let (mut loss_sum, mut pen_sum, mut batches) = (0.0, 0.0, 0usize);
        let mut per_cand = vec![0.0; fair.map_or(0, |f| f.own_propensity.len())];
        for chunk in idx.chunks(cfg.batch_size) {
            let xb = data.x.select(Axis(0), chunk);
            let yb = data.y.select(Axis(0), chunk);
            let parts = fair.map(|f| f.batch(chunk));
            let pb = match (&parts, fair) {
                (Some((classes, props)), Some(f)) => Some(PenaltyBatch {
                    classes,
                    n_a: f.n_a,
                    n_x: f.n_x,
                    own_propensity: props.clone(),
                }),
                _ => None,
            };
            let obj = objective(&model, xb.view(), yb.view(), cfg.task, pb.as_ref(), &mut map, pcfg, lambda, Some(gamma))?;
            opt.step(model.params_mut(), &obj.grad, cfg.learning_rate)?;
            loss_sum += obj.loss;
            if let Some(pv) = &obj.penalty {
                pen_sum += pv.value;
                for (a, b) in per_cand.iter_mut().zip(&pv.per_candidate) {
                    *a += b;
                }
            }
            batches += 1;
        }
        let b = batches as f64;
        log.push(EpochLog {
            epoch,
            loss: loss_sum / b,
            penalty: pen_sum / b,
            per_candidate: per_cand.into_iter().map(|v| v / b).collect(),
        });
    }
    if model.params().iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("trained parameters".into()));
    }
    Ok((model, log))
}

/// Median heuristic on at most 2000 evenly strided targets.
pub fn target_bandwidth(y: ArrayView1<f64>) -> Result<f64> {
    let stride = y.len().div_ceil(2000).max(1);
    let sub: Vec<f64> = y.iter().step_by(stride).copied().collect();
    median_heuristic(Array2::from_shape_vec((sub.len(), 1), sub).expect("shape").view())
}

/// Penalty of `model` on a whole data set, with the bandwidth taken from
/// its targets as in training.
pub fn evaluate_penalty(model: &Mlp, data: &TrainSet, cfg: &TrainConfig, pcfg: &PenaltyConfig) -> Result<f64> {
    let Some(f) = &data.fairness else {
        return Ok(0.0);
    };
    if f.own_propensity.is_empty() || data.y.len() < 2 {
        return Ok(0.0);
    }
    let out = model.predict(data.x.view())?;
    let mut map = new_map(cfg, pcfg)?;
    map.set_gamma(target_bandwidth(data.y.view())?)?;
    let batch = PenaltyBatch {
        classes: &f.classes,
        n_a: f.n_a,
        n_x: f.n_x,
        own_propensity: f.own_propensity.clone(),
    };
    Ok(penalty(out.view(), &batch, &map, pcfg)?.value)
}

fn rmse_of(model: &Mlp, data: &TrainSet) -> Result<f64> {
    let p = model.predict(data.x.view())?;
    crate::metrics::rmse(&p.column(0).to_vec(), &data.y.to_vec())
}

/// Trains the configured method. Penalized methods with several lambdas
/// pick the one minimising validation RMSE plus validation penalty.
pub fn train(data: &TrainSet, validation: Option<&TrainSet>, cfg: &TrainConfig, pcfg: &PenaltyConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.method != Method::CIfair {
        let (model, log) = train_fixed(data, cfg, pcfg, 0.0)?;
        return Ok(TrainOutcome {
            model,
            lambda: 0.0,
            log,
            selection: Vec::new(),
        });
    }
    match &data.fairness {
        Some(f) if !f.own_propensity.is_empty() => {}
        _ => return Err(Error::Identification("c-ifair needs at least one completed adjustment candidate".into())),
    }
    if cfg.lambdas.len() == 1 {
        let lambda = cfg.lambdas[0];
        let (model, log) = train_fixed(data, cfg, pcfg, lambda)?;
        return Ok(TrainOutcome {
            model,
            lambda,
            log,
            selection: Vec::new(),
        });
    }
    let val = validation.ok_or_else(|| Error::arg("lambda search needs a validation set"))?;
    let mut best: Option<(f64, TrainOutcome)> = None;
    let mut selection = Vec::new();
    for &lambda in &cfg.lambdas {
        let (model, log) = train_fixed(data, cfg, pcfg, lambda)?;
        let val_rmse = rmse_of(&model, val)?;
        let val_penalty = evaluate_penalty(&model, val, cfg, pcfg)?;
        let score = val_rmse + val_penalty;
        log::info!("lambda {lambda}: validation rmse {val_rmse:.4} penalty {val_penalty:.4}");
        selection.push(LambdaScore {
            lambda,
            val_rmse,
            val_penalty,
            score,
        });
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((
                score,
                TrainOutcome {
                    model,
                    lambda,
                    log,
                    selection: Vec::new(),
                },
            ));
        }
    }
    let (_, mut out) = best.expect("nonempty grid");
    out.selection = selection;
    Ok(out)
}
