//! Synthetic experiment orchestration: instance generation, the graph and
//! adjustment pipeline, method training, evaluation, and CSV/JSON output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adjustment::{enumerate_adjustment_sets_with, AdjustmentOptions, AdjustmentResult};
use crate::equivalence::{build_cluster_cpdag, enumerate_cluster_mec_capped};
use crate::error::{Error, Result};
use crate::fairness::{GroupIndex, PenaltyConfig};
use crate::graphs::{build_cluster_dag, is_admissible, NodeKind, Role};
use crate::learn::{
    fit_propensity, input_variables, lambda_grid, train, FairnessData, Method, Mlp, PropensityConfig, Standardizer,
    TrainConfig, TrainSet,
};
use crate::metrics::{rmse, unfairness, EvalReport, PairMmd, Predictor};
use crate::scm::{
    binary_child_clusters, build_scm, choose_sensitive, random_cluster_kinds, random_partition, sample_er_dag,
    sample_observational, Dataset, Scm, ScmKind,
};
use crate::set::NodeSet;

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(base, index)`: `splitmix64(base ^ splitmix64(index))`.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

const STAGE_GRAPH: u64 = 1;
const STAGE_SAMPLE: u64 = 2;
const STAGE_SPLIT: u64 = 3;
const STAGE_PROPENSITY: u64 = 4;
const STAGE_TRAIN: u64 = 5;
const STAGE_EVAL: u64 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub d: usize,
    pub vars_per_cluster: usize,
    pub kind: ScmKind,
    pub expected_degree: f64,
    pub n: usize,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Lambda grid searched on validation data by c-ifair.
    pub lambdas: Vec<f64>,
    /// Lambda values of the trade-off sweep.
    pub sweep: Vec<f64>,
    pub admissible: bool,
    pub out_dir: Option<PathBuf>,
    pub n_eval: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    pub penalty: PenaltyConfig,
    pub propensity: PropensityConfig,
    pub mec_cap: usize,
    pub max_attempts: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 5,
            vars_per_cluster: 3,
            kind: ScmKind::Linear,
            expected_degree: 2.0,
            n: 5000,
            split: [0.8, 0.1, 0.1],
            seeds: (0..20).collect(),
            methods: Method::ALL.to_vec(),
            lambdas: lambda_grid(),
            sweep: vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
            admissible: false,
            out_dir: None,
            n_eval: 1000,
            epochs: 1000,
            batch_size: 256,
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            hidden: 32,
            penalty: PenaltyConfig::default(),
            propensity: PropensityConfig::default(),
            mec_cap: crate::equivalence::DEFAULT_MEC_CAP,
            max_attempts: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.vars_per_cluster == 0 {
            return Err(Error::arg("need at least two clusters of at least one variable"));
        }
        let total: f64 = self.split.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.split.iter().any(|&f| f < 0.0) || self.split[0] <= 0.0 || self.split[2] <= 0.0 {
            return Err(Error::arg("split fractions must be nonnegative and sum to one"));
        }
        if self.seeds.is_empty() {
            return Err(Error::arg("seed list is empty"));
        }
        if self.n_eval < 2 || self.n < 10 {
            return Err(Error::arg("sample sizes too small"));
        }
        self.penalty.validate()?;
        self.train_config(Method::Full, 0, self.lambdas.clone()).validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_json(&fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let js = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(js.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn train_config(&self, method: Method, seed: u64, lambdas: Vec<f64>) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            hidden: self.hidden,
            lambdas,
            seed,
            method,
            task: crate::learn::Task::Regression,
        }
    }
}

/// One generated data set with its true model.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub scm: Scm,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub attempts: usize,
}

/// Draws graphs until the partition is admissible and a binary sensitive
/// cluster of degree at least two exists (plus a binary child cluster for
/// the admissible role when requested), then builds and samples the SCM.
pub fn generate_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STAGE_GRAPH));
    let d_v = cfg.d * cfg.vars_per_cluster;
    for attempt in 1..=cfg.max_attempts {
        let dag = sample_er_dag(d_v, cfg.expected_degree, &mut rng)?;
        let part = random_partition(d_v, cfg.vars_per_cluster, &mut rng)?;
        let kinds = random_cluster_kinds(&part, &mut rng);
        let dag = dag.with_kinds(kinds)?;
        if !is_admissible(&dag, &part)? {
            continue;
        }
        let Some(a) = choose_sensitive(&dag, &part) else {
            continue;
        };
        let mut part = part.with_role(a, Role::Sensitive)?;
        if cfg.admissible {
            let children = binary_child_clusters(&dag, &part, a);
            let Some(&x) = children.choose(&mut rng) else {
                continue;
            };
            part = part.with_role(x, Role::Admissible)?;
        }
        let scm = build_scm(&dag, &part, cfg.kind, &mut rng)?;
        let data = sample_observational(&scm, cfg.n, &mut ChaCha8Rng::seed_from_u64(mix_seed(seed, STAGE_SAMPLE)))?;
        let (train, validation, test) = data.split(
            cfg.split[0],
            cfg.split[1],
            &mut ChaCha8Rng::seed_from_u64(mix_seed(seed, STAGE_SPLIT)),
        )?;
        return Ok(Instance {
            seed,
            scm,
            train,
            validation,
            test,
            attempts: attempt,
        });
    }
    Err(Error::arg(format!("no usable graph after {} attempts", cfg.max_attempts)))
}

/// A prediction network together with the column mask and scalers it
/// was trained with. Predictions are in standardized target units.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: Method,
    pub lambda: f64,
    pub columns: Vec<usize>,
    pub x_scaler: Standardizer,
    pub y_scaler: Standardizer,
    pub mlp: Mlp,
}

impl Predictor for FittedModel {
    fn predict(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        let x = self.x_scaler.transform(features)?.select(Axis(1), &self.columns);
        Ok(self.mlp.predict(x.view())?.column(0).to_owned())
    }
}

/// Everything the methods share for one seed.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub instance: Instance,
    pub adjustment: AdjustmentResult,
    /// Definite descendant clusters of the sensitive cluster in the
    /// unrefined cluster CPDAG.
    pub definite_descendants: NodeSet,
    pub x_scaler: Standardizer,
    pub y_scaler: Standardizer,
    pub train_fairness: FairnessData,
    pub validation_fairness: FairnessData,
}

fn groups(data: &Dataset, a_vars: NodeSet, x_vars: NodeSet) -> Result<GroupIndex> {
    GroupIndex::new(&data.codes(a_vars), a_vars.len(), &data.codes(x_vars), x_vars.len())
}

/// Graph pipeline, adjustment enumeration and propensity fitting.
pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let instance = generate_instance(cfg, seed).map_err(|e| e.at("generate"))?;
    let scm = &instance.scm;
    let dag = scm.feature_dag();
    let part = scm.feature_partition();
    let opts = AdjustmentOptions {
        mec_cap: cfg.mec_cap,
        ..Default::default()
    };
    let adjustment = enumerate_adjustment_sets_with(&dag, &part, opts).map_err(|e| e.at("adjust"))?;
    let definite_descendants = {
        let cdag = build_cluster_dag(&dag, &part).map_err(|e| e.at("graph"))?;
        let mec = enumerate_cluster_mec_capped(&cdag, cfg.mec_cap).map_err(|e| e.at("graph"))?;
        let cp = build_cluster_cpdag(&mec).map_err(|e| e.at("graph"))?;
        cp.definite_descendants(part.sensitive().expect("assigned"))?
    };
    let continuous: Vec<bool> = instance.train.kinds.iter().map(|&k| k == NodeKind::Continuous).collect();
    let x_scaler = Standardizer::fit(instance.train.x.view(), &continuous)?;
    let y_scaler = Standardizer::fit_vector(instance.train.y.view())?;
    let a_vars = scm.sensitive_vars();
    let x_vars = scm.admissible_vars();
    let g_train = groups(&instance.train, a_vars, x_vars)?;
    let g_val = groups(&instance.validation, a_vars, x_vars)?;
    let empty = g_train.empty_groups();
    if !empty.is_empty() {
        log::warn!("seed {seed}: groups {empty:?} have no training rows");
    }
    let mut prng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STAGE_PROPENSITY));
    let mut own_train = Vec::new();
    let mut own_val = Vec::new();
    for z in adjustment.completed_variable_sets() {
        let cont: Vec<bool> = z.iter().map(|v| continuous[v]).collect();
        let model = fit_propensity(
            instance.train.columns(z).view(),
            &cont,
            g_train.classes(),
            g_train.n_classes(),
            &cfg.propensity,
            &mut prng,
        )
        .map_err(|e| e.at("propensity"))?;
        own_train.push(model.own_class(instance.train.columns(z).view(), g_train.classes())?);
        own_val.push(model.own_class(instance.validation.columns(z).view(), g_val.classes())?);
    }
    let fairness = |g: &GroupIndex, own: Vec<Vec<f64>>| FairnessData {
        classes: g.classes().to_vec(),
        n_a: g.n_a(),
        n_x: g.n_x(),
        own_propensity: own,
    };
    Ok(Prepared {
        train_fairness: fairness(&g_train, own_train),
        validation_fairness: fairness(&g_val, own_val),
        instance,
        adjustment,
        definite_descendants,
        x_scaler,
        y_scaler,
    })
}

/// One (seed, method, lambda) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub seed: u64,
    pub method: Method,
    pub lambda: f64,
    pub rmse: f64,
    /// Squared MMD averaged over pairs of sensitive values.
    pub unfairness: f64,
    pub m: usize,
    pub refinement_rounds: usize,
    pub n_inputs: usize,
    pub pairs: Vec<PairMmd>,
    pub config_hash: String,
}

#[derive(Clone, Debug)]
pub struct CellOutput {
    pub report: CellReport,
    pub model: FittedModel,
    pub log: Vec<crate::learn::EpochLog>,
}

impl Prepared {
    fn train_set(&self, data: &Dataset, columns: &[usize], fairness: &FairnessData, with_fairness: bool) -> Result<TrainSet> {
        Ok(TrainSet {
            x: self.x_scaler.transform(data.x.view())?.select(Axis(1), columns),
            y: self.y_scaler.transform_vector(data.y.view()),
            fairness: with_fairness.then(|| fairness.clone()),
        })
    }

    /// Trains and evaluates one method. `lambdas` is the c-ifair search grid
    /// (a single value fixes it).
    pub fn run_method(&self, cfg: &ExperimentConfig, method: Method, lambdas: &[f64]) -> Result<CellOutput> {
        let seed = self.instance.seed;
        let scm = &self.instance.scm;
        let dag = scm.feature_dag();
        let part = scm.feature_partition();
        let columns = input_variables(method, &dag, &part, self.definite_descendants)?.to_vec();
        let fair = method == Method::CIfair;
        let tr = self.train_set(&self.instance.train, &columns, &self.train_fairness, fair)?;
        let va = self.train_set(&self.instance.validation, &columns, &self.validation_fairness, fair)?;
        let tcfg = cfg.train_config(method, mix_seed(seed, STAGE_TRAIN), lambdas.to_vec());
        let outcome = train(&tr, Some(&va), &tcfg, &cfg.penalty).map_err(|e| e.at("train"))?;
        let model = FittedModel {
            method,
            lambda: outcome.lambda,
            columns: columns.clone(),
            x_scaler: self.x_scaler.clone(),
            y_scaler: self.y_scaler.clone(),
            mlp: outcome.model,
        };
        let report = evaluate(&model, &self.instance, cfg.n_eval)?;
        Ok(CellOutput {
            report: CellReport {
                seed,
                method,
                lambda: model.lambda,
                rmse: report.rmse,
                unfairness: report.unfairness,
                m: self.adjustment.family.m(),
                refinement_rounds: self.adjustment.family.refinement_rounds,
                n_inputs: columns.len(),
                pairs: report.pairs,
                config_hash: cfg.hash(),
            },
            model,
            log: outcome.log,
        })
    }
}

/// Test RMSE in standardized target units and interventional unfairness
/// against the instance's true SCM.
pub fn evaluate(model: &FittedModel, instance: &Instance, n_eval: usize) -> Result<EvalReport> {
    let test = &instance.test;
    let pred = model.predict(test.x.view())?;
    let y = model.y_scaler.transform_vector(test.y.view());
    let err = rmse(&pred.to_vec(), &y.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(instance.seed, STAGE_EVAL));
    let unf = unfairness(model, &instance.scm, n_eval, &mut rng).map_err(|e| e.at("eval"))?;
    Ok(EvalReport {
        rmse: err,
        unfairness: unf.value,
        pairs: unf.pairs,
        n_test: test.len(),
        n_eval,
        seed: instance.seed,
    })
}

pub fn run_cell(cfg: &ExperimentConfig, seed: u64, method: Method) -> Result<CellReport> {
    let p = prepare(cfg, seed)?;
    Ok(p.run_method(cfg, method, &cfg.lambdas)?.report)
}

/// Mean and sample standard deviation (zero for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Spearman rank correlation with average ranks for ties; `None` when a
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub d: usize,
    pub kind: ScmKind,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub unf_mean: f64,
    pub unf_std: f64,
    pub seeds: Vec<u64>,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub rows: Vec<TableRow>,
    pub cells: Vec<CellReport>,
}

fn kind_name(k: ScmKind) -> &'static str {
    match k {
        ScmKind::Linear => "linear",
        ScmKind::Nonlinear => "nonlinear",
    }
}

fn seed_list(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,d,kind,rmse_mean,rmse_std,unf_mean,unf_std,seeds,config_hash\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.method,
                r.d,
                kind_name(r.kind),
                r.rmse_mean,
                r.rmse_std,
                r.unf_mean,
                r.unf_std,
                seed_list(&r.seeds),
                r.config_hash
            );
        }
        s
    }
}

/// Per-seed cell rows as CSV.
pub fn cells_csv(cells: &[CellReport]) -> String {
    let mut s = String::from("seed,method,lambda,rmse,unfairness,m,refinement_rounds,n_inputs,config_hash\n");
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.seed, c.method, c.lambda, c.rmse, c.unfairness, c.m, c.refinement_rounds, c.n_inputs, c.config_hash
        );
    }
    s
}

fn aggregate(cfg: &ExperimentConfig, cells: &[CellReport], methods: &[Method]) -> Vec<TableRow> {
    methods
        .iter()
        .map(|&m| {
            let mine: Vec<&CellReport> = cells.iter().filter(|c| c.method == m).collect();
            let (rmse_mean, rmse_std) = mean_std(&mine.iter().map(|c| c.rmse).collect::<Vec<_>>());
            let (unf_mean, unf_std) = mean_std(&mine.iter().map(|c| c.unfairness).collect::<Vec<_>>());
            TableRow {
                method: m,
                d: cfg.d,
                kind: cfg.kind,
                rmse_mean,
                rmse_std,
                unf_mean,
                unf_std,
                seeds: mine.iter().map(|c| c.seed).collect(),
                config_hash: cfg.hash(),
            }
        })
        .collect()
}

/// Runs every method on every seed. Seeds are processed in sorted order.
pub fn run_table(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    if cfg.methods.is_empty() {
        return Ok(Table::default());
    }
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut cells = Vec::new();
    for &seed in &seeds {
        let p = prepare(cfg, seed)?;
        if let Some(dir) = &cfg.out_dir {
            write_graph_artifacts(dir, &p)?;
        }
        for &m in &cfg.methods {
            let out = p.run_method(cfg, m, &cfg.lambdas)?;
            log::info!("seed {seed} {m}: rmse {:.4} unfairness {:.4}", out.report.rmse, out.report.unfairness);
            if let Some(dir) = &cfg.out_dir {
                write_checkpoint(dir, &out.model, seed)?;
            }
            cells.push(out.report);
        }
    }
    let table = Table {
        rows: aggregate(cfg, &cells, &cfg.methods),
        cells,
    };
    if let Some(dir) = &cfg.out_dir {
        write_file(&dir.join("results").join(format!("table_{}.csv", cfg.hash())), &table.to_csv())?;
        write_file(&dir.join("results").join(format!("cells_{}.csv", cfg.hash())), &cells_csv(&table.cells))?;
        write_manifest(dir, cfg, "table")?;
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub unf_mean: f64,
    pub unf_std: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub cells: Vec<CellReport>,
    /// Rank correlation of lambda with mean unfairness.
    pub spearman_unfairness: Option<f64>,
    /// Rank correlation of lambda with mean RMSE.
    pub spearman_rmse: Option<f64>,
    pub config_hash: String,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,rmse_mean,rmse_std,unf_mean,unf_std,spearman_unf,spearman_rmse,config_hash\n");
        let f = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                p.lambda,
                p.rmse_mean,
                p.rmse_std,
                p.unf_mean,
                p.unf_std,
                f(self.spearman_unfairness),
                f(self.spearman_rmse),
                self.config_hash
            );
        }
        s
    }
}

/// c-ifair at each fixed lambda on every seed.
pub fn run_tradeoff(cfg: &ExperimentConfig, lambdas: &[f64]) -> Result<Curve> {
    cfg.validate()?;
    if lambdas.is_empty() {
        return Err(Error::arg("lambda list is empty"));
    }
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let mut by_lambda: BTreeMap<usize, Vec<CellReport>> = BTreeMap::new();
    for &seed in &seeds {
        let p = prepare(cfg, seed)?;
        if let Some(dir) = &cfg.out_dir {
            write_graph_artifacts(dir, &p)?;
        }
        for (k, &l) in lambdas.iter().enumerate() {
            let out = p.run_method(cfg, Method::CIfair, &[l])?;
            log::info!("seed {seed} lambda {l}: rmse {:.4} unfairness {:.4}", out.report.rmse, out.report.unfairness);
            by_lambda.entry(k).or_default().push(out.report);
        }
    }
    let points: Vec<CurvePoint> = lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let cells = &by_lambda[&k];
            let (rmse_mean, rmse_std) = mean_std(&cells.iter().map(|c| c.rmse).collect::<Vec<_>>());
            let (unf_mean, unf_std) = mean_std(&cells.iter().map(|c| c.unfairness).collect::<Vec<_>>());
            CurvePoint {
                lambda,
                rmse_mean,
                rmse_std,
                unf_mean,
                unf_std,
            }
        })
        .collect();
    let ls: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    let curve = Curve {
        spearman_unfairness: spearman(&ls, &points.iter().map(|p| p.unf_mean).collect::<Vec<_>>()),
        spearman_rmse: spearman(&ls, &points.iter().map(|p| p.rmse_mean).collect::<Vec<_>>()),
        points,
        cells: by_lambda.into_values().flatten().collect(),
        config_hash: cfg.hash(),
    };
    if let Some(dir) = &cfg.out_dir {
        write_file(&dir.join("results").join(format!("tradeoff_{}.csv", cfg.hash())), &curve.to_csv())?;
        write_file(&dir.join("results").join(format!("tradeoff_cells_{}.csv", cfg.hash())), &cells_csv(&curve.cells))?;
        write_manifest(dir, cfg, "tradeoff")?;
    }
    Ok(curve)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Writes the true SCM, the cluster CPDAG and the adjustment report of one
/// prepared seed under `graphs/`.
pub fn write_graph_artifacts(dir: &Path, p: &Prepared) -> Result<()> {
    let seed = p.instance.seed;
    let g = dir.join("graphs");
    write_file(&g.join(format!("scm_seed{seed}.json")), &p.instance.scm.to_json()?)?;
    write_file(
        &g.join(format!("cpdag_seed{seed}.json")),
        &p.adjustment.cpdag.to_document(&p.adjustment.partition).to_json()?,
    )?;
    write_file(
        &g.join(format!("adjustment_seed{seed}.json")),
        &serde_json::to_string_pretty(&p.adjustment.report())?,
    )
}

pub fn write_checkpoint(dir: &Path, model: &FittedModel, seed: u64) -> Result<PathBuf> {
    let path = dir
        .join("checkpoints")
        .join(format!("{}_lambda{}_seed{seed}.json", model.method, model.lambda));
    write_file(&path, &serde_json::to_string(model)?)?;
    Ok(path)
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `manifests/<what>_<hash>.json` with the config, seeds, seed
/// mixing rule and code version.
pub fn write_manifest(dir: &Path, cfg: &ExperimentConfig, what: &str) -> Result<PathBuf> {
    let manifest = serde_json::json!({
        "what": what,
        "config": cfg,
        "config_hash": cfg.hash(),
        "seeds": cfg.seeds,
        "seed_mixing": "stage seed = splitmix64(seed ^ splitmix64(stage)); stages graph=1 sample=2 split=3 propensity=4 train=5 eval=6",
        "code": git_describe(),
    });
    let path = dir.join("manifests").join(format!("{what}_{}.json", cfg.hash()));
    write_file(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
