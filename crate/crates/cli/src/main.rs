use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clusterfair::graphs::{build_cluster_dag, GraphDocument};
use clusterfair::harness::{
    evaluate, generate_instance, prepare, run_table, run_tradeoff, write_checkpoint, write_file, write_graph_artifacts,
    write_manifest, ExperimentConfig, FittedModel,
};
use clusterfair::learn::{epoch_log_csv, Method};

#[derive(Parser)]
#[command(name = "clusterfair", version, about = "Interventional fairness experiments on synthetic cluster DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed; defaults to the first seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON experiment config; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph, SCM and data set.
    Gen(Common),
    /// Write the variable DAG, cluster DAG and cluster CPDAG.
    Graph(Common),
    /// Enumerate candidate adjustment sets.
    Adjust(Common),
    /// Train one method and write its checkpoint and report.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "c-ifair")]
        method: Method,
        /// Fix lambda instead of searching the config grid.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Evaluate a checkpoint against the true SCM of its seed.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Mean and standard deviation over seeds for every method.
    Table(Common),
    /// c-ifair over a list of fixed lambdas.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// Comma separated; defaults to the config sweep.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, u64)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.out_dir = Some(common.out.clone());
    let seed = common.seed.unwrap_or(cfg.seeds[0]);
    Ok((cfg, seed))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_file(path, &serde_json::to_string_pretty(value)?)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(c) => {
            let (cfg, seed) = load(&c)?;
            let inst = generate_instance(&cfg, seed)?;
            let scm_path = c.out.join("graphs").join(format!("scm_seed{seed}.json"));
            write_file(&scm_path, &inst.scm.to_json()?)?;
            println!("{}", scm_path.display());
            for (name, data) in [("train", &inst.train), ("validation", &inst.validation), ("test", &inst.test)] {
                let path = c.out.join("data").join(format!("{name}_seed{seed}.csv"));
                fs::create_dir_all(path.parent().expect("has parent"))?;
                data.write_csv(fs::File::create(&path)?)?;
                println!("{}", path.display());
            }
            write_manifest(&c.out, &cfg, &format!("gen_seed{seed}"))?;
        }
        Command::Graph(c) => {
            let (cfg, seed) = load(&c)?;
            let inst = generate_instance(&cfg, seed)?;
            let dag = inst.scm.feature_dag();
            let part = inst.scm.feature_partition();
            let g = c.out.join("graphs");
            write_json(
                &g.join(format!("dag_seed{seed}.json")),
                &GraphDocument::from_variable_dag(&dag, &part),
            )?;
            let cdag = build_cluster_dag(&dag, &part)?;
            write_json(
                &g.join(format!("cluster_dag_seed{seed}.json")),
                &GraphDocument::from_cluster_dag(&cdag, &part),
            )?;
            let p = prepare(&cfg, seed)?;
            write_graph_artifacts(&c.out, &p)?;
            println!("{}", g.join(format!("cpdag_seed{seed}.json")).display());
        }
        Command::Adjust(c) => {
            let (cfg, seed) = load(&c)?;
            let p = prepare(&cfg, seed)?;
            write_graph_artifacts(&c.out, &p)?;
            println!("{}", serde_json::to_string_pretty(&p.adjustment.report())?);
        }
        Command::Train { common, method, lambda } => {
            let (cfg, seed) = load(&common)?;
            let p = prepare(&cfg, seed)?;
            let grid = lambda.map_or_else(|| cfg.lambdas.clone(), |l| vec![l]);
            let out = p.run_method(&cfg, method, &grid)?;
            let ck = write_checkpoint(&common.out, &out.model, seed)?;
            println!("{}", ck.display());
            write_json(
                &common.out.join("results").join(format!("cell_{method}_seed{seed}.json")),
                &out.report,
            )?;
            let log_path = common.out.join("results").join(format!("log_{method}_seed{seed}.csv"));
            write_file(&log_path, &epoch_log_csv(&out.log))?;
            println!("{}", log_path.display());
            write_manifest(&common.out, &cfg, &format!("train_{method}_seed{seed}"))?;
        }
        Command::Eval { common, checkpoint } => {
            let (cfg, seed) = load(&common)?;
            let text = fs::read_to_string(&checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
            let model: FittedModel = serde_json::from_str(&text)?;
            let inst = generate_instance(&cfg, seed)?;
            if model.x_scaler.mean.len() != inst.scm.feature_count() {
                bail!("checkpoint expects {} features, instance has {}", model.x_scaler.mean.len(), inst.scm.feature_count());
            }
            let report = evaluate(&model, &inst, cfg.n_eval)?;
            write_json(
                &common.out.join("results").join(format!("eval_{}_seed{seed}.json", model.method)),
                &report,
            )?;
            let csv = common.out.join("results").join("eval.csv");
            report.append_csv(&csv)?;
        }
        Command::Table(c) => {
            let (mut cfg, _) = load(&c)?;
            if let Some(s) = c.seed {
                cfg.seeds = vec![s];
            }
            let table = run_table(&cfg)?;
            print!("{}", table.to_csv());
        }
        Command::Tradeoff { common, lambdas } => {
            let (mut cfg, _) = load(&common)?;
            if let Some(s) = common.seed {
                cfg.seeds = vec![s];
            }
            let lambdas = lambdas.unwrap_or_else(|| cfg.sweep.clone());
            let curve = run_tradeoff(&cfg, &lambdas)?;
            print!("{}", curve.to_csv());
        }
    }
    Ok(())
}
