//! Experiment runner CLI.
//!
//! Exit codes: 0 success, 2 configuration error, 1 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdns::config::ExperimentConfig;
use pdns::dataset::{ingest_file, split, SplitMode, SplitSpec};
use pdns::error::Error;
use pdns::eval::{evaluate, EvalConfig, Split};
use pdns::experiment::{run_experiment, run_fn_simulation, run_sweep, SweepAxis};
use pdns::graph::NormalizedGraph;
use pdns::model::{EmbeddingModel, ScoringMode};

#[derive(Parser)]
#[command(name = "pdns", about = "BPR training with RNS/DNS/PDNS negative sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus per-key overrides, mirroring the config keys.
#[derive(Args)]
struct ConfigArgs {
    /// Base config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override individual config keys, e.g. `--set h=64 --set seed=7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Dataset path (shorthand for `--set dataset=...`).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Run output directory.
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::parse_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(ds) = &self.dataset {
            cfg.dataset = ds.clone();
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write curve, summary and checkpoints.
    Train(ConfigArgs),
    /// Score a checkpoint against a dataset split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// temporal | fn-synthetic
        #[arg(long, default_value = "temporal")]
        split: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        k: usize,
        /// Mask validation items when ranking for test.
        #[arg(long, default_value_t = true)]
        mask_val: bool,
        /// Optional per-user `user,recall,ndcg` dump.
        #[arg(long)]
        per_user: Option<PathBuf>,
    },
    /// False-negative disclosure simulation (requires split = fn-synthetic).
    SimulateFn(ConfigArgs),
    /// Grid sweep over one axis.
    Sweep {
        #[command(flatten)]
        base: ConfigArgs,
        /// h | alpha | beta | strategy
        #[arg(long)]
        axis: String,
        /// Comma-separated grid values.
        #[arg(long)]
        values: String,
    },
    /// Apply the configured split and export train/val/test/fn pair files.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        /// temporal | fn-synthetic
        #[arg(long, default_value = "temporal")]
        mode: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "splits")]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> Result<SplitMode, Error> {
    match s {
        "temporal" => Ok(SplitMode::Temporal),
        "fn-synthetic" => Ok(SplitMode::FnSynthetic),
        _ => Err(Error::Config(format!(
            "split must be temporal|fn-synthetic, got {s:?}"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.build()?;
            let result = run_experiment(&cfg, &args.out)?;
            println!(
                "done: {} epochs, best val recall {} (epoch {}), best test recall {}",
                result.curve.len(),
                result.best_val_recall,
                result.best_epoch.map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
                result.best_test_recall
            );
            println!("outputs in {}", result.out_dir.display());
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            split: split_mode,
            seed,
            k,
            mask_val,
            per_user,
        } => {
            let mode = parse_split(&split_mode)?;
            let raw = ingest_file(&dataset)?;
            let spec = match mode {
                SplitMode::Temporal => SplitSpec::temporal(),
                SplitMode::FnSynthetic => SplitSpec::fn_synthetic(),
            };
            let ds = split(&raw, &spec, seed)?;
            let mut model = EmbeddingModel::load(&checkpoint)?;
            if model.mode == ScoringMode::LightGcn {
                model = model.with_graph(NormalizedGraph::from_dataset(&ds));
            }
            let snapshot = model.propagate()?;
            let cfg = EvalConfig {
                k,
                mask_val_for_test: mask_val,
            };
            let (vr, vn) = evaluate(&snapshot, &ds, &cfg, Split::Val)
                .map(|x| (x.0.to_string(), x.1.to_string()))
                .unwrap_or_else(|_| ("-".into(), "-".into()));
            let (tr, tn) = evaluate(&snapshot, &ds, &cfg, Split::Test)?;
            println!("val_recall@{k} = {vr}");
            println!("val_ndcg@{k} = {vn}");
            println!("test_recall@{k} = {tr}");
            println!("test_ndcg@{k} = {tn}");
            if let Some(path) = per_user {
                use std::fmt::Write as _;
                let mut s = String::from("user,recall,ndcg\n");
                for (u, r, n) in pdns::eval::per_user_metrics(&snapshot, &ds, &cfg, Split::Test) {
                    let _ = writeln!(s, "{u},{r},{n}");
                }
                std::fs::write(path, s)?;
            }
        }
        Command::SimulateFn(args) => {
            let cfg = args.build()?;
            let result = run_fn_simulation(&cfg, &args.out)?;
            println!(
                "done: {} epochs, {} disclosure events, best val recall {}",
                result.curve.len(),
                result.disclosures.len(),
                result.best_val_recall
            );
            for (e, f) in &result.disclosures {
                println!("disclosed at epoch {e}: cumulative {f}");
            }
            println!("outputs in {}", result.out_dir.display());
        }
        Command::Sweep { base, axis, values } => {
            let cfg = base.build()?;
            let axis: SweepAxis = axis.parse()?;
            let values: Vec<String> = values.split(',').map(|s| s.trim().to_string()).collect();
            let rows = run_sweep(&cfg, axis, &values, &base.out)?;
            println!("value\tbest_val_recall\tbest_test_recall\tbest_test_ndcg");
            for r in rows {
                println!(
                    "{}\t{}\t{}\t{}",
                    r.value, r.best_val_recall, r.best_test_recall, r.best_test_ndcg
                );
            }
        }
        Command::Split {
            dataset,
            mode,
            seed,
            out,
        } => {
            let mode = parse_split(&mode)?;
            let raw = ingest_file(&dataset)?;
            println!(
                "ingested: {} users, {} items, {} interactions",
                raw.n_users,
                raw.n_items,
                raw.train.len()
            );
            let spec = match mode {
                SplitMode::Temporal => SplitSpec::temporal(),
                SplitMode::FnSynthetic => SplitSpec::fn_synthetic(),
            };
            let ds = split(&raw, &spec, seed)?;
            ds.export_splits(&out)?;
            println!(
                "split sizes: train {} val {} test {} fn {}",
                ds.train.len(),
                ds.val.iter().map(Vec::len).sum::<usize>(),
                ds.test.iter().map(Vec::len).sum::<usize>(),
                ds.fn_set.iter().map(Vec::len).sum::<usize>()
            );
            println!("exported to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
