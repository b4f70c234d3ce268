//! Config-driven experiment runners: single runs, sweeps, and the synthetic
//! false-negative disclosure simulation. Each run writes its outputs under a
//! run directory: `config.echo`, `curve.csv`, `summary.txt`, the best and
//! final checkpoints, and optionally `trace.csv` plus `disclosures.csv`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::config::{ExperimentConfig, FirstDisclosure};
use crate::dataset::{ingest_file, split, InteractionDataset, SplitMode};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::graph::NormalizedGraph;
use crate::model::{EmbeddingModel, ScoringMode};
use crate::rng::{stream_rng, Stream};
use crate::train::{EpochRecord, TrainConfig, Trainer};

pub struct RunResult {
    pub curve: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_val_recall: f64,
    /// Test metrics of the best-validation checkpoint.
    pub best_test_recall: f64,
    pub best_test_ndcg: f64,
    /// Disclosure log: (epoch, cumulative fraction of FN disclosed).
    pub disclosures: Vec<(usize, f64)>,
    pub out_dir: PathBuf,
}

fn load_and_split(cfg: &ExperimentConfig) -> Result<InteractionDataset> {
    let raw = ingest_file(&cfg.dataset)?;
    split(&raw, &cfg.split_spec(), cfg.seed)
}

fn build_model(cfg: &ExperimentConfig, ds: &InteractionDataset) -> EmbeddingModel {
    let layers = match cfg.model {
        ScoringMode::Mf => 0,
        ScoringMode::LightGcn => cfg.layers,
    };
    let mut model = EmbeddingModel::init(ds.n_users, ds.n_items, cfg.dim, cfg.model, layers, cfg.seed);
    if cfg.model == ScoringMode::LightGcn {
        model = model.with_graph(NormalizedGraph::from_dataset(ds));
    }
    model
}

fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs,
        eval_every: cfg.eval_every,
        lr: cfg.lr,
        lr_after_epoch: cfg.lr_after_epoch,
        eval: EvalConfig {
            k: cfg.k,
            mask_val_for_test: cfg.mask_val,
        },
        seed: cfg.seed,
    }
}

/// Format the curve as CSV. Metric cells are empty on epochs without an
/// evaluation.
pub fn curve_csv(curve: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_recall,val_ndcg,test_recall,test_ndcg\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in curve {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            cell(r.val_recall),
            cell(r.val_ndcg),
            cell(r.test_recall),
            cell(r.test_ndcg)
        );
    }
    s
}

/// Relative drop from peak validation recall to the mean over the final
/// `window` epochs of the curve. `None` when the curve has no positive peak
/// or is not longer than the window.
pub fn compute_overfit_severity(curve: &[EpochRecord], window: usize) -> Option<f64> {
    let evaluated: Vec<(usize, f64)> = curve
        .iter()
        .filter_map(|r| r.val_recall.map(|v| (r.epoch, v)))
        .collect();
    let last_epoch = evaluated.last()?.0;
    if curve.len() <= window {
        return None;
    }
    let peak = evaluated.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let tail: Vec<f64> = evaluated
        .iter()
        .filter(|&&(e, _)| e + window > last_epoch)
        .map(|&(_, v)| v)
        .collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    Some((peak - tail_mean) / peak)
}

struct RunContext<'a> {
    trainer: Trainer<'a>,
    out_dir: PathBuf,
}

fn start_run<'a>(
    cfg: &ExperimentConfig,
    ds: &'a InteractionDataset,
    out_dir: &Path,
) -> Result<RunContext<'a>> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.echo"), cfg.echo())?;
    let model = build_model(cfg, ds);
    let mut trainer = Trainer::new(ds, model, cfg.sampler_config(), cfg.loss_config(), train_config(cfg))?;
    if cfg.trace {
        trainer.trace = Some(Box::new(std::io::BufWriter::new(std::fs::File::create(
            out_dir.join("trace.csv"),
        )?)));
    }
    Ok(RunContext {
        trainer,
        out_dir: out_dir.to_path_buf(),
    })
}

fn finish_run(
    cfg: &ExperimentConfig,
    ds: &InteractionDataset,
    ctx: RunContext<'_>,
    disclosures: Vec<(usize, f64)>,
) -> Result<RunResult> {
    let out_dir = ctx.out_dir;
    let outcome = ctx.trainer.finish();
    std::fs::write(out_dir.join("curve.csv"), curve_csv(&outcome.curve))?;
    outcome.final_model.save(&out_dir.join("final.ckpt"))?;
    outcome.best_model.save(&out_dir.join("best.ckpt"))?;

    // test metrics of the best-validation checkpoint
    let (best_test_recall, best_test_ndcg) = {
        let mut best = outcome.best_model.clone();
        if cfg.model == ScoringMode::LightGcn && best.graph.is_none() {
            best = best.with_graph(NormalizedGraph::from_dataset(ds));
        }
        let snapshot = best.propagate()?;
        crate::eval::evaluate(
            &snapshot,
            ds,
            &EvalConfig {
                k: cfg.k,
                mask_val_for_test: cfg.mask_val,
            },
            crate::eval::Split::Test,
        )?
    };

    if !disclosures.is_empty() {
        let mut s = String::from("epoch,cumulative_fraction\n");
        for (e, f) in &disclosures {
            let _ = writeln!(s, "{e},{f}");
        }
        std::fs::write(out_dir.join("disclosures.csv"), s)?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "epochs_run = {}", outcome.curve.len());
    let _ = writeln!(
        summary,
        "best_epoch = {}",
        outcome.best_epoch.map(|e| e.to_string()).unwrap_or_else(|| "none".into())
    );
    let _ = writeln!(summary, "best_val_recall = {}", outcome.best_val_recall);
    let _ = writeln!(summary, "best_test_recall = {best_test_recall}");
    let _ = writeln!(summary, "best_test_ndcg = {best_test_ndcg}");
    if let Some(r) = outcome.curve.last() {
        let _ = writeln!(summary, "final_train_loss = {}", r.train_loss);
        if let (Some(tr), Some(tn)) = (r.test_recall, r.test_ndcg) {
            let _ = writeln!(summary, "final_test_recall = {tr}");
            let _ = writeln!(summary, "final_test_ndcg = {tn}");
        }
    }
    if let Some(sev) = compute_overfit_severity(&outcome.curve, 30) {
        let _ = writeln!(summary, "overfit_severity_w30 = {sev}");
    }
    for (e, f) in &disclosures {
        let _ = writeln!(summary, "disclosure: epoch {e} cumulative {f}");
    }
    summary.push_str("\n-- config --\n");
    summary.push_str(&cfg.echo());
    std::fs::write(out_dir.join("summary.txt"), summary)?;

    Ok(RunResult {
        curve: outcome.curve,
        best_epoch: outcome.best_epoch,
        best_val_recall: outcome.best_val_recall,
        best_test_recall,
        best_test_ndcg,
        disclosures,
        out_dir,
    })
}

/// End-to-end seeded run: load, split, train, evaluate, write outputs.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunResult> {
    let ds = load_and_split(cfg)?;
    run_experiment_on(cfg, &ds, out_dir)
}

/// As [`run_experiment`] but on an already-split dataset (sweeps reuse it).
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    ds: &InteractionDataset,
    out_dir: &Path,
) -> Result<RunResult> {
    let mut ctx = start_run(cfg, ds, out_dir)?;
    for epoch in 0..cfg.epochs {
        ctx.trainer.step_epoch(epoch)?;
    }
    finish_run(cfg, ds, ctx, Vec::new())
}

/// Per-user disclosure subsets: subset `s` (0-based) holds the items whose
/// shuffled position falls in `[floor(n * s/5), floor(n * cum_s))` where
/// `cum_s = min((s+1) * 0.2, c)`.
fn disclosure_subsets(
    ds: &InteractionDataset,
    c: f64,
    seed: u64,
) -> Vec<Vec<(usize, u32)>> {
    let n_subsets = (c / 0.2 - 1e-9).ceil().max(0.0) as usize;
    let mut subsets: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n_subsets];
    for u in 0..ds.n_users {
        let mut items = ds.fn_set[u].clone();
        let mut rng = stream_rng(seed, Stream::Disclosure, u as u64);
        items.shuffle(&mut rng);
        let n = items.len() as f64;
        for s in 0..n_subsets {
            let lo = (n * 0.2 * s as f64).floor() as usize;
            let cum = (0.2 * (s + 1) as f64).min(c);
            let hi = (n * cum).floor() as usize;
            for &item in &items[lo..hi] {
                subsets[s].push((u, item));
            }
        }
    }
    subsets
}

/// False-negative simulation: train as usual, but on a schedule disclose
/// 20%-of-FN subsets into the sampler's avoid set until `c` of FN is hidden
/// from negative sampling. The first event fires at the configured epoch or,
/// under `auto`, once the validation peak has stood for 20 epochs.
pub fn run_fn_simulation(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunResult> {
    if cfg.split != SplitMode::FnSynthetic {
        return Err(Error::Config(
            "simulate-fn requires split = fn-synthetic".into(),
        ));
    }
    let ds = load_and_split(cfg)?;
    let total_fn: usize = ds.fn_set.iter().map(Vec::len).sum();
    if cfg.fn_c > 0.0 && total_fn == 0 {
        return Err(Error::Config("fn_c > 0 but the FN set is empty".into()));
    }
    let subsets = disclosure_subsets(&ds, cfg.fn_c, cfg.seed);

    let mut ctx = start_run(cfg, &ds, out_dir)?;
    let mut disclosures: Vec<(usize, f64)> = Vec::new();
    let mut next_subset = 0usize;
    let mut first_event: Option<usize> = match cfg.first_disclosure {
        FirstDisclosure::Epoch(e) => Some(e),
        FirstDisclosure::Auto => None,
    };
    let mut disclosed_count = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_val_epoch = 0usize;

    for epoch in 0..cfg.epochs {
        // disclose before the epoch trains, so the sampler never emits a
        // disclosed item during or after its disclosure epoch
        if next_subset < subsets.len() {
            let due = match first_event {
                Some(first) => epoch >= first + next_subset * cfg.disclosure_gap,
                None => false,
            };
            if due {
                for &(u, item) in &subsets[next_subset] {
                    ctx.trainer.avoid.insert(u, item);
                    disclosed_count += 1;
                }
                next_subset += 1;
                let frac = if total_fn == 0 {
                    0.0
                } else {
                    disclosed_count as f64 / total_fn as f64
                };
                disclosures.push((epoch, frac));
            }
        }

        let record = ctx.trainer.step_epoch(epoch)?;
        if let Some(vr) = record.val_recall {
            if vr > best_val {
                best_val = vr;
                best_val_epoch = epoch;
            }
        }
        // auto trigger: the peak has stood unbeaten for 20 epochs
        if first_event.is_none() && best_val > f64::NEG_INFINITY && epoch >= best_val_epoch + 20 {
            first_event = Some(epoch + 1);
        }
    }

    finish_run(cfg, &ds, ctx, disclosures)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    H,
    Alpha,
    Beta,
    Strategy,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(SweepAxis::H),
            "alpha" => Ok(SweepAxis::Alpha),
            "beta" => Ok(SweepAxis::Beta),
            "strategy" => Ok(SweepAxis::Strategy),
            _ => Err(Error::Config(format!(
                "sweep axis must be h|alpha|beta|strategy, got {s:?}"
            ))),
        }
    }
}

pub struct SweepRow {
    pub value: String,
    pub best_val_recall: f64,
    pub best_test_recall: f64,
    pub best_test_ndcg: f64,
    pub curve_path: PathBuf,
}

/// One [`run_experiment`] per grid value, sharing the seed and the split;
/// emits `sweep.csv` collating best-checkpoint metrics per row.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
    out_root: &Path,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep values must be non-empty".into()));
    }
    let ds = load_and_split(base)?;
    let mut rows = Vec::new();
    for value in values {
        let mut cfg = base.clone();
        match axis {
            SweepAxis::H => cfg.set("h", value)?,
            SweepAxis::Alpha => {
                cfg.set("strategy", "pdns-mixing")?;
                cfg.set("alpha", value)?;
            }
            SweepAxis::Beta => {
                cfg.set("strategy", "pdns-soft")?;
                cfg.set("beta", value)?;
            }
            SweepAxis::Strategy => cfg.set("strategy", value)?,
        }
        let dir = out_root.join(format!(
            "{}_{}",
            match axis {
                SweepAxis::H => "h",
                SweepAxis::Alpha => "alpha",
                SweepAxis::Beta => "beta",
                SweepAxis::Strategy => "strategy",
            },
            value.replace('.', "_")
        ));
        let result = run_experiment_on(&cfg, &ds, &dir)?;
        rows.push(SweepRow {
            value: value.clone(),
            best_val_recall: result.best_val_recall,
            best_test_recall: result.best_test_recall,
            best_test_ndcg: result.best_test_ndcg,
            curve_path: dir.join("curve.csv"),
        });
    }
    let mut csv = String::from("value,best_val_recall,best_test_recall,best_test_ndcg,curve\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.value,
            r.best_val_recall,
            r.best_test_recall,
            r.best_test_ndcg,
            r.curve_path.display()
        );
    }
    std::fs::create_dir_all(out_root)?;
    let mut f = std::fs::File::create(out_root.join("sweep.csv"))?;
    f.write_all(csv.as_bytes())?;
    Ok(rows)
}
