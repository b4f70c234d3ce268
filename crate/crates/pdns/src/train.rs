//! BPR / soft-BPR training loop.
//!
//! Each epoch shuffles the train pairs, and each mini-batch refreshes the
//! propagated snapshot, samples one negative per positive, accumulates the
//! mean-reduced loss gradient, backpropagates through the graph when LightGCN
//! is active, adds L2 on the raw embeddings of batch participants, and takes
//! one Adam step. The best-validation checkpoint is retained while training
//! runs its full epoch budget, so late-training degradation stays observable.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::adam::{AdamState, GradBuffer};
use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, Split};
use crate::loss::{bpr_loss, delta_dns};
use crate::model::{EmbeddingModel, Propagated};
use crate::rng::{stream_rng, Stream};
use crate::sampling::{sample_dns, AvoidSet, SamplerConfig, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Bpr,
    SoftBpr,
}

#[derive(Debug, Clone, Copy)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Soft factor; only read when `kind` is `SoftBpr`.
    pub beta: f64,
    /// L2 coefficient on raw embeddings of batch participants.
    pub lambda: f64,
    pub batch_size: usize,
}

impl LossConfig {
    pub fn bpr(lambda: f64, batch_size: usize) -> Self {
        LossConfig {
            kind: LossKind::Bpr,
            beta: 1.0,
            lambda,
            batch_size,
        }
    }

    pub fn soft(beta: f64, lambda: f64, batch_size: usize) -> Self {
        LossConfig {
            kind: LossKind::SoftBpr,
            beta,
            lambda,
            batch_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == LossKind::SoftBpr && !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!(
                "soft factor beta must be in (0,1], got {}",
                self.beta
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// How a triplet's raw score difference enters the loss.
#[derive(Debug, Clone, Copy)]
pub enum TrainMode {
    /// Plain BPR on the raw difference (RNS, DNS).
    Bpr,
    /// BPR on the synthetic difference `(1 - alpha) * d` (PDNS mixing form).
    Mixing { alpha: f64 },
    /// Soft BPR `-ln sigma(beta * d)` on the raw difference (PDNS soft form).
    Soft { beta: f64 },
}

impl TrainMode {
    pub fn from_configs(sampler: &SamplerConfig, loss: &LossConfig) -> Self {
        match sampler.strategy {
            Strategy::Rns | Strategy::Dns => TrainMode::Bpr,
            Strategy::PdnsMixing => TrainMode::Mixing {
                alpha: sampler.alpha,
            },
            Strategy::PdnsSoft => TrainMode::Soft { beta: loss.beta },
        }
    }

    /// Per-triplet loss and the multiplicative gradient coefficient on
    /// `-d(d)/d(theta)`, i.e. the exact derivative of the loss w.r.t. the raw
    /// score difference, negated.
    pub fn loss_and_coeff(self, d: f64) -> (f64, f64) {
        match self {
            TrainMode::Bpr => (bpr_loss(d), delta_dns(d)),
            TrainMode::Mixing { alpha } => {
                let scaled = (1.0 - alpha) * d;
                (bpr_loss(scaled), (1.0 - alpha) * delta_dns(scaled))
            }
            TrainMode::Soft { beta } => {
                let scaled = beta * d;
                (bpr_loss(scaled), beta * delta_dns(scaled))
            }
        }
    }
}

/// A sampled triplet with its frozen negative selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrozenTriplet {
    pub user: u32,
    pub pos: u32,
    pub neg: u32,
}

/// Scored mini-batch: triplets plus their per-triplet gradient weights.
#[derive(Debug, Clone)]
pub struct TripletBatch {
    pub triplets: Vec<FrozenTriplet>,
    pub differences: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Mean loss over a frozen triplet list under the model's current parameters,
/// including the `lambda/2 * ||theta||^2` term on raw participant embeddings.
pub fn batch_loss(
    model: &EmbeddingModel,
    triplets: &[FrozenTriplet],
    mode: TrainMode,
    lambda: f64,
) -> Result<f64> {
    let snapshot = model.propagate()?;
    Ok(batch_terms(model, &snapshot, triplets, mode, lambda, None)?.0)
}

/// Mean loss gradient over a frozen triplet list, pulled back to the raw
/// embedding tables.
pub fn batch_gradients(
    model: &EmbeddingModel,
    triplets: &[FrozenTriplet],
    mode: TrainMode,
    lambda: f64,
) -> Result<GradBuffer> {
    let snapshot = model.propagate()?;
    let mut grads = GradBuffer::new(model.n_users, model.n_items, model.dim);
    batch_terms(model, &snapshot, triplets, mode, lambda, Some(&mut grads))?;
    Ok(grads)
}

/// Shared loss/gradient kernel. Gradients on the final embeddings are
/// accumulated, mean-scaled, backpropagated through the graph, then the L2
/// term `lambda * theta / B` is added on raw participant rows.
fn batch_terms(
    model: &EmbeddingModel,
    snapshot: &Propagated,
    triplets: &[FrozenTriplet],
    mode: TrainMode,
    lambda: f64,
    mut grads: Option<&mut GradBuffer>,
) -> Result<(f64, TripletBatch)> {
    let b = triplets.len().max(1) as f64;
    let mut loss_sum = 0.0;
    let mut differences = Vec::with_capacity(triplets.len());
    let mut deltas = Vec::with_capacity(triplets.len());

    for t in triplets {
        let (u, i, j) = (t.user as usize, t.pos as usize, t.neg as usize);
        let d = snapshot.score(u, i) - snapshot.score(u, j);
        let (loss, coeff) = mode.loss_and_coeff(d);
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                context: format!("loss for triplet ({u},{i},{j})"),
            });
        }
        loss_sum += loss;
        differences.push(d);
        deltas.push(coeff);
        if let Some(g) = grads.as_deref_mut() {
            // dL/d(e_u) = -coeff * (e_i - e_j), etc., on final embeddings
            let (eu, ei, ej) = (snapshot.user_row(u), snapshot.item_row(i), snapshot.item_row(j));
            g.add_user(u, -coeff, ei);
            g.add_user(u, coeff, ej);
            g.add_item(i, -coeff, eu);
            g.add_item(j, coeff, eu);
        }
        if lambda > 0.0 {
            let reg: f64 = [model.user_row(u), model.item_row(i), model.item_row(j)]
                .iter()
                .flat_map(|r| r.iter())
                .map(|x| x * x)
                .sum();
            loss_sum += 0.5 * lambda * reg;
        }
    }

    if let Some(g) = grads.as_deref_mut() {
        g.scale(1.0 / b);
        if model.mode == crate::model::ScoringMode::LightGcn {
            let user = std::mem::take(&mut g.user);
            let item = std::mem::take(&mut g.item);
            let (gu, gi) = model.backprop(user, item)?;
            g.set_dense(gu, gi);
        }
        if lambda > 0.0 {
            for t in triplets {
                let (u, i, j) = (t.user as usize, t.pos as usize, t.neg as usize);
                g.add_user(u, lambda / b, model.user_row(u));
                g.add_item(i, lambda / b, model.item_row(i));
                g.add_item(j, lambda / b, model.item_row(j));
            }
        }
    }

    Ok((
        loss_sum / b,
        TripletBatch {
            triplets: triplets.to_vec(),
            differences,
            deltas,
        },
    ))
}

/// One row of the training curve. Metric fields are present on epochs where
/// evaluation ran.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_recall: Option<f64>,
    pub val_ndcg: Option<f64>,
    pub test_recall: Option<f64>,
    pub test_ndcg: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eval_every: usize,
    pub lr: f64,
    /// Optional single learning-rate switch: (epoch, new lr).
    pub lr_after_epoch: Option<(usize, f64)>,
    pub eval: EvalConfig,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("lr must be > 0".into()));
        }
        Ok(())
    }
}

pub struct TrainOutcome {
    pub curve: Vec<EpochRecord>,
    pub final_model: EmbeddingModel,
    pub best_model: EmbeddingModel,
    pub best_epoch: Option<usize>,
    pub best_val_recall: f64,
}

/// Incremental trainer; drives one epoch at a time so callers (the
/// false-negative simulation) can interleave avoid-set updates.
pub struct Trainer<'a> {
    pub ds: &'a InteractionDataset,
    pub model: EmbeddingModel,
    pub sampler: SamplerConfig,
    pub loss: LossConfig,
    pub cfg: TrainConfig,
    pub avoid: AvoidSet,
    adam: AdamState,
    grads: GradBuffer,
    mode: TrainMode,
    pub curve: Vec<EpochRecord>,
    best_model: EmbeddingModel,
    best_epoch: Option<usize>,
    best_val_recall: f64,
    /// Optional `epoch,user,pos,neg,score` selection trace.
    pub trace: Option<Box<dyn Write>>,
}

impl<'a> Trainer<'a> {
    pub fn new(
        ds: &'a InteractionDataset,
        model: EmbeddingModel,
        sampler: SamplerConfig,
        loss: LossConfig,
        cfg: TrainConfig,
    ) -> Result<Self> {
        sampler.validate()?;
        loss.validate()?;
        cfg.validate()?;
        let adam = AdamState::new(&model, cfg.lr);
        let grads = GradBuffer::new(model.n_users, model.n_items, model.dim);
        let mode = TrainMode::from_configs(&sampler, &loss);
        let best_model = model.clone();
        Ok(Trainer {
            ds,
            model,
            sampler,
            loss,
            cfg,
            avoid: AvoidSet::empty(ds.n_users),
            adam,
            grads,
            mode,
            curve: Vec::new(),
            best_model,
            best_epoch: None,
            best_val_recall: f64::NEG_INFINITY,
            trace: None,
        })
    }

    /// Run epoch `epoch` (0-based): shuffle, sample, step. Returns mean loss.
    pub fn run_epoch(&mut self, epoch: usize) -> Result<f64> {
        if let Some((switch_epoch, new_lr)) = self.cfg.lr_after_epoch {
            if epoch >= switch_epoch {
                self.adam.lr = new_lr;
            }
        }
        let mut order: Vec<u32> = (0..self.ds.train.len() as u32).collect();
        let mut shuffle_rng = stream_rng(self.cfg.seed, Stream::EpochShuffle, epoch as u64);
        order.shuffle(&mut shuffle_rng);
        let mut sample_rng = stream_rng(self.cfg.seed, Stream::NegativeSampling, epoch as u64);

        let h = self.sampler.effective_h();
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        let mut triplets = Vec::with_capacity(self.loss.batch_size);

        for chunk in order.chunks(self.loss.batch_size) {
            let snapshot = self.model.propagate()?;
            triplets.clear();
            for &idx in chunk {
                let (u, i) = self.ds.train[idx as usize];
                let sel = sample_dns(u as usize, &snapshot, self.ds, &self.avoid, h, &mut sample_rng)?;
                if let Some(w) = self.trace.as_mut() {
                    writeln!(
                        w,
                        "{epoch},{u},{i},{},{}",
                        sel.item,
                        snapshot.score(u as usize, sel.item as usize)
                    )?;
                }
                triplets.push(FrozenTriplet {
                    user: u,
                    pos: i,
                    neg: sel.item,
                });
            }
            self.grads.clear();
            let (loss, _) = batch_terms(
                &self.model,
                &snapshot,
                &triplets,
                self.mode,
                self.loss.lambda,
                Some(&mut self.grads),
            )?;
            self.adam.step(&mut self.model, &self.grads)?;
            loss_sum += loss;
            n_batches += 1;
        }
        Ok(loss_sum / n_batches.max(1) as f64)
    }

    /// The split whose Recall@K is monitored for checkpoint selection and the
    /// curve's validation columns: validation when it has any targets,
    /// otherwise the held-out test partition (the FN-synthetic split carries
    /// no separate validation set).
    pub fn monitor_split(&self) -> Split {
        if self.ds.val.iter().any(|v| !v.is_empty()) {
            Split::Val
        } else {
            Split::Test
        }
    }

    /// Evaluate the current parameters on the monitored split and test.
    /// When the monitored split *is* test, the pairs coincide.
    pub fn evaluate_now(&self) -> Result<(f64, f64, f64, f64)> {
        let snapshot = self.model.propagate()?;
        let (tr, tn) = evaluate(&snapshot, self.ds, &self.cfg.eval, Split::Test)?;
        let (vr, vn) = match self.monitor_split() {
            Split::Val => evaluate(&snapshot, self.ds, &self.cfg.eval, Split::Val)?,
            Split::Test => (tr, tn),
        };
        Ok((vr, vn, tr, tn))
    }

    /// One full epoch plus scheduled evaluation and best-checkpoint tracking.
    pub fn step_epoch(&mut self, epoch: usize) -> Result<EpochRecord> {
        let train_loss = self.run_epoch(epoch)?;
        let mut record = EpochRecord {
            epoch,
            train_loss,
            val_recall: None,
            val_ndcg: None,
            test_recall: None,
            test_ndcg: None,
        };
        if (epoch + 1) % self.cfg.eval_every == 0 || epoch + 1 == self.cfg.epochs {
            let (vr, vn, tr, tn) = self.evaluate_now()?;
            record.val_recall = Some(vr);
            record.val_ndcg = Some(vn);
            record.test_recall = Some(tr);
            record.test_ndcg = Some(tn);
            if vr > self.best_val_recall {
                self.best_val_recall = vr;
                self.best_epoch = Some(epoch);
                self.best_model = self.model.clone();
            }
        }
        self.curve.push(record.clone());
        Ok(record)
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome {
            curve: self.curve,
            best_model: if self.best_epoch.is_some() {
                self.best_model
            } else {
                self.model.clone()
            },
            final_model: self.model,
            best_epoch: self.best_epoch,
            best_val_recall: self.best_val_recall,
        }
    }
}

/// Whole-run driver: `epochs` epochs with evaluation every `eval_every`.
pub fn train(
    ds: &InteractionDataset,
    model: EmbeddingModel,
    sampler: SamplerConfig,
    loss: LossConfig,
    cfg: TrainConfig,
) -> Result<TrainOutcome> {
    let epochs = cfg.epochs;
    let mut trainer = Trainer::new(ds, model, sampler, loss, cfg)?;
    for epoch in 0..epochs {
        trainer.step_epoch(epoch)?;
    }
    Ok(trainer.finish())
}
