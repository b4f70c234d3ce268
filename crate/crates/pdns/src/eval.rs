//! Full-catalog top-K ranking and metrics.
//!
//! For each user, every item is scored from a frozen snapshot; masked items
//! (train, plus validation when scoring test) are set to negative infinity
//! and the top K survivors form the recommendation list. Recall@K and NDCG@K
//! use binary relevance with a log2(rank+1) discount and the ideal DCG
//! truncated at min(|targets|, K).

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::model::Propagated;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Val,
    Test,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub k: usize,
    /// Mask validation items out of the candidate ranking when scoring test.
    pub mask_val_for_test: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 50,
            mask_val_for_test: true,
        }
    }
}

/// Top-K item list for one user. Ties break toward the lowest item index.
pub fn rank_topk(
    snapshot: &Propagated,
    u: usize,
    ds: &InteractionDataset,
    cfg: &EvalConfig,
    split: Split,
) -> Vec<u32> {
    let mut scores = snapshot.score_all(u);
    for &i in &ds.user_items[u] {
        scores[i as usize] = f64::NEG_INFINITY;
    }
    if split == Split::Test && cfg.mask_val_for_test {
        for &i in &ds.val[u] {
            scores[i as usize] = f64::NEG_INFINITY;
        }
    }
    top_k_indices(&scores, cfg.k)
}

/// Indices of the K largest finite scores, descending, ties by lowest index.
fn top_k_indices(scores: &[f64], k: usize) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..scores.len() as u32)
        .filter(|&i| scores[i as usize] != f64::NEG_INFINITY)
        .collect();
    let k = k.min(idx.len());
    idx.sort_by(|&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// |R_u intersect targets| / |targets|.
pub fn recall_at_k(ranked: &[u32], targets: &[u32]) -> f64 {
    debug_assert!(!targets.is_empty());
    let hits = ranked.iter().filter(|i| targets.contains(i)).count();
    hits as f64 / targets.len() as f64
}

/// Binary-relevance NDCG with DCG discount 1/log2(rank+1), rank 1-based.
pub fn ndcg_at_k(ranked: &[u32], targets: &[u32], k: usize) -> f64 {
    debug_assert!(!targets.is_empty());
    let dcg: f64 = ranked
        .iter()
        .enumerate()
        .filter(|(_, i)| targets.contains(i))
        .map(|(r, _)| 1.0 / ((r + 2) as f64).log2())
        .sum();
    let ideal_len = targets.len().min(k);
    let idcg: f64 = (0..ideal_len).map(|r| 1.0 / ((r + 2) as f64).log2()).sum();
    dcg / idcg
}

/// Unweighted mean Recall@K and NDCG@K over users with non-empty targets.
pub fn evaluate(
    snapshot: &Propagated,
    ds: &InteractionDataset,
    cfg: &EvalConfig,
    split: Split,
) -> Result<(f64, f64)> {
    let targets_of = |u: usize| -> &Vec<u32> {
        match split {
            Split::Val => &ds.val[u],
            Split::Test => &ds.test[u],
        }
    };
    let mut n = 0usize;
    let mut recall_sum = 0.0;
    let mut ndcg_sum = 0.0;
    for u in 0..ds.n_users {
        let targets = targets_of(u);
        if targets.is_empty() {
            continue;
        }
        let ranked = rank_topk(snapshot, u, ds, cfg, split);
        recall_sum += recall_at_k(&ranked, targets);
        ndcg_sum += ndcg_at_k(&ranked, targets, cfg.k);
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoEligibleUsers(format!("{split:?}")));
    }
    Ok((recall_sum / n as f64, ndcg_sum / n as f64))
}

/// Per-user metric rows, for distribution dumps.
pub fn per_user_metrics(
    snapshot: &Propagated,
    ds: &InteractionDataset,
    cfg: &EvalConfig,
    split: Split,
) -> Vec<(usize, f64, f64)> {
    let mut rows = Vec::new();
    for u in 0..ds.n_users {
        let targets = match split {
            Split::Val => &ds.val[u],
            Split::Test => &ds.test[u],
        };
        if targets.is_empty() {
            continue;
        }
        let ranked = rank_topk(snapshot, u, ds, cfg, split);
        rows.push((
            u,
            recall_at_k(&ranked, targets),
            ndcg_at_k(&ranked, targets, cfg.k),
        ));
    }
    rows
}
