//! Negative sampling strategies.
//!
//! Every strategy produces one negative item per positive pair. Eligible items
//! are those the user has not interacted with in train, minus the per-user
//! avoid set (disclosed false negatives). The candidate pool is drawn i.i.d.
//! uniform with replacement; DNS keeps the highest-scored candidate, which at
//! H=1 degenerates to plain uniform sampling. PDNS selects exactly as DNS and
//! differs only in what the training loss does with the selection.

use std::collections::HashSet;

use rand::Rng;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::model::Propagated;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Rns,
    Dns,
    PdnsMixing,
    PdnsSoft,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Rns => write!(f, "rns"),
            Strategy::Dns => write!(f, "dns"),
            Strategy::PdnsMixing => write!(f, "pdns-mixing"),
            Strategy::PdnsSoft => write!(f, "pdns-soft"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    /// Candidate pool size (hardness level). RNS behaves as H=1.
    pub h: usize,
    /// Mixing coefficient for PDNS mixing form.
    pub alpha: f64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h < 1 {
            return Err(Error::Config("candidate pool size H must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "mixing coefficient alpha must be in [0,1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Pool size actually used: RNS ignores H.
    pub fn effective_h(&self) -> usize {
        match self.strategy {
            Strategy::Rns => 1,
            _ => self.h,
        }
    }
}

/// Outcome of one negative selection.
#[derive(Debug, Clone)]
pub struct NegativeSelection {
    pub item: u32,
    pub candidate_scores: Vec<f64>,
    /// Score of the synthesized negative (mixing form only).
    pub synthetic_score: Option<f64>,
}

/// Per-user sets of items that must never be emitted as negatives.
#[derive(Debug, Clone, Default)]
pub struct AvoidSet {
    sets: Vec<HashSet<u32>>,
}

impl AvoidSet {
    pub fn empty(n_users: usize) -> Self {
        AvoidSet {
            sets: vec![HashSet::new(); n_users],
        }
    }

    pub fn contains(&self, u: usize, item: u32) -> bool {
        self.sets.get(u).is_some_and(|s| s.contains(&item))
    }

    pub fn insert(&mut self, u: usize, item: u32) {
        self.sets[u].insert(item);
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(HashSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const REJECTION_RETRY_CAP: usize = 1000;

/// One uniform draw from the eligible items of `u`.
///
/// Rejection sampling with a retry cap, then an explicit complement
/// enumeration as fallback so pathological users still terminate.
pub fn sample_uniform<R: Rng>(
    u: usize,
    ds: &InteractionDataset,
    avoid: &AvoidSet,
    rng: &mut R,
) -> Result<u32> {
    let interacted = &ds.user_items[u];
    for _ in 0..REJECTION_RETRY_CAP {
        let j = rng.random_range(0..ds.n_items as u32);
        if !interacted.contains(&j) && !avoid.contains(u, j) {
            return Ok(j);
        }
    }
    let eligible: Vec<u32> = (0..ds.n_items as u32)
        .filter(|&j| !interacted.contains(&j) && !avoid.contains(u, j))
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleNegatives { user: u });
    }
    Ok(eligible[rng.random_range(0..eligible.len())])
}

/// DNS selection: draw `h` eligible candidates i.i.d. uniform with
/// replacement, score them against the current snapshot, keep the argmax.
/// Ties break toward the lowest item index.
pub fn sample_dns<R: Rng>(
    u: usize,
    snapshot: &Propagated,
    ds: &InteractionDataset,
    avoid: &AvoidSet,
    h: usize,
    rng: &mut R,
) -> Result<NegativeSelection> {
    debug_assert!(h >= 1);
    let mut candidate_scores = Vec::with_capacity(h);
    let mut best: Option<(u32, f64)> = None;
    for _ in 0..h {
        let j = sample_uniform(u, ds, avoid, rng)?;
        let s = snapshot.score(u, j as usize);
        candidate_scores.push(s);
        best = Some(match best {
            None => (j, s),
            Some((bj, bs)) => {
                if s > bs || (s == bs && j < bj) {
                    (j, s)
                } else {
                    (bj, bs)
                }
            }
        });
    }
    let (item, _) = best.expect("h >= 1");
    Ok(NegativeSelection {
        item,
        candidate_scores,
        synthetic_score: None,
    })
}

/// Positive-dominated mixing: score of the synthetic negative
/// `alpha * e_i + (1 - alpha) * e_j`, computed through the scale identity
/// `alpha * y_ui + (1 - alpha) * y_uj` without materializing the embedding.
pub fn synthesize_pdns(y_ui: f64, y_uj: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must be in [0,1), got {alpha}")));
    }
    Ok(alpha * y_ui + (1.0 - alpha) * y_uj)
}
