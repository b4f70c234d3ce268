//! Interaction ingestion and split construction.
//!
//! Raw logs are tab-separated `user item timestamp` lines. Users and items get
//! dense indices in first-appearance order; duplicate (user, item) pairs
//! collapse to the earliest timestamp. Two split regimes are supported: a
//! per-user temporal split (latest 10% test, remainder 8:1 train/val,
//! chronological) and a seeded random 4:1:1 train/test/false-negative split
//! used by the false-negative simulation.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// One parsed log record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawInteraction {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

/// Which split regime to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Temporal,
    FnSynthetic,
}

/// Split parameters. Defaults follow the common protocol: latest 10% of each
/// user's records to test, the rest 8:1 chronological train/val; the synthetic
/// regime shuffles each user's items into 4:1:1 train/test/FN.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub test_fraction: f64,
    pub train_val_ratio: (u32, u32),
    pub fn_ratio: (u32, u32, u32),
}

impl SplitSpec {
    pub fn temporal() -> Self {
        SplitSpec {
            mode: SplitMode::Temporal,
            test_fraction: 0.10,
            train_val_ratio: (8, 1),
            fn_ratio: (4, 1, 1),
        }
    }

    pub fn fn_synthetic() -> Self {
        SplitSpec {
            mode: SplitMode::FnSynthetic,
            ..SplitSpec::temporal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        let (a, b) = self.train_val_ratio;
        if a == 0 || b == 0 {
            return Err(Error::Config("train_val_ratio parts must be positive".into()));
        }
        let (x, y, z) = self.fn_ratio;
        if x == 0 || y == 0 || z == 0 {
            return Err(Error::Config("fn_ratio parts must be positive".into()));
        }
        Ok(())
    }
}

/// Dense-indexed interaction store with per-user partitions.
///
/// `train` holds (user, item) index pairs; `val`, `test` and `fn_set` are
/// per-user item lists (sorted ascending); `user_items` is exactly the set of
/// each user's train items and is what samplers consult.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    pub n_users: usize,
    pub n_items: usize,
    pub train: Vec<(u32, u32)>,
    /// Timestamps parallel to `train`; retained so an unsplit dataset can be
    /// split temporally.
    pub train_ts: Vec<i64>,
    pub val: Vec<Vec<u32>>,
    pub test: Vec<Vec<u32>>,
    pub fn_set: Vec<Vec<u32>>,
    pub user_items: Vec<HashSet<u32>>,
    pub user_labels: Vec<String>,
    pub item_labels: Vec<String>,
}

impl InteractionDataset {
    /// Total interactions across all partitions.
    pub fn interaction_count(&self) -> usize {
        self.train.len()
            + self.val.iter().map(Vec::len).sum::<usize>()
            + self.test.iter().map(Vec::len).sum::<usize>()
            + self.fn_set.iter().map(Vec::len).sum::<usize>()
    }

    /// Per-user train interactions as (item, timestamp, input order) triples.
    fn per_user_train(&self) -> Vec<Vec<(u32, i64, usize)>> {
        let mut per_user: Vec<Vec<(u32, i64, usize)>> = vec![Vec::new(); self.n_users];
        for (ord, (&(u, i), &ts)) in self.train.iter().zip(&self.train_ts).enumerate() {
            per_user[u as usize].push((i, ts, ord));
        }
        per_user
    }

    /// Write `train.tsv`, `val.tsv`, `test.tsv`, `fn.tsv` under `dir` as
    /// `user_index<TAB>item_index` lines for cross-implementation diffing.
    pub fn export_splits(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let write_pairs = |name: &str, pairs: &[(u32, u32)]| -> Result<()> {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            for (u, i) in pairs {
                writeln!(f, "{u}\t{i}")?;
            }
            Ok(())
        };
        let mut train_sorted = self.train.clone();
        train_sorted.sort_unstable();
        write_pairs("train.tsv", &train_sorted)?;
        for (name, part) in [("val.tsv", &self.val), ("test.tsv", &self.test), ("fn.tsv", &self.fn_set)] {
            let mut pairs = Vec::new();
            for (u, items) in part.iter().enumerate() {
                for &i in items {
                    pairs.push((u as u32, i));
                }
            }
            write_pairs(name, &pairs)?;
        }
        Ok(())
    }
}

/// Parse text records into an unsplit dataset (everything lands in train).
///
/// Lines beginning with `#` are ignored. Duplicate (user, item) pairs keep the
/// earliest timestamp.
pub fn ingest<I, S>(lines: I) -> Result<InteractionDataset>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut user_ids: HashMap<String, u32> = HashMap::new();
    let mut item_ids: HashMap<String, u32> = HashMap::new();
    let mut user_labels = Vec::new();
    let mut item_labels = Vec::new();
    // (u, i) -> (earliest ts, input order of that earliest record)
    let mut seen: HashMap<(u32, u32), (i64, usize)> = HashMap::new();
    let mut order: Vec<(u32, u32)> = Vec::new();

    for (lineno, line) in lines.into_iter().enumerate() {
        let line = line.as_ref();
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let (user, item, ts) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(i), Some(t), None) => (u, i, t),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `user<TAB>item<TAB>timestamp`, got {trimmed:?}"),
                })
            }
        };
        let ts: i64 = ts.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: format!("bad timestamp {ts:?}"),
        })?;
        let next_u = user_ids.len() as u32;
        let u = *user_ids.entry(user.to_string()).or_insert_with(|| {
            user_labels.push(user.to_string());
            next_u
        });
        let next_i = item_ids.len() as u32;
        let i = *item_ids.entry(item.to_string()).or_insert_with(|| {
            item_labels.push(item.to_string());
            next_i
        });
        match seen.entry((u, i)) {
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert((ts, order.len()));
                order.push((u, i));
            }
            std::collections::hash_map::Entry::Occupied(mut e) => {
                if ts < e.get().0 {
                    e.get_mut().0 = ts;
                }
            }
        }
    }

    if order.is_empty() {
        return Err(Error::EmptyInput);
    }

    let n_users = user_labels.len();
    let n_items = item_labels.len();
    let mut train = Vec::with_capacity(order.len());
    let mut train_ts = Vec::with_capacity(order.len());
    let mut user_items: Vec<HashSet<u32>> = vec![HashSet::new(); n_users];
    for &(u, i) in &order {
        train.push((u, i));
        train_ts.push(seen[&(u, i)].0);
        user_items[u as usize].insert(i);
    }

    Ok(InteractionDataset {
        n_users,
        n_items,
        train,
        train_ts,
        val: vec![Vec::new(); n_users],
        test: vec![Vec::new(); n_users],
        fn_set: vec![Vec::new(); n_users],
        user_items,
        user_labels,
        item_labels,
    })
}

/// Read and ingest a log file.
pub fn ingest_file(path: &Path) -> Result<InteractionDataset> {
    let text = std::fs::read_to_string(path)?;
    ingest(text.lines())
}

/// Per-user temporal split: latest `ceil(test_fraction * n)` records to test,
/// the remainder split chronologically by `train_val_ratio` with the latest
/// portion going to validation. Timestamp ties break by input order.
pub fn split_temporal(ds: &InteractionDataset, spec: &SplitSpec) -> Result<InteractionDataset> {
    spec.validate()?;
    if spec.mode != SplitMode::Temporal {
        return Err(Error::Config("split_temporal requires mode=temporal".into()));
    }
    let mut out = empty_like(ds);
    let (a, b) = spec.train_val_ratio;
    for (u, mut recs) in ds.per_user_train().into_iter().enumerate() {
        recs.sort_by_key(|&(_, ts, ord)| (ts, ord));
        let n = recs.len();
        let n_test = ((spec.test_fraction * n as f64).ceil() as usize).min(n);
        let rest = n - n_test;
        let n_val = rest * b as usize / (a + b) as usize;
        let n_train = rest - n_val;
        for (idx, (item, ts, _)) in recs.into_iter().enumerate() {
            if idx < n_train {
                push_train(&mut out, u, item, ts);
            } else if idx < rest {
                out.val[u].push(item);
            } else {
                out.test[u].push(item);
            }
        }
        out.val[u].sort_unstable();
        out.test[u].sort_unstable();
    }
    Ok(out)
}

/// Seeded per-user random 4:1:1 train/test/FN split. FN items are excluded
/// from `user_items`: they are unobserved during training and exist only so
/// the simulation can disclose them. Remainders go to train.
pub fn split_fn_synthetic(ds: &InteractionDataset, seed: u64) -> Result<InteractionDataset> {
    let spec = SplitSpec::fn_synthetic();
    let (a, b, c) = spec.fn_ratio;
    let denom = (a + b + c) as usize;
    let mut out = empty_like(ds);
    for (u, recs) in ds.per_user_train().into_iter().enumerate() {
        let mut recs = recs;
        // stable pre-shuffle order so the split depends only on content + seed
        recs.sort_by_key(|&(item, _, _)| item);
        let mut rng = stream_rng(seed, Stream::SplitShuffle, u as u64);
        recs.shuffle(&mut rng);
        let n = recs.len();
        let n_test = n * b as usize / denom;
        let n_fn = n * c as usize / denom;
        let n_train = n - n_test - n_fn;
        for (idx, (item, ts, _)) in recs.into_iter().enumerate() {
            if idx < n_train {
                push_train(&mut out, u, item, ts);
            } else if idx < n_train + n_test {
                out.test[u].push(item);
            } else {
                out.fn_set[u].push(item);
            }
        }
        out.test[u].sort_unstable();
        out.fn_set[u].sort_unstable();
    }
    Ok(out)
}

fn empty_like(ds: &InteractionDataset) -> InteractionDataset {
    InteractionDataset {
        n_users: ds.n_users,
        n_items: ds.n_items,
        train: Vec::new(),
        train_ts: Vec::new(),
        val: vec![Vec::new(); ds.n_users],
        test: vec![Vec::new(); ds.n_users],
        fn_set: vec![Vec::new(); ds.n_users],
        user_items: vec![HashSet::new(); ds.n_users],
        user_labels: ds.user_labels.clone(),
        item_labels: ds.item_labels.clone(),
    }
}

fn push_train(ds: &mut InteractionDataset, u: usize, item: u32, ts: i64) {
    ds.train.push((u as u32, item));
    ds.train_ts.push(ts);
    ds.user_items[u].insert(item);
}

/// Apply the configured split regime.
pub fn split(ds: &InteractionDataset, spec: &SplitSpec, seed: u64) -> Result<InteractionDataset> {
    match spec.mode {
        SplitMode::Temporal => split_temporal(ds, spec),
        SplitMode::FnSynthetic => split_fn_synthetic(ds, seed),
    }
}
