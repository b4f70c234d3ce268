//! Learnable user/item embedding tables and pair scoring.
//!
//! Two scoring modes share one parameter layout: MF scores raw embeddings
//! directly; LightGCN first propagates them through the normalized interaction
//! graph and averages layers 0..=L. Scoring always happens on a [`Propagated`]
//! snapshot so evaluation and sampling read a frozen view.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::NormalizedGraph;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringMode {
    Mf,
    LightGcn,
}

impl std::fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoringMode::Mf => write!(f, "mf"),
            ScoringMode::LightGcn => write!(f, "lightgcn"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub n_users: usize,
    pub n_items: usize,
    pub dim: usize,
    pub mode: ScoringMode,
    /// LightGCN aggregation layer count; ignored under MF.
    pub layers: usize,
    /// Row-major `n_users x dim`.
    pub user_emb: Vec<f64>,
    /// Row-major `n_items x dim`.
    pub item_emb: Vec<f64>,
    pub graph: Option<NormalizedGraph>,
}

/// Final (propagated) embeddings: what scoring reads.
#[derive(Debug, Clone)]
pub struct Propagated {
    pub dim: usize,
    pub user: Vec<f64>,
    pub item: Vec<f64>,
}

impl EmbeddingModel {
    /// Fresh model with entries drawn i.i.d. from N(0, 0.1^2).
    pub fn init(
        n_users: usize,
        n_items: usize,
        dim: usize,
        mode: ScoringMode,
        layers: usize,
        seed: u64,
    ) -> Self {
        assert!(n_users > 0 && n_items > 0 && dim > 0);
        let mut rng = stream_rng(seed, Stream::EmbeddingInit, 0);
        let mut draw = |n: usize| -> Vec<f64> {
            let mut v = Vec::with_capacity(n);
            while v.len() < n {
                // Box-Muller; dependency-free and stable across versions
                let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.random::<f64>();
                let r = (-2.0 * u1.ln()).sqrt();
                let theta = std::f64::consts::TAU * u2;
                v.push(0.1 * r * theta.cos());
                if v.len() < n {
                    v.push(0.1 * r * theta.sin());
                }
            }
            v
        };
        EmbeddingModel {
            n_users,
            n_items,
            dim,
            mode,
            layers,
            user_emb: draw(n_users * dim),
            item_emb: draw(n_items * dim),
            graph: None,
        }
    }

    pub fn with_graph(mut self, graph: NormalizedGraph) -> Self {
        self.graph = Some(graph);
        self
    }

    pub fn user_row(&self, u: usize) -> &[f64] {
        &self.user_emb[u * self.dim..(u + 1) * self.dim]
    }

    pub fn item_row(&self, i: usize) -> &[f64] {
        &self.item_emb[i * self.dim..(i + 1) * self.dim]
    }

    /// Materialize final embeddings for the current parameters.
    ///
    /// MF (or L=0) returns the raw tables; LightGCN averages propagation
    /// layers 0..=L over the combined node space.
    pub fn propagate(&self) -> Result<Propagated> {
        match self.mode {
            ScoringMode::Mf => Ok(Propagated {
                dim: self.dim,
                user: self.user_emb.clone(),
                item: self.item_emb.clone(),
            }),
            ScoringMode::LightGcn => {
                let graph = self.graph.as_ref().ok_or_else(|| {
                    Error::Config("LightGCN mode requires an adjacency graph".into())
                })?;
                let combined = self.combined();
                let smoothed = graph.smooth(&combined, self.layers, self.dim);
                let (user, item) = self.split_combined(smoothed);
                Ok(Propagated {
                    dim: self.dim,
                    user,
                    item,
                })
            }
        }
    }

    /// Pull gradients on final embeddings back to the raw tables.
    ///
    /// The layer-averaging operator is symmetric, so backprop applies the same
    /// smoothing to the combined gradient. MF is the identity.
    pub fn backprop(&self, grad_user: Vec<f64>, grad_item: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.mode {
            ScoringMode::Mf => Ok((grad_user, grad_item)),
            ScoringMode::LightGcn => {
                let graph = self.graph.as_ref().ok_or_else(|| {
                    Error::Config("LightGCN mode requires an adjacency graph".into())
                })?;
                let mut combined = grad_user;
                combined.extend_from_slice(&grad_item);
                let smoothed = graph.smooth(&combined, self.layers, self.dim);
                Ok(self.split_combined(smoothed))
            }
        }
    }

    fn combined(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity((self.n_users + self.n_items) * self.dim);
        v.extend_from_slice(&self.user_emb);
        v.extend_from_slice(&self.item_emb);
        v
    }

    fn split_combined(&self, mut combined: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        let item = combined.split_off(self.n_users * self.dim);
        (combined, item)
    }

    /// Bit-exact binary checkpoint: header + row-major little-endian f64 tables.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"PDNSEMB1")?;
        for v in [
            self.n_users as u64,
            self.n_items as u64,
            self.dim as u64,
            match self.mode {
                ScoringMode::Mf => 0,
                ScoringMode::LightGcn => 1,
            },
            self.layers as u64,
        ] {
            f.write_all(&v.to_le_bytes())?;
        }
        for table in [&self.user_emb, &self.item_emb] {
            for x in table.iter() {
                f.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Load a checkpoint. The graph is not stored; reattach with
    /// [`EmbeddingModel::with_graph`] before LightGCN propagation.
    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic)?;
        if &magic != b"PDNSEMB1" {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let read_u64 = |f: &mut dyn Read| -> Result<u64> {
            let mut b = [0u8; 8];
            f.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n_users = read_u64(&mut f)? as usize;
        let n_items = read_u64(&mut f)? as usize;
        let dim = read_u64(&mut f)? as usize;
        let mode = match read_u64(&mut f)? {
            0 => ScoringMode::Mf,
            1 => ScoringMode::LightGcn,
            m => return Err(Error::Checkpoint(format!("unknown mode {m}"))),
        };
        let layers = read_u64(&mut f)? as usize;
        let mut read_table = |n: usize| -> Result<Vec<f64>> {
            let mut v = Vec::with_capacity(n);
            let mut b = [0u8; 8];
            for _ in 0..n {
                f.read_exact(&mut b)?;
                v.push(f64::from_le_bytes(b));
            }
            Ok(v)
        };
        let user_emb = read_table(n_users * dim)?;
        let item_emb = read_table(n_items * dim)?;
        Ok(EmbeddingModel {
            n_users,
            n_items,
            dim,
            mode,
            layers,
            user_emb,
            item_emb,
            graph: None,
        })
    }
}

impl Propagated {
    pub fn user_row(&self, u: usize) -> &[f64] {
        &self.user[u * self.dim..(u + 1) * self.dim]
    }

    pub fn item_row(&self, i: usize) -> &[f64] {
        &self.item[i * self.dim..(i + 1) * self.dim]
    }

    /// Pair score: dot product of final embeddings.
    pub fn score(&self, u: usize, i: usize) -> f64 {
        dot(self.user_row(u), self.item_row(i))
    }

    /// Scores for every item, consistent with [`Propagated::score`].
    pub fn score_all(&self, u: usize) -> Vec<f64> {
        let n_items = self.item.len() / self.dim;
        let urow = self.user_row(u);
        (0..n_items).map(|i| dot(urow, self.item_row(i))).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
