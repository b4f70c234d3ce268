//! Implicit collaborative filtering with pairwise BPR training under
//! pluggable negative-sampling strategies: uniform sampling (RNS), dynamic
//! hard negative sampling (DNS), and positive-dominated negative synthesizing
//! (PDNS) in both its embedding-mixing form and the equivalent soft-BPR form.
//! Includes full-catalog top-K evaluation, experiment runners, and the
//! false-negative disclosure simulation.
//!
//! The guide under `book/` walks through the concepts; its code snippets are
//! compiled as doc-tests below so they cannot drift from the API.
//!
//! ```
//! use pdns::dataset::{ingest, split_temporal, SplitSpec};
//! use pdns::model::{EmbeddingModel, ScoringMode};
//!
//! let raw = ingest(["alice\tdune\t3", "alice\tsolaris\t5", "bob\tdune\t4"]).unwrap();
//! let ds = split_temporal(&raw, &SplitSpec::temporal()).unwrap();
//! let model = EmbeddingModel::init(ds.n_users, ds.n_items, 16, ScoringMode::Mf, 0, 42);
//! let snapshot = model.propagate().unwrap();
//! assert_eq!(snapshot.score_all(0).len(), ds.n_items);
//! ```

pub mod adam;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod loss;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod train;

pub use error::{Error, Result};

// Book chapters double as doc-tests; each stub module pulls one chapter in.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/soft-bpr.md")]
    mod soft_bpr {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
