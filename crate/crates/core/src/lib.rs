//! Lexical complexity measurement and statistically validated influencer
//! networks built from tweet corpora.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] loads tweets and label tables and cleans tweet text.
//! * [`textpipe`] tokenizes, removes stopwords and stems.
//! * [`complexity`] computes Yule's K, the gzip compression ratio and the
//!   Flesch reading-ease index.
//! * [`profiles`] aggregates per-user scores and fits the log-log
//!   vocabulary/activity relation.
//! * [`stats`] holds Kruskal-Wallis, Cohen's kappa and Shannon entropy.
//! * [`binet`] builds the influencer × type bipartite network, binarizes it,
//!   fits the bipartite configuration model and validates the projection.
//! * [`community`] runs Louvain on the validated projection and profiles
//!   communities by label entropy.
//! * [`synth`] generates corpora with planted structure.

pub mod binet;
pub mod community;
pub mod complexity;
mod error;
pub mod ingest;
pub mod profiles;
pub mod stats;
pub mod synth;
pub mod textpipe;

pub use error::{Error, Result};
