//! Unsupervised discovery of morphological paradigm grids.
//!
//! The pipeline runs in stages: ingest a corpus and annotations, train
//! subword embeddings, cluster forms into cells, group them into paradigms
//! via string analysis, fill unattested grid slots by reinflection, and
//! score the result against a gold grid.

pub mod cells;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod grid;
pub mod hash;
pub mod ingest;
pub mod metrics;
pub mod normalize;
pub mod paradigms;
pub mod reinflect;

pub use corpus::{Corpus, Lexicon};
pub use error::{Error, Result};
pub use grid::{Grid, GridRow};
