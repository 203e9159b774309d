//! Subword-composed word embeddings trained by skip-gram with negative
//! sampling. Two presets matter downstream: a morphosyntactically biased
//! one (short n-grams, context window 1) that feeds cell clustering, and a
//! default-parameter one used only to shortlist neighbors during paradigm
//! search.

mod model;
mod ngrams;
mod train;

pub use model::EmbeddingModel;
pub use ngrams::{bracket, extract_ngrams};
pub use train::train_embeddings;

pub(crate) use model::cosine;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub bucket_count: usize,
    pub min_count: u64,
    pub seed: u64,
}

impl EmbeddingConfig {
    /// Captures morphology rather than topic: n-grams short enough to be
    /// affixes and a one-token window so only immediate syntax matters.
    pub fn biased() -> Self {
        EmbeddingConfig { ngram_min: 2, ngram_max: 4, window: 1, ..Self::default_params() }
    }

    /// Stock parameters, used for the neighbor-pruning space.
    pub fn default_params() -> Self {
        EmbeddingConfig {
            ngram_min: 3,
            ngram_max: 6,
            window: 5,
            dim: 100,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.05,
            bucket_count: 2_000_000,
            min_count: 1,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max {
            return Err(Error::invalid(format!(
                "ngram bounds must satisfy 1 <= min <= max, got {}..{}",
                self.ngram_min, self.ngram_max
            )));
        }
        if self.window < 1 {
            return Err(Error::invalid("window must be >= 1"));
        }
        if self.dim < 1 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        if self.negatives < 1 {
            return Err(Error::invalid("negatives must be >= 1"));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.bucket_count < 1 {
            return Err(Error::invalid("bucket_count must be >= 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self::default_params()
    }
}
