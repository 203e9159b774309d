//! Pipeline configuration: one TOML or JSON document, command-line
//! overrides applied on top, every random choice derived from the single
//! master seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use morphgrid_core::embedding::EmbeddingConfig;
use morphgrid_core::hash::derive_seed;
use morphgrid_core::normalize::NormalizeConfig;
use morphgrid_core::paradigms::OmegaMode;
use morphgrid_core::{Error, Result};

/// How reinflection picks a source cell for each empty slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    Ranked,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// CoNLL-U dependency annotations; the morphological ground truth.
    pub annotations: PathBuf,
    /// Inflection tables, 3-column TSV: lemma, form, cell label.
    pub tables: PathBuf,
    /// Optional unannotated text mixed into the embedding corpus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<PathBuf>,
    /// UPOS tag of the part of speech under study, e.g. "NOUN" or "VERB".
    /// Annotation lines with any other tag contribute to the corpus only.
    pub pos: String,
    pub output_dir: PathBuf,
    pub normalize: NormalizeConfig,
    /// Preset feeding cell clustering.
    pub embedding_biased: EmbeddingConfig,
    /// Preset feeding the neighbor shortlists during paradigm search.
    pub embedding_default: EmbeddingConfig,
    /// k-means restarts averaged per k while selecting k.
    pub restarts: usize,
    pub k_max: usize,
    /// Skip k selection and cluster at exactly this k.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_k: Option<usize>,
    /// Candidate shortlist length per (form, cell) in paradigm search.
    pub pruning_n: usize,
    pub omega: OmegaMode,
    pub sources: SourceMode,
    /// Analogy instances sampled for evaluation.
    pub analogy_n: usize,
    /// Master seed; stage seeds are derived from it, never from the clock.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            annotations: PathBuf::new(),
            tables: PathBuf::new(),
            raw_text: None,
            pos: "NOUN".to_string(),
            output_dir: PathBuf::from("build"),
            normalize: NormalizeConfig::default(),
            embedding_biased: EmbeddingConfig::biased(),
            embedding_default: EmbeddingConfig::default_params(),
            restarts: 25,
            k_max: 40,
            gold_k: None,
            pruning_n: 250,
            omega: OmegaMode::Heuristic,
            sources: SourceMode::Ranked,
            analogy_n: 2000,
            seed: 1,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub gold_k: Option<usize>,
    pub omega: Option<OmegaMode>,
    pub sources: Option<SourceMode>,
    /// Ablation: widen the biased preset's n-grams to the stock range.
    pub no_affix_bias: bool,
    /// Ablation: widen the biased preset's context window to the stock one.
    pub no_window_bias: bool,
}

impl PipelineConfig {
    /// Reads a TOML (.toml) or JSON (.json) config document.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "toml" => toml::from_str(&text)
                .map_err(|e| Error::format(format!("{}: {e}", path.display()))),
            "json" => serde_json::from_str(&text)
                .map_err(|e| Error::format(format!("{}: {e}", path.display()))),
            other => Err(Error::invalid(format!(
                "config must be .toml or .json, got {:?}",
                other
            ))),
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(k) = overrides.gold_k {
            self.gold_k = Some(k);
        }
        if let Some(omega) = overrides.omega {
            self.omega = omega;
        }
        if let Some(sources) = overrides.sources {
            self.sources = sources;
        }
        let stock = EmbeddingConfig::default_params();
        if overrides.no_affix_bias {
            self.embedding_biased.ngram_min = stock.ngram_min;
            self.embedding_biased.ngram_max = stock.ngram_max;
        }
        if overrides.no_window_bias {
            self.embedding_biased.window = stock.window;
        }
    }

    /// Stamps the derived per-preset seeds. Must run after overrides so a
    /// `--seed` change reaches the trainers; any seed present in the file
    /// is deliberately replaced to keep one master seed in charge.
    pub fn finalize(&mut self) {
        self.embedding_biased.seed = derive_seed(self.seed, "embed-biased", 0);
        self.embedding_default.seed = derive_seed(self.seed, "embed-default", 0);
    }

    pub fn validate(&self) -> Result<()> {
        if self.annotations.as_os_str().is_empty() {
            return Err(Error::invalid("config is missing `annotations`"));
        }
        if self.tables.as_os_str().is_empty() {
            return Err(Error::invalid("config is missing `tables`"));
        }
        for (name, path) in [
            ("annotations", Some(&self.annotations)),
            ("tables", Some(&self.tables)),
            ("raw_text", self.raw_text.as_ref()),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(Error::invalid(format!(
                        "{name} file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        if self.pos.is_empty() {
            return Err(Error::invalid("pos filter must not be empty"));
        }
        self.embedding_biased.validate()?;
        self.embedding_default.validate()?;
        if self.restarts < 1 {
            return Err(Error::invalid("restarts must be >= 1"));
        }
        if self.gold_k.is_none() && self.k_max < 3 {
            return Err(Error::invalid("k_max must be >= 3 when k is selected"));
        }
        if self.gold_k == Some(0) {
            return Err(Error::invalid("gold_k must be >= 1"));
        }
        if self.pruning_n < 1 {
            return Err(Error::invalid("pruning_n must be >= 1"));
        }
        if self.analogy_n < 1 {
            return Err(Error::invalid("analogy_n must be >= 1"));
        }
        Ok(())
    }
}
