//! Staged execution with content-addressed caching. Every stage hashes its
//! inputs (upstream artifacts plus the config fields it reads); a stage
//! reruns only when that key changes, and rerunning invalidates everything
//! downstream. The manifest records the keys, output hashes, timings, and
//! final metrics of the last completed run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use morphgrid_core::cells::{cluster_cells, CellAssignment, CellClusterConfig};
use morphgrid_core::embedding::{train_embeddings, EmbeddingModel};
use morphgrid_core::hash::derive_seed;
use morphgrid_core::ingest::{
    build_gold_grid, build_lexicon, parse_annotations, parse_inflection_tables, tokenize,
};
use morphgrid_core::metrics::{
    evaluate, sample_analogies, write_instances_tsv, EvalOptions, MetricsReport,
};
use morphgrid_core::paradigms::{
    build_neighbor_lists, cluster_paradigms, read_paradigms, write_paradigms, ParadigmConfig,
};
use morphgrid_core::reinflect::{
    fill_grid, make_pairs, rank_sources, train_rewriter, SourcePolicy,
};
use morphgrid_core::{Corpus, Error, Grid, Lexicon, Result};

use crate::config::{PipelineConfig, SourceMode};

/// Stage names in execution order.
pub const STAGES: [&str; 6] =
    ["ingest", "embed", "cells", "paradigms", "reinflect", "evaluate"];

pub const CORPUS: &str = "corpus.ldjson";
pub const LEXICON: &str = "lexicon.ldjson";
pub const GOLD_GRID: &str = "gold_grid.ldjson";
pub const EMB_BIASED: &str = "embeddings_biased.bin";
pub const EMB_DEFAULT: &str = "embeddings_default.bin";
pub const CELLS: &str = "cells.tsv";
pub const CURVE: &str = "dispersion.csv";
pub const PARADIGMS: &str = "paradigms.ldjson";
pub const EXPONENTS: &str = "exponents.tsv";
pub const PREDICTED: &str = "predicted_grid.ldjson";
pub const RANKINGS: &str = "source_ranking.tsv";
pub const ANALOGIES: &str = "analogies.tsv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const MANIFEST: &str = "manifest.json";

/// The five headline numbers, without the per-form detail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub f_par: f64,
    pub f_cell: f64,
    pub f_grid: f64,
    pub analogy: f64,
    pub lexicon_expansion: f64,
}

impl From<&MetricsReport> for Headline {
    fn from(r: &MetricsReport) -> Self {
        Headline {
            f_par: r.f_par,
            f_cell: r.f_cell,
            f_grid: r.f_grid,
            analogy: r.analogy,
            lexicon_expansion: r.lexicon_expansion,
        }
    }
}

impl Headline {
    pub fn mean(runs: &[Headline]) -> Headline {
        let n = runs.len() as f64;
        let avg = |f: fn(&Headline) -> f64| runs.iter().map(f).sum::<f64>() / n;
        Headline {
            f_par: avg(|r| r.f_par),
            f_cell: avg(|r| r.f_cell),
            f_grid: avg(|r| r.f_grid),
            analogy: avg(|r| r.analogy),
            lexicon_expansion: avg(|r| r.lexicon_expansion),
        }
    }

    fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("f_par", self.f_par),
            ("f_cell", self.f_cell),
            ("f_grid", self.f_grid),
            ("analogy", self.analogy),
            ("lexicon_expansion", self.lexicon_expansion),
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of everything the stage read; a match means the outputs on
    /// disk are current.
    pub key: String,
    /// Output file name to content hash.
    pub outputs: BTreeMap<String, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Option<PipelineConfig>,
    pub stages: BTreeMap<String, StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Headline>,
}

pub struct Pipeline {
    config: PipelineConfig,
    dir: PathBuf,
    manifest: RunManifest,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    use std::io::Read;
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(to_hex(&hasher.finalize()))
}

fn to_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Key = stage name + the config fields the stage reads + its input
/// hashes. JSON object keys serialize sorted, so the text is canonical.
fn stage_key(stage: &str, config_part: &serde_json::Value, inputs: &[(&str, String)]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(stage.as_bytes());
    hasher.update(b"\n");
    hasher.update(config_part.to_string().as_bytes());
    hasher.update(b"\n");
    for (name, hash) in inputs {
        hasher.update(name.as_bytes());
        hasher.update(b"=");
        hasher.update(hash.as_bytes());
        hasher.update(b"\n");
    }
    to_hex(&hasher.finalize())
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Pipeline> {
        config.validate()?;
        let dir = config.output_dir.clone();
        fs::create_dir_all(&dir)?;
        let manifest_path = dir.join(MANIFEST);
        let mut manifest = if manifest_path.is_file() {
            match serde_json::from_str(&fs::read_to_string(&manifest_path)?) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("ignoring unreadable manifest: {e}");
                    RunManifest::default()
                }
            }
        } else {
            RunManifest::default()
        };
        manifest.config = Some(config.clone());
        Ok(Pipeline { config, dir, manifest })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn path(&self, artifact: &str) -> PathBuf {
        self.dir.join(artifact)
    }

    fn require(&self, artifact: &str, producer: &str) -> Result<String> {
        let path = self.path(artifact);
        if !path.is_file() {
            return Err(Error::invalid(format!(
                "missing artifact {artifact}; run the {producer} stage first"
            )));
        }
        file_sha256(&path)
    }

    fn cached(&self, stage: &str, key: &str, outputs: &[&str]) -> bool {
        match self.manifest.stages.get(stage) {
            Some(rec) if rec.key == key => {
                outputs.iter().all(|o| self.path(o).is_file())
            }
            _ => false,
        }
    }

    fn write_artifact<F>(&self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Stores the stage record and drops every later stage from the
    /// manifest: their keys were computed against outputs that no longer
    /// exist in that form.
    fn record(
        &mut self,
        stage: &str,
        key: String,
        outputs: &[&str],
        started: Instant,
    ) -> Result<()> {
        let mut hashed = BTreeMap::new();
        for name in outputs {
            hashed.insert(name.to_string(), file_sha256(&self.path(name))?);
        }
        let seconds = started.elapsed().as_secs_f64();
        log::info!("{stage}: done in {seconds:.2}s");
        self.manifest
            .stages
            .insert(stage.to_string(), StageRecord { key, outputs: hashed, seconds });
        let idx = STAGES.iter().position(|s| *s == stage).expect("known stage");
        for later in &STAGES[idx + 1..] {
            self.manifest.stages.remove(*later);
        }
        if stage != "evaluate" {
            self.manifest.metrics = None;
        }
        self.save_manifest()
    }

    fn save_manifest(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.path(MANIFEST), text + "\n")?;
        Ok(())
    }

    /// Runs one stage through the cache. Returns false on a cache hit.
    pub fn run_stage(&mut self, stage: &str) -> Result<bool> {
        match stage {
            "ingest" => self.stage_ingest(),
            "embed" => self.stage_embed(),
            "cells" => self.stage_cells(),
            "paradigms" => self.stage_paradigms(),
            "reinflect" => self.stage_reinflect(),
            "evaluate" => self.stage_evaluate(),
            other => Err(Error::invalid(format!("unknown stage {other:?}"))),
        }
    }

    /// All six stages in order. Untouched prefixes hit the cache, so this
    /// is also the cheapest way to resume after a config tweak.
    pub fn run_all(&mut self) -> Result<MetricsReport> {
        for stage in STAGES {
            self.run_stage(stage)?;
        }
        let text = fs::read_to_string(self.path(REPORT_JSON))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn stage_ingest(&mut self) -> Result<bool> {
        let mut inputs = vec![
            ("annotations", file_sha256(&self.config.annotations)?),
            ("tables", file_sha256(&self.config.tables)?),
        ];
        if let Some(raw) = &self.config.raw_text {
            inputs.push(("raw_text", file_sha256(raw)?));
        }
        let part = serde_json::json!({
            "normalize": self.config.normalize,
            "pos": self.config.pos,
        });
        let key = stage_key("ingest", &part, &inputs);
        let outputs = [CORPUS, LEXICON, GOLD_GRID];
        if self.cached("ingest", &key, &outputs) {
            log::info!("ingest: cache hit");
            return Ok(false);
        }
        let started = Instant::now();

        let file = File::open(&self.config.annotations)?;
        let (tuples, mut corpus) =
            parse_annotations(BufReader::new(file), &self.config.pos, &self.config.normalize)?;
        if let Some(raw) = &self.config.raw_text {
            corpus.extend(tokenize(&fs::read_to_string(raw)?, &self.config.normalize));
        }
        let file = File::open(&self.config.tables)?;
        let tables = parse_inflection_tables(BufReader::new(file), &self.config.normalize)?;
        let lexicon = build_lexicon(&tuples, &corpus, &self.config.pos)?;
        let gold = build_gold_grid(&tuples, &tables)?;
        log::info!(
            "ingest: {} tokens, {} lexicon forms, {} gold paradigms",
            corpus.token_count(),
            lexicon.len(),
            gold.rows.len()
        );

        self.write_artifact(CORPUS, |w| corpus.write_ldjson(w))?;
        self.write_artifact(LEXICON, |w| lexicon.write_ldjson(w))?;
        self.write_artifact(GOLD_GRID, |w| gold.write_ldjson(w))?;
        self.record("ingest", key, &outputs, started)?;
        Ok(true)
    }

    fn stage_embed(&mut self) -> Result<bool> {
        let corpus_hash = self.require(CORPUS, "ingest")?;
        let part = serde_json::json!({
            "biased": self.config.embedding_biased,
            "default": self.config.embedding_default,
        });
        let key = stage_key("embed", &part, &[("corpus", corpus_hash)]);
        let outputs = [EMB_BIASED, EMB_DEFAULT];
        if self.cached("embed", &key, &outputs) {
            log::info!("embed: cache hit");
            return Ok(false);
        }
        let started = Instant::now();

        let corpus = Corpus::read_ldjson(BufReader::new(File::open(self.path(CORPUS))?))?;
        let biased = train_embeddings(&corpus, &self.config.embedding_biased)?;
        self.write_artifact(EMB_BIASED, |w| biased.write_binary(w))?;
        drop(biased);
        let stock = train_embeddings(&corpus, &self.config.embedding_default)?;
        self.write_artifact(EMB_DEFAULT, |w| stock.write_binary(w))?;
        self.record("embed", key, &outputs, started)?;
        Ok(true)
    }

    fn stage_cells(&mut self) -> Result<bool> {
        let emb_hash = self.require(EMB_BIASED, "embed")?;
        let lex_hash = self.require(LEXICON, "ingest")?;
        let cluster_config = CellClusterConfig {
            restarts: self.config.restarts,
            k_max: self.config.k_max,
            seed: derive_seed(self.config.seed, "cells", 0),
            gold_k: self.config.gold_k,
        };
        let part = serde_json::json!({
            "restarts": cluster_config.restarts,
            "k_max": cluster_config.k_max,
            "seed": cluster_config.seed,
            "gold_k": cluster_config.gold_k,
        });
        let key = stage_key(
            "cells",
            &part,
            &[("embeddings", emb_hash), ("lexicon", lex_hash)],
        );
        let outputs = [CELLS, CURVE];
        if self.cached("cells", &key, &outputs) {
            log::info!("cells: cache hit");
            return Ok(false);
        }
        let started = Instant::now();

        let model =
            EmbeddingModel::read_binary(BufReader::new(File::open(self.path(EMB_BIASED))?))?;
        let lexicon = Lexicon::read_ldjson(BufReader::new(File::open(self.path(LEXICON))?))?;
        let (assignment, curve) = cluster_cells(&model, &lexicon, &cluster_config)?;
        log::info!("cells: k = {}", assignment.k);

        self.write_artifact(CELLS, |w| assignment.write_tsv(w))?;
        self.write_artifact(CURVE, |w| curve.write_csv(w))?;
        self.record("cells", key, &outputs, started)?;
        Ok(true)
    }

    fn stage_paradigms(&mut self) -> Result<bool> {
        let cells_hash = self.require(CELLS, "cells")?;
        let emb_hash = self.require(EMB_DEFAULT, "embed")?;
        let part = serde_json::json!({
            "pruning_n": self.config.pruning_n,
            "omega": self.config.omega,
        });
        let key = stage_key(
            "paradigms",
            &part,
            &[("cells", cells_hash), ("embeddings", emb_hash)],
        );
        let outputs = [PARADIGMS, EXPONENTS];
        if self.cached("paradigms", &key, &outputs) {
            log::info!("paradigms: cache hit");
            return Ok(false);
        }
        let started = Instant::now();

        let assignment =
            CellAssignment::read_tsv(BufReader::new(File::open(self.path(CELLS))?))?;
        let cells = assignment.members();
        let model =
            EmbeddingModel::read_binary(BufReader::new(File::open(self.path(EMB_DEFAULT))?))?;
        let neighbors = build_neighbor_lists(&model, &cells, self.config.pruning_n);
        let paradigm_config =
            ParadigmConfig { omega: self.config.omega, single_pass: false };
        let (paradigms, distribution) =
            cluster_paradigms(&cells, &neighbors, &paradigm_config);
        log::info!("paradigms: {} clusters from {} cells", paradigms.len(), cells.len());

        self.write_artifact(PARADIGMS, |w| write_paradigms(&paradigms, w))?;
        self.write_artifact(EXPONENTS, |w| distribution.write_tsv(w))?;
        self.record("paradigms", key, &outputs, started)?;
        Ok(true)
    }

    fn stage_reinflect(&mut self) -> Result<bool> {
        let paradigms_hash = self.require(PARADIGMS, "paradigms")?;
        let cells_hash = self.require(CELLS, "cells")?;
        let pair_seed = derive_seed(self.config.seed, "pairs", 0);
        let fill_seed = derive_seed(self.config.seed, "fill", 0);
        let part = serde_json::json!({
            "sources": self.config.sources,
            "pair_seed": pair_seed,
            "fill_seed": fill_seed,
        });
        let key = stage_key(
            "reinflect",
            &part,
            &[("paradigms", paradigms_hash), ("cells", cells_hash)],
        );
        let outputs = [PREDICTED, RANKINGS];
        if self.cached("reinflect", &key, &outputs) {
            log::info!("reinflect: cache hit");
            return Ok(false);
        }
        let started = Instant::now();

        let paradigms = read_paradigms(BufReader::new(File::open(self.path(PARADIGMS))?))?;
        let assignment =
            CellAssignment::read_tsv(BufReader::new(File::open(self.path(CELLS))?))?;
        let (train, dev) = make_pairs(&paradigms, pair_seed)?;
        log::info!("reinflect: {} train pairs, {} dev pairs", train.len(), dev.len());
        let model = train_rewriter(&train);
        let ranking = rank_sources(&model, &dev);
        let policy = match self.config.sources {
            SourceMode::Ranked => SourcePolicy::Ranked(&ranking),
            SourceMode::Random => SourcePolicy::Random { seed: fill_seed },
        };
        let grid = fill_grid(&paradigms, &model, &policy, assignment.k);

        self.write_artifact(PREDICTED, |w| grid.write_ldjson(w))?;
        self.write_artifact(RANKINGS, |w| ranking.write_tsv(w))?;
        self.record("reinflect", key, &outputs, started)?;
        Ok(true)
    }

    fn stage_evaluate(&mut self) -> Result<bool> {
        let pred_hash = self.require(PREDICTED, "reinflect")?;
        let gold_hash = self.require(GOLD_GRID, "ingest")?;
        let lex_hash = self.require(LEXICON, "ingest")?;
        let eval_seed = derive_seed(self.config.seed, "eval", 0);
        let part = serde_json::json!({
            "analogy_n": self.config.analogy_n,
            "seed": eval_seed,
        });
        let key = stage_key(
            "evaluate",
            &part,
            &[("predicted", pred_hash), ("gold", gold_hash), ("lexicon", lex_hash)],
        );
        let outputs = [REPORT_JSON, REPORT_TXT, ANALOGIES];
        if self.cached("evaluate", &key, &outputs) {
            log::info!("evaluate: cache hit");
            return Ok(false);
        }
        let started = Instant::now();

        let pred = Grid::read_ldjson(BufReader::new(File::open(self.path(PREDICTED))?))?;
        let gold = Grid::read_ldjson(BufReader::new(File::open(self.path(GOLD_GRID))?))?;
        let lexicon = Lexicon::read_ldjson(BufReader::new(File::open(self.path(LEXICON))?))?;
        let opts = EvalOptions {
            analogy_n: self.config.analogy_n,
            seed: eval_seed,
            joint_analogy: false,
        };
        let report = evaluate(&pred, &gold, &lexicon, &opts)?;
        let instances = sample_analogies(&gold, &lexicon, self.config.analogy_n, eval_seed)?;

        self.write_artifact(ANALOGIES, |w| write_instances_tsv(&instances, w))?;
        let json = serde_json::to_string_pretty(&report)?;
        self.write_artifact(REPORT_JSON, |w| {
            w.write_all(json.as_bytes())?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
        let table = report.render_table();
        self.write_artifact(REPORT_TXT, |w| {
            w.write_all(table.as_bytes())?;
            Ok(())
        })?;
        self.record("evaluate", key, &outputs, started)?;
        self.manifest.metrics = Some(Headline::from(&report));
        self.save_manifest()?;
        Ok(true)
    }
}

/// Per-run headline numbers plus their mean, the shape written to
/// report.json when a multi-seed sweep runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatReport {
    pub runs: Vec<Headline>,
    pub mean: Headline,
}

impl RepeatReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20}{:>8}", "metric", "mean");
        for (name, value) in self.mean.rows() {
            let _ = writeln!(out, "{name:<20}{value:>8.4}");
        }
        let _ = writeln!(out);
        for (r, run) in self.runs.iter().enumerate() {
            let mut line = format!("run-{r}:");
            for (name, value) in run.rows() {
                let _ = write!(line, " {name}={value:.4}");
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Runs the whole pipeline once per seed in `seed .. seed + repeats`, each
/// run in its own subdirectory, and writes the aggregate report at the
/// output root.
pub fn run_repeats(base: &PipelineConfig, repeats: usize) -> Result<RepeatReport> {
    if repeats < 1 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    let mut runs = Vec::with_capacity(repeats);
    for r in 0..repeats as u64 {
        let mut config = base.clone();
        config.seed = base.seed + r;
        config.output_dir = base.output_dir.join(format!("run-{r}"));
        config.finalize();
        log::info!("repeat {r}: seed {}", config.seed);
        let mut pipeline = Pipeline::new(config)?;
        let report = pipeline.run_all()?;
        runs.push(Headline::from(&report));
    }
    let summary = RepeatReport { mean: Headline::mean(&runs), runs };
    fs::create_dir_all(&base.output_dir)?;
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(base.output_dir.join(REPORT_JSON), json + "\n")?;
    fs::write(base.output_dir.join(REPORT_TXT), summary.render_table())?;
    Ok(summary)
}
