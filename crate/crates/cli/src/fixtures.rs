//! Synthetic agglutinative language generator. Fifty-odd noun stems cross
//! four case/number cells with unique, unambiguous suffixes; stem
//! frequencies follow a Zipf curve; a fifth of the emitted tokens carry
//! dependency annotations and the rest land in raw text. Every fifth stem
//! has one slot held out of the corpus entirely, so the gold grid keeps a
//! supply of unattested forms for the analogy and expansion metrics. The
//! output is a ready-to-run input directory: annotations.conllu,
//! tables.tsv, raw.txt, and a config.toml wired to them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use morphgrid_core::embedding::EmbeddingConfig;
use morphgrid_core::{Error, Result};

use crate::config::PipelineConfig;

/// Suffixes are pairwise non-nested and every stem ends in a consonant, so
/// each surface form decodes to exactly one (stem, cell).
const SUFFIXES: [&str; 4] = ["a", "en", "os", "i"];
const FEATURES: [&str; 4] = [
    "Case=Nom|Number=Sing",
    "Case=Nom|Number=Plur",
    "Case=Dat|Number=Sing",
    "Case=Dat|Number=Plur",
];
const LABELS: [&str; 4] = ["N;NOM;SG", "N;NOM;PL", "N;DAT;SG", "N;DAT;PL"];
/// One left-context marker per cell; window-1 embeddings lean on these.
const MARKERS: [&str; 4] = ["sa", "ko", "nu", "be"];

const CONSONANTS: [char; 10] = ['b', 'd', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 't'];
const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub stems: usize,
    /// (marker, form) token pairs sampled on top of the coverage block.
    pub pairs: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec { stems: 50, pairs: 50_000, seed: 1 }
    }
}

/// CVCVCVC, always closing on a consonant so no suffix can be mistaken
/// for stem material.
fn new_stem(rng: &mut ChaCha20Rng) -> String {
    let mut stem = String::new();
    for i in 0..7 {
        let ch = if i % 2 == 0 {
            CONSONANTS[rng.random_range(0..CONSONANTS.len())]
        } else {
            VOWELS[rng.random_range(0..VOWELS.len())]
        };
        stem.push(ch);
    }
    stem
}

fn generate_stems(rng: &mut ChaCha20Rng, n: usize) -> Vec<String> {
    let mut stems = Vec::with_capacity(n);
    while stems.len() < n {
        let stem = new_stem(rng);
        if !stems.contains(&stem) {
            stems.push(stem);
        }
    }
    stems
}

/// Zipf sampler over stem ranks: weight of rank r is 1/(r+1).
struct ZipfTable {
    cumulative: Vec<f64>,
}

impl ZipfTable {
    fn new(n: usize) -> Self {
        let mut cumulative = Vec::with_capacity(n);
        let mut total = 0.0;
        for r in 0..n {
            total += 1.0 / (r + 1) as f64;
            cumulative.push(total);
        }
        ZipfTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty table");
        let x = rng.random_range(0.0..total);
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

fn write_conllu_sentence<W: Write>(
    w: &mut W,
    stem: &str,
    cell: usize,
    form: &str,
) -> std::io::Result<()> {
    writeln!(w, "1\t{}\t_\tX\t_\t_\t0\tdep\t_\t_", MARKERS[cell])?;
    writeln!(w, "2\t{form}\t{stem}\tNOUN\t_\t{}\t1\tdep\t_\t_", FEATURES[cell])?;
    writeln!(w)
}

/// The slot held out of the corpus for stem `r`, if any. Every fifth stem
/// loses one cell, rotating through the columns.
fn held_out(r: usize) -> Option<usize> {
    r.is_multiple_of(5).then(|| (r / 5) % SUFFIXES.len())
}

/// Generates the language into `dir` and returns the path of the written
/// config. Identical spec and seed reproduce identical files.
pub fn make_fixtures(dir: &Path, spec: &FixtureSpec) -> Result<PathBuf> {
    if spec.stems < 2 {
        return Err(Error::invalid("need at least 2 stems"));
    }
    if spec.pairs < 1 {
        return Err(Error::invalid("need at least 1 sampled pair"));
    }
    fs::create_dir_all(dir)?;

    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let stems = generate_stems(&mut rng, spec.stems);
    let form = |r: usize, c: usize| format!("{}{}", stems[r], SUFFIXES[c]);

    let tables_path = dir.join("tables.tsv");
    let mut tables = BufWriter::new(File::create(&tables_path)?);
    for (r, stem) in stems.iter().enumerate() {
        for (c, label) in LABELS.iter().enumerate() {
            writeln!(tables, "{stem}\t{}\t{label}", form(r, c))?;
        }
    }
    tables.flush()?;

    let annotations_path = dir.join("annotations.conllu");
    let raw_path = dir.join("raw.txt");
    let mut conllu = BufWriter::new(File::create(&annotations_path)?);
    let mut raw = BufWriter::new(File::create(&raw_path)?);

    // Coverage block: one annotated occurrence per slot that is not held
    // out, so every live slot is attested no matter how the Zipf tail
    // falls out.
    let mut holes = 0;
    for (r, stem) in stems.iter().enumerate() {
        for c in 0..4 {
            if held_out(r) == Some(c) {
                holes += 1;
            } else {
                write_conllu_sentence(&mut conllu, stem, c, &form(r, c))?;
            }
        }
    }

    let live_cells: Vec<Vec<usize>> = (0..stems.len())
        .map(|r| (0..4).filter(|&c| held_out(r) != Some(c)).collect())
        .collect();
    let zipf = ZipfTable::new(stems.len());
    for i in 0..spec.pairs {
        let r = zipf.sample(&mut rng);
        let cells = &live_cells[r];
        let c = cells[rng.random_range(0..cells.len())];
        if i % 5 == 0 {
            write_conllu_sentence(&mut conllu, &stems[r], c, &form(r, c))?;
        } else {
            writeln!(raw, "{} {}", MARKERS[c], form(r, c))?;
        }
    }
    conllu.flush()?;
    raw.flush()?;

    // The stock bucket count would allocate gigabytes for a toy language;
    // 2^16 buckets keep the models small without meaningful collisions.
    let buckets = 65_536;
    let config = PipelineConfig {
        annotations: annotations_path,
        tables: tables_path,
        raw_text: Some(raw_path),
        pos: "NOUN".to_string(),
        output_dir: dir.join("build"),
        embedding_biased: EmbeddingConfig { bucket_count: buckets, ..EmbeddingConfig::biased() },
        embedding_default: EmbeddingConfig {
            bucket_count: buckets,
            ..EmbeddingConfig::default_params()
        },
        seed: spec.seed,
        ..PipelineConfig::default()
    };

    let config_path = dir.join("config.toml");
    let text = toml::to_string_pretty(&config)
        .map_err(|e| Error::format(format!("config serialization: {e}")))?;
    fs::write(&config_path, text)?;

    log::info!(
        "fixture language: {} stems, {} held-out slots, {} coverage + {} sampled pairs",
        stems.len(),
        holes,
        4 * stems.len() - holes,
        spec.pairs
    );
    Ok(config_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use morphgrid_core::ingest::{build_gold_grid, build_lexicon, parse_annotations, parse_inflection_tables, tokenize};
    use morphgrid_core::normalize::NormalizeConfig;
    use std::io::BufReader;

    fn small_spec() -> FixtureSpec {
        FixtureSpec { stems: 8, pairs: 100, seed: 3 }
    }

    #[test]
    fn generates_the_four_input_files() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = make_fixtures(dir.path(), &small_spec()).unwrap();
        let config = PipelineConfig::load(&config_path).unwrap();
        config.validate().unwrap();
        assert_eq!(config.embedding_biased.bucket_count, 65_536);
        assert_eq!(config.seed, 3);

        let tables = fs::read_to_string(dir.path().join("tables.tsv")).unwrap();
        assert_eq!(tables.lines().count(), 8 * 4);
    }

    #[test]
    fn generated_inputs_ingest_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = make_fixtures(dir.path(), &small_spec()).unwrap();
        let config = PipelineConfig::load(&config_path).unwrap();
        let norm = NormalizeConfig::default();

        let file = File::open(&config.annotations).unwrap();
        let (tuples, mut corpus) =
            parse_annotations(BufReader::new(file), "NOUN", &norm).unwrap();
        let raw = fs::read_to_string(config.raw_text.as_ref().unwrap()).unwrap();
        corpus.extend(tokenize(&raw, &norm));

        let file = File::open(&config.tables).unwrap();
        let tables = parse_inflection_tables(BufReader::new(file), &norm).unwrap();

        let gold = build_gold_grid(&tuples, &tables).unwrap();
        assert_eq!(gold.rows.len(), 8, "coverage block attests every stem");
        for row in &gold.rows {
            assert_eq!(row.slots.len(), 4, "tables keep held-out slots in gold");
        }

        // Stems 0 and 5 each lose one slot, leaving the rest attested.
        let lexicon = build_lexicon(&tuples, &corpus, "NOUN").unwrap();
        assert_eq!(lexicon.len(), 8 * 4 - 2);
        let gold_forms: std::collections::BTreeSet<&str> =
            gold.rows.iter().flat_map(|r| r.all_forms()).collect();
        let unattested: Vec<&&str> =
            gold_forms.iter().filter(|f| !lexicon.contains(f)).collect();
        assert_eq!(unattested.len(), 2, "held-out forms stay gold-only");
    }

    #[test]
    fn same_seed_reproduces_identical_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        make_fixtures(a.path(), &small_spec()).unwrap();
        make_fixtures(b.path(), &small_spec()).unwrap();
        for name in ["annotations.conllu", "tables.tsv", "raw.txt"] {
            let left = fs::read(a.path().join(name)).unwrap();
            let right = fs::read(b.path().join(name)).unwrap();
            assert_eq!(left, right, "{name} differs between runs");
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        make_fixtures(a.path(), &small_spec()).unwrap();
        make_fixtures(b.path(), &FixtureSpec { seed: 4, ..small_spec() }).unwrap();
        let left = fs::read(a.path().join("raw.txt")).unwrap();
        let right = fs::read(b.path().join("raw.txt")).unwrap();
        assert_ne!(left, right);
    }

    #[test]
    fn zipf_head_outweighs_tail() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let zipf = ZipfTable::new(50);
        let mut counts = vec![0usize; 50];
        for _ in 0..20_000 {
            counts[zipf.sample(&mut rng)] += 1;
        }
        assert!(counts[0] > counts[10] && counts[10] > counts[49]);
        // Rank 0 carries weight 1/H(50) of the mass, about 22%.
        assert!((counts[0] as f64) > 0.15 * 20_000.0);
        assert!(counts[49] > 0, "tail still sampled at this volume");
    }
}
