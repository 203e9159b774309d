use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::embedding::ngrams::extract_ngrams;
use crate::embedding::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::hash::fnv1a;

const MAGIC: &[u8; 8] = b"MGRIDEMB";
const VERSION: u32 = 1;

/// A trained embedding model. Subword unit vectors live in a hashed bucket
/// table; a word's vector is the exact sum of its unit vectors, so any
/// string, in vocabulary or not, can be embedded.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub config: EmbeddingConfig,
    /// (form, frequency), sorted by descending frequency then form.
    pub vocab: Vec<(String, u64)>,
    /// bucket_count x dim, row-major.
    pub subword: Vec<f32>,
    /// vocab x dim, row-major: context-side vectors from training.
    pub output: Vec<f32>,
    /// Mean loss per epoch from the producing training run. Diagnostic
    /// only; not serialized.
    pub epoch_losses: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: EmbeddingConfig,
    vocab: Vec<(String, u64)>,
}

impl EmbeddingModel {
    /// Zero-initialized model over a fixed vocabulary.
    pub fn new(config: EmbeddingConfig, vocab: Vec<(String, u64)>) -> Self {
        let index =
            vocab.iter().enumerate().map(|(i, (f, _))| (f.clone(), i)).collect();
        let subword = vec![0.0; config.bucket_count * config.dim];
        let output = vec![0.0; vocab.len() * config.dim];
        EmbeddingModel { config, vocab, subword, output, epoch_losses: Vec::new(), index }
    }

    pub fn vocab_id(&self, form: &str) -> Option<usize> {
        self.index.get(form).copied()
    }

    /// Bucket ids of all subword units of `form`.
    pub fn unit_ids(&self, form: &str) -> Vec<usize> {
        extract_ngrams(form, self.config.ngram_min, self.config.ngram_max)
            .iter()
            .map(|u| (fnv1a(u.as_bytes()) % self.config.bucket_count as u64) as usize)
            .collect()
    }

    pub fn vector(&self, form: &str) -> Vec<f32> {
        let dim = self.config.dim;
        let mut v = vec![0.0f32; dim];
        for id in self.unit_ids(form) {
            let row = &self.subword[id * dim..(id + 1) * dim];
            for (a, b) in v.iter_mut().zip(row) {
                *a += b;
            }
        }
        v
    }

    /// Up to `n` candidates ranked by cosine similarity to `form`, ties
    /// broken lexicographically. Zero vectors score 0 against everything.
    pub fn nearest<'a, I>(&self, form: &str, candidates: I, n: usize) -> Vec<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let target = self.vector(form);
        let mut scored: Vec<(f32, &str)> = candidates
            .into_iter()
            .map(|c| (cosine(&target, &self.vector(c)), c))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.truncate(n);
        scored.into_iter().map(|(_, c)| c.to_string()).collect()
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header { config: self.config.clone(), vocab: self.vocab.clone() };
        let header_bytes = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        w.write_all(&header_bytes)?;
        for &x in self.subword.iter().chain(self.output.iter()) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<EmbeddingModel> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("not an embedding model file (bad magic)"));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let version = u32::from_le_bytes(buf4);
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported embedding model version {version}"
            )));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let header_len = u64::from_le_bytes(buf8) as usize;
        let mut header_bytes = vec![0u8; header_len];
        r.read_exact(&mut header_bytes)?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::format(format!("bad embedding model header: {e}")))?;

        let mut model = EmbeddingModel::new(header.config, header.vocab);
        read_f32s(&mut r, &mut model.subword)?;
        read_f32s(&mut r, &mut model.output)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::format("trailing bytes after embedding matrices"));
        }
        Ok(model)
    }

    /// One "form v1 .. vd" line per vocabulary word, for inspection.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for (form, _) in &self.vocab {
            w.write_all(form.as_bytes())?;
            for x in self.vector(form) {
                write!(w, " {x:.6}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn read_f32s<R: Read>(r: &mut R, out: &mut [f32]) -> Result<()> {
    let mut buf = vec![0u8; out.len() * 4];
    r.read_exact(&mut buf)?;
    for (i, chunk) in buf.chunks_exact(4).enumerate() {
        out[i] = f32::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(())
}

pub(crate) fn cosine(a: &[f32], b: &[f32]) -> f32 {
    let mut dot = 0.0f32;
    let mut na = 0.0f32;
    let mut nb = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}
