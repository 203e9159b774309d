use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokenized sentences. Tokens are already normalized; none are empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    tokens: Vec<String>,
}

impl Corpus {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }

    pub fn extend(&mut self, other: Corpus) {
        self.sentences.extend(other.sentences);
    }

    /// Frequency of every distinct token over all sentences.
    pub fn frequencies(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for sentence in &self.sentences {
            for token in sentence {
                *counts.entry(token.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn write_ldjson<W: Write>(&self, mut w: W) -> Result<()> {
        for sentence in &self.sentences {
            let rec = SentenceRecord { tokens: sentence.clone() };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_ldjson<R: BufRead>(r: R) -> Result<Corpus> {
        let mut sentences = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SentenceRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            if rec.tokens.iter().any(|t| t.is_empty()) {
                return Err(Error::parse(i + 1, "empty token in sentence record"));
            }
            sentences.push(rec.tokens);
        }
        Ok(Corpus { sentences })
    }
}

/// The set of forms under analysis: every distinct annotated form of the
/// target part of speech, with its frequency over the whole corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub pos: String,
    entries: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct LexiconRecord {
    form: String,
    freq: u64,
    pos: String,
}

impl Lexicon {
    pub fn new(pos: impl Into<String>) -> Self {
        Lexicon { pos: pos.into(), entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, form: impl Into<String>, freq: u64) {
        self.entries.insert(form.into(), freq);
    }

    pub fn contains(&self, form: &str) -> bool {
        self.entries.contains_key(form)
    }

    pub fn freq(&self, form: &str) -> Option<u64> {
        self.entries.get(form).copied()
    }

    /// Forms in lexicographic order.
    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(f, &c)| (f.as_str(), c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_ldjson<W: Write>(&self, mut w: W) -> Result<()> {
        for (form, &freq) in &self.entries {
            let rec =
                LexiconRecord { form: form.clone(), freq, pos: self.pos.clone() };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_ldjson<R: BufRead>(r: R) -> Result<Lexicon> {
        let mut pos: Option<String> = None;
        let mut entries = BTreeMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LexiconRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            match &pos {
                None => pos = Some(rec.pos.clone()),
                Some(p) if *p != rec.pos => {
                    return Err(Error::parse(
                        i + 1,
                        format!("mixed POS labels in lexicon: {} vs {}", p, rec.pos),
                    ));
                }
                Some(_) => {}
            }
            entries.insert(rec.form, rec.freq);
        }
        Ok(Lexicon { pos: pos.unwrap_or_default(), entries })
    }
}
