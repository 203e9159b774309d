//! CoNLL-U reader. Extracts (form, lemma, cell) analysis tuples for one
//! part of speech and the plain token sequences of every sentence.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ingest::labels::build_label;
use crate::normalize::{normalize, NormalizeConfig};

/// One analyzed token type: surface form, lemma, cell label, and how often
/// that exact analysis occurred in the annotated sentences.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnalysisTuple {
    pub form: String,
    pub lemma: String,
    pub cell: String,
    pub count: u64,
}

fn parse_feats(feats: &str) -> Vec<(&str, &str)> {
    if feats == "_" || feats.is_empty() {
        return Vec::new();
    }
    feats
        .split('|')
        .filter_map(|pair| pair.split_once('='))
        .collect()
}

/// Multiword-token ranges ("1-2") and empty nodes ("1.1") carry no
/// morphological analysis of their own and are skipped entirely; their
/// surface text is covered by the word lines that follow.
fn skip_id(id: &str) -> bool {
    id.contains('-') || id.contains('.')
}

pub fn parse_annotations<R: BufRead>(
    stream: R,
    pos_filter: &str,
    config: &NormalizeConfig,
) -> Result<(Vec<AnalysisTuple>, Corpus)> {
    let mut counts: BTreeMap<(String, String, String), u64> = BTreeMap::new();
    let mut sentences: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();

    for (i, line) in stream.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if skip_id(cols[0]) {
            continue;
        }
        if cols[0].parse::<u64>().is_err() {
            return Err(Error::parse(
                lineno,
                format!("bad token id {:?}", cols[0]),
            ));
        }
        let form = normalize(cols[1], config);
        if form.is_empty() {
            return Err(Error::parse(lineno, "token form is empty"));
        }
        current.push(form.clone());

        if cols[3] != pos_filter {
            continue;
        }
        if cols[2] == "_" || cols[2].is_empty() {
            // No lemma annotation: usable as corpus context only.
            continue;
        }
        let lemma = normalize(cols[2], config);
        let cell = build_label(cols[3], parse_feats(cols[5]).into_iter());
        *counts.entry((form, lemma, cell)).or_insert(0) += 1;
    }
    if !current.is_empty() {
        sentences.push(current);
    }

    let tuples = counts
        .into_iter()
        .map(|((form, lemma, cell), count)| AnalysisTuple { form, lemma, cell, count })
        .collect();
    Ok((tuples, Corpus { sentences }))
}
