//! Inflection table reader: 3-column TSV (lemma, form, cell-label), one
//! realization per line. Multiple forms for one (lemma, cell) are all kept
//! here; overabundance filtering happens when the gold grid is built.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::ingest::labels::canonicalize_label;
use crate::normalize::{normalize, NormalizeConfig};

/// lemma → cell label → realizations (sorted, deduplicated).
pub type InflectionTables = BTreeMap<String, BTreeMap<String, Vec<String>>>;

pub fn parse_inflection_tables<R: BufRead>(
    stream: R,
    config: &NormalizeConfig,
) -> Result<InflectionTables> {
    let mut tables: InflectionTables = BTreeMap::new();
    for (i, line) in stream.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let lemma = normalize(cols[0], config);
        let form = normalize(cols[1], config);
        let cell = canonicalize_label(cols[2]);
        if lemma.is_empty() || form.is_empty() || cell.is_empty() {
            return Err(Error::parse(lineno, "empty lemma, form, or cell label"));
        }
        let slot = tables.entry(lemma).or_default().entry(cell).or_default();
        if let Err(pos) = slot.binary_search(&form) {
            slot.insert(pos, form);
        }
    }
    Ok(tables)
}
