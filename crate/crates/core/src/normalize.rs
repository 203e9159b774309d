//! Orthographic normalization applied to every token before it enters the
//! corpus, lexicon, or grid. All downstream string comparison is bit-exact,
//! so both annotation and table ingestion must share one config.

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizeConfig {
    pub lowercase: bool,
    pub strip_diacritics: bool,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig { lowercase: true, strip_diacritics: true }
    }
}

impl NormalizeConfig {
    pub fn identity() -> Self {
        NormalizeConfig { lowercase: false, strip_diacritics: false }
    }
}

/// Lowercasing runs first: it can introduce combining marks (e.g. 'İ'
/// lowercases to "i" + combining dot), which the diacritic pass then
/// removes. The reverse order would not be idempotent.
pub fn normalize(form: &str, config: &NormalizeConfig) -> String {
    let lowered: String =
        if config.lowercase { form.to_lowercase() } else { form.to_string() };
    if config.strip_diacritics {
        lowered.nfd().filter(|c| !is_combining_mark(*c)).collect()
    } else {
        lowered
    }
}
