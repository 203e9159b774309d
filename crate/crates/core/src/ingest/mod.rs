//! Turns raw text, dependency annotations, and inflection tables into the
//! corpus / lexicon / gold grid triple the rest of the pipeline consumes.

mod conllu;
pub mod labels;
mod tables;

pub use conllu::{parse_annotations, AnalysisTuple};
pub use tables::{parse_inflection_tables, InflectionTables};

use std::collections::{BTreeMap, BTreeSet};

use unicode_normalization::char::is_combining_mark;

use crate::corpus::{Corpus, Lexicon};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridRow};
use crate::normalize::{normalize, NormalizeConfig};

/// Splits plain text into sentences (one per line) of normalized tokens.
/// Maximal alphanumeric runs form tokens; every other non-space character
/// becomes a token by itself, so punctuation never sticks to a word.
/// Combining marks stay with their base letter.
pub fn tokenize(raw_text: &str, config: &NormalizeConfig) -> Corpus {
    let mut sentences = Vec::new();
    for line in raw_text.lines() {
        let mut sentence: Vec<String> = Vec::new();
        let mut word = String::new();
        let push_word = |word: &mut String, sentence: &mut Vec<String>| {
            if !word.is_empty() {
                let tok = normalize(word, config);
                if !tok.is_empty() {
                    sentence.push(tok);
                }
                word.clear();
            }
        };
        for c in line.chars() {
            if c.is_whitespace() {
                push_word(&mut word, &mut sentence);
            } else if c.is_alphanumeric() || is_combining_mark(c) {
                word.push(c);
            } else {
                push_word(&mut word, &mut sentence);
                let tok = normalize(&c.to_string(), config);
                if !tok.is_empty() {
                    sentence.push(tok);
                }
            }
        }
        push_word(&mut word, &mut sentence);
        if !sentence.is_empty() {
            sentences.push(sentence);
        }
    }
    Corpus { sentences }
}

/// Builds the gold grid: for every lemma whose (form, cell) analysis is
/// corroborated by its inflection table, the full table becomes one row.
/// Slots listing several realizations keep only the one most frequent in
/// the annotations, ties going to the lexicographically smallest.
pub fn build_gold_grid(
    tuples: &[AnalysisTuple],
    tables: &InflectionTables,
) -> Result<Grid> {
    let mut attested: BTreeMap<(&str, &str, &str), u64> = BTreeMap::new();
    let mut matched: BTreeSet<&str> = BTreeSet::new();
    for t in tuples {
        *attested
            .entry((t.lemma.as_str(), t.cell.as_str(), t.form.as_str()))
            .or_insert(0) += t.count;
        if let Some(table) = tables.get(&t.lemma) {
            if let Some(forms) = table.get(&t.cell) {
                if forms.contains(&t.form) {
                    matched.insert(&t.lemma);
                }
            }
        }
    }
    if matched.is_empty() {
        return Err(Error::invalid("no gold paradigms"));
    }

    let mut rows = Vec::new();
    for (row_id, lemma) in matched.iter().enumerate() {
        let mut row = GridRow::new(row_id);
        for (cell, forms) in &tables[*lemma] {
            let count = |form: &str| {
                attested
                    .get(&(*lemma, cell.as_str(), form))
                    .copied()
                    .unwrap_or(0)
            };
            // `forms` is sorted, so scanning with a strict `>` leaves the
            // lexicographically smallest of any frequency tie in place.
            let mut best = forms[0].as_str();
            for form in &forms[1..] {
                if count(form) > count(best) {
                    best = form;
                }
            }
            row.insert(cell.clone(), best);
        }
        rows.push(row);
    }
    Ok(Grid { rows })
}

/// The lexicon is every distinct annotated form of the target POS, counted
/// over the whole corpus (annotated and raw sections alike).
pub fn build_lexicon(
    tuples: &[AnalysisTuple],
    corpus: &Corpus,
    pos: &str,
) -> Result<Lexicon> {
    let freqs = corpus.frequencies();
    let mut lexicon = Lexicon::new(pos);
    for t in tuples {
        if lexicon.contains(&t.form) {
            continue;
        }
        match freqs.get(&t.form) {
            Some(&f) if f > 0 => lexicon.insert(t.form.clone(), f),
            _ => {
                return Err(Error::invalid(format!(
                    "lexicon form {:?} does not occur in the corpus",
                    t.form
                )))
            }
        }
    }
    Ok(lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident() -> NormalizeConfig {
        NormalizeConfig::identity()
    }

    #[test]
    fn tokenize_splits_whitespace_and_trailing_punct() {
        let c = tokenize("The cat watched me.", &ident());
        assert_eq!(c.sentences, vec![vec!["The", "cat", "watched", "me", "."]]);
    }

    #[test]
    fn tokenize_empty_text_is_empty_corpus() {
        let c = tokenize("", &ident());
        assert!(c.sentences.is_empty());
        assert_eq!(c.token_count(), 0);
    }

    #[test]
    fn tokenize_splits_interior_punct() {
        let c = tokenize("watched,me", &ident());
        assert_eq!(c.sentences, vec![vec!["watched", ",", "me"]]);
    }

    #[test]
    fn tokenize_lowercases_when_configured() {
        let c = tokenize("The Cat", &NormalizeConfig::default());
        assert_eq!(c.sentences, vec![vec!["the", "cat"]]);
    }

    #[test]
    fn tokenize_one_sentence_per_line() {
        let c = tokenize("a b\n\nc\n", &ident());
        assert_eq!(c.sentences, vec![vec!["a", "b"], vec!["c"]]);
    }

    #[test]
    fn tokenize_keeps_combining_marks_with_their_letter() {
        // "cafe" + U+0301 in decomposed form, then a period.
        let c = tokenize("cafe\u{301}.", &ident());
        assert_eq!(c.sentences, vec![vec!["cafe\u{301}", "."]]);
    }

    fn tuple(form: &str, lemma: &str, cell: &str, count: u64) -> AnalysisTuple {
        AnalysisTuple {
            form: form.into(),
            lemma: lemma.into(),
            cell: cell.into(),
            count,
        }
    }

    fn watch_table() -> InflectionTables {
        let rows = "watch\twatch\tV;NFIN\n\
                    watch\twatches\tV;3;PRS;SG\n\
                    watch\twatching\tV;PRS;PTCP\n\
                    watch\twatched\tV;PST\n\
                    watch\twatched\tV;PST;PTCP\n";
        parse_inflection_tables(rows.as_bytes(), &NormalizeConfig::default())
            .unwrap()
    }

    #[test]
    fn matched_lemma_contributes_full_table_row() {
        let tuples = vec![tuple("watched", "watch", "V;PST", 1)];
        let grid = build_gold_grid(&tuples, &watch_table()).unwrap();
        assert_eq!(grid.rows.len(), 1);
        let row = &grid.rows[0];
        assert_eq!(row.slots.len(), 5);
        assert_eq!(row.slots["V;NFIN"], vec!["watch"]);
        assert_eq!(row.slots["V;PST"], vec!["watched"]);
        assert_eq!(row.slots["V;PST;PTCP"], vec!["watched"]);
    }

    #[test]
    fn unmatched_lemma_is_excluded() {
        // The analyzed cell does not carry the form listed in the table.
        let tuples = vec![tuple("watched", "watch", "V;NFIN", 1)];
        let err = build_gold_grid(&tuples, &watch_table()).unwrap_err();
        assert_eq!(err.to_string(), "no gold paradigms");
    }

    #[test]
    fn empty_tuples_error() {
        let err = build_gold_grid(&[], &watch_table()).unwrap_err();
        assert_eq!(err.to_string(), "no gold paradigms");
    }

    #[test]
    fn overabundant_slot_keeps_most_frequent() {
        let rows = "color\tcolor\tN;NOM\ncolor\tcolour\tN;NOM\n";
        let tables =
            parse_inflection_tables(rows.as_bytes(), &NormalizeConfig::default())
                .unwrap();
        let tuples = vec![
            tuple("color", "color", "N;NOM", 3),
            tuple("colour", "color", "N;NOM", 1),
        ];
        let grid = build_gold_grid(&tuples, &tables).unwrap();
        assert_eq!(grid.rows[0].slots["N;NOM"], vec!["color"]);
    }

    #[test]
    fn overabundance_tie_breaks_lexicographically() {
        let rows = "x\tbeta\tN;NOM\nx\talpha\tN;NOM\n";
        let tables =
            parse_inflection_tables(rows.as_bytes(), &NormalizeConfig::default())
                .unwrap();
        let tuples = vec![
            tuple("alpha", "x", "N;NOM", 2),
            tuple("beta", "x", "N;NOM", 2),
        ];
        let grid = build_gold_grid(&tuples, &tables).unwrap();
        assert_eq!(grid.rows[0].slots["N;NOM"], vec!["alpha"]);
    }

    #[test]
    fn gold_grid_is_deterministic() {
        let tuples = vec![
            tuple("watched", "watch", "V;PST", 1),
            tuple("watching", "watch", "V;PRS;PTCP", 1),
        ];
        let a = build_gold_grid(&tuples, &watch_table()).unwrap();
        let b = build_gold_grid(&tuples, &watch_table()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lexicon_counts_over_whole_corpus() {
        let corpus = tokenize(
            "the cat watched me watching it .\nwatched again",
            &NormalizeConfig::default(),
        );
        let tuples = vec![
            tuple("watched", "watch", "V;PST", 1),
            tuple("watching", "watch", "V;PRS;PTCP", 1),
        ];
        let lex = build_lexicon(&tuples, &corpus, "VERB").unwrap();
        assert_eq!(lex.freq("watched"), Some(2));
        assert_eq!(lex.freq("watching"), Some(1));
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.pos, "VERB");
    }

    #[test]
    fn lexicon_keeps_overabundant_variants() {
        let corpus = tokenize("color colour", &NormalizeConfig::default());
        let tuples = vec![
            tuple("color", "color", "N;NOM", 1),
            tuple("colour", "color", "N;NOM", 1),
        ];
        let lex = build_lexicon(&tuples, &corpus, "NOUN").unwrap();
        assert!(lex.contains("color") && lex.contains("colour"));
    }

    #[test]
    fn lexicon_form_missing_from_corpus_errors() {
        let corpus = tokenize("nothing here", &NormalizeConfig::default());
        let tuples = vec![tuple("watched", "watch", "V;PST", 1)];
        let err = build_lexicon(&tuples, &corpus, "VERB").unwrap_err();
        assert!(err.to_string().contains("watched"));
    }

    #[test]
    fn toy_corpus_yields_table_lexicon() {
        let raw = "The cat watched me watching it .\n\
                   I followed the show but she had n't seen it .\n\
                   Let 's see who follows your logic .\n";
        let corpus = tokenize(raw, &NormalizeConfig::default());
        let tuples = vec![
            tuple("watched", "watch", "V;PST", 1),
            tuple("watching", "watch", "V;PRS;PTCP", 1),
            tuple("followed", "follow", "V;PST", 1),
            tuple("follows", "follow", "V;3;PRS;SG", 1),
            tuple("see", "see", "V;NFIN", 1),
            tuple("seen", "see", "V;PST;PTCP", 1),
        ];
        let lex = build_lexicon(&tuples, &corpus, "VERB").unwrap();
        let forms: Vec<&str> = lex.forms().collect();
        assert_eq!(
            forms,
            vec!["followed", "follows", "see", "seen", "watched", "watching"]
        );
        for (_, freq) in lex.iter() {
            assert_eq!(freq, 1);
        }
    }
}
