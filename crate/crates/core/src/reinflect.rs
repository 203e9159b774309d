//! Filling unoccupied grid slots. Ordered within-paradigm form pairs train
//! an exponent-rewrite transducer; held-out pairs rank which source cell
//! predicts each target cell best; empty slots are then generated from the
//! most reliable attested source in their row.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridRow};
use crate::hash::derive_seed;
use crate::paradigms::{decompose, Exponent, Paradigm, SegmentPos};

/// One reinflection example: produce the target cell's form from the
/// source cell's. `target_form` is the label when training, empty at
/// inference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ReinflectionInstance {
    pub source_cell: usize,
    pub source_form: String,
    pub target_cell: usize,
    pub target_form: String,
}

/// All ordered within-paradigm pairs, split 90/10 into train and dev by
/// paradigm rather than by pair so a paradigm's base never leaks across
/// the split. The split is a seeded shuffle; output order follows the
/// input paradigm order either side.
pub fn make_pairs(
    paradigms: &[Paradigm],
    seed: u64,
) -> Result<(Vec<ReinflectionInstance>, Vec<ReinflectionInstance>)> {
    let mut multi: Vec<usize> = (0..paradigms.len())
        .filter(|&i| paradigms[i].members.len() >= 2)
        .collect();
    if multi.is_empty() {
        return Err(Error::invalid("nothing to train on"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    multi.shuffle(&mut rng);
    let dev_count = multi.len() / 10;
    let dev_ids: BTreeSet<usize> = multi[..dev_count].iter().copied().collect();

    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (i, p) in paradigms.iter().enumerate() {
        if p.members.len() < 2 {
            continue;
        }
        let out = if dev_ids.contains(&i) { &mut dev } else { &mut train };
        for (sc, sf) in &p.members {
            for (tc, tf) in &p.members {
                if sc == tc {
                    continue;
                }
                out.push(ReinflectionInstance {
                    source_cell: *sc,
                    source_form: sf.clone(),
                    target_cell: *tc,
                    target_form: tf.clone(),
                });
            }
        }
    }
    Ok((train, dev))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub source: Exponent,
    pub target: Exponent,
    pub count: u64,
}

/// Exponent-rewrite transducer: per (source cell, target cell), rules
/// mapping a source exponent to a target exponent, ranked by count then
/// lexicographically. A deterministic stand-in for a neural reinflector.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteModel {
    rules: BTreeMap<(usize, usize), Vec<RewriteRule>>,
}

impl RewriteModel {
    pub fn rules_for(&self, source_cell: usize, target_cell: usize) -> &[RewriteRule] {
        self.rules
            .get(&(source_cell, target_cell))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn cell_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rules.keys().copied()
    }
}

/// Learns rewrite rules from labeled pairs: each pair is decomposed into a
/// shared base and two exponents, and the exponent pair is counted under
/// its cell pair.
pub fn train_rewriter(train_pairs: &[ReinflectionInstance]) -> RewriteModel {
    let mut counts: BTreeMap<(usize, usize), BTreeMap<(Exponent, Exponent), u64>> =
        BTreeMap::new();
    for pair in train_pairs {
        let d = decompose(&[&pair.source_form, &pair.target_form]);
        let key = (pair.source_cell, pair.target_cell);
        let rule = (d.exponents[0].clone(), d.exponents[1].clone());
        *counts.entry(key).or_default().entry(rule).or_insert(0) += 1;
    }
    let rules = counts
        .into_iter()
        .map(|(key, by_rule)| {
            let mut ranked: Vec<RewriteRule> = by_rule
                .into_iter()
                .map(|((source, target), count)| RewriteRule { source, target, count })
                .collect();
            ranked.sort_by(|a, b| {
                b.count
                    .cmp(&a.count)
                    .then_with(|| a.source.cmp(&b.source))
                    .then_with(|| a.target.cmp(&b.target))
            });
            (key, ranked)
        })
        .collect();
    RewriteModel { rules }
}

/// Removes `x`'s segments from `form` at their claimed positions, returning
/// the residual base. `None` when the exponent does not embed consistently.
fn strip(form: &str, x: &Exponent) -> Option<String> {
    let fc: Vec<char> = form.chars().collect();
    let xlen = x.len();
    if xlen > fc.len() {
        return None;
    }
    let base_len = fc.len() - xlen;
    let mut base = String::new();
    let mut pos = 0;
    let mut base_used = 0;
    for seg in &x.segments {
        let gap = match seg.pos {
            SegmentPos::Start => 0,
            SegmentPos::Mid(g) => g,
            SegmentPos::End => base_len,
            SegmentPos::Whole => {
                if base_len != 0 {
                    return None;
                }
                0
            }
        };
        if gap < base_used || gap > base_len {
            return None;
        }
        for _ in base_used..gap {
            base.push(fc[pos]);
            pos += 1;
        }
        base_used = gap;
        for ch in seg.text.chars() {
            if pos >= fc.len() || fc[pos] != ch {
                return None;
            }
            pos += 1;
        }
    }
    for _ in base_used..base_len {
        base.push(fc[pos]);
        pos += 1;
    }
    Some(base)
}

/// Inserts `x`'s segments into `base` at their positions. `None` when a
/// segment's position does not fit this base.
fn splice(base: &str, x: &Exponent) -> Option<String> {
    let bc: Vec<char> = base.chars().collect();
    let mut out = String::new();
    let mut base_used = 0;
    for seg in &x.segments {
        let gap = match seg.pos {
            SegmentPos::Start => 0,
            SegmentPos::Mid(g) => g,
            SegmentPos::End => bc.len(),
            SegmentPos::Whole => {
                if !bc.is_empty() {
                    return None;
                }
                0
            }
        };
        if gap < base_used || gap > bc.len() {
            return None;
        }
        out.extend(&bc[base_used..gap]);
        base_used = gap;
        out.push_str(&seg.text);
    }
    out.extend(&bc[base_used..]);
    Some(out)
}

/// Reinflects `source_form` from cell `c_src` to cell `c_tgt`: among the
/// rules whose source exponent embeds in the form (and whose target fits
/// the residual base), the longest source exponent wins, with the model's
/// count-then-lexicographic ranking breaking length ties. With no usable
/// rule the form is copied unchanged, so the function is total.
pub fn apply(model: &RewriteModel, source_form: &str, c_src: usize, c_tgt: usize) -> String {
    let mut best: Option<(usize, String)> = None;
    for rule in model.rules_for(c_src, c_tgt) {
        let len = rule.source.len();
        let beats = match &best {
            None => true,
            Some((best_len, _)) => len > *best_len,
        };
        if !beats {
            continue;
        }
        if let Some(base) = strip(source_form, &rule.source) {
            if let Some(pred) = splice(&base, &rule.target) {
                best = Some((len, pred));
            }
        }
    }
    match best {
        Some((_, pred)) => pred,
        None => source_form.to_string(),
    }
}

/// Per target cell, source cells ordered by held-out exact-match accuracy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceRanking {
    by_target: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl SourceRanking {
    /// Ranked (source cell, accuracy) list; empty for an unknown target.
    pub fn sources(&self, target: usize) -> &[(usize, f64)] {
        self.by_target.get(&target).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (target, sources) in &self.by_target {
            for (source, acc) in sources {
                writeln!(w, "{target}\t{source}\t{acc}")?;
            }
        }
        Ok(())
    }
}

/// Scores every (source, target) cell pair on dev by exact match and sorts
/// each target's sources by accuracy, cell id breaking ties. Cell pairs
/// absent from dev get accuracy 0 and therefore rank last.
pub fn rank_sources(model: &RewriteModel, dev_pairs: &[ReinflectionInstance]) -> SourceRanking {
    let mut universe: BTreeSet<usize> = BTreeSet::new();
    for (s, t) in model.cell_pairs() {
        universe.insert(s);
        universe.insert(t);
    }
    for p in dev_pairs {
        universe.insert(p.source_cell);
        universe.insert(p.target_cell);
    }

    let mut stats: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for p in dev_pairs {
        let pred = apply(model, &p.source_form, p.source_cell, p.target_cell);
        let entry = stats.entry((p.source_cell, p.target_cell)).or_insert((0, 0));
        entry.1 += 1;
        if pred == p.target_form {
            entry.0 += 1;
        }
    }

    let mut by_target = BTreeMap::new();
    for &target in &universe {
        let mut sources: Vec<(usize, f64)> = universe
            .iter()
            .filter(|&&s| s != target)
            .map(|&s| {
                let acc = match stats.get(&(s, target)) {
                    Some((correct, total)) if *total > 0 => {
                        *correct as f64 / *total as f64
                    }
                    _ => 0.0,
                };
                (s, acc)
            })
            .collect();
        sources.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        by_target.insert(target, sources);
    }
    SourceRanking { by_target }
}

/// How a source cell is chosen for each empty slot.
pub enum SourcePolicy<'a> {
    /// Highest-ranked source cell attested in the row.
    Ranked(&'a SourceRanking),
    /// Uniformly random attested cell, seeded per row; an ablation that
    /// measures how much the ranking buys.
    Random { seed: u64 },
}

/// Completes every paradigm to width `k`: attested forms are kept verbatim
/// and each empty slot receives a reinflection from the chosen source.
/// Rows are independent, so they fill in parallel.
pub fn fill_grid(
    paradigms: &[Paradigm],
    model: &RewriteModel,
    policy: &SourcePolicy,
    k: usize,
) -> Grid {
    let rows: Vec<GridRow> = paradigms
        .par_iter()
        .enumerate()
        .map(|(row_id, p)| {
            let mut row = GridRow::new(row_id);
            let mut attested: BTreeMap<usize, &str> = BTreeMap::new();
            for (cell, form) in &p.members {
                row.insert(cell.to_string(), form.clone());
                attested.insert(*cell, form.as_str());
            }
            if attested.is_empty() {
                return row;
            }
            let cells: Vec<usize> = attested.keys().copied().collect();
            let mut rng = match policy {
                SourcePolicy::Random { seed } => Some(ChaCha20Rng::seed_from_u64(
                    derive_seed(*seed, "fill-row", row_id as u64),
                )),
                SourcePolicy::Ranked(_) => None,
            };
            for target in 0..k {
                if attested.contains_key(&target) {
                    continue;
                }
                let source = match policy {
                    SourcePolicy::Ranked(ranking) => ranking
                        .sources(target)
                        .iter()
                        .map(|(s, _)| *s)
                        .find(|s| attested.contains_key(s))
                        .unwrap_or(cells[0]),
                    SourcePolicy::Random { .. } => {
                        let rng = rng.as_mut().expect("rng set for random policy");
                        cells[rng.random_range(0..cells.len())]
                    }
                };
                let pred = apply(model, attested[&source], source, target);
                row.insert_predicted(target.to_string(), pred);
            }
            row
        })
        .collect();
    Grid { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paradigms::Segment;

    fn paradigm(members: &[(usize, &str)]) -> Paradigm {
        Paradigm {
            members: members.iter().map(|(c, f)| (*c, f.to_string())).collect(),
        }
    }

    fn end(text: &str) -> Exponent {
        Exponent {
            segments: vec![Segment { pos: SegmentPos::End, text: text.into() }],
        }
    }

    #[test]
    fn pairs_enumerate_both_directions() {
        let (train, dev) = make_pairs(&[paradigm(&[(1, "a"), (2, "b")])], 7).unwrap();
        assert!(dev.is_empty());
        assert_eq!(
            train,
            vec![
                ReinflectionInstance {
                    source_cell: 1,
                    source_form: "a".into(),
                    target_cell: 2,
                    target_form: "b".into(),
                },
                ReinflectionInstance {
                    source_cell: 2,
                    source_form: "b".into(),
                    target_cell: 1,
                    target_form: "a".into(),
                },
            ]
        );
    }

    #[test]
    fn pair_count_is_m_times_m_minus_one() {
        let p = paradigm(&[(0, "a"), (1, "b"), (2, "c"), (3, "d")]);
        let (train, dev) = make_pairs(&[p], 7).unwrap();
        assert_eq!(train.len() + dev.len(), 12);
    }

    #[test]
    fn split_is_deterministic_and_by_paradigm() {
        let paradigms: Vec<Paradigm> = (0..20)
            .map(|i| paradigm(&[(0, &format!("s{i}a")), (1, &format!("s{i}b"))]))
            .collect();
        let (train1, dev1) = make_pairs(&paradigms, 42).unwrap();
        let (train2, dev2) = make_pairs(&paradigms, 42).unwrap();
        assert_eq!(train1, train2);
        assert_eq!(dev1, dev2);
        assert_eq!(dev1.len(), 2 * 2);
        assert_eq!(train1.len(), 18 * 2);
        // Both directions of a paradigm land on the same side.
        for side in [&train1, &dev1] {
            for pair in side.iter() {
                let flipped = ReinflectionInstance {
                    source_cell: pair.target_cell,
                    source_form: pair.target_form.clone(),
                    target_cell: pair.source_cell,
                    target_form: pair.source_form.clone(),
                };
                assert!(side.contains(&flipped));
            }
        }
    }

    #[test]
    fn singletons_only_is_an_error() {
        let err = make_pairs(&[paradigm(&[(0, "solo")])], 7).unwrap_err();
        assert!(err.to_string().contains("nothing to train on"));
    }

    #[test]
    fn training_extracts_suffix_rewrite_rules() {
        let (train, _) =
            make_pairs(&[paradigm(&[(1, "watched"), (4, "watching")])], 7).unwrap();
        let model = train_rewriter(&train);
        let rules = model.rules_for(1, 4);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].source, end("ed"));
        assert_eq!(rules[0].target, end("ing"));
        assert_eq!(rules[0].count, 1);
        assert_eq!(model.rules_for(4, 1)[0].source, end("ing"));
    }

    #[test]
    fn rules_rank_by_count_then_lexicographic() {
        let mut pairs = Vec::new();
        let mk = |sf: &str, tf: &str| ReinflectionInstance {
            source_cell: 0,
            source_form: sf.into(),
            target_cell: 1,
            target_form: tf.into(),
        };
        for _ in 0..3 {
            pairs.push(mk("walked", "walking"));
        }
        pairs.push(mk("went", "gone"));
        // Same count as the "went" rule; smaller source exponent.
        pairs.push(mk("bent", "bone"));
        let model = train_rewriter(&pairs);
        let rules = model.rules_for(0, 1);
        assert_eq!(rules[0].source, end("ed"));
        assert_eq!(rules[0].count, 3);
        assert!(rules[1].source < rules[2].source);
        assert!(rules[1..].iter().all(|r| r.count == 1));
    }

    #[test]
    fn retraining_is_deterministic() {
        let (train, _) = make_pairs(
            &[
                paradigm(&[(0, "walked"), (1, "walking")]),
                paradigm(&[(0, "talked"), (1, "talking")]),
            ],
            7,
        )
        .unwrap();
        assert_eq!(train_rewriter(&train), train_rewriter(&train));
    }

    #[test]
    fn apply_rewrites_suffix() {
        let (train, _) =
            make_pairs(&[paradigm(&[(0, "watched"), (1, "watching")])], 7).unwrap();
        let model = train_rewriter(&train);
        assert_eq!(apply(&model, "followed", 0, 1), "following");
        assert_eq!(apply(&model, "following", 1, 0), "followed");
    }

    #[test]
    fn apply_copies_when_no_rule_matches() {
        let (train, _) =
            make_pairs(&[paradigm(&[(0, "watched"), (1, "watching")])], 7).unwrap();
        let model = train_rewriter(&train);
        // "walk" does not end in "ed", and the (1, 0) direction is the
        // only other trained pair.
        assert_eq!(apply(&model, "walk", 0, 1), "walk");
        assert_eq!(apply(&model, "walk", 5, 6), "walk");
    }

    #[test]
    fn empty_source_exponent_attaches_suffix() {
        let (train, _) = make_pairs(&[paradigm(&[(0, "see"), (1, "sees")])], 7).unwrap();
        let model = train_rewriter(&train);
        assert_eq!(model.rules_for(0, 1)[0].source, Exponent::default());
        assert_eq!(apply(&model, "walk", 0, 1), "walks");
    }

    #[test]
    fn prefix_rule_splices_at_word_start() {
        let (train, _) =
            make_pairs(&[paradigm(&[(0, "spielt"), (1, "gespielt")])], 7).unwrap();
        let model = train_rewriter(&train);
        assert_eq!(apply(&model, "kauft", 0, 1), "gekauft");
    }

    #[test]
    fn interior_segment_is_position_anchored() {
        let (train, _) = make_pairs(&[paradigm(&[(0, "fuß"), (1, "füße")])], 7).unwrap();
        let model = train_rewriter(&train);
        let rule = &model.rules_for(0, 1)[0];
        assert_eq!(rule.source.segments[0].pos, SegmentPos::Mid(1));
        assert_eq!(apply(&model, "fuß", 0, 1), "füße");
        // The interior vowel sits at a different offset here, so the rule
        // cannot embed and the form is copied.
        assert_eq!(apply(&model, "grus", 0, 1), "grus");
    }

    #[test]
    fn longest_matching_source_wins_over_count() {
        let mut pairs = Vec::new();
        for _ in 0..5 {
            pairs.push(ReinflectionInstance {
                source_cell: 0,
                source_form: "aa".into(),
                target_cell: 1,
                target_form: "aax".into(),
            });
        }
        pairs.push(ReinflectionInstance {
            source_cell: 0,
            source_form: "walked".into(),
            target_cell: 1,
            target_form: "walking".into(),
        });
        let model = train_rewriter(&pairs);
        assert_eq!(model.rules_for(0, 1)[0].source, Exponent::default());
        assert_eq!(apply(&model, "talked", 0, 1), "talking");
        assert_eq!(apply(&model, "hopp", 0, 1), "hoppx");
    }

    #[test]
    fn ranking_orders_sources_by_dev_accuracy() {
        // With no trained rules apply() copies, so a dev pair is correct
        // exactly when target equals source.
        let mk = |sc: usize, sf: &str, tc: usize, tf: &str| ReinflectionInstance {
            source_cell: sc,
            source_form: sf.into(),
            target_cell: tc,
            target_form: tf.into(),
        };
        let dev = vec![
            mk(2, "a", 5, "a"),
            mk(2, "b", 5, "b"),
            mk(2, "c", 5, "c"),
            mk(2, "d", 5, "x"),
            mk(1, "a", 5, "a"),
            mk(1, "b", 5, "y"),
            mk(1, "c", 5, "z"),
            mk(1, "d", 5, "w"),
        ];
        let ranking = rank_sources(&RewriteModel::default(), &dev);
        let sources = ranking.sources(5);
        assert_eq!(sources[0], (2, 0.75));
        assert_eq!(sources[1], (1, 0.25));
    }

    #[test]
    fn unseen_cell_pairs_rank_last_with_zero_accuracy() {
        let (train, _) = make_pairs(
            &[paradigm(&[(0, "walked"), (1, "walking"), (2, "walks")])],
            7,
        )
        .unwrap();
        let model = train_rewriter(&train);
        let dev = vec![ReinflectionInstance {
            source_cell: 1,
            source_form: "talking".into(),
            target_cell: 2,
            target_form: "talks".into(),
        }];
        let ranking = rank_sources(&model, &dev);
        let sources = ranking.sources(2);
        assert_eq!(sources[0], (1, 1.0));
        assert_eq!(sources[1], (0, 0.0));
        // Every cell known to the model appears in every target's ranking.
        for target in 0..3 {
            let listed: BTreeSet<usize> =
                ranking.sources(target).iter().map(|(s, _)| *s).collect();
            let expect: BTreeSet<usize> =
                (0..3).filter(|&c| c != target).collect();
            assert_eq!(listed, expect);
        }
    }

    #[test]
    fn single_source_ranks_trivially() {
        let dev = vec![ReinflectionInstance {
            source_cell: 2,
            source_form: "a".into(),
            target_cell: 5,
            target_form: "a".into(),
        }];
        let ranking = rank_sources(&RewriteModel::default(), &dev);
        assert_eq!(ranking.sources(5), &[(2, 1.0)]);
    }

    #[test]
    fn fill_completes_singleton_to_width() {
        let (train, _) = make_pairs(
            &[paradigm(&[(0, "followed"), (1, "following")])],
            7,
        )
        .unwrap();
        let model = train_rewriter(&train);
        let ranking = rank_sources(&model, &[]);
        let grid = fill_grid(
            &[paradigm(&[(0, "watched")])],
            &model,
            &SourcePolicy::Ranked(&ranking),
            3,
        );
        assert_eq!(grid.rows.len(), 1);
        let row = &grid.rows[0];
        assert_eq!(row.slots.len(), 1);
        assert_eq!(row.predicted.len(), 2);
        assert_eq!(row.cell_forms("1"), vec!["watching"]);
        // No rule for (0, 2): the source form is copied.
        assert_eq!(row.cell_forms("2"), vec!["watched"]);
    }

    #[test]
    fn fill_keeps_attested_rows_unchanged() {
        let (train, _) =
            make_pairs(&[paradigm(&[(0, "walked"), (1, "walking")])], 7).unwrap();
        let model = train_rewriter(&train);
        let ranking = rank_sources(&model, &[]);
        let p = paradigm(&[(0, "seed"), (1, "sawing")]);
        let grid = fill_grid(&[p], &model, &SourcePolicy::Ranked(&ranking), 2);
        let row = &grid.rows[0];
        assert!(row.predicted.is_empty());
        assert_eq!(row.cell_forms("0"), vec!["seed"]);
        assert_eq!(row.cell_forms("1"), vec!["sawing"]);
    }

    #[test]
    fn fill_uses_highest_ranked_attested_source() {
        // Target 2 prefers source 1, which rewrites ing -> s; source 0
        // would rewrite ed -> x. Both are attested, so rank must decide.
        let train = vec![
            ReinflectionInstance {
                source_cell: 1,
                source_form: "walking".into(),
                target_cell: 2,
                target_form: "walks".into(),
            },
            ReinflectionInstance {
                source_cell: 0,
                source_form: "walked".into(),
                target_cell: 2,
                target_form: "walkx".into(),
            },
        ];
        let model = train_rewriter(&train);
        let dev = vec![
            ReinflectionInstance {
                source_cell: 1,
                source_form: "talking".into(),
                target_cell: 2,
                target_form: "talks".into(),
            },
            ReinflectionInstance {
                source_cell: 0,
                source_form: "talked".into(),
                target_cell: 2,
                target_form: "talky".into(),
            },
        ];
        let ranking = rank_sources(&model, &dev);
        assert_eq!(ranking.sources(2)[0].0, 1);
        let p = paradigm(&[(0, "jumped"), (1, "jumping")]);
        let grid = fill_grid(&[p], &model, &SourcePolicy::Ranked(&ranking), 3);
        assert_eq!(grid.rows[0].cell_forms("2"), vec!["jumps"]);
    }

    #[test]
    fn fill_dimensions_cover_every_cell() {
        let paradigms = vec![
            paradigm(&[(0, "walked"), (1, "walking")]),
            paradigm(&[(2, "sees")]),
            paradigm(&[(1, "going"), (3, "goes")]),
        ];
        let (train, _) = make_pairs(&paradigms, 7).unwrap();
        let model = train_rewriter(&train);
        let ranking = rank_sources(&model, &[]);
        let k = 4;
        let grid = fill_grid(&paradigms, &model, &SourcePolicy::Ranked(&ranking), k);
        assert_eq!(grid.rows.len(), paradigms.len());
        for (i, row) in grid.rows.iter().enumerate() {
            assert_eq!(row.row_id, i);
            for cell in 0..k {
                assert!(
                    !row.cell_forms(&cell.to_string()).is_empty(),
                    "row {i} cell {cell} left empty"
                );
            }
        }
    }

    #[test]
    fn random_sources_are_reproducible_and_attested() {
        let paradigms = vec![
            paradigm(&[(0, "walked"), (1, "walking")]),
            paradigm(&[(0, "talked"), (1, "talking")]),
            paradigm(&[(0, "jumped"), (1, "jumping")]),
        ];
        let model = RewriteModel::default();
        let a = fill_grid(&paradigms, &model, &SourcePolicy::Random { seed: 9 }, 4);
        let b = fill_grid(&paradigms, &model, &SourcePolicy::Random { seed: 9 }, 4);
        assert_eq!(a, b);
        // With no rules, every prediction copies some attested form.
        for row in &a.rows {
            let attested = row.attested_forms();
            for forms in row.predicted.values() {
                for f in forms {
                    assert!(attested.contains(f.as_str()));
                }
            }
        }
    }

    #[test]
    fn toy_corpus_rules_predict_watching() {
        // Rules learned from the follow paradigm carry over to the watch
        // paradigm, whose progressive slot is unattested.
        let discovered = vec![
            paradigm(&[(0, "followed"), (1, "following")]),
            paradigm(&[(0, "watched")]),
        ];
        let (train, _) = make_pairs(&discovered, 7).unwrap();
        let model = train_rewriter(&train);
        let ranking = rank_sources(&model, &[]);
        let grid =
            fill_grid(&discovered, &model, &SourcePolicy::Ranked(&ranking), 2);
        assert_eq!(grid.rows[1].cell_forms("1"), vec!["watching"]);
    }
}
