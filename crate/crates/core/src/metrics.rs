//! Grid evaluation. Clustering quality is measured by best-friend style
//! mate retrieval (same row, same column) macro-averaged over lexicon
//! forms; generation quality by four-way analogies sampled from the gold
//! grid and by lexicon expansion. Row and column labels never matter, only
//! co-occupancy, so predicted grids need no alignment to gold.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::Lexicon;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MateMode {
    /// Forms sharing a row (same paradigm).
    Paradigm,
    /// Forms sharing a column (same cell).
    Cell,
}

/// Row and column occupancy sets for one grid, built once per evaluation.
struct GridView {
    index: GridIndex,
    rows: Vec<BTreeSet<String>>,
    cols: BTreeMap<String, BTreeSet<String>>,
}

impl GridView {
    fn build(grid: &Grid) -> Self {
        let index = GridIndex::build(grid);
        let rows = grid
            .rows
            .iter()
            .map(|r| r.all_forms().into_iter().map(str::to_string).collect())
            .collect();
        let mut cols: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for row in &grid.rows {
            for (cell, forms) in row.slots.iter().chain(row.predicted.iter()) {
                cols.entry(cell.clone()).or_default().extend(forms.iter().cloned());
            }
        }
        GridView { index, rows, cols }
    }

    fn mates(&self, form: &str, mode: MateMode, lexicon: &Lexicon) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = BTreeSet::new();
        match mode {
            MateMode::Paradigm => {
                if let Some(rows) = self.index.rows(form) {
                    for &ri in rows {
                        out.extend(self.rows[ri].iter().cloned());
                    }
                }
            }
            MateMode::Cell => {
                if let Some(cells) = self.index.cells(form) {
                    for cell in cells {
                        out.extend(self.cols[cell].iter().cloned());
                    }
                }
            }
        }
        out.remove(form);
        out.retain(|f| lexicon.contains(f));
        out
    }
}

/// Lexicon forms co-occupying a row (paradigm mode) or column (cell mode)
/// with `form`, over all its occurrences; the form itself is excluded. A
/// form absent from the grid has no mates.
pub fn mates(
    grid: &Grid,
    form: &str,
    mode: MateMode,
    lexicon: &Lexicon,
) -> BTreeSet<String> {
    GridView::build(grid).mates(form, mode, lexicon)
}

/// Set-retrieval F1. Empty versus empty is a correct retrieval (1.0);
/// empty versus nonempty scores 0 either way around.
pub fn f_score(predicted: &BTreeSet<String>, gold: &BTreeSet<String>) -> f64 {
    if predicted.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if predicted.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let hits = predicted.intersection(gold).count();
    2.0 * hits as f64 / (predicted.len() + gold.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerFormScore {
    pub form: String,
    pub f_par: f64,
    pub f_cell: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdpScores {
    pub f_par: f64,
    pub f_cell: f64,
    pub f_grid: f64,
    pub per_form: Vec<PerFormScore>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Macro-averaged paradigm and cell mate F1 over the forms shared by the
/// lexicon and the gold grid, plus their harmonic mean.
pub fn pdp_scores(pred: &Grid, gold: &Grid, lexicon: &Lexicon) -> Result<PdpScores> {
    let gold_view = GridView::build(gold);
    let pred_view = GridView::build(pred);
    let eval_forms: Vec<&str> = lexicon
        .forms()
        .filter(|f| gold_view.index.contains(f))
        .collect();
    if eval_forms.is_empty() {
        return Err(Error::invalid(
            "no evaluation forms: lexicon and gold grid share no forms",
        ));
    }
    let mut per_form = Vec::with_capacity(eval_forms.len());
    let (mut sum_par, mut sum_cell) = (0.0, 0.0);
    for form in &eval_forms {
        let f_par = f_score(
            &pred_view.mates(form, MateMode::Paradigm, lexicon),
            &gold_view.mates(form, MateMode::Paradigm, lexicon),
        );
        let f_cell = f_score(
            &pred_view.mates(form, MateMode::Cell, lexicon),
            &gold_view.mates(form, MateMode::Cell, lexicon),
        );
        sum_par += f_par;
        sum_cell += f_cell;
        per_form.push(PerFormScore { form: form.to_string(), f_par, f_cell });
    }
    let n = eval_forms.len() as f64;
    let f_par = sum_par / n;
    let f_cell = sum_cell / n;
    Ok(PdpScores { f_par, f_cell, f_grid: harmonic(f_par, f_cell), per_form })
}

/// A four-way analogy drawn from the gold grid: f1 : f2 :: f3 : f4, with
/// f1, f2, f3 lexicon-attested and f4 unattested. Provenance records the
/// witnessing rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyInstance {
    pub f1: String,
    pub f2: String,
    pub f3: String,
    pub f4: String,
    pub row_a: usize,
    pub row_b: usize,
    pub col_13: String,
    pub col_24: String,
}

/// Checks every structural invariant of one instance against the gold
/// grid and lexicon, naming the first violation.
pub fn validate_instance(
    gold: &Grid,
    lexicon: &Lexicon,
    inst: &AnalogyInstance,
) -> Result<()> {
    let fail = |msg: &str| Err(Error::invalid(format!("analogy instance: {msg}")));
    if inst.f1 == inst.f2 {
        return fail("f1 and f2 must differ");
    }
    if inst.f3 == inst.f4 {
        return fail("f3 and f4 must differ");
    }
    for (name, form, attested) in [
        ("f1", &inst.f1, true),
        ("f2", &inst.f2, true),
        ("f3", &inst.f3, true),
        ("f4", &inst.f4, false),
    ] {
        if lexicon.contains(form) != attested {
            return fail(&format!(
                "{name} must be {} in the lexicon",
                if attested { "attested" } else { "unattested" }
            ));
        }
    }
    let row = |ri: usize| -> Result<BTreeSet<&str>> {
        gold.rows
            .get(ri)
            .map(|r| r.all_forms())
            .ok_or_else(|| Error::invalid(format!("analogy instance: no row {ri}")))
    };
    let row_a = row(inst.row_a)?;
    let row_b = row(inst.row_b)?;
    if !row_a.contains(inst.f1.as_str()) || !row_a.contains(inst.f2.as_str()) {
        return fail("f1 and f2 must share the witnessing row");
    }
    if !row_b.contains(inst.f3.as_str()) || !row_b.contains(inst.f4.as_str()) {
        return fail("f3 and f4 must share the witnessing row");
    }
    let index = GridIndex::build(gold);
    let in_col = |form: &str, col: &str| {
        index.cells(form).is_some_and(|cells| cells.contains(col))
    };
    if !in_col(&inst.f1, &inst.col_13) || !in_col(&inst.f3, &inst.col_13) {
        return fail("f1 and f3 must share the witnessing column");
    }
    if !in_col(&inst.f2, &inst.col_24) || !in_col(&inst.f4, &inst.col_24) {
        return fail("f2 and f4 must share the witnessing column");
    }
    Ok(())
}

/// Enumerates every valid analogy instance in the gold grid, then takes a
/// seeded uniform sample of `n` without replacement. When fewer than `n`
/// exist they are all returned, with a warning.
pub fn sample_analogies(
    gold: &Grid,
    lexicon: &Lexicon,
    n: usize,
    seed: u64,
) -> Result<Vec<AnalogyInstance>> {
    let index = GridIndex::build(gold);
    let row_forms: Vec<Vec<&str>> = gold
        .rows
        .iter()
        .map(|r| r.all_forms().into_iter().collect())
        .collect();

    type Tuple = (String, String, String, String);
    let mut found: BTreeMap<Tuple, AnalogyInstance> = BTreeMap::new();
    let shared_col = |a: &str, b: &str| -> Option<String> {
        let ca = index.cells(a)?;
        let cb = index.cells(b)?;
        ca.intersection(cb).next().map(|c| c.to_string())
    };
    for (ra, forms_a) in row_forms.iter().enumerate() {
        for f1 in forms_a.iter().filter(|f| lexicon.contains(f)) {
            for f2 in forms_a.iter().filter(|f| lexicon.contains(f)) {
                if f1 == f2 {
                    continue;
                }
                for (rb, forms_b) in row_forms.iter().enumerate() {
                    for f3 in forms_b.iter().filter(|f| lexicon.contains(f)) {
                        let Some(col_13) = shared_col(f1, f3) else {
                            continue;
                        };
                        for f4 in forms_b.iter().filter(|f| !lexicon.contains(f)) {
                            let Some(col_24) = shared_col(f2, f4) else {
                                continue;
                            };
                            let key = (
                                f1.to_string(),
                                f2.to_string(),
                                f3.to_string(),
                                f4.to_string(),
                            );
                            found.entry(key).or_insert_with(|| AnalogyInstance {
                                f1: f1.to_string(),
                                f2: f2.to_string(),
                                f3: f3.to_string(),
                                f4: f4.to_string(),
                                row_a: ra,
                                row_b: rb,
                                col_13: col_13.clone(),
                                col_24,
                            });
                        }
                    }
                }
            }
        }
    }
    if found.is_empty() {
        return Err(Error::invalid(
            "no valid analogy instances: the gold grid has no reachable unattested forms",
        ));
    }
    let mut instances: Vec<AnalogyInstance> = found.into_values().collect();
    if instances.len() < n {
        log::warn!(
            "only {} analogy instances exist, fewer than the {} requested",
            instances.len(),
            n
        );
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    instances.shuffle(&mut rng);
    instances.truncate(n);
    Ok(instances)
}

pub fn write_instances_tsv<W: Write>(
    instances: &[AnalogyInstance],
    mut w: W,
) -> Result<()> {
    for i in instances {
        writeln!(w, "{}\t{}\t{}\t{}", i.f1, i.f2, i.f3, i.f4)?;
    }
    Ok(())
}

/// Fraction of instances whose four relations all hold in the predicted
/// grid: f1/f2 row mates, f3/f4 row mates, f1/f3 column mates, f2/f4
/// column mates. Each relation may be witnessed by any occurrence,
/// independently of the others.
pub fn analogy_accuracy(instances: &[AnalogyInstance], pred: &Grid) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let index = GridIndex::build(pred);
    let correct = instances
        .iter()
        .filter(|i| {
            index.share_row(&i.f1, &i.f2)
                && index.share_row(&i.f3, &i.f4)
                && index.share_cell(&i.f1, &i.f3)
                && index.share_cell(&i.f2, &i.f4)
        })
        .count();
    correct as f64 / instances.len() as f64
}

/// Stricter variant: the four relations must be witnessed by one joint
/// placement, a single row pair and column pair with f1 at (row a, col 1),
/// f2 at (row a, col 2), f3 at (row b, col 1), f4 at (row b, col 2).
pub fn analogy_accuracy_joint(instances: &[AnalogyInstance], pred: &Grid) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let mut slots: BTreeMap<(usize, &str), BTreeSet<&str>> = BTreeMap::new();
    for (ri, row) in pred.rows.iter().enumerate() {
        for (cell, forms) in row.slots.iter().chain(row.predicted.iter()) {
            slots
                .entry((ri, cell.as_str()))
                .or_default()
                .extend(forms.iter().map(|f| f.as_str()));
        }
    }
    let index = GridIndex::build(pred);
    let empty = BTreeSet::new();
    let holds = |inst: &AnalogyInstance| -> bool {
        let (Some(rows_a), Some(rows_b)) =
            (index.rows(&inst.f1), index.rows(&inst.f3))
        else {
            return false;
        };
        let (Some(cols_1), Some(cols_2)) =
            (index.cells(&inst.f1), index.cells(&inst.f2))
        else {
            return false;
        };
        for &ra in rows_a {
            for &rb in rows_b {
                for c1 in cols_1 {
                    for c2 in cols_2 {
                        let at = |ri: usize, cell: &str, form: &str| {
                            slots
                                .get(&(ri, cell))
                                .unwrap_or(&empty)
                                .contains(form)
                        };
                        if at(ra, c1, &inst.f1)
                            && at(ra, c2, &inst.f2)
                            && at(rb, c1, &inst.f3)
                            && at(rb, c2, &inst.f4)
                        {
                            return true;
                        }
                    }
                }
            }
        }
        false
    };
    let correct = instances.iter().filter(|i| holds(i)).count();
    correct as f64 / instances.len() as f64
}

/// Fraction of instances whose held-out form f4 appears anywhere in the
/// predicted grid. Never below the analogy accuracy: a correct analogy
/// needs f4 in some slot.
pub fn lexicon_expansion(instances: &[AnalogyInstance], pred: &Grid) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let index = GridIndex::build(pred);
    let correct = instances.iter().filter(|i| index.contains(&i.f4)).count();
    correct as f64 / instances.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f_par: f64,
    pub f_cell: f64,
    pub f_grid: f64,
    pub analogy: f64,
    pub lexicon_expansion: f64,
    pub per_form: Vec<PerFormScore>,
}

impl MetricsReport {
    /// Aligned plain-text table of the five headline metrics.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let rows = [
            ("F_par", self.f_par),
            ("F_cell", self.f_cell),
            ("F_grid", self.f_grid),
            ("analogy", self.analogy),
            ("lexicon_expansion", self.lexicon_expansion),
        ];
        let _ = writeln!(out, "{:<20}{:>8}", "metric", "value");
        for (name, value) in rows {
            let _ = writeln!(out, "{name:<20}{value:>8.4}");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub analogy_n: usize,
    pub seed: u64,
    /// Require one joint slot placement per analogy instead of the four
    /// independent relations.
    pub joint_analogy: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { analogy_n: 2000, seed: 1, joint_analogy: false }
    }
}

/// Full evaluation of a predicted grid against gold: mate-retrieval scores
/// plus analogy and lexicon-expansion accuracy over one sampled instance
/// set.
pub fn evaluate(
    pred: &Grid,
    gold: &Grid,
    lexicon: &Lexicon,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let pdp = pdp_scores(pred, gold, lexicon)?;
    let instances = sample_analogies(gold, lexicon, opts.analogy_n, opts.seed)?;
    let analogy = if opts.joint_analogy {
        analogy_accuracy_joint(&instances, pred)
    } else {
        analogy_accuracy(&instances, pred)
    };
    Ok(MetricsReport {
        f_par: pdp.f_par,
        f_cell: pdp.f_cell,
        f_grid: pdp.f_grid,
        analogy,
        lexicon_expansion: lexicon_expansion(&instances, pred),
        per_form: pdp.per_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridRow;

    fn set(forms: &[&str]) -> BTreeSet<String> {
        forms.iter().map(|f| f.to_string()).collect()
    }

    fn toy_lexicon() -> Lexicon {
        let mut lex = Lexicon::new("V");
        for form in ["watched", "watching", "followed", "follows", "see", "seen"] {
            lex.insert(form, 1);
        }
        lex
    }

    /// Three five-cell paradigms; syncretic past forms fill both past
    /// columns, exactly as an inflection table lists them.
    fn toy_gold_full() -> Grid {
        let mut watch = GridRow::new(0);
        watch.insert("PRS", "watch");
        watch.insert("PRS;3SG", "watches");
        watch.insert("PROG", "watching");
        watch.insert("PST", "watched");
        watch.insert("PST;PTCP", "watched");
        let mut follow = GridRow::new(1);
        follow.insert("PRS", "follow");
        follow.insert("PRS;3SG", "follows");
        follow.insert("PROG", "following");
        follow.insert("PST", "followed");
        follow.insert("PST;PTCP", "followed");
        let mut see = GridRow::new(2);
        see.insert("PRS", "see");
        see.insert("PRS;3SG", "sees");
        see.insert("PROG", "seeing");
        see.insert("PST", "saw");
        see.insert("PST;PTCP", "seen");
        Grid { rows: vec![watch, follow, see] }
    }

    /// Same grid with each syncretic past placed only in its
    /// corpus-attested column, the convention behind the worked
    /// mate-retrieval numbers.
    fn toy_gold_reduced() -> Grid {
        let mut grid = toy_gold_full();
        for row in &mut grid.rows[..2] {
            row.slots.remove("PST;PTCP");
        }
        grid
    }

    /// The system-output fixture: four discovered paradigms over four
    /// cells, with unattested slots filled by reinflection.
    fn toy_predicted() -> Grid {
        let rows = [
            (vec![("0", "watched"), ("1", "watching")], vec![("2", "watches"), ("3", "watch")]),
            (vec![("0", "followed"), ("2", "follows")], vec![("1", "following"), ("3", "follow")]),
            (vec![("3", "see")], vec![("0", "seed"), ("1", "seeing"), ("2", "sees")]),
            (vec![("3", "seen")], vec![("0", "seened"), ("1", "seening"), ("2", "seens")]),
        ];
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, (attested, predicted))| {
                let mut row = GridRow::new(i);
                for (cell, form) in attested {
                    row.insert(*cell, *form);
                }
                for (cell, form) in predicted {
                    row.insert_predicted(*cell, *form);
                }
                row
            })
            .collect();
        Grid { rows }
    }

    #[test]
    fn f_score_conventions() {
        assert_eq!(f_score(&set(&["watching"]), &set(&["watching"])), 1.0);
        assert_eq!(f_score(&set(&[]), &set(&["seen"])), 0.0);
        assert_eq!(f_score(&set(&["seen"]), &set(&[])), 0.0);
        assert_eq!(f_score(&set(&[]), &set(&[])), 1.0);
        assert_eq!(f_score(&set(&["a", "b"]), &set(&["b", "c"])), 0.5);
    }

    #[test]
    fn paradigm_mates_restrict_to_lexicon() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        assert_eq!(
            mates(&gold, "watched", MateMode::Paradigm, &lex),
            set(&["watching"])
        );
        assert_eq!(mates(&gold, "see", MateMode::Paradigm, &lex), set(&["seen"]));
        assert_eq!(mates(&gold, "absent", MateMode::Paradigm, &lex), set(&[]));
    }

    #[test]
    fn cell_mates_union_across_syncretic_columns() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        // watched sits in both past columns; its mates come from both.
        assert_eq!(
            mates(&gold, "watched", MateMode::Cell, &lex),
            set(&["followed", "seen"])
        );
        // In the reduced grid only the attested column remains.
        assert_eq!(
            mates(&toy_gold_reduced(), "watched", MateMode::Cell, &lex),
            set(&["followed"])
        );
    }

    #[test]
    fn pdp_scores_match_worked_toy_numbers() {
        let scores =
            pdp_scores(&toy_predicted(), &toy_gold_reduced(), &toy_lexicon()).unwrap();
        let two_thirds = 2.0 / 3.0;
        assert!((scores.f_par - two_thirds).abs() < 1e-12, "F_par {}", scores.f_par);
        assert!((scores.f_cell - two_thirds).abs() < 1e-12);
        assert!((scores.f_grid - two_thirds).abs() < 1e-12);
        let by_form: BTreeMap<&str, (f64, f64)> = scores
            .per_form
            .iter()
            .map(|p| (p.form.as_str(), (p.f_par, p.f_cell)))
            .collect();
        assert_eq!(by_form["watched"], (1.0, 1.0));
        assert_eq!(by_form["see"], (0.0, 0.0));
        assert_eq!(by_form["seen"], (0.0, 0.0));
        assert_eq!(by_form["follows"], (1.0, 1.0));
    }

    #[test]
    fn identical_grids_score_one() {
        let gold = toy_gold_reduced();
        let scores = pdp_scores(&gold, &gold, &toy_lexicon()).unwrap();
        assert_eq!((scores.f_par, scores.f_cell, scores.f_grid), (1.0, 1.0, 1.0));
    }

    #[test]
    fn singleton_prediction_scores_match_hand_computation() {
        let lex = toy_lexicon();
        let rows = lex
            .forms()
            .enumerate()
            .map(|(i, form)| {
                let mut row = GridRow::new(i);
                row.insert(i.to_string(), form);
                row
            })
            .collect();
        let pred = Grid { rows };
        let scores = pdp_scores(&pred, &toy_gold_reduced(), &lex).unwrap();
        assert_eq!(scores.f_par, 0.0);
        assert!((scores.f_cell - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(scores.f_grid, 0.0);
    }

    #[test]
    fn empty_evaluation_set_is_an_error() {
        let mut lex = Lexicon::new("V");
        lex.insert("unrelated", 1);
        let err = pdp_scores(&toy_predicted(), &toy_gold_reduced(), &lex).unwrap_err();
        assert!(err.to_string().contains("no evaluation forms"));
    }

    #[test]
    fn sampling_finds_the_paper_analogy() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        let instances = sample_analogies(&gold, &lex, 10_000, 1).unwrap();
        assert!(instances.iter().any(|i| (
            i.f1.as_str(),
            i.f2.as_str(),
            i.f3.as_str(),
            i.f4.as_str()
        ) == ("watched", "watching", "seen", "seeing")));
        for inst in &instances {
            validate_instance(&gold, &lex, inst).unwrap();
        }
    }

    #[test]
    fn sampling_is_seeded_and_truncates() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        let a = sample_analogies(&gold, &lex, 3, 9).unwrap();
        let b = sample_analogies(&gold, &lex, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let all = sample_analogies(&gold, &lex, 10_000, 9).unwrap();
        let rerun = sample_analogies(&gold, &lex, 10_000, 9).unwrap();
        assert_eq!(all, rerun);
        assert!(all.len() < 10_000);
    }

    #[test]
    fn fully_attested_grid_has_no_instances() {
        let mut row = GridRow::new(0);
        row.insert("a", "x");
        row.insert("b", "y");
        let grid = Grid { rows: vec![row] };
        let mut lex = Lexicon::new("V");
        lex.insert("x", 1);
        lex.insert("y", 1);
        let err = sample_analogies(&grid, &lex, 5, 1).unwrap_err();
        assert!(err.to_string().contains("no valid analogy instances"));
    }

    #[test]
    fn validator_rejects_corrupted_instances() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        let good = sample_analogies(&gold, &lex, 10_000, 1)
            .unwrap()
            .into_iter()
            .find(|i| i.f1 == "watched" && i.f3 == "seen" && i.f2 == "watching")
            .unwrap();
        let mut bad = good.clone();
        bad.f4 = "watching".into(); // attested
        assert!(validate_instance(&gold, &lex, &bad).is_err());
        let mut bad = good.clone();
        bad.f2 = bad.f1.clone();
        assert!(validate_instance(&gold, &lex, &bad).is_err());
        let mut bad = good.clone();
        bad.col_13 = "PROG".into(); // watched does not sit in PROG
        assert!(validate_instance(&gold, &lex, &bad).is_err());
        let mut bad = good;
        bad.row_b = 0; // seen is not in the watch row
        assert!(validate_instance(&gold, &lex, &bad).is_err());
    }

    #[test]
    fn gold_as_prediction_scores_perfect_accuracy() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        let instances = sample_analogies(&gold, &lex, 2000, 1).unwrap();
        assert_eq!(analogy_accuracy(&instances, &gold), 1.0);
        assert_eq!(analogy_accuracy_joint(&instances, &gold), 1.0);
        assert_eq!(lexicon_expansion(&instances, &gold), 1.0);
    }

    fn paper_instance() -> AnalogyInstance {
        AnalogyInstance {
            f1: "watched".into(),
            f2: "watching".into(),
            f3: "seen".into(),
            f4: "seeing".into(),
            row_a: 0,
            row_b: 2,
            col_13: "PST;PTCP".into(),
            col_24: "PROG".into(),
        }
    }

    #[test]
    fn split_see_paradigm_fails_analogy_but_passes_expansion() {
        let pred = toy_predicted();
        let instances = vec![paper_instance()];
        // seen and seeing land in different predicted rows.
        assert_eq!(analogy_accuracy(&instances, &pred), 0.0);
        assert_eq!(lexicon_expansion(&instances, &pred), 1.0);
    }

    #[test]
    fn missing_f4_fails_both_accuracies() {
        let mut pred = toy_predicted();
        for row in &mut pred.rows {
            for forms in row.predicted.values_mut() {
                forms.retain(|f| f != "seeing");
            }
        }
        let instances = vec![paper_instance()];
        assert_eq!(analogy_accuracy(&instances, &pred), 0.0);
        assert_eq!(lexicon_expansion(&instances, &pred), 0.0);
    }

    #[test]
    fn expansion_dominates_analogy_on_shared_instances() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        let instances = sample_analogies(&gold, &lex, 2000, 1).unwrap();
        for pred in [toy_predicted(), toy_gold_reduced(), gold.clone()] {
            let an = analogy_accuracy(&instances, &pred);
            let le = lexicon_expansion(&instances, &pred);
            assert!(le >= an, "LE {le} < analogy {an}");
            let joint = analogy_accuracy_joint(&instances, &pred);
            assert!(joint <= an, "joint {joint} > independent {an}");
        }
    }

    #[test]
    fn joint_variant_requires_consistent_placement() {
        // Independent relations all hold, but no single row pair and
        // column pair witnesses the whole square: f3's c1 occurrence and
        // its f4 row mate live in different rows.
        let mut row0 = GridRow::new(0);
        row0.insert("c1", "f1");
        row0.insert("c2", "f2");
        let mut row1 = GridRow::new(1);
        row1.insert("c1", "f3");
        let mut row2 = GridRow::new(2);
        row2.insert("c2", "f4");
        let mut row3 = GridRow::new(3);
        row3.insert("cx", "f3");
        row3.insert("cy", "f4");
        let pred = Grid { rows: vec![row0, row1, row2, row3] };
        let inst = AnalogyInstance {
            f1: "f1".into(),
            f2: "f2".into(),
            f3: "f3".into(),
            f4: "f4".into(),
            row_a: 0,
            row_b: 0,
            col_13: "c1".into(),
            col_24: "c2".into(),
        };
        assert_eq!(analogy_accuracy(std::slice::from_ref(&inst), &pred), 1.0);
        assert_eq!(analogy_accuracy_joint(&[inst], &pred), 0.0);
    }

    #[test]
    fn metrics_ignore_row_order_and_column_labels() {
        let gold = toy_gold_full();
        let lex = toy_lexicon();
        let instances = sample_analogies(&gold, &lex, 2000, 1).unwrap();
        let pred = toy_predicted();

        let mut permuted = pred.clone();
        permuted.rows.reverse();
        for (i, row) in permuted.rows.iter_mut().enumerate() {
            row.row_id = i;
            let relabel = |m: &BTreeMap<String, Vec<String>>| {
                m.iter().map(|(k, v)| (format!("col-{k}"), v.clone())).collect()
            };
            row.slots = relabel(&row.slots);
            row.predicted = relabel(&row.predicted);
        }

        let a = pdp_scores(&pred, &toy_gold_reduced(), &lex).unwrap();
        let b = pdp_scores(&permuted, &toy_gold_reduced(), &lex).unwrap();
        assert_eq!((a.f_par, a.f_cell, a.f_grid), (b.f_par, b.f_cell, b.f_grid));
        assert_eq!(analogy_accuracy(&instances, &pred), analogy_accuracy(&instances, &permuted));
        assert_eq!(
            analogy_accuracy_joint(&instances, &pred),
            analogy_accuracy_joint(&instances, &permuted)
        );
        assert_eq!(
            lexicon_expansion(&instances, &pred),
            lexicon_expansion(&instances, &permuted)
        );
    }

    #[test]
    fn evaluate_produces_full_report() {
        let report = evaluate(
            &toy_predicted(),
            &toy_gold_full(),
            &toy_lexicon(),
            &EvalOptions::default(),
        )
        .unwrap();
        assert!(report.f_par > 0.0 && report.f_par < 1.0);
        assert!(report.lexicon_expansion >= report.analogy);
        assert_eq!(report.per_form.len(), 6);
        for v in [
            report.f_par,
            report.f_cell,
            report.f_grid,
            report.analogy,
            report.lexicon_expansion,
        ] {
            assert!((0.0..=1.0).contains(&v));
        }
        let table = report.render_table();
        assert!(table.contains("F_grid"));
        assert!(table.lines().count() == 6);
        let json = serde_json::to_string(&report).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn instances_serialize_as_four_column_tsv() {
        let mut buf = Vec::new();
        write_instances_tsv(&[paper_instance()], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "watched\twatching\tseen\tseeing\n"
        );
    }
}
