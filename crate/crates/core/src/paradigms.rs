//! Paradigm discovery: forms already grouped into cells are greedily
//! clustered into paradigms. A candidate paradigm is judged by its base
//! (the longest common subsequence of its members) against its exponents
//! (the residual affix segments); a second pass re-runs the greedy search
//! with exponent penalties estimated from the first.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingModel};
use crate::error::{Error, Result};

/// Where an exponent segment sits relative to the base: before it, in the
/// interior gap after `Mid.0` base characters, after it, or covering the
/// whole form when the base is empty. Keeping the position in the identity
/// separates prefix "a" from suffix "a", and lets a suffix extracted from a
/// five-character base equal the same suffix from a seven-character one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SegmentPos {
    Start,
    Mid(usize),
    End,
    Whole,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub pos: SegmentPos,
    pub text: String,
}

/// A form's exponent: the affix segments left after removing the base.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exponent {
    pub segments: Vec<Segment>,
}

impl Exponent {
    /// Character count, word-boundary markers excluded.
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.text.chars().count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match seg.pos {
                SegmentPos::Start => write!(f, "<{}", seg.text)?,
                SegmentPos::Mid(_) => write!(f, "{}", seg.text)?,
                SegmentPos::End => write!(f, "{}>", seg.text)?,
                SegmentPos::Whole => write!(f, "<{}>", seg.text)?,
            }
        }
        write!(f, ")")
    }
}

/// One longest common subsequence of two strings. Among equal-length
/// solutions the backtrace prefers diagonal, then up, then left, so the
/// result is reproducible.
pub fn lcs_pair(a: &str, b: &str) -> String {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    let (m, n) = (ac.len(), bc.len());
    let mut dp = vec![vec![0u32; n + 1]; m + 1];
    for i in 1..=m {
        for j in 1..=n {
            dp[i][j] = if ac[i - 1] == bc[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (m, n);
    while i > 0 && j > 0 {
        if ac[i - 1] == bc[j - 1] {
            out.push(ac[i - 1]);
            i -= 1;
            j -= 1;
        } else if dp[i - 1][j] >= dp[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out.into_iter().collect()
}

/// Base of a form set: pairwise LCS folded over the forms sorted
/// shortest-first (ties lexicographic). Exact for two forms; a
/// deterministic approximation beyond that, since exact multi-string LCS
/// is intractable in the number of strings.
pub fn fold_base(forms: &[&str]) -> String {
    if forms.is_empty() {
        return String::new();
    }
    let mut sorted: Vec<&str> = forms.to_vec();
    sorted.sort_by_key(|f| (f.chars().count(), *f));
    let mut base = sorted[0].to_string();
    for f in &sorted[1..] {
        base = lcs_pair(&base, f);
    }
    base
}

/// Residual segments of `form` after greedily embedding `base` leftmost.
fn exponent_against(form: &str, base: &str) -> Exponent {
    let fc: Vec<char> = form.chars().collect();
    let bc: Vec<char> = base.chars().collect();
    if bc.is_empty() {
        if fc.is_empty() {
            return Exponent::default();
        }
        return Exponent {
            segments: vec![Segment { pos: SegmentPos::Whole, text: form.to_string() }],
        };
    }
    let mut segments = Vec::new();
    let mut cur = String::new();
    let mut bi = 0;
    let flush = |segments: &mut Vec<Segment>, cur: &mut String, gap: usize| {
        if !cur.is_empty() {
            let pos = if gap == 0 {
                SegmentPos::Start
            } else if gap == bc.len() {
                SegmentPos::End
            } else {
                SegmentPos::Mid(gap)
            };
            segments.push(Segment { pos, text: std::mem::take(cur) });
        }
    };
    for &ch in &fc {
        if bi < bc.len() && ch == bc[bi] {
            flush(&mut segments, &mut cur, bi);
            bi += 1;
        } else {
            cur.push(ch);
        }
    }
    debug_assert_eq!(bi, bc.len(), "base {base:?} does not embed in form {form:?}");
    flush(&mut segments, &mut cur, bc.len());
    Exponent { segments }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseExponent {
    pub base: String,
    /// Parallel to the input form order.
    pub exponents: Vec<Exponent>,
}

/// Base and per-form exponents for a set of forms.
pub fn decompose(forms: &[&str]) -> BaseExponent {
    let base = fold_base(forms);
    let exponents = forms.iter().map(|f| exponent_against(f, &base)).collect();
    BaseExponent { base, exponents }
}

/// One proposed paradigm: (cell id, form) pairs, cells strictly distinct.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Paradigm {
    pub members: Vec<(usize, String)>,
}

impl Paradigm {
    pub fn forms(&self) -> Vec<&str> {
        self.members.iter().map(|(_, f)| f.as_str()).collect()
    }
}

/// Paradigm quality: base characters credited once per member, exponent
/// characters debited. Negative when members share little material.
pub fn score(paradigm: &Paradigm) -> i64 {
    let forms = paradigm.forms();
    score_members(&forms)
}

fn score_members(forms: &[&str]) -> i64 {
    let base_len = fold_base(forms).chars().count() as i64;
    forms.iter().map(|f| 2 * base_len - f.chars().count() as i64).sum()
}

/// Unsmoothed per-cell exponent counts from a completed clustering pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExponentDistribution {
    counts: BTreeMap<usize, BTreeMap<Exponent, u64>>,
}

impl ExponentDistribution {
    pub fn from_paradigms(paradigms: &[Paradigm]) -> Self {
        let mut counts: BTreeMap<usize, BTreeMap<Exponent, u64>> = BTreeMap::new();
        for p in paradigms {
            let forms = p.forms();
            let decomp = decompose(&forms);
            for ((cell, _), exponent) in p.members.iter().zip(decomp.exponents) {
                *counts.entry(*cell).or_default().entry(exponent).or_insert(0) += 1;
            }
        }
        ExponentDistribution { counts }
    }

    /// Test and ablation seeding: explicit (cell, exponent, count) triples.
    pub fn from_counts(triples: impl IntoIterator<Item = (usize, Exponent, u64)>) -> Self {
        let mut counts: BTreeMap<usize, BTreeMap<Exponent, u64>> = BTreeMap::new();
        for (cell, exponent, count) in triples {
            *counts.entry(cell).or_default().entry(exponent).or_insert(0) += count;
        }
        ExponentDistribution { counts }
    }

    /// p(x | c): how often `x` realizes cell `c` among its occupations.
    pub fn probability(&self, cell: usize, x: &Exponent) -> f64 {
        let Some(per_cell) = self.counts.get(&cell) else {
            return 0.0;
        };
        let total: u64 = per_cell.values().sum();
        if total == 0 {
            return 0.0;
        }
        *per_cell.get(x).unwrap_or(&0) as f64 / total as f64
    }

    /// Exponent penalty: 0 for a cell's most likely exponent, otherwise
    /// 2 − p(x|c)/max p, which lands in [1, 2]. Unseen exponents and
    /// unseen cells take the harshest value 2.
    pub fn penalty(&self, cell: usize, x: &Exponent) -> f64 {
        let Some(per_cell) = self.counts.get(&cell) else {
            return 2.0;
        };
        let max = per_cell.values().copied().max().unwrap_or(0);
        if max == 0 {
            return 2.0;
        }
        let count = *per_cell.get(x).unwrap_or(&0);
        if count == max {
            0.0
        } else {
            2.0 - count as f64 / max as f64
        }
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (cell, per_cell) in &self.counts {
            let total: u64 = per_cell.values().sum();
            for (exponent, count) in per_cell {
                writeln!(
                    w,
                    "{cell}\t{exponent}\t{count}\t{}",
                    *count as f64 / total as f64
                )?;
            }
        }
        Ok(())
    }
}

/// Penalized paradigm quality: exponent characters are debited with
/// weight ω(x, c) instead of 1.
pub fn score_penalized(paradigm: &Paradigm, dist: &ExponentDistribution) -> f64 {
    scored_with(paradigm, |cell, x| dist.penalty(cell, x))
}

fn scored_with(paradigm: &Paradigm, omega: impl Fn(usize, &Exponent) -> f64) -> f64 {
    let forms = paradigm.forms();
    let decomp = decompose(&forms);
    let base_len = decomp.base.chars().count() as f64;
    paradigm
        .members
        .iter()
        .zip(&decomp.exponents)
        .map(|((cell, _), x)| base_len - x.len() as f64 * omega(*cell, x))
        .sum()
}

/// Score function for a clustering pass.
pub enum Scorer<'a> {
    /// Plain base-minus-exponent score.
    Plain,
    /// Exponent penalties from a first-pass distribution.
    Penalized(&'a ExponentDistribution),
    /// Constant ω, for ablations: 1 reproduces Plain, 0 ignores exponents.
    PenalizedConst(f64),
}

impl Scorer<'_> {
    pub fn score(&self, paradigm: &Paradigm) -> f64 {
        match self {
            Scorer::Plain => score(paradigm) as f64,
            Scorer::Penalized(dist) => score_penalized(paradigm, dist),
            Scorer::PenalizedConst(omega) => scored_with(paradigm, |_, _| *omega),
        }
    }
}

/// Candidate shortlists: for a seed form and a cell, the n members of that
/// cell nearest to the seed in the pruning embedding space. `None` means
/// no pruning (every member is a candidate).
#[derive(Debug, Clone, Default)]
pub struct NeighborLists {
    lists: Option<HashMap<(String, usize), Vec<String>>>,
}

impl NeighborLists {
    pub fn full() -> Self {
        NeighborLists { lists: None }
    }

    fn candidates<'a>(&'a self, seed: &str, cell: usize) -> Option<&'a [String]> {
        self.lists
            .as_ref()
            .map(|m| m.get(&(seed.to_string(), cell)).map(|v| v.as_slice()).unwrap_or(&[]))
    }
}

/// Precomputes, for every form and every other cell, the n nearest cell
/// members by cosine in `model`'s space. Built once over the initial cell
/// membership and shared by both clustering passes.
pub fn build_neighbor_lists(
    model: &EmbeddingModel,
    cells: &[Vec<String>],
    n: usize,
) -> NeighborLists {
    let vectors: HashMap<&str, Vec<f32>> = cells
        .iter()
        .flatten()
        .map(|f| (f.as_str(), model.vector(f)))
        .collect();

    let mut queries: Vec<(&str, usize)> = Vec::new();
    for (own, members) in cells.iter().enumerate() {
        for f in members {
            for j in 0..cells.len() {
                if j != own {
                    queries.push((f.as_str(), j));
                }
            }
        }
    }
    let lists: Vec<((String, usize), Vec<String>)> = queries
        .par_iter()
        .map(|&(seed, j)| {
            let target = &vectors[seed];
            let mut scored: Vec<(f32, &str)> = cells[j]
                .iter()
                .map(|c| (cosine(target, &vectors[c.as_str()]), c.as_str()))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            scored.truncate(n);
            let list = scored.into_iter().map(|(_, c)| c.to_string()).collect();
            ((seed.to_string(), j), list)
        })
        .collect();
    NeighborLists { lists: Some(lists.into_iter().collect()) }
}

/// One greedy clustering pass. Cells are visited largest-first (ties by
/// cell id); every remaining form seeds a paradigm which then draws at
/// most one form from each later cell, taking the argmax-scoring candidate
/// (ties to the lexicographically smallest form) whenever it strictly
/// improves the paradigm's score. Accepted forms are consumed. Every input
/// form ends up in exactly one paradigm.
pub fn cluster_pass(
    cells: &[Vec<String>],
    scorer: &Scorer,
    neighbors: &NeighborLists,
) -> Vec<Paradigm> {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(cells[c].len()), c));

    let mut live: Vec<BTreeSet<String>> =
        cells.iter().map(|m| m.iter().cloned().collect()).collect();
    let mut paradigms = Vec::new();

    fn improves(cand_score: f64, candidate: &str, best: &Option<(f64, String)>) -> bool {
        match best {
            None => true,
            Some((bs, bf)) => {
                cand_score > *bs || (cand_score == *bs && candidate < bf.as_str())
            }
        }
    }

    for (pos, &ci) in order.iter().enumerate() {
        let seeds: Vec<String> = live[ci].iter().cloned().collect();
        for seed in seeds {
            let mut paradigm = Paradigm { members: vec![(ci, seed.clone())] };
            let mut s = scorer.score(&paradigm);
            for &cj in &order[pos + 1..] {
                let eval = |paradigm: &mut Paradigm, candidate: &str| -> f64 {
                    paradigm.members.push((cj, candidate.to_string()));
                    let cand_score = scorer.score(paradigm);
                    paradigm.members.pop();
                    cand_score
                };
                let mut best: Option<(f64, String)> = None;
                match neighbors.candidates(&seed, cj) {
                    Some(list) => {
                        for candidate in list {
                            if !live[cj].contains(candidate) {
                                continue;
                            }
                            let cand_score = eval(&mut paradigm, candidate);
                            if improves(cand_score, candidate, &best) {
                                best = Some((cand_score, candidate.clone()));
                            }
                        }
                    }
                    None => {
                        for candidate in &live[cj] {
                            let cand_score = eval(&mut paradigm, candidate);
                            if improves(cand_score, candidate, &best) {
                                best = Some((cand_score, candidate.clone()));
                            }
                        }
                    }
                }
                if let Some((cand_score, form)) = best {
                    if cand_score > s {
                        live[cj].remove(&form);
                        paradigm.members.push((cj, form));
                        s = cand_score;
                    }
                }
            }
            paradigms.push(paradigm);
        }
    }
    paradigms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMode {
    /// Eq.-style penalties from the first-pass exponent distribution.
    Heuristic,
    /// ω ≡ 1: the second pass degenerates to the first.
    Const1,
    /// ω ≡ 0: exponents cost nothing.
    Const0,
}

#[derive(Debug, Clone)]
pub struct ParadigmConfig {
    pub omega: OmegaMode,
    pub single_pass: bool,
}

impl Default for ParadigmConfig {
    fn default() -> Self {
        ParadigmConfig { omega: OmegaMode::Heuristic, single_pass: false }
    }
}

/// Two-pass paradigm clustering: a plain-score pass estimates the exponent
/// distribution, then a fresh pass runs with penalized scoring. Neighbor
/// shortlists are computed by the caller once and reused by both passes.
pub fn cluster_paradigms(
    cells: &[Vec<String>],
    neighbors: &NeighborLists,
    config: &ParadigmConfig,
) -> (Vec<Paradigm>, ExponentDistribution) {
    let pass1 = cluster_pass(cells, &Scorer::Plain, neighbors);
    let dist = ExponentDistribution::from_paradigms(&pass1);
    if config.single_pass {
        return (pass1, dist);
    }
    let scorer = match config.omega {
        OmegaMode::Heuristic => Scorer::Penalized(&dist),
        OmegaMode::Const1 => Scorer::PenalizedConst(1.0),
        OmegaMode::Const0 => Scorer::PenalizedConst(0.0),
    };
    let pass2 = cluster_pass(cells, &scorer, neighbors);
    (pass2, dist)
}

#[derive(Serialize, Deserialize)]
struct ParadigmRecord {
    paradigm_id: usize,
    members: Vec<MemberRecord>,
}

#[derive(Serialize, Deserialize)]
struct MemberRecord {
    cell: usize,
    form: String,
}

pub fn write_paradigms<W: Write>(paradigms: &[Paradigm], mut w: W) -> Result<()> {
    for (i, p) in paradigms.iter().enumerate() {
        let rec = ParadigmRecord {
            paradigm_id: i,
            members: p
                .members
                .iter()
                .map(|(cell, form)| MemberRecord { cell: *cell, form: form.clone() })
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_paradigms<R: BufRead>(r: R) -> Result<Vec<Paradigm>> {
    let mut with_ids: Vec<(usize, Paradigm)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ParadigmRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let members =
            rec.members.into_iter().map(|m| (m.cell, m.form)).collect();
        with_ids.push((rec.paradigm_id, Paradigm { members }));
    }
    with_ids.sort_by_key(|(id, _)| *id);
    Ok(with_ids.into_iter().map(|(_, p)| p).collect())
}
