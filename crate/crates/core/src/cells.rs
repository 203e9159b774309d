//! Cell discovery: k-means over biased embeddings with k chosen by the
//! dispersion-deceleration elbow rule.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::corpus::Lexicon;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::hash::derive_seed;

const MAX_ITERS: usize = 100;

/// Final assignment of every lexicon form to one cell id in 0..k.
/// Cell ids are ordered by size: cell 0 has the most members.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAssignment {
    pub assignments: BTreeMap<String, usize>,
    pub k: usize,
    pub dispersion: f64,
}

impl CellAssignment {
    /// Members per cell id, each list lexicographically sorted.
    pub fn members(&self) -> Vec<Vec<String>> {
        let mut cells = vec![Vec::new(); self.k];
        for (form, &c) in &self.assignments {
            cells[c].push(form.clone());
        }
        cells
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (form, c) in &self.assignments {
            writeln!(w, "{form}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<CellAssignment> {
        let mut assignments = BTreeMap::new();
        let mut k = 0;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (form, cell) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected form<TAB>cell_id"))?;
            let cell: usize = cell
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad cell id {cell:?}")))?;
            k = k.max(cell + 1);
            assignments.insert(form.to_string(), cell);
        }
        Ok(CellAssignment { assignments, k, dispersion: 0.0 })
    }
}

/// Mean dispersion per k, contiguous from k = 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DispersionCurve {
    d: Vec<f64>,
}

impl DispersionCurve {
    pub fn from_values(d: Vec<f64>) -> Self {
        DispersionCurve { d }
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        if k >= 1 {
            self.d.get(k - 1).copied()
        } else {
            None
        }
    }

    /// Largest k with a recorded dispersion.
    pub fn max_k(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,d_k,decel")?;
        for k in 1..=self.max_k() {
            match decel(self, k) {
                Ok(dec) => writeln!(w, "{},{},{}", k, self.d[k - 1], dec)?,
                Err(_) => writeln!(w, "{},{},", k, self.d[k - 1])?,
            }
        }
        Ok(())
    }
}

/// Discrete second difference of the dispersion curve at k.
pub fn decel(curve: &DispersionCurve, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("decel is defined for k >= 2"));
    }
    match (curve.get(k - 1), curve.get(k), curve.get(k + 1)) {
        (Some(a), Some(b), Some(c)) => Ok(a - 2.0 * b + c),
        _ => Err(Error::invalid(format!(
            "dispersion curve lacks points around k = {k}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct KmeansRun {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub dispersion: f64,
    /// Dispersion after every assignment step; non-increasing.
    pub history: Vec<f64>,
}

fn dist2(p: &[f32], c: &[f64]) -> f64 {
    p.iter().zip(c).map(|(x, y)| (*x as f64 - y) * (*x as f64 - y)).sum()
}

fn assign_step(points: &[Vec<f32>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut assignment = Vec::with_capacity(points.len());
    let mut dispersion = 0.0;
    for p in points {
        let mut best = 0;
        let mut best_d = dist2(p, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = dist2(p, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignment.push(best);
        dispersion += best_d;
    }
    (assignment, dispersion)
}

/// Lloyd's algorithm with k-means++ seeding. Runs to a stable assignment
/// or 100 iterations. Empty clusters are reseeded at the point farthest
/// from its own centroid (ties to the lowest point index).
pub fn kmeans(points: &[Vec<f32>], k: usize, seed: u64) -> Result<KmeansRun> {
    let n = points.len();
    if k < 1 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if k > n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of points ({n})"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dim = points[0].len();

    // k-means++: sample each next center proportionally to squared
    // distance from the nearest already-chosen center.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    centroids.push(points[first].iter().map(|&x| x as f64).collect());
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random_range(0.0..total);
            let mut cum = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                cum += w;
                if r < cum {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let centroid: Vec<f64> = points[pick].iter().map(|&x| x as f64).collect();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &centroid));
        }
        centroids.push(centroid);
    }

    let (mut assignment, mut dispersion) = assign_step(points, &centroids);
    let mut history = vec![dispersion];
    for _ in 0..MAX_ITERS {
        // Recompute centroids as member means.
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(p) {
                *s += x as f64;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }
        // Reseed any empty cluster at the point farthest from its own
        // (updated) centroid.
        if counts.contains(&0) {
            let mut own_d2: Vec<f64> = points
                .iter()
                .zip(&assignment)
                .map(|(p, &c)| dist2(p, &centroids[c]))
                .collect();
            for c in 0..k {
                if counts[c] > 0 {
                    continue;
                }
                let mut far = 0;
                for i in 1..n {
                    if own_d2[i] > own_d2[far] {
                        far = i;
                    }
                }
                centroids[c] = points[far].iter().map(|&x| x as f64).collect();
                own_d2[far] = 0.0;
            }
        }

        let (new_assignment, new_dispersion) = assign_step(points, &centroids);
        history.push(new_dispersion);
        let stable = new_assignment == assignment;
        assignment = new_assignment;
        dispersion = new_dispersion;
        if stable {
            break;
        }
    }
    Ok(KmeansRun { assignment, centroids, dispersion, history })
}

/// Mean dispersion over independent restarts, each with its own derived
/// seed. Restarts run in parallel; the mean is accumulated in restart
/// order, so parallel and serial runs agree bit-for-bit.
pub fn avg_dispersion(
    points: &[Vec<f32>],
    k: usize,
    restarts: usize,
    master_seed: u64,
) -> Result<f64> {
    if restarts < 1 {
        return Err(Error::invalid("restarts must be >= 1"));
    }
    let dispersions: Vec<f64> = (0..restarts)
        .into_par_iter()
        .map(|r| kmeans(points, k, restart_seed(master_seed, k, r)).map(|run| run.dispersion))
        .collect::<Result<Vec<_>>>()?;
    Ok(dispersions.iter().sum::<f64>() / restarts as f64)
}

pub(crate) fn restart_seed(master_seed: u64, k: usize, restart: usize) -> u64 {
    derive_seed(derive_seed(master_seed, "dispersion", k as u64), "restart", restart as u64)
}

#[derive(Debug, Clone)]
pub struct KSelection {
    pub k: usize,
    pub curve: DispersionCurve,
    /// False when the elbow rule never fired and a fallback chose k.
    pub triggered: bool,
}

/// Elbow rule: starting at k = 2, stop at the first k whose deceleration
/// drops below sqrt(decel(2)); the (k+1)-th cluster no longer explains
/// enough variation. The curve is extended lazily, one k at a time.
pub fn select_k(
    points: &[Vec<f32>],
    k_max: usize,
    restarts: usize,
    master_seed: u64,
) -> Result<KSelection> {
    if k_max < 3 {
        return Err(Error::invalid("k_max must be >= 3"));
    }
    if points.is_empty() {
        return Err(Error::invalid("no points to cluster"));
    }
    let n = points.len();
    let mut d: Vec<f64> = Vec::new();
    let ensure = |d: &mut Vec<f64>, upto: usize| -> Result<()> {
        while d.len() < upto {
            let k = d.len() + 1;
            d.push(avg_dispersion(points, k, restarts, master_seed)?);
        }
        Ok(())
    };

    if n <= 2 {
        ensure(&mut d, n)?;
        log::warn!("only {n} points; forcing k = {n}");
        return Ok(KSelection { k: n, curve: DispersionCurve::from_values(d), triggered: false });
    }
    let k_hi = k_max.min(n - 1);

    ensure(&mut d, 3)?;
    let decel2 = d[0] - 2.0 * d[1] + d[2];
    if decel2 <= 0.0 {
        ensure(&mut d, k_hi + 1)?;
        let mut best_k = 2;
        let mut best = f64::NEG_INFINITY;
        for k in 2..=k_hi {
            let dec = d[k - 2] - 2.0 * d[k - 1] + d[k];
            if dec > best {
                best = dec;
                best_k = k;
            }
        }
        log::warn!(
            "degenerate dispersion curve (decel(2) = {decel2}); \
             falling back to k = {best_k} with maximal deceleration"
        );
        return Ok(KSelection {
            k: best_k,
            curve: DispersionCurve::from_values(d),
            triggered: false,
        });
    }

    let threshold = decel2.sqrt();
    for k in 2..=k_hi {
        ensure(&mut d, k + 1)?;
        let dec = d[k - 2] - 2.0 * d[k - 1] + d[k];
        if dec < threshold {
            return Ok(KSelection {
                k,
                curve: DispersionCurve::from_values(d),
                triggered: true,
            });
        }
    }
    let k = k_max.min(n);
    log::warn!("elbow rule never fired up to k_max = {k_max}; using k = {k}");
    Ok(KSelection { k, curve: DispersionCurve::from_values(d), triggered: false })
}

/// Same stopping rule applied to an already-computed curve.
pub fn select_k_from_curve(curve: &DispersionCurve, k_max: usize) -> Result<KSelection> {
    if k_max < 3 {
        return Err(Error::invalid("k_max must be >= 3"));
    }
    if curve.max_k() < 3 {
        return Err(Error::invalid("curve must cover at least k = 1..3"));
    }
    let k_hi = k_max.min(curve.max_k() - 1);
    let decel2 = decel(curve, 2)?;
    if decel2 <= 0.0 {
        let mut best_k = 2;
        let mut best = f64::NEG_INFINITY;
        for k in 2..=k_hi {
            let dec = decel(curve, k)?;
            if dec > best {
                best = dec;
                best_k = k;
            }
        }
        return Ok(KSelection { k: best_k, curve: curve.clone(), triggered: false });
    }
    let threshold = decel2.sqrt();
    for k in 2..=k_hi {
        if decel(curve, k)? < threshold {
            return Ok(KSelection { k, curve: curve.clone(), triggered: true });
        }
    }
    Ok(KSelection { k: k_max, curve: curve.clone(), triggered: false })
}

#[derive(Debug, Clone)]
pub struct CellClusterConfig {
    pub restarts: usize,
    pub k_max: usize,
    pub seed: u64,
    /// Skip k selection and cluster at exactly this k.
    pub gold_k: Option<usize>,
}

impl Default for CellClusterConfig {
    fn default() -> Self {
        CellClusterConfig { restarts: 25, k_max: 40, seed: 1, gold_k: None }
    }
}

fn l2_normalize(mut v: Vec<f32>) -> Vec<f32> {
    let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (*x as f64 / norm) as f32;
        }
    }
    v
}

/// Embeds every lexicon form, selects k (unless pinned), and clusters.
/// Vectors are length-normalized first so frequency-driven magnitude
/// differences do not dominate the distances. Returns the assignment and
/// the dispersion curve examined during selection (empty when k was given).
pub fn cluster_cells(
    model: &EmbeddingModel,
    lexicon: &Lexicon,
    config: &CellClusterConfig,
) -> Result<(CellAssignment, DispersionCurve)> {
    if lexicon.is_empty() {
        return Err(Error::invalid("empty lexicon: nothing to cluster"));
    }
    let forms: Vec<&str> = lexicon.forms().collect();
    let points: Vec<Vec<f32>> =
        forms.iter().map(|f| l2_normalize(model.vector(f))).collect();
    let n = points.len();

    let (k, curve) = match config.gold_k {
        Some(0) => return Err(Error::invalid("gold_k must be >= 1")),
        Some(g) => {
            let k = g.min(n);
            if k < g {
                log::warn!("gold_k = {g} exceeds {n} forms; capping at {k}");
            }
            (k, DispersionCurve::default())
        }
        None => {
            let sel = select_k(&points, config.k_max, config.restarts, config.seed)?;
            (sel.k, sel.curve)
        }
    };

    let run = kmeans(&points, k, derive_seed(config.seed, "cells-final", k as u64))?;

    // Relabel so cell 0 is the largest; ties keep the lower original id.
    let mut counts = vec![0usize; k];
    for &c in &run.assignment {
        counts[c] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(counts[c]), c));
    let mut relabel = vec![0usize; k];
    for (new_id, &old_id) in order.iter().enumerate() {
        relabel[old_id] = new_id;
    }

    let assignments = forms
        .iter()
        .zip(&run.assignment)
        .map(|(f, &c)| (f.to_string(), relabel[c]))
        .collect();
    Ok((CellAssignment { assignments, k, dispersion: run.dispersion }, curve))
}
