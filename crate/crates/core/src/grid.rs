use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One paradigm: a map from cell label to the forms realizing that slot.
/// Gold rows hold at most one form per slot; system output may list several
/// (a form set per slot keeps syncretism and overabundance representable).
/// `predicted` holds forms added by reinflection, kept apart from attested
/// ones so evaluation can tell them apart; labels may overlap with `slots`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRow {
    pub row_id: usize,
    pub slots: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub predicted: BTreeMap<String, Vec<String>>,
}

impl GridRow {
    pub fn new(row_id: usize) -> Self {
        GridRow { row_id, slots: BTreeMap::new(), predicted: BTreeMap::new() }
    }

    pub fn insert(&mut self, cell: impl Into<String>, form: impl Into<String>) {
        let forms = self.slots.entry(cell.into()).or_default();
        let form = form.into();
        if let Err(i) = forms.binary_search(&form) {
            forms.insert(i, form);
        }
    }

    pub fn insert_predicted(
        &mut self,
        cell: impl Into<String>,
        form: impl Into<String>,
    ) {
        let forms = self.predicted.entry(cell.into()).or_default();
        let form = form.into();
        if let Err(i) = forms.binary_search(&form) {
            forms.insert(i, form);
        }
    }

    /// Attested forms only.
    pub fn attested_forms(&self) -> BTreeSet<&str> {
        self.slots.values().flatten().map(|f| f.as_str()).collect()
    }

    /// Attested and predicted forms together.
    pub fn all_forms(&self) -> BTreeSet<&str> {
        let mut set = self.attested_forms();
        set.extend(self.predicted.values().flatten().map(|f| f.as_str()));
        set
    }

    /// Forms occupying `cell`, attested first, then predicted.
    pub fn cell_forms(&self, cell: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .slots
            .get(cell)
            .into_iter()
            .flatten()
            .map(|f| f.as_str())
            .collect();
        out.extend(
            self.predicted.get(cell).into_iter().flatten().map(|f| f.as_str()),
        );
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Grid {
    pub rows: Vec<GridRow>,
}

impl Grid {
    pub fn cell_labels(&self) -> BTreeSet<&str> {
        self.rows
            .iter()
            .flat_map(|r| r.slots.keys().chain(r.predicted.keys()))
            .map(|s| s.as_str())
            .collect()
    }

    /// Every distinct form anywhere in the grid, attested or predicted.
    pub fn all_forms(&self) -> BTreeSet<&str> {
        self.rows.iter().flat_map(|r| r.all_forms()).collect()
    }

    pub fn contains_form(&self, form: &str) -> bool {
        self.rows.iter().any(|r| r.all_forms().contains(form))
    }

    pub fn write_ldjson<W: Write>(&self, mut w: W) -> Result<()> {
        for row in &self.rows {
            serde_json::to_writer(&mut w, row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_ldjson<R: BufRead>(r: R) -> Result<Grid> {
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: GridRow = serde_json::from_str(&line)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            rows.push(row);
        }
        Ok(Grid { rows })
    }
}

/// Reverse lookup from forms to the rows and cells they occupy. Built once
/// per grid; evaluation queries it heavily.
#[derive(Debug, Clone)]
pub struct GridIndex {
    rows_by_form: BTreeMap<String, BTreeSet<usize>>,
    cells_by_form: BTreeMap<String, BTreeSet<String>>,
}

impl GridIndex {
    pub fn build(grid: &Grid) -> Self {
        let mut rows_by_form: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let mut cells_by_form: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (ri, row) in grid.rows.iter().enumerate() {
            for (cell, forms) in row.slots.iter().chain(row.predicted.iter()) {
                for form in forms {
                    rows_by_form.entry(form.clone()).or_default().insert(ri);
                    cells_by_form
                        .entry(form.clone())
                        .or_default()
                        .insert(cell.clone());
                }
            }
        }
        GridIndex { rows_by_form, cells_by_form }
    }

    pub fn contains(&self, form: &str) -> bool {
        self.rows_by_form.contains_key(form)
    }

    pub fn rows(&self, form: &str) -> Option<&BTreeSet<usize>> {
        self.rows_by_form.get(form)
    }

    pub fn cells(&self, form: &str) -> Option<&BTreeSet<String>> {
        self.cells_by_form.get(form)
    }

    pub fn share_row(&self, a: &str, b: &str) -> bool {
        match (self.rows_by_form.get(a), self.rows_by_form.get(b)) {
            (Some(ra), Some(rb)) => !ra.is_disjoint(rb),
            _ => false,
        }
    }

    pub fn share_cell(&self, a: &str, b: &str) -> bool {
        match (self.cells_by_form.get(a), self.cells_by_form.get(b)) {
            (Some(ca), Some(cb)) => !ca.is_disjoint(cb),
            _ => false,
        }
    }
}
