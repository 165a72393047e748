//! Units × vocabulary cross-tabulation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SceneUnit;

pub const TABLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    /// 1 if the word occurs in the unit, 0 otherwise.
    Presence,
    /// Occurrence counts.
    Frequency,
}

/// Sparse units × words table with cached marginals.
///
/// Rows are stored as `(column, count)` pairs sorted by column; zero entries
/// are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    mode: TableMode,
    row_labels: Vec<usize>,
    col_labels: Vec<String>,
    rows: Vec<Vec<(usize, u64)>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

/// What `prune` removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneLog {
    pub removed_rows: Vec<usize>,
    pub removed_cols: Vec<String>,
}

impl PruneLog {
    pub fn is_empty(&self) -> bool {
        self.removed_rows.is_empty() && self.removed_cols.is_empty()
    }
}

impl ContingencyTable {
    /// Builds a table from sparse rows. Zero entries are dropped and entries
    /// are clamped to 1 in presence mode.
    pub fn from_rows(
        mode: TableMode,
        row_labels: Vec<usize>,
        col_labels: Vec<String>,
        rows: Vec<Vec<(usize, u64)>>,
    ) -> Result<Self> {
        if rows.len() != row_labels.len() {
            return Err(Error::Schema(format!(
                "{} rows but {} row labels",
                rows.len(),
                row_labels.len()
            )));
        }
        let m = col_labels.len();
        let mut col_sums = vec![0u64; m];
        let mut clean_rows = Vec::with_capacity(rows.len());
        for mut row in rows {
            row.retain(|&(_, v)| v > 0);
            row.sort_unstable_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Schema(format!("duplicate column {}", w[0].0)));
                }
            }
            for entry in row.iter_mut() {
                if entry.0 >= m {
                    return Err(Error::Schema(format!("column {} out of range", entry.0)));
                }
                if mode == TableMode::Presence {
                    entry.1 = 1;
                }
                col_sums[entry.0] += entry.1;
            }
            clean_rows.push(row);
        }
        let row_sums: Vec<u64> = clean_rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v).sum())
            .collect();
        let total = row_sums.iter().sum();
        Ok(ContingencyTable {
            mode,
            row_labels,
            col_labels,
            rows: clean_rows,
            row_sums,
            col_sums,
            total,
        })
    }

    /// Builds a table from a dense matrix, labelling rows 1..n and columns
    /// `w0`, `w1`, ...
    pub fn from_dense(mode: TableMode, values: &[Vec<u64>]) -> Result<Self> {
        let m = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != m) {
            return Err(Error::Schema("ragged dense table".into()));
        }
        let rows = values
            .iter()
            .map(|r| r.iter().copied().enumerate().collect())
            .collect();
        Self::from_rows(
            mode,
            (1..=values.len()).collect(),
            (0..m).map(|j| format!("w{j}")).collect(),
            rows,
        )
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[usize] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn row(&self, i: usize) -> &[(usize, u64)] {
        &self.rows[i]
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0, |p| self.rows[i][p].1)
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut dense = vec![0; self.n_cols()];
                for &(j, v) in r {
                    dense[j] = v;
                }
                dense
            })
            .collect()
    }

    /// Presence-mode copy of this table.
    pub fn binarize(&self) -> ContingencyTable {
        Self::from_rows(
            TableMode::Presence,
            self.row_labels.clone(),
            self.col_labels.clone(),
            self.rows.clone(),
        )
        .expect("binarizing a valid table")
    }

    /// Serializes labels and the coordinate list of nonzero entries.
    pub fn to_json(&self) -> Result<String> {
        let doc = TableDocument {
            schema_version: TABLE_SCHEMA_VERSION,
            mode: self.mode,
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            entries: self
                .rows
                .iter()
                .enumerate()
                .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDocument = serde_json::from_str(text)?;
        if doc.schema_version != TABLE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "table schema version {} is not supported",
                doc.schema_version
            )));
        }
        let mut rows = vec![Vec::new(); doc.row_labels.len()];
        for (i, j, v) in doc.entries {
            rows.get_mut(i)
                .ok_or_else(|| Error::Schema(format!("row {i} out of range")))?
                .push((j, v));
        }
        Self::from_rows(doc.mode, doc.row_labels, doc.col_labels, rows)
    }

    /// Tab-separated dense export with a header row of words, for debugging.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("unit");
        for w in &self.col_labels {
            out.push('\t');
            out.push_str(w);
        }
        out.push('\n');
        for (label, row) in self.row_labels.iter().zip(self.to_dense()) {
            let _ = write!(out, "{label}");
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TableDocument {
    schema_version: u32,
    mode: TableMode,
    row_labels: Vec<usize>,
    col_labels: Vec<String>,
    /// `(row, column, value)` triples.
    entries: Vec<(usize, usize, u64)>,
}

/// Cross-tabulates units by the union of their tokens. The vocabulary is
/// sorted lexicographically.
pub fn build_table(units: &[SceneUnit], mode: TableMode) -> Result<ContingencyTable> {
    if units.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "a table needs at least 2 units, got {}",
            units.len()
        )));
    }
    let vocab: BTreeSet<&str> = units
        .iter()
        .flat_map(|u| u.tokens.iter().map(String::as_str))
        .collect();
    if vocab.is_empty() {
        return Err(Error::DegenerateInput("vocabulary is empty".into()));
    }
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(j, &w)| (w, j)).collect();
    let rows = units
        .iter()
        .map(|u| {
            let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
            for t in &u.tokens {
                *counts.entry(index[t.as_str()]).or_default() += 1;
            }
            counts.into_iter().collect()
        })
        .collect();
    ContingencyTable::from_rows(
        mode,
        units.iter().map(|u| u.index).collect(),
        vocab.into_iter().map(str::to_string).collect(),
        rows,
    )
}

/// Removes all-zero rows and columns.
pub fn prune(table: &ContingencyTable) -> Result<(ContingencyTable, PruneLog)> {
    let mut log = PruneLog::default();
    let keep_cols: Vec<usize> = (0..table.n_cols())
        .filter(|&j| {
            let keep = table.col_sums[j] > 0;
            if !keep {
                log.removed_cols.push(table.col_labels[j].clone());
            }
            keep
        })
        .collect();
    let mut remap = vec![usize::MAX; table.n_cols()];
    for (new, &old) in keep_cols.iter().enumerate() {
        remap[old] = new;
    }
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if table.row_sums[i] == 0 {
            log.removed_rows.push(table.row_labels[i]);
            continue;
        }
        row_labels.push(table.row_labels[i]);
        rows.push(row.iter().map(|&(j, v)| (remap[j], v)).collect());
    }
    if rows.is_empty() || keep_cols.is_empty() {
        return Err(Error::EmptyAfterPrune);
    }
    let col_labels = keep_cols
        .iter()
        .map(|&j| table.col_labels[j].clone())
        .collect();
    let pruned = ContingencyTable::from_rows(table.mode, row_labels, col_labels, rows)?;
    Ok((pruned, log))
}

/// Ranked word frequencies and the frequency-of-frequencies histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZipfSummary {
    pub ranked: Vec<(String, u64)>,
    /// frequency -> number of words having that frequency
    pub histogram: BTreeMap<u64, usize>,
}

/// Top `top_k` words by column total, ties broken lexicographically.
///
/// On a frequency table these are corpus counts; on a presence table they are
/// the number of units each word occurs in.
pub fn zipf_summary(table: &ContingencyTable, top_k: usize) -> ZipfSummary {
    let mut ranked: Vec<(String, u64)> = table
        .col_labels
        .iter()
        .cloned()
        .zip(table.col_sums.iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut histogram = BTreeMap::new();
    for &(_, f) in &ranked {
        *histogram.entry(f).or_insert(0) += 1;
    }
    ranked.truncate(top_k);
    ZipfSummary { ranked, histogram }
}
