//! Contiguity-constrained complete-link hierarchical clustering.
//!
//! Units keep their sequence order: only clusters that are adjacent
//! intervals of the sequence may merge, and the dissimilarity between two
//! clusters is the largest Euclidean distance between their members. This
//! combination never produces inversions, so the nearest-neighbour chain
//! applies: follow nearest adjacent neighbours until two clusters are
//! reciprocal nearest neighbours, merge them, and resume from the remainder
//! of the chain. Complete-link dissimilarities are maintained with the
//! Lance–Williams update `d(a∪b, x) = max(d(a, x), d(b, x))`, giving
//! O(n²) time and space.
//!
//! Merges are reported in agglomeration order: the order in which repeatedly
//! merging the closest adjacent pair (smaller left index on ties) would
//! produce them.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ca::{squared_euclidean, CorrespondenceEmbedding};
use crate::error::{Error, Result};

/// Inclusive 1-based range of sequence positions.
pub type Span = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: Span,
    pub right: Span,
    pub height: f64,
}

impl Merge {
    pub fn span(&self) -> Span {
        (self.left.0, self.right.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaf_count: usize,
    /// Unit label of each leaf, in sequence order.
    pub labels: Vec<usize>,
    /// `leaf_count - 1` merges with non-decreasing heights.
    pub merges: Vec<Merge>,
}

/// Which per-unit vectors feed the clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterInput {
    /// Signed cosines with the factors (orientation).
    #[default]
    Correlations,
    /// Factor projections (position).
    Projections,
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.len() < 2 {
        return Err(Error::TooFewUnits {
            needed: 2,
            got: points.len(),
        });
    }
    let dim = points[0].len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
                index,
            });
        }
    }
    Ok(dim)
}

/// Clusters the sequence of points. Leaves are labelled 1..n.
pub fn cluster(points: &[Vec<f64>]) -> Result<Dendrogram> {
    cluster_labelled(points, (1..=points.len()).collect())
}

pub fn cluster_labelled(points: &[Vec<f64>], labels: Vec<usize>) -> Result<Dendrogram> {
    check_points(points)?;
    let n = points.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
            index: 0,
        });
    }

    let mut dis = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_euclidean(&points[i], &points[j]).sqrt();
            dis[i * n + j] = d;
            dis[j * n + i] = d;
        }
    }

    // Clusters are identified by their first position.
    const NONE: usize = usize::MAX;
    let mut end: Vec<usize> = (0..n).collect();
    let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect();
    let mut next: Vec<usize> = (0..n)
        .map(|i| if i + 1 == n { NONE } else { i + 1 })
        .collect();

    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n - 1);
    while raw.len() < n - 1 {
        if chain.is_empty() {
            // Position 0 always heads the leftmost cluster.
            chain.push(0);
        }
        let a = *chain.last().unwrap();
        let before = chain.len().checked_sub(2).map(|k| chain[k]);
        let mut nn = NONE;
        let mut best = f64::INFINITY;
        for cand in [prev[a], next[a]] {
            if cand == NONE {
                continue;
            }
            let d = dis[a * n + cand];
            // Ties go to the chain predecessor so the chain terminates.
            if d < best || (d == best && Some(cand) == before) {
                best = d;
                nn = cand;
            }
        }
        if Some(nn) != before {
            chain.push(nn);
            continue;
        }
        chain.pop();
        chain.pop();
        let (l, r) = if a < nn { (a, nn) } else { (nn, a) };
        raw.push(Merge {
            left: (l + 1, end[l] + 1),
            right: (r + 1, end[r] + 1),
            height: best,
        });
        let mut x = 0;
        while x != NONE {
            if x != l && x != r {
                let d = dis[l * n + x].max(dis[r * n + x]);
                dis[l * n + x] = d;
                dis[x * n + l] = d;
            }
            x = next[x];
        }
        end[l] = end[r];
        next[l] = next[r];
        if next[r] != NONE {
            prev[next[r]] = l;
        }
    }

    Ok(Dendrogram {
        leaf_count: n,
        labels,
        merges: agglomeration_order(raw),
    })
}

/// Orders merges as sequential agglomeration would: repeatedly take the
/// lowest available merge, smaller left index first on ties.
fn agglomeration_order(raw: Vec<Merge>) -> Vec<Merge> {
    let by_span: HashMap<Span, usize> =
        raw.iter().enumerate().map(|(k, m)| (m.span(), k)).collect();
    let child = |s: Span| {
        if s.0 == s.1 {
            None
        } else {
            by_span.get(&s).copied()
        }
    };
    let mut done = vec![false; raw.len()];
    let mut out = Vec::with_capacity(raw.len());
    while out.len() < raw.len() {
        let mut pick: Option<usize> = None;
        for (k, m) in raw.iter().enumerate() {
            if done[k] {
                continue;
            }
            let ready = [m.left, m.right]
                .into_iter()
                .all(|s| child(s).is_none_or(|c| done[c]));
            if !ready {
                continue;
            }
            pick = match pick {
                Some(p) if (raw[p].height, raw[p].left.0) <= (m.height, m.left.0) => Some(p),
                _ => Some(k),
            };
        }
        let k = pick.expect("merge forest always has a ready merge");
        done[k] = true;
        out.push(raw[k]);
    }
    out
}

/// Clusters the rows of an embedding by their correlation vectors. Rows at
/// the origin take the zero vector.
pub fn cluster_by_orientation(emb: &CorrespondenceEmbedding) -> Result<Dendrogram> {
    let good = emb.n_rows() - emb.zero_norm_rows.len();
    if good < 2 {
        return Err(match emb.zero_norm_rows.first() {
            Some(&i) if emb.n_rows() >= 2 => Error::ZeroNormRow(i),
            _ => Error::TooFewUnits {
                needed: 2,
                got: good,
            },
        });
    }
    cluster_labelled(&emb.row_correlations, emb.row_labels.clone())
}

/// Clusters the rows of an embedding by their factor projections.
pub fn cluster_by_position(emb: &CorrespondenceEmbedding) -> Result<Dendrogram> {
    cluster_labelled(&emb.row_projections, emb.row_labels.clone())
}

pub fn cluster_embedding(emb: &CorrespondenceEmbedding, input: ClusterInput) -> Result<Dendrogram> {
    match input {
        ClusterInput::Correlations => cluster_by_orientation(emb),
        ClusterInput::Projections => cluster_by_position(emb),
    }
}

impl Dendrogram {
    /// Splits the sequence into `k` contiguous segments by undoing the
    /// `k - 1` highest merges. Equal heights are undone latest merge first.
    pub fn cut(&self, k: usize) -> Result<Vec<Span>> {
        let n = self.leaf_count;
        if k == 0 || k > n {
            return Err(Error::InvalidK { k, n });
        }
        let mut starts: Vec<usize> = self.merges[self.merges.len() + 1 - k..]
            .iter()
            .map(|m| m.right.0)
            .collect();
        starts.push(1);
        starts.sort_unstable();
        Ok(starts
            .iter()
            .enumerate()
            .map(|(s, &a)| (a, starts.get(s + 1).map_or(n, |&b| b - 1)))
            .collect())
    }

    /// Height of the lowest merge joining positions `a` and `b` (1-based).
    pub fn ultrametric(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        self.merges
            .iter()
            .find(|m| m.left.0 <= lo && hi <= m.right.1 && lo <= m.left.1 && hi >= m.right.0)
            .map_or(f64::NAN, |m| m.height)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Newick text; branch lengths are height differences between a node and
    /// its parent, leaves sitting at height 0.
    pub fn to_newick(&self) -> String {
        let by_span: HashMap<Span, &Merge> = self.merges.iter().map(|m| (m.span(), m)).collect();
        let mut out = String::new();
        if let Some(root) = self.merges.last() {
            self.write_newick(&by_span, root.span(), root.height, &mut out);
        } else if let Some(l) = self.labels.first() {
            let _ = write!(out, "{l}");
        }
        out.push(';');
        out
    }

    fn write_newick(
        &self,
        by_span: &HashMap<Span, &Merge>,
        span: Span,
        parent: f64,
        out: &mut String,
    ) {
        if span.0 == span.1 {
            let _ = write!(out, "{}:{}", self.labels[span.0 - 1], parent);
            return;
        }
        let m = by_span[&span];
        out.push('(');
        self.write_newick(by_span, m.left, m.height, out);
        out.push(',');
        self.write_newick(by_span, m.right, m.height, out);
        out.push(')');
        if parent != m.height || span != self.merges.last().unwrap().span() {
            let _ = write!(out, ":{}", parent - m.height);
        }
    }
}
