//! Correspondence Analysis of a contingency table.
//!
//! The table is turned into relative frequencies `f_ij = k(i,j)/k` with row
//! masses `f_i` and column masses `f_j`. Rows are represented by their
//! profiles `f_ij / f_i`, endowed with the χ² metric centred on `f_J`. The
//! factor space is obtained from the singular value decomposition of the
//! standardised residuals
//!
//! ```text
//! S_ij = (f_ij - f_i f_j) / sqrt(f_i f_j)
//! ```
//!
//! With `S = U Σ Vᵀ`, row projections are `F = D_I^{-1/2} U Σ` and column
//! projections `G = D_J^{-1/2} V Σ`; the eigenvalues are `λ = σ²`. Squared
//! Euclidean distances between rows of `F` over all retained factors equal
//! the χ² distances between row profiles, and the eigenvalues sum to the
//! total inertia.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};

/// Factors whose eigenvalue falls below this fraction of the first
/// eigenvalue are treated as numerically zero.
pub const RELATIVE_FACTOR_TOLERANCE: f64 = 1e-12;
/// Absolute floor under which an eigenvalue is always dropped. Residual
/// entries are bounded by 1, so this sits at round-off level.
pub const ABSOLUTE_FACTOR_TOLERANCE: f64 = 1e-24;

/// Relative frequencies, masses and row profiles of a table.
#[derive(Debug, Clone)]
pub struct ProfileCloud {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<String>,
    /// `f_ij`
    pub freq: Mat<f64>,
    /// `f_i`
    pub row_masses: Vec<f64>,
    /// `f_j`
    pub col_masses: Vec<f64>,
    /// Row `i` holds `f_ij / f_i`.
    pub row_profiles: Mat<f64>,
}

impl ProfileCloud {
    pub fn n_rows(&self) -> usize {
        self.row_masses.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_masses.len()
    }
}

pub fn make_profiles(table: &ContingencyTable) -> Result<ProfileCloud> {
    let (n, m) = (table.n_rows(), table.n_cols());
    if n == 0 || m == 0 || table.total() == 0 {
        return Err(Error::DegenerateInput("empty table".into()));
    }
    let k = table.total() as f64;
    let mut freq = Mat::zeros(n, m);
    for i in 0..n {
        for &(j, v) in table.row(i) {
            freq[(i, j)] = v as f64 / k;
        }
    }
    let row_masses: Vec<f64> = table.row_sums().iter().map(|&s| s as f64 / k).collect();
    let col_masses: Vec<f64> = table.col_sums().iter().map(|&s| s as f64 / k).collect();
    if let Some(i) = row_masses.iter().position(|&f| f <= 0.0) {
        return Err(Error::ZeroMass {
            axis: "row",
            index: i,
        });
    }
    if let Some(j) = col_masses.iter().position(|&f| f <= 0.0) {
        return Err(Error::ZeroMass {
            axis: "column",
            index: j,
        });
    }
    let mut row_profiles = Mat::zeros(n, m);
    for i in 0..n {
        // Divide counts by the row sum rather than f_ij by f_i: exact sums.
        let rs = table.row_sums()[i] as f64;
        for &(j, v) in table.row(i) {
            row_profiles[(i, j)] = v as f64 / rs;
        }
    }
    Ok(ProfileCloud {
        row_labels: table.row_labels().to_vec(),
        col_labels: table.col_labels().to_vec(),
        freq,
        row_masses,
        col_masses,
        row_profiles,
    })
}

/// Total inertia `Σ_ij (f_ij − f_i f_j)² / (f_i f_j)`.
pub fn total_inertia(cloud: &ProfileCloud) -> f64 {
    let mut sum = 0.0;
    for i in 0..cloud.n_rows() {
        let fi = cloud.row_masses[i];
        for j in 0..cloud.n_cols() {
            let e = fi * cloud.col_masses[j];
            let d = cloud.freq[(i, j)] - e;
            sum += d * d / e;
        }
    }
    sum
}

/// χ² distance between the profiles of rows `a` and `b`.
pub fn chi2_distance(cloud: &ProfileCloud, a: usize, b: usize) -> f64 {
    (0..cloud.n_cols())
        .map(|j| {
            let d = cloud.row_profiles[(a, j)] - cloud.row_profiles[(b, j)];
            d * d / cloud.col_masses[j]
        })
        .sum()
}

/// Factor-space representation of rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceEmbedding {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<String>,
    /// Non-increasing; only numerically non-zero factors are kept.
    pub eigenvalues: Vec<f64>,
    pub percent_inertia: Vec<f64>,
    pub inertia_total: f64,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    /// `row_projections[i][α] = F_α(i)`
    pub row_projections: Vec<Vec<f64>>,
    /// `col_projections[j][α] = G_α(j)`
    pub col_projections: Vec<Vec<f64>>,
    /// Signed cosine of each row's projection vector with each factor.
    pub row_correlations: Vec<Vec<f64>>,
    /// Squared cosines (classical quality of representation).
    pub squared_cosines: Vec<Vec<f64>>,
    /// Positions of rows projected onto the origin; their correlations are
    /// stored as zeros and are undefined.
    pub zero_norm_rows: Vec<usize>,
}

impl CorrespondenceEmbedding {
    pub fn n_factors(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_projections.len()
    }

    /// Squared Euclidean distance between two rows over all factors.
    pub fn factor_distance(&self, a: usize, b: usize) -> f64 {
        squared_euclidean(&self.row_projections[a], &self.row_projections[b])
    }

    /// Signed cosines of row `i` with every factor.
    pub fn correlations(&self, i: usize) -> Result<Vec<f64>> {
        if self.zero_norm_rows.binary_search(&i).is_ok() {
            return Err(Error::ZeroNormRow(i));
        }
        Ok(self.row_correlations[i].clone())
    }

    /// Correlation vectors, `None` for rows at the origin.
    pub fn correlation_rows(&self) -> Vec<Option<Vec<f64>>> {
        (0..self.n_rows())
            .map(|i| self.correlations(i).ok())
            .collect()
    }
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Decomposes the cloud's inertia into factors.
pub fn embed(cloud: &ProfileCloud) -> Result<CorrespondenceEmbedding> {
    let (n, m) = (cloud.n_rows(), cloud.n_cols());
    let sqrt_r: Vec<f64> = cloud.row_masses.iter().map(|f| f.sqrt()).collect();
    let sqrt_c: Vec<f64> = cloud.col_masses.iter().map(|f| f.sqrt()).collect();
    let residuals = Mat::from_fn(n, m, |i, j| {
        let e = cloud.row_masses[i] * cloud.col_masses[j];
        (cloud.freq[(i, j)] - e) / (sqrt_r[i] * sqrt_c[j])
    });
    let mut max_abs: f64 = 0.0;
    for j in 0..m {
        for i in 0..n {
            let v = residuals[(i, j)];
            if !v.is_finite() {
                return Err(Error::NumericalFailure(
                    "non-finite standardised residual".into(),
                ));
            }
            max_abs = max_abs.max(v.abs());
        }
    }

    let svd = residuals.thin_svd().map_err(|e| {
        Error::NumericalFailure(format!(
            "SVD of the {n}×{m} residual matrix did not converge ({e:?}, max |S| = {max_abs:e})"
        ))
    })?;
    let (left, right) = (svd.U(), svd.V());
    let sigma_all = svd.S().column_vector();
    let singular_values: Vec<f64> = (0..sigma_all.nrows()).map(|k| sigma_all[k]).collect();

    let mut order: Vec<usize> = (0..singular_values.len()).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
    let max_dim = n.min(m).saturating_sub(1);
    let lambda1 = order.first().map_or(0.0, |&k| singular_values[k].powi(2));
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| {
            let lambda = singular_values[k].powi(2);
            lambda >= ABSOLUTE_FACTOR_TOLERANCE && lambda >= RELATIVE_FACTOR_TOLERANCE * lambda1
        })
        .take(max_dim)
        .collect();

    let eigenvalues: Vec<f64> = kept.iter().map(|&k| singular_values[k].powi(2)).collect();
    let mut row_projections = vec![vec![0.0; kept.len()]; n];
    let mut col_projections = vec![vec![0.0; kept.len()]; m];
    for (alpha, &k) in kept.iter().enumerate() {
        let sigma = singular_values[k];
        for i in 0..n {
            row_projections[i][alpha] = left[(i, k)] * sigma / sqrt_r[i];
        }
        for j in 0..m {
            col_projections[j][alpha] = right[(j, k)] * sigma / sqrt_c[j];
        }
        // Orient each factor so its largest-magnitude row is positive.
        let mut best = 0;
        for i in 1..n {
            if row_projections[i][alpha].abs() > row_projections[best][alpha].abs() {
                best = i;
            }
        }
        if row_projections[best][alpha] < 0.0 {
            row_projections
                .iter_mut()
                .for_each(|r| r[alpha] = -r[alpha]);
            col_projections
                .iter_mut()
                .for_each(|c| c[alpha] = -c[alpha]);
        }
    }

    let inertia_total = total_inertia(cloud);
    let retained: f64 = eigenvalues.iter().sum();
    let denom = if inertia_total > 0.0 {
        inertia_total
    } else {
        retained
    };
    let percent_inertia = eigenvalues
        .iter()
        .map(|l| if denom > 0.0 { 100.0 * l / denom } else { 0.0 })
        .collect();

    let norms: Vec<f64> = row_projections
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let mut zero_norm_rows = Vec::new();
    let mut row_correlations = Vec::with_capacity(n);
    let mut squared_cosines = Vec::with_capacity(n);
    for (i, r) in row_projections.iter().enumerate() {
        if kept.is_empty() || norms[i] <= 1e-20 * (1.0 + max_norm) {
            zero_norm_rows.push(i);
            row_correlations.push(vec![0.0; kept.len()]);
            squared_cosines.push(vec![0.0; kept.len()]);
            continue;
        }
        let norm = norms[i].sqrt();
        let c: Vec<f64> = r.iter().map(|x| x / norm).collect();
        squared_cosines.push(c.iter().map(|x| x * x).collect());
        row_correlations.push(c);
    }
    if !zero_norm_rows.is_empty() {
        log::warn!(
            "{} row(s) project onto the origin and are excluded from orientation metrics",
            zero_norm_rows.len()
        );
    }

    Ok(CorrespondenceEmbedding {
        row_labels: cloud.row_labels.clone(),
        col_labels: cloud.col_labels.clone(),
        eigenvalues,
        percent_inertia,
        inertia_total,
        row_masses: cloud.row_masses.clone(),
        col_masses: cloud.col_masses.clone(),
        row_projections,
        col_projections,
        row_correlations,
        squared_cosines,
        zero_norm_rows,
    })
}

/// Convenience: profiles then embedding.
pub fn analyze(table: &ContingencyTable) -> Result<(ProfileCloud, CorrespondenceEmbedding)> {
    let cloud = make_profiles(table)?;
    let emb = embed(&cloud)?;
    Ok((cloud, emb))
}
