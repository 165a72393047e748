//! The nine style attributes of an ordered unit sequence.
//!
//! | # | attribute |
//! |---|-----------|
//! | 1, 2 | mean, variance of squared factor-space distance between consecutive units |
//! | 3, 4 | mean, variance of squared correlation-vector difference between consecutive units |
//! | 5 | mean absolute length difference (tempo) |
//! | 6 | mean signed length difference |
//! | 7, 8 | mean, variance of squared length difference (rhythm) |
//! | 9 | mean of squared length difference carrying the sign of the difference |
//!
//! Variances are population variances over the `n - 1` steps.

use serde::{Deserialize, Serialize};

use crate::ca::squared_euclidean;
use crate::error::{Error, Result};

pub const ATTRIBUTE_COUNT: usize = 9;

pub const ATTRIBUTE_NAMES: [&str; ATTRIBUTE_COUNT] = [
    "movement mean",
    "movement variance",
    "orientation mean",
    "orientation variance",
    "absolute tempo mean",
    "signed tempo mean",
    "rhythm mean",
    "rhythm variance",
    "signed rhythm mean",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleProfile {
    pub a1_movement_mean: f64,
    pub a2_movement_var: f64,
    pub a3_orient_mean: f64,
    pub a4_orient_var: f64,
    pub a5_tempo_abs_mean: f64,
    pub a6_tempo_signed_mean: f64,
    pub a7_rhythm_mean: f64,
    pub a8_rhythm_var: f64,
    pub a9_rhythm_signed_mean: f64,
    pub lengths: Vec<usize>,
    /// Set when there are fewer than two steps, so variances are reported
    /// as 0 rather than estimated.
    pub insufficient_for_variance: bool,
}

impl StyleProfile {
    /// Attributes 1–9 in order.
    pub fn values(&self) -> [f64; ATTRIBUTE_COUNT] {
        [
            self.a1_movement_mean,
            self.a2_movement_var,
            self.a3_orient_mean,
            self.a4_orient_var,
            self.a5_tempo_abs_mean,
            self.a6_tempo_signed_mean,
            self.a7_rhythm_mean,
            self.a8_rhythm_var,
            self.a9_rhythm_signed_mean,
        ]
    }
}

/// Mean and population variance. Values are summed in sorted order so the
/// result depends only on the multiset of steps, not on their sequence.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

fn step_distances(points: &[&[f64]]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::TooFewUnits {
            needed: 2,
            got: points.len(),
        });
    }
    Ok(points
        .windows(2)
        .map(|w| squared_euclidean(w[0], w[1]))
        .collect())
}

/// Attributes 1 and 2 from factor projections in sequence order.
pub fn movement_attrs(projections: &[&[f64]]) -> Result<(f64, f64)> {
    Ok(mean_var(&step_distances(projections)?))
}

/// Attributes 3 and 4 from correlation vectors in sequence order.
///
/// `None` marks a unit projected onto the origin, which has no orientation.
pub fn orientation_attrs(correlations: &[Option<&[f64]>]) -> Result<(f64, f64)> {
    let vecs = correlations
        .iter()
        .enumerate()
        .map(|(i, c)| c.ok_or(Error::ZeroNormRow(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_var(&step_distances(&vecs)?))
}

fn deltas(lengths: &[usize]) -> Result<Vec<f64>> {
    if lengths.len() < 2 {
        return Err(Error::TooFewUnits {
            needed: 2,
            got: lengths.len(),
        });
    }
    Ok(lengths
        .windows(2)
        .map(|w| w[1] as f64 - w[0] as f64)
        .collect())
}

/// Attributes 5 and 6.
pub fn tempo_attrs(lengths: &[usize]) -> Result<(f64, f64)> {
    let d = deltas(lengths)?;
    let n = d.len() as f64;
    Ok((
        // Integer-valued steps: these sums are exact in any order.
        d.iter().map(|x| x.abs()).sum::<f64>() / n,
        d.iter().sum::<f64>() / n,
    ))
}

/// Attributes 7, 8 and 9.
pub fn rhythm_attrs(lengths: &[usize]) -> Result<(f64, f64, f64)> {
    let d = deltas(lengths)?;
    let r: Vec<f64> = d.iter().map(|x| x * x).collect();
    let (mean, var) = mean_var(&r);
    let signed = d
        .iter()
        .zip(&r)
        .map(|(x, sq)| {
            if *x > 0.0 {
                *sq
            } else if *x < 0.0 {
                -sq
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / d.len() as f64;
    Ok((mean, var, signed))
}

/// All nine attributes for a sequence.
///
/// Units without an orientation are skipped when computing attributes 3 and
/// 4, so consecutive steps run between the surviving units.
pub fn style_profile(
    projections: &[&[f64]],
    correlations: &[Option<&[f64]>],
    lengths: &[usize],
) -> Result<StyleProfile> {
    let n = lengths.len();
    if projections.len() != n || correlations.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: projections.len().min(correlations.len()),
            index: 0,
        });
    }
    if n < 2 {
        return Err(Error::TooFewUnits { needed: 2, got: n });
    }
    let (a1, a2) = movement_attrs(projections)?;
    let oriented: Vec<Option<&[f64]>> = correlations
        .iter()
        .filter(|c| c.is_some())
        .copied()
        .collect();
    if oriented.len() < 2 {
        let first = correlations.iter().position(Option::is_none).unwrap_or(0);
        return Err(Error::ZeroNormRow(first));
    }
    let (a3, a4) = orientation_attrs(&oriented)?;
    let (a5, a6) = tempo_attrs(lengths)?;
    let (a7, a8, a9) = rhythm_attrs(lengths)?;
    Ok(StyleProfile {
        a1_movement_mean: a1,
        a2_movement_var: a2,
        a3_orient_mean: a3,
        a4_orient_var: a4,
        a5_tempo_abs_mean: a5,
        a6_tempo_signed_mean: a6,
        a7_rhythm_mean: a7,
        a8_rhythm_var: a8,
        a9_rhythm_signed_mean: a9,
        lengths: lengths.to_vec(),
        insufficient_for_variance: n < 3,
    })
}
