//! Randomization tests of the style attributes.
//!
//! Each trial draws a uniform permutation of the unit order and recomputes
//! the nine attributes on the permuted sequence. Points are permuted, not
//! re-embedded: the embedding of a set of profiles does not depend on their
//! order. Trial `t` shuffles with a ChaCha8 generator seeded from the master
//! seed on stream `t`, so results do not depend on how trials are scheduled
//! across threads.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ca::CorrespondenceEmbedding;
use crate::error::{Error, Result};
use crate::style::{style_profile, StyleProfile, ATTRIBUTE_COUNT, ATTRIBUTE_NAMES};

pub const DEFAULT_TRIALS: usize = 999;
pub const DEFAULT_THRESHOLD: f64 = 80.0;

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given number of threads; 0 uses the global pool.
    /// Without the `parallel` feature this runs sequentially.
    Parallel {
        threads: usize,
    },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { threads: 0 }
    }
}

/// Per-unit quantities the attributes are computed from, in sequence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleInputs {
    pub projections: Vec<Vec<f64>>,
    /// `None` for units without an orientation.
    pub correlations: Vec<Option<Vec<f64>>>,
    pub lengths: Vec<usize>,
}

impl StyleInputs {
    pub fn from_embedding(emb: &CorrespondenceEmbedding, lengths: Vec<usize>) -> Result<Self> {
        if lengths.len() != emb.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: emb.n_rows(),
                found: lengths.len(),
                index: 0,
            });
        }
        Ok(StyleInputs {
            projections: emb.row_projections.clone(),
            correlations: emb.correlation_rows(),
            lengths,
        })
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Profile of the sequence in its given order.
    pub fn profile(&self) -> Result<StyleProfile> {
        let order: Vec<usize> = (0..self.len()).collect();
        self.profile_for_order(&order)
    }

    /// Profile of the sequence visited in `order`.
    pub fn profile_for_order(&self, order: &[usize]) -> Result<StyleProfile> {
        let proj: Vec<&[f64]> = order
            .iter()
            .map(|&i| self.projections[i].as_slice())
            .collect();
        let corr: Vec<Option<&[f64]>> = order
            .iter()
            .map(|&i| self.correlations[i].as_deref())
            .collect();
        let lengths: Vec<usize> = order.iter().map(|&i| self.lengths[i]).collect();
        style_profile(&proj, &corr, &lengths)
    }

    /// A copy with every per-unit field rearranged into `order`.
    pub fn permuted(&self, order: &[usize]) -> StyleInputs {
        StyleInputs {
            projections: order.iter().map(|&i| self.projections[i].clone()).collect(),
            correlations: order
                .iter()
                .map(|&i| self.correlations[i].clone())
                .collect(),
            lengths: order.iter().map(|&i| self.lengths[i]).collect(),
        }
    }
}

/// The permutation drawn for trial `trial` under `seed`.
pub fn trial_permutation(n: usize, seed: u64, trial: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Real value ≤ at least the threshold share of trials.
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    /// Both tails reach the threshold: the attribute barely varies under
    /// permutation.
    #[serde(rename = "both")]
    Both,
    #[serde(rename = "none")]
    None,
}

impl Direction {
    pub fn classify(frac_le: f64, frac_ge: f64, threshold_percent: f64) -> Direction {
        let le = 100.0 * frac_le >= threshold_percent;
        let ge = 100.0 * frac_ge >= threshold_percent;
        match (le, ge) {
            (true, true) => Direction::Both,
            (true, false) => Direction::Le,
            (false, true) => Direction::Ge,
            (false, false) => Direction::None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
            Direction::Both => "both",
            Direction::None => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeResult {
    /// 1-based attribute number.
    pub attribute: usize,
    pub name: String,
    pub real: f64,
    /// Share of trials with real ≤ trial value.
    pub frac_le: f64,
    /// Share of trials with real ≥ trial value.
    pub frac_ge: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationReport {
    pub n_trials: usize,
    pub seed: u64,
    pub threshold: f64,
    pub real_profile: StyleProfile,
    pub attributes: Vec<AttributeResult>,
}

fn run_trials(
    inputs: &StyleInputs,
    n_trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<[f64; ATTRIBUTE_COUNT]>> {
    let n = inputs.len();
    let trial = |t: usize| -> Result<[f64; ATTRIBUTE_COUNT]> {
        let order = trial_permutation(n, seed, t as u64);
        Ok(inputs.profile_for_order(&order)?.values())
    };
    match exec {
        Execution::Sequential => (0..n_trials).map(trial).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let work = || (0..n_trials).into_par_iter().map(trial).collect();
            if threads == 0 {
                work()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?
                    .install(work)
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => (0..n_trials).map(trial).collect(),
    }
}

/// Compares the real order against `n_trials` random orders.
pub fn randomize_test(
    inputs: &StyleInputs,
    n_trials: usize,
    seed: u64,
    threshold: f64,
    exec: Execution,
) -> Result<RandomizationReport> {
    if inputs.len() < 3 {
        return Err(Error::TooFewUnits {
            needed: 3,
            got: inputs.len(),
        });
    }
    if n_trials == 0 {
        return Err(Error::DegenerateInput(
            "at least one trial is required".into(),
        ));
    }
    let real_profile = inputs.profile()?;
    let real = real_profile.values();
    let trials = run_trials(inputs, n_trials, seed, exec)?;

    let mut le = [0usize; ATTRIBUTE_COUNT];
    let mut ge = [0usize; ATTRIBUTE_COUNT];
    for values in &trials {
        for a in 0..ATTRIBUTE_COUNT {
            le[a] += usize::from(real[a] <= values[a]);
            ge[a] += usize::from(real[a] >= values[a]);
        }
    }
    let total = n_trials as f64;
    let attributes = (0..ATTRIBUTE_COUNT)
        .map(|a| {
            let frac_le = le[a] as f64 / total;
            let frac_ge = ge[a] as f64 / total;
            AttributeResult {
                attribute: a + 1,
                name: ATTRIBUTE_NAMES[a].to_string(),
                real: real[a],
                frac_le,
                frac_ge,
                direction: Direction::classify(frac_le, frac_ge, threshold),
            }
        })
        .collect();
    Ok(RandomizationReport {
        n_trials,
        seed,
        threshold,
        real_profile,
        attributes,
    })
}

/// How often each attribute reached significance over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedRuns {
    pub runs: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Per attribute: share of runs classified `<=` (or `both`).
    pub share_le: Vec<f64>,
    /// Per attribute: share of runs classified `>=` (or `both`).
    pub share_ge: Vec<f64>,
    pub mean_frac_le: Vec<f64>,
    pub mean_frac_ge: Vec<f64>,
}

/// Repeats the randomization test `runs` times; run `r` uses master seed
/// `seed + r`.
pub fn repeated_runs(
    inputs: &StyleInputs,
    n_trials: usize,
    seed: u64,
    runs: usize,
    threshold: f64,
    exec: Execution,
) -> Result<RepeatedRuns> {
    if runs == 0 {
        return Err(Error::DegenerateInput(
            "at least one run is required".into(),
        ));
    }
    let mut out = RepeatedRuns {
        runs,
        n_trials,
        seed,
        threshold,
        share_le: vec![0.0; ATTRIBUTE_COUNT],
        share_ge: vec![0.0; ATTRIBUTE_COUNT],
        mean_frac_le: vec![0.0; ATTRIBUTE_COUNT],
        mean_frac_ge: vec![0.0; ATTRIBUTE_COUNT],
    };
    for r in 0..runs {
        let rep = randomize_test(
            inputs,
            n_trials,
            seed.wrapping_add(r as u64),
            threshold,
            exec,
        )?;
        for (a, res) in rep.attributes.iter().enumerate() {
            if matches!(res.direction, Direction::Le | Direction::Both) {
                out.share_le[a] += 1.0;
            }
            if matches!(res.direction, Direction::Ge | Direction::Both) {
                out.share_ge[a] += 1.0;
            }
            out.mean_frac_le[a] += res.frac_le;
            out.mean_frac_ge[a] += res.frac_ge;
        }
    }
    let k = runs as f64;
    for v in [
        &mut out.share_le,
        &mut out.share_ge,
        &mut out.mean_frac_le,
        &mut out.mean_frac_ge,
    ] {
        v.iter_mut().for_each(|x| *x /= k);
    }
    Ok(out)
}

/// One line of the cross-script significance table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub script: String,
    pub attribute: usize,
    pub direction: Direction,
    /// Share of trials on the reported side, as a rounded integer percent.
    pub percent: u32,
}

/// Rows for every attribute whose real value lies on one side of at least
/// `threshold` percent of trials. Attributes reaching the threshold on both
/// sides carry no information and are omitted.
pub fn summarize_table(
    reports: &[(String, RandomizationReport)],
    threshold: f64,
) -> Vec<SignificanceRow> {
    let mut rows = Vec::new();
    for (script, report) in reports {
        for res in &report.attributes {
            let (direction, frac) = match Direction::classify(res.frac_le, res.frac_ge, threshold) {
                Direction::Le => (Direction::Le, res.frac_le),
                Direction::Ge => (Direction::Ge, res.frac_ge),
                _ => continue,
            };
            rows.push(SignificanceRow {
                script: script.clone(),
                attribute: res.attribute,
                direction,
                percent: (100.0 * frac).round() as u32,
            });
        }
    }
    rows
}

/// Aligned plain-text rendering of a significance table.
pub fn format_table(rows: &[SignificanceRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.script.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  attribute  direction  % of cases",
        "script"
    );
    let mut last: Option<&str> = None;
    for r in rows {
        if last.is_some_and(|s| s != r.script) {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}%",
            r.script,
            r.attribute,
            r.direction.symbol(),
            r.percent
        );
        last = Some(&r.script);
    }
    out
}
