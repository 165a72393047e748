//! Reference implementations used as test oracles. Nothing here calls into
//! the code paths it checks.
#![allow(dead_code)]

use narrascope::cluster::Merge;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dense count table with entries in `0..=max`.
pub fn random_counts(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max: u64) -> Vec<Vec<u64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(0..=max)).collect())
        .collect()
}

/// Drops all-zero rows and columns by brute force.
pub fn filter_nonzero(values: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let cols = values.first().map_or(0, Vec::len);
    let keep_cols: Vec<usize> = (0..cols)
        .filter(|&j| values.iter().any(|r| r[j] != 0))
        .collect();
    values
        .iter()
        .filter(|r| r.iter().any(|&v| v != 0))
        .map(|r| keep_cols.iter().map(|&j| r[j]).collect())
        .collect()
}

fn margins(values: &[Vec<u64>]) -> (Vec<f64>, Vec<f64>, f64) {
    let rows: Vec<f64> = values
        .iter()
        .map(|r| r.iter().sum::<u64>() as f64)
        .collect();
    let cols: Vec<f64> = (0..values[0].len())
        .map(|j| values.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let total = rows.iter().sum();
    (rows, cols, total)
}

/// χ² distance between rows `a` and `b`, straight from the counts.
pub fn chi2_from_counts(values: &[Vec<u64>], a: usize, b: usize) -> f64 {
    let (rows, cols, total) = margins(values);
    (0..cols.len())
        .map(|j| {
            let d = values[a][j] as f64 / rows[a] - values[b][j] as f64 / rows[b];
            total / cols[j] * d * d
        })
        .sum()
}

/// Total inertia straight from the counts.
pub fn inertia_from_counts(values: &[Vec<u64>]) -> f64 {
    let (rows, cols, total) = margins(values);
    let mut s = 0.0;
    for (i, r) in values.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            let f = v as f64 / total;
            let e = rows[i] / total * cols[j] / total;
            s += (f - e) * (f - e) / e;
        }
    }
    s
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Contiguity-constrained complete link by exhaustive rescanning: at every
/// step recompute each adjacent pair's largest member distance and merge the
/// smallest, leftmost first on ties.
pub fn exhaustive_cluster(points: &[Vec<f64>]) -> Vec<Merge> {
    let mut clusters: Vec<(usize, usize)> = (0..points.len()).map(|i| (i, i)).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..clusters.len() - 1 {
            let (a0, a1) = clusters[k];
            let (b0, b1) = clusters[k + 1];
            let mut d: f64 = 0.0;
            for i in a0..=a1 {
                for j in b0..=b1 {
                    d = d.max(euclid(&points[i], &points[j]));
                }
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        let (k, d) = best.unwrap();
        let (l, r) = (clusters[k], clusters[k + 1]);
        merges.push(Merge {
            left: (l.0 + 1, l.1 + 1),
            right: (r.0 + 1, r.1 + 1),
            height: d,
        });
        clusters[k] = (l.0, r.1);
        clusters.remove(k + 1);
    }
    merges
}

/// Mean and population variance, two-pass.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
}

/// The nine attributes computed directly from their definitions.
pub fn style_oracle(proj: &[Vec<f64>], corr: &[Vec<f64>], lengths: &[usize]) -> [f64; 9] {
    let sq = |a: &[f64], b: &[f64]| euclid(a, b).powi(2);
    let moves: Vec<f64> = proj.windows(2).map(|w| sq(&w[0], &w[1])).collect();
    let turns: Vec<f64> = corr.windows(2).map(|w| sq(&w[0], &w[1])).collect();
    let deltas: Vec<f64> = lengths
        .windows(2)
        .map(|w| w[1] as f64 - w[0] as f64)
        .collect();
    let n = deltas.len() as f64;
    let rhythm: Vec<f64> = deltas.iter().map(|d| d * d).collect();
    let (a1, a2) = mean_var(&moves);
    let (a3, a4) = mean_var(&turns);
    let (a7, a8) = mean_var(&rhythm);
    [
        a1,
        a2,
        a3,
        a4,
        deltas.iter().map(|d| d.abs()).sum::<f64>() / n,
        deltas.iter().sum::<f64>() / n,
        a7,
        a8,
        deltas.iter().map(|d| d.signum() * d * d).sum::<f64>() / n,
    ]
}

const WORDS: &[&str] = &[
    "rick",
    "ilsa",
    "laszlo",
    "renault",
    "strasser",
    "sam",
    "ferrari",
    "cafe",
    "visa",
    "letters",
    "transit",
    "paris",
    "plane",
    "fog",
    "piano",
    "song",
    "police",
    "gun",
    "drink",
    "table",
    "night",
    "door",
    "street",
    "market",
    "money",
    "germans",
    "french",
    "remember",
    "leave",
    "stay",
    "love",
    "war",
    "tonight",
    "tomorrow",
    "airport",
    "hangar",
    "office",
    "roulette",
    "champagne",
    "music",
];

/// A master-scene script with the given scene lengths (in body tokens).
/// Each scene draws its words from a shifting window of the vocabulary so
/// that scenes differ in content.
pub fn synthetic_script(lengths: &[usize], seed: u64) -> String {
    let mut rng = rng(seed);
    let mut out = String::from("SYNTHETIC\n\nWritten for tests\n\n");
    for (s, &len) in lengths.iter().enumerate() {
        let place = WORDS[(s * 7) % WORDS.len()].to_uppercase();
        out.push_str(&format!("INT. {place} - NIGHT\n\n"));
        let base = (s * 3) % WORDS.len();
        let mut line = Vec::new();
        for _ in 0..len {
            let w = WORDS[(base + rng.random_range(0..12)) % WORDS.len()];
            line.push(w);
            if line.len() == 10 {
                out.push_str(&line.join(" "));
                out.push_str(".\n");
                line.clear();
            }
        }
        if !line.is_empty() {
            out.push_str(&line.join(" "));
            out.push_str(".\n");
        }
        out.push('\n');
    }
    out
}
