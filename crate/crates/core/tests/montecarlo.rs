mod common;

use std::collections::HashMap;

use narrascope::montecarlo::{
    randomize_test, summarize_table, trial_permutation, Direction, Execution, RandomizationReport,
    StyleInputs,
};
use rand::Rng;

fn random_inputs(seed: u64, lengths: Vec<usize>) -> StyleInputs {
    let mut rng = common::rng(seed);
    let n = lengths.len();
    StyleInputs {
        projections: (0..n)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
        correlations: (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                Some(v.iter().map(|x| x / norm).collect())
            })
            .collect(),
        lengths,
    }
}

#[test]
fn bit_identical_across_thread_counts() {
    let inputs = random_inputs(1, (0..40).map(|i| (i * 37) % 101).collect());
    let reference = randomize_test(&inputs, 999, 42, 80.0, Execution::Sequential).unwrap();
    let reference = serde_json::to_string(&reference).unwrap();
    for threads in [0, 1, 4, 8] {
        let rep = randomize_test(&inputs, 999, 42, 80.0, Execution::Parallel { threads }).unwrap();
        assert_eq!(
            serde_json::to_string(&rep).unwrap(),
            reference,
            "threads = {threads}"
        );
    }
    let other = randomize_test(&inputs, 999, 43, 80.0, Execution::Sequential).unwrap();
    assert_ne!(serde_json::to_string(&other).unwrap(), reference);
}

#[test]
fn permuting_then_computing_matches() {
    let inputs = random_inputs(2, vec![5, 80, 12, 33, 47, 2, 90]);
    for t in 0..50 {
        let order = trial_permutation(7, 9, t);
        let direct = inputs.profile_for_order(&order).unwrap();
        assert_eq!(inputs.permuted(&order).profile().unwrap(), direct);
        let proj: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| inputs.projections[i].clone())
            .collect();
        let corr: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| inputs.correlations[i].clone().unwrap())
            .collect();
        let lengths: Vec<usize> = order.iter().map(|&i| inputs.lengths[i]).collect();
        let want = common::style_oracle(&proj, &corr, &lengths);
        for (a, (g, w)) in direct.values().iter().zip(want).enumerate() {
            assert!(
                (g - w).abs() <= 1e-9 * (1.0 + w.abs()),
                "attribute {}",
                a + 1
            );
        }
    }
}

#[test]
fn identity_order_is_the_real_profile() {
    let inputs = random_inputs(3, vec![9, 1, 7, 3, 3, 8]);
    let identity: Vec<usize> = (0..6).collect();
    assert_eq!(
        inputs.profile_for_order(&identity).unwrap(),
        inputs.profile().unwrap()
    );
}

#[test]
fn permutations_are_uniform() {
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for t in 0..6000 {
        *counts.entry(trial_permutation(3, 17, t)).or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    // Binomial sd ≈ 29; allow five.
    assert!(
        counts.values().all(|&c| (855..=1145).contains(&c)),
        "{counts:?}"
    );
}

#[test]
fn decreasing_lengths_are_extreme() {
    let lengths: Vec<usize> = (1..=10).rev().map(|k| 10 * k).collect();
    let rep = randomize_test(
        &random_inputs(4, lengths),
        999,
        7,
        80.0,
        Execution::default(),
    )
    .unwrap();
    let a6 = &rep.attributes[5];
    assert_eq!(a6.real, -10.0);
    assert!(a6.frac_le >= 0.99, "{}", a6.frac_le);
    assert_eq!(a6.direction, Direction::Le);
}

#[test]
fn fractions_cover_both_tails() {
    for seed in 0..20 {
        let rep = randomize_test(
            &random_inputs(seed, vec![3, 3, 5, 5, 8, 1]),
            200,
            seed,
            80.0,
            Execution::Sequential,
        )
        .unwrap();
        for a in &rep.attributes {
            assert!((0.0..=1.0).contains(&a.frac_le) && (0.0..=1.0).contains(&a.frac_ge));
            assert!(a.frac_le + a.frac_ge >= 1.0);
        }
    }
}

#[test]
fn random_real_order_is_not_systematically_extreme() {
    // Statistical smoke test: with the real order itself random, frac_le of
    // the signed tempo should average near one half.
    let mut rng = common::rng(8);
    let mut total = 0.0;
    let runs = 200;
    for r in 0..runs {
        let lengths: Vec<usize> = (0..12).map(|_| rng.random_range(1..200)).collect();
        let rep = randomize_test(
            &random_inputs(r, lengths),
            199,
            r,
            80.0,
            Execution::Sequential,
        )
        .unwrap();
        total += rep.attributes[5].frac_le;
    }
    let mean = total / runs as f64;
    assert!((0.4..0.6).contains(&mean), "{mean}");
}

fn filtering_oracle(
    reports: &[(String, RandomizationReport)],
    threshold: f64,
) -> Vec<(String, usize, &'static str, u32)> {
    let mut rows = Vec::new();
    for (name, rep) in reports {
        for a in &rep.attributes {
            let le = a.frac_le * 100.0 >= threshold;
            let ge = a.frac_ge * 100.0 >= threshold;
            if le && !ge {
                rows.push((
                    name.clone(),
                    a.attribute,
                    "<=",
                    (a.frac_le * 100.0).round() as u32,
                ));
            } else if ge && !le {
                rows.push((
                    name.clone(),
                    a.attribute,
                    ">=",
                    (a.frac_ge * 100.0).round() as u32,
                ));
            }
        }
    }
    rows
}

#[test]
fn summary_matches_filtering_oracle() {
    let mut rng = common::rng(11);
    let reports: Vec<(String, RandomizationReport)> = (0..6)
        .map(|s| {
            let lengths: Vec<usize> = (0..15).map(|_| rng.random_range(1..100)).collect();
            let rep = randomize_test(
                &random_inputs(s, lengths),
                99,
                s,
                80.0,
                Execution::Sequential,
            )
            .unwrap();
            (format!("CSI-{}", 101 + s), rep)
        })
        .collect();
    for threshold in [50.0, 80.0, 95.0] {
        let got: Vec<(String, usize, &str, u32)> = summarize_table(&reports, threshold)
            .into_iter()
            .map(|r| (r.script, r.attribute, r.direction.symbol(), r.percent))
            .collect();
        assert_eq!(got, filtering_oracle(&reports, threshold));
    }
}
