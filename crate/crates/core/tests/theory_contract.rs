//! Contract tests for the divergence and threshold computations.

mod common;

use std::collections::BTreeMap;

use hcd::generator::{btsbm_params, make_profile, NoiseKind};
use hcd::model::{CommunityTree, HsbmParams, ModelError};
use hcd::theory::{
    b_count, ch_divergence, eta_minus, feasible_depths, iq_btsbm, j_bottom_up, j_top_down,
    min_divergence_i, min_divergence_iq, p_bar, renyi_divergence, robustness_lhs,
};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Balanced binary parameters with one probability per depth and a
/// uniform prior. Built unchecked so degenerate (flat or equal)
/// probability ladders can be constructed too.
fn btsbm_by_depth(d: usize, probs: &[f64]) -> HsbmParams {
    assert_eq!(probs.len(), d + 1);
    let tree = CommunityTree::balanced(2, d);
    let k = tree.num_leaves();
    let mut p = BTreeMap::new();
    for node in tree.nodes() {
        p.insert(node.clone(), probs[node.depth()]);
    }
    HsbmParams::unchecked(tree, vec![1.0 / k as f64; k], p)
}

/// Per-depth probabilities read back from balanced binary params.
fn depth_probs(params: &HsbmParams) -> Vec<f64> {
    let leaf = params.tree.leaves()[0].clone();
    (0..=params.tree.depth())
        .map(|h| params.p[&leaf.truncate(h)])
        .collect()
}

fn edge_rows(params: &HsbmParams, a: usize) -> Vec<f64> {
    (0..params.k()).map(|c| params.edge_prob(a, c)).collect()
}

/// Sorted random values with a minimum gap, for strictly increasing
/// probability or rate ladders.
fn random_increasing(rng: &mut ChaCha12Rng, len: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(lo..hi)).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for i in 1..len {
        if v[i] - v[i - 1] < gap {
            v[i] = v[i - 1] + gap;
        }
    }
    v
}

#[test]
fn renyi_zero_for_identical_distributions() {
    for t in [0.1, 0.37, 0.5, 0.9] {
        assert!(renyi_divergence(t, 0.3, 0.3).abs() < 1e-14);
    }
}

#[test]
fn renyi_half_closed_form_values() {
    let v = renyi_divergence(0.5, 0.0, 0.3);
    assert!((v - 0.35667494393873234).abs() < 1e-15);
    assert!((v - (-(0.7f64).ln())).abs() < 1e-14);

    assert!((renyi_divergence(0.5, 0.1, 0.2) - 0.020202707317519449).abs() < 1e-13);
    assert!((renyi_divergence(0.3, 0.1, 0.2) - 0.012592818702827887).abs() < 1e-13);
}

#[test]
fn renyi_half_is_exactly_symmetric() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p: f64 = rng.random();
        let q: f64 = rng.random();
        let ab = renyi_divergence(0.5, p, q);
        let ba = renyi_divergence(0.5, q, p);
        assert_eq!(ab.to_bits(), ba.to_bits(), "p={p} q={q}");
    }
}

#[test]
fn renyi_infinite_for_disjoint_supports() {
    assert_eq!(renyi_divergence(0.5, 0.0, 1.0), f64::INFINITY);
    assert_eq!(renyi_divergence(0.25, 1.0, 0.0), f64::INFINITY);
    // Point masses on the same side are identical distributions.
    assert!(renyi_divergence(0.5, 0.0, 0.0).abs() < 1e-15);
    assert!(renyi_divergence(0.5, 1.0, 1.0).abs() < 1e-15);
}

#[test]
fn ch_zero_for_identical_rows() {
    // Left subtree glued to its children: leaves 00 and 01 have
    // identical edge-probability rows.
    let tree = CommunityTree::balanced(2, 2);
    let mut p = BTreeMap::new();
    for node in tree.nodes() {
        let prob = match node.indices() {
            [] => 0.05,
            [0, ..] => 0.2,
            [1] => 0.3,
            _ => 0.4,
        };
        p.insert(node.clone(), prob);
    }
    let params = HsbmParams::unchecked(tree, vec![0.25; 4], p);
    assert!(ch_divergence(0, 1, &params).abs() < 1e-12);
    assert!(ch_divergence(2, 3, &params) > 1e-3);
}

#[test]
fn ch_matches_btsbm_closed_form_per_pair() {
    let d = 3;
    let probs = [0.02, 0.05, 0.10, 0.20];
    let params = btsbm_by_depth(d, &probs);
    // Pairs splitting at depth 0, 1, and 2 realize the closed form at
    // q = 1, 2, 3 respectively.
    for (a, b, q) in [(0usize, 4usize, 1usize), (0, 2, 2), (0, 1, 3)] {
        let numeric = ch_divergence(a, b, &params);
        let closed = iq_btsbm(d, &probs, q).unwrap();
        assert!(
            (numeric - closed).abs() / closed < 1e-8,
            "pair ({a},{b}) q={q}: {numeric} vs {closed}"
        );
    }
    // Same split depth, same divergence.
    let left = ch_divergence(0, 4, &params);
    let right = ch_divergence(3, 7, &params);
    assert!((left - right).abs() / left < 1e-10);
}

#[test]
fn ch_matches_grid_on_asymmetric_prior() {
    let tree = CommunityTree::balanced(2, 1);
    let mut p = BTreeMap::new();
    for node in tree.nodes() {
        let prob = match node.indices() {
            [] => 0.05,
            [0] => 0.3,
            _ => 0.15,
        };
        p.insert(node.clone(), prob);
    }
    let params = HsbmParams::new(tree, vec![0.3, 0.7], p).unwrap();
    let grid = common::ch_grid_oracle(
        &params.pi,
        &edge_rows(&params, 0),
        &edge_rows(&params, 1),
        100_000,
    );
    assert!((ch_divergence(0, 1, &params) - grid).abs() < 1e-8);
}

#[test]
fn ch_matches_grid_on_random_instances() {
    let mut rng = ChaCha12Rng::seed_from_u64(29);
    for trial in 0..100 {
        let tree = match trial % 3 {
            0 => CommunityTree::balanced(2, 1),
            1 => CommunityTree::balanced(2, 2),
            _ => CommunityTree::balanced(3, 1),
        };
        let k = tree.num_leaves();
        let mut p = BTreeMap::new();
        for node in tree.nodes() {
            p.insert(node.clone(), rng.random_range(0.05..0.95));
        }
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let params = HsbmParams::unchecked(tree, pi, p);

        let a = rng.random_range(0..k);
        let b = (a + rng.random_range(1..k)) % k;
        let numeric = ch_divergence(a, b, &params);
        let grid = common::ch_grid_oracle(
            &params.pi,
            &edge_rows(&params, a),
            &edge_rows(&params, b),
            40_000,
        );
        assert!(
            (numeric - grid).abs() < 1e-8,
            "trial {trial}: {numeric} vs {grid}"
        );
    }
}

#[test]
fn min_divergence_zero_when_two_leaves_coincide() {
    let tree = CommunityTree::balanced(2, 2);
    let mut p = BTreeMap::new();
    for node in tree.nodes() {
        let prob = match node.indices() {
            [] => 0.05,
            [0, ..] => 0.2,
            [1] => 0.3,
            _ => 0.4,
        };
        p.insert(node.clone(), prob);
    }
    let params = HsbmParams::unchecked(tree, vec![0.25; 4], p);
    assert!(min_divergence_i(&params).unwrap() < 1e-12);
}

#[test]
fn min_divergence_two_block_symmetric_case() {
    let tree = CommunityTree::balanced(2, 1);
    let mut p = BTreeMap::new();
    for node in tree.nodes() {
        p.insert(node.clone(), if node.is_root() { 0.05 } else { 0.15 });
    }
    let params = HsbmParams::with_uniform_pi(tree, p).unwrap();
    let want = 0.5 * common::d_half(0.15, 0.05);
    let got = min_divergence_i(&params).unwrap();
    assert!((got - want).abs() / want < 1e-10);
}

#[test]
fn min_divergence_leading_term_at_large_n() {
    let n = 1_000_000;
    let a = [20.0, 30.0, 40.0];
    let params = btsbm_params(2, &a, n).unwrap();
    let got = min_divergence_i(&params).unwrap();
    let scale = (n as f64).ln() / n as f64;
    let leading = 0.25 * (a[2].sqrt() - a[1].sqrt()).powi(2) * scale;
    assert!((got - leading).abs() / leading < 0.05);
}

#[test]
fn min_divergence_rejects_single_community() {
    let tree = CommunityTree::balanced(2, 0);
    let mut p = BTreeMap::new();
    p.insert(tree.leaves()[0].clone(), 0.2);
    let params = HsbmParams::with_uniform_pi(tree, p).unwrap();
    assert!(matches!(
        min_divergence_i(&params),
        Err(ModelError::InvalidParams(_))
    ));
}

#[test]
fn depth_restricted_divergence_matches_full_minimum_at_bottom() {
    let params = btsbm_params(3, &[40.0, 60.0, 80.0, 100.0], 3200).unwrap();
    let full = min_divergence_i(&params).unwrap();
    let at_d = min_divergence_iq(&params, 3).unwrap();
    assert!((at_d - full).abs() <= 1e-14 * full);
    // Restricting to pairs split at the root can only raise the minimum.
    assert!(min_divergence_iq(&params, 1).unwrap() >= full);
}

#[test]
fn depth_restricted_divergence_close_to_closed_form() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    for _ in 0..20 {
        let d = rng.random_range(1..=3);
        let a = random_increasing(&mut rng, d + 1, 5.0, 120.0, 5.0);
        let n = rng.random_range(2000..=6400);
        let params = btsbm_params(d, &a, n).unwrap();
        let probs = depth_probs(&params);
        for q in 1..=d {
            let numeric = min_divergence_iq(&params, q).unwrap();
            let closed = iq_btsbm(d, &probs, q).unwrap();
            assert!(
                (numeric - closed).abs() / closed < 1e-8,
                "d={d} q={q}: {numeric} vs {closed}"
            );
        }
    }
}

#[test]
fn depth_restricted_divergence_never_increases_with_depth() {
    // Coarser targets are easier: the admissible pair set grows with q,
    // so the minimum divergence can only shrink.
    let mut rng = ChaCha12Rng::seed_from_u64(43);
    for trial in 0..500 {
        let d = rng.random_range(1..=3);
        let probs = random_increasing(&mut rng, d + 1, 0.01, 0.5, 0.005);
        let tree = CommunityTree::balanced(2, d);
        let k = tree.num_leaves();
        let mut p = BTreeMap::new();
        for node in tree.nodes() {
            p.insert(node.clone(), probs[node.depth()]);
        }
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let params = HsbmParams::new(tree, pi, p).unwrap();

        let values: Vec<f64> = (1..=d)
            .map(|q| min_divergence_iq(&params, q).unwrap())
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trial {trial}: {values:?}");
        }
    }
}

#[test]
fn depth_restricted_divergence_rejects_out_of_range_depths() {
    let params = btsbm_params(2, &[10.0, 20.0, 40.0], 1000).unwrap();
    assert!(matches!(
        min_divergence_iq(&params, 0),
        Err(ModelError::DepthOutOfRange { q: 0, max: 2 })
    ));
    assert!(matches!(
        min_divergence_iq(&params, 3),
        Err(ModelError::DepthOutOfRange { q: 3, max: 2 })
    ));
}

#[test]
fn closed_form_divergence_frozen_values() {
    let n = 3200.0f64;
    let scale = n.ln() / n;
    let probs: Vec<f64> = [40.0, 60.0, 80.0, 100.0].iter().map(|a| a * scale).collect();
    let want = [
        0.0091930828531782555,
        0.0025585888063586843,
        0.00045469429029993183,
    ];
    for q in 1..=3 {
        let got = iq_btsbm(3, &probs, q).unwrap();
        assert!((got - want[q - 1]).abs() / want[q - 1] < 1e-12, "q={q}");
    }
}

#[test]
fn closed_form_divergence_at_bottom_is_single_term() {
    let probs = [0.02, 0.05, 0.10, 0.20];
    let got = iq_btsbm(3, &probs, 3).unwrap();
    let want = common::d_half(0.10, 0.20) / 8.0;
    assert!((got - want).abs() / want < 1e-12);
}

#[test]
fn closed_form_divergence_rejects_bad_inputs() {
    assert!(iq_btsbm(2, &[0.1, 0.1, 0.1], 1).is_err());
    assert!(iq_btsbm(2, &[0.3, 0.2, 0.1], 1).is_err());
    assert!(iq_btsbm(2, &[0.1, 0.2], 1).is_err());
    assert!(matches!(
        iq_btsbm(2, &[0.1, 0.2, 0.3], 0),
        Err(ModelError::DepthOutOfRange { q: 0, max: 2 })
    ));
    assert!(iq_btsbm(2, &[0.1, 0.2, 0.3], 3).is_err());
}

#[test]
fn top_down_score_frozen_values() {
    let cases: [(&[f64], [f64; 3]); 4] = [
        (
            &[2.2, 2.5, 3.0, 25.0],
            [0.96471831917184137, 1.1669601084501919, 1.3349364905389034],
        ),
        (
            &[3.0, 9.0, 15.0, 21.0],
            [1.8860389693210722, 0.38603896932107229, 0.062940162675287972],
        ),
        (
            &[2.2, 2.4, 4.0, 22.0],
            [0.8341768745486644, 1.0571519912462117, 0.90479212008828525],
        ),
        (
            &[2.2, 2.5, 4.0, 22.0],
            [0.84583543558748431, 1.024561437252155, 0.90479212008828525],
        ),
    ];
    for (a, want) in cases {
        for q in 1..=3 {
            let got = j_top_down(q, a).unwrap();
            assert!(
                (got - want[q - 1]).abs() / want[q - 1] < 1e-12,
                "a={a:?} q={q}: {got}"
            );
        }
    }
    // Rounded bands for the first two evaluations.
    for (a, rounded) in [
        (&[2.2, 2.5, 3.0, 25.0][..], [0.96, 1.17, 1.33]),
        (&[3.0, 9.0, 15.0, 21.0][..], [1.89, 0.39, 0.06]),
        (&[2.2, 2.5, 4.0, 22.0][..], [0.85, 1.02, 0.90]),
    ] {
        for q in 1..=3 {
            let got = j_top_down(q, a).unwrap();
            assert!((got - rounded[q - 1]).abs() <= 0.005, "a={a:?} q={q}");
        }
    }
}

#[test]
fn bottom_up_score_frozen_values() {
    let got = j_bottom_up(1, &[2.2, 2.5, 3.0, 25.0]).unwrap();
    assert!((got - 1.5560848093369704).abs() < 1e-12);
    assert!((got - 1.556).abs() < 1e-3);

    let a = [40.0, 45.0, 50.0, 100.0];
    assert!((j_bottom_up(2, &a).unwrap() - 1.3709489431201547).abs() < 1e-12);
    assert!((j_bottom_up(3, &a).unwrap() - 1.0723304703363119).abs() < 1e-12);
    assert!((j_top_down(2, &a).unwrap() - 0.95262490344437334).abs() < 1e-12);
    assert!((j_top_down(1, &a).unwrap() - 1.0102051443364379).abs() < 1e-12);

    let b = [40.0, 60.0, 65.0, 100.0];
    assert!((j_bottom_up(2, &b).unwrap() - 0.64758827296692001).abs() < 1e-12);
}

#[test]
fn scores_vanish_for_equal_rates() {
    for q in 1..=2 {
        assert_eq!(j_bottom_up(q, &[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(j_top_down(q, &[3.0, 3.0, 3.0]).unwrap(), 0.0);
    }
}

#[test]
fn scores_reject_bad_depth_and_order() {
    let a = [1.0, 2.0, 3.0];
    for f in [j_top_down, j_bottom_up] {
        assert!(matches!(
            f(0, &a),
            Err(ModelError::DepthOutOfRange { q: 0, max: 2 })
        ));
        assert!(f(3, &a).is_err());
        assert!(f(1, &[2.0, 1.0, 3.0]).is_err());
        assert!(f(1, &[1.0]).is_err());
    }
}

#[test]
fn bottom_up_score_dominates_top_down() {
    let mut rng = ChaCha12Rng::seed_from_u64(47);
    for trial in 0..1000 {
        let d = rng.random_range(2..=5);
        let a = random_increasing(&mut rng, d + 1, 0.5, 50.0, 0.05);
        for q in 1..d {
            let bu = j_bottom_up(q, &a).unwrap();
            let td = j_top_down(q, &a).unwrap();
            assert!(bu > td, "trial {trial} q={q}: bu={bu} td={td}");
        }
        let bu = j_bottom_up(d, &a).unwrap();
        let td = j_top_down(d, &a).unwrap();
        assert!((bu - td).abs() <= 1e-12, "trial {trial}: bu={bu} td={td}");
    }
}

#[test]
fn feasibility_report_separates_the_algorithms() {
    let report = feasible_depths(&[40.0, 45.0, 50.0, 100.0]).unwrap();
    assert_eq!(report.depth(), 3);
    assert_eq!(
        report.records().iter().map(|r| r.q).collect::<Vec<_>>(),
        vec![1, 2, 3]
    );

    let r1 = report.record(1);
    assert!(r1.feasible_td && r1.feasible_bu);

    let r2 = report.record(2);
    assert!((r2.j_bu - 1.3709489431201547).abs() < 1e-12);
    assert!((r2.j_td - 0.95262490344437334).abs() < 1e-12);
    assert!(r2.feasible_bu);
    assert!(!r2.feasible_td);

    // Depth 3 inherits the depth-2 top-down failure through the
    // running minimum, while the bottom-up score stays above 1.
    let r3 = report.record(3);
    assert!((r3.j_bu - 1.0723304703363119).abs() < 1e-12);
    assert!(r3.j_bu > 1.0 && !r3.feasible_td && r3.feasible_bu);

    for r in report.records() {
        assert_eq!(r.i_q.to_bits(), r.j_bu.to_bits());
    }

    let weaker = feasible_depths(&[40.0, 60.0, 65.0, 100.0]).unwrap();
    assert!((weaker.record(2).j_bu - 0.64758827296692001).abs() < 1e-12);
    assert!(!weaker.record(2).feasible_bu);
}

#[test]
fn feasibility_running_minimum_kills_later_depths() {
    // J_td dips below 1 at q=1 only, yet no depth is top-down feasible.
    let report = feasible_depths(&[2.2, 2.5, 3.0, 25.0]).unwrap();
    let tds: Vec<bool> = report.records().iter().map(|r| r.feasible_td).collect();
    let bus: Vec<bool> = report.records().iter().map(|r| r.feasible_bu).collect();
    assert!(report.record(2).j_td > 1.0);
    assert_eq!(tds, vec![false, false, false]);
    assert_eq!(bus, vec![true, true, true]);
}

#[test]
fn block_counts_match_the_balanced_tree() {
    assert_eq!(b_count(-1, 3).unwrap(), 8);
    assert_eq!(b_count(0, 3).unwrap(), 4);
    assert_eq!(b_count(1, 3).unwrap(), 2);
    assert_eq!(b_count(2, 3).unwrap(), 1);
    assert_eq!(b_count(3, 3).unwrap(), 1);
    assert_eq!(b_count(0, 1).unwrap(), 1);
    assert_eq!(b_count(1, 1).unwrap(), 1);
    assert!(b_count(-2, 3).is_err());
    assert!(b_count(4, 3).is_err());
}

#[test]
fn block_counts_telescope() {
    for d in 1..=6usize {
        for h1 in 0..=d {
            let total: u64 = (h1..=d).map(|h| b_count(h as i64, d).unwrap()).sum();
            assert_eq!(total, b_count(h1 as i64 - 1, d).unwrap(), "d={d} h1={h1}");
        }
    }
}

#[test]
fn super_community_density_values() {
    let p = [1.0, 2.0, 3.0, 4.0];
    assert!((p_bar(1, 3, &p).unwrap() - 2.75).abs() < 1e-15);
    assert!((p_bar(2, 3, &p).unwrap() - 3.5).abs() < 1e-15);
    assert_eq!(p_bar(3, 3, &p).unwrap(), 4.0);

    let q = [1.0, 2.0, 3.0, 10.0];
    assert!((p_bar(1, 3, &q).unwrap() - 4.25).abs() < 1e-15);

    let two = [0.1, 0.2, 0.4];
    assert!((p_bar(1, 2, &two).unwrap() - 0.3).abs() < 1e-15);

    assert!(matches!(
        p_bar(0, 3, &p),
        Err(ModelError::DepthOutOfRange { q: 0, max: 3 })
    ));
    assert!(p_bar(4, 3, &p).is_err());
    assert!(p_bar(1, 3, &two).is_err());
}

#[test]
fn robustness_gap_survives_noiseless_labels() {
    let p = [0.01, 0.02, 0.04, 0.08];
    let clean = make_profile(NoiseKind::Uniform, 0.0, 3).unwrap();
    let h0 = robustness_lhs(3, &p, &clean, 0).unwrap();
    let h1 = robustness_lhs(3, &p, &clean, 1).unwrap();
    assert!((h0 - 0.03).abs() < 1e-12);
    assert!((h1 - 0.02).abs() < 1e-12);
}

#[test]
fn robustness_adversarial_frozen_values() {
    let p = [0.01, 0.02, 0.04, 0.08];
    let cases = [
        (0.25, 0.0075, 0.01125),
        (0.45, 0.0003, 0.00605),
        (0.5, 0.0, 0.005),
    ];
    for (eta, h0_want, h1_want) in cases {
        let profile = make_profile(NoiseKind::Adversarial, eta, 3).unwrap();
        let h0 = robustness_lhs(3, &p, &profile, 0).unwrap();
        let h1 = robustness_lhs(3, &p, &profile, 1).unwrap();
        assert!((h0 - h0_want).abs() < 1e-10, "eta={eta}: h0={h0}");
        assert!((h1 - h1_want).abs() < 1e-10, "eta={eta}: h1={h1}");
    }
}

#[test]
fn robustness_adversarial_matches_quadratic_closed_form() {
    let mut rng = ChaCha12Rng::seed_from_u64(53);
    for trial in 0..50 {
        let d = rng.random_range(2..=4);
        let p = random_increasing(&mut rng, d + 1, 0.005, 0.3, 1e-3);
        let eta = rng.random_range(0.0..0.8);
        let profile = make_profile(NoiseKind::Adversarial, eta, d).unwrap();

        let got = robustness_lhs(d, &p, &profile, 0).unwrap();
        let pb1 = p_bar(1, d, &p).unwrap();
        let closed = (eta * eta - 2.0 * eta * (1.0 - eta)) * (pb1 - p[0])
            + (p[d - 1] - p[0]) * (1.0 - eta) * (1.0 - eta);
        assert!((got - closed).abs() < 1e-10, "trial {trial}: {got} vs {closed}");

        for h_ac in 1..=d.saturating_sub(2) {
            let got = robustness_lhs(d, &p, &profile, h_ac).unwrap();
            let want = (p[d - 1] - p[h_ac]) * (1.0 - eta) * (1.0 - eta);
            assert!(
                (got - want).abs() < 1e-15,
                "trial {trial} h_ac={h_ac}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn robustness_uniform_frozen_values() {
    let p = [0.01, 0.02, 0.04, 0.08];
    let profile = make_profile(NoiseKind::Uniform, 0.5, 3).unwrap();
    let h0 = robustness_lhs(3, &p, &profile, 0).unwrap();
    let h1 = robustness_lhs(3, &p, &profile, 1).unwrap();
    assert!((h0 - 0.0055102040816326541).abs() < 1e-12);
    assert!((h1 - 0.0036734693877551027).abs() < 1e-12);
}

#[test]
fn robustness_rejects_bad_inputs() {
    let p = [0.01, 0.02, 0.04, 0.08];
    let profile = make_profile(NoiseKind::Uniform, 0.3, 3).unwrap();
    assert!(robustness_lhs(3, &p, &profile, 2).is_err());
    assert!(robustness_lhs(3, &[0.01, 0.02, 0.04], &profile, 0).is_err());
    let shallow = make_profile(NoiseKind::Uniform, 0.3, 2).unwrap();
    assert!(robustness_lhs(3, &p, &shallow, 0).is_err());
}

#[test]
fn critical_noise_level_cases() {
    // Doubling ladder: the mean off-diagonal density equals p_{d-1},
    // collapsing the radicand.
    let ladder = [0.01, 0.02, 0.04, 0.08];
    let eta = eta_minus(3, &ladder).unwrap();
    assert!((eta - 0.5).abs() < 1e-15);

    let p = [0.01, 0.02, 0.03, 0.10];
    let eta = eta_minus(3, &p).unwrap();
    assert!((eta - 0.27527111173832874).abs() < 1e-12);
    assert!(eta > 0.0 && eta < 0.5);

    // Heavy intermediate levels: recovery holds for every eta < 1/2, no
    // critical level to report.
    assert!(eta_minus(3, &[0.01, 0.02, 0.10, 0.11]).is_none());
}

#[test]
fn critical_noise_level_brackets_the_sign_change() {
    let p = [0.01, 0.02, 0.03, 0.10];
    let eta = eta_minus(3, &p).unwrap();
    let below = make_profile(NoiseKind::Adversarial, eta - 0.02, 3).unwrap();
    let above = make_profile(NoiseKind::Adversarial, eta + 0.02, 3).unwrap();
    assert!(robustness_lhs(3, &p, &below, 0).unwrap() > 0.0);
    assert!(robustness_lhs(3, &p, &above, 0).unwrap() < 0.0);
}
