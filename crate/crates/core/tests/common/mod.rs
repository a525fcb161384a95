//! Shared oracles for the contract tests.
//!
//! Everything in this module is deliberately naive: brute-force
//! permutation scans, dense matrix materializations, grid searches.
//! The library is tested against these independent implementations,
//! never against itself.

#![allow(dead_code)]

use hcd::model::{CommunityTree, Graph, Partition, TreeNode};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Minimum of sum |C_k Δ C'_τ(k)| over all permutations τ, padding the
/// smaller side with empty clusters. Factorial scan; K ≤ ~8 only.
pub fn loss_brute_force(truth: &Partition, pred: &Partition) -> u64 {
    assert_eq!(truth.len(), pred.len());
    let k = truth.k().max(pred.k());
    let members = |p: &Partition| -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); k];
        for i in 0..p.len() {
            m[p.label(i)].push(i);
        }
        m
    };
    let ct = members(truth);
    let cp = members(pred);
    let mut best = u64::MAX;
    let mut perm: Vec<usize> = (0..k).collect();
    permute(&mut perm, 0, &mut |tau| {
        let mut total = 0u64;
        for a in 0..k {
            total += sym_diff(&ct[a], &cp[tau[a]]);
        }
        best = best.min(total);
    });
    best
}

fn sym_diff(a: &[usize], b: &[usize]) -> u64 {
    let inter = a.iter().filter(|x| b.contains(x)).count() as u64;
    a.len() as u64 + b.len() as u64 - 2 * inter
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}

/// Dense N×N tree-similarity error: materializes both S matrices with
/// S_ij = depth of lca of the leaves holding i and j (diagonal included)
/// and returns ‖S_pred − S_truth‖_F² / ‖S_truth‖_F².
///
/// `leaf_of_cluster_*` maps a cluster id to the index of its leaf in the
/// tree's lexicographic leaf order.
pub fn tree_error_dense(
    truth: &CommunityTree,
    truth_leaf_of_cluster: &[usize],
    pred: &CommunityTree,
    pred_leaf_of_cluster: &[usize],
    labels: &Partition,
) -> f64 {
    let n = labels.len();
    let s = |tree: &CommunityTree, map: &[usize], i: usize, j: usize| -> f64 {
        let a = &tree.leaves()[map[labels.label(i)]];
        let b = &tree.leaves()[map[labels.label(j)]];
        hcd::model::lca(a, b).depth() as f64
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in 0..n {
            let st = s(truth, truth_leaf_of_cluster, i, j);
            let sp = s(pred, pred_leaf_of_cluster, i, j);
            num += (sp - st) * (sp - st);
            den += st * st;
        }
    }
    num / den
}

/// Edge density by direct pair counting over the graph's edge set.
pub fn density_naive(g: &Graph, a: &[usize], b: &[usize]) -> f64 {
    let mut w = 0u64;
    for &i in a {
        for &j in b {
            if g.has_edge(i, j) {
                w += 1;
            }
        }
    }
    w as f64 / (a.len() as f64 * b.len() as f64)
}

/// Grid maximizer for the Chernoff-Hellinger objective
/// f(t) = −Σ_c π_c · ln((1−p_ac)^t (1−p_bc)^{1−t} + p_ac^t p_bc^{1−t}),
/// which equals (1−t)·Σ_c π_c·D_t. Scans `points` interior grid points.
pub fn ch_grid_oracle(pi: &[f64], row_a: &[f64], row_b: &[f64], points: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 1..points {
        let t = i as f64 / points as f64;
        let mut total = 0.0;
        for c in 0..pi.len() {
            let (p, q) = (row_a[c], row_b[c]);
            let s = (1.0 - p).powf(t) * (1.0 - q).powf(1.0 - t) + p.powf(t) * q.powf(1.0 - t);
            total += pi[c] * (-s.ln());
        }
        best = best.max(total);
    }
    best
}

/// D_{1/2} between Bernoulli(p) and Bernoulli(q), straight from the
/// t = 1/2 closed form.
pub fn d_half(p: f64, q: f64) -> f64 {
    -2.0 * (((1.0 - p) * (1.0 - q)).sqrt() + (p * q).sqrt()).ln()
}

/// Erdős-Rényi G(n, p) sampler for property tests. Naive O(n²) loop,
/// independent of the library's block sampler.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Random partition of n nodes into exactly k non-empty clusters.
pub fn random_partition(n: usize, k: usize, seed: u64) -> Partition {
    assert!(k <= n);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    labels.shuffle(&mut rng);
    Partition::new(&labels)
}

/// Graph from explicit edge pairs with untyped usize endpoints.
pub fn graph_of(n: usize, edges: &[(usize, usize)]) -> Graph {
    let pairs: Vec<(u32, u32)> = edges.iter().map(|&(i, j)| (i as u32, j as u32)).collect();
    Graph::from_edges(n, &pairs).unwrap()
}

/// Disjoint union of complete graphs with the given block sizes.
pub fn disjoint_cliques(sizes: &[usize]) -> Graph {
    let n: usize = sizes.iter().sum();
    let mut edges = Vec::new();
    let mut offset = 0;
    for &s in sizes {
        for i in 0..s {
            for j in (i + 1)..s {
                edges.push(((offset + i) as u32, (offset + j) as u32));
            }
        }
        offset += s;
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Path helper: TreeNode from a slice of child indices.
pub fn node(path: &[u8]) -> TreeNode {
    TreeNode::from_indices(path)
}
