//! Edge densities, the average-linkage merge loop, and the bottom-up
//! recovery pipeline: flat-cluster a graph, then agglomerate the
//! clusters by inter-cluster edge density.
//!
//! Densities are kept as integer (edge count, pair count) pairs and
//! compared by cross-multiplication, so merge decisions never hinge on
//! float rounding and the size-weighted density update is exact: the
//! merged cluster's count toward a third is just the sum of its parts'
//! counts.

use crate::model::{
    ClusterTree, CommunityTree, Dendrogram, Graph, Merge, ModelError, Partition, TreeNode,
};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Fraction of present edges among the |a|·|b| pairs between two
/// disjoint, duplicate-free node sets.
pub fn edge_density(graph: &Graph, a: &[usize], b: &[usize]) -> Result<f64, ModelError> {
    if a.is_empty() || b.is_empty() {
        return Err(ModelError::InvalidNodeSet("empty node set".into()));
    }
    let n = graph.n();
    let mut side = vec![0u8; n];
    for &i in a {
        if i >= n {
            return Err(ModelError::InvalidNodeSet(format!("node {i} out of range")));
        }
        if side[i] != 0 {
            return Err(ModelError::InvalidNodeSet(format!("node {i} listed twice")));
        }
        side[i] = 1;
    }
    for &j in b {
        if j >= n {
            return Err(ModelError::InvalidNodeSet(format!("node {j} out of range")));
        }
        if side[j] == 1 {
            return Err(ModelError::InvalidNodeSet(format!("node {j} is in both sets")));
        }
        if side[j] == 2 {
            return Err(ModelError::InvalidNodeSet(format!("node {j} listed twice")));
        }
        side[j] = 2;
    }
    let w: u64 = a
        .iter()
        .map(|&i| graph.neighbors(i).iter().filter(|&&j| side[j as usize] == 2).count() as u64)
        .sum();
    Ok(w as f64 / (a.len() as f64 * b.len() as f64))
}

/// Which pair the merge loop picks at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeOrder {
    /// Highest density first, the assortative default.
    Densest,
    /// Lowest density first, for disassortative hierarchies.
    Sparsest,
}

/// A pair of alive clusters in the merge heap. Ordering prefers the
/// better density (by `flip`), then the lexicographically smallest id
/// pair, so the heap's max is always the next merge.
struct Candidate {
    w: u64,
    pairs: u64,
    lo: usize,
    hi: usize,
    flip: bool,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.w as u128 * other.pairs as u128;
        let rhs = other.w as u128 * self.pairs as u128;
        let by_density = if self.flip { rhs.cmp(&lhs) } else { lhs.cmp(&rhs) };
        by_density
            .then_with(|| other.lo.cmp(&self.lo))
            .then_with(|| other.hi.cmp(&self.hi))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Agglomerates the initial clusters by average linkage on edge
/// density, densest pair first. All clusters must be non-empty.
pub fn average_linkage(graph: &Graph, initial: &Partition) -> Dendrogram {
    average_linkage_with(graph, initial, MergeOrder::Densest)
}

/// As [`average_linkage`] with an explicit merge order.
pub fn average_linkage_with(
    graph: &Graph,
    initial: &Partition,
    order: MergeOrder,
) -> Dendrogram {
    let k = initial.k();
    assert!(k >= 1, "need at least one cluster");
    let sizes_now = initial.cluster_sizes();
    assert!(sizes_now.iter().all(|&s| s > 0), "clusters must be non-empty");
    let flip = order == MergeOrder::Sparsest;

    let total = 2 * k - 1;
    let mut w = vec![0u64; total * total];
    for (i, j) in graph.edges() {
        let (a, b) = (initial.label(i as usize), initial.label(j as usize));
        if a != b {
            w[a * total + b] += 1;
            w[b * total + a] += 1;
        }
    }
    let mut sizes = vec![0u64; total];
    for (c, &s) in sizes_now.iter().enumerate() {
        sizes[c] = s as u64;
    }
    let mut alive = vec![false; total];
    alive[..k].fill(true);

    let mut heap = BinaryHeap::with_capacity(k * k / 2);
    for lo in 0..k {
        for hi in lo + 1..k {
            heap.push(Candidate {
                w: w[lo * total + hi],
                pairs: sizes[lo] * sizes[hi],
                lo,
                hi,
                flip,
            });
        }
    }

    let mut merges = Vec::with_capacity(k - 1);
    for step in 0..k - 1 {
        let cand = loop {
            let c = heap.pop().expect("merge heap exhausted");
            if alive[c.lo] && alive[c.hi] {
                debug_assert_eq!(c.w, w[c.lo * total + c.hi]);
                break c;
            }
        };
        let new_id = k + step;
        merges.push(Merge {
            left: cand.lo,
            right: cand.hi,
            similarity: cand.w as f64 / cand.pairs as f64,
            new_id,
        });
        alive[cand.lo] = false;
        alive[cand.hi] = false;
        alive[new_id] = true;
        sizes[new_id] = sizes[cand.lo] + sizes[cand.hi];
        for c in 0..new_id {
            if !alive[c] {
                continue;
            }
            let combined = w[cand.lo * total + c] + w[cand.hi * total + c];
            w[new_id * total + c] = combined;
            w[c * total + new_id] = combined;
            heap.push(Candidate {
                w: combined,
                pairs: sizes[c] * sizes[new_id],
                lo: c,
                hi: new_id,
                flip,
            });
        }
    }
    Dendrogram { initial: initial.clone(), merges }
}

/// Flat-clusters the graph, then agglomerates the clusters by average
/// linkage. Clusterer failures propagate.
pub fn bottom_up_hcd<E>(
    graph: &Graph,
    flat: impl FnOnce(&Graph) -> Result<Partition, E>,
) -> Result<(Partition, Dendrogram), E> {
    assert!(graph.n() > 0, "empty graph");
    let partition = flat(graph)?;
    let dendrogram = average_linkage(graph, &partition);
    Ok((partition, dendrogram))
}

/// Converts a merge history into a binary community tree. At each
/// internal node the larger subtree takes child 0, ties going to the
/// side containing the smallest cluster id; leaves keep their cluster
/// ids through the returned binding.
pub fn tree_from_dendrogram(dend: &Dendrogram) -> Result<ClusterTree, ModelError> {
    dend.validate()?;
    let k = dend.k();
    let total = k + dend.merges.len();
    let mut leaf_count = vec![1usize; total];
    let mut min_id: Vec<usize> = (0..total).collect();
    for m in &dend.merges {
        leaf_count[m.new_id] = leaf_count[m.left] + leaf_count[m.right];
        min_id[m.new_id] = min_id[m.left].min(min_id[m.right]);
    }

    let mut paths: Vec<Option<TreeNode>> = vec![None; k];
    let mut stack = vec![(total - 1, TreeNode::root())];
    while let Some((id, path)) = stack.pop() {
        if id < k {
            paths[id] = Some(path);
            continue;
        }
        let m = &dend.merges[id - k];
        let left_first = match leaf_count[m.left].cmp(&leaf_count[m.right]) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => min_id[m.left] < min_id[m.right],
        };
        let (c0, c1) = if left_first { (m.left, m.right) } else { (m.right, m.left) };
        stack.push((c0, path.child(0)));
        stack.push((c1, path.child(1)));
    }

    let paths: Vec<TreeNode> = paths.into_iter().map(Option::unwrap).collect();
    let tree = CommunityTree::from_leaves(paths.clone())?;
    let mut cluster_of_leaf = vec![0usize; k];
    for (c, p) in paths.iter().enumerate() {
        cluster_of_leaf[tree.leaf_index(p).unwrap()] = c;
    }
    ClusterTree::new(tree, cluster_of_leaf)
}
