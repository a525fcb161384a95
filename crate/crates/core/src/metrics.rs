//! Evaluation of recovered clusterings against planted ones: the
//! permutation-optimal mis-clustering count, its per-depth accuracy
//! form, a similarity-matrix distance between trees, and inversion
//! counting for dendrogram sanity checks. All functions are pure.

use crate::model::{ClusterTree, Dendrogram, ModelError, Partition};

/// Number of mis-clustered nodes: the minimum over cluster matchings
/// of the summed symmetric differences between matched clusters. Each
/// misplaced node appears in two symmetric differences, so identical
/// cluster sizes make the value twice the misplacement count; it is
/// reported raw, without halving.
///
/// Partitions with different cluster counts are compared by padding
/// the smaller side with empty clusters, which charges spurious and
/// missing clusters their full size. The matching is solved as a
/// minimum-cost assignment with cost(k, l) = |C_k| + |C'_l| − 2|C_k ∩ C'_l|.
pub fn clustering_loss(truth: &Partition, pred: &Partition) -> Result<u64, ModelError> {
    if truth.len() != pred.len() {
        return Err(ModelError::InvalidPartition(format!(
            "partitions cover {} and {} nodes",
            truth.len(),
            pred.len()
        )));
    }
    let k = truth.k().max(pred.k());
    if k == 0 {
        return Ok(0);
    }
    let mut inter = vec![vec![0u64; k]; k];
    for i in 0..truth.len() {
        inter[truth.label(i)][pred.label(i)] += 1;
    }
    let mut size_truth = vec![0u64; k];
    let mut size_pred = vec![0u64; k];
    for (a, s) in truth.cluster_sizes().into_iter().enumerate() {
        size_truth[a] = s as u64;
    }
    for (b, s) in pred.cluster_sizes().into_iter().enumerate() {
        size_pred[b] = s as u64;
    }
    let cost: Vec<Vec<u64>> = (0..k)
        .map(|a| (0..k).map(|b| size_truth[a] + size_pred[b] - 2 * inter[a][b]).collect())
        .collect();
    Ok(assignment_cost(&cost))
}

/// Minimum total cost of a perfect matching on a square cost matrix,
/// by the potential-based Hungarian algorithm in O(k³). Rows and
/// columns are 1-indexed internally; column 0 is the scratch column
/// of the augmenting search.
fn assignment_cost(cost: &[Vec<u64>]) -> u64 {
    let k = cost.len();
    let inf = i64::MAX / 4;
    let mut pot_row = vec![0i64; k + 1];
    let mut pot_col = vec![0i64; k + 1];
    let mut matched_row = vec![0usize; k + 1];
    let mut prev_col = vec![0usize; k + 1];
    for row in 1..=k {
        matched_row[0] = row;
        let mut j0 = 0usize;
        let mut min_slack = vec![inf; k + 1];
        let mut visited = vec![false; k + 1];
        loop {
            visited[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if visited[j] {
                    continue;
                }
                let slack = cost[i0 - 1][j - 1] as i64 - pot_row[i0] - pot_col[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    prev_col[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if visited[j] {
                    pot_row[matched_row[j]] += delta;
                    pot_col[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = prev_col[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    (1..=k).map(|j| cost[matched_row[j] - 1][j - 1]).sum()
}

/// Fraction of nodes whose depth-q super-community is recovered:
/// 1 − loss(coarsened truth, coarsened prediction)/N. Each side is
/// coarsened onto its own tree's depth-q frontier, with q clamped to
/// the tree depth so leaves above the cut persist.
pub fn accuracy_at_depth(
    truth_labels: &Partition,
    truth_tree: &ClusterTree,
    pred_labels: &Partition,
    pred_tree: &ClusterTree,
    q: usize,
) -> Result<f64, ModelError> {
    if truth_labels.len() != pred_labels.len() {
        return Err(ModelError::InvalidPartition(format!(
            "partitions cover {} and {} nodes",
            truth_labels.len(),
            pred_labels.len()
        )));
    }
    let coarse_truth =
        truth_tree.super_communities(truth_labels, q.min(truth_tree.tree().depth()))?;
    let coarse_pred = pred_tree.super_communities(pred_labels, q.min(pred_tree.tree().depth()))?;
    let loss = clustering_loss(&coarse_truth, &coarse_pred)?;
    Ok(1.0 - loss as f64 / truth_labels.len() as f64)
}

/// Relative squared distance between the two trees' node-similarity
/// matrices, S_ij = depth of the lowest common ancestor of the
/// clusters of i and j (the diagonal holds each cluster's own depth):
/// ‖S_pred − S_truth‖² / ‖S_truth‖² in the Frobenius norm.
///
/// Nodes sharing a cluster share matrix entries, so the sum collapses
/// to cluster pairs weighted by n_a·n_b and the N×N matrices are never
/// materialized.
pub fn tree_error_ratio(
    truth: &ClusterTree,
    pred: &ClusterTree,
    labels: &Partition,
) -> Result<f64, ModelError> {
    let k = labels.k();
    if truth.k() != k || pred.k() != k {
        return Err(ModelError::InvalidPartition(format!(
            "{k} clusters for trees with {} and {} leaves",
            truth.k(),
            pred.k()
        )));
    }
    let sizes = labels.cluster_sizes();
    let mut diff = 0.0;
    let mut norm = 0.0;
    for a in 0..k {
        for b in 0..k {
            let w = (sizes[a] * sizes[b]) as f64;
            let s_truth = truth.lca_depth(a, b) as f64;
            let s_pred = pred.lca_depth(a, b) as f64;
            diff += w * (s_pred - s_truth) * (s_pred - s_truth);
            norm += w * s_truth * s_truth;
        }
    }
    Ok(diff / norm)
}

/// Number of merges whose similarity strictly exceeds that of a merge
/// they consume: such a parent sits below its child in a dendrogram
/// drawn with height = similarity. Agglomeration on a similarity that
/// is non-increasing along the merge sequence never produces any.
pub fn count_inversions(dend: &Dendrogram) -> u64 {
    let k = dend.k();
    dend.merges
        .iter()
        .filter(|m| {
            [m.left, m.right]
                .iter()
                .any(|&child| child >= k && m.similarity > dend.merges[child - k].similarity)
        })
        .count() as u64
}
