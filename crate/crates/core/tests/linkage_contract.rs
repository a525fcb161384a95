//! Contract tests for edge densities, the average-linkage merge loop,
//! the bottom-up pipeline, and dendrogram-to-tree conversion.

mod common;

use hcd::generator::{btsbm_params, sample_hsbm};
use hcd::linkage::{average_linkage, bottom_up_hcd, edge_density, tree_from_dendrogram};
use hcd::model::{ClusterTree, Graph, ModelError, Partition};

#[test]
fn density_counts_cross_edges_per_pair() {
    let g = common::graph_of(3, &[(0, 2)]);
    assert_eq!(edge_density(&g, &[0, 1], &[2]).unwrap(), 0.5);

    let bipartite = common::graph_of(5, &[(0, 3), (0, 4), (1, 3), (1, 4), (2, 3), (2, 4)]);
    assert_eq!(edge_density(&bipartite, &[0, 1, 2], &[3, 4]).unwrap(), 1.0);

    let sparse = common::graph_of(4, &[(0, 1)]);
    assert_eq!(edge_density(&sparse, &[0, 1], &[2, 3]).unwrap(), 0.0);

    assert!(edge_density(&sparse, &[], &[1]).is_err(), "empty side");
    assert!(edge_density(&sparse, &[0, 1], &[1, 2]).is_err(), "overlap");
    assert!(edge_density(&sparse, &[0, 0], &[1]).is_err(), "duplicate");
}

#[test]
fn single_cluster_has_no_merges() {
    let g = common::gnp(10, 0.3, 1);
    let dend = average_linkage(&g, &Partition::new(&vec![0; 10]));
    assert!(dend.merges.is_empty());
    assert!(dend.validate().is_ok());
}

#[test]
fn two_clusters_merge_at_their_density() {
    let g = common::gnp(12, 0.4, 3);
    let labels = common::random_partition(12, 2, 9);
    let dend = average_linkage(&g, &labels);
    assert_eq!(dend.merges.len(), 1);
    let m = dend.merges[0];
    assert_eq!((m.left, m.right, m.new_id), (0, 1, 2));
    let members = labels.members();
    assert_eq!(m.similarity, common::density_naive(&g, &members[0], &members[1]));
}

#[test]
fn merged_density_is_the_size_weighted_mean() {
    // Clusters {0,1}, {2,3}, {4,5}: full bipartite between the first
    // two, then densities 1/2 and 1/4 toward the third, giving
    // (2+1)/(4·2) = 0.375 after the first merge.
    let g = common::graph_of(
        6,
        &[(0, 2), (0, 3), (1, 2), (1, 3), (0, 4), (1, 5), (2, 4)],
    );
    let labels = Partition::new(&[0, 0, 1, 1, 2, 2]);
    let dend = average_linkage(&g, &labels);
    assert_eq!(dend.merges.len(), 2);
    assert_eq!(dend.merges[0].similarity, 1.0);
    assert_eq!((dend.merges[0].left, dend.merges[0].right), (0, 1));
    assert_eq!(dend.merges[1].similarity, 0.375);
    assert_eq!((dend.merges[1].left, dend.merges[1].right), (2, 3));

    assert_eq!(dend.to_newick(), "(2:0,(0:0,1:0)1.0:0)0.375;");
    assert_eq!(dend.cut(3).labels(), labels.labels());
    assert_eq!(dend.cut(2).labels(), &[0, 0, 0, 0, 1, 1]);
    assert_eq!(dend.cut(1).labels(), &[0; 6]);
}

#[test]
fn sparsest_mode_merges_least_dense_first() {
    use hcd::linkage::{average_linkage_with, MergeOrder};
    let g = common::graph_of(
        6,
        &[(0, 2), (0, 3), (1, 2), (1, 3), (0, 4), (1, 5), (2, 4)],
    );
    let labels = Partition::new(&[0, 0, 1, 1, 2, 2]);
    let dend = average_linkage_with(&g, &labels, MergeOrder::Sparsest);
    assert_eq!((dend.merges[0].left, dend.merges[0].right), (1, 2));
    assert_eq!(dend.merges[0].similarity, 0.25);
    assert_eq!(dend.merges[1].similarity, 0.75);
}

#[test]
fn ties_break_to_the_smallest_cluster_pair() {
    let g = Graph::from_edges(8, &[]).unwrap();
    let labels = Partition::new(&[0, 0, 1, 1, 2, 2, 3, 3]);
    let dend = average_linkage(&g, &labels);
    let seq: Vec<(usize, usize, usize)> =
        dend.merges.iter().map(|m| (m.left, m.right, m.new_id)).collect();
    assert_eq!(seq, vec![(0, 1, 4), (2, 3, 5), (4, 5, 6)]);
    assert!(dend.merges.iter().all(|m| m.similarity == 0.0));
}

#[test]
fn similarities_never_increase() {
    for seed in 0..100u64 {
        let n = 20;
        let p = 0.1 + (seed % 5) as f64 * 0.15;
        let g = common::gnp(n, p, seed);
        let k = 2 + (seed as usize) % 6;
        let dend = average_linkage(&g, &common::random_partition(n, k, seed + 1000));
        for w in dend.merges.windows(2) {
            assert!(
                w[1].similarity <= w[0].similarity,
                "inversion at seed {seed}: {} then {}",
                w[0].similarity,
                w[1].similarity
            );
        }
    }
}

/// Replays each dendrogram against naive edge counting: every merge
/// must pick the densest available pair (ties to the smallest ids) and
/// record exactly the density it had at that moment.
#[test]
fn merge_loop_matches_naive_replay() {
    let w_naive = |g: &Graph, a: &[usize], b: &[usize]| -> u64 {
        a.iter()
            .map(|&i| b.iter().filter(|&&j| g.has_edge(i, j)).count() as u64)
            .sum()
    };
    for seed in 0..20u64 {
        let n = 24;
        let g = common::gnp(n, 0.15 + (seed % 4) as f64 * 0.2, seed);
        let k = 3 + (seed as usize) % 4;
        let dend = average_linkage(&g, &common::random_partition(n, k, seed + 50));

        let mut members = common::random_partition(n, k, seed + 50).members();
        let mut alive: Vec<usize> = (0..k).collect();
        for m in &dend.merges {
            // Densities of all available pairs, compared exactly.
            let density = |a: usize, b: usize| -> (u64, u64) {
                let w = w_naive(&g, &members[a], &members[b]);
                (w, (members[a].len() * members[b].len()) as u64)
            };
            let (bw, bp) = density(m.left, m.right);
            for (x, &a) in alive.iter().enumerate() {
                for &b in &alive[x + 1..] {
                    let (w, p) = density(a, b);
                    let diff =
                        (w as u128 * bp as u128).cmp(&(bw as u128 * p as u128));
                    assert!(
                        diff != std::cmp::Ordering::Greater,
                        "seed {seed}: pair ({a},{b}) denser than merged ({},{})",
                        m.left,
                        m.right
                    );
                    if diff == std::cmp::Ordering::Equal {
                        assert!((m.left, m.right) <= (a, b));
                    }
                }
            }
            assert_eq!(m.similarity, bw as f64 / bp as f64, "seed {seed}");

            let mut merged = [members[m.left].clone(), members[m.right].clone()].concat();
            merged.sort_unstable();
            members.push(merged);
            alive.retain(|&c| c != m.left && c != m.right);
            alive.push(m.new_id);
        }
    }
}

#[test]
fn relabeling_nodes_preserves_the_dendrogram() {
    let n = 40;
    let g = common::gnp(n, 0.3, 17);
    let labels = common::random_partition(n, 5, 18);
    let dend = average_linkage(&g, &labels);

    let sigma = |i: usize| (i * 7 + 3) % n;
    let edges: Vec<(u32, u32)> = g
        .edges()
        .map(|(i, j)| (sigma(i as usize) as u32, sigma(j as usize) as u32))
        .collect();
    let gp = Graph::from_edges(n, &edges).unwrap();
    let mut relabeled = vec![0; n];
    for i in 0..n {
        relabeled[sigma(i)] = labels.label(i);
    }
    let dend_p = average_linkage(&gp, &Partition::with_k(relabeled, 5).unwrap());
    assert_eq!(dend.merges, dend_p.merges);
}

#[test]
fn bottom_up_composes_flat_and_linkage() {
    let g = common::disjoint_cliques(&[4, 4]);
    let blocks = Partition::new(&[0, 0, 0, 0, 1, 1, 1, 1]);
    let (flat, dend) =
        bottom_up_hcd(&g, |_: &Graph| Ok::<_, ModelError>(blocks.clone())).unwrap();
    assert_eq!(flat, blocks);
    assert_eq!(dend.merges.len(), 1);
    assert_eq!(dend.merges[0].similarity, 0.0);

    let (_, trivial) =
        bottom_up_hcd(&g, |_: &Graph| Ok::<_, ModelError>(Partition::new(&[0; 8]))).unwrap();
    assert!(trivial.merges.is_empty());

    let failing = bottom_up_hcd(&g, |_: &Graph| {
        Err::<Partition, _>(ModelError::InvalidPartition("no clustering".into()))
    });
    assert!(failing.is_err());
}

#[test]
fn true_labels_recover_the_planted_tree() {
    let params = btsbm_params(3, &[40.0, 60.0, 80.0, 100.0], 3200).unwrap();
    let planted = ClusterTree::identity(params.tree.clone());
    for seed in 0..10u64 {
        let (g, truth) = sample_hsbm(&params, 3200, 100 + seed).unwrap();
        let (_, dend) =
            bottom_up_hcd(&g, |_: &Graph| Ok::<_, ModelError>(truth.clone())).unwrap();
        let ct = tree_from_dendrogram(&dend).unwrap();
        assert_eq!(ct.k(), 8);
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(
                    ct.lca_depth(a, b),
                    planted.lca_depth(a, b),
                    "seed {seed}, clusters ({a},{b})"
                );
            }
        }
    }
}

#[test]
fn dendrogram_trees_transcribe_the_merge_structure() {
    let g = Graph::from_edges(4, &[]).unwrap();

    // Two clusters: root over leaves 0 and 1.
    let two = average_linkage(&g, &Partition::new(&[0, 0, 1, 1]));
    let ct = tree_from_dendrogram(&two).unwrap();
    let paths: Vec<String> = ct.tree().leaves().iter().map(|l| l.to_string()).collect();
    assert_eq!(paths, vec!["0", "1"]);
    assert_eq!(ct.cluster_of_leaf(0), 0);
    assert_eq!(ct.cluster_of_leaf(1), 1);

    // Four clusters merged pairwise: full balanced depth-2 tree.
    let four = average_linkage(&g, &Partition::new(&[0, 1, 2, 3]));
    let ct = tree_from_dendrogram(&four).unwrap();
    assert!(ct.tree().is_balanced(2));
    assert_eq!(ct.tree().depth(), 2);
    for c in 0..4 {
        assert_eq!(ct.cluster_of_leaf(c), c);
    }
}

#[test]
fn caterpillar_merges_give_an_unbalanced_tree() {
    use hcd::model::{Dendrogram, Merge};
    let initial = Partition::new(&[0, 1, 2, 3]);
    let dend = Dendrogram {
        initial: initial.clone(),
        merges: vec![
            Merge { left: 0, right: 1, similarity: 0.9, new_id: 4 },
            Merge { left: 4, right: 2, similarity: 0.5, new_id: 5 },
            Merge { left: 5, right: 3, similarity: 0.1, new_id: 6 },
        ],
    };
    let ct = tree_from_dendrogram(&dend).unwrap();
    let paths: Vec<String> = ct.tree().leaves().iter().map(|l| l.to_string()).collect();
    assert_eq!(paths, vec!["000", "001", "01", "1"]);
    assert_eq!(ct.tree().depth(), 3);
    // The big subtree takes child 0, so cluster 3 sits alone at "1".
    assert_eq!(ct.leaf_of_cluster(3).to_string(), "1");
    assert_eq!(ct.leaf_of_cluster(0).to_string(), "000");

    // Mirrored merge order: larger subtree still comes first.
    let mirrored = Dendrogram {
        initial,
        merges: vec![
            Merge { left: 2, right: 3, similarity: 0.9, new_id: 4 },
            Merge { left: 4, right: 1, similarity: 0.5, new_id: 5 },
            Merge { left: 5, right: 0, similarity: 0.1, new_id: 6 },
        ],
    };
    let ct = tree_from_dendrogram(&mirrored).unwrap();
    assert_eq!(ct.leaf_of_cluster(0).to_string(), "1");
    assert_eq!(ct.leaf_of_cluster(1).to_string(), "01");
    assert_eq!(ct.leaf_of_cluster(2).to_string(), "000");
    assert_eq!(ct.leaf_of_cluster(3).to_string(), "001");
}
