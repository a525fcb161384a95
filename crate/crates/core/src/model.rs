//! Core data types: tree paths, community trees, model parameters,
//! graphs, partitions, and dendrograms, plus their text formats.
//!
//! A community tree is stored as its set of leaves, each leaf being the
//! path of child indices from the root. All derived structure (internal
//! nodes, ancestors, frontiers) is recomputed from the leaf set, which
//! keeps the representation canonical: two trees are equal exactly when
//! their leaf sets are.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Errors from constructing or parsing the core types.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid dendrogram: {0}")]
    InvalidDendrogram(String),
    #[error("invalid noise profile: {0}")]
    InvalidProfile(String),
    #[error("invalid node set: {0}")]
    InvalidNodeSet(String),
    #[error("depth {q} is outside 1..={max}")]
    DepthOutOfRange { q: usize, max: usize },
    #[error("eigensolver did not converge: residual {residual:.3e}")]
    NoConvergence { residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

/// A node of a community tree, identified by its path from the root:
/// the sequence of child indices taken at each level. The root is the
/// empty path. Ordering is lexicographic on the path, so a parent sorts
/// before its descendants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeNode(Vec<u8>);

impl TreeNode {
    pub fn root() -> Self {
        TreeNode(Vec::new())
    }

    /// Node from explicit child indices. Indices must be single digits
    /// so that every node has a one-character-per-level text form.
    pub fn from_indices(path: &[u8]) -> Self {
        assert!(path.iter().all(|&i| i < 10), "child indices must be < 10");
        TreeNode(path.to_vec())
    }

    /// Parses the text form: `-` for the root, otherwise one digit per
    /// level, e.g. `010`.
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        if s == "-" {
            return Ok(Self::root());
        }
        if s.is_empty() {
            return Err(ModelError::Parse("empty tree node".into()));
        }
        let mut path = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c.to_digit(10) {
                Some(d) => path.push(d as u8),
                None => return Err(ModelError::Parse(format!("bad tree node {s:?}"))),
            }
        }
        Ok(TreeNode(path))
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn child(&self, i: u8) -> Self {
        assert!(i < 10, "child indices must be < 10");
        let mut path = self.0.clone();
        path.push(i);
        TreeNode(path)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.is_root() {
            None
        } else {
            Some(TreeNode(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_prefix_of(&self, other: &Self) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// The ancestor at the given depth; the node itself if already at
    /// or above that depth.
    pub fn truncate(&self, depth: usize) -> Self {
        TreeNode(self.0[..depth.min(self.0.len())].to_vec())
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, "-");
        }
        for i in &self.0 {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// Lowest common ancestor of two nodes: their longest common prefix.
pub fn lca(a: &TreeNode, b: &TreeNode) -> TreeNode {
    let n = a
        .0
        .iter()
        .zip(&b.0)
        .take_while(|(x, y)| x == y)
        .count();
    TreeNode(a.0[..n].to_vec())
}

/// A rooted community tree, stored as its lexicographically sorted
/// leaves. Leaf index in that order is the canonical community id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunityTree {
    leaves: Vec<TreeNode>,
    depth: usize,
}

impl CommunityTree {
    /// Builds a tree from its leaf set. Rejects duplicate leaves,
    /// leaves that are ancestors of other leaves, and gaps in the child
    /// indices under any node.
    pub fn from_leaves(mut leaves: Vec<TreeNode>) -> Result<Self, ModelError> {
        if leaves.is_empty() {
            return Err(ModelError::InvalidTree("no leaves".into()));
        }
        leaves.sort();
        for w in leaves.windows(2) {
            if w[0] == w[1] {
                return Err(ModelError::InvalidTree(format!("duplicate leaf {}", w[0])));
            }
            if w[0].is_prefix_of(&w[1]) {
                return Err(ModelError::InvalidTree(format!(
                    "leaf {} is an ancestor of leaf {}",
                    w[0], w[1]
                )));
            }
        }
        let depth = leaves.iter().map(TreeNode::depth).max().unwrap();
        let tree = CommunityTree { leaves, depth };
        for (node, children) in tree.child_indices() {
            let max = *children.iter().max().unwrap() as usize;
            if children.len() != max + 1 {
                return Err(ModelError::InvalidTree(format!(
                    "child indices under {node} are not contiguous from 0"
                )));
            }
        }
        Ok(tree)
    }

    /// The complete `arity`-ary tree of the given depth, with
    /// `arity^depth` leaves.
    pub fn balanced(arity: usize, depth: usize) -> Self {
        assert!((1..=10).contains(&arity));
        let mut leaves = vec![TreeNode::root()];
        for _ in 0..depth {
            leaves = leaves
                .iter()
                .flat_map(|u| (0..arity as u8).map(|i| u.child(i)))
                .collect();
        }
        CommunityTree { leaves, depth }
    }

    pub fn leaves(&self) -> &[TreeNode] {
        &self.leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Depth of the deepest leaf.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Index of a leaf in the sorted leaf order.
    pub fn leaf_index(&self, node: &TreeNode) -> Option<usize> {
        self.leaves.binary_search(node).ok()
    }

    /// Every node of the tree, sorted: all ancestors of leaves plus the
    /// leaves themselves.
    pub fn nodes(&self) -> Vec<TreeNode> {
        let mut set = BTreeSet::new();
        for leaf in &self.leaves {
            for d in 0..=leaf.depth() {
                set.insert(leaf.truncate(d));
            }
        }
        set.into_iter().collect()
    }

    /// Child indices present under each internal node.
    fn child_indices(&self) -> BTreeMap<TreeNode, BTreeSet<u8>> {
        let mut map: BTreeMap<TreeNode, BTreeSet<u8>> = BTreeMap::new();
        for leaf in &self.leaves {
            for d in 0..leaf.depth() {
                map.entry(leaf.truncate(d)).or_default().insert(leaf.indices()[d]);
            }
        }
        map
    }

    /// True when every leaf sits at the same depth and every internal
    /// node has exactly `arity` children.
    pub fn is_balanced(&self, arity: usize) -> bool {
        self.leaves.iter().all(|l| l.depth() == self.depth)
            && self.child_indices().values().all(|c| c.len() == arity)
    }

    /// The frontier at depth `q`: nodes at exactly that depth together
    /// with leaves that sit above it. Sorted.
    pub fn frontier(&self, q: usize) -> Result<Vec<TreeNode>, ModelError> {
        if q == 0 || q > self.depth {
            return Err(ModelError::DepthOutOfRange { q, max: self.depth });
        }
        let set: BTreeSet<TreeNode> = self.leaves.iter().map(|l| l.truncate(q)).collect();
        Ok(set.into_iter().collect())
    }
}

/// Replaces each node's community by its ancestor on the depth-`q`
/// frontier. Community ids must be leaf indices in sorted leaf order;
/// the result's ids index the sorted frontier.
pub fn super_communities(
    tree: &CommunityTree,
    labels: &Partition,
    q: usize,
) -> Result<Partition, ModelError> {
    let identity: Vec<usize> = (0..tree.num_leaves()).collect();
    super_communities_bound(tree, &identity, labels, q)
}

fn super_communities_bound(
    tree: &CommunityTree,
    leaf_of_cluster: &[usize],
    labels: &Partition,
    q: usize,
) -> Result<Partition, ModelError> {
    if labels.k() != tree.num_leaves() {
        return Err(ModelError::InvalidPartition(format!(
            "{} clusters for a tree with {} leaves",
            labels.k(),
            tree.num_leaves()
        )));
    }
    let frontier = tree.frontier(q)?;
    let cluster_map: Vec<usize> = leaf_of_cluster
        .iter()
        .map(|&leaf| {
            let ancestor = tree.leaves[leaf].truncate(q);
            frontier.binary_search(&ancestor).unwrap()
        })
        .collect();
    let mapped: Vec<usize> = labels.labels().iter().map(|&c| cluster_map[c]).collect();
    Partition::with_k(mapped, frontier.len())
}

/// A community tree whose leaves are bound to cluster ids of a
/// partition. Planted trees use the identity binding (cluster id =
/// sorted leaf index); recovered trees bind whatever ids the clustering
/// produced to the leaf positions the tree assembly gave them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterTree {
    tree: CommunityTree,
    cluster_of_leaf: Vec<usize>,
    leaf_of_cluster: Vec<usize>,
}

impl ClusterTree {
    /// Binds cluster ids to leaves: `cluster_of_leaf[i]` is the cluster
    /// sitting at the i-th leaf in sorted order. Must be a permutation
    /// of `0..num_leaves`.
    pub fn new(tree: CommunityTree, cluster_of_leaf: Vec<usize>) -> Result<Self, ModelError> {
        let k = tree.num_leaves();
        if cluster_of_leaf.len() != k {
            return Err(ModelError::InvalidTree(format!(
                "{} bindings for {} leaves",
                cluster_of_leaf.len(),
                k
            )));
        }
        let mut leaf_of_cluster = vec![usize::MAX; k];
        for (leaf, &c) in cluster_of_leaf.iter().enumerate() {
            if c >= k || leaf_of_cluster[c] != usize::MAX {
                return Err(ModelError::InvalidTree(
                    "leaf binding is not a permutation of cluster ids".into(),
                ));
            }
            leaf_of_cluster[c] = leaf;
        }
        Ok(ClusterTree { tree, cluster_of_leaf, leaf_of_cluster })
    }

    /// Binding where cluster id equals sorted leaf index.
    pub fn identity(tree: CommunityTree) -> Self {
        let k = tree.num_leaves();
        ClusterTree {
            tree,
            cluster_of_leaf: (0..k).collect(),
            leaf_of_cluster: (0..k).collect(),
        }
    }

    pub fn tree(&self) -> &CommunityTree {
        &self.tree
    }

    pub fn k(&self) -> usize {
        self.tree.num_leaves()
    }

    pub fn leaf_of_cluster(&self, cluster: usize) -> &TreeNode {
        &self.tree.leaves[self.leaf_of_cluster[cluster]]
    }

    pub fn cluster_of_leaf(&self, leaf: usize) -> usize {
        self.cluster_of_leaf[leaf]
    }

    /// Depth of the lowest common ancestor of two clusters' leaves. The
    /// diagonal gives the leaf's own depth.
    pub fn lca_depth(&self, a: usize, b: usize) -> usize {
        lca(self.leaf_of_cluster(a), self.leaf_of_cluster(b)).depth()
    }

    pub fn super_communities(&self, labels: &Partition, q: usize) -> Result<Partition, ModelError> {
        super_communities_bound(&self.tree, &self.leaf_of_cluster, labels, q)
    }
}

/// A specific violation reported by [`HsbmParams::validate`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamViolation {
    #[error("pi has {got} entries for {expected} communities")]
    PiLength { got: usize, expected: usize },
    #[error("pi[{index}] = {value} is outside [0, 1]")]
    PiRange { index: usize, value: f64 },
    #[error("pi sums to {sum}, expected 1")]
    PiSum { sum: f64 },
    #[error("no probability for tree node {node}")]
    MissingProb { node: TreeNode },
    #[error("probability given for {node}, which is not in the tree")]
    ExtraProb { node: TreeNode },
    #[error("p({node}) = {value} is outside [0, 1]")]
    ProbRange { node: TreeNode, value: f64 },
    #[error("p({parent}) = {parent_p} is not below p({child}) = {child_p}")]
    NotAssortative { parent: TreeNode, parent_p: f64, child: TreeNode, child_p: f64 },
}

/// Parameters of the hierarchical block model: a community tree, a
/// prior over its leaves, and a connection probability for every tree
/// node. Two nodes connect with the probability attached to the lowest
/// common ancestor of their communities.
#[derive(Clone, Debug, PartialEq)]
pub struct HsbmParams {
    pub tree: CommunityTree,
    pub pi: Vec<f64>,
    pub p: BTreeMap<TreeNode, f64>,
}

impl HsbmParams {
    /// Builds and validates; any violation is an error.
    pub fn new(
        tree: CommunityTree,
        pi: Vec<f64>,
        p: BTreeMap<TreeNode, f64>,
    ) -> Result<Self, ModelError> {
        let params = HsbmParams { tree, pi, p };
        let violations = params.validate();
        if violations.is_empty() {
            Ok(params)
        } else {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(ModelError::InvalidParams(msgs.join("; ")))
        }
    }

    /// Builds without validating, for constructing deliberately broken
    /// parameter sets.
    pub fn unchecked(tree: CommunityTree, pi: Vec<f64>, p: BTreeMap<TreeNode, f64>) -> Self {
        HsbmParams { tree, pi, p }
    }

    pub fn with_uniform_pi(
        tree: CommunityTree,
        p: BTreeMap<TreeNode, f64>,
    ) -> Result<Self, ModelError> {
        let k = tree.num_leaves();
        Self::new(tree, vec![1.0 / k as f64; k], p)
    }

    pub fn k(&self) -> usize {
        self.tree.num_leaves()
    }

    /// Connection probability for two communities given as sorted leaf
    /// indices: the probability at their leaves' lowest common
    /// ancestor.
    pub fn edge_prob(&self, a: usize, b: usize) -> f64 {
        let node = lca(&self.tree.leaves()[a], &self.tree.leaves()[b]);
        self.p[&node]
    }

    /// Checks the prior, the probability table, and strict
    /// assortativity (each parent's probability below every child's).
    /// Returns every violation found.
    pub fn validate(&self) -> Vec<ParamViolation> {
        let mut out = Vec::new();
        let k = self.tree.num_leaves();
        if self.pi.len() != k {
            out.push(ParamViolation::PiLength { got: self.pi.len(), expected: k });
        }
        for (index, &value) in self.pi.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                out.push(ParamViolation::PiRange { index, value });
            }
        }
        let sum: f64 = self.pi.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            out.push(ParamViolation::PiSum { sum });
        }
        let nodes = self.tree.nodes();
        let node_set: BTreeSet<&TreeNode> = nodes.iter().collect();
        for node in &nodes {
            match self.p.get(node) {
                None => out.push(ParamViolation::MissingProb { node: node.clone() }),
                Some(&value) if !(0.0..=1.0).contains(&value) => {
                    out.push(ParamViolation::ProbRange { node: node.clone(), value })
                }
                Some(_) => {}
            }
        }
        for node in self.p.keys() {
            if !node_set.contains(node) {
                out.push(ParamViolation::ExtraProb { node: node.clone() });
            }
        }
        for child in &nodes {
            let Some(parent) = child.parent() else { continue };
            let (Some(&pp), Some(&cp)) = (self.p.get(&parent), self.p.get(child)) else {
                continue;
            };
            if pp >= cp {
                out.push(ParamViolation::NotAssortative {
                    parent,
                    parent_p: pp,
                    child: child.clone(),
                    child_p: cp,
                });
            }
        }
        out
    }

    /// Text form: one `node<TAB>probability` line per tree node, root
    /// first as `-`, then lexicographic order.
    pub fn to_tree_text(&self) -> String {
        let mut out = String::new();
        for (node, p) in &self.p {
            out.push_str(&format!("{node}\t{p}\n"));
        }
        out
    }

    /// Parses the text form back into parameters with a uniform prior.
    /// The leaf set is recovered as the nodes that are not ancestors of
    /// other nodes.
    pub fn parse_tree_text(text: &str) -> Result<Self, ModelError> {
        let mut p = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(path), Some(prob), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(ModelError::Parse(format!("bad tree line {line:?}")));
            };
            let node = TreeNode::parse(path)?;
            let prob: f64 = prob
                .parse()
                .map_err(|_| ModelError::Parse(format!("bad probability {prob:?}")))?;
            if p.insert(node, prob).is_some() {
                return Err(ModelError::Parse(format!("duplicate tree node {path}")));
            }
        }
        let nodes: Vec<&TreeNode> = p.keys().collect();
        let leaves: Vec<TreeNode> = nodes
            .iter()
            .filter(|u| !nodes.iter().any(|v| *u != v && u.is_prefix_of(v)))
            .map(|u| (*u).clone())
            .collect();
        let tree = CommunityTree::from_leaves(leaves)?;
        Self::with_uniform_pi(tree, p)
    }
}

/// A hard clustering of `n` items into clusters `0..k`. Clusters may be
/// empty when built with an explicit `k`; [`Partition::new`] instead
/// compacts arbitrary labels into `0..k` in first-seen order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Compacts arbitrary cluster ids into `0..k`, numbering clusters
    /// in order of first appearance.
    pub fn new(raw: &[usize]) -> Self {
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let next = map.len();
            let id = *map.entry(r).or_insert(next);
            labels.push(id);
        }
        Partition { labels, k: map.len() }
    }

    /// Keeps the labels as given, with a fixed cluster count that may
    /// leave some clusters empty.
    pub fn with_k(labels: Vec<usize>, k: usize) -> Result<Self, ModelError> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(ModelError::InvalidPartition(format!(
                "label {bad} with only {k} clusters"
            )));
        }
        Ok(Partition { labels, k })
    }

    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n).collect(), k: n }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Member lists per cluster, each ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    }

    /// One label per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for l in &self.labels {
            out.push_str(&format!("{l}\n"));
        }
        out
    }

    /// Parses one label per line, compacting as [`Partition::new`].
    pub fn parse_lines(text: &str) -> Result<Self, ModelError> {
        let mut raw = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let l: usize = line
                .parse()
                .map_err(|_| ModelError::Parse(format!("bad label {line:?}")))?;
            raw.push(l);
        }
        Ok(Partition::new(&raw))
    }
}

/// A simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    m: usize,
}

impl Graph {
    /// Builds from undirected edge pairs. Rejects self-loops, duplicate
    /// edges (in either orientation), and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, ModelError> {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i == j {
                return Err(ModelError::InvalidGraph(format!("self-loop at {i}")));
            }
            if i as usize >= n || j as usize >= n {
                return Err(ModelError::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            adj[i as usize].push(j);
            adj[j as usize].push(i);
        }
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(ModelError::InvalidGraph(format!("duplicate edge at node {i}")));
            }
        }
        Ok(Graph { adj, m: edges.len() })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&(j as u32)).is_ok()
    }

    /// All edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            let i = i as u32;
            list.iter().filter(move |&&j| j > i).map(move |&j| (i, j))
        })
    }

    /// Induced subgraph on the given nodes, which must be strictly
    /// ascending. Node `nodes[t]` becomes node `t`.
    pub fn induced(&self, nodes: &[u32]) -> Graph {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let mut adj = vec![Vec::new(); nodes.len()];
        for (t, &i) in nodes.iter().enumerate() {
            for &j in &self.adj[i as usize] {
                if let Ok(u) = nodes.binary_search(&j) {
                    adj[t].push(u as u32);
                }
            }
        }
        let m = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Graph { adj, m }
    }

    /// One `i<TAB>j` line per edge, `i < j`, ascending.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            out.push_str(&format!("{i}\t{j}\n"));
        }
        out
    }

    /// Parses `i<TAB>j` lines. When `n` is not given it is inferred as
    /// one past the largest endpoint.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self, ModelError> {
        let mut edges = Vec::new();
        let mut max = 0u32;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(ModelError::Parse(format!("bad edge line {line:?}")));
            };
            let i: u32 = a.parse().map_err(|_| ModelError::Parse(format!("bad node {a:?}")))?;
            let j: u32 = b.parse().map_err(|_| ModelError::Parse(format!("bad node {b:?}")))?;
            max = max.max(i).max(j);
            edges.push((i, j));
        }
        let n = n.unwrap_or(if edges.is_empty() { 0 } else { max as usize + 1 });
        Graph::from_edges(n, &edges)
    }
}

/// One agglomerative merge: two existing cluster ids combine into
/// `new_id` at the given similarity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub similarity: f64,
    pub new_id: usize,
}

/// A full merge history over an initial partition with k clusters:
/// k − 1 merges, the i-th creating cluster id `k + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub initial: Partition,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn k(&self) -> usize {
        self.initial.k()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.initial.k();
        if self.merges.len() + 1 != k.max(1) {
            return Err(ModelError::InvalidDendrogram(format!(
                "{} merges for {} initial clusters",
                self.merges.len(),
                k
            )));
        }
        let mut alive: BTreeSet<usize> = (0..k).collect();
        for (i, m) in self.merges.iter().enumerate() {
            if m.new_id != k + i {
                return Err(ModelError::InvalidDendrogram(format!(
                    "merge {i} creates id {} instead of {}",
                    m.new_id,
                    k + i
                )));
            }
            if m.left == m.right || !alive.remove(&m.left) || !alive.remove(&m.right) {
                return Err(ModelError::InvalidDendrogram(format!(
                    "merge {i} combines unavailable clusters {} and {}",
                    m.left, m.right
                )));
            }
            alive.insert(m.new_id);
        }
        Ok(())
    }

    /// Partition after undoing merges down to `num_clusters` clusters,
    /// with compacted ids.
    pub fn cut(&self, num_clusters: usize) -> Partition {
        let k = self.initial.k();
        assert!((1..=k).contains(&num_clusters));
        let steps = k - num_clusters;
        let mut parent: Vec<usize> = (0..k + steps).collect();
        for m in &self.merges[..steps] {
            parent[m.left] = m.new_id;
            parent[m.right] = m.new_id;
        }
        let find = |mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let raw: Vec<usize> = self.initial.labels().iter().map(|&l| find(l)).collect();
        Partition::new(&raw)
    }

    /// Newick form with merge similarities as internal node labels and
    /// zero branch lengths, e.g. `((0:0,1:0)1.0:0,(2:0,3:0)0.9:0)0.5;`.
    pub fn to_newick(&self) -> String {
        let k = self.initial.k();
        let mut expr: Vec<String> = (0..k).map(|c| c.to_string()).collect();
        for m in &self.merges {
            expr.push(format!(
                "({}:0,{}:0){:?}",
                expr[m.left], expr[m.right], m.similarity
            ));
        }
        format!("{};", expr.last().map(String::as_str).unwrap_or(""))
    }
}
