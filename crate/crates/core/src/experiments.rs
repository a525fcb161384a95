//! Reproducible batch drivers behind the `hcd` binary.
//!
//! Four entry points cover the synthetic studies:
//!
//! * [`run_single`]: one generate → fit → score pass, artifacts on disk.
//! * [`run_phase_diagram`]: Monte-Carlo accuracy over a grid of interior
//!   rate pairs of a depth-3 ladder.
//! * [`run_robustness`]: average-linkage stability under label corruption
//!   over a (separation, noise) grid.
//! * [`thresholds_table`]: divergences and feasibility flags for one ladder.
//!
//! Determinism contract: identical config and base seed give byte-identical
//! CSV output, independent of the worker-pool width. Every grid cell derives
//! its seed from the base seed and the cell's own coordinates through
//! [`cell_seed`], never from the cell's position in the grid, so extending a
//! grid leaves existing rows untouched. Replicate r inside a cell runs on the
//! cell seed plus r.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::generator::{
    corrupt_labels, make_profile, sample_hsbm_sized, NoiseKind, SizeMode,
};
use crate::linkage::{average_linkage, bottom_up_hcd, edge_density, tree_from_dendrogram};
use crate::metrics::{accuracy_at_depth, clustering_loss, count_inversions, tree_error_ratio};
use crate::model::{
    ClusterTree, CommunityTree, Dendrogram, Graph, HsbmParams, Merge, ModelError, Partition,
    TreeNode,
};
use crate::rng;
use crate::spectral::{flat_cluster_bethe_hessian, top_down_hcd};
use crate::theory::{feasible_depths, iq_btsbm, robustness_lhs};

/// Smallest part the recursive splitter will keep splitting by default.
pub const DEFAULT_MIN_SPLIT: usize = 20;

/// An error from an experiment driver: either the configuration or the
/// data is invalid, or a filesystem operation failed.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// The two recovery directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// Flat Bethe-Hessian clustering, then average linkage on densities.
    BottomUp,
    /// Recursive spectral bipartitioning.
    TopDown,
}

impl Method {
    /// Human-readable name, used in CSV columns and flag values.
    pub fn label(self) -> &'static str {
        match self {
            Method::BottomUp => "bottom-up",
            Method::TopDown => "top-down",
        }
    }

    /// File-name fragment for per-method artifacts.
    pub fn tag(self) -> &'static str {
        match self {
            Method::BottomUp => "bottom_up",
            Method::TopDown => "top_down",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "bottom-up" => Ok(Method::BottomUp),
            "top-down" => Ok(Method::TopDown),
            other => Err(ModelError::Parse(format!(
                "unknown method {other:?}, expected bottom-up or top-down"
            ))),
        }
    }
}

/// Seed for one grid cell: folds each coordinate's bit pattern into the
/// base seed with a splitmix-style avalanche, one fold per coordinate.
/// The result depends only on the base seed and the coordinates, so a
/// cell keeps its random stream when the grid around it grows or
/// shrinks. Float coordinates enter via `to_bits`.
pub fn cell_seed(base_seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(base_seed, |acc, &c| rng::mix(acc, c))
}

/// Balanced-tree parameters with explicit per-depth connection
/// probabilities and a uniform prior: level h of the tree gets `p[h]`,
/// leaves sit at depth `p.len() - 1`. Ties between adjacent levels are
/// allowed, unlike [`crate::generator::btsbm_params`]; phase-diagram
/// grids need the flat diagonal, and the sampler tolerates flat steps.
pub fn ladder_params(arity: usize, p: &[f64]) -> Result<HsbmParams, ModelError> {
    if arity < 2 {
        return Err(ModelError::InvalidParams(format!(
            "arity {arity} cannot branch"
        )));
    }
    if p.len() < 2 {
        return Err(ModelError::InvalidParams(
            "need at least two probability levels".into(),
        ));
    }
    for w in p.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(ModelError::InvalidParams(
                "probabilities must be non-decreasing with depth".into(),
            ));
        }
    }
    if !(p[0] >= 0.0) || !(p[p.len() - 1] <= 1.0) {
        return Err(ModelError::InvalidParams(format!(
            "probabilities must lie in [0, 1], got {} .. {}",
            p[0],
            p[p.len() - 1]
        )));
    }
    let d = p.len() - 1;
    let tree = CommunityTree::balanced(arity, d);
    let k = tree.num_leaves();
    let table: BTreeMap<TreeNode, f64> = tree
        .nodes()
        .into_iter()
        .map(|node| {
            let prob = p[node.depth()];
            (node, prob)
        })
        .collect();
    Ok(HsbmParams::unchecked(tree, vec![1.0 / k as f64; k], table))
}

/// As [`ladder_params`] with the logarithmic scaling `p[h] = a[h]·ln(n)/n`.
pub fn scaled_ladder_params(arity: usize, a: &[f64], n: usize) -> Result<HsbmParams, ModelError> {
    if n < 2 {
        return Err(ModelError::InvalidParams("need at least two nodes".into()));
    }
    let scale = (n as f64).ln() / n as f64;
    let p: Vec<f64> = a.iter().map(|&r| r * scale).collect();
    if let Some(&top) = p.last() {
        if top > 1.0 {
            return Err(ModelError::InvalidParams(format!(
                "rate {} maps to probability {top} above 1 at {n} nodes",
                a[a.len() - 1]
            )));
        }
    }
    ladder_params(arity, &p)
}

/// One fitted hierarchy: flat labels, the merge sequence that built or
/// describes it, and the cluster tree it implies.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub partition: Partition,
    pub dendrogram: Dendrogram,
    pub tree: ClusterTree,
}

/// Runs one recovery method on a graph.
///
/// Bottom-up clusters with the Bethe-Hessian and agglomerates by average
/// linkage; its dendrogram is the linkage's own merge sequence. Top-down
/// splits recursively (stopping below `min_split` nodes) and its merge
/// sequence is rebuilt from the recursion tree with edge densities as
/// similarities, which is exactly what makes inversions observable.
pub fn fit_graph(
    graph: &Graph,
    method: Method,
    min_split: usize,
    seed: u64,
) -> Result<FitOutcome, ModelError> {
    match method {
        Method::BottomUp => {
            let (partition, dendrogram) =
                bottom_up_hcd(graph, |g| flat_cluster_bethe_hessian(g, seed))?;
            let tree = tree_from_dendrogram(&dendrogram)?;
            Ok(FitOutcome {
                partition,
                dendrogram,
                tree,
            })
        }
        Method::TopDown => {
            let (partition, tree) = top_down_hcd(graph, min_split, seed)?;
            let dendrogram = dendrogram_from_split_tree(graph, &partition, &tree)?;
            Ok(FitOutcome {
                partition,
                dendrogram,
                tree,
            })
        }
    }
}

/// Rebuilds a merge sequence from a splitter's cluster tree: internal
/// nodes merge deepest first (ties broken by path order), every merge
/// scored by the edge density between the two sides it joins. Density
/// is not monotone along this order, so the result can carry
/// inversions; that is a property of the split, not a defect here.
fn dendrogram_from_split_tree(
    graph: &Graph,
    partition: &Partition,
    tree: &ClusterTree,
) -> Result<Dendrogram, ModelError> {
    let k = tree.k();
    let members = partition.members();
    let mut id_of: BTreeMap<TreeNode, usize> = BTreeMap::new();
    let mut set_of: BTreeMap<TreeNode, Vec<usize>> = BTreeMap::new();
    for c in 0..k {
        let leaf = tree.leaf_of_cluster(c).clone();
        id_of.insert(leaf.clone(), c);
        set_of.insert(leaf, members[c].clone());
    }
    let mut children: BTreeMap<TreeNode, Vec<TreeNode>> = BTreeMap::new();
    for node in tree.tree().nodes() {
        if let Some(parent) = node.parent() {
            children.entry(parent).or_default().push(node);
        }
    }
    // Children sit strictly deeper than their parent, so walking
    // internal nodes deepest first guarantees both operands of every
    // merge already exist.
    let mut internals: Vec<TreeNode> = children.keys().cloned().collect();
    internals.sort_by(|x, y| y.depth().cmp(&x.depth()).then_with(|| x.cmp(y)));
    let mut merges = Vec::with_capacity(k.saturating_sub(1));
    let mut next_id = k;
    for node in internals {
        let mut kids = children.remove(&node).expect("internal node keeps its children");
        kids.sort();
        let mut acc_id = id_of.remove(&kids[0]).expect("child resolved before parent");
        let mut acc_set = set_of.remove(&kids[0]).expect("child resolved before parent");
        for kid in &kids[1..] {
            let kid_id = id_of.remove(kid).expect("child resolved before parent");
            let kid_set = set_of.remove(kid).expect("child resolved before parent");
            let similarity = edge_density(graph, &acc_set, &kid_set)?;
            merges.push(Merge {
                left: acc_id,
                right: kid_id,
                similarity,
                new_id: next_id,
            });
            acc_id = next_id;
            next_id += 1;
            acc_set.extend(kid_set);
        }
        id_of.insert(node.clone(), acc_id);
        set_of.insert(node, acc_set);
    }
    Ok(Dendrogram {
        initial: partition.clone(),
        merges,
    })
}

/// One scored quantity of one fitted method, in long CSV form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRow {
    pub method: String,
    pub metric: String,
    pub value: f64,
}

/// Scores a fit against the planted truth. Rows, in order: exact
/// clustering loss, accuracy at every depth of the planted tree, the
/// inversion count of the fit's merge sequence, the number of recovered
/// clusters, and the node-level tree error.
pub fn score_fit(
    label: &str,
    truth_labels: &Partition,
    truth_tree: &ClusterTree,
    fit: &FitOutcome,
) -> Result<Vec<ScoreRow>, ModelError> {
    let mut rows = Vec::new();
    let mut push = |metric: String, value: f64| {
        rows.push(ScoreRow {
            method: label.to_string(),
            metric,
            value,
        });
    };
    push("loss".into(), clustering_loss(truth_labels, &fit.partition)? as f64);
    for q in 1..=truth_tree.tree().depth() {
        let acc = accuracy_at_depth(truth_labels, truth_tree, &fit.partition, &fit.tree, q)?;
        push(format!("accuracy_depth_{q}"), acc);
    }
    push("inversions".into(), count_inversions(&fit.dendrogram) as f64);
    push("num_clusters".into(), fit.partition.k() as f64);
    push(
        "tree_error".into(),
        cross_tree_error(truth_labels, truth_tree, &fit.partition, &fit.tree),
    );
    Ok(rows)
}

/// Node-level tree error between a fitted hierarchy and the planted
/// one: relative squared Frobenius distance between the node
/// similarity matrices S(i, j) = depth of the lowest common ancestor
/// of the clusters of i and j, each side under its own labels and its
/// own tree. The sum collapses over the (truth, fit) contingency table
/// instead of touching N x N matrices, and the cluster counts need not
/// agree. When the fit keeps the truth's labels this reduces to
/// [`tree_error_ratio`].
fn cross_tree_error(
    truth_labels: &Partition,
    truth_tree: &ClusterTree,
    pred_labels: &Partition,
    pred_tree: &ClusterTree,
) -> f64 {
    let kt = truth_labels.k();
    let kp = pred_labels.k();
    let mut m = vec![vec![0u64; kp]; kt];
    for i in 0..truth_labels.len() {
        m[truth_labels.label(i)][pred_labels.label(i)] += 1;
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for a in 0..kt {
        for u in 0..kp {
            if m[a][u] == 0 {
                continue;
            }
            for b in 0..kt {
                for v in 0..kp {
                    if m[b][v] == 0 {
                        continue;
                    }
                    let w = (m[a][u] * m[b][v]) as f64;
                    let s_truth = truth_tree.lca_depth(a, b) as f64;
                    let s_pred = pred_tree.lca_depth(u, v) as f64;
                    diff += w * (s_pred - s_truth) * (s_pred - s_truth);
                    norm += w * s_truth * s_truth;
                }
            }
        }
    }
    if norm == 0.0 {
        return if diff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    diff / norm
}

/// Serializes rows to CSV with a header row derived from the field
/// names. Plain data rows cannot fail to serialize.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("serialize a plain csv row");
    }
    let buf = writer.into_inner().expect("flush an in-memory csv buffer");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Writes text to a file, reporting the path on failure.
pub fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One merge per line, tab-separated: `left right similarity`. Line i
/// creates id `k + i` as in [`Dendrogram`], so ids stay implicit.
pub fn merges_to_text(dend: &Dendrogram) -> String {
    let mut out = String::new();
    for m in &dend.merges {
        out.push_str(&format!("{}\t{}\t{:?}\n", m.left, m.right, m.similarity));
    }
    out
}

/// Parses the format of [`merges_to_text`] back into a dendrogram over
/// the given starting partition and validates the result.
pub fn merges_from_text(initial: Partition, text: &str) -> Result<Dendrogram, ModelError> {
    let k = initial.k();
    let mut merges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(ModelError::Parse(format!(
                "merge line {} has {} fields, expected 3",
                i + 1,
                fields.len()
            )));
        }
        let parse_id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| ModelError::Parse(format!("bad merge id {s:?} on line {}", i + 1)))
        };
        let similarity = fields[2].parse::<f64>().map_err(|_| {
            ModelError::Parse(format!("bad similarity {:?} on line {}", fields[2], i + 1))
        })?;
        merges.push(Merge {
            left: parse_id(fields[0])?,
            right: parse_id(fields[1])?,
            similarity,
            new_id: k + merges.len(),
        });
    }
    let dend = Dendrogram { initial, merges };
    dend.validate()?;
    Ok(dend)
}

fn sorted_methods(methods: &[Method]) -> Result<Vec<Method>, ModelError> {
    if methods.is_empty() {
        return Err(ModelError::InvalidParams("need at least one method".into()));
    }
    let mut out = methods.to_vec();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Sorts and deduplicates grid coordinates; rejects non-finite values.
fn clean_grid(name: &str, values: &[f64]) -> Result<Vec<f64>, ModelError> {
    if values.is_empty() {
        return Err(ModelError::InvalidParams(format!("empty {name} grid")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidParams(format!(
            "{name} grid holds a non-finite value"
        )));
    }
    let mut out = values.to_vec();
    out.sort_by(|x, y| x.partial_cmp(y).expect("finite grid values compare"));
    out.dedup_by(|x, y| x.to_bits() == y.to_bits());
    Ok(out)
}

/// Runs tasks on the global worker pool, or on a dedicated pool of the
/// requested width. Output never depends on the width.
fn with_pool<T, F>(jobs: Option<usize>, work: F) -> Result<T, ModelError>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match jobs {
        None => Ok(work()),
        Some(0) => Err(ModelError::InvalidParams(
            "worker count must be at least 1".into(),
        )),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| ModelError::InvalidParams(format!("worker pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Monte-Carlo sweep over the two interior rates of a depth-3 ladder
/// `(a_low, a1, a2, a_high)` under the scaling `p = a·ln(n)/n`.
#[derive(Clone, Debug)]
pub struct PhaseDiagramConfig {
    /// Children per tree node: 2 or 3.
    pub arity: usize,
    pub n: usize,
    /// Root rate a0, fixed across the grid.
    pub a_low: f64,
    /// Leaf rate a3, fixed across the grid.
    pub a_high: f64,
    /// Candidate values for the depth-1 rate.
    pub a1_grid: Vec<f64>,
    /// Candidate values for the depth-2 rate.
    pub a2_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub size_mode: SizeMode,
    pub replicates: usize,
    pub base_seed: u64,
    /// Worker-pool width; `None` uses every available core.
    pub jobs: Option<usize>,
}

/// One phase-diagram cell at one depth for one method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub a1: f64,
    pub a2: f64,
    pub method: &'static str,
    pub depth: usize,
    pub mean_accuracy: f64,
    /// Every replicate hit accuracy exactly 1.
    pub exact: bool,
    /// The method's feasibility score at this depth; the closed forms
    /// cover the binary ladder, so ternary rows leave it empty.
    pub j_score: Option<f64>,
    /// Score above 1 (for splitting: at this depth and every depth
    /// above). Empty for ternary rows, as for `j_score`.
    pub feasible: Option<bool>,
}

struct PhaseSample {
    cell: usize,
    method: Method,
    rep: u64,
    acc: [f64; 3],
}

/// Runs the phase-diagram sweep and returns one row per
/// (a1, a2, method, depth), sorted by exactly that key.
pub fn run_phase_diagram(cfg: &PhaseDiagramConfig) -> Result<Vec<PhaseRow>, ModelError> {
    if cfg.arity != 2 && cfg.arity != 3 {
        return Err(ModelError::InvalidParams(format!(
            "arity {} is not 2 or 3",
            cfg.arity
        )));
    }
    if cfg.n < 2 {
        return Err(ModelError::InvalidParams("need at least two nodes".into()));
    }
    if cfg.replicates == 0 {
        return Err(ModelError::InvalidParams(
            "need at least one replicate".into(),
        ));
    }
    let methods = sorted_methods(&cfg.methods)?;
    if !(cfg.a_low >= 0.0 && cfg.a_low < cfg.a_high && cfg.a_high.is_finite()) {
        return Err(ModelError::InvalidParams(format!(
            "rate ends must satisfy 0 <= {} < {}",
            cfg.a_low, cfg.a_high
        )));
    }
    let scale = (cfg.n as f64).ln() / cfg.n as f64;
    if cfg.a_high * scale > 1.0 {
        return Err(ModelError::InvalidParams(format!(
            "rate {} maps to probability {} above 1 at {} nodes",
            cfg.a_high,
            cfg.a_high * scale,
            cfg.n
        )));
    }
    let a1_grid = clean_grid("a1", &cfg.a1_grid)?;
    let a2_grid = clean_grid("a2", &cfg.a2_grid)?;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for &a1 in &a1_grid {
        for &a2 in &a2_grid {
            if cfg.a_low < a1 && a1 <= a2 && a2 < cfg.a_high {
                cells.push((a1, a2));
            }
        }
    }
    if cells.is_empty() {
        return Err(ModelError::InvalidParams(
            "infeasible grid: no cells satisfy a_low < a1 <= a2 < a_high".into(),
        ));
    }

    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates as u64).map(move |r| (c, r)))
        .collect();
    let samples: Vec<Vec<PhaseSample>> = with_pool(cfg.jobs, || {
        tasks
            .par_iter()
            .map(|&(cell, rep)| phase_task(cfg, &methods, cells[cell], cell, rep))
            .collect::<Result<_, ModelError>>()
    })??;
    let mut samples: Vec<PhaseSample> = samples.into_iter().flatten().collect();
    samples.sort_by(|x, y| {
        (x.cell, x.method, x.rep).cmp(&(y.cell, y.method, y.rep))
    });

    let mut grouped: BTreeMap<(usize, Method), Vec<[f64; 3]>> = BTreeMap::new();
    for s in samples {
        grouped.entry((s.cell, s.method)).or_default().push(s.acc);
    }
    let mut rows = Vec::with_capacity(grouped.len() * 3);
    for ((cell, method), accs) in grouped {
        let (a1, a2) = cells[cell];
        let report = if cfg.arity == 2 {
            Some(feasible_depths(&[cfg.a_low, a1, a2, cfg.a_high])?)
        } else {
            None
        };
        for q in 1..=3usize {
            let mean = accs.iter().map(|a| a[q - 1]).sum::<f64>() / accs.len() as f64;
            let exact = accs.iter().all(|a| a[q - 1] == 1.0);
            let record = report.as_ref().map(|r| r.record(q));
            rows.push(PhaseRow {
                a1,
                a2,
                method: method.label(),
                depth: q,
                mean_accuracy: mean,
                exact,
                j_score: record.map(|r| match method {
                    Method::BottomUp => r.j_bu,
                    Method::TopDown => r.j_td,
                }),
                feasible: record.map(|r| match method {
                    Method::BottomUp => r.feasible_bu,
                    Method::TopDown => r.feasible_td,
                }),
            });
        }
    }
    rows.sort_by(|x, y| {
        x.a1
            .partial_cmp(&y.a1)
            .expect("finite rates compare")
            .then(x.a2.partial_cmp(&y.a2).expect("finite rates compare"))
            .then(x.method.cmp(y.method))
            .then(x.depth.cmp(&y.depth))
    });
    Ok(rows)
}

fn phase_task(
    cfg: &PhaseDiagramConfig,
    methods: &[Method],
    (a1, a2): (f64, f64),
    cell: usize,
    rep: u64,
) -> Result<Vec<PhaseSample>, ModelError> {
    let seed = cell_seed(cfg.base_seed, &[a1.to_bits(), a2.to_bits()]).wrapping_add(rep);
    let params = scaled_ladder_params(cfg.arity, &[cfg.a_low, a1, a2, cfg.a_high], cfg.n)?;
    let (graph, truth) = sample_hsbm_sized(&params, cfg.n, seed, cfg.size_mode)?;
    let truth_tree = ClusterTree::identity(params.tree.clone());
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let fit = fit_graph(&graph, method, DEFAULT_MIN_SPLIT, seed)?;
        let mut acc = [0.0; 3];
        for q in 1..=3usize {
            acc[q - 1] = accuracy_at_depth(&truth, &truth_tree, &fit.partition, &fit.tree, q)?;
        }
        out.push(PhaseSample {
            cell,
            method,
            rep,
            acc,
        });
    }
    Ok(out)
}

/// Corruption sweep for average linkage on a planted binary ladder with
/// explicit probabilities `p[h] = p_top·beta^(h − depth)`: the planted
/// labels are corrupted, agglomerated, and the recovered tree compared
/// to the planted one.
#[derive(Clone, Debug)]
pub struct RobustnessConfig {
    /// Tree depth d; the ladder has d+1 levels.
    pub depth: usize,
    pub n: usize,
    /// Within-community probability, the densest level of the ladder.
    pub p_top: f64,
    /// Separation ratios between adjacent levels; each must be >= 1.
    pub betas: Vec<f64>,
    /// Corrupted fractions, each in [0, 1).
    pub etas: Vec<f64>,
    pub scenarios: Vec<NoiseKind>,
    pub size_mode: SizeMode,
    pub replicates: usize,
    pub base_seed: u64,
    /// Worker-pool width; `None` uses every available core.
    pub jobs: Option<usize>,
}

/// One robustness cell: a (separation, noise, scenario) triple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub beta: f64,
    pub eta: f64,
    pub scenario: &'static str,
    /// Mean tree error ratio over the replicates.
    pub mean_error: f64,
    /// Every replicate recovered the planted tree exactly.
    pub exact: bool,
    /// The sufficient robustness condition holds at every anchor level.
    pub theory_robust: bool,
}

fn scenario_label(kind: NoiseKind) -> &'static str {
    match kind {
        NoiseKind::Uniform => "uniform",
        NoiseKind::Adversarial => "adversarial",
    }
}

fn scenario_id(kind: NoiseKind) -> u64 {
    match kind {
        NoiseKind::Uniform => 0,
        NoiseKind::Adversarial => 1,
    }
}

/// Runs the robustness sweep and returns one row per
/// (beta, eta, scenario), sorted by exactly that key.
pub fn run_robustness(cfg: &RobustnessConfig) -> Result<Vec<RobustnessRow>, ModelError> {
    if cfg.depth < 2 {
        return Err(ModelError::InvalidParams(
            "robustness needs depth at least 2".into(),
        ));
    }
    if cfg.n < 2 {
        return Err(ModelError::InvalidParams("need at least two nodes".into()));
    }
    if cfg.replicates == 0 {
        return Err(ModelError::InvalidParams(
            "need at least one replicate".into(),
        ));
    }
    if !(cfg.p_top > 0.0 && cfg.p_top <= 1.0) {
        return Err(ModelError::InvalidParams(format!(
            "within-community probability {} outside (0, 1]",
            cfg.p_top
        )));
    }
    let betas = clean_grid("beta", &cfg.betas)?;
    if betas.iter().any(|&b| b < 1.0) {
        return Err(ModelError::InvalidParams(
            "separation ratios below 1 would make the ladder disassortative".into(),
        ));
    }
    let etas = clean_grid("eta", &cfg.etas)?;
    if etas.iter().any(|&e| !(0.0..1.0).contains(&e)) {
        return Err(ModelError::InvalidParams(
            "corrupted fractions must lie in [0, 1)".into(),
        ));
    }
    if cfg.scenarios.is_empty() {
        return Err(ModelError::InvalidParams(
            "need at least one noise scenario".into(),
        ));
    }
    let mut scenarios = cfg.scenarios.clone();
    scenarios.sort_by_key(|&s| scenario_label(s));
    scenarios.dedup();

    struct Cell {
        beta: f64,
        eta: f64,
        kind: NoiseKind,
    }
    let mut cells = Vec::new();
    for &beta in &betas {
        for &eta in &etas {
            for &kind in &scenarios {
                cells.push(Cell { beta, eta, kind });
            }
        }
    }
    let d = cfg.depth;
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates as u64).map(move |r| (c, r)))
        .collect();
    let errors: Vec<(usize, u64, f64)> = with_pool(cfg.jobs, || {
        tasks
            .par_iter()
            .map(|&(c, rep)| {
                let cell = &cells[c];
                robustness_task(cfg, cell.beta, cell.eta, cell.kind, rep).map(|e| (c, rep, e))
            })
            .collect::<Result<_, ModelError>>()
    })??;
    let mut errors = errors;
    errors.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut grouped: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (c, _, e) in errors {
        grouped.entry(c).or_default().push(e);
    }
    let mut rows = Vec::with_capacity(cells.len());
    for (c, errs) in grouped {
        let cell = &cells[c];
        let p = probability_ladder(cfg.p_top, cell.beta, d);
        let profile = make_profile(cell.kind, cell.eta, d)?;
        let mut theory_robust = true;
        for h_ac in 0..=d - 2 {
            theory_robust &= robustness_lhs(d, &p, &profile, h_ac)? > 0.0;
        }
        rows.push(RobustnessRow {
            beta: cell.beta,
            eta: cell.eta,
            scenario: scenario_label(cell.kind),
            mean_error: errs.iter().sum::<f64>() / errs.len() as f64,
            exact: errs.iter().all(|&e| e == 0.0),
            theory_robust,
        });
    }
    rows.sort_by(|x, y| {
        x.beta
            .partial_cmp(&y.beta)
            .expect("finite ratios compare")
            .then(x.eta.partial_cmp(&y.eta).expect("finite fractions compare"))
            .then(x.scenario.cmp(y.scenario))
    });
    Ok(rows)
}

fn probability_ladder(p_top: f64, beta: f64, d: usize) -> Vec<f64> {
    (0..=d)
        .map(|h| p_top * beta.powi(h as i32 - d as i32))
        .collect()
}

fn robustness_task(
    cfg: &RobustnessConfig,
    beta: f64,
    eta: f64,
    kind: NoiseKind,
    rep: u64,
) -> Result<f64, ModelError> {
    let seed = cell_seed(
        cfg.base_seed,
        &[beta.to_bits(), eta.to_bits(), scenario_id(kind)],
    )
    .wrapping_add(rep);
    let p = probability_ladder(cfg.p_top, beta, cfg.depth);
    let params = ladder_params(2, &p)?;
    let (graph, truth) = sample_hsbm_sized(&params, cfg.n, seed, cfg.size_mode)?;
    let profile = make_profile(kind, eta, cfg.depth)?;
    let corrupted = corrupt_labels(&truth, &params.tree, &profile, seed)?;
    let dend = average_linkage(&graph, &corrupted);
    let pred_tree = tree_from_dendrogram(&dend)?;
    let truth_tree = ClusterTree::identity(params.tree.clone());
    tree_error_ratio(&truth_tree, &pred_tree, &corrupted)
}

/// One depth of the threshold table for a rate ladder at a given size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub q: usize,
    /// Finite-size divergence at `p = a·ln(n)/n`, in raw units.
    pub i_q: f64,
    /// The same divergence scaled by n/ln(n); its large-n limit is the
    /// bottom-up score.
    pub i_q_scaled: f64,
    pub j_td: f64,
    pub j_bu: f64,
    pub feasible_td: bool,
    pub feasible_bu: bool,
}

/// Divergences and feasibility flags for one strictly increasing binary
/// rate ladder, one row per depth.
pub fn thresholds_table(a: &[f64], n: usize) -> Result<Vec<ThresholdRow>, ModelError> {
    if n < 2 {
        return Err(ModelError::InvalidParams("need at least two nodes".into()));
    }
    let report = feasible_depths(a)?;
    let d = report.depth();
    let scale = (n as f64).ln() / n as f64;
    let p: Vec<f64> = a.iter().map(|&r| r * scale).collect();
    if p[d] > 1.0 {
        return Err(ModelError::InvalidParams(format!(
            "rate {} maps to probability {} above 1 at {n} nodes",
            a[d], p[d]
        )));
    }
    let mut rows = Vec::with_capacity(d);
    for q in 1..=d {
        let record = report.record(q);
        let i_q = iq_btsbm(d, &p, q)?;
        rows.push(ThresholdRow {
            q,
            i_q,
            i_q_scaled: i_q * n as f64 / (n as f64).ln(),
            j_td: record.j_td,
            j_bu: record.j_bu,
            feasible_td: record.feasible_td,
            feasible_bu: record.feasible_bu,
        });
    }
    Ok(rows)
}

/// One generate → fit → score pass with every artifact written to disk.
#[derive(Clone, Debug)]
pub struct SingleRunConfig {
    /// Children per tree node: 2 or 3.
    pub arity: usize,
    /// Rate ladder, one value per depth; probabilities are `a·ln(n)/n`.
    pub a: Vec<f64>,
    pub n: usize,
    pub size_mode: SizeMode,
    pub methods: Vec<Method>,
    /// Smallest part the splitter keeps splitting.
    pub min_split: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// What [`run_single`] wrote and computed.
#[derive(Clone, Debug)]
pub struct SingleRunArtifacts {
    pub scores: Vec<ScoreRow>,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

/// Samples one graph, writes it with its truth, fits every requested
/// method, and writes per-method labels, merge logs, Newick dendrograms
/// and one score table. File names are fixed: `edges.tsv`, `truth.tsv`,
/// `params.tsv`, then `pred_<method>.tsv`, `merges_<method>.tsv`,
/// `dendrogram_<method>.nwk`, and finally `scores.csv`.
pub fn run_single(cfg: &SingleRunConfig) -> Result<SingleRunArtifacts, ExperimentError> {
    if cfg.arity != 2 && cfg.arity != 3 {
        return Err(ModelError::InvalidParams(format!(
            "arity {} is not 2 or 3",
            cfg.arity
        ))
        .into());
    }
    if cfg.min_split == 0 {
        return Err(ModelError::InvalidParams(
            "smallest split must be at least 1".into(),
        )
        .into());
    }
    let methods = sorted_methods(&cfg.methods)?;
    let params = scaled_ladder_params(cfg.arity, &cfg.a, cfg.n)?;
    let (graph, truth) = sample_hsbm_sized(&params, cfg.n, cfg.seed, cfg.size_mode)?;
    let truth_tree = ClusterTree::identity(params.tree.clone());

    fs::create_dir_all(&cfg.out_dir).map_err(|source| ExperimentError::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    let emit = |name: String, text: String, files: &mut Vec<PathBuf>| {
        let path = cfg.out_dir.join(name);
        write_text(&path, &text)?;
        files.push(path);
        Ok::<(), ExperimentError>(())
    };
    emit("edges.tsv".into(), graph.to_edge_list(), &mut files)?;
    emit("truth.tsv".into(), truth.to_lines(), &mut files)?;
    emit("params.tsv".into(), params.to_tree_text(), &mut files)?;

    let mut scores = Vec::new();
    for &method in &methods {
        let fit = fit_graph(&graph, method, cfg.min_split, cfg.seed)?;
        emit(
            format!("pred_{}.tsv", method.tag()),
            fit.partition.to_lines(),
            &mut files,
        )?;
        emit(
            format!("merges_{}.tsv", method.tag()),
            merges_to_text(&fit.dendrogram),
            &mut files,
        )?;
        emit(
            format!("dendrogram_{}.nwk", method.tag()),
            fit.dendrogram.to_newick(),
            &mut files,
        )?;
        scores.extend(score_fit(method.label(), &truth, &truth_tree, &fit)?);
    }
    emit("scores.csv".into(), rows_to_csv(&scores), &mut files)?;
    Ok(SingleRunArtifacts { scores, files })
}
