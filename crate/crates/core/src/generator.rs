//! Seeded sampling of hierarchical block model graphs, parameter
//! builders for balanced trees with logarithmic degree scaling, and the
//! label-corruption noise models.
//!
//! Sampling is deterministic in (params, n, seed): node labels come
//! from one stream, and each block of node pairs gets its own stream,
//! walked in lexicographic pair order with geometric skipping so sparse
//! graphs cost O(edges) rather than O(n²).

use crate::model::{CommunityTree, Graph, HsbmParams, ModelError, ParamViolation, Partition};
use crate::rng;
use rand::Rng;

/// How community sizes are drawn in [`sample_hsbm_sized`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMode {
    /// Each node's community drawn independently from the prior.
    Multinomial,
    /// Deterministic sizes proportional to the prior (largest-remainder
    /// rounding), assigned to contiguous node ranges.
    Fixed,
}

/// Samples a graph and its planted communities, drawing each node's
/// community independently from the prior.
pub fn sample_hsbm(
    params: &HsbmParams,
    n: usize,
    seed: u64,
) -> Result<(Graph, Partition), ModelError> {
    sample_hsbm_sized(params, n, seed, SizeMode::Multinomial)
}

/// As [`sample_hsbm`] with an explicit community-size mode.
///
/// Structural parameter violations are errors; assortativity
/// violations are tolerated, since pair sampling is well defined for
/// any probability table (flat tables make plain block models).
pub fn sample_hsbm_sized(
    params: &HsbmParams,
    n: usize,
    seed: u64,
    mode: SizeMode,
) -> Result<(Graph, Partition), ModelError> {
    let structural: Vec<ParamViolation> = params
        .validate()
        .into_iter()
        .filter(|v| !matches!(v, ParamViolation::NotAssortative { .. }))
        .collect();
    if !structural.is_empty() {
        let msgs: Vec<String> = structural.iter().map(|v| v.to_string()).collect();
        return Err(ModelError::InvalidParams(msgs.join("; ")));
    }
    if n == 0 {
        return Err(ModelError::InvalidParams("need at least one node".into()));
    }

    let k = params.k();
    let labels = match mode {
        SizeMode::Multinomial => {
            let mut rng = rng::stream(seed, rng::DOMAIN_LABELS, 0, 0);
            let raw: Vec<usize> = (0..n).map(|_| draw_community(&params.pi, &mut rng)).collect();
            Partition::with_k(raw, k)?
        }
        SizeMode::Fixed => {
            let sizes = largest_remainder_sizes(&params.pi, n);
            let mut raw = Vec::with_capacity(n);
            for (c, &s) in sizes.iter().enumerate() {
                raw.extend(std::iter::repeat(c).take(s));
            }
            Partition::with_k(raw, k)?
        }
    };

    let members = labels.members();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for a in 0..k {
        for b in a..k {
            let p = params.edge_prob(a, b);
            let mut rng = rng::stream(seed, rng::DOMAIN_EDGES, a as u64, b as u64);
            if a == b {
                let m = &members[a];
                let s = m.len() as u64;
                sample_ranks(&mut rng, p, s * s.saturating_sub(1) / 2, |t| {
                    let (i, j) = triangular_pair(t, s);
                    edges.push((m[i as usize] as u32, m[j as usize] as u32));
                });
            } else {
                let (ma, mb) = (&members[a], &members[b]);
                let sb = mb.len() as u64;
                sample_ranks(&mut rng, p, ma.len() as u64 * sb, |t| {
                    edges.push((
                        ma[(t / sb) as usize] as u32,
                        mb[(t % sb) as usize] as u32,
                    ));
                });
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;
    Ok((graph, labels))
}

fn draw_community(pi: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (c, &w) in pi.iter().enumerate() {
        cum += w;
        if u < cum {
            return c;
        }
    }
    pi.len() - 1
}

/// Sizes proportional to `pi` summing exactly to `n`: floors first,
/// then one extra to the largest fractional parts, lowest index
/// winning ties.
fn largest_remainder_sizes(pi: &[f64], n: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = pi.iter().map(|&w| (w * n as f64).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = pi[i] * n as f64 - sizes[i] as f64;
        let fj = pi[j] * n as f64 - sizes[j] as f64;
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &c in order.iter().take(n - assigned) {
        sizes[c] += 1;
    }
    sizes
}

/// Visits each rank in `0..total` independently with probability `p`,
/// in ascending order, skipping geometrically between hits.
fn sample_ranks(rng: &mut impl Rng, p: f64, total: u64, mut emit: impl FnMut(u64)) {
    if p <= 0.0 || total == 0 {
        return;
    }
    if p >= 1.0 {
        for t in 0..total {
            emit(t);
        }
        return;
    }
    let ln_q = (1.0 - p).ln();
    let mut t = 0u64;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / ln_q) as u64;
        t = t.saturating_add(skip);
        if t >= total {
            return;
        }
        emit(t);
        t += 1;
        if t >= total {
            return;
        }
    }
}

/// Unranks the lexicographic pair order (i, j), i < j < s: rank 0 is
/// (0, 1), rank s−2 is (0, s−1), rank s−1 is (1, 2), and so on.
fn triangular_pair(t: u64, s: u64) -> (u64, u64) {
    let before = |i: u64| i * (2 * s - i - 1) / 2;
    let sf = s as f64;
    let guess = sf - 0.5 - ((sf - 0.5) * (sf - 0.5) - 2.0 * t as f64).sqrt();
    let mut i = guess as u64;
    while before(i) > t {
        i -= 1;
    }
    while before(i + 1) <= t {
        i += 1;
    }
    (i, i + 1 + (t - before(i)))
}

/// Builds balanced binary tree parameters with probability
/// `a[h]·ln(n)/n` at depth h and a uniform prior over the `2^d` leaves.
pub fn btsbm_params(d: usize, a: &[f64], n: usize) -> Result<HsbmParams, ModelError> {
    scaled_tree_params(2, d, a, n)
}

/// Ternary version of [`btsbm_params`]: `3^d` leaves.
pub fn ternary_tree_params(d: usize, a: &[f64], n: usize) -> Result<HsbmParams, ModelError> {
    scaled_tree_params(3, d, a, n)
}

fn scaled_tree_params(
    arity: usize,
    d: usize,
    a: &[f64],
    n: usize,
) -> Result<HsbmParams, ModelError> {
    if a.len() != d + 1 {
        return Err(ModelError::InvalidParams(format!(
            "depth {d} needs {} levels, got {}",
            d + 1,
            a.len()
        )));
    }
    if a.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ModelError::InvalidParams(
            "levels must be strictly increasing".into(),
        ));
    }
    if n < 2 {
        return Err(ModelError::InvalidParams("need at least two nodes".into()));
    }
    let scale = (n as f64).ln() / n as f64;
    if a[d] * scale > 1.0 || a[0] < 0.0 {
        return Err(ModelError::InvalidParams(format!(
            "level {} maps to probability {} outside [0, 1]",
            a[d],
            a[d] * scale
        )));
    }
    let tree = CommunityTree::balanced(arity, d);
    let p = tree
        .nodes()
        .into_iter()
        .map(|node| {
            let prob = a[node.depth()] * scale;
            (node, prob)
        })
        .collect();
    HsbmParams::with_uniform_pi(tree, p)
}

/// Per-node block-reassignment probabilities for a balanced binary tree
/// of depth d, indexed by the depth of the lowest common ancestor of
/// the origin and target blocks. `zeta(d)` is the kept-in-place
/// probability.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseProfile {
    zeta: Vec<f64>,
}

impl NoiseProfile {
    /// Checks that probabilities are in range and that the profile
    /// sums to one over target blocks: there are `2^(d−1−h)` blocks at
    /// ancestor depth h < d and one at depth d (the origin itself).
    pub fn new(zeta: Vec<f64>) -> Result<Self, ModelError> {
        let profile = NoiseProfile { zeta };
        profile.check()?;
        Ok(profile)
    }

    /// Skips validation, for constructing deliberately broken profiles.
    pub fn unchecked(zeta: Vec<f64>) -> Self {
        NoiseProfile { zeta }
    }

    pub fn d(&self) -> usize {
        self.zeta.len() - 1
    }

    pub fn zeta(&self, h: usize) -> f64 {
        self.zeta[h]
    }

    /// Total probability of moving to a different block.
    pub fn eta(&self) -> f64 {
        1.0 - self.zeta[self.d()]
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if self.zeta.len() < 2 {
            return Err(ModelError::InvalidProfile("needs depth at least 1".into()));
        }
        if self.zeta.iter().any(|&z| !(0.0..=1.0).contains(&z)) {
            return Err(ModelError::InvalidProfile("probability outside [0, 1]".into()));
        }
        let d = self.d();
        let total: f64 = (0..=d).map(|h| block_count(h, d) as f64 * self.zeta[h]).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidProfile(format!(
                "block-weighted probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Number of target blocks whose lowest common ancestor with a fixed
/// origin block sits at depth h, in a balanced binary tree of depth d.
fn block_count(h: usize, d: usize) -> u64 {
    if h == d {
        1
    } else {
        1 << (d - 1 - h)
    }
}

/// The two noise shapes used in the robustness experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    /// Misclustered nodes land uniformly on the other `2^d − 1` blocks.
    Uniform,
    /// Misclustered nodes land uniformly on the `2^(d−1)` blocks across
    /// the root, the farthest ones.
    Adversarial,
}

/// Builds a [`NoiseProfile`] moving an `eta` fraction of nodes.
pub fn make_profile(kind: NoiseKind, eta: f64, d: usize) -> Result<NoiseProfile, ModelError> {
    if !(0.0..1.0).contains(&eta) {
        return Err(ModelError::InvalidProfile(format!("eta {eta} outside [0, 1)")));
    }
    if d == 0 {
        return Err(ModelError::InvalidProfile("needs depth at least 1".into()));
    }
    let mut zeta = vec![0.0; d + 1];
    zeta[d] = 1.0 - eta;
    match kind {
        NoiseKind::Uniform => {
            let per_block = eta / ((1u64 << d) - 1) as f64;
            for z in zeta.iter_mut().take(d) {
                *z = per_block;
            }
        }
        NoiseKind::Adversarial => {
            zeta[0] = eta / (1u64 << (d - 1)) as f64;
        }
    }
    NoiseProfile::new(zeta)
}

/// Independently reassigns each node's block according to the profile:
/// a node in block a moves to each block b with probability
/// `zeta(lca_depth(a, b))`. Labels only; edges are untouched.
pub fn corrupt_labels(
    truth: &Partition,
    tree: &CommunityTree,
    profile: &NoiseProfile,
    seed: u64,
) -> Result<Partition, ModelError> {
    let d = profile.d();
    if !tree.is_balanced(2) || tree.depth() != d {
        return Err(ModelError::InvalidTree(format!(
            "need a balanced binary tree of depth {d}"
        )));
    }
    profile.check()?;
    let k = tree.num_leaves();
    if truth.k() != k {
        return Err(ModelError::InvalidPartition(format!(
            "{} clusters for {k} blocks",
            truth.k()
        )));
    }

    // Cumulative probability of drawing each ancestor depth.
    let mut cum = Vec::with_capacity(d + 1);
    let mut total = 0.0;
    for h in 0..=d {
        total += block_count(h, d) as f64 * profile.zeta(h);
        cum.push(total);
    }

    let mut rng = rng::stream(seed, rng::DOMAIN_NOISE, 0, 0);
    let mut out = Vec::with_capacity(truth.len());
    for i in 0..truth.len() {
        let a = truth.label(i);
        let u: f64 = rng.random();
        let h = cum.iter().position(|&c| u < c).unwrap_or(d);
        if h == d {
            out.push(a);
            continue;
        }
        // Keep the first h path steps, cross to the other child there,
        // and pick the rest of the path uniformly. Bit d−1−h of the
        // leaf index is the step at depth h.
        let pos = d - 1 - h;
        let kept = a >> (pos + 1) << (pos + 1);
        let flipped = (((a >> pos) & 1) ^ 1) << pos;
        let low = if pos == 0 { 0 } else { rng.random_range(0..(1usize << pos)) };
        out.push(kept | flipped | low);
    }
    Partition::with_k(out, k)
}
