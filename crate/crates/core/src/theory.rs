//! Divergences and recovery thresholds.
//!
//! Everything here is closed-form or a one-dimensional optimization;
//! nothing samples. The quantities split into three groups: pairwise
//! divergences between communities (`renyi_divergence`,
//! `ch_divergence`) and their minima over the hierarchy
//! (`min_divergence_i`, `min_divergence_iq`, `iq_btsbm`); the
//! dimensionless feasibility scores of the two recovery strategies
//! (`j_top_down`, `j_bottom_up`, `feasible_depths`); and the
//! noisy-label condition deciding whether average linkage still
//! recovers the tree (`b_count`, `p_bar`, `robustness_lhs`,
//! `eta_minus`).

use crate::generator::NoiseProfile;
use crate::model::{lca, HsbmParams, ModelError};

/// Floor applied to the inner sum before taking its logarithm, so the
/// objective stays finite except for the explicit infinite-divergence
/// cases, which are detected up front and returned as +inf.
const LOG_FLOOR: f64 = 1e-300;

/// Order-t Rényi divergence between Bernoulli(p) and Bernoulli(q).
///
/// A pair with disjoint supports ({p,q} = {0,1}) has infinite
/// divergence, signaled as +inf. At t = 1/2 the value is symmetric in
/// p and q, exactly so in floating point.
pub fn renyi_divergence(t: f64, p: f64, q: f64) -> f64 {
    assert!(t > 0.0 && t < 1.0, "order t must lie strictly inside (0,1)");
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    assert!((0.0..=1.0).contains(&q), "q must be a probability");
    if (p == 0.0 && q == 1.0) || (p == 1.0 && q == 0.0) {
        return f64::INFINITY;
    }
    let s = (1.0 - p).powf(t) * (1.0 - q).powf(1.0 - t) + p.powf(t) * q.powf(1.0 - t);
    s.max(LOG_FLOOR).ln() / (t - 1.0)
}

/// Chernoff-Hellinger divergence between two communities: the maximum
/// over t in (0,1) of the prior-weighted sum of order-t Rényi
/// divergences between their edge-probability rows.
///
/// The objective is concave in t, so a golden-section search on
/// [1e-9, 1-1e-9] with an absolute bracket tolerance of 1e-10 finds
/// the maximum; a grid scan backs it up if the bracket degenerates.
/// Panics if `a` and `b` are not distinct leaf indices.
pub fn ch_divergence(a: usize, b: usize, params: &HsbmParams) -> f64 {
    let k = params.k();
    assert!(a < k && b < k, "leaf index out of range");
    assert_ne!(a, b, "divergence needs two distinct communities");

    let row_a: Vec<f64> = (0..k).map(|c| params.edge_prob(a, c)).collect();
    let row_b: Vec<f64> = (0..k).map(|c| params.edge_prob(b, c)).collect();
    for c in 0..k {
        let (pa, pb) = (row_a[c], row_b[c]);
        if params.pi[c] > 0.0 && ((pa == 0.0 && pb == 1.0) || (pa == 1.0 && pb == 0.0)) {
            return f64::INFINITY;
        }
    }

    let objective = |t: f64| -> f64 {
        let mut total = 0.0;
        for c in 0..k {
            let (pa, pb) = (row_a[c], row_b[c]);
            let s = (1.0 - pa).powf(t) * (1.0 - pb).powf(1.0 - t) + pa.powf(t) * pb.powf(1.0 - t);
            total -= params.pi[c] * s.max(LOG_FLOOR).ln();
        }
        total
    };
    golden_maximum(&objective, 1e-9, 1.0 - 1e-9, 1e-10)
}

/// Golden-section maximizer for a concave objective on [lo, hi].
fn golden_maximum(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const RATIO: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - RATIO * (hi - lo);
    let mut x2 = lo + RATIO * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + RATIO * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - RATIO * (hi - lo);
            f1 = f(x1);
        }
    }
    let best = f(0.5 * (lo + hi)).max(f1).max(f2);
    if best.is_finite() {
        return best;
    }
    let mut top = f64::NEG_INFINITY;
    for i in 1..10_000 {
        let v = f(i as f64 / 10_000.0);
        if v.is_finite() && v > top {
            top = v;
        }
    }
    top
}

/// Minimum Chernoff-Hellinger divergence over all unordered pairs of
/// communities; the exact-recovery threshold is N·I/log N = 1.
pub fn min_divergence_i(params: &HsbmParams) -> Result<f64, ModelError> {
    let k = params.k();
    if k < 2 {
        return Err(ModelError::InvalidParams(
            "divergence needs at least two communities".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            best = best.min(ch_divergence(a, b, params));
        }
    }
    Ok(best)
}

/// Minimum Chernoff-Hellinger divergence over pairs of communities
/// that do not share a depth-q super-community, i.e. whose lowest
/// common ancestor sits at depth q-1 or above. At q = tree depth this
/// is the unrestricted minimum.
pub fn min_divergence_iq(params: &HsbmParams, q: usize) -> Result<f64, ModelError> {
    let d = params.tree.depth();
    if q == 0 || q > d {
        return Err(ModelError::DepthOutOfRange { q, max: d });
    }
    let k = params.k();
    if k < 2 {
        return Err(ModelError::InvalidParams(
            "divergence needs at least two communities".into(),
        ));
    }
    let leaves = params.tree.leaves();
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            if lca(&leaves[a], &leaves[b]).depth() <= q - 1 {
                best = best.min(ch_divergence(a, b, params));
            }
        }
    }
    Ok(best)
}

/// Closed form of the depth-restricted minimum divergence for a
/// balanced binary hierarchy with uniform prior and strictly
/// increasing per-depth probabilities p_0 < ... < p_d.
pub fn iq_btsbm(d: usize, p: &[f64], q: usize) -> Result<f64, ModelError> {
    if p.len() != d + 1 {
        return Err(ModelError::InvalidParams(format!(
            "expected {} probabilities for depth {d}, got {}",
            d + 1,
            p.len()
        )));
    }
    for w in p.windows(2) {
        if !(w[1] > w[0]) {
            return Err(ModelError::InvalidParams(
                "probabilities must increase strictly with depth".into(),
            ));
        }
    }
    if q == 0 || q > d {
        return Err(ModelError::DepthOutOfRange { q, max: d });
    }
    let mut total = renyi_divergence(0.5, p[q - 1], p[d]);
    for k in 1..=(d - q) {
        total += (1u64 << (k - 1)) as f64 * renyi_divergence(0.5, p[q - 1], p[d - k]);
    }
    Ok(total / (1u64 << d) as f64)
}

/// Validates a per-depth rate sequence a_0 <= ... <= a_d and returns d.
fn check_rates(a: &[f64]) -> Result<usize, ModelError> {
    if a.len() < 2 {
        return Err(ModelError::InvalidParams(
            "need at least two per-depth rates".into(),
        ));
    }
    for w in a.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(ModelError::InvalidParams(
                "rates must be non-decreasing with depth".into(),
            ));
        }
    }
    Ok(a.len() - 1)
}

/// Dimensionless score governing recursive splitting from the top:
/// the depth-q split succeeds when the score exceeds 1. Rates are the
/// a_k of the logarithmic-degree scaling p_k = a_k·log N/N.
pub fn j_top_down(q: usize, a: &[f64]) -> Result<f64, ModelError> {
    let d = check_rates(a)?;
    if q == 0 || q > d {
        return Err(ModelError::DepthOutOfRange { q, max: d });
    }
    let mut inside = a[d];
    for k in 1..=(d - q) {
        inside += (1u64 << (k - 1)) as f64 * a[d - k];
    }
    let gap = inside.sqrt() - ((1u64 << (d - q)) as f64 * a[q - 1]).sqrt();
    Ok(gap * gap / (1u64 << d) as f64)
}

/// Dimensionless score for agglomerating from the bottom: recovery of
/// the depth-q super-communities needs the score above 1. Always at
/// least the top-down score, with equality exactly at q = d.
pub fn j_bottom_up(q: usize, a: &[f64]) -> Result<f64, ModelError> {
    let d = check_rates(a)?;
    if q == 0 || q > d {
        return Err(ModelError::DepthOutOfRange { q, max: d });
    }
    let base = a[q - 1].sqrt();
    let gap = base - a[d].sqrt();
    let mut total = gap * gap;
    for k in 1..=(d - q) {
        let gap = base - a[d - k].sqrt();
        total += (1u64 << (k - 1)) as f64 * gap * gap;
    }
    Ok(total / (1u64 << d) as f64)
}

/// One row of a `ThresholdReport`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DepthRecord {
    pub q: usize,
    /// Depth-q divergence in the same dimensionless units as the
    /// scores: the limit of N·I_q/log N under p_k = a_k·log N/N. The
    /// limit coincides with the bottom-up score, which is exactly why
    /// the bottom-up strategy reaches the information threshold at
    /// every depth.
    pub i_q: f64,
    pub j_td: f64,
    pub j_bu: f64,
    /// Splitting from the top must succeed at every depth on the way
    /// down, so this holds the running condition min over r<=q of
    /// J_r^td > 1.
    pub feasible_td: bool,
    /// Agglomeration needs only the local condition J_q^bu > 1.
    pub feasible_bu: bool,
}

/// Per-depth feasibility table computed from the rate sequence alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    records: Vec<DepthRecord>,
}

impl ThresholdReport {
    /// Rows in depth order, q = 1..=d.
    pub fn records(&self) -> &[DepthRecord] {
        &self.records
    }

    /// Row for depth q (1-based).
    pub fn record(&self, q: usize) -> &DepthRecord {
        assert!(q >= 1 && q <= self.records.len(), "depth {q} out of range");
        &self.records[q - 1]
    }

    pub fn depth(&self) -> usize {
        self.records.len()
    }
}

/// Evaluates both feasibility scores at every depth of a rate
/// sequence a_0 <= ... <= a_d.
pub fn feasible_depths(a: &[f64]) -> Result<ThresholdReport, ModelError> {
    let d = check_rates(a)?;
    let mut records = Vec::with_capacity(d);
    let mut td_running_min = f64::INFINITY;
    for q in 1..=d {
        let j_td = j_top_down(q, a)?;
        let j_bu = j_bottom_up(q, a)?;
        td_running_min = td_running_min.min(j_td);
        records.push(DepthRecord {
            q,
            i_q: j_bu,
            j_td,
            j_bu,
            feasible_td: td_running_min > 1.0,
            feasible_bu: j_bu > 1.0,
        });
    }
    Ok(ThresholdReport { records })
}

/// Number of bottom communities at similarity exactly h from a fixed
/// bottom community in a balanced binary hierarchy of depth d:
/// 2^(d-h-1) for 0 <= h <= d-1, and 1 at h = d (the community
/// itself). The out-of-tree value h = -1 counts all 2^d communities.
pub fn b_count(h: i64, d: usize) -> Result<u64, ModelError> {
    let depth = d as i64;
    if h < -1 || h > depth {
        return Err(ModelError::InvalidParams(format!(
            "similarity level {h} outside -1..={d}"
        )));
    }
    Ok(if h == -1 {
        1u64 << d
    } else if h == depth {
        1
    } else {
        1u64 << (depth - 1 - h)
    })
}

/// Expected edge density inside the super-community of all bottom
/// communities at similarity h or more from a fixed one: the
/// B-weighted mean of p_h..p_d.
pub fn p_bar(h: usize, d: usize, p: &[f64]) -> Result<f64, ModelError> {
    if p.len() != d + 1 {
        return Err(ModelError::InvalidParams(format!(
            "expected {} probabilities for depth {d}, got {}",
            d + 1,
            p.len()
        )));
    }
    if h == 0 || h > d {
        return Err(ModelError::DepthOutOfRange { q: h, max: d });
    }
    let mut total = 0.0;
    for s in h..=d {
        total += b_count(s as i64, d).unwrap() as f64 * p[s];
    }
    Ok(total / b_count(h as i64 - 1, d).unwrap() as f64)
}

/// Left-hand side of the noisy-label recovery condition at anchor
/// similarity level h_ac. Average linkage rebuilds the tree from
/// corrupted labels exactly when this is positive for every
/// h_ac <= d-2.
pub fn robustness_lhs(
    d: usize,
    p: &[f64],
    profile: &NoiseProfile,
    h_ac: usize,
) -> Result<f64, ModelError> {
    if p.len() != d + 1 {
        return Err(ModelError::InvalidParams(format!(
            "expected {} probabilities for depth {d}, got {}",
            d + 1,
            p.len()
        )));
    }
    if d < 2 || h_ac > d - 2 {
        return Err(ModelError::InvalidParams(format!(
            "anchor level {h_ac} must satisfy h_ac <= d-2 with d = {d}"
        )));
    }
    if profile.d() != d {
        return Err(ModelError::InvalidProfile(format!(
            "profile depth {} does not match d = {d}",
            profile.d()
        )));
    }

    let b = |h: usize| b_count(h as i64, d).unwrap() as f64;
    let za = profile.zeta(h_ac);
    let mut total = 0.0;
    for h1 in (h_ac + 1)..d {
        let dz1 = profile.zeta(h1) - za;
        for h2 in (h1 + 1)..=d {
            total += 2.0 * b(h1) * b(h2) * dz1 * (profile.zeta(h2) - za) * (p[h1] - p[h_ac]);
        }
        total += b(h1) * b(h1) * dz1 * dz1 * (p_bar(h1 + 1, d, p).unwrap() - p[h_ac]);
    }
    let dzd = profile.zeta(d) - za;
    total += (p[d - 1] - p[h_ac]) * dzd * dzd;
    total += 2.0
        * (p[d] - p[d - 1])
        * (profile.zeta(d - 1) - za)
        * (profile.zeta(d) - 0.5 * (profile.zeta(d - 1) + za));
    Ok(total)
}

/// Critical adversarial noise level: corruption below this fraction
/// leaves the tree recoverable. Returns None when the mean
/// off-diagonal density p̄_1 falls below p_{d-1}, in which case every
/// noise level under 1/2 is safe and no critical level applies.
/// Panics unless p is strictly increasing with one entry per depth.
pub fn eta_minus(d: usize, p: &[f64]) -> Option<f64> {
    assert_eq!(p.len(), d + 1, "expected one probability per depth");
    for w in p.windows(2) {
        assert!(w[1] > w[0], "requires strictly increasing probabilities");
    }
    let pb1 = p_bar(1, d, p).unwrap();
    if pb1 < p[d - 1] {
        return None;
    }
    let radicand = (pb1 - p[d - 1]) * (pb1 - p[0]);
    let num = p[d - 1] + pb1 - 2.0 * p[0] - radicand.sqrt();
    let den = p[d - 1] + 3.0 * pb1 - 4.0 * p[0];
    Some(num / den)
}
