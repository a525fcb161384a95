//! Spectral clustering: the Bethe-Hessian flat clusterer, recursive
//! top-down bipartitioning, and the eigensolver / k-means plumbing they
//! share.
//!
//! The community count is read off the Bethe-Hessian H(r) = (r²-1)I - rA + D
//! at the critical radius r_c = sqrt(Σd²/Σd - 1): informative eigenvalues
//! sit strictly below zero while the bulk stays non-negative, so counting
//! negative eigenvalues estimates K without knowing it in advance. The
//! same matrix's most-negative eigenvectors provide the embedding for
//! k-means, and the adjacency matrix's second eigenvector drives the
//! top-down splitter.
//!
//! Eigenproblems up to [`DENSE_CUTOFF`] nodes go through a cyclic Jacobi
//! decomposition; larger ones run a Lanczos iteration with full
//! reorthogonalization. When the Krylov space closes early (exactly
//! invariant subspace, which happens on disjoint unions and other exactly
//! degenerate spectra), the iteration injects a fresh random direction
//! from the orthogonal complement and disables early extraction, growing
//! the basis to completion so degenerate multiplicities are still
//! resolved exactly.

use crate::model::{ClusterTree, CommunityTree, Graph, ModelError, Partition, TreeNode};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Largest dimension solved by the dense Jacobi path; above it the
/// iterative solver takes over.
const DENSE_CUTOFF: usize = 256;

/// A real symmetric matrix stored as its upper triangle, one sorted
/// sparse row per node. Symmetry is exact by construction: the lower
/// triangle is mirrored on the fly.
#[derive(Clone, Debug)]
pub struct SymmetricMatrix {
    n: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SymmetricMatrix {
    /// Builds a matrix from triplets. Entries may address either
    /// triangle; duplicates accumulate.
    pub fn from_upper(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) outside a {n}x{n} matrix");
            let (lo, hi) = (i.min(j), i.max(j));
            rows[lo].push((hi as u32, v));
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            row.dedup_by(|later, kept| {
                if later.0 == kept.0 {
                    kept.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }
        SymmetricMatrix { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix-vector product, mirroring the stored triangle.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, val) in row {
                let j = j as usize;
                out[i] += val * v[j];
                if j != i {
                    out[j] += val * v[i];
                }
            }
        }
        out
    }

    /// The entry at (i, j), zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n);
        let (lo, hi) = (i.min(j) as usize, i.max(j) as u32);
        match self.rows[lo].binary_search_by_key(&hi, |&(j, _)| j) {
            Ok(pos) => self.rows[lo][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Dense mirror of the matrix, for the direct eigensolver.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, val) in row {
                dense[i][j as usize] = val;
                dense[j as usize][i] = val;
            }
        }
        dense
    }

    /// Maximum absolute row sum. Used as the scale for residual and
    /// breakdown tolerances.
    pub fn inf_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, val) in row {
                sums[i] += val.abs();
                if j as usize != i {
                    sums[j as usize] += val.abs();
                }
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// The Bethe-Hessian H(r) = (r²-1)I - rA + D of a simple graph.
pub fn bethe_hessian(graph: &Graph, r: f64) -> SymmetricMatrix {
    let n = graph.n();
    let shift = r * r - 1.0;
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![(i as u32, shift + graph.degree(i) as f64)];
            row.extend(graph.neighbors(i).iter().filter(|&&j| j as usize > i).map(|&j| (j, -r)));
            row
        })
        .collect();
    SymmetricMatrix { n, rows }
}

/// The adjacency matrix as a symmetric operator.
pub fn adjacency_matrix(graph: &Graph) -> SymmetricMatrix {
    let n = graph.n();
    let rows = (0..n)
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .filter(|&&j| j as usize > i)
                .map(|&j| (j, 1.0))
                .collect()
        })
        .collect();
    SymmetricMatrix { n, rows }
}

/// The radius r_c = sqrt(Σd²/Σd - 1) at which the Bethe-Hessian's bulk
/// spectrum touches zero, leaving one negative eigenvalue per community.
pub fn critical_radius(graph: &Graph) -> f64 {
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for d in graph.degrees() {
        let d = d as f64;
        sum += d;
        sum2 += d * d;
    }
    assert!(sum > 0.0, "critical radius needs at least one edge");
    (sum2 / sum - 1.0).sqrt()
}

/// Which end of the spectrum [`symmetric_eigs`] should return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumEnd {
    Smallest,
    Largest,
}

/// Computes `k` eigenpairs from the requested end of the spectrum.
///
/// Eigenvalues come back sorted ascending (for [`SpectrumEnd::Largest`]
/// these are the k largest, still in ascending order), each vector unit
/// length with its largest-magnitude entry made positive, and each pair
/// verified to satisfy ‖Mv - λv‖ ≤ 1e-8·‖M‖. The seed only influences
/// the iterative path's start vector; results are deterministic given
/// (matrix, k, end, seed).
pub fn symmetric_eigs(
    m: &SymmetricMatrix,
    k: usize,
    which: SpectrumEnd,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ModelError> {
    let n = m.n();
    assert!(k >= 1 && k <= n, "requested {k} eigenpairs of a {n}x{n} matrix");
    let scale = m.inf_norm();
    if scale == 0.0 {
        // The zero matrix: any orthonormal set is an eigenbasis.
        let vecs = (0..k)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        return Ok((vec![0.0; k], vecs));
    }
    if n <= DENSE_CUTOFF {
        let (vals, vecs) = jacobi_eigs(m.to_dense())?;
        let range = match which {
            SpectrumEnd::Smallest => 0..k,
            SpectrumEnd::Largest => n - k..n,
        };
        let vals = vals[range.clone()].to_vec();
        let vecs = vecs[range].to_vec();
        finish_pairs(m, scale, vals, vecs)
    } else {
        lanczos_eigs(m, k, which, seed)
    }
}

/// Orients, then verifies every pair against the residual contract.
fn finish_pairs(
    m: &SymmetricMatrix,
    scale: f64,
    vals: Vec<f64>,
    mut vecs: Vec<Vec<f64>>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ModelError> {
    for v in &mut vecs {
        orient(v);
    }
    for (val, v) in vals.iter().zip(&vecs) {
        let mv = m.matvec(v);
        let residual = mv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - val * b) * (a - val * b))
            .sum::<f64>()
            .sqrt();
        if residual > 1e-8 * scale {
            return Err(ModelError::NoConvergence { residual });
        }
    }
    Ok((vals, vecs))
}

/// Fixes the sign so the first largest-magnitude entry is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Full eigendecomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues ascending with their (unoriented)
/// eigenvectors as rows.
fn jacobi_eigs(mut a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>), ModelError> {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    let frob2: f64 = a.iter().flatten().map(|x| x * x).sum();
    let mut off2 = 0.0;
    for sweep in 0..=64 {
        off2 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off2 += a[p][q] * a[p][q];
            }
        }
        if off2 <= frob2 * 1e-26 {
            let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
                .map(|c| (a[c][c], (0..n).map(|r| v[r][c]).collect()))
                .collect();
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));
            return Ok(pairs.into_iter().unzip());
        }
        if sweep == 64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                // The smaller root of t² + 2θt - 1 = 0 keeps rotations
                // under 45 degrees; the guard avoids overflow in θ².
                let t = if theta.abs() > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    let nip = c * aip - s * aiq;
                    let niq = s * aip + c * aiq;
                    a[i][p] = nip;
                    a[p][i] = nip;
                    a[i][q] = niq;
                    a[q][i] = niq;
                }
                for row in &mut v {
                    let (vip, viq) = (row[p], row[q]);
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }
    Err(ModelError::NoConvergence { residual: off2.sqrt() })
}

/// Lanczos iteration with full reorthogonalization against one growing
/// basis. Breakdowns (an exactly invariant Krylov subspace) record a
/// zero coupling and continue in the orthogonal complement, so the
/// block-tridiagonal projection stays exact.
struct Lanczos<'a> {
    m: &'a SymmetricMatrix,
    seed: u64,
    scale: f64,
    basis: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    injections: u64,
    broke_down: bool,
}

impl<'a> Lanczos<'a> {
    fn new(m: &'a SymmetricMatrix, seed: u64) -> Self {
        let scale = m.inf_norm();
        let mut rng = rng::stream(seed, rng::DOMAIN_LANCZOS, 0, 0);
        let start = random_unit(m.n(), &mut rng);
        Lanczos {
            m,
            seed,
            scale,
            basis: vec![start],
            alphas: Vec::new(),
            betas: Vec::new(),
            injections: 0,
            broke_down: false,
        }
    }

    fn steps(&self) -> usize {
        self.alphas.len()
    }

    fn complete(&self) -> bool {
        self.alphas.len() == self.m.n()
    }

    fn step(&mut self) -> Result<(), ModelError> {
        let j = self.alphas.len();
        debug_assert!(j < self.m.n(), "stepping a completed basis");
        let mut w = self.m.matvec(&self.basis[j]);
        if j > 0 && self.betas[j - 1] != 0.0 {
            axpy(&mut w, -self.betas[j - 1], &self.basis[j - 1]);
        }
        let alpha = dot(&self.basis[j], &w);
        axpy(&mut w, -alpha, &self.basis[j]);
        for _ in 0..2 {
            for u in &self.basis {
                let c = dot(u, &w);
                if c != 0.0 {
                    axpy(&mut w, -c, u);
                }
            }
        }
        self.alphas.push(alpha);
        let beta = norm(&w);
        if self.alphas.len() == self.m.n() {
            // The basis now spans the whole space; no successor needed.
            self.betas.push(0.0);
        } else if beta <= self.scale * 1e-12 {
            self.broke_down = true;
            self.betas.push(0.0);
            let fresh = self.inject()?;
            self.basis.push(fresh);
        } else {
            self.betas.push(beta);
            for x in w.iter_mut() {
                *x /= beta;
            }
            self.basis.push(w);
        }
        Ok(())
    }

    /// A random unit vector orthogonal to the current basis. Always
    /// possible here: injection only happens while the basis is shorter
    /// than the dimension.
    fn inject(&mut self) -> Result<Vec<f64>, ModelError> {
        let mut last = 0.0;
        for _ in 0..64 {
            let mut rng = rng::stream(self.seed, rng::DOMAIN_LANCZOS, self.injections, 1);
            self.injections += 1;
            let mut w: Vec<f64> = (0..self.m.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            for _ in 0..2 {
                for u in &self.basis {
                    let c = dot(u, &w);
                    if c != 0.0 {
                        axpy(&mut w, -c, u);
                    }
                }
            }
            last = norm(&w);
            if last > 1e-8 * (self.m.n() as f64).sqrt() {
                for x in w.iter_mut() {
                    *x /= last;
                }
                return Ok(w);
            }
        }
        Err(ModelError::NoConvergence { residual: last })
    }

    /// Ritz values (ascending), their coefficient vectors in the basis,
    /// and the coupling to the next, not yet accepted direction. A zero
    /// coupling means every Ritz pair is an exact eigenpair of the
    /// restriction to the basis span.
    fn ritz(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64), ModelError> {
        let m = self.alphas.len();
        let (vals, ys) = eig_block_tridiagonal(&self.alphas, &self.betas[..m - 1])?;
        let pending = if self.complete() { 0.0 } else { self.betas[m - 1] };
        Ok((vals, ys, pending))
    }

    /// Maps coefficient vectors back to full-length Ritz vectors.
    fn assemble(&self, ys: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
        let n = self.m.n();
        idx.iter()
            .map(|&i| {
                let mut x = vec![0.0; n];
                for (j, &coeff) in ys[i].iter().enumerate() {
                    if coeff != 0.0 {
                        axpy(&mut x, coeff, &self.basis[j]);
                    }
                }
                let nn = norm(&x);
                for e in x.iter_mut() {
                    *e /= nn;
                }
                x
            })
            .collect()
    }
}

/// Eigendecomposition of a symmetric tridiagonal matrix given as its
/// diagonal and subdiagonal. Zero couplings split the problem into
/// independent blocks, which keeps the cost low after breakdowns.
fn eig_block_tridiagonal(
    diag: &[f64],
    off: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ModelError> {
    let m = diag.len();
    debug_assert_eq!(off.len(), m.saturating_sub(1));
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(m);
    let mut s = 0;
    while s < m {
        let mut e = s + 1;
        while e < m && off[e - 1] != 0.0 {
            e += 1;
        }
        let len = e - s;
        let mut block = vec![vec![0.0; len]; len];
        for i in 0..len {
            block[i][i] = diag[s + i];
        }
        for i in 0..len - 1 {
            block[i][i + 1] = off[s + i];
            block[i + 1][i] = off[s + i];
        }
        let (vals, vecs) = jacobi_eigs(block)?;
        for (val, local) in vals.into_iter().zip(vecs) {
            let mut full = vec![0.0; m];
            full[s..e].copy_from_slice(&local);
            pairs.push((val, full));
        }
        s = e;
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite Ritz values"));
    Ok(pairs.into_iter().unzip())
}

fn lanczos_eigs(
    m: &SymmetricMatrix,
    k: usize,
    which: SpectrumEnd,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ModelError> {
    let n = m.n();
    let mut lz = Lanczos::new(m, seed);
    let mut next_check = (k + 8).min(n);
    loop {
        lz.step()?;
        let steps = lz.steps();
        // After a breakdown early extraction is unsound: a converged
        // Ritz pair from a closed block can mask a still-growing copy
        // of the same eigenvalue in the complement. Run to completion
        // instead; the block structure keeps that cheap.
        if !(lz.complete() || (steps >= next_check && !lz.broke_down)) {
            continue;
        }
        let (theta, ys, pending) = lz.ritz()?;
        let idx: Vec<usize> = match which {
            SpectrumEnd::Smallest => (0..k).collect(),
            SpectrumEnd::Largest => (steps - k..steps).collect(),
        };
        let locked = idx
            .iter()
            .all(|&i| (pending * ys[i][steps - 1]).abs() <= 1e-10 * lz.scale);
        if lz.complete() || locked {
            let vals: Vec<f64> = idx.iter().map(|&i| theta[i]).collect();
            let vecs = lz.assemble(&ys, &idx);
            return finish_pairs(m, lz.scale, vals, vecs);
        }
        next_check = (steps + (steps / 2).max(16)).min(n);
    }
}

/// Estimates the number of communities as the count of strictly
/// negative Bethe-Hessian eigenvalues at the critical radius, floored
/// at one. An edgeless graph returns `n` by convention: every node is
/// its own degenerate community.
pub fn estimate_num_communities(graph: &Graph, seed: u64) -> Result<usize, ModelError> {
    let n = graph.n();
    if graph.num_edges() == 0 {
        return Ok(n);
    }
    let h = bethe_hessian(graph, critical_radius(graph));
    let scale = h.inf_norm();
    let neg_tol = -1e-9 * scale;
    if n <= DENSE_CUTOFF {
        let (vals, _) = jacobi_eigs(h.to_dense())?;
        return Ok(vals.iter().filter(|&&v| v < neg_tol).count().max(1));
    }
    // Iterative counting: negatives are the extreme low end, so they
    // converge first. Accept once the count of converged negatives is
    // stable across two consecutive checkpoints and the first
    // non-negative Ritz value is certified to stay non-negative (its
    // whole residual interval above the threshold). Positive bulk pairs
    // never need to converge, which keeps single-community calls cheap.
    let loose = 1e-6 * scale;
    let mut lz = Lanczos::new(&h, seed);
    let mut next_check = 24.min(n);
    let mut prev_count: Option<usize> = None;
    loop {
        lz.step()?;
        let steps = lz.steps();
        if !(lz.complete() || (steps >= next_check && !lz.broke_down)) {
            continue;
        }
        let (theta, ys, pending) = lz.ritz()?;
        if lz.complete() {
            return Ok(theta.iter().filter(|&&v| v < neg_tol).count().max(1));
        }
        let bound = |i: usize| (pending * ys[i][steps - 1]).abs();
        let count = theta
            .iter()
            .enumerate()
            .take_while(|&(_, &v)| v < neg_tol)
            .filter(|&(i, _)| bound(i) <= loose)
            .count();
        let certified = theta
            .iter()
            .position(|&v| v >= neg_tol)
            .is_some_and(|b| theta[b] - bound(b) >= neg_tol);
        if certified && prev_count == Some(count) {
            return Ok(count.max(1));
        }
        prev_count = Some(count);
        next_check = (steps + (steps / 2).max(16)).min(n);
    }
}

/// Flat spectral clustering: estimate K, embed every node by the K
/// most-negative Bethe-Hessian eigenvectors, and k-means the rows.
///
/// Isolated nodes carry no spectral information, so they are excluded
/// from the centroid fit and then assigned to their nearest centroid.
/// An edgeless graph falls back to singletons.
pub fn flat_cluster_bethe_hessian(graph: &Graph, seed: u64) -> Result<Partition, ModelError> {
    let n = graph.n();
    if graph.num_edges() == 0 {
        return Ok(Partition::singletons(n));
    }
    let k_hat = estimate_num_communities(graph, seed)?;
    if k_hat == 1 {
        return Partition::with_k(vec![0; n], 1);
    }
    let h = bethe_hessian(graph, critical_radius(graph));
    let (_, vecs) = symmetric_eigs(&h, k_hat, SpectrumEnd::Smallest, seed)?;
    let embed = |i: usize| -> Vec<f64> { vecs.iter().map(|v| v[i]).collect() };
    let active: Vec<usize> = (0..n).filter(|&i| graph.degree(i) > 0).collect();
    let rows: Vec<Vec<f64>> = active.iter().map(|&i| embed(i)).collect();
    let k_fit = k_hat.min(active.len());
    let (fit_labels, centroids, _) = kmeans_fit(&rows, k_fit, seed)?;
    let mut labels = vec![0usize; n];
    for (slot, &i) in active.iter().enumerate() {
        labels[i] = fit_labels[slot];
    }
    for i in 0..n {
        if graph.degree(i) == 0 {
            labels[i] = nearest(&embed(i), &centroids).0;
        }
    }
    Partition::with_k(labels, k_hat)
}

/// Splits the nodes by the sign of the adjacency matrix's second
/// eigenvector: strictly positive entries on one side, the rest on the
/// other. If either side comes out empty, the node with the most
/// extreme entry is moved across. Both returned sets are sorted and
/// non-empty.
pub fn fiedler_bipartition(graph: &Graph, seed: u64) -> Result<(Vec<u32>, Vec<u32>), ModelError> {
    let n = graph.n();
    assert!(n >= 2, "bipartition needs at least two nodes");
    let a = adjacency_matrix(graph);
    let (_, vecs) = symmetric_eigs(&a, 2, SpectrumEnd::Largest, seed)?;
    let v = &vecs[0];
    let mut pos: Vec<u32> = Vec::new();
    let mut rest: Vec<u32> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if x > 0.0 {
            pos.push(i as u32);
        } else {
            rest.push(i as u32);
        }
    }
    if pos.is_empty() {
        let top = (0..n).reduce(|a, b| if v[b] > v[a] { b } else { a }).expect("n >= 2");
        rest.retain(|&i| i as usize != top);
        pos.push(top as u32);
    } else if rest.is_empty() {
        let bottom = (0..n).reduce(|a, b| if v[b] < v[a] { b } else { a }).expect("n >= 2");
        pos.retain(|&i| i as usize != bottom);
        rest.push(bottom as u32);
    }
    Ok((pos, rest))
}

/// Recursive top-down clustering: bipartition with
/// [`fiedler_bipartition`], descend into each side, and stop when a
/// part has fewer than `min_size` nodes or its induced subgraph has an
/// estimated community count of one. Returns the leaf partition and the
/// recursion tree, with cluster `c` bound to the tree's leaf `c`.
pub fn top_down_hcd(
    graph: &Graph,
    min_size: usize,
    seed: u64,
) -> Result<(Partition, ClusterTree), ModelError> {
    let n = graph.n();
    assert!(n >= 1, "top-down clustering needs a non-empty graph");
    let floor = min_size.max(2);
    let mut stack: Vec<(Vec<u32>, TreeNode)> = vec![((0..n as u32).collect(), TreeNode::root())];
    let mut leaves: Vec<(TreeNode, Vec<u32>)> = Vec::new();
    while let Some((ids, path)) = stack.pop() {
        assert!(path.depth() <= n, "split depth exceeded the node count");
        let node_seed = path.indices().iter().fold(seed, |s, &c| rng::mix(s, c as u64 + 1));
        let sub = graph.induced(&ids);
        let split = ids.len() >= floor && estimate_num_communities(&sub, node_seed)? > 1;
        if !split {
            leaves.push((path, ids));
            continue;
        }
        let (la, lb) = fiedler_bipartition(&sub, node_seed)?;
        let mut a_ids: Vec<u32> = la.iter().map(|&i| ids[i as usize]).collect();
        let mut b_ids: Vec<u32> = lb.iter().map(|&i| ids[i as usize]).collect();
        a_ids.sort_unstable();
        b_ids.sort_unstable();
        // Pushing the right child first makes the stack emit leaves in
        // lexicographic path order, matching the tree's leaf indexing.
        stack.push((b_ids, path.child(1)));
        stack.push((a_ids, path.child(0)));
    }
    let mut labels = vec![0usize; n];
    for (c, (_, ids)) in leaves.iter().enumerate() {
        for &i in ids {
            labels[i as usize] = c;
        }
    }
    let tree = CommunityTree::from_leaves(leaves.into_iter().map(|(path, _)| path).collect())?;
    let part = Partition::with_k(labels, tree.num_leaves())?;
    Ok((part, ClusterTree::identity(tree)))
}

/// K-means clustering of real vectors: k-means++ seeding, Lloyd
/// iterations until the relative inertia improvement drops below 1e-6
/// (at most 300 rounds), best of 10 restarts by inertia. Deterministic
/// given the seed.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Partition, ModelError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ModelError::InvalidParams(format!(
            "k-means needs 1 <= k <= {n} points, got k = {k}"
        )));
    }
    let (labels, _, _) = kmeans_fit(points, k, seed)?;
    Partition::with_k(labels, k)
}

/// The fitting core behind [`kmeans`]: returns labels, the final
/// centroids and the inertia. Callers guarantee 1 <= k <= n.
pub(crate) fn kmeans_fit(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<Vec<f64>>, f64), ModelError> {
    let n = points.len();
    assert!(k >= 1 && k <= n, "k-means fit with k = {k} on {n} points");
    let dims = points[0].len();
    assert!(points.iter().all(|p| p.len() == dims), "ragged point matrix");
    let mut best: Option<(f64, Vec<usize>, Vec<Vec<f64>>)> = None;
    for restart in 0..10 {
        let mut rng = rng::stream(seed, rng::DOMAIN_KMEANS, restart, 0);
        let mut centroids = plus_plus_init(points, k, &mut rng);
        let mut labels = vec![0usize; n];
        let mut inertia = 0.0;
        let mut prev = f64::INFINITY;
        for _ in 0..300 {
            let mut d2 = vec![0.0; n];
            inertia = 0.0;
            for (i, p) in points.iter().enumerate() {
                let (c, dist) = nearest(p, &centroids);
                labels[i] = c;
                d2[i] = dist;
                inertia += dist;
            }
            let mut sizes = vec![0usize; k];
            for &l in &labels {
                sizes[l] += 1;
            }
            // Re-seed each empty cluster on the point farthest from its
            // centroid, taken from a cluster that can spare one.
            for c in 0..k {
                if sizes[c] > 0 {
                    continue;
                }
                let mut pick: Option<usize> = None;
                for i in 0..n {
                    if sizes[labels[i]] > 1 && pick.is_none_or(|p| d2[i] > d2[p]) {
                        pick = Some(i);
                    }
                }
                let i = pick.expect("some cluster holds several points");
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                inertia -= d2[i];
                d2[i] = 0.0;
                centroids[c] = points[i].clone();
            }
            if inertia == 0.0 || (prev.is_finite() && prev - inertia <= 1e-6 * prev) {
                break;
            }
            prev = inertia;
            update_centroids(points, &labels, &sizes, &mut centroids);
        }
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        update_centroids(points, &labels, &sizes, &mut centroids);
        if best.as_ref().is_none_or(|b| inertia < b.0) {
            best = Some((inertia, labels, centroids));
        }
    }
    let (inertia, labels, centroids) = best.expect("at least one restart ran");
    Ok((labels, centroids, inertia))
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let first = rng.random_range(0..n);
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                cum += w;
                if cum > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave the scan short of the target; fall
            // back to the last point with positive weight.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let dd = dist2(p, centroids.last().expect("just pushed"));
            if dd < d2[i] {
                d2[i] = dd;
            }
        }
    }
    centroids
}

fn update_centroids(
    points: &[Vec<f64>],
    labels: &[usize],
    sizes: &[usize],
    centroids: &mut [Vec<f64>],
) {
    for (c, centroid) in centroids.iter_mut().enumerate() {
        if sizes[c] > 0 {
            centroid.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    for (p, &l) in points.iter().zip(labels) {
        for (acc, &x) in centroids[l].iter_mut().zip(p) {
            *acc += x;
        }
    }
    for (c, centroid) in centroids.iter_mut().enumerate() {
        if sizes[c] > 0 {
            let inv = 1.0 / sizes[c] as f64;
            centroid.iter_mut().for_each(|x| *x *= inv);
        }
    }
}

/// Index and squared distance of the closest centroid; ties go to the
/// lowest index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut bi = 0;
    let mut bd = dist2(p, &centroids[0]);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(p, c);
        if d < bd {
            bd = d;
            bi = i;
        }
    }
    (bi, bd)
}

fn random_unit(n: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let nn = norm(&v);
        if nn > 1e-6 {
            return v.into_iter().map(|x| x / nn).collect();
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
