//! Normalized adjacency `Ā = D^{-1/2} A D^{-1/2}` of a simple undirected graph:
//! exact and sampled (sublinear) matvecs, a boosted approximate oracle, test
//! graphs with known spectra, and the Laplacian reflection.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};


use crate::error::{KpmError, Result};
use crate::kpm::DensityEstimate;
use crate::oracle::{norm2, MatVecOracle};
use crate::rng::{self, uniform_index, SamplerRng};
use crate::spectrum::DiscreteSpectrum;

/// How neighbor lists may be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborAccess {
    /// `O(d_i)` enumeration of `N(i)`.
    Enumerate,
    /// Only uniform neighbor sampling and degrees; enumeration falls back to
    /// sampling until all `d_i` neighbors are seen (`O(d_i log d_i)` expected).
    SampleOnly,
}

/// Immutable adjacency-list view of a simple undirected graph with no
/// isolated vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphAccess {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    /// `1/√d_i`, derived from the degrees at load time.
    inv_sqrt_degree: Vec<f64>,
    access: NeighborAccess,
}

impl GraphAccess {
    /// Build from undirected 0-indexed edges. Duplicates (in either
    /// orientation) are merged; self-loops and isolated vertices are errors.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(KpmError::Graph("graph has no vertices".into()));
        }
        if n > u32::MAX as usize {
            return Err(KpmError::Graph(format!("{n} vertices exceed the u32 index range")));
        }
        let mut pairs = Vec::with_capacity(2 * edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(KpmError::Graph(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(KpmError::Graph(format!("self-loop at vertex {u}")));
            }
            pairs.push((u as u32, v as u32));
            pairs.push((v as u32, u as u32));
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        if let Some(i) = (0..n).find(|&i| offsets[i + 1] == offsets[i]) {
            return Err(KpmError::Graph(format!("vertex {i} is isolated")));
        }
        let neighbors = pairs.into_iter().map(|(_, v)| v).collect();
        let inv_sqrt_degree = (0..n).map(|i| 1.0 / libm::sqrt((offsets[i + 1] - offsets[i]) as f64)).collect();
        Ok(Self { offsets, neighbors, inv_sqrt_degree, access: NeighborAccess::Enumerate })
    }

    pub fn with_access(mut self, access: NeighborAccess) -> Self {
        self.access = access;
        self
    }

    pub fn access(&self) -> NeighborAccess {
        self.access
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Nonzeros of `Ā` (`2m`).
    pub fn nnz(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v as usize)).filter(|(u, v)| u < v))
    }

    pub fn sample_vertex(&self, rng: &mut SamplerRng) -> usize {
        uniform_index(rng, self.n())
    }

    pub fn sample_neighbor(&self, i: usize, rng: &mut SamplerRng) -> usize {
        let nb = self.neighbors(i);
        nb[uniform_index(rng, nb.len())] as usize
    }

    /// One iteration of the sampling loop: a uniform vertex `j`, a uniform
    /// neighbor `i` of `j`, kept with probability `1/d_i`. Returns the
    /// accepted column; column `i` comes back with probability `p_i`.
    #[inline]
    pub fn sample_column(&self, rng: &mut SamplerRng) -> Option<usize> {
        let j = self.sample_vertex(rng);
        let i = self.sample_neighbor(j, rng);
        // x < 1/d_i for x uniform on [0, 1), drawn as an integer event.
        (uniform_index(rng, self.degree(i)) == 0).then_some(i)
    }

    /// `N(i)` through whatever access the graph allows.
    pub fn enumerate_neighbors(&self, i: usize, rng: &mut SamplerRng) -> Vec<usize> {
        match self.access {
            NeighborAccess::Enumerate => self.neighbors(i).iter().map(|&v| v as usize).collect(),
            NeighborAccess::SampleOnly => {
                let d = self.degree(i);
                let mut seen = BTreeSet::new();
                while seen.len() < d {
                    seen.insert(self.sample_neighbor(i, rng));
                }
                seen.into_iter().collect()
            }
        }
    }

    /// `Σ_i Σ_{j∈N(i)} 1/d_j`, which equals `n` for every graph.
    pub fn reciprocal_degree_sum(&self) -> f64 {
        (0..self.n()).map(|i| self.neighbors(i).iter().map(|&j| 1.0 / self.degree(j as usize) as f64).sum::<f64>()).sum()
    }

    /// Exact form of the identity above: vertex `j` appears in exactly `d_j`
    /// neighbor lists, so its `1/d_j` terms sum to one.
    pub fn reciprocal_degree_identity_holds(&self) -> bool {
        let mut appearances = vec![0usize; self.n()];
        for &j in &self.neighbors {
            appearances[j as usize] += 1;
        }
        appearances.iter().enumerate().all(|(j, &c)| c == self.degree(j))
    }

    /// `Ā y`.
    pub fn normalized_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(KpmError::Dimension { expected: self.n(), got: y.len() });
        }
        let mut out = vec![0.0; self.n()];
        self.normalized_matvec_into(y, &mut out);
        Ok(out)
    }

    fn normalized_matvec_into(&self, y: &[f64], out: &mut [f64]) {
        let inv_sqrt = &self.inv_sqrt_degree;
        for (i, o) in out.iter_mut().enumerate() {
            let acc: f64 = self.neighbors(i).iter().map(|&j| y[j as usize] * inv_sqrt[j as usize]).sum();
            *o = acc * inv_sqrt[i];
        }
    }

    /// `p_i = (1/(n d_i)) Σ_{j∈N(i)} 1/d_j`, the probability that one loop
    /// iteration of [`sampled_matvec`] accepts column `i`.
    pub fn acceptance_probability(&self, i: usize) -> f64 {
        let s: f64 = self.neighbors(i).iter().map(|&j| 1.0 / self.degree(j as usize) as f64).sum();
        s / (self.n() as f64 * self.degree(i) as f64)
    }

    /// Materialize `(y_i/p_i) Ā^i` into `z` (added), returning the number of
    /// entries touched. `p_i` comes from the same pass over `N(i)`.
    pub fn add_scaled_column(&self, i: usize, y_i: f64, z: &mut [f64], rng: &mut SamplerRng) -> usize {
        match self.access {
            NeighborAccess::Enumerate => {
                let nb = self.neighbors(i);
                let recip: f64 = nb.iter().map(|&j| 1.0 / self.degree(j as usize) as f64).sum();
                self.scatter_column(i, y_i, recip, nb.iter().map(|&j| j as usize), z);
                nb.len()
            }
            NeighborAccess::SampleOnly => {
                let nb = self.enumerate_neighbors(i, rng);
                let recip: f64 = nb.iter().map(|&j| 1.0 / self.degree(j) as f64).sum();
                self.scatter_column(i, y_i, recip, nb.iter().copied(), z);
                nb.len()
            }
        }
    }

    fn scatter_column(&self, i: usize, y_i: f64, recip: f64, nb: impl Iterator<Item = usize>, z: &mut [f64]) {
        // y_i / p_i · Ā_{ji} = y_i · n d_i / recip · 1/√(d_i d_j)
        let d_i = self.degree(i) as f64;
        let scale = y_i * self.n() as f64 * d_i / recip * self.inv_sqrt_degree[i];
        for j in nb {
            z[j] += scale * self.inv_sqrt_degree[j];
        }
    }
}

impl MatVecOracle for GraphAccess {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, y: &[f64], out: &mut [f64], _call: u64) {
        self.normalized_matvec_into(y, out);
    }
}

/// Result of one run of the sampled matvec.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatvecReport {
    pub z: Vec<f64>,
    /// Nonzero column entries materialized (sum of `d_i` over accepted
    /// samples).
    pub entries_touched: u64,
    /// Sampling budget `t`.
    pub samples: u64,
    pub accepted: u64,
}

/// Unbiased sampled estimate of `Ā y` with budget `t`: pick a uniform vertex
/// `j`, a uniform neighbor `i` of `j`, keep it with probability `1/d_i`, and
/// add `(y_i/p_i) Ā^i`; return the sum over `t`.
pub fn sampled_matvec(graph: &GraphAccess, y: &[f64], samples: u64, seed: u64) -> Result<SampledMatvecReport> {
    let mut r = rng::sampler(seed, 0);
    sampled_matvec_with(graph, y, samples, &mut r)
}

pub fn sampled_matvec_with(graph: &GraphAccess, y: &[f64], samples: u64, r: &mut SamplerRng) -> Result<SampledMatvecReport> {
    if samples == 0 {
        return Err(KpmError::Parameter("sampling budget must be at least 1".into()));
    }
    if y.len() != graph.n() {
        return Err(KpmError::Dimension { expected: graph.n(), got: y.len() });
    }
    let mut z = vec![0.0; graph.n()];
    let (mut touched, mut accepted) = (0u64, 0u64);
    for _ in 0..samples {
        if let Some(i) = graph.sample_column(r) {
            touched += graph.add_scaled_column(i, y[i], &mut z, r) as u64;
            accepted += 1;
        }
    }
    let inv = 1.0 / samples as f64;
    z.iter_mut().for_each(|v| *v *= inv);
    Ok(SampledMatvecReport { z, entries_touched: touched, samples, accepted })
}

/// `E‖Āy − z‖² = (n‖y‖² − ‖Āy‖²)/t` for the sampled matvec.
pub fn sampled_matvec_mse(graph: &GraphAccess, y: &[f64], samples: u64) -> Result<f64> {
    let ay = graph.normalized_matvec(y)?;
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let aa: f64 = ay.iter().map(|v| v * v).sum();
    Ok((graph.n() as f64 * yy - aa) / samples as f64)
}

/// Default boosting constant `c` in `r = ⌈c ln(1/δ)⌉`.
pub const DEFAULT_BOOST_CONSTANT: f64 = 8.0;

/// `t = ⌈48 n / ε_MV²⌉`.
pub fn default_samples(n: usize, eps_mv: f64) -> u64 {
    libm::ceil(48.0 * n as f64 / (eps_mv * eps_mv)) as u64
}

/// `r = max(1, ⌈c ln(1/δ)⌉)`.
pub fn default_repetitions(delta: f64, constant: f64) -> usize {
    (libm::ceil(constant * libm::log(1.0 / delta)) as usize).max(1)
}

/// `ε_MV`-approximate oracle for `Ā`: runs the sampled matvec `r` times and
/// returns the first candidate within `(ε_MV/2)‖y‖` of a strict majority.
#[derive(Debug)]
pub struct BoostedGraphOracle<'a> {
    graph: &'a GraphAccess,
    eps_mv: f64,
    repetitions: usize,
    samples: u64,
    seed: u64,
    calls: AtomicU64,
    entries_touched: AtomicU64,
    flagged: AtomicU64,
}

/// Counters accumulated by a [`BoostedGraphOracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleStats {
    pub calls: u64,
    pub sampled_matvecs: u64,
    pub entries_touched: u64,
    pub samples: u64,
    /// Calls where no candidate reached majority agreement.
    pub flagged: u64,
}

impl<'a> BoostedGraphOracle<'a> {
    /// Defaults: `t = ⌈48n/ε²⌉`, `r = ⌈8 ln(1/δ)⌉`.
    pub fn new(graph: &'a GraphAccess, eps_mv: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(eps_mv > 0.0 && eps_mv < 1.0) {
            return Err(KpmError::Parameter(format!("eps_mv must lie in (0, 1), got {eps_mv}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(KpmError::Parameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            graph,
            eps_mv,
            repetitions: default_repetitions(delta, DEFAULT_BOOST_CONSTANT),
            samples: default_samples(graph.n(), eps_mv),
            seed,
            calls: AtomicU64::new(0),
            entries_touched: AtomicU64::new(0),
            flagged: AtomicU64::new(0),
        })
    }

    pub fn with_repetitions(mut self, r: usize) -> Self {
        self.repetitions = r.max(1);
        self
    }

    pub fn with_samples(mut self, t: u64) -> Self {
        self.samples = t.max(1);
        self
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn stats(&self) -> OracleStats {
        let calls = self.calls.load(Ordering::Relaxed);
        OracleStats {
            calls,
            sampled_matvecs: calls * self.repetitions as u64,
            entries_touched: self.entries_touched.load(Ordering::Relaxed),
            samples: calls * self.repetitions as u64 * self.samples,
            flagged: self.flagged.load(Ordering::Relaxed),
        }
    }

    /// Boosted estimate of `Ā y` and whether the majority vote failed.
    pub fn estimate(&self, y: &[f64], call: u64) -> Result<(Vec<f64>, bool)> {
        let key = rng::mix(self.seed, call);
        let mut candidates = Vec::with_capacity(self.repetitions);
        for rep in 0..self.repetitions {
            let mut r = rng::sampler(key, rep as u64);
            let report = sampled_matvec_with(self.graph, y, self.samples, &mut r)?;
            self.entries_touched.fetch_add(report.entries_touched, Ordering::Relaxed);
            candidates.push(report.z);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let radius = 0.5 * self.eps_mv * norm2(y);
        let need = self.repetitions / 2 + 1;
        let mut best = (0usize, 0usize);
        for (i, zi) in candidates.iter().enumerate() {
            let agree = candidates
                .iter()
                .filter(|zj| libm::sqrt(zi.iter().zip(zj.iter()).map(|(a, b)| (a - b) * (a - b)).sum()) <= radius)
                .count();
            if agree >= need {
                return Ok((candidates.swap_remove(i), false));
            }
            if agree > best.1 {
                best = (i, agree);
            }
        }
        self.flagged.fetch_add(1, Ordering::Relaxed);
        Ok((candidates.swap_remove(best.0), true))
    }
}

impl MatVecOracle for BoostedGraphOracle<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }
    fn error_bound(&self) -> f64 {
        self.eps_mv
    }
    fn apply(&self, y: &[f64], out: &mut [f64], call: u64) {
        let (z, _) = self.estimate(y, call).expect("oracle called with mismatched dimensions");
        out.copy_from_slice(&z);
    }
}

/// A generated graph and, when known in closed form, the spectrum of `Ā`.
#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: GraphAccess,
    pub ground_truth: Option<DiscreteSpectrum>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Clique on the first `n/2` vertices, perfect matching on the rest.
    CliquePlusMatching,
    /// Clique on `n/2` vertices, each with one pendant vertex.
    HairyClique,
    /// Boolean hypercube on `b`-bit strings.
    Hypercube,
    Complete,
    /// One center and `n − 1` leaves.
    Star,
    Path,
}

impl GraphKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "clique-plus-matching" => Self::CliquePlusMatching,
            "hairy-clique" => Self::HairyClique,
            "hypercube" => Self::Hypercube,
            "complete" => Self::Complete,
            "star" => Self::Star,
            "path" => Self::Path,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CliquePlusMatching => "clique-plus-matching",
            Self::HairyClique => "hairy-clique",
            Self::Hypercube => "hypercube",
            Self::Complete => "complete",
            Self::Star => "star",
            Self::Path => "path",
        }
    }
}

/// Build a graph of `kind`; `size` is the vertex count, or the bit count for
/// hypercubes.
pub fn generate_graph(kind: GraphKind, size: usize) -> Result<GeneratedGraph> {
    match kind {
        GraphKind::CliquePlusMatching => clique_plus_matching(size),
        GraphKind::HairyClique => hairy_clique(size),
        GraphKind::Hypercube => hypercube(size),
        GraphKind::Complete => complete(size),
        GraphKind::Star => star(size),
        GraphKind::Path => path(size),
    }
}

fn clique_edges(vertices: core::ops::Range<usize>, edges: &mut Vec<(usize, usize)>) {
    for u in vertices.clone() {
        for v in u + 1..vertices.end {
            edges.push((u, v));
        }
    }
}

fn with_truth(graph: GraphAccess, truth: Vec<f64>) -> Result<GeneratedGraph> {
    Ok(GeneratedGraph { graph, ground_truth: Some(DiscreteSpectrum::new(truth)?) })
}

fn repeat(value: f64, times: usize, into: &mut Vec<f64>) {
    into.extend(core::iter::repeat_n(value, times));
}

/// Spectrum: `1` (×`n/4 + 1`), `−1` (×`n/4`), `−1/(n/2 − 1)` (×`n/2 − 1`).
pub fn clique_plus_matching(n: usize) -> Result<GeneratedGraph> {
    if n < 8 || !n.is_multiple_of(4) {
        return Err(KpmError::Graph(format!("clique-plus-matching needs n a multiple of 4, at least 8; got {n}")));
    }
    let m = n / 2;
    let mut edges = Vec::with_capacity(m * (m - 1) / 2 + m / 2);
    clique_edges(0..m, &mut edges);
    edges.extend((0..m / 2).map(|k| (m + 2 * k, m + 2 * k + 1)));
    let graph = GraphAccess::from_edges(n, &edges)?;
    let mut truth = Vec::with_capacity(n);
    repeat(1.0, m / 2 + 1, &mut truth);
    repeat(-1.0, m / 2, &mut truth);
    repeat(-1.0 / (m as f64 - 1.0), m - 1, &mut truth);
    with_truth(graph, truth)
}

/// With `m = n/2` clique vertices: `1`, `−1/m`, and the roots of
/// `mλ² + λ − 1 = 0`, each with multiplicity `m − 1`.
pub fn hairy_clique(n: usize) -> Result<GeneratedGraph> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(KpmError::Graph(format!("hairy-clique needs an even n of at least 4; got {n}")));
    }
    let m = n / 2;
    let mut edges = Vec::with_capacity(m * (m - 1) / 2 + m);
    clique_edges(0..m, &mut edges);
    edges.extend((0..m).map(|k| (k, m + k)));
    let graph = GraphAccess::from_edges(n, &edges)?;
    let mf = m as f64;
    let disc = libm::sqrt(1.0 + 4.0 * mf);
    let mut truth = vec![1.0, -1.0 / mf];
    repeat((-1.0 + disc) / (2.0 * mf), m - 1, &mut truth);
    repeat((-1.0 - disc) / (2.0 * mf), m - 1, &mut truth);
    with_truth(graph, truth)
}

/// `(b − 2j)/b` with multiplicity `C(b, j)`.
pub fn hypercube(bits: usize) -> Result<GeneratedGraph> {
    if !(1..=24).contains(&bits) {
        return Err(KpmError::Graph(format!("hypercube needs 1 <= b <= 24; got {bits}")));
    }
    let n = 1usize << bits;
    let mut edges = Vec::with_capacity(n * bits / 2);
    for u in 0..n {
        for b in 0..bits {
            let v = u ^ (1 << b);
            if u < v {
                edges.push((u, v));
            }
        }
    }
    let graph = GraphAccess::from_edges(n, &edges)?;
    let mut truth = Vec::with_capacity(n);
    let mut binom = 1usize;
    for j in 0..=bits {
        repeat((bits as f64 - 2.0 * j as f64) / bits as f64, binom, &mut truth);
        binom = binom * (bits - j) / (j + 1);
    }
    with_truth(graph, truth)
}

/// `1` and `−1/(n−1)` (×`n − 1`).
pub fn complete(n: usize) -> Result<GeneratedGraph> {
    if n < 2 {
        return Err(KpmError::Graph(format!("complete graph needs n >= 2; got {n}")));
    }
    let mut edges = Vec::new();
    clique_edges(0..n, &mut edges);
    let mut truth = vec![1.0];
    repeat(-1.0 / (n as f64 - 1.0), n - 1, &mut truth);
    with_truth(GraphAccess::from_edges(n, &edges)?, truth)
}

/// Center `0` with `n − 1` leaves: `±1` and `0` (×`n − 2`).
pub fn star(n: usize) -> Result<GeneratedGraph> {
    if n < 2 {
        return Err(KpmError::Graph(format!("star needs n >= 2; got {n}")));
    }
    let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
    let mut truth = vec![1.0, -1.0];
    repeat(0.0, n - 2, &mut truth);
    with_truth(GraphAccess::from_edges(n, &edges)?, truth)
}

/// `cos(πj/(n−1))`, `j = 0..n`.
pub fn path(n: usize) -> Result<GeneratedGraph> {
    if n < 2 {
        return Err(KpmError::Graph(format!("path needs n >= 2; got {n}")));
    }
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    let truth = (0..n).map(|j| libm::cos(core::f64::consts::PI * j as f64 / (n as f64 - 1.0))).collect();
    with_truth(GraphAccess::from_edges(n, &edges)?, truth)
}

/// Normalized-Laplacian eigenvalues `1 − λ` in `[0, 2]`, ascending.
pub fn laplacian_eigenvalues(adjacency: &DiscreteSpectrum) -> Vec<f64> {
    adjacency.values().iter().rev().map(|l| 1.0 - l).collect()
}

/// Laplacian spectrum shifted into `[-1, 1]`: `(1 − λ) − 1 = −λ`.
pub fn laplacian_reflect_spectrum(adjacency: &DiscreteSpectrum) -> DiscreteSpectrum {
    adjacency.negated()
}

/// Laplacian density shifted into `[-1, 1]`: `p(x) = q(−x)`, i.e.
/// `a_k ↦ (−1)^k a_k`. Add 1 to the argument for Laplacian coordinates.
pub fn laplacian_reflect_density(adjacency: &DensityEstimate) -> DensityEstimate {
    adjacency.reflected()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rules() {
        let g = GraphAccess::from_edges(3, &[(0, 1), (1, 0), (1, 2), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(GraphAccess::from_edges(2, &[(0, 0)]).is_err());
        assert!(GraphAccess::from_edges(3, &[(0, 1)]).is_err());
        assert!(GraphAccess::from_edges(2, &[(0, 2)]).is_err());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn exact_matvec_examples() {
        let k2 = complete(2).unwrap().graph;
        assert_eq!(k2.normalized_matvec(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);

        let s = star(6).unwrap().graph;
        let mut y = vec![0.0; 6];
        y[0] = 1.0;
        let z = s.normalized_matvec(&y).unwrap();
        assert_eq!(z[0], 0.0);
        for &v in &z[1..] {
            assert!((v - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        }

        let h = hypercube(5).unwrap().graph;
        let ones = vec![1.0; 32];
        for v in h.normalized_matvec(&ones).unwrap() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn named_graph_spectra_counts() {
        let cpm = clique_plus_matching(1000).unwrap().ground_truth.unwrap();
        let v = cpm.values();
        assert_eq!(v.iter().filter(|&&x| x == 1.0).count(), 251);
        assert_eq!(v.iter().filter(|&&x| x == -1.0).count(), 250);
        assert_eq!(v.iter().filter(|&&x| x.abs() < 0.01).count(), 499);

        let hc = hairy_clique(1000).unwrap().ground_truth.unwrap();
        assert_eq!(hc.values().iter().filter(|&&x| x == 1.0).count(), 1);
        assert_eq!(hc.values().iter().filter(|&&x| x.abs() < 0.01).count(), 1);
        assert_eq!(hc.values().iter().filter(|&&x| x.abs() < 0.06).count(), 999);

        let cube = hypercube(14).unwrap();
        assert_eq!(cube.graph.n(), 16384);
        let t = cube.ground_truth.unwrap();
        assert_eq!(t.values().iter().filter(|&&x| x == 0.0).count(), 3432);
        assert_eq!(t.values().iter().filter(|&&x| (x - 6.0 / 7.0).abs() < 1e-15).count(), 14);
    }

    #[test]
    fn generator_size_checks() {
        assert!(clique_plus_matching(1002).is_err());
        assert!(hairy_clique(7).is_err());
        assert!(hypercube(0).is_err());
        assert!(generate_graph(GraphKind::Star, 1).is_err());
        assert_eq!(GraphKind::parse("hairy-clique"), Some(GraphKind::HairyClique));
        assert_eq!(GraphKind::parse("x"), None);
    }

    #[test]
    fn reciprocal_degree_identity() {
        for g in [clique_plus_matching(40).unwrap(), hairy_clique(30).unwrap(), hypercube(6).unwrap(), star(9).unwrap()] {
            assert!(g.graph.reciprocal_degree_identity_holds());
            assert!((g.graph.reciprocal_degree_sum() - g.graph.n() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_matvec_accounting() {
        let g = star(8).unwrap().graph;
        let y = vec![1.0; 8];
        let rep = sampled_matvec(&g, &y, 500, 3).unwrap();
        assert_eq!(rep.samples, 500);
        assert!(rep.accepted <= 500);
        assert!(rep.entries_touched >= rep.accepted);
        assert_eq!(rep, sampled_matvec(&g, &y, 500, 3).unwrap());
        assert!(sampled_matvec(&g, &y, 0, 3).is_err());
    }

    #[test]
    fn sample_only_access_finds_all_neighbors() {
        let g = hypercube(4).unwrap().graph.with_access(NeighborAccess::SampleOnly);
        let mut r = rng::sampler(1, 0);
        for i in 0..16 {
            let got = g.enumerate_neighbors(i, &mut r);
            let want: Vec<usize> = g.neighbors(i).iter().map(|&v| v as usize).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn single_repetition_boost_is_one_sampled_call() {
        let g = star(8).unwrap().graph;
        let o = BoostedGraphOracle::new(&g, 0.5, 0.49, 5).unwrap().with_repetitions(1).with_samples(100);
        let y = vec![0.5; 8];
        let (z, flagged) = o.estimate(&y, 7).unwrap();
        assert!(!flagged);
        let mut r = rng::sampler(rng::mix(5, 7), 0);
        assert_eq!(z, sampled_matvec_with(&g, &y, 100, &mut r).unwrap().z);
        assert_eq!(o.stats().calls, 1);
        assert_eq!(o.stats().samples, 100);
    }

    #[test]
    fn boost_defaults() {
        let g = complete(4).unwrap().graph;
        let o = BoostedGraphOracle::new(&g, 0.5, 0.05, 0).unwrap();
        assert_eq!(o.samples(), 768);
        assert_eq!(o.repetitions(), 24);
        assert!(BoostedGraphOracle::new(&g, 1.5, 0.05, 0).is_err());
    }

    #[test]
    fn laplacian_reflection_examples() {
        let s = DiscreteSpectrum::new(vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(laplacian_eigenvalues(&s), vec![0.0, 1.0, 2.0]);
        let s2 = DiscreteSpectrum::new(vec![-0.2, 0.5, 0.9]).unwrap();
        assert_eq!(laplacian_reflect_spectrum(&laplacian_reflect_spectrum(&s2)), s2);
        assert_eq!(laplacian_reflect_spectrum(&s2).values(), &[-0.9, -0.5, 0.2]);
    }
}
