//! Matrix-vector oracles.
//!
//! An oracle returns `z` with `‖z − Ay‖₂ ≤ ε_MV ‖A‖₂ ‖y‖₂` and reports its own
//! `ε_MV`, so moment estimators can be written once for exact and approximate
//! products.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{KpmError, Result};
use crate::rng;

pub trait MatVecOracle: Sync {
    fn dim(&self) -> usize;

    /// Declared `ε_MV`; zero for exact products.
    fn error_bound(&self) -> f64 {
        0.0
    }

    /// Write an approximation of `A y` into `out`. `call` keys any
    /// randomness the oracle uses, so repeated calls with the same key give
    /// the same answer regardless of scheduling.
    fn apply(&self, y: &[f64], out: &mut [f64], call: u64);
}

impl<O: MatVecOracle + ?Sized> MatVecOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn error_bound(&self) -> f64 {
        (**self).error_bound()
    }
    fn apply(&self, y: &[f64], out: &mut [f64], call: u64) {
        (**self).apply(y, out, call)
    }
}

/// Wraps an oracle and counts calls.
#[derive(Debug)]
pub struct Counted<O> {
    inner: O,
    calls: AtomicU64,
}

impl<O> Counted<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: MatVecOracle> MatVecOracle for Counted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn error_bound(&self) -> f64 {
        self.inner.error_bound()
    }
    fn apply(&self, y: &[f64], out: &mut [f64], call: u64) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(y, out, call)
    }
}

/// Real symmetric matrix storing a single (lower) triangle.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricMatrix {
    /// Packed lower triangle, row-major: entry `(i, j)` with `j ≤ i` at
    /// `i(i+1)/2 + j`.
    Dense { n: usize, lower: Vec<f64> },
    /// Compressed rows of the lower triangle (`col ≤ row`).
    Sparse { n: usize, row_ptr: Vec<usize>, cols: Vec<usize>, values: Vec<f64> },
}

impl SymmetricMatrix {
    /// From a full row-major `n × n` array; rejects asymmetric input.
    pub fn dense_from_full(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(KpmError::Dimension { expected: n * n, got: data.len() });
        }
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() {
                    return Err(KpmError::NonFinite(i * n + j));
                }
                if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                    return Err(KpmError::Parameter(alloc::format!("matrix is not symmetric at ({i}, {j})")));
                }
                lower.push(a);
            }
        }
        Ok(Self::Dense { n, lower })
    }

    /// Diagonal matrix, dense storage.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut lower = vec![0.0; n * (n + 1) / 2];
        for (i, &d) in diag.iter().enumerate() {
            lower[i * (i + 1) / 2 + i] = d;
        }
        Self::Dense { n, lower }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    /// Sparse matrix from `(row, col, value)` triplets, 0-indexed. Entries
    /// above the diagonal are mirrored into the lower triangle; duplicates
    /// are summed.
    pub fn sparse_from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (idx, &(r, c, v)) in triplets.iter().enumerate() {
            if r >= n || c >= n {
                return Err(KpmError::Dimension { expected: n, got: r.max(c) + 1 });
            }
            if !v.is_finite() {
                return Err(KpmError::NonFinite(idx));
            }
            entries.push(if c <= r { (r, c, v) } else { (c, r, v) });
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self::Sparse { n, row_ptr, cols, values })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Dense { n, .. } | Self::Sparse { n, .. } => *n,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        match self {
            Self::Dense { lower, .. } => lower[r * (r + 1) / 2 + c],
            Self::Sparse { row_ptr, cols, values, .. } => {
                let span = row_ptr[r]..row_ptr[r + 1];
                match cols[span.clone()].binary_search(&c) {
                    Ok(p) => values[span.start + p],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Stored lower-triangle entries `(row, col, value)` with `col ≤ row`.
    pub fn lower_entries(&self) -> Vec<(usize, usize, f64)> {
        match self {
            Self::Dense { n, lower } => {
                let mut out = Vec::new();
                for i in 0..*n {
                    for j in 0..=i {
                        let v = lower[i * (i + 1) / 2 + j];
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
            Self::Sparse { n, row_ptr, cols, values } => {
                let mut out = Vec::with_capacity(values.len());
                for r in 0..*n {
                    for p in row_ptr[r]..row_ptr[r + 1] {
                        out.push((r, cols[p], values[p]));
                    }
                }
                out
            }
        }
    }

    /// Row-major full `n × n` copy.
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for (i, j, v) in self.lower_entries() {
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
        out
    }

    pub fn to_dense(&self) -> Self {
        let n = self.n();
        Self::dense_from_full(n, &self.to_full()).expect("symmetric by construction")
    }

    /// `out = A y`.
    pub fn matvec(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n();
        if y.len() != n {
            return Err(KpmError::Dimension { expected: n, got: y.len() });
        }
        if out.len() != n {
            return Err(KpmError::Dimension { expected: n, got: out.len() });
        }
        self.matvec_unchecked(y, out);
        Ok(())
    }

    fn matvec_unchecked(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Self::Dense { n, lower } => {
                for i in 0..*n {
                    let row = &lower[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
                    let yi = y[i];
                    let mut acc = 0.0;
                    for (j, &a) in row[..i].iter().enumerate() {
                        acc += a * y[j];
                        out[j] += a * yi;
                    }
                    out[i] += acc + row[i] * yi;
                }
            }
            Self::Sparse { n, row_ptr, cols, values } => {
                for r in 0..*n {
                    let yr = y[r];
                    let mut acc = 0.0;
                    for p in row_ptr[r]..row_ptr[r + 1] {
                        let (c, a) = (cols[p], values[p]);
                        if c == r {
                            acc += a * yr;
                        } else {
                            acc += a * y[c];
                            out[c] += a * yr;
                        }
                    }
                    out[r] += acc;
                }
            }
        }
    }

    /// Allocating `A y`.
    pub fn apply_to(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n()];
        self.matvec(y, &mut out)?;
        Ok(out)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.lower_entries().iter().map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum()
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Dense { n, lower } => Self::Dense { n: *n, lower: lower.iter().map(|v| v * factor).collect() },
            Self::Sparse { n, row_ptr, cols, values } => Self::Sparse {
                n: *n,
                row_ptr: row_ptr.clone(),
                cols: cols.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    pub fn nnz_lower(&self) -> usize {
        match self {
            Self::Dense { n, .. } => n * (n + 1) / 2,
            Self::Sparse { values, .. } => values.len(),
        }
    }
}

impl MatVecOracle for SymmetricMatrix {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, y: &[f64], out: &mut [f64], _call: u64) {
        self.matvec(y, out).expect("oracle called with mismatched dimensions");
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Shape of the error injected by [`NoisyOracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Uniform direction on the sphere.
    RandomDirection,
    /// Along `sign(y)` (zeros count as +1).
    AdversarialSign,
}

/// Test double: returns `A y + e` with `‖e‖₂ = ε_MV ‖y‖₂` exactly.
#[derive(Debug, Clone)]
pub struct NoisyOracle<'a> {
    matrix: &'a SymmetricMatrix,
    eps: f64,
    mode: NoiseMode,
    seed: u64,
}

impl<'a> NoisyOracle<'a> {
    pub fn new(matrix: &'a SymmetricMatrix, eps: f64, mode: NoiseMode, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(KpmError::Parameter(alloc::format!("eps_mv must lie in [0, 1), got {eps}")));
        }
        Ok(Self { matrix, eps, mode, seed })
    }

    fn noise(&self, y: &[f64], call: u64) -> Vec<f64> {
        let n = y.len();
        let mut e: Vec<f64> = match self.mode {
            NoiseMode::RandomDirection => {
                let mut r = rng::stream(self.seed, call);
                (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
            }
            NoiseMode::AdversarialSign => y.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect(),
        };
        let len = norm2(&e);
        let target = self.eps * norm2(y);
        if len > 0.0 {
            e.iter_mut().for_each(|v| *v *= target / len);
        }
        e
    }
}

impl MatVecOracle for NoisyOracle<'_> {
    fn dim(&self) -> usize {
        self.matrix.n()
    }
    fn error_bound(&self) -> f64 {
        self.eps
    }
    fn apply(&self, y: &[f64], out: &mut [f64], call: u64) {
        self.matrix.apply(y, out, call);
        if self.eps == 0.0 {
            return;
        }
        for (o, e) in out.iter_mut().zip(self.noise(y, call)) {
            *o += e;
        }
    }
}

/// Power-iteration lower estimate `ν ≤ ‖A‖₂`.
pub fn estimate_spectral_norm(matrix: &SymmetricMatrix, iterations: usize, seed: u64) -> Result<f64> {
    if iterations == 0 {
        return Err(KpmError::Parameter("power iteration needs at least one step".into()));
    }
    let n = matrix.n();
    if n == 0 {
        return Ok(0.0);
    }
    let mut r = rng::stream(seed, u64::MAX);
    let mut x: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let len = norm2(&x);
    x.iter_mut().for_each(|v| *v /= len);
    let mut y = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iterations {
        matrix.matvec_unchecked(&x, &mut y);
        let len = norm2(&y);
        // ‖A x‖ with ‖x‖ = 1 never exceeds ‖A‖₂.
        estimate = len;
        if len == 0.0 {
            return Ok(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / len;
        }
    }
    Ok(estimate)
}

/// Default safety margin used by [`scale_to_unit_norm`].
pub const DEFAULT_SCALE_MARGIN: f64 = 0.05;

/// Scale `matrix` by `1/(ν(1+margin))`. Returns the scaled matrix and the
/// applied factor; a zero matrix is returned unchanged with factor 1.
pub fn scale_to_unit_norm(
    matrix: &SymmetricMatrix,
    iterations: usize,
    margin: f64,
    seed: u64,
) -> Result<(SymmetricMatrix, f64)> {
    let nu = estimate_spectral_norm(matrix, iterations, seed)?;
    if nu == 0.0 {
        return Ok((matrix.clone(), 1.0));
    }
    let factor = 1.0 / (nu * (1.0 + margin));
    Ok((matrix.scaled(factor), factor))
}
