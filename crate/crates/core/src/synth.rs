//! Synthetic test matrices: dense symmetric matrices with a prescribed
//! spectrum, and random sparse symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{KpmError, Result};
use crate::oracle::SymmetricMatrix;
use crate::rng;

/// Haar-distributed orthogonal `n × n` matrix (row-major), from modified
/// Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0);
    // Column-major while orthogonalizing.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        for _ in 0..2 {
            for c in &cols {
                let p: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, ci)| *x -= p * ci);
            }
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    let mut q = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            q[i * n + j] = x;
        }
    }
    q
}

/// Dense `Q diag(eigenvalues) Qᵀ` with Haar-random `Q`.
pub fn symmetric_with_spectrum(eigenvalues: &[f64], seed: u64) -> Result<SymmetricMatrix> {
    let n = eigenvalues.len();
    if n == 0 {
        return Err(KpmError::Parameter("empty spectrum".into()));
    }
    let q = random_orthogonal(n, seed);
    let mut full = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| q[i * n + k] * eigenvalues[k] * q[j * n + k]).sum();
            full[i * n + j] = v;
            full[j * n + i] = v;
        }
    }
    SymmetricMatrix::dense_from_full(n, &full)
}

/// Eigenvalues drawn uniformly from `[-1, 1]`.
pub fn uniform_spectrum(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 1);
    (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect()
}

/// Sparse symmetric matrix with about `density·n²` Gaussian entries, scaled
/// so that its spectral norm is at most one (Gershgorin).
pub fn random_sparse_symmetric(n: usize, density: f64, seed: u64) -> Result<SymmetricMatrix> {
    let mut r = rng::stream(seed, 2);
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            if r.gen::<f64>() < density {
                let v: f64 = StandardNormal.sample(&mut r);
                triplets.push((i, j, v));
            }
        }
    }
    let raw = SymmetricMatrix::sparse_from_triplets(n, &triplets)?;
    let mut row_sums = vec![0.0; n];
    for (i, j, v) in raw.lower_entries() {
        row_sums[i] += libm::fabs(v);
        if i != j {
            row_sums[j] += libm::fabs(v);
        }
    }
    let bound = row_sums.iter().copied().fold(0.0, f64::max);
    Ok(if bound > 0.0 { raw.scaled(1.0 / bound) } else { raw })
}
