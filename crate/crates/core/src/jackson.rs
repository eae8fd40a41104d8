//! Jackson damping coefficients and the damped truncation of a moment vector.

use alloc::vec;
use alloc::vec::Vec;

use crate::cheb::ChebyshevSeries;
use crate::error::{KpmError, Result};
use crate::moments::MomentVector;

/// Exact integer damping coefficients `b̂_N[0..=N]`, strictly decreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacksonCoefficients {
    values: Vec<u64>,
}

fn convolve(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Largest degree accepted; coefficients stay far inside `u64` up to here.
pub const MAX_DEGREE: usize = 1 << 12;

/// Check that `degree` is a positive multiple of 4.
pub fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || !degree.is_multiple_of(4) || degree > MAX_DEGREE {
        return Err(KpmError::Degree(degree));
    }
    Ok(())
}

/// Smallest multiple of 4 that is `≥ 18/ε`.
pub fn degree_for_accuracy(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KpmError::Parameter(alloc::format!("accuracy must lie in (0, 1), got {eps}")));
    }
    let quarter = libm::ceil(18.0 / (4.0 * eps)) as usize;
    let degree = 4 * quarter.max(1);
    check_degree(degree)?;
    Ok(degree)
}

/// `b̂_N = (g*g)*(g*g)` restricted to non-negative indices, where `g` is the
/// indicator of `{−N/4, …, N/4}`.
pub fn jackson_coefficients(degree: usize) -> Result<JacksonCoefficients> {
    check_degree(degree)?;
    let z = degree / 4;
    let g = vec![1u64; 2 * z + 1];
    let gg = convolve(&g, &g);
    let full = convolve(&gg, &gg);
    // `full` has length 4N/2 + 1 = 2N + 1, centred at index N.
    let values = full[degree..].to_vec();
    Ok(JacksonCoefficients { values })
}

impl JacksonCoefficients {
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// `b̂_N[k] / b̂_N[0]`.
    pub fn ratio(&self, k: usize) -> f64 {
        self.values[k] as f64 / self.values[0] as f64
    }

    pub fn ratios(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.ratio(k)).collect()
    }

    /// Damp a full coefficient vector `c_0..c_N`: `a_k = (b̂[k]/b̂[0]) c_k`.
    pub fn damp(&self, coeffs: &[f64]) -> Result<ChebyshevSeries> {
        if coeffs.len() != self.values.len() {
            return Err(KpmError::DegreeMismatch { left: coeffs.len().saturating_sub(1), right: self.degree() });
        }
        ChebyshevSeries::new(coeffs.iter().enumerate().map(|(k, c)| self.ratio(k) * c).collect())
    }
}

/// Damped series with `a_k = (b̂_N[k]/b̂_N[0]) τ̃_k`; `a_0 = τ̃_0`.
pub fn damp_moments(moments: &MomentVector, coeffs: &JacksonCoefficients) -> Result<ChebyshevSeries> {
    if moments.degree() != coeffs.degree() {
        return Err(KpmError::DegreeMismatch { left: moments.degree(), right: coeffs.degree() });
    }
    coeffs.damp(&moments.with_tau0())
}

#[cfg(feature = "std")]
mod cache {
    use super::*;
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<JacksonCoefficients>>>> = OnceLock::new();

    /// Memoized [`jackson_coefficients`]. Concurrent first use computes at
    /// most a few redundant copies; every caller sees equal values.
    pub fn cached_jackson_coefficients(degree: usize) -> Result<Arc<JacksonCoefficients>> {
        let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(hit) = map.lock().unwrap_or_else(|e| e.into_inner()).get(&degree) {
            return Ok(Arc::clone(hit));
        }
        let fresh = Arc::new(jackson_coefficients(degree)?);
        let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
        Ok(Arc::clone(guard.entry(degree).or_insert(fresh)))
    }
}

#[cfg(feature = "std")]
pub use cache::cached_jackson_coefficients;
