//! Chebyshev moment estimation: exact (basis sweep or known spectrum) and
//! Hutchinson-style with exact or approximate matvec oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::cheb::{self, NORM_0, NORM_K};
use crate::error::{KpmError, Result};
use crate::jackson::{check_degree, degree_for_accuracy};
use crate::oracle::{dot, MatVecOracle, SymmetricMatrix};
use crate::rng;

/// `τ_0 = ⟨s, T̄_0⟩ = 1/√π` for every density.
pub const TAU0: f64 = NORM_0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Hutchinson,
    HutchinsonApprox,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Hutchinson => "hutchinson",
            Self::HutchinsonApprox => "hutchinson-approx",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Self::Exact),
            "hutchinson" => Some(Self::Hutchinson),
            "hutchinson-approx" => Some(Self::HutchinsonApprox),
            _ => None,
        }
    }
}

/// Estimates `τ̃_1..τ̃_N` of `(1/n) tr(T̄_k(A))`; `τ̃_0` is fixed at `1/√π`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    degree: usize,
    values: Vec<f64>,
    provenance: Provenance,
    ell: usize,
    seed: u64,
}

impl MomentVector {
    pub fn new(degree: usize, values: Vec<f64>, provenance: Provenance, ell: usize, seed: u64) -> Result<Self> {
        check_degree(degree)?;
        if values.len() != degree {
            return Err(KpmError::DegreeMismatch { left: values.len(), right: degree });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(KpmError::NonFinite(i + 1));
        }
        Ok(Self { degree, values, provenance, ell, seed })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `τ̃_1..τ̃_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `τ̃_k` for `0 ≤ k ≤ N`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            TAU0
        } else {
            self.values[k - 1]
        }
    }

    /// `τ̃_0..τ̃_N`.
    pub fn with_tau0(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.degree + 1);
        out.push(TAU0);
        out.extend_from_slice(&self.values);
        out
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest `|τ̃_k − τ_k|` against a reference vector.
    pub fn max_error(&self, reference: &MomentVector) -> f64 {
        self.values.iter().zip(&reference.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Parameters tying a target accuracy to degree, repetitions and oracle error.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub eps: f64,
    pub delta: f64,
    pub degree: usize,
    /// Per-moment tolerance `Δ`; the robust KPM needs `1/N²`.
    pub tolerance: f64,
    pub eps_mv: f64,
    /// Constant in the repetition formula; never fixed analytically.
    pub constant_c: f64,
}

/// Default for [`EstimationConfig::constant_c`].
pub const DEFAULT_CONSTANT_C: f64 = 16.0;

impl EstimationConfig {
    /// `N = 4⌈18/(4ε)⌉`, `Δ = 1/N²`, `ε_MV = Δ/(4N²)`.
    pub fn for_accuracy(eps: f64, delta: f64) -> Result<Self> {
        let degree = degree_for_accuracy(eps)?;
        Self::for_degree(degree, delta).map(|c| Self { eps, ..c })
    }

    pub fn for_degree(degree: usize, delta: f64) -> Result<Self> {
        check_degree(degree)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(KpmError::Parameter(alloc::format!("delta must lie in (0, 1), got {delta}")));
        }
        let n2 = (degree * degree) as f64;
        let tolerance = 1.0 / n2;
        Ok(Self {
            eps: 18.0 / degree as f64,
            delta,
            degree,
            tolerance,
            eps_mv: tolerance / (4.0 * n2),
            constant_c: DEFAULT_CONSTANT_C,
        })
    }

    /// `ℓ = max(1, ⌈C log²(N/δ) / (n Δ²)⌉)`.
    pub fn repetitions(&self, n: usize) -> usize {
        let log = libm::log(self.degree as f64 / self.delta);
        let raw = self.constant_c * log * log / (n as f64 * self.tolerance * self.tolerance);
        (libm::ceil(raw) as usize).max(1)
    }
}

fn call_key(seed: u64, rep: u64, step: usize) -> u64 {
    rng::mix(seed, rep).wrapping_add(step as u64)
}

/// Run `ṽ_0 = g`, `ṽ_1 = AMV(g)`, `ṽ_k = 2 AMV(ṽ_{k−1}) − ṽ_{k−2}` for
/// `k ≤ degree`, calling `visit(k, ṽ_k)` for `k ≥ 1`. Uses exactly `degree`
/// oracle calls.
pub fn chebyshev_sweep<O, F>(oracle: &O, probe: &[f64], degree: usize, key: impl Fn(usize) -> u64, mut visit: F)
where
    O: MatVecOracle + ?Sized,
    F: FnMut(usize, &[f64]),
{
    let n = probe.len();
    let mut prev = probe.to_vec();
    let mut cur = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    if degree == 0 {
        return;
    }
    oracle.apply(&prev, &mut cur, key(0));
    visit(1, &cur);
    for k in 2..=degree {
        oracle.apply(&cur, &mut scratch, key(k - 1));
        for (s, p) in scratch.iter_mut().zip(&prev) {
            *s = 2.0 * *s - p;
        }
        core::mem::swap(&mut prev, &mut cur);
        core::mem::swap(&mut cur, &mut scratch);
        visit(k, &cur);
    }
}

/// Raw quadratic forms `gᵀ ṽ_k`, `k = 1..=degree`, for one probe.
fn probe_forms<O: MatVecOracle + ?Sized>(oracle: &O, probe: &[f64], degree: usize, key: impl Fn(usize) -> u64) -> Vec<f64> {
    let mut forms = vec![0.0; degree];
    chebyshev_sweep(oracle, probe, degree, key, |k, v| forms[k - 1] = dot(probe, v));
    forms
}

fn check_oracle<O: MatVecOracle + ?Sized>(oracle: &O, degree: usize) -> Result<usize> {
    check_degree(degree)?;
    let n = oracle.dim();
    if n == 0 {
        return Err(KpmError::Parameter("oracle has dimension 0".into()));
    }
    Ok(n)
}

fn hutchinson_inner<O: MatVecOracle + ?Sized>(
    oracle: &O,
    degree: usize,
    ell: usize,
    seed: u64,
    provenance: Provenance,
) -> Result<MomentVector> {
    let n = check_oracle(oracle, degree)?;
    if ell == 0 {
        return Err(KpmError::Parameter("need at least one repetition".into()));
    }
    let per_rep: Vec<Vec<f64>> = (0..ell as u64)
        .map(|rep| {
            let g = rng::rademacher(n, seed, rep);
            probe_forms(oracle, &g, degree, |step| call_key(seed, rep, step))
        })
        .collect();
    Ok(reduce(per_rep, n, degree, provenance, ell, seed))
}

/// Quadratic forms `gᵀ ṽ_k`, `k = 1..=degree`, for Hutchinson repetition
/// `rep`: the unit of work behind [`hutchinson_moments`], exposed so callers
/// can farm repetitions out to workers and combine them with
/// [`moments_from_forms`].
pub fn hutchinson_probe_forms<O: MatVecOracle + ?Sized>(oracle: &O, degree: usize, seed: u64, rep: u64) -> Vec<f64> {
    let g = rng::rademacher(oracle.dim(), seed, rep);
    probe_forms(oracle, &g, degree, |step| call_key(seed, rep, step))
}

/// Combine per-repetition forms (in repetition order) exactly as the
/// sequential estimators do.
pub fn moments_from_forms(
    per_rep: Vec<Vec<f64>>,
    n: usize,
    degree: usize,
    provenance: Provenance,
    seed: u64,
) -> Result<MomentVector> {
    check_degree(degree)?;
    if n == 0 || per_rep.is_empty() {
        return Err(KpmError::Parameter("need a non-empty operator and at least one repetition".into()));
    }
    if let Some(bad) = per_rep.iter().find(|f| f.len() != degree) {
        return Err(KpmError::DegreeMismatch { left: degree, right: bad.len() });
    }
    let ell = per_rep.len();
    Ok(reduce(per_rep, n, degree, provenance, ell, seed))
}

/// Sum of `e_jᵀ ṽ_k(e_j)` over basis vectors `j ∈ range`: one slice of the
/// trace in [`exact_moments`], for chunked parallel evaluation. Scale the
/// total by `√(2/π)/n`.
pub fn basis_trace_partial<O: MatVecOracle + ?Sized>(oracle: &O, degree: usize, range: core::ops::Range<usize>) -> Vec<f64> {
    let mut sums = vec![0.0; degree];
    let mut e = vec![0.0; oracle.dim()];
    for j in range {
        e[j] = 1.0;
        chebyshev_sweep(oracle, &e, degree, |step| call_key(0, j as u64, step), |k, v| sums[k - 1] += v[j]);
        e[j] = 0.0;
    }
    sums
}

/// Ordered (by repetition index) average, scaled by `√(2/π)/n`.
fn reduce(per_rep: Vec<Vec<f64>>, n: usize, degree: usize, provenance: Provenance, ell: usize, seed: u64) -> MomentVector {
    let mut sums = vec![0.0; degree];
    for forms in &per_rep {
        for (s, f) in sums.iter_mut().zip(forms) {
            *s += f;
        }
    }
    let scale = NORM_K / (per_rep.len() as f64 * n as f64);
    let values = sums.into_iter().map(|s| s * scale).collect();
    MomentVector { degree, values, provenance, ell, seed }
}

/// Hutchinson moment estimates with `ℓ` Rademacher probes; `N ℓ` oracle
/// calls, all `N` moments read off one recurrence sweep per probe.
pub fn hutchinson_moments<O: MatVecOracle + ?Sized>(oracle: &O, degree: usize, ell: usize, seed: u64) -> Result<MomentVector> {
    hutchinson_inner(oracle, degree, ell, seed, Provenance::Hutchinson)
}

/// Same estimator driven by an `ε_MV`-approximate oracle. Identical output
/// to [`hutchinson_moments`] when the oracle is exact.
pub fn approx_hutchinson_moments<O: MatVecOracle + ?Sized>(
    oracle: &O,
    degree: usize,
    ell: usize,
    seed: u64,
) -> Result<MomentVector> {
    let eps = oracle.error_bound();
    let limit = 1.0 / (2.0 * (degree * degree) as f64);
    if eps > limit {
        log::warn!("eps_mv = {eps:e} exceeds 1/(2N^2) = {limit:e}; the recurrence error bound no longer applies");
    }
    hutchinson_inner(oracle, degree, ell, seed, Provenance::HutchinsonApprox)
}

/// Hutchinson average over caller-supplied probe vectors (e.g. a full
/// enumeration of sign patterns).
pub fn moments_from_probes<O: MatVecOracle + ?Sized>(oracle: &O, degree: usize, probes: &[Vec<f64>]) -> Result<MomentVector> {
    let n = check_oracle(oracle, degree)?;
    if probes.is_empty() {
        return Err(KpmError::Parameter("need at least one probe".into()));
    }
    let mut per_rep = Vec::with_capacity(probes.len());
    for (rep, g) in probes.iter().enumerate() {
        if g.len() != n {
            return Err(KpmError::Dimension { expected: n, got: g.len() });
        }
        per_rep.push(probe_forms(oracle, g, degree, |step| call_key(0, rep as u64, step)));
    }
    Ok(reduce(per_rep, n, degree, Provenance::Hutchinson, probes.len(), 0))
}

/// Exact moments by pushing every standard basis vector through the
/// recurrence: `n N` oracle calls.
pub fn exact_moments<O: MatVecOracle + ?Sized>(oracle: &O, degree: usize) -> Result<MomentVector> {
    let n = check_oracle(oracle, degree)?;
    let sums = basis_trace_partial(oracle, degree, 0..n);
    let scale = NORM_K / n as f64;
    Ok(MomentVector { degree, values: sums.into_iter().map(|s| s * scale).collect(), provenance: Provenance::Exact, ell: 0, seed: 0 })
}

/// Exact moments `(1/n) Σ_i T̄_k(λ_i)` from known eigenvalues.
pub fn moments_from_spectrum(eigenvalues: &[f64], degree: usize) -> Result<MomentVector> {
    check_degree(degree)?;
    if eigenvalues.is_empty() {
        return Err(KpmError::Parameter("empty spectrum".into()));
    }
    let mut sums = vec![0.0; degree];
    for &lambda in eigenvalues {
        let x = cheb::check_domain(lambda)?;
        let (mut prev, mut cur) = (1.0, x);
        sums[0] += cur;
        for s in sums.iter_mut().skip(1) {
            let next = 2.0 * x * cur - prev;
            prev = cur;
            cur = next;
            *s += cur;
        }
    }
    let scale = NORM_K / eigenvalues.len() as f64;
    Ok(MomentVector { degree, values: sums.into_iter().map(|s| s * scale).collect(), provenance: Provenance::Exact, ell: 0, seed: 0 })
}

/// Vectors produced by one (possibly approximate) recurrence sweep.
#[derive(Debug, Clone)]
pub struct RecurrenceTrace {
    /// `ṽ_0..ṽ_N`.
    pub approx: Vec<Vec<f64>>,
    /// Oracle outputs `w_0..w_{N−1}`, `w_k ≈ A ṽ_k`.
    pub oracle_outputs: Vec<Vec<f64>>,
}

impl RecurrenceTrace {
    pub fn probe(&self) -> &[f64] {
        &self.approx[0]
    }

    pub fn degree(&self) -> usize {
        self.approx.len() - 1
    }
}

/// Record every vector of the approximate recurrence for probe `g`.
pub fn trace_recurrence<O: MatVecOracle + ?Sized>(oracle: &O, probe: &[f64], degree: usize, seed: u64) -> RecurrenceTrace {
    let n = probe.len();
    let mut approx = vec![probe.to_vec()];
    let mut outputs = Vec::with_capacity(degree);
    for k in 0..degree {
        let mut w = vec![0.0; n];
        oracle.apply(&approx[k], &mut w, call_key(seed, 0, k));
        let next: Vec<f64> = if k == 0 {
            w.clone()
        } else {
            w.iter().zip(&approx[k - 1]).map(|(wi, p)| 2.0 * wi - p).collect()
        };
        outputs.push(w);
        approx.push(next);
    }
    RecurrenceTrace { approx, oracle_outputs: outputs }
}

/// Accumulated recurrence error, measured directly and rebuilt from the
/// per-step oracle errors through second-kind polynomials.
#[derive(Debug, Clone)]
pub struct ErrorDecomposition {
    /// Exact `v_k = T_k(A) g`.
    pub exact: Vec<Vec<f64>>,
    /// `δ_k = v_k − ṽ_k`, measured.
    pub measured: Vec<Vec<f64>>,
    /// `ξ_k = A ṽ_{k−1} − w_{k−1}` (index 0 is the zero vector).
    pub injected: Vec<Vec<f64>>,
    /// `U_{k−1}(A) ξ_1 + 2 Σ_{i=2}^k U_{k−i}(A) ξ_i`.
    pub reconstructed: Vec<Vec<f64>>,
}

impl ErrorDecomposition {
    /// `max_k ‖measured_k − reconstructed_k‖ / max(‖measured_k‖, tiny)`.
    pub fn max_relative_gap(&self) -> f64 {
        self.measured
            .iter()
            .zip(&self.reconstructed)
            .map(|(m, r)| {
                let diff: Vec<f64> = m.iter().zip(r).map(|(a, b)| a - b).collect();
                let scale = crate::oracle::norm2(m).max(1e-300);
                if crate::oracle::norm2(&diff) == 0.0 {
                    0.0
                } else {
                    crate::oracle::norm2(&diff) / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `U_j(A) x` for `j = 0..=max`, by the second-kind recurrence.
fn second_kind_images(matrix: &SymmetricMatrix, x: &[f64], max: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![x.to_vec()];
    if max >= 1 {
        out.push(matrix.apply_to(x)?.into_iter().map(|v| 2.0 * v).collect());
    }
    for j in 2..=max {
        let ax = matrix.apply_to(&out[j - 1])?;
        let next = ax.iter().zip(&out[j - 2]).map(|(a, p)| 2.0 * a - p).collect();
        out.push(next);
    }
    Ok(out)
}

/// Compare the measured recurrence error with its second-kind expansion.
pub fn recurrence_error_decomposition(trace: &RecurrenceTrace, exact: &SymmetricMatrix) -> Result<ErrorDecomposition> {
    let degree = trace.degree();
    let n = trace.probe().len();
    if exact.n() != n {
        return Err(KpmError::Dimension { expected: exact.n(), got: n });
    }
    let mut v = vec![trace.probe().to_vec()];
    for k in 1..=degree {
        let av = exact.apply_to(&v[k - 1])?;
        let next = if k == 1 { av } else { av.iter().zip(&v[k - 2]).map(|(a, p)| 2.0 * a - p).collect() };
        v.push(next);
    }
    let measured: Vec<Vec<f64>> = v.iter().zip(&trace.approx).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();

    let mut injected = vec![vec![0.0; n]];
    for k in 1..=degree {
        let a_prev = exact.apply_to(&trace.approx[k - 1])?;
        injected.push(a_prev.iter().zip(&trace.oracle_outputs[k - 1]).map(|(a, w)| a - w).collect());
    }

    // images[i][j] = U_j(A) ξ_i
    let images: Vec<Vec<Vec<f64>>> = (1..=degree)
        .map(|i| second_kind_images(exact, &injected[i], degree - i))
        .collect::<Result<_>>()?;
    let mut reconstructed = vec![vec![0.0; n]];
    for k in 1..=degree {
        let mut acc = images[0][k - 1].clone();
        for i in 2..=k {
            for (a, u) in acc.iter_mut().zip(&images[i - 1][k - i]) {
                *a += 2.0 * u;
            }
        }
        reconstructed.push(acc);
    }
    Ok(ErrorDecomposition { exact: v, measured, injected, reconstructed })
}
