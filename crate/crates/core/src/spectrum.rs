//! Discrete spectra: discretizing a density into `n` eigenvalues,
//! Wasserstein-1 distances, and a dense Jacobi eigensolver for ground truth.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{KpmError, Result};
use crate::oracle::SymmetricMatrix;

/// Tolerance on the `[-1, 1]` support of a [`DiscreteSpectrum`].
pub const SUPPORT_TOL: f64 = 1e-9;

/// `n` eigenvalues in `[-1, 1]`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum {
    values: Vec<f64>,
}

impl DiscreteSpectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(KpmError::Parameter("a spectrum needs at least one value".into()));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(KpmError::NonFinite(i));
            }
            if v.abs() > 1.0 + SUPPORT_TOL {
                return Err(KpmError::Domain { value: *v });
            }
            *v = v.clamp(-1.0, 1.0);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Fraction of eigenvalues `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// `x ↦ −x`, re-sorted.
    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().rev().map(|v| -v).collect() }
    }

    /// Fraction of eigenvalues in each of `bins` equal-width bins over
    /// `[-1, 1]`; the last bin is closed on the right.
    pub fn histogram(&self, bins: usize) -> Vec<f64> {
        let mut out = vec![0.0; bins];
        let n = self.len() as f64;
        for &v in &self.values {
            let idx = ((v + 1.0) / 2.0 * bins as f64) as usize;
            out[idx.min(bins - 1)] += 1.0 / n;
        }
        out
    }
}

/// A probability density on `[-1, 1]` with closed-form integrals.
pub trait IntegrableDensity {
    /// `∫_{-1}^x q`.
    fn cdf(&self, x: f64) -> f64;

    /// `∫_a^b q`.
    fn mass(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }

    /// `∫_a^b x q(x) dx`.
    fn first_moment(&self, a: f64, b: f64) -> f64;

    /// `∫_a^b F(x) dx` where `F` is [`IntegrableDensity::cdf`].
    fn cdf_integral(&self, a: f64, b: f64) -> f64;
}

/// Output of [`discretize_greedy`].
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyDiscretization {
    pub spectrum: DiscreteSpectrum,
    /// Eigenvalues added (positive) or removed (negative) in the last cell
    /// to compensate for floating-point drift in the carry chain.
    pub final_cell_adjustment: i64,
}

/// Slack when flooring scaled masses, so `0.9999999999` units count as one.
const FLOOR_SLACK: f64 = 1e-9;

/// Greedy grid discretization. Grid points are `−1 + jε` for `j ≥ 1`, the
/// last one clipped to `1`; each cell's mass (plus carried remainder) is
/// rounded down to a multiple of `1/n` and that many eigenvalues are placed
/// at the cell's right end.
pub fn discretize_greedy<D: IntegrableDensity + ?Sized>(q: &D, n: usize, eps: f64) -> Result<GreedyDiscretization> {
    if n == 0 {
        return Err(KpmError::Parameter("need at least one eigenvalue".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KpmError::Parameter(format!("grid spacing must lie in (0, 1), got {eps}")));
    }
    let cells = libm::ceil(2.0 / eps - 1e-9) as usize;
    let mut out: Vec<f64> = Vec::with_capacity(n);
    let mut carry = 0.0;
    let mut last_t = 1.0;
    let mut left = -1.0;
    for j in 1..=cells {
        let t = if j == cells { 1.0 } else { (-1.0 + j as f64 * eps).min(1.0) };
        let scaled = n as f64 * q.mass(left, t) + carry;
        let count = libm::floor(scaled + FLOOR_SLACK).max(0.0);
        carry = scaled - count;
        let room = n - out.len();
        for _ in 0..(count as usize).min(room) {
            out.push(t);
        }
        left = t;
        last_t = t;
    }
    let adjustment = n as i64 - out.len() as i64;
    while out.len() < n {
        out.push(last_t);
    }
    if adjustment != 0 {
        log::debug!("greedy discretization: final cell adjusted by {adjustment}");
    }
    Ok(GreedyDiscretization { spectrum: DiscreteSpectrum::new(out)?, final_cell_adjustment: adjustment })
}

/// Bisection limit for quantile search.
pub const MAX_BISECTION_STEPS: usize = 200;
/// Target accuracy (in probability mass) of each quantile.
pub const QUANTILE_MASS_TOL: f64 = 1e-10;

/// Optimal discretization: cut `q` into `n` slabs of mass `1/n` and place one
/// eigenvalue at each slab's conditional mean.
pub fn discretize_optimal<D: IntegrableDensity + ?Sized>(q: &D, n: usize) -> Result<DiscreteSpectrum> {
    if n == 0 {
        return Err(KpmError::Parameter("need at least one eigenvalue".into()));
    }
    // Coarse CDF table to bracket each quantile before bisecting.
    let table: Vec<(f64, f64)> = (0..=QUANTILE_TABLE)
        .map(|j| {
            let x = -1.0 + 2.0 * j as f64 / QUANTILE_TABLE as f64;
            (x, q.cdf(x))
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut t = -1.0;
    for i in 1..=n {
        let t_next = if i == n {
            1.0
        } else {
            let target = i as f64 / n as f64;
            let upper = table.partition_point(|&(_, f)| f < target).min(QUANTILE_TABLE);
            let hi = table[upper].0;
            let lo = if upper > 0 { table[upper - 1].0.max(t) } else { t };
            quantile(q, target, lo.min(hi), hi)?
        };
        let mass = q.mass(t, t_next);
        let point = if mass > 1e-300 && t_next > t {
            (q.first_moment(t, t_next) / mass).clamp(t, t_next)
        } else {
            0.5 * (t + t_next)
        };
        out.push(point);
        t = t_next;
    }
    DiscreteSpectrum::new(out)
}

const QUANTILE_TABLE: usize = 1024;

/// `x` in `[lo, hi]` with `F(x) ≈ target`, by bisection.
fn quantile<D: IntegrableDensity + ?Sized>(q: &D, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        let f = q.cdf(mid);
        if (f - target).abs() <= QUANTILE_MASS_TOL || b - a <= 4.0 * f64::EPSILON {
            return Ok(mid);
        }
        if f < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(KpmError::NoConvergence(format!("quantile search for mass {target} (bracket [{a}, {b}])")))
}

/// Exact W1 between two equal-size uniform discrete distributions.
pub fn w1_discrete(a: &DiscreteSpectrum, b: &DiscreteSpectrum) -> Result<f64> {
    if a.len() != b.len() {
        return Err(KpmError::Dimension { expected: a.len(), got: b.len() });
    }
    let total: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Lower bound on `resolution` for [`w1_density_vs_spectrum`].
pub const MIN_RESOLUTION: usize = 1000;

/// `W1(q, Λ) = ∫_{-1}^1 |F_q − F_Λ|`, integrated piecewise in closed form.
/// Pieces split at the eigenvalues, at `resolution` uniform panel edges, and
/// at sign changes of `F_q − F_Λ` found by bisection inside each piece.
pub fn w1_density_vs_spectrum<D: IntegrableDensity + ?Sized>(q: &D, spectrum: &DiscreteSpectrum, resolution: usize) -> Result<f64> {
    if resolution < MIN_RESOLUTION {
        return Err(KpmError::Parameter(format!("resolution must be at least {MIN_RESOLUTION}, got {resolution}")));
    }
    let mut breaks: Vec<f64> = (0..=resolution).map(|i| -1.0 + 2.0 * i as f64 / resolution as f64).collect();
    breaks.extend(spectrum.values.iter().copied().filter(|v| v.abs() < 1.0));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let level = spectrum.cdf(u);
        let piece = |a: f64, b: f64| (q.cdf_integral(a, b) - level * (b - a)).abs();
        let (du, dv) = (q.cdf(u) - level, q.cdf(v) - level);
        if du * dv < 0.0 {
            let (mut a, mut b) = (u, v);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if (q.cdf(mid) - level) * du > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            total += piece(u, root) + piece(root, v);
        } else {
            total += piece(u, v);
        }
    }
    Ok(total)
}

/// Largest dimension accepted by [`dense_eigenvalues`].
pub const DENSE_LIMIT: usize = 4096;
const MAX_SWEEPS: usize = 100;

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, until
/// the off-diagonal Frobenius norm is at most `1e-10 ‖A‖_F`. The result is
/// sorted ascending and is not clipped to `[-1, 1]`.
pub fn dense_eigenvalues_unclipped(matrix: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = matrix.n();
    if n > DENSE_LIMIT {
        return Err(KpmError::TooLarge { n, limit: DENSE_LIMIT });
    }
    let mut a = matrix.to_full();
    let fro = libm::sqrt(a.iter().map(|v| v * v).sum::<f64>());
    let target = 1e-10 * fro;
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        libm::sqrt(s)
    };
    let mut converged = off_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(KpmError::NoConvergence(format!("Jacobi eigensolver after {MAX_SWEEPS} sweeps")));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (arp, arq) = (a[r * n + p], a[r * n + q]);
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[r * n + p] = np;
                    a[p * n + r] = np;
                    a[r * n + q] = nq;
                    a[q * n + r] = nq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= target;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// [`dense_eigenvalues_unclipped`] packaged as a spectrum on `[-1, 1]`.
pub fn dense_eigenvalues(matrix: &SymmetricMatrix) -> Result<DiscreteSpectrum> {
    DiscreteSpectrum::new(dense_eigenvalues_unclipped(matrix)?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Uniform density `1/2` on `[-1, 1]`.
    pub(crate) struct Uniform;

    impl IntegrableDensity for Uniform {
        fn cdf(&self, x: f64) -> f64 {
            (x.clamp(-1.0, 1.0) + 1.0) / 2.0
        }
        fn first_moment(&self, a: f64, b: f64) -> f64 {
            (b * b - a * a) / 4.0
        }
        fn cdf_integral(&self, a: f64, b: f64) -> f64 {
            ((b + 1.0).powi(2) - (a + 1.0).powi(2)) / 4.0
        }
    }

    fn spec(v: &[f64]) -> DiscreteSpectrum {
        DiscreteSpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spectrum_sorts_and_validates() {
        assert_eq!(spec(&[0.5, -0.2]).values(), &[-0.2, 0.5]);
        assert_eq!(spec(&[1.0 + 1e-10]).values(), &[1.0]);
        assert!(DiscreteSpectrum::new(vec![1.1]).is_err());
        assert!(DiscreteSpectrum::new(vec![]).is_err());
    }

    #[test]
    fn greedy_uniform_by_hand() {
        let g = discretize_greedy(&Uniform, 2, 0.5).unwrap();
        assert_eq!(g.spectrum.values(), &[0.0, 1.0]);
        assert_eq!(g.final_cell_adjustment, 0);
    }

    #[test]
    fn greedy_single_value_lands_at_first_full_cell() {
        let g = discretize_greedy(&Uniform, 1, 0.1).unwrap();
        assert!((g.spectrum.values()[0] - 1.0).abs() < 1e-12);
        let g = discretize_greedy(&Uniform, 4, 0.25).unwrap();
        assert_eq!(g.spectrum.len(), 4);
        for (v, e) in g.spectrum.values().iter().zip([-0.5, 0.0, 0.5, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_handles_non_dividing_spacing() {
        let g = discretize_greedy(&Uniform, 10, 0.3).unwrap();
        assert_eq!(g.spectrum.len(), 10);
        assert_eq!(*g.spectrum.values().last().unwrap(), 1.0);
    }

    #[test]
    fn optimal_uniform_midpoints() {
        assert_eq!(discretize_optimal(&Uniform, 1).unwrap().values(), &[0.0]);
        let two = discretize_optimal(&Uniform, 2).unwrap();
        for (v, e) in two.values().iter().zip([-0.5, 0.5]) {
            assert!((v - e).abs() < 1e-9);
        }
        let four = discretize_optimal(&Uniform, 4).unwrap();
        for (v, e) in four.values().iter().zip([-0.75, -0.25, 0.25, 0.75]) {
            assert!((v - e).abs() < 1e-9);
        }
    }

    #[test]
    fn w1_discrete_examples() {
        assert_eq!(w1_discrete(&spec(&[0.1, 0.2]), &spec(&[0.1, 0.2])).unwrap(), 0.0);
        assert_eq!(w1_discrete(&spec(&[0.0, 1.0]), &spec(&[0.5, 1.0])).unwrap(), 0.25);
        assert_eq!(w1_discrete(&spec(&[-1.0, 1.0]), &spec(&[1.0, -1.0])).unwrap(), 0.0);
        assert!(w1_discrete(&spec(&[0.0]), &spec(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn w1_uniform_against_single_point() {
        let w = w1_density_vs_spectrum(&Uniform, &spec(&[0.0]), 1000).unwrap();
        assert!((w - 0.5).abs() < 1e-12);
        assert!(w1_density_vs_spectrum(&Uniform, &spec(&[0.0]), 10).is_err());
    }

    #[test]
    fn w1_uniform_against_its_quantile_points() {
        // Optimal m-point discretization of the uniform law has W1 = 1/(2m).
        for m in [4usize, 50] {
            let d = discretize_optimal(&Uniform, m).unwrap();
            let w = w1_density_vs_spectrum(&Uniform, &d, 1000).unwrap();
            assert!((w - 0.5 / m as f64).abs() < 1e-9, "m={m}: {w}");
        }
    }

    #[test]
    fn jacobi_examples() {
        let d = SymmetricMatrix::diagonal(&[0.5, -0.25]);
        assert_eq!(dense_eigenvalues(&d).unwrap().values(), &[-0.25, 0.5]);
        let swap = SymmetricMatrix::dense_from_full(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = dense_eigenvalues(&swap).unwrap();
        assert!((e.values()[0] + 1.0).abs() < 1e-14 && (e.values()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_size_guard() {
        let big = SymmetricMatrix::Sparse { n: DENSE_LIMIT + 1, row_ptr: vec![0; DENSE_LIMIT + 2], cols: vec![], values: vec![] };
        assert!(matches!(dense_eigenvalues(&big), Err(KpmError::TooLarge { .. })));
    }

    #[test]
    fn histogram_masses() {
        let h = spec(&[-1.0, 0.0, 0.0, 1.0]).histogram(11);
        assert_eq!(h.len(), 11);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(h[0], 0.25);
        assert_eq!(h[5], 0.5);
        assert_eq!(h[10], 0.25);
    }
}
