//! Chebyshev polynomials, the weight `w(x) = 1/√(1−x²)`, the normalized basis
//! `T̄_k`, and closed-form weighted integrals.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_SQRT_PI, PI};

use crate::error::{KpmError, Result};

/// Inputs this far outside `[-1, 1]` are clamped instead of rejected.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// `T̄_0 = T_0 / √π`.
pub const NORM_0: f64 = FRAC_2_SQRT_PI * 0.5;
/// `T̄_k = T_k · √(2/π)` for `k ≥ 1`.
pub const NORM_K: f64 = FRAC_2_SQRT_PI * core::f64::consts::FRAC_1_SQRT_2;

/// Normalization factor turning `T_k` into `T̄_k`.
#[inline]
pub fn norm_factor(k: usize) -> f64 {
    if k == 0 {
        NORM_0
    } else {
        NORM_K
    }
}

/// Clamp `x` into `[-1, 1]`, rejecting anything beyond [`DOMAIN_SLACK`].
pub fn check_domain(x: f64) -> Result<f64> {
    if x.is_nan() || !(-1.0 - DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
        return Err(KpmError::Domain { value: x });
    }
    Ok(x.clamp(-1.0, 1.0))
}

fn check_interval(a: f64, b: f64) -> Result<(f64, f64)> {
    let (ca, cb) = match (check_domain(a), check_domain(b)) {
        (Ok(ca), Ok(cb)) => (ca, cb),
        _ => return Err(KpmError::Interval { a, b }),
    };
    if a >= b {
        return Err(KpmError::Interval { a, b });
    }
    Ok((ca, cb))
}

/// `T_k(x)` by the three-term forward recurrence.
pub fn chebyshev_t(k: usize, x: f64) -> Result<f64> {
    let x = check_domain(x)?;
    Ok(t_unchecked(k, x))
}

fn t_unchecked(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 2..=k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `U_k(x)`, Chebyshev polynomial of the second kind, with `U_{-1} ≡ 0`.
pub fn chebyshev_u(k: i64, x: f64) -> Result<f64> {
    let x = check_domain(x)?;
    if k < -1 {
        return Err(KpmError::Parameter(alloc::format!("U_k needs k >= -1, got {k}")));
    }
    if k == -1 {
        return Ok(0.0);
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `T̄_k(x)`.
pub fn normalized_t(k: usize, x: f64) -> Result<f64> {
    Ok(norm_factor(k) * chebyshev_t(k, x)?)
}

/// Chebyshev weight `1/√(1−x²)`; infinite at `±1`.
#[inline]
pub fn weight(x: f64) -> f64 {
    1.0 / libm::sqrt(1.0 - x * x)
}

/// Antiderivative of `T_k(x) w(x)`: `arcsin x` for `k = 0`, otherwise
/// `−sin(k·arccos x)/k`. Finite on the closed interval.
#[inline]
pub(crate) fn weighted_antiderivative(k: usize, x: f64) -> f64 {
    if k == 0 {
        libm::asin(x)
    } else {
        let kf = k as f64;
        -libm::sin(kf * libm::acos(x)) / kf
    }
}

/// `∫_a^b T_k(x) w(x) dx` in closed form.
pub fn weighted_integral(k: usize, a: f64, b: f64) -> Result<f64> {
    let (a, b) = check_interval(a, b)?;
    Ok(weighted_antiderivative(k, b) - weighted_antiderivative(k, a))
}

/// `sin(kθ)` for `k = 1, 2, …` by repeated rotation through `θ`; the
/// rounding error grows linearly in `k`, unlike the three-term recurrence.
pub(crate) struct SineLadder {
    step: (f64, f64),
    cur: (f64, f64),
}

impl SineLadder {
    pub(crate) fn new(theta: f64) -> Self {
        let step = (libm::cos(theta), libm::sin(theta));
        Self { step, cur: (1.0, 0.0) }
    }
}

impl Iterator for SineLadder {
    type Item = f64;
    #[inline]
    fn next(&mut self) -> Option<f64> {
        let ((c, s), (ck, sk)) = (self.step, self.cur);
        self.cur = (ck * c - sk * s, sk * c + ck * s);
        Some(self.cur.1)
    }
}

/// Antiderivatives of `T_0 w, …, T_N w` at `x`, all in one pass.
pub(crate) fn weighted_antiderivatives(degree: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(libm::asin(x));
    out.extend(SineLadder::new(libm::acos(x)).take(degree).enumerate().map(|(k, s)| -s / (k + 1) as f64));
    out
}

/// Truncated expansion `Σ_{k=0}^N a_k T̄_k(x)` over the normalized basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(KpmError::Parameter("a series needs at least one coefficient".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(KpmError::NonFinite(i));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `Σ a_k T̄_k(x)`, accumulated while the forward recurrence runs.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_unchecked(check_domain(x)?))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let a = &self.coeffs;
        let mut acc = a[0] * NORM_0;
        if a.len() == 1 {
            return acc;
        }
        let (mut prev, mut cur) = (1.0, x);
        let mut tail = a[1] * cur;
        for &ak in &a[2..] {
            let next = 2.0 * x * cur - prev;
            prev = cur;
            cur = next;
            tail += ak * cur;
        }
        acc += NORM_K * tail;
        acc
    }

    /// `∫_a^b w(x) Σ a_k T̄_k(x) dx` in closed form.
    pub fn weighted_integral(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = check_interval(a, b)?;
        Ok(self.weighted_antiderivative(b) - self.weighted_antiderivative(a))
    }

    pub(crate) fn weighted_antiderivative(&self, x: f64) -> f64 {
        let head = NORM_0 * self.coeffs[0] * libm::asin(x);
        let tail: f64 = self.coeffs[1..]
            .iter()
            .zip(SineLadder::new(libm::acos(x)))
            .enumerate()
            .map(|(k, (c, s))| c * s / (k + 1) as f64)
            .sum();
        head - NORM_K * tail
    }

    /// Coefficients of the reflected series `x ↦ −x`: `a_k ↦ (−1)^k a_k`.
    pub fn reflected(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
            .collect();
        Self { coeffs }
    }
}

/// `∫_{-1}^{1} w = π`.
pub const WEIGHT_MASS: f64 = PI;
