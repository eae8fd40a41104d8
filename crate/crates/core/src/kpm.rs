//! Kernel polynomial method: damped moments become a probability density
//! `q(x) = w(x) Σ a_k T̄_k(x)` on `[-1, 1]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cheb::{self, norm_factor, ChebyshevSeries};
use crate::error::{KpmError, Result};
use crate::jackson::{damp_moments, JacksonCoefficients};
use crate::moments::{MomentVector, Provenance, TAU0};
use crate::spectrum::IntegrableDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityForm {
    /// Damped exact moments.
    Idealized,
    /// Damped approximate moments, shifted by `w√2/(N√π)` and rescaled.
    ShiftedRescaled,
}

impl DensityForm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Idealized => "idealized",
            Self::ShiftedRescaled => "shifted-rescaled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "idealized" => Some(Self::Idealized),
            "shifted-rescaled" => Some(Self::ShiftedRescaled),
            _ => None,
        }
    }
}

/// Tolerance on `a_0 = 1/√π`, i.e. on unit total mass.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Density `q = w · Σ a_k T̄_k` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    series: ChebyshevSeries,
    form: DensityForm,
    /// Set after a Laplacian reflection: the density lives on the
    /// normalized-Laplacian spectrum shifted into `[-1, 1]`; add 1 to recover
    /// Laplacian coordinates.
    reflected: bool,
}

impl DensityEstimate {
    /// Rebuild from stored coefficients; rejects anything without unit mass.
    pub fn from_parts(series: ChebyshevSeries, form: DensityForm, reflected: bool) -> Result<Self> {
        let a0 = series.coeffs()[0];
        if (a0 - TAU0).abs() > 1e-9 {
            return Err(KpmError::Parameter(alloc::format!("leading coefficient {a0} does not give unit mass")));
        }
        Ok(Self { series, form, reflected })
    }

    pub fn series(&self) -> &ChebyshevSeries {
        &self.series
    }

    pub fn coeffs(&self) -> &[f64] {
        self.series.coeffs()
    }

    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    pub fn form(&self) -> DensityForm {
        self.form
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// `Σ a_k T̄_k(x)`, the polynomial factor of `q`.
    pub fn polynomial(&self, x: f64) -> Result<f64> {
        self.series.eval(x)
    }

    /// `q(x)`; infinite at `±1` unless the polynomial vanishes there.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = cheb::check_domain(x)?;
        Ok(cheb::weight(x) * self.series.eval_unchecked(x))
    }

    /// `∫_a^b q` in closed form.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        self.series.weighted_integral(a, b)
    }

    /// Smallest `q(x)` over `points` interior points `−1 + 2i/(points+1)`.
    pub fn grid_min(&self, points: usize) -> f64 {
        interior_grid(points).map(|x| cheb::weight(x) * self.series.eval_unchecked(x)).fold(f64::INFINITY, f64::min)
    }

    /// `(x, q(x))` on a Chebyshev-spaced grid kept `margin` away from `±1`.
    pub fn plot_points(&self, points: usize, margin: f64) -> Vec<(f64, f64)> {
        let m = points.max(1) as f64;
        (0..points)
            .rev()
            .map(|i| {
                let x = (1.0 - margin) * libm::cos(PI * (i as f64 + 0.5) / m);
                (x, cheb::weight(x) * self.series.eval_unchecked(x))
            })
            .collect()
    }

    /// Reflect `x ↦ −x` (coefficients `a_k ↦ (−1)^k a_k`) and flip the
    /// Laplacian marker.
    pub fn reflected(&self) -> Self {
        Self { series: self.series.reflected(), form: self.form, reflected: !self.reflected }
    }
}

/// `points` interior grid points `−1 + 2i/(points+1)`, `i = 1..=points`.
pub fn interior_grid(points: usize) -> impl Iterator<Item = f64> {
    let step = 2.0 / (points as f64 + 1.0);
    (1..=points).map(move |i| -1.0 + step * i as f64)
}

/// Antiderivative of `G_k(x) = ∫_{-1}^x T_k w`, up to the constant
/// `G_k(−1)` which callers subtract separately.
fn cdf_antiderivative(k: usize, x: f64) -> f64 {
    let theta = libm::acos(x);
    match k {
        0 => x * libm::asin(x) + libm::sqrt((1.0 - x * x).max(0.0)),
        1 => 0.5 * (theta - 0.5 * libm::sin(2.0 * theta)),
        _ => {
            let kf = k as f64;
            (libm::sin((kf - 1.0) * theta) / (kf - 1.0) - libm::sin((kf + 1.0) * theta) / (kf + 1.0)) / (2.0 * kf)
        }
    }
}

impl IntegrableDensity for DensityEstimate {
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        self.series.weighted_antiderivative(x) - self.series.weighted_antiderivative(-1.0)
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        self.series.weighted_antiderivative(b.clamp(-1.0, 1.0)) - self.series.weighted_antiderivative(a.clamp(-1.0, 1.0))
    }

    fn first_moment(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(-1.0, 1.0), b.clamp(-1.0, 1.0));
        let n = self.degree();
        let ga = cheb::weighted_antiderivatives(n + 1, a);
        let gb = cheb::weighted_antiderivatives(n + 1, b);
        let i = |k: usize| gb[k] - ga[k];
        self.coeffs()
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                // x T_0 = T_1; x T_k = (T_{k+1} + T_{k−1}) / 2.
                let xt = if k == 0 { i(1) } else { 0.5 * (i(k + 1) + i(k - 1)) };
                norm_factor(k) * c * xt
            })
            .sum()
    }

    fn cdf_integral(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(-1.0, 1.0), b.clamp(-1.0, 1.0));
        let base = cheb::weighted_antiderivatives(self.degree(), -1.0);
        self.coeffs()
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let h = cdf_antiderivative(k, b) - cdf_antiderivative(k, a) - base[k] * (b - a);
                norm_factor(k) * c * h
            })
            .sum()
    }
}

/// Idealized KPM on exact moments: `q = w Σ (b̂[k]/b̂[0]) τ_k T̄_k`.
pub fn idealized_kpm(moments: &MomentVector, coeffs: &JacksonCoefficients) -> Result<DensityEstimate> {
    if moments.provenance() != Provenance::Exact {
        return Err(KpmError::Parameter(alloc::format!(
            "idealized KPM needs exact moments, got {}",
            moments.provenance().as_str()
        )));
    }
    let series = damp_moments(moments, coeffs)?;
    Ok(DensityEstimate { series, form: DensityForm::Idealized, reflected: false })
}

/// Robust KPM: damp, add `√2/N` to `a_0`, divide everything by
/// `1 + √(2π)/N`. Non-negative with unit mass whenever the moments are
/// within `1/N²` of the truth.
pub fn full_kpm(moments: &MomentVector, coeffs: &JacksonCoefficients) -> Result<DensityEstimate> {
    let damped = damp_moments(moments, coeffs)?;
    let n = coeffs.degree() as f64;
    let shift = core::f64::consts::SQRT_2 / n;
    let rescale = 1.0 + libm::sqrt(2.0 * PI) / n;
    let mut a = damped.into_coeffs();
    a[0] += shift;
    a.iter_mut().for_each(|c| *c /= rescale);
    Ok(DensityEstimate { series: ChebyshevSeries::new(a)?, form: DensityForm::ShiftedRescaled, reflected: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jackson::jackson_coefficients;
    use crate::moments::moments_from_spectrum;
    use alloc::vec;

    fn point_mass(degree: usize) -> DensityEstimate {
        let m = moments_from_spectrum(&[0.0, 0.0], degree).unwrap();
        idealized_kpm(&m, &jackson_coefficients(degree).unwrap()).unwrap()
    }

    #[test]
    fn point_mass_density_is_normalized_and_nonnegative() {
        let q = point_mass(16);
        assert!((q.coeffs()[0] - TAU0).abs() < 1e-15);
        assert!((q.integrate(-1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(q.grid_min(10_000) >= -1e-10);
    }

    #[test]
    fn point_mass_concentrates() {
        let q = point_mass(64);
        assert!(q.integrate(-0.3, 0.3).unwrap() >= 0.8);
        let left = q.integrate(-1.0, 0.0).unwrap();
        let right = q.integrate(0.0, 1.0).unwrap();
        assert!((left + right - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_density_piles_up_near_one() {
        let n = 40;
        let eps = 18.0 / n as f64;
        let m = moments_from_spectrum(&[1.0; 10], n).unwrap();
        let q = idealized_kpm(&m, &jackson_coefficients(n).unwrap()).unwrap();
        let near = q.integrate(1.0 - eps, 1.0).unwrap();
        assert!(near >= 1.0 - eps, "mass near 1 = {near}");
    }

    #[test]
    fn full_kpm_keeps_unit_mass() {
        for n in [4usize, 40, 180] {
            let m = moments_from_spectrum(&[0.3, -0.5, 0.9], n).unwrap();
            let q = full_kpm(&m, &jackson_coefficients(n).unwrap()).unwrap();
            assert!((q.coeffs()[0] - TAU0).abs() < NORMALIZATION_TOL);
            assert_eq!(q.form(), DensityForm::ShiftedRescaled);
        }
    }

    #[test]
    fn idealized_rejects_estimated_moments_and_mismatches() {
        let m = MomentVector::new(8, vec![0.0; 8], Provenance::Hutchinson, 2, 0).unwrap();
        assert!(idealized_kpm(&m, &jackson_coefficients(8).unwrap()).is_err());
        let e = moments_from_spectrum(&[0.0], 8).unwrap();
        assert!(matches!(full_kpm(&e, &jackson_coefficients(12).unwrap()), Err(KpmError::DegreeMismatch { .. })));
    }

    #[test]
    fn closed_forms_match_numerical_derivatives() {
        let m = moments_from_spectrum(&[0.3, -0.5, 0.9, 0.1], 24).unwrap();
        let q = idealized_kpm(&m, &jackson_coefficients(24).unwrap()).unwrap();
        let h = 1e-5;
        for &x in &[-0.8, -0.2, 0.05, 0.6] {
            let dcdf = (q.cdf(x + h) - q.cdf(x - h)) / (2.0 * h);
            assert!((dcdf - q.eval(x).unwrap()).abs() < 1e-5 * (1.0 + q.eval(x).unwrap().abs()));
            let dint = (q.cdf_integral(-1.0, x + h) - q.cdf_integral(-1.0, x - h)) / (2.0 * h);
            assert!((dint - q.cdf(x)).abs() < 1e-7);
            let dmom = (q.first_moment(-1.0, x + h) - q.first_moment(-1.0, x - h)) / (2.0 * h);
            assert!((dmom - x * q.eval(x).unwrap()).abs() < 1e-5 * (1.0 + q.eval(x).unwrap().abs()));
        }
        assert!((q.cdf(1.0) - 1.0).abs() < 1e-12);
        // Mean of the damped density equals the damped first moment.
        let mean = q.first_moment(-1.0, 1.0);
        let expect = jackson_coefficients(24).unwrap().ratio(1) * (0.3 - 0.5 + 0.9 + 0.1) / 4.0;
        assert!((mean - expect).abs() < 1e-12);
    }

    #[test]
    fn reflection_flips_the_density() {
        let m = moments_from_spectrum(&[0.3, 0.6], 16).unwrap();
        let q = idealized_kpm(&m, &jackson_coefficients(16).unwrap()).unwrap();
        let r = q.reflected();
        assert!(r.is_reflected());
        assert_eq!(r.reflected(), q);
        assert!((r.eval(-0.4).unwrap() - q.eval(0.4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn plot_grid_is_sorted_and_inside() {
        let q = point_mass(16);
        let pts = q.plot_points(100, 1e-4);
        assert_eq!(pts.len(), 100);
        assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(pts[0].0 > -1.0 + 9e-5 && pts[99].0 < 1.0 - 9e-5);
    }
}
