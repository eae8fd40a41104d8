//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss–Kronrod 7/15 panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` on `[a, b]` to absolute
/// tolerance `tol`. Never evaluates `f` at the endpoints.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth == 0 || (b - a) < 1e-15 {
            return val;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth - 1) + go(f, m, b, 0.5 * tol, depth - 1)
    }
    go(&f, a, b, tol, 60)
}

/// `∫_{-1}^{1} f(x) / √(1 − x²) dx` via `x = sin φ`, which removes the
/// endpoint singularity.
pub fn integrate_weighted(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let half = core::f64::consts::FRAC_PI_2;
    integrate(|phi| f(phi.sin()), -half, half, tol)
}

/// `T_k(x) = cos(k arccos x)`, independent of any recurrence.
pub fn cheb_t_trig(k: usize, x: f64) -> f64 {
    (k as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

/// Normalized `T̄_k` from the trigonometric form.
pub fn cheb_tbar_trig(k: usize, x: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let norm = if k == 0 { 1.0 / pi.sqrt() } else { (2.0 / pi).sqrt() };
    norm * cheb_t_trig(k, x)
}

/// `n` equally spaced points strictly inside `(-1, 1)`.
pub fn open_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64)
}
