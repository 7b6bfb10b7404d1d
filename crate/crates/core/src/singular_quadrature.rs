//! The angular cross section and finite-part integration against it.
//!
//! Every angular integral in the crate has the shape
//! `∫_{|θ|≤π/4} β(θ) (φ̆(θ) − φ(0)) dθ` with `φ̆` the even part of `φ`.
//! With `u = sin(θ/2)` the measure becomes `β(θ) dθ = 2 u^{-1-2s} du`, so the
//! integral equals `4 ∫_0^{sin(π/8)} u^{-1-2s} E(u) du` where
//! `E(u) = φ̆(θ) − φ(0) = O(u²)`. [`GradedIntegral`] evaluates such
//! power-weighted integrals on geometrically graded panels and closes the gap
//! at the origin with a two-term power model, so no subtraction is ever done
//! in floating point near the singular point.

use crate::error::{KacError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

/// Half-width of the angular integration range.
pub const ANGLE_MAX: f64 = PI / 4.0;

/// `sin(π/8)`, the upper limit in the half-angle variable.
pub fn half_angle_max() -> f64 {
    (PI / 8.0).sin()
}

/// Default absolute tolerance for angular integrals.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default cap on the number of graded panels.
pub const DEFAULT_MAX_LEVELS: usize = 40;

/// Values an integrand may take: real or complex.
pub trait Scalar:
    Copy + Default + Debug + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + 'static
{
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// The singular angular factor `β(θ) = |cos(θ/2)| / |sin(θ/2)|^{1+2s}` on
/// `|θ| ≤ π/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossSection {
    s: f64,
}

impl CrossSection {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(KacError::Domain(format!("singularity exponent must lie in (0, 1), got {s}")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn beta(&self, theta: f64) -> Result<f64> {
        if theta == 0.0 {
            return Err(KacError::Singularity("β is singular at θ = 0".into()));
        }
        if theta.is_nan() || theta.abs() > ANGLE_MAX {
            return Err(KacError::Domain(format!("θ = {theta} lies outside [-π/4, π/4]")));
        }
        let half = 0.5 * theta;
        Ok(half.cos().abs() / half.sin().abs().powf(1.0 + 2.0 * self.s))
    }

    /// `∫ β (φ̆ − φ(0)) dθ` to absolute accuracy `tol`.
    pub fn fp_integrate<A: AngularTest>(&self, test: &A, tol: f64) -> Result<A::Value> {
        Ok(self.fp_integrate_with(test, Tolerance::absolute(tol))?.value)
    }

    /// As [`CrossSection::fp_integrate`], with full diagnostics.
    pub fn fp_integrate_with<A: AngularTest>(&self, test: &A, tol: Tolerance) -> Result<Estimate<A::Value>> {
        let scaled = Tolerance { abs: tol.abs / 4.0, ..tol };
        let est = GradedIntegral::new(half_angle_max(), -1.0 - 2.0 * self.s, 2.0, 2.0)
            .integrate(|u| test.excess(HalfAngle::new(u)), scaled)?;
        Ok(est.scaled(4.0))
    }
}

/// `β(θ)` for the given exponent.
pub fn beta_eval(theta: f64, s: f64) -> Result<f64> {
    CrossSection::new(s)?.beta(theta)
}

/// `∫_{|θ|≤π/4} β(θ)(φ̆(θ) − φ(0)) dθ` to absolute accuracy `tol`.
pub fn fp_integrate<A: AngularTest>(test: &A, s: f64, tol: f64) -> Result<A::Value> {
    CrossSection::new(s)?.fp_integrate(test, tol)
}

/// A non-negative angle represented by `u = sin(θ/2)`, with the trigonometric
/// quantities integrands need, in cancellation-free form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfAngle {
    u: f64,
}

impl HalfAngle {
    pub fn new(u: f64) -> Self {
        Self { u }
    }

    pub fn from_theta(theta: f64) -> Self {
        Self { u: (0.5 * theta.abs()).sin() }
    }

    /// `sin(θ/2)`.
    pub fn u(&self) -> f64 {
        self.u
    }

    /// `sin²(θ/2)`.
    pub fn t(&self) -> f64 {
        self.u * self.u
    }

    pub fn theta(&self) -> f64 {
        2.0 * self.u.asin()
    }

    /// `cos²(θ/2)`.
    pub fn cos_half_sq(&self) -> f64 {
        1.0 - self.t()
    }

    /// `tan²(θ/2)`.
    pub fn tan_half_sq(&self) -> f64 {
        self.t() / (1.0 - self.t())
    }

    pub fn cos_theta(&self) -> f64 {
        1.0 - 2.0 * self.t()
    }

    pub fn sin_theta(&self) -> f64 {
        2.0 * self.u * (1.0 - self.t()).sqrt()
    }

    /// `1 − cos θ`, exact.
    pub fn one_minus_cos(&self) -> f64 {
        2.0 * self.t()
    }

    /// `ln cos θ`.
    pub fn ln_cos_theta(&self) -> f64 {
        (-2.0 * self.t()).ln_1p()
    }
}

/// An even test function on `[-π/4, π/4]`, seen through its excess over the
/// value at the origin.
pub trait AngularTest {
    type Value: Scalar;

    /// `φ̆(θ) − φ(0)`. Implementations should evaluate it without forming the
    /// difference explicitly when `θ` is small.
    fn excess(&self, angle: HalfAngle) -> Self::Value;
}

/// Adapts a closure that already computes the excess.
pub struct Excess<F>(pub F);

impl<T: Scalar, F: Fn(HalfAngle) -> T> AngularTest for Excess<F> {
    type Value = T;

    fn excess(&self, angle: HalfAngle) -> T {
        (self.0)(angle)
    }
}

/// Builds the test from a full (not necessarily even) `φ`: odd parts cancel
/// exactly and `φ(0)` is subtracted. Accuracy near the origin is limited by
/// that subtraction, which the graded scheme keeps away from tiny angles.
pub struct EvenPart<F, T> {
    phi: F,
    at_zero: T,
}

impl<T: Scalar, F: Fn(f64) -> T> EvenPart<F, T> {
    pub fn new(phi: F) -> Self {
        let at_zero = phi(0.0);
        Self { phi, at_zero }
    }

    /// Supplies `φ(0)` explicitly.
    pub fn with_origin(phi: F, at_zero: T) -> Self {
        Self { phi, at_zero }
    }
}

impl<T: Scalar, F: Fn(f64) -> T> AngularTest for EvenPart<F, T> {
    type Value = T;

    fn excess(&self, angle: HalfAngle) -> T {
        let th = angle.theta();
        ((self.phi)(th) + (self.phi)(-th)) * 0.5 - self.at_zero
    }
}

/// Combined absolute/relative accuracy request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_levels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::absolute(DEFAULT_TOL)
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0, max_levels: DEFAULT_MAX_LEVELS }
    }

    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel, max_levels: DEFAULT_MAX_LEVELS }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_levels: DEFAULT_MAX_LEVELS }
    }

    pub fn bound(&self, magnitude: f64) -> f64 {
        self.abs.max(self.rel * magnitude)
    }
}

/// Value plus diagnostics from a graded integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub levels: usize,
    pub evaluations: usize,
}

impl<T: Scalar> Estimate<T> {
    fn scaled(self, c: f64) -> Self {
        Self { value: self.value * c, error: self.error * c.abs(), ..self }
    }
}

/// `∫_0^X x^p E(x) dx` for an `E` with `E(x) = x^m (e₀ + e₁ x^r + …)` near 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradedIntegral {
    upper: f64,
    weight_exponent: f64,
    contact_order: f64,
    expansion_step: f64,
}

impl GradedIntegral {
    /// `upper` = X, `weight_exponent` = p, `contact_order` = m,
    /// `expansion_step` = r. Requires `p + m > −1`.
    pub fn new(upper: f64, weight_exponent: f64, contact_order: f64, expansion_step: f64) -> Self {
        assert!(upper > 0.0, "upper limit must be positive");
        assert!(weight_exponent + contact_order > -1.0, "integrand is not integrable at 0");
        assert!(expansion_step > 0.0, "expansion step must be positive");
        Self { upper, weight_exponent, contact_order, expansion_step }
    }

    pub fn integrate<T: Scalar>(&self, excess: impl Fn(f64) -> T, tol: Tolerance) -> Result<Estimate<T>> {
        let m = self.contact_order;
        self.integrate_reduced(|x| excess(x) * x.powf(-m), tol)
    }

    /// As [`GradedIntegral::integrate`], but the caller supplies the reduced
    /// function `G(x) = E(x)/x^m` directly, which avoids underflow when `m`
    /// is large.
    pub fn integrate_reduced<T: Scalar>(&self, reduced: impl Fn(f64) -> T, tol: Tolerance) -> Result<Estimate<T>> {
        let p = self.weight_exponent;
        let m = self.contact_order;
        let r = self.expansion_step;
        let a = p + m + 1.0;
        let f = |x: f64| reduced(x) * x.powf(p + m);

        let mut panels = Compensated::<T>::default();
        let mut panel_err = 0.0;
        let mut evaluations = 0;
        let mut previous: Option<T> = None;
        let mut settled = 0;
        let mut best: Option<(f64, T, usize)> = None;
        let mut hi = self.upper;
        let mut samples = [reduced(0.5 * hi), reduced(0.25 * hi), reduced(0.125 * hi)];
        let vanishing = |g: &[T; 3]| g.iter().all(|v| v.magnitude() == 0.0);
        let identically_zero = vanishing(&samples);
        evaluations += 3;
        for level in 0..tol.max_levels {
            let lo = 0.5 * hi;
            let rough = gauss_kronrod(&f, lo, hi);
            let scale = (panels.sum() + rough.value).magnitude();
            let panel = adaptive(&f, lo, hi, rough, tol.bound(scale) / 16.0, 64);
            evaluations += panel.evaluations;
            panels.add(panel.value);
            panel_err += panel.error;

            // Quadratic model in y = x^r of E(x)/x^m through x = lo, lo/2, lo/4,
            // integrated exactly against x^{p+m} on [0, lo].
            let ys = [lo.powf(r), (0.5 * lo).powf(r), (0.25 * lo).powf(r)];
            let d01 = (samples[0] - samples[1]) * (1.0 / (ys[0] - ys[1]));
            let d12 = (samples[1] - samples[2]) * (1.0 / (ys[1] - ys[2]));
            let e2 = (d01 - d12) * (1.0 / (ys[0] - ys[2]));
            let e1 = d01 - e2 * (ys[0] + ys[1]);
            let e0 = samples[0] - e1 * ys[0] - e2 * ys[0] * ys[0];
            let la = lo.powf(a);
            let tail = e0 * (la / a) + e1 * (la * ys[0] / (a + r)) + e2 * (la * ys[0] * ys[0] / (a + 2.0 * r));
            let total = panels.sum() + tail;
            let bound = tol.bound(total.magnitude());
            // The excess collapsing to exact zero (or overflowing) deep in the
            // graded region is cancellation, not information.
            if (!identically_zero && vanishing(&samples)) || !total.magnitude().is_finite() {
                // A true underflow still leaves a consistent last level.
                if let Some(prev) = previous {
                    let diff = (total - prev).magnitude();
                    if diff <= bound && best.map_or(true, |(d, _, _)| diff < d) {
                        best = Some((diff, total, level));
                    }
                }
                break;
            }

            if let Some(prev) = previous {
                let diff = (total - prev).magnitude();
                if diff <= bound {
                    settled += 1;
                    if settled >= 2 && level >= 3 {
                        return Ok(Estimate { value: total, error: diff + panel_err, levels: level + 1, evaluations });
                    }
                } else {
                    settled = 0;
                }
                if best.map_or(true, |(d, _, _)| diff < d) {
                    best = Some((diff, total, level));
                }
            }
            // Once an acceptable level has been seen, persistent disagreement
            // afterwards means rounding noise in the excess dominates.
            if let Some((d, value, at)) = best {
                if d <= tol.bound(value.magnitude()) && level >= at + 3 {
                    return Ok(Estimate { value, error: d + panel_err, levels: at + 1, evaluations });
                }
            }
            previous = Some(total);
            hi = lo;
            samples = [samples[1], samples[2], reduced(0.125 * hi)];
            evaluations += 1;
        }
        if let Some((d, value, at)) = best {
            if d <= tol.bound(value.magnitude()) {
                return Ok(Estimate { value, error: d + panel_err, levels: at + 1, evaluations });
            }
        }
        Err(KacError::Accuracy(format!(
            "graded quadrature did not reach tolerance (abs {:.1e}, rel {:.1e}) within {} levels",
            tol.abs, tol.rel, tol.max_levels
        )))
    }
}

/// Neumaier summation.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> Compensated<T> {
    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.magnitude() >= x.magnitude() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn sum(&self) -> T {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel<T> {
    value: T,
    error: f64,
    evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod rule with the embedded 7-point Gauss rule; error estimate
/// as in QUADPACK.
fn gauss_kronrod<T: Scalar>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> Panel<T> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut values = [T::default(); 15];
    values[7] = f(centre);
    for j in 0..7 {
        let dx = half * XGK[j];
        values[j] = f(centre - dx);
        values[14 - j] = f(centre + dx);
    }
    let mut kronrod = values[7] * WGK[7];
    let mut gauss = values[7] * WG[3];
    let mut abs_k = values[7].magnitude() * WGK[7];
    for j in 0..7 {
        let pair = values[j] + values[14 - j];
        kronrod = kronrod + pair * WGK[j];
        abs_k += (values[j].magnitude() + values[14 - j].magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = (values[7] - mean).magnitude() * WGK[7];
    for j in 0..7 {
        asc += ((values[j] - mean).magnitude() + (values[14 - j] - mean).magnitude()) * WGK[j];
    }
    let (resabs, resasc) = (abs_k * half, asc * half);
    let mut error = ((kronrod - gauss) * half).magnitude();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Panel { value: kronrod * half, error, evaluations: 15 }
}

/// Global adaptive bisection: the worst sub-panel is split until the summed
/// error meets `tol`, hits the rounding floor, or `max_splits` is exhausted.
fn adaptive<T: Scalar>(f: &impl Fn(f64) -> T, a: f64, b: f64, first: Panel<T>, tol: f64, max_splits: usize) -> Panel<T> {
    let floor = |p: &Panel<T>| 100.0 * f64::EPSILON * p.value.magnitude();
    if first.error <= tol.max(floor(&first)) {
        return first;
    }
    let mut parts = vec![(a, b, first)];
    let mut evaluations = first.evaluations;
    for _ in 0..max_splits {
        let total_err: f64 = parts.iter().map(|p| p.2.error).sum();
        let value = parts.iter().fold(T::default(), |acc, p| acc + p.2.value);
        if total_err <= tol.max(100.0 * f64::EPSILON * value.magnitude()) {
            break;
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].2.error.total_cmp(&parts[j].2.error))
            .expect("non-empty");
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let left = gauss_kronrod(f, lo, mid);
        let right = gauss_kronrod(f, mid, hi);
        evaluations += 30;
        parts.push((lo, mid, left));
        parts.push((mid, hi, right));
    }
    let mut sum = Compensated::<T>::default();
    parts.iter().for_each(|p| sum.add(p.2.value));
    Panel { value: sum.sum(), error: parts.iter().map(|p| p.2.error).sum(), evaluations }
}

/// Plain adaptive Gauss–Kronrod on a regular interval.
pub fn integrate_regular<T: Scalar>(f: impl Fn(f64) -> T, a: f64, b: f64, tol: f64) -> T {
    let first = gauss_kronrod(&f, a, b);
    adaptive(&f, a, b, first, tol, 200).value
}
