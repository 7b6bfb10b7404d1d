//! Fourier-side collision operators.
//!
//! With `f̂(ξ) = ∫ f(v) e^{−ivξ} dv`, the Kac operator acts as
//! `K̂(g, f)(ξ) = ∫ β(θ)[ĝ(ξ sin θ) f̂(ξ cos θ) − ĝ(0) f̂(ξ)] dθ`, where only the
//! even part of `ĝ` survives the symmetric angular integral.
//!
//! The linearized operator is recovered in the Hermite basis without any
//! velocity-space division by the Maxwellian: since
//! `μ^{1/2} ψ_n = He_n μ / √(n!)` has transform `(−iξ)^n e^{−ξ²/2} / √(n!)`,
//! the function `e^{ξ²/2} R̂(ξ)` is a polynomial whose Taylor coefficients
//! give the output coefficients. They are read off by a discrete Cauchy
//! integral on a circle in the complex plane.

use crate::core_math::{gamma, hermite_psi_into, GridFunction, HermiteCoeffs};
use crate::error::{KacError, Result};
use crate::singular_quadrature::{CrossSection, Excess, GradedIntegral, HalfAngle, Tolerance};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A Fourier transform that can be evaluated pointwise.
pub trait FourierProfile: Sync {
    fn eval(&self, xi: Complex64) -> Result<Complex64>;

    fn eval_real(&self, xi: f64) -> Result<Complex64> {
        self.eval(Complex64::new(xi, 0.0))
    }

    /// `f̂(ξ + δ) − f̂(ξ)`; implementations should avoid the subtraction.
    fn increment(&self, xi: Complex64, delta: Complex64) -> Result<Complex64> {
        Ok(self.eval(xi + delta)? - self.eval(xi)?)
    }

    /// `(f̂(x) + f̂(−x))/2 − f̂(0)`; implementations should avoid the
    /// subtraction.
    fn even_increment(&self, x: Complex64) -> Result<Complex64> {
        Ok(0.5 * (self.eval(x)? + self.eval(-x)?) - self.eval(ZERO)?)
    }

    /// Absolute accuracy of the values themselves (0 when exact up to
    /// rounding); angular integrals are not resolved below it.
    fn value_floor(&self) -> f64 {
        0.0
    }
}

/// A profile given in closed form, valid on all of ℂ.
pub struct AnalyticProfile<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync> FourierProfile for AnalyticProfile<F> {
    fn eval(&self, xi: Complex64) -> Result<Complex64> {
        Ok((self.0)(xi))
    }
}

/// `e^z − 1` without cancellation for small `|z|`.
pub fn complex_expm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// `μ̂(ξ) = e^{−ξ²/2}` (any dimension, as a radial profile).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Maxwellian;

impl FourierProfile for Maxwellian {
    fn eval(&self, xi: Complex64) -> Result<Complex64> {
        Ok((-0.5 * xi * xi).exp())
    }

    fn increment(&self, xi: Complex64, delta: Complex64) -> Result<Complex64> {
        Ok((-0.5 * xi * xi).exp() * complex_expm1(-(xi + 0.5 * delta) * delta))
    }

    fn even_increment(&self, x: Complex64) -> Result<Complex64> {
        Ok(complex_expm1(-0.5 * x * x))
    }
}

pub fn maxwellian_profile() -> Maxwellian {
    Maxwellian
}

/// The trapezoidal transform of velocity samples, evaluated exactly at any
/// complex frequency.
pub struct TransformedProfile {
    f: GridFunction<Complex64>,
}

impl TransformedProfile {
    pub fn new(f: GridFunction<Complex64>) -> Result<Self> {
        let peak = f.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let n = f.len();
        let edge = f.values()[0].norm().max(f.values()[n - 1].norm());
        if peak > 0.0 && edge > 1e-13 * peak {
            return Err(KacError::Accuracy(format!("velocity samples not decayed at the edge ({:.2e})", edge / peak)));
        }
        Ok(Self { f })
    }

    pub fn samples(&self) -> &GridFunction<Complex64> {
        &self.f
    }
}

impl FourierProfile for TransformedProfile {
    fn eval(&self, xi: Complex64) -> Result<Complex64> {
        Ok(self.f.fourier_at(xi))
    }

    fn increment(&self, xi: Complex64, delta: Complex64) -> Result<Complex64> {
        let minus_i = Complex64::new(0.0, -1.0);
        let sum: Complex64 = (0..self.f.len())
            .map(|j| {
                let v = self.f.point(j);
                self.f.values()[j] * (minus_i * v * xi).exp() * complex_expm1(minus_i * v * delta)
            })
            .sum();
        Ok(sum * self.f.spacing())
    }

    fn even_increment(&self, x: Complex64) -> Result<Complex64> {
        // cos(vx) − 1 = −2 sin²(vx/2).
        let sum: Complex64 = (0..self.f.len())
            .map(|j| {
                let half = (0.5 * self.f.point(j) * x).sin();
                self.f.values()[j] * half * half
            })
            .sum();
        Ok(-2.0 * sum * self.f.spacing())
    }
}

/// Odd number of equispaced frequencies on `[−X, X]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiGrid {
    half_width: f64,
    points: usize,
}

impl XiGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) || points < 5 || points % 2 == 0 {
            return Err(KacError::Domain(format!(
                "frequency grid needs X > 0 and an odd number ≥ 5 of points, got X = {half_width}, n = {points}"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn xi(&self, j: usize) -> f64 {
        (j as f64 - ((self.points - 1) / 2) as f64) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.xi(j)).collect()
    }
}

/// Samples on an [`XiGrid`], interpolated by a natural cubic spline.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile {
    grid: XiGrid,
    values: Vec<Complex64>,
    curvature: Vec<Complex64>,
}

impl SampledProfile {
    pub fn new(grid: XiGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(KacError::Domain(format!("expected {} samples, got {}", grid.points, values.len())));
        }
        let curvature = natural_spline_curvature(&values, grid.spacing());
        Ok(Self { grid, values, curvature })
    }

    pub fn from_profile(profile: &dyn FourierProfile, grid: XiGrid) -> Result<Self> {
        let values = grid.nodes().into_iter().map(|x| profile.eval_real(x)).collect::<Result<_>>()?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &XiGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `max_j |f(ξ_j) − f(−ξ_j)|`.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n).map(|j| (self.values[j] - self.values[n - 1 - j]).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Second derivatives of the natural cubic spline through equispaced data.
fn natural_spline_curvature(y: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = y.len();
    let mut m = vec![ZERO; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior system (1, 4, 1) m = 6Δ²y/h².
    let inner = n - 2;
    let mut diag = vec![4.0; inner];
    let mut rhs: Vec<Complex64> = (1..n - 1).map(|i| (y[i + 1] - 2.0 * y[i] + y[i - 1]) * (6.0 / (h * h))).collect();
    for i in 1..inner {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        let prev = rhs[i - 1];
        rhs[i] -= prev * w;
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for i in (0..inner - 1).rev() {
        m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    }
    m
}

impl FourierProfile for SampledProfile {
    fn eval(&self, xi: Complex64) -> Result<Complex64> {
        let x = xi.re;
        let g = &self.grid;
        if xi.im != 0.0 || x.abs() > g.half_width * (1.0 + 1e-12) {
            return Err(KacError::Domain(format!(
                "sampled profile cannot be evaluated at {xi} (real range ±{})",
                g.half_width
            )));
        }
        let h = g.spacing();
        let pos = ((x + g.half_width) / h).clamp(0.0, (g.points - 1) as f64);
        let i = (pos.floor() as usize).min(g.points - 2);
        let t = pos - i as f64;
        let (a, b) = (1.0 - t, t);
        let (ya, yb, ma, mb) = (self.values[i], self.values[i + 1], self.curvature[i], self.curvature[i + 1]);
        Ok(ya * a + yb * b + (ma * (a * a * a - a) + mb * (b * b * b - b)) * (h * h / 6.0))
    }

    /// Spline curvature is only second-order accurate, and the angular
    /// integrals see exactly that curvature.
    fn value_floor(&self) -> f64 {
        SPLINE_RESOLUTION * self.max_abs()
    }
}

pub const SPLINE_RESOLUTION: f64 = 1e-8;

/// Accuracy request for the angular integrals; the absolute part is scaled
/// by the size of `ĝ(ξ sin θ) f̂(ξ cos θ)`.
/// The even-part excess carries rounding noise of that size, so this is
/// also what is attainable.
pub fn default_tolerance() -> Tolerance {
    Tolerance::new(1e-11, 1e-10)
}

/// `K̂(g, f)` at one, possibly complex, frequency.
pub fn kac_fourier_at(
    g: &dyn FourierProfile,
    f: &dyn FourierProfile,
    cs: &CrossSection,
    xi: Complex64,
    tol: Tolerance,
) -> Result<Complex64> {
    let failure = RefCell::new(None);
    let record = |r: Result<Complex64>| {
        r.unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            ZERO
        })
    };
    let (g0, f_xi) = (g.eval(ZERO)?, f.eval(xi)?);
    let origin = g0 * f_xi;
    let phi = |theta: f64| record(g.eval(xi * theta.sin())) * record(f.eval(xi * theta.cos()));
    let scale = [PI / 16.0, PI / 8.0, PI / 4.0].iter().map(|&t| phi(t).norm()).fold(origin.norm(), f64::max);
    // Even part of ĝ(ξ sin θ) f̂(ξ cos θ) minus ĝ(0) f̂(ξ), from increments:
    // [ĝ]_even(ξ sin θ)·f̂(ξ cos θ) + ĝ(0)[f̂(ξ cos θ) − f̂(ξ)].
    let excess = |a: HalfAngle| {
        let df = record(f.increment(xi, -xi * a.one_minus_cos()));
        record(g.even_increment(xi * a.sin_theta())) * (f_xi + df) + g0 * df
    };
    let (gf, ff) = (g.value_floor(), f.value_floor());
    let floor = gf * f.eval(xi)?.norm() + ff * g.eval(ZERO)?.norm() + gf * ff;
    let tol = Tolerance { abs: tol.abs * scale.max(f64::MIN_POSITIVE) + floor, ..tol };
    let value = cs.fp_integrate_with(&Excess(excess), tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(value?.value)
}

/// `K̂(g, f)` sampled on `grid`.
pub fn kac_fourier_apply(g: &dyn FourierProfile, f: &dyn FourierProfile, s: f64, grid: XiGrid) -> Result<SampledProfile> {
    let cs = CrossSection::new(s)?;
    let tol = default_tolerance();
    let values = grid
        .nodes()
        .into_par_iter()
        .map(|x| kac_fourier_at(g, f, &cs, Complex64::new(x, 0.0), tol))
        .collect::<Result<_>>()?;
    SampledProfile::new(grid, values)
}

fn check_even(p: &dyn FourierProfile, grid: &XiGrid, label: &str) -> Result<()> {
    let mut peak = 0.0f64;
    let mut defect = 0.0f64;
    for x in grid.nodes() {
        let (a, b) = (p.eval_real(x)?, p.eval_real(-x)?);
        peak = peak.max(a.norm());
        defect = defect.max((a - b).norm());
    }
    if defect > 1e-12 * peak.max(f64::MIN_POSITIVE) {
        return Err(KacError::Domain(format!("{label} is not an even radial profile (defect {defect:.2e})")));
    }
    Ok(())
}

/// Radial reduction of the `d`-dimensional operator: the same angular formula
/// applied to even profiles in `|ξ|`.
pub fn boltzmann_radial_fourier_apply(
    g: &dyn FourierProfile,
    f: &dyn FourierProfile,
    s: f64,
    d: usize,
    grid: XiGrid,
) -> Result<SampledProfile> {
    if d == 0 {
        return Err(KacError::Domain("dimension must be ≥ 1".into()));
    }
    check_even(g, &grid, "g")?;
    check_even(f, &grid, "f")?;
    kac_fourier_apply(g, f, s, grid)
}

/// `−[K̂(μ, F̂) + K̂(F̂, μ)]` for the transform `F̂` of `μ^{1/2} h` (radial case).
pub fn linearized_radial_fourier_apply(
    fluctuation: &dyn FourierProfile,
    s: f64,
    d: usize,
    grid: XiGrid,
) -> Result<SampledProfile> {
    let mu = maxwellian_profile();
    let a = boltzmann_radial_fourier_apply(&mu, fluctuation, s, d, grid)?;
    let b = boltzmann_radial_fourier_apply(fluctuation, &mu, s, d, grid)?;
    let values = a.values.iter().zip(&b.values).map(|(x, y)| -(x + y)).collect();
    SampledProfile::new(grid, values)
}

/// Largest basis index accepted by [`linearized_kac_apply`].
pub const LINEARIZED_MAX_INDEX: usize = 30;

/// Discretization of the linearized application.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearizedOptions {
    /// Velocity half-width of the grid carrying `μ^{1/2} h`.
    pub half_width: f64,
    /// Odd number of velocity points.
    pub points: usize,
    /// Radius of the coefficient-extraction circle.
    pub radius: f64,
    /// Points on that circle (power of two, above the basis size).
    pub circle_points: usize,
    pub tol: Tolerance,
}

impl Default for LinearizedOptions {
    fn default() -> Self {
        Self { half_width: 12.0, points: 121, radius: 3.0, circle_points: 64, tol: default_tolerance() }
    }
}

/// `𝒦h = −μ^{−1/2}[K(μ, μ^{1/2}h) + K(μ^{1/2}h, μ)]` in the Hermite basis.
pub fn linearized_kac_apply(h: &HermiteCoeffs, s: f64) -> Result<HermiteCoeffs> {
    linearized_kac_apply_with(h, s, &LinearizedOptions::default())
}

pub fn linearized_kac_apply_with(h: &HermiteCoeffs, s: f64, opts: &LinearizedOptions) -> Result<HermiteCoeffs> {
    let k_max = h.max_index();
    if k_max > LINEARIZED_MAX_INDEX {
        return Err(KacError::Capability(format!("linearized application supports K ≤ {LINEARIZED_MAX_INDEX}, got {k_max}")));
    }
    let m = opts.circle_points;
    if !m.is_power_of_two() || m <= 2 * (k_max + 1) {
        return Err(KacError::Domain(format!("circle points {m} must be a power of two above 2(K+1)")));
    }
    let cs = CrossSection::new(s)?;
    let coeffs = h.as_slice().to_vec();
    let fluct = GridFunction::from_fn(opts.half_width, opts.points, |v| {
        let mut psi = vec![0.0; k_max + 1];
        hermite_psi_into(v, &mut psi);
        psi[0] * coeffs.iter().zip(&psi).map(|(c, p)| c * p).sum::<Complex64>()
    })?;
    let f_hat = TransformedProfile::new(fluct)?;
    let mu = maxwellian_profile();

    let mut samples = (0..m)
        .into_par_iter()
        .map(|j| {
            let xi = Complex64::from_polar(opts.radius, 2.0 * PI * j as f64 / m as f64);
            let r = kac_fourier_at(&mu, &f_hat, &cs, xi, opts.tol)? + kac_fourier_at(&f_hat, &mu, &cs, xi, opts.tol)?;
            Ok(r * (0.5 * xi * xi).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    FftPlanner::new().plan_fft_forward(m).process(&mut samples);

    // out_n = −iⁿ √(n!) q_n with q_n the Taylor coefficients.
    let coefficient = |n: usize| -> Result<Complex64> {
        let q = samples[n] / (m as f64 * opts.radius.powi(n as i32));
        Ok(-Complex64::i().powu(n as u32) * gamma(n as f64 + 1.0)?.sqrt() * q)
    };
    Ok(HermiteCoeffs::new((0..=k_max).map(coefficient).collect::<Result<_>>()?))
}

/// Direct quadrature of the two-dimensional Fourier collision formula over
/// the unit circle of post-collisional directions, for radial profiles `ĝ`,
/// `f̂` (functions of `|ξ|`). The angular kernel is `b(cos φ) = β(φ/2)/2` on
/// `cos φ ≥ 0`.
pub fn sphere_fourier_d2(g: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64, s: f64, xi_norm: f64, tol: f64) -> Result<f64> {
    let cs = CrossSection::new(s)?;
    let xi = [xi_norm, 0.0];
    let norm = |a: [f64; 2]| a[0].hypot(a[1]);
    let branch = |phi: f64| {
        let sigma = [phi.cos(), phi.sin()];
        let plus = [0.5 * (xi[0] + xi_norm * sigma[0]), 0.5 * (xi[1] + xi_norm * sigma[1])];
        let minus = [0.5 * (xi[0] - xi_norm * sigma[0]), 0.5 * (xi[1] - xi_norm * sigma[1])];
        g(norm(minus)) * f(norm(plus))
    };
    let origin = g(0.0) * f(xi_norm);
    let exponent = -1.0 - 2.0 * cs.s();
    let excess = |phi: f64| {
        let kernel = 0.5 * cs.beta(0.5 * phi).unwrap_or(0.0) * phi.powf(-exponent);
        kernel * (branch(phi) + branch(-phi) - 2.0 * origin)
    };
    Ok(GradedIntegral::new(0.5 * PI, exponent, 2.0, 2.0).integrate(excess, Tolerance::absolute(tol))?.value)
}
