//! Special functions, the scaled Hermite basis and the Fourier convention
//! shared by every other module.
//!
//! Fourier transforms use `f̂(ξ) = ∫ f(v) e^{-ivξ} dv` with no prefactor; the
//! inverse carries `1/(2π)`. The Hermite functions `ψ_n` are the normalized
//! eigenfunctions of `-d²/dx² + x²/4`, with eigenvalues `n + 1/2`.

use crate::error::{KacError, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Largest Hermite index accepted by the evaluators.
pub const HERMITE_INDEX_LIMIT: usize = 4096;
/// Basis size used when the caller does not specify one.
pub const DEFAULT_MAX_INDEX: usize = 128;

const TAIL_MASS_TOL: f64 = 1e-12;
const EDGE_TOL: f64 = 1e-10;

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(KacError::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x.fract() == 0.0 && x <= 171.0 {
        return Ok((1..x as u32).fold(1.0, |acc, k| acc * k as f64));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(KacError::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Binomial coefficient as a float (exact below 2^53).
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// The orthonormal family `ψ_0 .. ψ_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HermiteBasis {
    max_index: usize,
}

impl Default for HermiteBasis {
    fn default() -> Self {
        Self { max_index: DEFAULT_MAX_INDEX }
    }
}

impl HermiteBasis {
    pub fn new(max_index: usize) -> Result<Self> {
        if max_index > HERMITE_INDEX_LIMIT {
            return Err(KacError::Capability(format!(
                "Hermite index {max_index} exceeds the supported limit {HERMITE_INDEX_LIMIT}"
            )));
        }
        Ok(Self { max_index })
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Number of basis functions, `N + 1`.
    pub fn len(&self) -> usize {
        self.max_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[ψ_0(x), .., ψ_N(x)]`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        hermite_psi_into(x, &mut out);
        out
    }

    /// Classical turning point `2√(N + 1/2)` of the highest mode.
    pub fn turning_point(&self) -> f64 {
        2.0 * (self.max_index as f64 + 0.5).sqrt()
    }

    /// Mass of `ψ_N` outside `[-L, L]`.
    pub fn tail_mass(&self, half_width: f64) -> f64 {
        let step = 0.02;
        let mut buf = vec![0.0; self.len()];
        let mut mass = 0.0;
        let mut x = half_width + 0.5 * step;
        while x < half_width + 40.0 {
            hermite_psi_into(x, &mut buf);
            let v = buf[self.max_index];
            mass += v * v * step;
            x += step;
        }
        2.0 * mass
    }

    /// Errors unless a uniform grid of spacing `h` on `[-L, L]` resolves
    /// every product `ψ_m ψ_n` with `m, n ≤ N`.
    pub fn check_grid(&self, half_width: f64, spacing: f64) -> Result<()> {
        let nyquist = PI / spacing;
        let needed = self.turning_point() + 6.0;
        if nyquist < needed {
            return Err(KacError::Accuracy(format!(
                "grid spacing {spacing:.4} under-resolves ψ_{} (Nyquist {nyquist:.2} < {needed:.2})",
                self.max_index
            )));
        }
        let tail = self.tail_mass(half_width);
        if tail > TAIL_MASS_TOL {
            return Err(KacError::Accuracy(format!(
                "half-width {half_width} truncates ψ_{}: tail mass {tail:.3e} > {TAIL_MASS_TOL:.0e}",
                self.max_index
            )));
        }
        Ok(())
    }

    /// Smallest symmetric grid (starting from half-width 18) that passes
    /// [`HermiteBasis::check_grid`]. Returns `(half_width, points)`.
    pub fn default_grid(&self) -> (f64, usize) {
        let mut half_width = 18.0;
        while self.tail_mass(half_width) > TAIL_MASS_TOL {
            half_width += 2.0;
        }
        let max_spacing = PI / (self.turning_point() + 6.0);
        let intervals = (2.0 * half_width / max_spacing).ceil() as usize;
        let intervals = intervals + intervals % 2;
        (half_width, intervals + 1)
    }
}

/// `ψ_n(x)`, by the normalized three-term recurrence.
pub fn hermite_psi(n: usize, x: f64) -> Result<f64> {
    if n > HERMITE_INDEX_LIMIT {
        return Err(KacError::Capability(format!(
            "Hermite index {n} exceeds the supported limit {HERMITE_INDEX_LIMIT}"
        )));
    }
    if !x.is_finite() {
        return Err(KacError::Domain(format!("hermite_psi needs finite x, got {x}")));
    }
    let mut out = vec![0.0; n + 1];
    hermite_psi_into(x, &mut out);
    Ok(out[n])
}

/// Fills `out[k] = ψ_k(x)` for `k < out.len()`.
///
/// `ψ_{k+1} = x ψ_k/√(k+1) − √(k/(k+1)) ψ_{k−1}` is run on rescaled values so
/// that neither the Gaussian prefactor nor the polynomial growth overflows.
pub fn hermite_psi_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    const BIG: f64 = 1e150;
    let mut log_scale = -0.25 * x * x - 0.25 * (2.0 * PI).ln();
    let mut factor = log_scale.exp();
    let (mut prev, mut cur) = (0.0_f64, 1.0_f64);
    out[0] = factor;
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = x * cur / (kf + 1.0).sqrt() - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
            factor = log_scale.exp();
        }
        out[k + 1] = cur * factor;
    }
}

/// Samples on the symmetric grid `x_j = -L + j h`, `j = 0..n-1`, `n` odd,
/// so that `x = 0` is a node and reflection is exact on indices.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    half_width: f64,
    values: Vec<T>,
}

impl<T: Copy> GridFunction<T> {
    pub fn new(half_width: f64, values: Vec<T>) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(KacError::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        if values.len() < 3 || values.len() % 2 == 0 {
            return Err(KacError::Domain(format!(
                "symmetric grid needs an odd number (≥ 3) of points, got {}",
                values.len()
            )));
        }
        Ok(Self { half_width, values })
    }

    pub fn from_fn(half_width: f64, points: usize, f: impl Fn(f64) -> T) -> Result<Self> {
        let h = 2.0 * half_width / (points.max(2) - 1) as f64;
        let c = (points.max(2) - 1) / 2;
        let values = (0..points).map(|j| f((j as f64 - c as f64) * h)).collect();
        Self::new(half_width, values)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.values.len() - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        let c = (self.values.len() - 1) / 2;
        (j as f64 - c as f64) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Same grid, values mapped pointwise.
    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> GridFunction<U> {
        GridFunction { half_width: self.half_width, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `x ↦ f(-x)`, exact on indices.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { half_width: self.half_width, values }
    }
}

impl<T: Copy + Into<Complex64>> GridFunction<T> {
    /// Trapezoidal `∫ f(v) e^{-ivξ} dv` at one (possibly complex) frequency.
    pub fn fourier_at(&self, xi: Complex64) -> Complex64 {
        let h = self.spacing();
        let c = (self.len() - 1) / 2;
        let step = (Complex64::new(0.0, -h) * xi).exp();
        let back = step.inv();
        let mut sum: Complex64 = self.values[c].into();
        let (mut up, mut down) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for k in 1..=c {
            up *= step;
            down *= back;
            sum += self.values[c + k].into() * up + self.values[c - k].into() * down;
        }
        sum * h
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().map(|&v| v.into().norm()).fold(0.0, f64::max)
    }

    fn edge_abs(&self) -> f64 {
        let n = self.values.len();
        let into = |j: usize| -> f64 { self.values[j].into().norm() };
        into(0).max(into(n - 1)).max(into(1)).max(into(n - 2))
    }
}

fn check_edges<T: Copy + Into<Complex64>>(f: &GridFunction<T>, what: &str) -> Result<()> {
    let peak = f.max_abs();
    let edge = f.edge_abs();
    if peak > 0.0 && edge > EDGE_TOL * peak {
        return Err(KacError::Accuracy(format!(
            "{what} does not decay on the grid: edge/peak = {:.3e} > {EDGE_TOL:.0e}",
            edge / peak
        )));
    }
    Ok(())
}

/// Discrete `∑_j f_j e^{∓2πi(j−c)(k−c)/n}` for a centred index `c`.
fn centred_dft(values: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = values.len() as i64;
    let c = (n - 1) / 2;
    let sign = if inverse { 1.0 } else { -1.0 };
    // Reduce phases modulo n in integers so large grids keep full accuracy.
    let twiddle = |m: i64| Complex64::from_polar(1.0, -sign * 2.0 * PI * m.rem_euclid(n) as f64 / n as f64);
    let mut buf: Vec<Complex64> = values.iter().enumerate().map(|(j, &v)| v * twiddle(c * j as i64)).collect();
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n as usize) } else { planner.plan_fft_forward(n as usize) };
    fft.process(&mut buf);
    buf.iter().enumerate().map(|(k, &v)| v * twiddle(c * (k as i64 - c))).collect()
}

/// `f̂` on the dual symmetric grid with spacing `2π/(n h)`.
///
/// The discrete sum is the trapezoidal rule; the check on decay at both grid
/// edges guards against truncation and aliasing.
pub fn fourier_grid<T: Copy + Into<Complex64>>(f: &GridFunction<T>) -> Result<GridFunction<Complex64>> {
    check_edges(f, "input")?;
    let n = f.len();
    let h = f.spacing();
    let dxi = 2.0 * PI / (n as f64 * h);
    let values: Vec<Complex64> = f.values.iter().map(|&v| v.into()).collect();
    let out: Vec<Complex64> = centred_dft(&values, false).into_iter().map(|v| v * h).collect();
    let g = GridFunction::new(dxi * ((n - 1) / 2) as f64, out)?;
    check_edges(&g, "transform")?;
    Ok(g)
}

/// Inverse of [`fourier_grid`]: `f(v) = (1/2π) ∫ f̂(ξ) e^{ivξ} dξ`.
pub fn inverse_fourier_grid(f_hat: &GridFunction<Complex64>) -> Result<GridFunction<Complex64>> {
    check_edges(f_hat, "transform")?;
    let n = f_hat.len();
    let dxi = f_hat.spacing();
    let h = 2.0 * PI / (n as f64 * dxi);
    let out = centred_dft(&f_hat.values, true).into_iter().map(|v| v * dxi / (2.0 * PI)).collect();
    GridFunction::new(h * ((n - 1) / 2) as f64, out)
}

/// Coefficients `c_0 .. c_N` of a finite expansion `Σ c_k ψ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteCoeffs {
    coeffs: Vec<Complex64>,
}

impl HermiteCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "an expansion needs at least one coefficient");
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zeros(max_index: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); max_index + 1])
    }

    /// The unit vector `e_k` in a basis of size `max_index + 1`.
    pub fn unit(k: usize, max_index: usize) -> Self {
        let mut c = Self::zeros(max_index.max(k));
        c.coeffs[k] = Complex64::new(1.0, 0.0);
        c
    }

    pub fn max_index(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn basis(&self) -> HermiteBasis {
        HermiteBasis { max_index: self.max_index() }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    /// `Σ c_k ψ_k` sampled on a symmetric grid.
    pub fn synthesize(&self, half_width: f64, points: usize) -> Result<GridFunction<Complex64>> {
        if points < 3 || points % 2 == 0 {
            return Err(KacError::Domain(format!("symmetric grid needs an odd number (≥ 3) of points, got {points}")));
        }
        let mut psi = vec![0.0; self.coeffs.len()];
        let h = 2.0 * half_width / (points - 1) as f64;
        let c = (points - 1) / 2;
        let values = (0..points)
            .map(|j| {
                hermite_psi_into((j as f64 - c as f64) * h, &mut psi);
                self.coeffs.iter().zip(&psi).map(|(c, p)| c * p).sum()
            })
            .collect();
        GridFunction::new(half_width, values)
    }
}

/// Projection `c_n = ∫ f ψ_n` of grid samples onto `ψ_0 .. ψ_N`.
pub fn hermite_transform<T: Copy + Into<Complex64>>(
    f: &GridFunction<T>,
    basis: &HermiteBasis,
) -> Result<HermiteCoeffs> {
    basis.check_grid(f.half_width(), f.spacing())?;
    let h = f.spacing();
    let mut psi = vec![0.0; basis.len()];
    let mut coeffs = vec![Complex64::default(); basis.len()];
    for (j, &v) in f.values().iter().enumerate() {
        let v: Complex64 = v.into();
        if v == Complex64::default() {
            continue;
        }
        hermite_psi_into(f.point(j), &mut psi);
        for (c, &p) in coeffs.iter_mut().zip(&psi) {
            *c += v * (p * h);
        }
    }
    Ok(HermiteCoeffs::new(coeffs))
}

/// Inverse of [`hermite_transform`]: synthesizes on the grid of `like`.
pub fn inverse_hermite_transform<T>(c: &HermiteCoeffs, like: &GridFunction<T>) -> Result<GridFunction<Complex64>>
where
    T: Copy,
{
    c.synthesize(like.half_width(), like.len())
}
