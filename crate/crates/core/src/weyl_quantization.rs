//! Weyl quantization on a discrete phase-space grid.
//!
//! Conventions: `a^w u(x) = (2π)^{-1} ∬ e^{i(x−y)ξ} a((x+y)/2, ξ) u(y) dy dξ`,
//! whose kernel in centre/difference coordinates is
//! `k(v, y) = (2π)^{-1} ∫ a(v, ξ) e^{iyξ} dξ`, and the Wigner function
//! `W(f, g)(v, ξ) = (2π)^{-1} ∫ f(v + y/2) conj(g(v − y/2)) e^{−iyξ} dy`, so that
//! `⟨a^w f, g⟩ = ∬ a W(f, g)`.
//!
//! The grid uses `N` (a power of two) points per axis. Velocities are
//! `v_i = (i − N/2) h`; the difference variable uses spacing `2h`, so
//! `v_i ± y_j/2` are again grid points; the frequency spacing is fixed by
//! the discrete Fourier pairing `h_y h_ξ = 2π/N`.

use crate::core_math::{hermite_psi_into, HermiteCoeffs};
use crate::error::{KacError, Result};
use crate::spectrum::KacSpectrum;
use crate::symbols::{l1_radial, l2_radial, mehler_radial, default_tolerance};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_POINTS: usize = 512;
pub const MIN_HALF_WIDTH: f64 = 14.0;
/// Largest basis index supported by the matrix assembly.
pub const MAX_MATRIX_INDEX: usize = 40;
/// Relative magnitude tolerated at the grid edge before declaring aliasing.
pub const EDGE_TOL: f64 = 1e-10;

/// The product grid shared by symbols, kernels and Wigner functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    half_width: f64,
    points: usize,
}

impl PhaseGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(KacError::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(KacError::Domain(format!("grid points must be a power of two ≥ 8, got {points}")));
        }
        Ok(Self { half_width, points })
    }

    /// Default grid for basis indices up to `k`: half-width `max(14, 3√(2k+1))`.
    pub fn for_max_index(k: usize) -> Self {
        Self { half_width: default_half_width(k), points: DEFAULT_POINTS }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn v_spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn y_spacing(&self) -> f64 {
        2.0 * self.v_spacing()
    }

    pub fn xi_spacing(&self) -> f64 {
        2.0 * PI / (self.points as f64 * self.y_spacing())
    }

    pub fn xi_half_width(&self) -> f64 {
        0.5 * self.points as f64 * self.xi_spacing()
    }

    fn centre(&self) -> isize {
        (self.points / 2) as isize
    }

    pub fn v(&self, i: usize) -> f64 {
        (i as isize - self.centre()) as f64 * self.v_spacing()
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as isize - self.centre()) as f64 * self.y_spacing()
    }

    pub fn xi(&self, k: usize) -> f64 {
        (k as isize - self.centre()) as f64 * self.xi_spacing()
    }

    /// Index of `v_i + offset·h`, if on the grid.
    fn shifted(&self, i: usize, offset: isize) -> Option<usize> {
        let r = i as isize + offset;
        (0..self.points as isize).contains(&r).then_some(r as usize)
    }
}

pub fn default_half_width(k: usize) -> f64 {
    MIN_HALF_WIDTH.max(3.0 * ((2 * k + 1) as f64).sqrt())
}

/// A function on phase space, evaluated pointwise.
pub trait PhaseSymbol: Sync {
    fn value(&self, v: f64, xi: f64) -> Result<Complex64>;

    /// Whether the symbol is even in `v` and in `ξ` separately; lets grid
    /// sweeps evaluate one quadrant.
    fn is_even(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// Adapter turning a closure into a [`PhaseSymbol`].
pub struct FnSymbol<F> {
    name: String,
    even: bool,
    f: F,
}

impl<F: Fn(f64, f64) -> Complex64 + Sync> FnSymbol<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), even: false, f }
    }

    pub fn even(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), even: true, f }
    }
}

impl<F: Fn(f64, f64) -> Complex64 + Sync> PhaseSymbol for FnSymbol<F> {
    fn value(&self, v: f64, xi: f64) -> Result<Complex64> {
        Ok((self.f)(v, xi))
    }

    fn is_even(&self) -> bool {
        self.even
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// The symbols whose Hermite-basis diagonals are known (`d = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NamedSymbol {
    Identity,
    /// `ξ² + v²/4`.
    Oscillator,
    /// Symbol of `e^{−tH}`.
    Mehler { t: f64 },
    L1 { s: f64 },
    L2 { s: f64 },
    Full { s: f64 },
    /// `2 e^{−2(ξ² + v²/4)}`, the projector onto `ψ_0`.
    GroundProjector,
}

impl NamedSymbol {
    pub fn parse(name: &str, s: f64, t: f64) -> Result<Self> {
        Ok(match name {
            "identity" => Self::Identity,
            "oscillator" => Self::Oscillator,
            "mehler" => Self::Mehler { t },
            "l1" => Self::L1 { s },
            "l2" => Self::L2 { s },
            "full" => Self::Full { s },
            "projector" => Self::GroundProjector,
            _ => return Err(KacError::Domain(format!("unknown symbol '{name}'"))),
        })
    }

    /// Exact diagonal `A_kk`, `k ≤ max_index`.
    pub fn expected_diagonal(&self, max_index: usize) -> Result<Vec<f64>> {
        let modes = 0..=max_index;
        Ok(match *self {
            Self::Identity => vec![1.0; max_index + 1],
            Self::Oscillator => modes.map(|k| k as f64 + 0.5).collect(),
            Self::Mehler { t } => modes.map(|k| (-t * (k as f64 + 0.5)).exp()).collect(),
            Self::GroundProjector => modes.map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
            Self::L1 { s } => {
                let sp = KacSpectrum::compute(s, max_index)?;
                modes.map(|k| sp.lambda_prime(k)).collect()
            }
            Self::L2 { s } => {
                let sp = KacSpectrum::compute(s, max_index)?;
                modes.map(|k| -sp.doubleprime_for_mode(k)).collect()
            }
            Self::Full { s } => KacSpectrum::compute(s, max_index)?.eigenvalues().to_vec(),
        })
    }
}

impl PhaseSymbol for NamedSymbol {
    fn value(&self, v: f64, xi: f64) -> Result<Complex64> {
        let q = xi * xi + 0.25 * v * v;
        let re = match *self {
            Self::Identity => 1.0,
            Self::Oscillator => q,
            Self::Mehler { t } => mehler_radial(t, q, 1)?,
            Self::L1 { s } => l1_radial(q, s, 1, default_tolerance())?,
            Self::L2 { s } => l2_radial(q, s, 1, default_tolerance())?,
            Self::Full { s } => l1_radial(q, s, 1, default_tolerance())? + l2_radial(q, s, 1, default_tolerance())?,
            Self::GroundProjector => 2.0 * (-2.0 * q).exp(),
        };
        Ok(Complex64::new(re, 0.0))
    }

    fn is_even(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        match *self {
            Self::Identity => "identity".into(),
            Self::Oscillator => "oscillator".into(),
            Self::Mehler { t } => format!("mehler(t={t})"),
            Self::L1 { s } => format!("l1(s={s})"),
            Self::L2 { s } => format!("l2(s={s})"),
            Self::Full { s } => format!("full(s={s})"),
            Self::GroundProjector => "projector".into(),
        }
    }
}

/// Row-major `N × N` samples; rows index `v`, columns `ξ` or `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSamples {
    grid: PhaseGrid,
    values: Vec<Complex64>,
}

impl PhaseSamples {
    pub fn new(grid: PhaseGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points * grid.points {
            return Err(KacError::Domain(format!(
                "expected {} samples, got {}",
                grid.points * grid.points,
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, i: usize, k: usize) -> Complex64 {
        self.values[i * self.grid.points + k]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.grid.points;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn max_edge_in_columns(&self) -> f64 {
        let n = self.grid.points;
        (0..n).map(|i| self.at(i, 0).norm().max(self.at(i, n - 1).norm())).fold(0.0, f64::max)
    }
}

/// Samples `a(v_i, ξ_k)` on the grid.
pub fn sample_symbol(symbol: &dyn PhaseSymbol, grid: &PhaseGrid) -> Result<PhaseSamples> {
    let n = grid.points;
    let c = n / 2;
    let values: Vec<Complex64> = if symbol.is_even() {
        // Index 0 has no mirror; every other index i pairs with n − i.
        let reps: Vec<usize> = std::iter::once(0).chain(c..n).collect();
        let rep = |i: usize| if i == 0 || i >= c { i } else { n - i };
        let table: Vec<Complex64> = reps
            .par_iter()
            .flat_map_iter(|&i| reps.iter().map(move |&k| (i, k)).collect::<Vec<_>>())
            .map(|(i, k)| symbol.value(grid.v(i), grid.xi(k)))
            .collect::<Result<_>>()?;
        let slot = |i: usize| if i == 0 { 0 } else { i - c + 1 };
        let m = reps.len();
        (0..n * n).map(|idx| table[slot(rep(idx / n)) * m + slot(rep(idx % n))]).collect()
    } else {
        (0..n * n)
            .into_par_iter()
            .map(|idx| symbol.value(grid.v(idx / n), grid.xi(idx % n)))
            .collect::<Result<_>>()?
    };
    PhaseSamples::new(*grid, values)
}

/// Centred DFT `X_j = Σ_k x_k e^{∓2πi(j−N/2)(k−N/2)/N}`; `N` divisible by 4.
struct CentredDft {
    fft: Arc<dyn Fft<f64>>,
}

impl CentredDft {
    fn new(n: usize, forward: bool) -> Self {
        let mut planner = FftPlanner::new();
        let fft = if forward { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
        Self { fft }
    }

    fn apply(&self, data: &mut [Complex64]) {
        // (−1)^k before and (−1)^j after absorb the centring for N ≡ 0 mod 4.
        for (k, z) in data.iter_mut().enumerate() {
            if k % 2 == 1 {
                *z = -*z;
            }
        }
        self.fft.process(data);
        for (j, z) in data.iter_mut().enumerate() {
            if j % 2 == 1 {
                *z = -*z;
            }
        }
    }
}

fn rowwise(samples: &PhaseSamples, forward: bool, scale: f64) -> PhaseSamples {
    let n = samples.grid.points;
    let dft = CentredDft::new(n, forward);
    let mut values = samples.values.clone();
    values.par_chunks_mut(n).for_each(|row| {
        dft.apply(row);
        row.iter_mut().for_each(|z| *z *= scale);
    });
    PhaseSamples { grid: samples.grid, values }
}

fn kernel_unchecked(symbol: &PhaseSamples) -> PhaseSamples {
    let g = symbol.grid;
    rowwise(symbol, false, g.xi_spacing() / (2.0 * PI))
}

/// Weyl kernel `k(v, y) = (2π)^{-1} ∫ a(v, ξ) e^{iyξ} dξ` (rows `v`, columns `y`).
///
/// Fails with an accuracy error when the kernel has not decayed at the
/// `y`-edges of the grid.
pub fn kernel_from_symbol(symbol: &PhaseSamples) -> Result<PhaseSamples> {
    let kernel = kernel_unchecked(symbol);
    let (edge, peak) = (kernel.max_edge_in_columns(), kernel.max_abs());
    if edge > EDGE_TOL * peak {
        return Err(KacError::Accuracy(format!("kernel not resolved: edge {edge:.3e} vs peak {peak:.3e}")));
    }
    Ok(kernel)
}

/// Inverse of [`kernel_from_symbol`]: `a(v, ξ) = ∫ k(v, y) e^{−iyξ} dy`.
pub fn symbol_from_kernel(kernel: &PhaseSamples) -> Result<PhaseSamples> {
    let (edge, peak) = (kernel.max_edge_in_columns(), kernel.max_abs());
    if edge > EDGE_TOL * peak {
        return Err(KacError::Accuracy(format!("kernel does not decay: edge {edge:.3e} vs peak {peak:.3e}")));
    }
    Ok(rowwise(kernel, true, kernel.grid.y_spacing()))
}

/// Samples a kernel given in the original variables, `K(x, x')`, at
/// `x = v + y/2`, `x' = v − y/2`.
pub fn kernel_from_fn(grid: &PhaseGrid, f: impl Fn(f64, f64) -> Complex64 + Sync) -> PhaseSamples {
    let n = grid.points;
    let values = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (v, y) = (grid.v(idx / n), grid.y(idx % n));
            f(v + 0.5 * y, v - 0.5 * y)
        })
        .collect();
    PhaseSamples { grid: *grid, values }
}

/// `(k(v, y) + k(v, −y))/2`; the unpaired edge column is kept as is.
pub fn even_part_in_difference(kernel: &PhaseSamples) -> PhaseSamples {
    let n = kernel.grid.points;
    let mut values = kernel.values.clone();
    for i in 0..n {
        for j in 1..n {
            values[i * n + j] = 0.5 * (kernel.at(i, j) + kernel.at(i, n - j));
        }
    }
    PhaseSamples { grid: kernel.grid, values }
}

/// Sampled Wigner function on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    samples: PhaseSamples,
}

impl WignerGrid {
    pub fn samples(&self) -> &PhaseSamples {
        &self.samples
    }

    pub fn at(&self, i: usize, k: usize) -> Complex64 {
        self.samples.at(i, k)
    }

    /// `∬ W dv dξ`.
    pub fn integral(&self) -> Complex64 {
        let g = self.samples.grid;
        self.samples.values.iter().sum::<Complex64>() * g.v_spacing() * g.xi_spacing()
    }

    pub fn max_imag(&self) -> f64 {
        self.samples.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// `∬ a W dv dξ` against sampled symbol values.
    pub fn pair(&self, symbol: &PhaseSamples) -> Complex64 {
        let g = self.samples.grid;
        self.samples.values.iter().zip(&symbol.values).map(|(w, a)| w * a).sum::<Complex64>()
            * g.v_spacing()
            * g.xi_spacing()
    }
}

fn check_edges(f: &[Complex64], label: &str) -> Result<()> {
    let peak = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = f[0].norm().max(f[f.len() - 1].norm());
    if edge > EDGE_TOL * peak {
        return Err(KacError::Accuracy(format!("{label} not resolved on the grid: edge {edge:.3e} vs peak {peak:.3e}")));
    }
    Ok(())
}

/// `W(f, g)` from samples `f(v_i)`, `g(v_i)`.
pub fn wigner(f: &[Complex64], g: &[Complex64], grid: &PhaseGrid) -> Result<WignerGrid> {
    let n = grid.points;
    if f.len() != n || g.len() != n {
        return Err(KacError::Domain(format!("expected {n} samples per function")));
    }
    check_edges(f, "f")?;
    check_edges(g, "g")?;
    let c = (n / 2) as isize;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, z) in row.iter_mut().enumerate() {
            let off = j as isize - c;
            if let (Some(p), Some(m)) = (grid.shifted(i, off), grid.shifted(i, -off)) {
                *z = f[p] * g[m].conj();
            }
        }
    });
    let products = PhaseSamples { grid: *grid, values };
    Ok(WignerGrid { samples: rowwise(&products, true, grid.y_spacing() / (2.0 * PI)) })
}

/// `W(f, g)` for Hermite-coefficient inputs.
pub fn wigner_coeffs(f: &HermiteCoeffs, g: &HermiteCoeffs, grid: &PhaseGrid) -> Result<WignerGrid> {
    let table = HermiteTable::new(grid, f.max_index().max(g.max_index()));
    let synth = |c: &HermiteCoeffs| -> Vec<Complex64> {
        (0..grid.points)
            .map(|i| c.as_slice().iter().enumerate().map(|(m, a)| a * table.row(i)[m]).sum())
            .collect()
    };
    wigner(&synth(f), &synth(g), grid)
}

/// `⟨a^w ψ_n, ψ_m⟩ = ∬ a W(ψ_n, ψ_m)`, through an explicit Wigner function.
pub fn weyl_matrix_element(symbol: &dyn PhaseSymbol, m: usize, n: usize, grid: &PhaseGrid) -> Result<Complex64> {
    let a = sample_symbol(symbol, grid)?;
    let w = wigner_coeffs(&HermiteCoeffs::unit(n, m.max(n)), &HermiteCoeffs::unit(m, m.max(n)), grid)?;
    Ok(w.pair(&a))
}

/// `ψ_0 .. ψ_K` at every grid velocity.
struct HermiteTable {
    width: usize,
    values: Vec<f64>,
    row_max: Vec<f64>,
}

impl HermiteTable {
    fn new(grid: &PhaseGrid, max_index: usize) -> Self {
        let width = max_index + 1;
        let mut values = vec![0.0; grid.points * width];
        for (i, row) in values.chunks_mut(width).enumerate() {
            hermite_psi_into(grid.v(i), row);
        }
        let row_max = values.chunks(width).map(|r| r.iter().fold(0.0f64, |a, x| a.max(x.abs()))).collect();
        Self { width, values, row_max }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }
}

/// `A_mn = ⟨a^w ψ_n, ψ_m⟩`, `0 ≤ m, n ≤ K`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    symbol: String,
    grid: PhaseGrid,
    matrix: DMatrix<Complex64>,
}

impl OperatorMatrix {
    /// Assembles the matrix from sampled symbol values.
    pub fn from_samples(name: impl Into<String>, samples: &PhaseSamples, max_index: usize) -> Result<Self> {
        if max_index > MAX_MATRIX_INDEX {
            return Err(KacError::Capability(format!("matrix assembly supports K ≤ {MAX_MATRIX_INDEX}, got {max_index}")));
        }
        let grid = samples.grid;
        let table = HermiteTable::new(&grid, max_index);
        let edge = table.row_max[0].max(table.row_max[grid.points - 1]);
        if edge > EDGE_TOL {
            return Err(KacError::Accuracy(format!(
                "grid half-width {} too small for K = {max_index} (edge value {edge:.3e})",
                grid.half_width
            )));
        }
        let kernel = kernel_unchecked(samples);
        let w = max_index + 1;
        let n = grid.points;
        let c = (n / 2) as isize;
        let zero = || vec![Complex64::new(0.0, 0.0); w * w];
        // The basis is negligible here; these rows contribute nothing.
        let negligible = 1e-40;
        let acc = (0..n)
            .into_par_iter()
            .fold(zero, |mut acc, i| {
                for j in 0..n {
                    let off = j as isize - c;
                    let (Some(p), Some(q)) = (grid.shifted(i, off), grid.shifted(i, -off)) else { continue };
                    if table.row_max[p] * table.row_max[q] < negligible {
                        continue;
                    }
                    // x = v + y/2 pairs with ψ_m, x' = v − y/2 with ψ_n.
                    let kij = kernel.at(i, j);
                    let (pm, qn) = (table.row(p), table.row(q));
                    for (m, &a) in pm.iter().enumerate() {
                        let km = kij * a;
                        for (slot, &b) in acc[m * w..(m + 1) * w].iter_mut().zip(qn) {
                            *slot += km * b;
                        }
                    }
                }
                acc
            })
            .reduce(zero, |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            });
        let scale = grid.v_spacing() * grid.y_spacing();
        let matrix = DMatrix::from_row_iterator(w, w, acc.into_iter().map(|z| z * scale));
        Ok(Self { symbol: name.into(), grid, matrix })
    }

    pub fn assemble(symbol: &dyn PhaseSymbol, max_index: usize, grid: &PhaseGrid) -> Result<Self> {
        let samples = sample_symbol(symbol, grid)?;
        Self::from_samples(symbol.name(), &samples, max_index)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn max_index(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn max_offdiag(&self) -> f64 {
        let w = self.matrix.nrows();
        (0..w)
            .flat_map(|m| (0..w).filter(move |&n| n != m).map(move |n| (m, n)))
            .map(|(m, n)| self.matrix[(m, n)].norm())
            .fold(0.0, f64::max)
    }

    /// `max |A − A*|`.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn compose(&self, other: &OperatorMatrix) -> DMatrix<Complex64> {
        &self.matrix * &other.matrix
    }
}

/// Outcome of comparing an assembled matrix with a known diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalizationReport {
    pub symbol: String,
    pub max_index: usize,
    pub max_offdiag: f64,
    pub diagonal: Vec<f64>,
    pub expected: Vec<f64>,
    pub diag_deviations: Vec<f64>,
    pub max_diag_deviation: f64,
    pub max_diag_imag: f64,
    pub hermitian_defect: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn diagonalization_check(symbol: &NamedSymbol, max_index: usize, tol: f64) -> Result<DiagonalizationReport> {
    diagonalization_check_on(symbol, max_index, tol, &PhaseGrid::for_max_index(max_index))
}

pub fn diagonalization_check_on(
    symbol: &NamedSymbol,
    max_index: usize,
    tol: f64,
    grid: &PhaseGrid,
) -> Result<DiagonalizationReport> {
    let matrix = OperatorMatrix::assemble(symbol, max_index, grid)?;
    let expected = symbol.expected_diagonal(max_index)?;
    let diag = matrix.diagonal();
    let diag_deviations: Vec<f64> = diag.iter().zip(&expected).map(|(a, e)| (a.re - e).abs()).collect();
    let max_diag_deviation = diag_deviations.iter().copied().fold(0.0, f64::max);
    let max_offdiag = matrix.max_offdiag();
    Ok(DiagonalizationReport {
        symbol: matrix.symbol().to_string(),
        max_index,
        max_offdiag,
        diagonal: diag.iter().map(|z| z.re).collect(),
        expected,
        max_diag_deviation,
        diag_deviations,
        max_diag_imag: diag.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        hermitian_defect: matrix.hermitian_defect(),
        tol,
        passed: max_diag_deviation <= tol && max_offdiag <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_math::hermite_psi;

    fn small_grid() -> PhaseGrid {
        PhaseGrid::new(14.0, 256).unwrap()
    }

    fn psi_samples(n: usize, grid: &PhaseGrid) -> Vec<Complex64> {
        (0..grid.points()).map(|i| Complex64::new(hermite_psi(n, grid.v(i)).unwrap(), 0.0)).collect()
    }

    #[test]
    fn grid_geometry() {
        let g = PhaseGrid::for_max_index(20);
        assert!((g.half_width() - 3.0 * 41f64.sqrt()).abs() < 1e-12);
        assert!((g.y_spacing() * g.xi_spacing() * g.points() as f64 - 2.0 * PI).abs() < 1e-12);
        assert_eq!(PhaseGrid::for_max_index(2).half_width(), 14.0);
        assert!(PhaseGrid::new(10.0, 300).is_err());
        assert_eq!(g.v(g.points() / 2), 0.0);
    }

    #[test]
    fn ground_state_wigner() {
        let g = small_grid();
        let f = psi_samples(0, &g);
        let w = wigner(&f, &f, &g).unwrap();
        assert!((w.integral().re - 1.0).abs() < 1e-12);
        assert!(w.max_imag() < 1e-14);
        for &(i, k) in &[(128, 128), (140, 120), (100, 131)] {
            let (v, xi) = (g.v(i), g.xi(k));
            let exact = (-v * v / 2.0 - 2.0 * xi * xi).exp() / PI;
            assert!((w.at(i, k).re - exact).abs() < 1e-13);
        }
        let w01 = wigner(&f, &psi_samples(1, &g), &g).unwrap();
        assert!(w01.integral().norm() < 1e-13);
    }

    #[test]
    fn wigner_mass_is_norm() {
        let g = small_grid();
        let c = HermiteCoeffs::new(vec![Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.0), Complex64::new(0.0, 0.7)]);
        let w = wigner_coeffs(&c, &c, &g).unwrap();
        assert!((w.integral().re - c.norm_sqr()).abs() < 1e-10);
        assert!(w.max_imag() < 1e-12);
    }

    #[test]
    fn wigner_rejects_unresolved_functions() {
        let g = PhaseGrid::new(3.0, 64).unwrap();
        let f = psi_samples(0, &g);
        assert!(matches!(wigner(&f, &f, &g), Err(KacError::Accuracy(_))));
    }

    #[test]
    fn explicit_matrix_elements() {
        let g = small_grid();
        let one = NamedSymbol::Identity;
        assert!((weyl_matrix_element(&one, 3, 3, &g).unwrap().re - 1.0).abs() < 1e-12);
        assert!(weyl_matrix_element(&one, 2, 5, &g).unwrap().norm() < 1e-12);
        let osc = NamedSymbol::Oscillator;
        assert!((weyl_matrix_element(&osc, 4, 4, &g).unwrap().re - 4.5).abs() < 1e-10);
        assert!(weyl_matrix_element(&osc, 4, 2, &g).unwrap().norm() < 1e-10);
        let m = NamedSymbol::Mehler { t: 0.7 };
        assert!((weyl_matrix_element(&m, 0, 0, &g).unwrap().re - (-0.35f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn fast_assembly_matches_explicit_pairing() {
        let g = small_grid();
        let sym = FnSymbol::new("skew", |v: f64, xi: f64| Complex64::new((xi + 0.3 * v).cos() * (-0.1 * v * v).exp(), 0.0));
        let a = OperatorMatrix::assemble(&sym, 5, &g).unwrap();
        for &(m, n) in &[(0, 0), (1, 0), (3, 4), (5, 2)] {
            let e = weyl_matrix_element(&sym, m, n, &g).unwrap();
            assert!((a.get(m, n) - e).norm() < 1e-12, "({m},{n})");
        }
        assert!(a.hermitian_defect() < 1e-12);
    }

    #[test]
    fn oscillator_and_identity_matrices() {
        let g = PhaseGrid::for_max_index(20);
        let id = OperatorMatrix::assemble(&NamedSymbol::Identity, 20, &g).unwrap();
        assert!(id.max_offdiag() < 1e-12);
        assert!(id.diagonal().iter().all(|z| (z.re - 1.0).abs() < 1e-12));
        let r = diagonalization_check(&NamedSymbol::Oscillator, 20, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn projector_trace() {
        let a = OperatorMatrix::assemble(&NamedSymbol::GroundProjector, 10, &PhaseGrid::for_max_index(10)).unwrap();
        assert!((a.trace().re - 1.0).abs() < 1e-12);
        assert!((a.get(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mehler_semigroup_on_matrices() {
        let g = PhaseGrid::for_max_index(20);
        let m = |t| OperatorMatrix::assemble(&NamedSymbol::Mehler { t }, 20, &g).unwrap();
        let prod = m(0.3).compose(&m(0.5));
        let direct = m(0.8);
        let gap = (prod - direct.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(gap < 1e-12);
    }

    #[test]
    fn kernel_round_trip() {
        let g = small_grid();
        let sym = FnSymbol::new("bump", |v: f64, xi: f64| Complex64::new((-v * v - (xi - 0.5).powi(2)).exp(), 0.1 * xi * (-xi * xi - v * v).exp()));
        let a = sample_symbol(&sym, &g).unwrap();
        let back = symbol_from_kernel(&kernel_from_symbol(&a).unwrap()).unwrap();
        let gap = a.values().iter().zip(back.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(gap < 1e-12);
    }

    #[test]
    fn identity_kernel_is_discrete_delta() {
        let g = small_grid();
        let k = kernel_from_symbol(&sample_symbol(&NamedSymbol::Identity, &g).unwrap()).unwrap();
        let c = g.points() / 2;
        assert!((k.at(7, c).re - 1.0 / g.y_spacing()).abs() < 1e-9);
        assert!(k.at(7, c + 3).norm() < 1e-12);
        let back = symbol_from_kernel(&k).unwrap();
        assert!(back.values().iter().all(|z| (z - 1.0).norm() < 1e-12));
    }

    #[test]
    fn heat_kernel_gives_mehler_symbol() {
        let g = small_grid();
        let t = 1.0;
        let kernel = kernel_from_fn(&g, |x, xp| {
            let mut px = vec![0.0; 61];
            let mut pxp = vec![0.0; 61];
            hermite_psi_into(x, &mut px);
            hermite_psi_into(xp, &mut pxp);
            let sum: f64 = (0..61).map(|n| (-t * (n as f64 + 0.5)).exp() * px[n] * pxp[n]).sum();
            Complex64::new(sum, 0.0)
        });
        let sym = symbol_from_kernel(&kernel).unwrap();
        let mut worst = 0.0f64;
        for i in (0..g.points()).step_by(7) {
            for k in (0..g.points()).step_by(5) {
                let q = g.xi(k).powi(2) + 0.25 * g.v(i).powi(2);
                worst = worst.max((sym.at(i, k) - mehler_radial(t, q, 1).unwrap()).norm());
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn even_kernel_part_gives_even_symbol_part() {
        let g = small_grid();
        let sym = FnSymbol::new("odd-bump", |v: f64, xi: f64| Complex64::new((-(v * v) - (xi - 0.7).powi(2)).exp(), 0.0));
        let a = sample_symbol(&sym, &g).unwrap();
        let k = kernel_from_symbol(&a).unwrap();
        let even = symbol_from_kernel(&even_part_in_difference(&k)).unwrap();
        let n = g.points();
        for &(i, j) in &[(120, 140), (128, 100), (90, 129)] {
            let expected = 0.5 * (a.at(i, j) + a.at(i, n - j));
            assert!((even.at(i, j) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn assembly_guards() {
        assert!(OperatorMatrix::assemble(&NamedSymbol::Identity, 41, &small_grid()).is_err());
        let tight = PhaseGrid::new(6.0, 64).unwrap();
        assert!(matches!(OperatorMatrix::assemble(&NamedSymbol::Identity, 20, &tight), Err(KacError::Accuracy(_))));
        assert!(NamedSymbol::parse("nope", 0.5, 1.0).is_err());
    }
}
