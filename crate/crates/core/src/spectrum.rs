//! Eigenvalues of the linearized Kac operator and of its radial Boltzmann
//! analogue, both diagonal in the Hermite basis.
//!
//! * odd modes: `λ_{2m+1} = λ'_{2m+1}`;
//! * even modes: `λ_{2m} = λ'_{2m} − λ''_m`, with `λ_0 = λ_2 = 0`;
//! * `λ'_k = ∫ β (1 − cos^k θ) dθ`, `λ''_l = ∫ β sin^{2l} θ dθ`.
//!
//! The collisional-invariant space of the Kac operator is taken to be
//! `span{ψ_0, ψ_2}` (see [`KERNEL_MODES`]).

use crate::core_math::{binomial, gamma};
use crate::error::{KacError, Result};
use crate::singular_quadrature::{half_angle_max, integrate_regular, CrossSection, Excess, GradedIntegral, HalfAngle, Tolerance};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};

/// Hermite modes annihilated by the linearized Kac operator.
pub const KERNEL_MODES: [usize; 2] = [0, 2];

/// Above this index `λ'_k` is computed by the `v = 1 − cos θ` substitution.
pub const SUBSTITUTION_THRESHOLD: usize = 64;

/// Accuracy request used by the convenience functions.
pub fn default_tolerance() -> Tolerance {
    Tolerance::new(1e-13, 1e-13)
}

fn check_s(s: f64) -> Result<CrossSection> {
    CrossSection::new(s)
}

/// `λ'_k` by direct angular integration.
pub fn lambda_prime_angular(k: usize, s: f64, tol: Tolerance) -> Result<f64> {
    let cs = check_s(s)?;
    if k == 0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    let test = Excess(move |a: HalfAngle| -(kf * a.ln_cos_theta()).exp_m1());
    Ok(cs.fp_integrate_with(&test, tol)?.value)
}

/// `λ'_k = 2^{1+s} ∫_0^{1−2^{−1/2}} (1 − (1−v)^k) v^{−1−s} dv`.
pub fn lambda_prime_substitution(k: usize, s: f64, tol: Tolerance) -> Result<f64> {
    check_s(s)?;
    if k == 0 {
        return Ok(0.0);
    }
    let kf = k as f64;
    let upper = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let scale = 2f64.powf(1.0 + s);
    let inner = Tolerance { abs: tol.abs / scale, ..tol };
    let est = GradedIntegral::new(upper, -1.0 - s, 1.0, 1.0).integrate(|v| -(kf * (-v).ln_1p()).exp_m1(), inner)?;
    Ok(scale * est.value)
}

/// `λ'_k`, switching to the substitution route above
/// [`SUBSTITUTION_THRESHOLD`].
pub fn lambda_prime(k: usize, s: f64) -> Result<f64> {
    lambda_prime_with(k, s, default_tolerance())
}

pub fn lambda_prime_with(k: usize, s: f64, tol: Tolerance) -> Result<f64> {
    if k > SUBSTITUTION_THRESHOLD {
        lambda_prime_substitution(k, s, tol)
    } else {
        lambda_prime_angular(k, s, tol)
    }
}

/// `λ''_l = ∫ β sin^{2l} θ dθ`, `l ≥ 1`.
pub fn lambda_doubleprime(l: usize, s: f64) -> Result<f64> {
    lambda_doubleprime_with(l, s, default_tolerance())
}

pub fn lambda_doubleprime_with(l: usize, s: f64, tol: Tolerance) -> Result<f64> {
    check_s(s)?;
    if l == 0 {
        return Err(KacError::Domain("λ'' is indexed from l = 1".into()));
    }
    if l > SUBSTITUTION_THRESHOLD {
        return lambda_doubleprime_peaked(l, s, tol);
    }
    // sin²θ = 4t(1 − t) with t = sin²(θ/2): contact of order 2l at the origin.
    // Positive integrand, tiny for large l: accuracy is requested relatively.
    let lf = l as f64;
    let inner = Tolerance { abs: 0.0, rel: tol.rel.max(1e-15), ..tol };
    let est = GradedIntegral::new(half_angle_max(), -1.0 - 2.0 * s, 2.0 * lf, 2.0)
        .integrate_reduced(|u| (lf * (4.0 * (1.0 - u * u)).ln()).exp(), inner)?;
    Ok(4.0 * est.value)
}

/// Large `l`: the mass of `sin^{2l}θ` sits just below `π/4`. With
/// `θ = π/4 − φ`, `sinθ/sin(π/4) = 1 − 2sin²(φ/2) − sinφ` keeps the exponent
/// accurate; the factor `2^{−l}` is exact and underflows only with `λ''_l`.
fn lambda_doubleprime_peaked(l: usize, s: f64, tol: Tolerance) -> Result<f64> {
    let lf = l as f64;
    let scaled = |phi: f64| {
        let half = 0.5 * (FRAC_PI_4 - phi);
        let ln_beta = half.cos().ln() - (1.0 + 2.0 * s) * half.sin().ln();
        let ln_ratio = (-2.0 * (0.5 * phi).sin().powi(2) - phi.sin()).ln_1p();
        (ln_beta + 2.0 * lf * ln_ratio).exp()
    };
    // Beyond φ_hi the scaled integrand is under e^{−40}.
    let hi = FRAC_PI_4 - (FRAC_PI_4.sin() * (-20.0 / lf).exp()).asin();
    let rough = integrate_regular(scaled, 0.0, hi, 1e-6);
    let fine = integrate_regular(scaled, 0.0, hi, 0.1 * tol.rel.max(1e-15) * rough);
    Ok(2.0 * fine * 0.5f64.powi(l.min(2000) as i32))
}

/// Upper bound `(4^{2s} π/(1−s)) e^{−2l ln(4/π)}` on `λ''_l`.
pub fn lambda_doubleprime_bound(l: usize, s: f64) -> f64 {
    16f64.powf(s) * PI / (1.0 - s) * (-2.0 * l as f64 * (4.0 / PI).ln()).exp()
}

/// `λ_k`: eigenvalue of the linearized Kac operator on `ψ_k`.
pub fn kac_eigenvalue(k: usize, s: f64) -> Result<f64> {
    kac_eigenvalue_with(k, s, default_tolerance())
}

pub fn kac_eigenvalue_with(k: usize, s: f64, tol: Tolerance) -> Result<f64> {
    let cs = check_s(s)?;
    if k == 0 {
        return Ok(0.0);
    }
    if k % 2 == 1 {
        return lambda_prime_with(k, s, tol);
    }
    let m = k / 2;
    if k > SUBSTITUTION_THRESHOLD {
        return Ok(lambda_prime_with(k, s, tol)? - lambda_doubleprime_with(m, s, tol)?);
    }
    // One integrand 1 − cos^{2m}θ − sin^{2m}θ avoids cancelling two integrals.
    let mf = m as f64;
    let test = Excess(move |a: HalfAngle| {
        let t = a.t();
        -(2.0 * mf * a.ln_cos_theta()).exp_m1() - (4.0 * t * (1.0 - t)).powi(m as i32)
    });
    Ok(cs.fp_integrate_with(&test, tol)?.value)
}

/// Eigenvalue of the radial Boltzmann operator on the level-`2k` eigenspace
/// of the `d`-dimensional oscillator, together with that eigenspace's
/// dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialEigenvalue {
    pub value: f64,
    pub multiplicity: f64,
}

pub fn boltzmann_radial_eigenvalue(k: usize, s: f64, d: usize) -> Result<RadialEigenvalue> {
    if k == 0 {
        return Err(KacError::Domain("radial levels are indexed from k = 1".into()));
    }
    if d < 2 {
        return Err(KacError::Domain(format!("radial Boltzmann analogue needs d ≥ 2, got {d}")));
    }
    Ok(RadialEigenvalue {
        value: kac_eigenvalue(2 * k, s)?,
        multiplicity: binomial((2 * k + d - 1) as u64, (d - 1) as u64),
    })
}

/// Leading and constant coefficients of `λ ↦ c₀ λ^s − d₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticConstants {
    pub c0: f64,
    pub d0: f64,
}

impl AsymptoticConstants {
    pub fn new(s: f64) -> Result<Self> {
        Ok(Self { c0: c0(s)?, d0: d0(s)? })
    }
}

/// `c₀ = 2^{1+s} Γ(1−s)/s`.
pub fn c0(s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(2f64.powf(1.0 + s) * gamma(1.0 - s)? / s)
}

/// `d₀ = 2^{1+s} (2+√2)^s / s`.
pub fn d0(s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(2f64.powf(1.0 + s) * (2.0 + 2f64.sqrt()).powf(s) / s)
}

/// `d₀` from its integral representation, with `T = tan²(π/8) = 3 − 2√2`:
/// `2(1+T)^{s−1}/(s T^s) + (2(1−s)/s) ∫_0^T (1+t)^{s−2} t^{−s} dt`.
pub fn d0_integral(s: f64) -> Result<f64> {
    check_s(s)?;
    let big_t = 3.0 - 2.0 * 2f64.sqrt();
    let boundary = 2.0 * (1.0 + big_t).powf(s - 1.0) / (s * big_t.powf(s));
    let integral = GradedIntegral::new(big_t, -s, 0.0, 1.0)
        .integrate(|t| (1.0 + t).powf(s - 2.0), Tolerance::new(1e-15, 1e-15))?
        .value;
    Ok(boundary + 2.0 * (1.0 - s) / s * integral)
}

/// Eigenvalue table `λ_0 .. λ_K` with its two parts.
#[derive(Clone, Debug, PartialEq)]
pub struct KacSpectrum {
    s: f64,
    eigenvalues: Vec<f64>,
    lambda_prime: Vec<f64>,
    lambda_doubleprime: Vec<f64>,
}

impl KacSpectrum {
    pub fn compute(s: f64, max_index: usize) -> Result<Self> {
        Self::compute_with(s, max_index, default_tolerance())
    }

    pub fn compute_with(s: f64, max_index: usize, tol: Tolerance) -> Result<Self> {
        check_s(s)?;
        let lambda_prime: Vec<f64> =
            (0..=max_index).into_par_iter().map(|k| lambda_prime_with(k, s, tol)).collect::<Result<_>>()?;
        let lambda_doubleprime: Vec<f64> = (0..=max_index / 2)
            .into_par_iter()
            .map(|l| if l == 0 { Ok(0.0) } else { lambda_doubleprime_with(l, s, tol) })
            .collect::<Result<_>>()?;
        let eigenvalues = (0..=max_index)
            .into_par_iter()
            .map(|k| match k {
                0 => Ok(0.0),
                _ if k % 2 == 1 => Ok(lambda_prime[k]),
                _ if k <= SUBSTITUTION_THRESHOLD => kac_eigenvalue_with(k, s, tol),
                _ => Ok(lambda_prime[k] - lambda_doubleprime[k / 2]),
            })
            .collect::<Result<_>>()?;
        Ok(Self { s, eigenvalues, lambda_prime, lambda_doubleprime })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn max_index(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn lambda_prime(&self, k: usize) -> f64 {
        self.lambda_prime[k]
    }

    /// `λ''_l` for `1 ≤ l ≤ K/2`; index 0 holds 0.
    pub fn lambda_doubleprime(&self, l: usize) -> f64 {
        self.lambda_doubleprime[l]
    }

    /// `λ''` attached to mode `k`: `λ''_{k/2}` for even `k ≥ 2`, else 0.
    pub fn doubleprime_for_mode(&self, k: usize) -> f64 {
        if k % 2 == 0 && k > 0 {
            self.lambda_doubleprime[k / 2]
        } else {
            0.0
        }
    }

    /// Whether `k` lies outside the collisional-invariant modes.
    pub fn is_active(k: usize) -> bool {
        !KERNEL_MODES.contains(&k)
    }
}

/// One row of the large-`k` comparison against `c₀ k^s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub k: usize,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub lambda_doubleprime: f64,
    /// `λ_k / k^s`.
    pub ratio_ks: f64,
    /// `λ_k / (c₀ k^s)`.
    pub ratio_to_c0_ks: f64,
    /// `λ_k − c₀ k^s`.
    pub deviation: f64,
}

/// Rows for every `k ≤ K` of an existing table.
pub fn diagnostic_rows(spectrum: &KacSpectrum) -> Result<Vec<DiagnosticRow>> {
    let s = spectrum.s();
    let c = c0(s)?;
    Ok((0..=spectrum.max_index())
        .map(|k| {
            let ks = (k as f64).powf(s);
            let lambda = spectrum.eigenvalue(k);
            let (ratio_ks, ratio_to_c0_ks) = if k == 0 { (0.0, 0.0) } else { (lambda / ks, lambda / (c * ks)) };
            DiagnosticRow {
                k,
                lambda,
                lambda_prime: spectrum.lambda_prime(k),
                lambda_doubleprime: spectrum.doubleprime_for_mode(k),
                ratio_ks,
                ratio_to_c0_ks,
                deviation: lambda - c * ks,
            }
        })
        .collect())
}

/// Table of `(k, λ_k, λ_k/k^s, λ_k − c₀k^s)` for `k ≤ K`, `K ≥ 100`.
pub fn asymptotic_diagnostic(max_index: usize, s: f64) -> Result<Vec<DiagnosticRow>> {
    if max_index < 100 {
        return Err(KacError::Domain(format!("asymptotic diagnostic needs K ≥ 100, got {max_index}")));
    }
    diagnostic_rows(&KacSpectrum::compute(s, max_index)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn u() -> f64 {
        half_angle_max()
    }

    #[test]
    fn peaked_branch_matches_reference_values() {
        // Independent high-precision Gauss–Legendre values at s = 1/2.
        for (l, reference) in [(200, 1.966_015_950_466_142_8e-62), (500, 3.856_904_801_139_552_3e-153)] {
            assert_relative_eq!(lambda_doubleprime(l, 0.5).unwrap(), reference, max_relative = 1e-13);
        }
        assert_eq!(lambda_doubleprime(5000, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn doubleprime_branches_join() {
        let tol = default_tolerance();
        for s in [0.25, 0.5, 0.75] {
            let l = SUBSTITUTION_THRESHOLD;
            let graded = lambda_doubleprime_with(l, s, tol).unwrap();
            let peaked = lambda_doubleprime_peaked(l, s, tol).unwrap();
            assert_relative_eq!(graded, peaked, max_relative = 1e-12);
        }
    }

    #[test]
    fn kernel_modes_vanish() {
        for &s in &[0.25, 0.5, 0.75] {
            assert_eq!(kac_eigenvalue(0, s).unwrap(), 0.0);
            assert!(kac_eigenvalue(2, s).unwrap().abs() < 1e-10);
            assert_eq!(lambda_prime(0, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_form_spot_values() {
        assert!((kac_eigenvalue(1, 0.5).unwrap() - 8.0 * u()).abs() < 1e-12);
        assert!((lambda_prime(1, 0.5).unwrap() - 3.061_467_5).abs() < 1e-7);
        let sin_sq = 16.0 * (u() - u().powi(3) / 3.0);
        assert!((lambda_prime(2, 0.5).unwrap() - sin_sq).abs() < 1e-12);
        assert!((lambda_doubleprime(1, 0.5).unwrap() - sin_sq).abs() < 1e-12);
    }

    #[test]
    fn closed_form_general_s() {
        for &s in &[0.1, 0.25, 0.75, 0.9] {
            let exact = 4.0 / (1.0 - s) * u().powf(2.0 - 2.0 * s);
            assert_relative_eq!(lambda_prime(1, s).unwrap(), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn routes_agree() {
        let tol = default_tolerance();
        for &s in &[0.25, 0.5, 0.75] {
            for &k in &[1, 2, 3, 7, 20, 64, 65, 100, 1000, 10_000] {
                let a = lambda_prime_angular(k, s, tol).unwrap();
                let b = lambda_prime_substitution(k, s, tol).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn constants() {
        assert_relative_eq!(c0(0.5).unwrap(), 2f64.powf(2.5) * PI.sqrt(), max_relative = 1e-14);
        assert!((c0(0.5).unwrap() - 10.026_513_098_524).abs() < 1e-9);
        assert_relative_eq!(d0(0.5).unwrap(), 2.0 / (0.5 * (PI / 8.0).sin()), max_relative = 1e-14);
        assert!((d0(0.5).unwrap() - 10.452_503_719_011).abs() < 1e-9);
        assert!(c0(1.0).is_err() && d0(0.0).is_err());
    }

    #[test]
    fn d0_integral_representation() {
        for &s in &[0.25, 0.5, 0.75] {
            assert!((d0(s).unwrap() - d0_integral(s).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn doubleprime_bound_and_decay() {
        for &s in &[0.25, 0.5, 0.75] {
            let mut last = f64::INFINITY;
            for l in 1..=30 {
                let v = lambda_doubleprime(l, s).unwrap();
                assert!(v >= 0.0 && v <= lambda_doubleprime_bound(l, s));
                assert!(v <= last);
                last = v;
            }
        }
        let ratio = lambda_doubleprime(6, 0.5).unwrap() / lambda_doubleprime(5, 0.5).unwrap();
        assert!(ratio < (PI / 4.0).powi(2) + 0.05);
        assert!(lambda_doubleprime(0, 0.5).is_err());
    }

    #[test]
    fn table_invariants() {
        let table = KacSpectrum::compute(0.5, 1000).unwrap();
        assert_eq!(table.eigenvalue(0), 0.0);
        assert!(table.eigenvalue(2).abs() < 1e-10);
        for k in 1..=1000 {
            assert!(table.eigenvalue(k) >= -1e-12, "λ_{k} = {}", table.eigenvalue(k));
            assert!(table.lambda_prime(k) >= table.lambda_prime(k - 1));
        }
        for l in 2..=500 {
            assert!(table.lambda_doubleprime(l) <= table.lambda_doubleprime(l - 1));
        }
        assert_relative_eq!(table.eigenvalue(4), table.lambda_prime(4) - table.lambda_doubleprime(2), epsilon = 1e-12);
    }

    #[test]
    fn radial_boltzmann() {
        let r = boltzmann_radial_eigenvalue(5, 0.5, 3).unwrap();
        assert_eq!(r.value, kac_eigenvalue(10, 0.5).unwrap());
        assert_eq!(r.multiplicity, 66.0);
        assert!(boltzmann_radial_eigenvalue(1, 0.5, 2).unwrap().value.abs() < 1e-10);
        assert!(boltzmann_radial_eigenvalue(1, 0.5, 1).is_err());
    }

    #[test]
    fn asymptotic_ratio() {
        let c = c0(0.5).unwrap();
        let ratios: Vec<f64> = [100usize, 1000, 10_000]
            .iter()
            .map(|&k| lambda_prime(k, 0.5).unwrap() / (k as f64).sqrt())
            .collect();
        assert!(((ratios[2] - c) / c).abs() <= 0.03);
        assert!((ratios[0] - c).abs() > (ratios[1] - c).abs());
        assert!((ratios[1] - c).abs() > (ratios[2] - c).abs());
        assert!(asymptotic_diagnostic(50, 0.5).is_err());
    }
}
