//! Time evolution under the linearized Kac operator, which is diagonal in the
//! Hermite basis: `c_k(t) = c_k(0) e^{−tλ_k}`.

use crate::bobylev::linearized_kac_apply;
use crate::core_math::HermiteCoeffs;
use crate::error::{KacError, Result};
use crate::spectrum::{KacSpectrum, KERNEL_MODES};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Coefficients at time `t` together with the spectrum driving them.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionState {
    coeffs: HermiteCoeffs,
    time: f64,
    spectrum: Arc<KacSpectrum>,
}

impl EvolutionState {
    pub fn new(coeffs: HermiteCoeffs, spectrum: Arc<KacSpectrum>) -> Result<Self> {
        if coeffs.max_index() > spectrum.max_index() {
            return Err(KacError::Domain(format!(
                "coefficients reach index {} but the spectrum stops at {}",
                coeffs.max_index(),
                spectrum.max_index()
            )));
        }
        Ok(Self { coeffs, time: 0.0, spectrum })
    }

    pub fn coeffs(&self) -> &HermiteCoeffs {
        &self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn spectrum(&self) -> &KacSpectrum {
        &self.spectrum
    }
}

/// `c_k ← c_k e^{−Δt λ_k}`.
pub fn semigroup_evolve(state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(KacError::Domain(format!("time step must be finite and ≥ 0, got {dt}")));
    }
    let coeffs = state
        .coeffs
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, c)| c * (-dt * state.spectrum.eigenvalue(k)).exp())
        .collect();
    Ok(EvolutionState { coeffs: HermiteCoeffs::new(coeffs), time: state.time + dt, spectrum: state.spectrum.clone() })
}

/// States at the given absolute times (each evolved from `state` directly).
pub fn trajectory(state: &EvolutionState, times: &[f64]) -> Result<Vec<EvolutionState>> {
    times
        .iter()
        .map(|&t| {
            if t < state.time {
                return Err(KacError::Domain(format!("time {t} precedes the initial time {}", state.time)));
            }
            semigroup_evolve(state, t - state.time)
        })
        .collect()
}

/// One line of a trajectory export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mode: usize,
    pub coeff: Complex64,
    pub log_abs: f64,
}

pub fn trajectory_rows(states: &[EvolutionState]) -> Vec<TrajectoryRow> {
    states
        .iter()
        .flat_map(|st| {
            st.coeffs.as_slice().iter().enumerate().map(move |(mode, &coeff)| TrajectoryRow {
                t: st.time,
                mode,
                coeff,
                log_abs: coeff.norm().ln(),
            })
        })
        .collect()
}

/// Least-squares slope of `ln|c_k(t)|` along a trajectory.
pub fn decay_rate_fit(states: &[EvolutionState], mode: usize) -> Result<f64> {
    if states.len() < 3 {
        return Err(KacError::Domain(format!("need at least 3 samples, got {}", states.len())));
    }
    let mut pts = Vec::with_capacity(states.len());
    for st in states {
        if mode > st.coeffs.max_index() {
            return Err(KacError::Domain(format!("mode {mode} is outside the state")));
        }
        let a = st.coeffs.get(mode).norm();
        if a == 0.0 {
            return Err(KacError::Undefined(format!("mode {mode} vanishes at t = {}", st.time)));
        }
        pts.push((st.time, a.ln()));
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    if sxx == 0.0 {
        return Err(KacError::Undefined("all sample times coincide".into()));
    }
    Ok(sxy / sxx)
}

/// `(1 − P) f`: removes the collisional-invariant modes.
pub fn project_out_invariants(f: &HermiteCoeffs) -> HermiteCoeffs {
    let mut out = f.clone();
    for &k in &KERNEL_MODES {
        if k <= out.max_index() {
            out.as_mut_slice()[k] = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Weight of mode `k` in `‖H^{s/2} g‖²` for the one-dimensional oscillator.
pub fn sobolev_weight(k: usize, s: f64) -> f64 {
    (k as f64 + 0.5).powf(s)
}

/// Two-sided comparison of the Dirichlet form with `‖H^{s/2}(1 − P)f‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityReport {
    /// `Σ λ_k |c_k|²`.
    pub dirichlet: f64,
    /// `Σ_{k∉{0,2}} (k + 1/2)^s |c_k|²`.
    pub sobolev_norm: f64,
    /// `min_{k∉{0,2}} λ_k/(k + 1/2)^s` over `k ≤ K`.
    pub c_min: f64,
    pub c_max: f64,
    pub holds: bool,
}

/// `(c_min, c_max)` over the active modes `k ≤ K`.
pub fn coercivity_constants(spectrum: &KacSpectrum, max_index: usize) -> Result<(f64, f64)> {
    if max_index > spectrum.max_index() {
        return Err(KacError::Domain(format!("spectrum stops at {}", spectrum.max_index())));
    }
    let ratios: Vec<f64> = (0..=max_index)
        .filter(|&k| KacSpectrum::is_active(k))
        .map(|k| spectrum.eigenvalue(k) / sobolev_weight(k, spectrum.s()))
        .collect();
    if ratios.is_empty() {
        return Err(KacError::Undefined("no active modes below the cutoff".into()));
    }
    Ok((ratios.iter().copied().fold(f64::INFINITY, f64::min), ratios.iter().copied().fold(0.0, f64::max)))
}

pub fn coercivity_check_with(f: &HermiteCoeffs, spectrum: &KacSpectrum) -> Result<CoercivityReport> {
    let (c_min, c_max) = coercivity_constants(spectrum, f.max_index())?;
    let s = spectrum.s();
    let (mut dirichlet, mut sobolev_norm) = (0.0, 0.0);
    for (k, c) in f.as_slice().iter().enumerate() {
        dirichlet += spectrum.eigenvalue(k) * c.norm_sqr();
        if KacSpectrum::is_active(k) {
            sobolev_norm += sobolev_weight(k, s) * c.norm_sqr();
        }
    }
    // One rounding per term on either side.
    let slack = 1e-12 * dirichlet.abs().max(c_max * sobolev_norm);
    let holds = c_min * sobolev_norm <= dirichlet + slack && dirichlet <= c_max * sobolev_norm + slack;
    Ok(CoercivityReport { dirichlet, sobolev_norm, c_min, c_max, holds })
}

/// `f` must be band-limited to `K`, i.e. `f.max_index() ≤ K`.
pub fn coercivity_check(f: &HermiteCoeffs, s: f64, max_index: usize) -> Result<CoercivityReport> {
    if f.max_index() > max_index {
        return Err(KacError::Domain(format!("coefficients exceed the band limit {max_index}")));
    }
    coercivity_check_with(f, &KacSpectrum::compute(s, max_index)?)
}

/// Smallest eigenvalue over active modes `k ≤ K`.
pub fn spectral_gap(spectrum: &KacSpectrum, max_index: usize) -> f64 {
    (0..=max_index.min(spectrum.max_index()))
        .filter(|&k| KacSpectrum::is_active(k))
        .map(|k| spectrum.eigenvalue(k))
        .fold(f64::INFINITY, f64::min)
}

/// Matrix of the Fourier-side linearized operator on `ψ_0 .. ψ_K`
/// (column `k` is the image of `ψ_k`).
pub fn fourier_side_matrix(s: f64, max_index: usize) -> Result<DMatrix<Complex64>> {
    let cols: Vec<HermiteCoeffs> = (0..=max_index)
        .into_par_iter()
        .map(|k| linearized_kac_apply(&HermiteCoeffs::unit(k, max_index), s))
        .collect::<Result<_>>()?;
    let w = max_index + 1;
    Ok(DMatrix::from_fn(w, w, |m, n| cols[n].get(m)))
}

/// `(I + Δt A)^{-1} c`.
pub fn implicit_euler_step(matrix: &DMatrix<Complex64>, c: &HermiteCoeffs, dt: f64) -> Result<HermiteCoeffs> {
    let w = matrix.nrows();
    if c.as_slice().len() != w {
        return Err(KacError::Domain(format!("expected {w} coefficients")));
    }
    let system = DMatrix::identity(w, w) + matrix * Complex64::new(dt, 0.0);
    let rhs = DVector::from_column_slice(c.as_slice());
    let x = system.lu().solve(&rhs).ok_or_else(|| KacError::Accuracy("implicit Euler system is singular".into()))?;
    Ok(HermiteCoeffs::new(x.iter().copied().collect()))
}

/// Per-mode errors of one implicit-Euler step against the exact semigroup,
/// at step `h` and `h/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RichardsonReport {
    pub step: f64,
    pub error_full: Vec<f64>,
    pub error_half: Vec<f64>,
    /// `log₂(error_full / error_half)` for active modes (NaN elsewhere).
    pub order: Vec<f64>,
}

impl RichardsonReport {
    pub fn min_active_order(&self) -> f64 {
        self.order.iter().copied().filter(|o| o.is_finite()).fold(f64::INFINITY, f64::min)
    }
}

/// Applies one implicit-Euler step built from the Fourier-side operator to
/// the all-ones vector and compares with `e^{−hλ_k}`.
pub fn richardson_check(s: f64, max_index: usize, step: f64) -> Result<RichardsonReport> {
    let matrix = fourier_side_matrix(s, max_index)?;
    let spectrum = KacSpectrum::compute(s, max_index)?;
    let ones = HermiteCoeffs::from_real(&vec![1.0; max_index + 1]);
    let errors = |h: f64| -> Result<Vec<f64>> {
        let approx = implicit_euler_step(&matrix, &ones, h)?;
        Ok((0..=max_index).map(|k| (approx.get(k) - (-h * spectrum.eigenvalue(k)).exp()).norm()).collect())
    };
    let (error_full, error_half) = (errors(step)?, errors(0.5 * step)?);
    let order = (0..=max_index)
        .map(|k| if KacSpectrum::is_active(k) { (error_full[k] / error_half[k]).log2() } else { f64::NAN })
        .collect();
    Ok(RichardsonReport { step, error_full, error_half, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(coeffs: &[f64], s: f64) -> EvolutionState {
        let sp = Arc::new(KacSpectrum::compute(s, coeffs.len() - 1).unwrap());
        EvolutionState::new(HermiteCoeffs::from_real(coeffs), sp).unwrap()
    }

    #[test]
    fn zero_step_and_invariant_modes() {
        let st = state(&[1.0, 0.5, -2.0, 0.3, 0.7], 0.5);
        assert_eq!(semigroup_evolve(&st, 0.0).unwrap().coeffs(), st.coeffs());
        let later = semigroup_evolve(&st, 17.0).unwrap();
        assert!((later.coeffs().get(0).re - 1.0).abs() < 1e-10);
        assert!((later.coeffs().get(2).re + 2.0).abs() < 1e-9);
        assert!(semigroup_evolve(&st, -1.0).is_err());
        assert_eq!(later.time(), 17.0);
    }

    #[test]
    fn half_life() {
        let st = state(&[0.0, 0.0, 0.0, 1.0], 0.5);
        let lam = st.spectrum().eigenvalue(3);
        let h = semigroup_evolve(&st, std::f64::consts::LN_2 / lam).unwrap();
        assert!((h.coeffs().get(3).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn composition_is_exact() {
        let st = state(&[0.3, 1.0, 0.2, -0.4, 0.9, 0.1], 0.4);
        let a = semigroup_evolve(&semigroup_evolve(&st, 0.37).unwrap(), 1.21).unwrap();
        let b = semigroup_evolve(&st, 1.58).unwrap();
        for k in 0..=5 {
            let (x, y) = (a.coeffs().get(k), b.coeffs().get(k));
            // exp amplifies the rounding of its argument by tλ.
            let cond = 1.0 + 1.58 * st.spectrum().eigenvalue(k);
            assert!((x - y).norm() <= 4.0 * f64::EPSILON * cond * y.norm());
        }
    }

    #[test]
    fn decay_rates() {
        let st = state(&[1.0, 1.0, 1.0, 1.0, 1.0], 0.5);
        let traj = trajectory(&st, &[0.0, 0.25, 0.5, 1.0, 2.0]).unwrap();
        assert!((decay_rate_fit(&traj, 1).unwrap() + 3.061_467_458_920_718).abs() < 1e-10);
        assert!(decay_rate_fit(&traj, 0).unwrap().abs() < 1e-10);
        let sp = st.spectrum();
        let expected = -(sp.lambda_prime(4) - sp.lambda_doubleprime(2));
        assert!((decay_rate_fit(&traj, 4).unwrap() - expected).abs() < 1e-10);
        assert!(decay_rate_fit(&traj[..2], 1).is_err());
        let zero = state(&[1.0, 0.0, 0.0], 0.5);
        let traj = trajectory(&zero, &[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(decay_rate_fit(&traj, 1), Err(KacError::Undefined(_))));
    }

    #[test]
    fn norm_nonincreasing_and_equilibrium() {
        let st = state(&[0.2, -1.0, 0.5, 0.8, -0.3, 0.6, 0.1], 0.5);
        let gap = spectral_gap(st.spectrum(), 6);
        let fluct = project_out_invariants(st.coeffs()).norm();
        let mut prev = st.coeffs().norm();
        for i in 1..=20 {
            let t = 0.1 * i as f64;
            let now = semigroup_evolve(&st, t).unwrap();
            assert!(now.coeffs().norm() <= prev + 1e-15);
            prev = now.coeffs().norm();
            assert!(project_out_invariants(now.coeffs()).norm() <= (-gap * t).exp() * fluct * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_mode_ratio() {
        let r = coercivity_check(&HermiteCoeffs::unit(5, 5), 0.5, 5).unwrap();
        let sp = KacSpectrum::compute(0.5, 5).unwrap();
        assert!((r.dirichlet / r.sobolev_norm - sp.eigenvalue(5) / 5.5f64.sqrt()).abs() < 1e-14);
        assert!(r.holds);
    }

    #[test]
    fn random_sandwich() {
        let sp = KacSpectrum::compute(0.5, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c: Vec<f64> = (0..=60).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = coercivity_check_with(&HermiteCoeffs::from_real(&c), &sp).unwrap();
            assert!(r.holds && r.c_min > 0.0);
        }
    }

    #[test]
    fn implicit_euler_is_first_order_per_step() {
        let r = richardson_check(0.5, 6, 0.002).unwrap();
        assert!(r.min_active_order() > 1.9, "{:?}", r.order);
        assert!(r.error_full[0] < 1e-8 && r.error_full[2] < 1e-8);
    }
}
