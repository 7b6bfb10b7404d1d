use crate::config::RunConfig;
use crate::output::{Cell, Report};
use kacspec::bobylev::linearized_kac_apply;
use kacspec::core_math::HermiteCoeffs;
use kacspec::evolution::{coercivity_check_with, spectral_gap, trajectory, trajectory_rows, EvolutionState};
use kacspec::spectrum::{c0, d0, diagnostic_rows, KacSpectrum};
use kacspec::symbols::{dyadic_lambdas, expansion_coefficients_d, leading_residual, symbol_grid, Provenance};
use kacspec::weyl_quantization::{diagonalization_check_on, NamedSymbol, PhaseGrid};
use kacspec::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

pub fn spectrum(cfg: &RunConfig) -> Result<Report> {
    let sp = KacSpectrum::compute(cfg.s, cfg.k)?;
    let mut rep = Report::new(&[
        "k",
        "lambda",
        "lambda_prime",
        "lambda_doubleprime",
        "ratio_ks",
        "ratio_to_c0_ks",
        "deviation",
    ]);
    rep.note("c0", c0(cfg.s)?);
    rep.note("d0", d0(cfg.s)?);
    for r in diagnostic_rows(&sp)? {
        rep.push(vec![
            r.k.into(),
            r.lambda.into(),
            r.lambda_prime.into(),
            r.lambda_doubleprime.into(),
            r.ratio_ks.into(),
            r.ratio_to_c0_ks.into(),
            r.deviation.into(),
        ]);
    }
    let mut worst = sp.eigenvalue(0).abs();
    if cfg.k >= 2 {
        worst = worst.max(sp.eigenvalue(2).abs());
    }
    rep.check("max_kernel_eigenvalue", worst, cfg.tol);
    Ok(rep)
}

pub fn symbol_grid_cmd(cfg: &RunConfig) -> Result<Report> {
    let v_max = cfg.half_width.unwrap_or(12.0);
    let rows = symbol_grid(cfg.s, v_max, v_max / 2.0, cfg.samples, cfg.order)?;
    let mut rep = Report::new(&["v", "xi", "lambda", "l1", "l2", "expansion", "residual"]);
    rep.note("v_max", v_max);
    rep.note("xi_max", v_max / 2.0);
    for r in rows {
        rep.push(vec![
            r.v.into(),
            r.xi.into(),
            r.lambda.into(),
            r.l1.into(),
            r.l2.into(),
            r.expansion.into(),
            r.residual.into(),
        ]);
    }
    Ok(rep)
}

fn phase_grid(cfg: &RunConfig) -> Result<PhaseGrid> {
    let dflt = PhaseGrid::for_max_index(cfg.k);
    PhaseGrid::new(cfg.half_width.unwrap_or(dflt.half_width()), cfg.points.unwrap_or(dflt.points()))
}

fn diagonal_report(cfg: &RunConfig, symbol: &NamedSymbol) -> Result<Report> {
    let grid = phase_grid(cfg)?;
    let r = diagonalization_check_on(symbol, cfg.k, cfg.tol, &grid)?;
    let mut rep = Report::new(&["n", "diagonal", "expected", "deviation"]);
    rep.note("symbol", r.symbol.as_str());
    rep.note("grid_half_width", grid.half_width());
    rep.note("grid_points", grid.points());
    for n in 0..=cfg.k {
        rep.push(vec![n.into(), r.diagonal[n].into(), r.expected[n].into(), r.diag_deviations[n].into()]);
    }
    rep.check("max_diag_deviation", r.max_diag_deviation, cfg.tol);
    rep.check("max_offdiag", r.max_offdiag, cfg.tol);
    rep.note("max_diag_imag", r.max_diag_imag);
    rep.note("hermitian_defect", r.hermitian_defect);
    Ok(rep)
}

pub fn diag_check(cfg: &RunConfig) -> Result<Report> {
    diagonal_report(cfg, &NamedSymbol::parse(&cfg.symbol, cfg.s, cfg.t)?)
}

pub fn mehler_check(cfg: &RunConfig) -> Result<Report> {
    diagonal_report(cfg, &NamedSymbol::Mehler { t: cfg.t })
}

pub fn bobylev_check(cfg: &RunConfig) -> Result<Report> {
    let sp = KacSpectrum::compute(cfg.s, cfg.k)?;
    let applied: Vec<HermiteCoeffs> = (0..=cfg.k)
        .into_par_iter()
        .map(|k| linearized_kac_apply(&HermiteCoeffs::unit(k, cfg.k), cfg.s))
        .collect::<Result<_>>()?;
    let mut rep = Report::new(&["k", "lambda", "applied_re", "applied_im", "rel_error", "leakage"]);
    let (mut worst_err, mut worst_leak) = (0f64, 0f64);
    for (k, out) in applied.iter().enumerate() {
        let lam = sp.eigenvalue(k);
        // Invariant modes have λ = 0 and are measured on unit scale.
        let scale = lam.abs().max(1.0);
        let err = (out.get(k) - lam).norm() / scale;
        let leak = (0..=cfg.k).filter(|&j| j != k).map(|j| out.get(j).norm()).fold(0.0, f64::max) / scale;
        worst_err = worst_err.max(err);
        worst_leak = worst_leak.max(leak);
        rep.push(vec![k.into(), lam.into(), out.get(k).re.into(), out.get(k).im.into(), err.into(), leak.into()]);
    }
    rep.check("max_rel_error", worst_err, cfg.tol);
    rep.check("max_leakage", worst_leak, cfg.tol);
    Ok(rep)
}

/// Seeded initial data with coefficients of size `1/(1+k)`.
pub fn random_coefficients(seed: u64, k_max: usize) -> HermiteCoeffs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..=k_max).map(|k| rng.gen_range(-1.0..1.0) / (1.0 + k as f64)).collect();
    HermiteCoeffs::from_real(&c)
}

pub fn evolve(cfg: &RunConfig) -> Result<Report> {
    let sp = Arc::new(KacSpectrum::compute(cfg.s, cfg.k)?);
    let init = random_coefficients(cfg.seed, cfg.k);
    let coerc = coercivity_check_with(&init, &sp)?;
    let state = EvolutionState::new(init, sp.clone())?;
    let times: Vec<f64> = (0..cfg.samples).map(|i| cfg.t * i as f64 / (cfg.samples - 1) as f64).collect();
    let states = trajectory(&state, &times)?;
    let mut rep = Report::new(&["t", "mode", "coeff", "coeff_im", "log_abs"]);
    for r in trajectory_rows(&states) {
        rep.push(vec![r.t.into(), r.mode.into(), r.coeff.re.into(), r.coeff.im.into(), r.log_abs.into()]);
    }
    // Relative growth of the norm between consecutive samples; must not be positive.
    let growth = states
        .windows(2)
        .map(|w| w[1].coeffs().norm() / w[0].coeffs().norm() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    rep.note("spectral_gap", spectral_gap(&sp, cfg.k));
    rep.note("c_min", coerc.c_min);
    rep.note("c_max", coerc.c_max);
    rep.note("coercivity_holds", if coerc.holds { "true" } else { "false" });
    if !coerc.holds {
        rep.breaches.push("coercivity sandwich violated".into());
    }
    rep.check("max_norm_growth", growth.max(0.0), cfg.tol);
    Ok(rep)
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.abs().ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Report> {
    let exp = expansion_coefficients_d(cfg.s, cfg.d, cfg.order)?;
    let lambdas = dyadic_lambdas();
    let mut rep = Report::new(&["lambda", "residual_0", "residual_1"]);
    rep.note("c0", exp.c0());
    rep.note("d0", exp.d0());
    for j in 1..=cfg.order {
        rep.note(&format!("c{j}"), exp.coefficient(j));
        let tag = match exp.provenance(j) {
            Provenance::Constructive => "constructive",
            Provenance::Fitted => "fitted",
        };
        rep.note(&format!("c{j}_provenance"), tag);
        if let Some(f) = exp.fitted(j) {
            rep.note(&format!("c{j}_fit"), f);
        }
    }
    let c1 = if cfg.order >= 1 { exp.coefficient(1) } else { expansion_coefficients_d(cfg.s, cfg.d, 1)?.coefficient(1) };
    let r0: Vec<f64> = lambdas.par_iter().map(|&l| leading_residual(l, cfg.s, cfg.d)).collect::<Result<_>>()?;
    let r1: Vec<f64> = r0.iter().zip(&lambdas).map(|(r, l)| r - c1 * l.powf(cfg.s - 1.0)).collect();
    for ((l, a), b) in lambdas.iter().zip(&r0).zip(&r1) {
        rep.push(vec![Cell::from(*l), (*a).into(), (*b).into()]);
    }
    rep.check("slope_0_gap", (log_slope(&lambdas, &r0) - (cfg.s - 1.0)).abs(), cfg.tol);
    rep.check("slope_1_gap", (log_slope(&lambdas, &r1) - (cfg.s - 2.0)).abs(), cfg.tol);
    Ok(rep)
}
