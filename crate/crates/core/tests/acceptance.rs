//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use kacspec::bobylev::linearized_kac_apply;
use kacspec::core_math::HermiteCoeffs;
use kacspec::evolution::coercivity_check_with;
use kacspec::spectrum::*;
use kacspec::symbols::*;
use kacspec::weyl_quantization::{diagonalization_check, NamedSymbol};
use kacspec::Result;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const SAMPLE_S: [f64; 3] = [0.25, 0.5, 0.75];

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { ok, detail })
}

fn kernel_modes() -> Result<Outcome> {
    let mut worst = 0f64;
    for s in SAMPLE_S {
        worst = worst.max(kac_eigenvalue(0, s)?.abs()).max(kac_eigenvalue(2, s)?.abs());
    }
    outcome(worst <= 1e-10, format!("max |λ0|,|λ2| = {worst:.3e}"))
}

fn closed_form_spot() -> Result<Outcome> {
    let err = (kac_eigenvalue(1, 0.5)? - 8.0 * (PI / 8.0).sin()).abs();
    outcome(err <= 1e-8, format!("|λ1 − 8 sin(π/8)| = {err:.3e}"))
}

fn leading_growth() -> Result<Outcome> {
    let c = c0(0.5)?;
    let k = 10_000;
    let rel = (lambda_prime(k, 0.5)? / (k as f64).sqrt() - c).abs() / c;
    // The quoted reference carries five decimals.
    let c_err = (c - 10.02650).abs();
    outcome(rel <= 0.03 && c_err <= 5e-5, format!("c0 = {c:.8}, relative gap at k=1e4 = {rel:.3e}"))
}

fn constant_term() -> Result<Outcome> {
    let mut worst = 0f64;
    for s in SAMPLE_S {
        worst = worst.max((d0_integral(s)? - d0(s)?).abs());
    }
    outcome(worst <= 1e-8, format!("max |d0 integral − closed form| = {worst:.3e}"))
}

fn exponential_bound() -> Result<Outcome> {
    let mut worst_ratio = 0f64;
    for s in SAMPLE_S {
        for l in 1..=30 {
            worst_ratio = worst_ratio.max(lambda_doubleprime(l, s)? / lambda_doubleprime_bound(l, s));
        }
    }
    outcome(worst_ratio <= 1.0, format!("max λ''/bound = {worst_ratio:.4}"))
}

fn mehler_diagonal() -> Result<Outcome> {
    let (mut diag, mut off) = (0f64, 0f64);
    for t in [0.1, 1.0] {
        let r = diagonalization_check(&NamedSymbol::Mehler { t }, 10, 1e-6)?;
        diag = diag.max(r.max_diag_deviation);
        off = off.max(r.max_offdiag);
    }
    outcome(diag <= 1e-6 && off <= 1e-8, format!("diag dev {diag:.3e}, off-diag {off:.3e}"))
}

fn symbol_spectrum_consistency() -> Result<Outcome> {
    let a = diagonalization_check(&NamedSymbol::L1 { s: 0.5 }, 20, 1e-6)?;
    let b = diagonalization_check(&NamedSymbol::L2 { s: 0.5 }, 20, 1e-6)?;
    outcome(
        a.passed && b.passed,
        format!(
            "l1: diag {:.3e} off {:.3e}; l2: diag {:.3e} off {:.3e}",
            a.max_diag_deviation, a.max_offdiag, b.max_diag_deviation, b.max_offdiag
        ),
    )
}

fn three_routes() -> Result<Outcome> {
    let (s, kmax) = (0.5, 20);
    let spectrum = KacSpectrum::compute(s, kmax)?;
    let weyl = diagonalization_check(&NamedSymbol::Full { s }, kmax, 1e-5)?;
    let (mut fourier_err, mut weyl_err, mut leak) = (0f64, 0f64, 0f64);
    for k in 0..=kmax {
        let lam = spectrum.eigenvalue(k);
        // Kernel modes have λ = 0; measure those against unit scale.
        let scale = lam.abs().max(1.0);
        let out = linearized_kac_apply(&HermiteCoeffs::unit(k, kmax), s)?;
        fourier_err = fourier_err.max((out.get(k).re - lam).abs() / scale);
        for j in (0..=kmax).filter(|&j| j != k) {
            leak = leak.max(out.get(j).norm() / scale);
        }
        weyl_err = weyl_err.max((weyl.diagonal[k] - lam).abs() / scale);
    }
    let weyl_off = weyl.max_offdiag / spectrum.eigenvalue(kmax);
    let worst = fourier_err.max(weyl_err).max(leak).max(weyl_off);
    outcome(
        worst <= 1e-5,
        format!("fourier {fourier_err:.2e}, leakage {leak:.2e}, weyl diag {weyl_err:.2e}, weyl off {weyl_off:.2e}"),
    )
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.abs().ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn residual_scaling() -> Result<Outcome> {
    let s = 0.5;
    let lambdas = dyadic_lambdas();
    let c1 = expansion_coefficients(s, 1)?.coefficient(1);
    let r0: Vec<f64> = lambdas.iter().map(|&l| leading_residual(l, s, 1)).collect::<Result<_>>()?;
    let r1: Vec<f64> = r0.iter().zip(&lambdas).map(|(r, l)| r - c1 * l.powf(s - 1.0)).collect();
    let (p0, p1) = (log_slope(&lambdas, &r0), log_slope(&lambdas, &r1));
    outcome(
        (p0 - (s - 1.0)).abs() <= 0.15 && (p1 - (s - 2.0)).abs() <= 0.15,
        format!("slopes {p0:.4} (target {}), {p1:.4} (target {})", s - 1.0, s - 2.0),
    )
}

fn gaussian_decay() -> Result<Outcome> {
    let mut detail = Vec::new();
    let mut ok = true;
    for s in SAMPLE_S {
        let (mut sup, mut near) = (0f64, 0f64);
        for i in 0..41 {
            for j in 0..41 {
                let v = -12.0 + 0.6 * i as f64;
                let xi = -6.0 + 0.3 * j as f64;
                let p = PhasePoint::one_d(v, xi);
                let w = l2_symbol(&p, s)?.abs() * (p.q() / 3.0).exp();
                sup = sup.max(w);
                if p.q() <= 1.0 {
                    near = near.max(w);
                }
            }
        }
        ok &= sup.is_finite() && sup <= 2.0 * near;
        detail.push(format!("s={s}: sup/near = {:.4}", sup / near));
    }
    outcome(ok, detail.join(", "))
}

fn coercivity() -> Result<Outcome> {
    let kmax = 200;
    let spectrum = KacSpectrum::compute(0.5, kmax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut c_min = f64::NAN;
    let mut ok = true;
    for _ in 0..100 {
        let c: Vec<f64> = (0..=kmax).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = coercivity_check_with(&HermiteCoeffs::from_real(&c), &spectrum)?;
        ok &= r.holds && r.c_min > 0.0;
        c_min = r.c_min;
    }
    outcome(ok, format!("100 vectors, c_min = {c_min:.6}"))
}

/// Fits `a λ^s + b + Σ_j e_j λ^{s−j}` to `l_{1;d}` on the dyadic grid and
/// returns `(a, −b)`.
fn fitted_leading(s: f64, d: usize) -> Result<(f64, f64)> {
    let lambdas = dyadic_lambdas();
    let tol = kacspec::singular_quadrature::Tolerance::new(0.0, 4.0 * f64::EPSILON);
    let exps = [s, 0.0, s - 1.0, s - 2.0];
    let mut design = DMatrix::zeros(lambdas.len(), exps.len());
    let mut rhs = DVector::zeros(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        rhs[i] = l1_radial(l - 1.0, s, d, tol)?;
        for (j, e) in exps.iter().enumerate() {
            design[(i, j)] = l.powf(*e);
        }
    }
    let scales: Vec<f64> = (0..exps.len()).map(|j| design.column(j).amax()).collect();
    for (j, sc) in scales.iter().enumerate() {
        design.column_mut(j).unscale_mut(*sc);
    }
    let sol = design.svd(true, true).solve(&rhs, 1e-15).expect("fit");
    Ok((sol[0] / scales[0], -sol[1] / scales[1]))
}

fn dimension_independence() -> Result<Outcome> {
    let mut worst = 0f64;
    for s in SAMPLE_S {
        let (c, dd) = (c0(s)?, d0(s)?);
        for d in 1..=3 {
            let (fc, fd) = fitted_leading(s, d)?;
            worst = worst.max(((fc - c) / c).abs()).max(((fd - dd) / dd).abs());
        }
    }
    outcome(worst <= 0.02, format!("max relative gap of fitted c0, d0 = {worst:.3e}"))
}

fn main() {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check, Duration); 12] = [
        ("kernel modes vanish", kernel_modes, Duration::from_secs(1)),
        ("closed-form spot value", closed_form_spot, Duration::from_secs(1)),
        ("leading growth constant", leading_growth, Duration::from_secs(10)),
        ("constant term identity", constant_term, Duration::from_secs(5)),
        ("exponential bound on second part", exponential_bound, Duration::from_secs(5)),
        ("Mehler diagonalization", mehler_diagonal, Duration::from_secs(60)),
        ("symbol/spectrum consistency", symbol_spectrum_consistency, Duration::from_secs(300)),
        ("three routes agree", three_routes, Duration::from_secs(120)),
        ("expansion residual scaling", residual_scaling, Duration::from_secs(60)),
        ("Gaussian decay of second symbol", gaussian_decay, Duration::from_secs(30)),
        ("coercivity sandwich", coercivity, Duration::from_secs(10)),
        ("dimension independence", dimension_independence, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(o) => (o.ok, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let on_time = elapsed <= *budget;
        let pass = ok && on_time;
        failures += usize::from(!pass);
        let timing = if on_time { String::new() } else { format!(" [over budget {budget:?}]") };
        println!(
            "{} {:>2} {name}: {detail} ({:.2}s){timing}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
