//! Weyl symbols of the linearized operators and of the oscillator semigroup,
//! and the large-`λ` expansion of the principal symbol.
//!
//! All symbols here are radial: they depend on a phase point only through
//! `q = |ξ|² + |v|²/4`, equivalently `λ = 1 + q`. The `*_radial` functions
//! take `q` directly; the point-based wrappers validate dimensions.

use crate::core_math::gamma;
use crate::error::{KacError, Result};
use crate::singular_quadrature::{CrossSection, Excess, HalfAngle, Tolerance};
use crate::spectrum::{c0, d0};
use nalgebra::{DMatrix, DVector};

/// Exponents below this are flushed to zero before exponentiation.
pub const EXP_FLOOR: f64 = -700.0;

fn safe_exp(x: f64) -> f64 {
    if x < EXP_FLOOR {
        0.0
    } else {
        x.exp()
    }
}

/// Accuracy request for symbol evaluation.
pub fn default_tolerance() -> Tolerance {
    Tolerance::new(1e-13, 1e-14)
}

/// A point `(v, ξ) ∈ ℝ^d × ℝ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    v: Vec<f64>,
    xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(v: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if v.is_empty() || v.len() != xi.len() {
            return Err(KacError::Domain(format!(
                "phase point needs matching non-empty v and ξ, got dimensions {} and {}",
                v.len(),
                xi.len()
            )));
        }
        Ok(Self { v, xi })
    }

    pub fn one_d(v: f64, xi: f64) -> Self {
        Self { v: vec![v], xi: vec![xi] }
    }

    pub fn origin(d: usize) -> Self {
        Self { v: vec![0.0; d.max(1)], xi: vec![0.0; d.max(1)] }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `|ξ|² + |v|²/4`.
    pub fn q(&self) -> f64 {
        self.xi.iter().map(|x| x * x).sum::<f64>() + 0.25 * self.v.iter().map(|x| x * x).sum::<f64>()
    }

    /// `1 + |ξ|² + |v|²/4`.
    pub fn lambda(&self) -> f64 {
        1.0 + self.q()
    }

    fn expect_dim(&self, d: usize) -> Result<()> {
        if d == 0 || self.dim() != d {
            return Err(KacError::Domain(format!("phase point has dimension {}, expected {d}", self.dim())));
        }
        Ok(())
    }
}

/// Weyl symbol of `e^{−tH}`: `exp(−2 tanh(t/2) q) / cosh^d(t/2)`.
pub fn mehler_radial(t: f64, q: f64, d: usize) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(KacError::Domain(format!("semigroup time must be finite and ≥ 0, got {t}")));
    }
    let half = 0.5 * t;
    Ok(safe_exp(-2.0 * half.tanh() * q - d as f64 * half.cosh().ln()))
}

pub fn mehler_symbol(t: f64, p: &PhasePoint, d: usize) -> Result<f64> {
    p.expect_dim(d)?;
    mehler_radial(t, p.q(), d)
}

/// `l_{1;d}` as a function of `q`.
///
/// The bracket `1 − e^{−2 tan²(θ/2) q}/cos^{2d}(θ/2)` is evaluated as
/// `−expm1(−2q t/(1−t) − d ln(1−t))` with `t = sin²(θ/2)`.
pub fn l1_radial(q: f64, s: f64, d: usize, tol: Tolerance) -> Result<f64> {
    let cs = CrossSection::new(s)?;
    let df = d as f64;
    let test = Excess(move |a: HalfAngle| {
        let t = a.t();
        let expo = -2.0 * q * t / (1.0 - t) - df * (-t).ln_1p();
        if expo < EXP_FLOOR {
            1.0
        } else {
            -expo.exp_m1()
        }
    });
    Ok(cs.fp_integrate_with(&test, tol)?.value)
}

/// `l_{2;d}` as a function of `q`.
///
/// With `σ = sin θ` the bracket is
/// `2^d e^{−2q} − 2^{d−1}[A(σ) + A(−σ)]`, `A(σ) = e^{−2q(1−σ)/(1+σ)}/(1+σ)^d`.
/// Writing `A(±σ) = e^{−2q} e^{S ± D}` turns it into
/// `−2^d e^{−2q}[2 e^S sinh²(D/2) + expm1(S)]`, free of cancellation near 0.
pub fn l2_radial(q: f64, s: f64, d: usize, tol: Tolerance) -> Result<f64> {
    let cs = CrossSection::new(s)?;
    let df = d as f64;
    let pref = 2f64.powi(d as i32);
    let test = Excess(move |a: HalfAngle| {
        let sigma = a.sin_theta();
        let sig2 = sigma * sigma;
        let big_s = -4.0 * q * sig2 / (1.0 - sig2) - 0.5 * df * (-sig2).ln_1p();
        let big_d = (4.0 * q * sigma / (1.0 - sig2) - df * sigma.atanh()).abs();
        let base = big_s - 2.0 * q;
        let hyper = if big_d < 1.0 {
            2.0 * (0.5 * big_d).sinh().powi(2) * safe_exp(base)
        } else {
            0.5 * safe_exp(base + big_d) + 0.5 * safe_exp(base - big_d) - safe_exp(base)
        };
        -pref * (hyper + big_s.exp_m1() * safe_exp(-2.0 * q))
    });
    Ok(cs.fp_integrate_with(&test, tol)?.value)
}

pub fn l1_symbol(p: &PhasePoint, s: f64) -> Result<f64> {
    l1_symbol_d(p, s, 1)
}

pub fn l2_symbol(p: &PhasePoint, s: f64) -> Result<f64> {
    l2_symbol_d(p, s, 1)
}

pub fn l1_symbol_d(p: &PhasePoint, s: f64, d: usize) -> Result<f64> {
    p.expect_dim(d)?;
    l1_radial(p.q(), s, d, default_tolerance())
}

pub fn l2_symbol_d(p: &PhasePoint, s: f64, d: usize) -> Result<f64> {
    p.expect_dim(d)?;
    l2_radial(p.q(), s, d, default_tolerance())
}

/// `l_{1;d} + l_{2;d}`.
pub fn full_symbol(p: &PhasePoint, s: f64, d: usize) -> Result<f64> {
    Ok(l1_symbol_d(p, s, d)? + l2_symbol_d(p, s, d)?)
}

/// How a stored expansion coefficient was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// From the Taylor-series construction.
    Constructive,
    /// From a least-squares fit of computed symbol values.
    Fitted,
}

/// `c₀ λ^s − d₀ + Σ_{1≤j≤N} c_j λ^{s−j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticExpansion {
    s: f64,
    d: usize,
    c0: f64,
    d0: f64,
    coefficients: Vec<f64>,
    provenance: Vec<Provenance>,
    fitted: Vec<Option<f64>>,
}

impl AsymptoticExpansion {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    /// `c_j` for `1 ≤ j ≤ N`.
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients[j - 1]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn provenance(&self, j: usize) -> Provenance {
        self.provenance[j - 1]
    }

    /// The fitted value of `c_j`, when the fit route resolved it.
    pub fn fitted(&self, j: usize) -> Option<f64> {
        self.fitted.get(j - 1).copied().flatten()
    }

    /// The expansion truncated after `λ^{s−n}` (`n = 0`: `c₀λ^s − d₀`).
    pub fn eval(&self, lambda: f64, n: usize) -> f64 {
        let n = n.min(self.order());
        let mut acc = self.c0 * lambda.powf(self.s) - self.d0;
        for j in 1..=n {
            acc += self.coefficients[j - 1] * lambda.powf(self.s - j as f64);
        }
        acc
    }
}

/// Taylor coefficients of `(1+z)^α e^{2z}` up to `z^n`.
pub fn kappa_taylor(alpha: f64, n: usize) -> Vec<f64> {
    let mut binom = vec![1.0; n + 1];
    let mut expo = vec![1.0; n + 1];
    for i in 1..=n {
        binom[i] = binom[i - 1] * (alpha - (i - 1) as f64) / i as f64;
        expo[i] = expo[i - 1] * 2.0 / i as f64;
    }
    (0..=n).map(|j| (0..=j).map(|i| binom[i] * expo[j - i]).sum()).collect()
}

/// Coefficient of `λ^{s−m}` contributed by the principal part of the
/// symbol, which carries the factor `(λ − 1)λ^{s−j−1}`:
/// `b_m − b_{m−1}` with `b_j = 2^{1+s−j} Γ(1+j−s) a_{j,d} / s`.
pub fn principal_series(s: f64, d: usize, n: usize) -> Result<Vec<f64>> {
    let a = kappa_taylor(s + d as f64 - 1.0, n);
    let b: Vec<f64> = (0..=n)
        .map(|j| Ok(2f64.powf(1.0 + s - j as f64) * gamma(1.0 + j as f64 - s)? * a[j] / s))
        .collect::<Result<_>>()?;
    Ok((0..=n).map(|m| b[m] - if m > 0 { b[m - 1] } else { 0.0 }).collect())
}

/// Coefficient of `λ^{s−m}` contributed by the secondary part (leading order
/// `λ^{s−1}`): `−((s+d−1)/s) 2^{s−m+1} Γ(m−s) a'_{m−1,d}`, where `a'` are the
/// Taylor coefficients of `(1+z)^{s+d−2} e^{2z}`.
pub fn secondary_series(s: f64, d: usize, n: usize) -> Result<Vec<f64>> {
    let a = kappa_taylor(s + d as f64 - 2.0, n);
    let lead = (s + d as f64 - 1.0) / s;
    (0..=n)
        .map(|m| {
            if m == 0 {
                return Ok(0.0);
            }
            Ok(-lead * 2f64.powf(s - m as f64 + 1.0) * gamma(m as f64 - s)? * a[m - 1])
        })
        .collect()
}

/// `[c₀, c₁, .., c_N]` from the two series.
pub fn constructive_coefficients(s: f64, d: usize, n: usize) -> Result<Vec<f64>> {
    CrossSection::new(s)?;
    let p = principal_series(s, d, n)?;
    let q = secondary_series(s, d, n)?;
    Ok(p.iter().zip(&q).map(|(a, b)| a + b).collect())
}

/// Dyadic `λ` grid `100·2^{i/2}` up to `10⁶`.
pub fn dyadic_lambdas() -> Vec<f64> {
    (0..=26).map(|i| 100.0 * 2f64.powf(0.5 * i as f64)).collect()
}

/// `l_{1;d}(λ) − (c₀λ^s − d₀)` at high accuracy.
pub fn leading_residual(lambda: f64, s: f64, d: usize) -> Result<f64> {
    let tol = Tolerance::new(0.0, 4.0 * f64::EPSILON);
    Ok(l1_radial(lambda - 1.0, s, d, tol)? - (c0(s)? * lambda.powf(s) - d0(s)?))
}

/// Least-squares estimates of `c₁ .. c_J` from residuals on `lambdas`,
/// modelling `residual/λ^{s−1}` as a polynomial of degree `J−1` in `1/λ`.
pub fn fitted_coefficients(s: f64, d: usize, terms: usize, lambdas: &[f64]) -> Result<Vec<f64>> {
    if terms == 0 || lambdas.len() < terms {
        return Err(KacError::Domain(format!("cannot fit {terms} terms from {} samples", lambdas.len())));
    }
    let x_max = lambdas.iter().map(|l| 1.0 / l).fold(0.0, f64::max);
    let mut design = DMatrix::zeros(lambdas.len(), terms);
    let mut rhs = DVector::zeros(lambdas.len());
    for (i, &lam) in lambdas.iter().enumerate() {
        rhs[i] = leading_residual(lam, s, d)? / lam.powf(s - 1.0);
        for j in 0..terms {
            design[(i, j)] = (1.0 / (lam * x_max)).powi(j as i32);
        }
    }
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| KacError::Accuracy(format!("least-squares fit failed: {e}")))?;
    Ok((0..terms).map(|j| sol[j] / x_max.powi(j as i32)).collect())
}

/// Relative agreement demanded between the two routes for `c₁`, `c₂`.
pub const FIT_AGREEMENT: [f64; 2] = [0.01, 0.05];

/// Expansion of `l_{1;d}` through order `N ≤ 6`. Constructive values are
/// stored; `c₁` and `c₂` are checked against a fit and a disagreement is an
/// error.
pub fn expansion_coefficients_d(s: f64, d: usize, n: usize) -> Result<AsymptoticExpansion> {
    if n > 6 {
        return Err(KacError::Capability(format!("expansion order {n} exceeds 6")));
    }
    if d == 0 {
        return Err(KacError::Domain("dimension must be ≥ 1".into()));
    }
    let all = constructive_coefficients(s, d, n)?;
    let checked = n.min(FIT_AGREEMENT.len());
    let mut fitted = vec![None; n];
    if checked > 0 {
        let fit = fitted_coefficients(s, d, 4, &dyadic_lambdas())?;
        for j in 1..=checked {
            let (cons, fv) = (all[j], fit[j - 1]);
            let rel = ((cons - fv) / cons).abs();
            if rel > FIT_AGREEMENT[j - 1] {
                return Err(KacError::Consistency(format!(
                    "c_{j}: constructive {cons:.10e} vs fitted {fv:.10e} (relative gap {rel:.2e})"
                )));
            }
            fitted[j - 1] = Some(fv);
        }
    }
    Ok(AsymptoticExpansion {
        s,
        d,
        c0: c0(s)?,
        d0: d0(s)?,
        coefficients: all[1..].to_vec(),
        provenance: vec![Provenance::Constructive; n],
        fitted,
    })
}

pub fn expansion_coefficients(s: f64, n: usize) -> Result<AsymptoticExpansion> {
    expansion_coefficients_d(s, 1, n)
}

/// One sample of the symbol-grid export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolSample {
    pub v: f64,
    pub xi: f64,
    pub lambda: f64,
    pub l1: f64,
    pub l2: f64,
    pub expansion: f64,
    pub residual: f64,
}

/// `l₁`, `l₂` and the order-`N` expansion on a `points × points` grid over
/// `[−v_max, v_max] × [−ξ_max, ξ_max]`, `d = 1`.
pub fn symbol_grid(s: f64, v_max: f64, xi_max: f64, points: usize, order: usize) -> Result<Vec<SymbolSample>> {
    use rayon::prelude::*;
    let expansion = AsymptoticExpansion {
        s,
        d: 1,
        c0: c0(s)?,
        d0: d0(s)?,
        coefficients: constructive_coefficients(s, 1, order)?[1..].to_vec(),
        provenance: vec![Provenance::Constructive; order],
        fitted: vec![None; order],
    };
    let axis = |max: f64, i: usize| if points == 1 { 0.0 } else { -max + 2.0 * max * i as f64 / (points - 1) as f64 };
    (0..points * points)
        .into_par_iter()
        .map(|idx| {
            let (v, xi) = (axis(v_max, idx / points), axis(xi_max, idx % points));
            let q = xi * xi + 0.25 * v * v;
            let l1 = l1_radial(q, s, 1, default_tolerance())?;
            let l2 = l2_radial(q, s, 1, default_tolerance())?;
            let e = expansion.eval(1.0 + q, order);
            Ok(SymbolSample { v, xi, lambda: 1.0 + q, l1, l2, expansion: e, residual: l1 - e })
        })
        .collect()
}
