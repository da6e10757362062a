//! Model parameters, the Efimov function and the mass thresholds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::legendre::{legendre_moment, y_integral};
use crate::numerics::quad::{converge, gauss_rule, geometric_edges};

/// Couplings of the three-body problem at mass ratio `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m: f64,
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
    pub alpha: f64,
}

pub fn derive_params(m: f64, lambda: f64, alpha: f64) -> Result<ModelParams> {
    if !(m > 0.0 && m.is_finite()) {
        return domain(format!("mass ratio must be positive, got {m}"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !alpha.is_finite() {
        return domain("alpha must be finite; the Friedrichs case is selected in `extensions`");
    }
    let mu = 2.0 / (m + 1.0);
    let nu = m * (m + 2.0) / ((m + 1.0) * (m + 1.0));
    Ok(ModelParams { m, mu, nu, lambda, alpha })
}

impl ModelParams {
    pub fn new(m: f64, lambda: f64, alpha: f64) -> Result<Self> {
        derive_params(m, lambda, alpha)
    }
}

/// `Λ(m) = (2/π)(m+1)²(1/√(m(m+2)) − arcsin(1/(m+1)))`.
pub fn efimov_lambda(m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return domain(format!("efimov_lambda needs m > 0, got {m}"));
    }
    let x = 1.0 / (m + 1.0);
    // With x = 1/(m+1) the bracket is x/√(1−x²) − arcsin x.
    let bracket = if x < 0.25 {
        let x2 = x * x;
        let mut c = 1.0;
        let mut xp = x;
        let mut sum = 0.0;
        for k in 1..80 {
            let kf = k as f64;
            c *= (2.0 * kf - 1.0) / (2.0 * kf);
            xp *= x2;
            let term = c * 2.0 * kf / (2.0 * kf + 1.0) * xp;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        1.0 / (m * (m + 2.0)).sqrt() - x.asin()
    };
    Ok(2.0 / PI * bracket / (x * x))
}

/// `G_ℓ(r; μ) = ∫ P_ℓ(y)/(r² + 1 + μ r y) dy`.
pub fn g_ell(ell: usize, r: f64, mu: f64) -> f64 {
    y_integral(ell, r * r + 1.0, mu * r, 1)
}

/// `∫_0^∞ r^s G_ℓ(r; μ) dr`, convergent for `|s| < ℓ + 1`.
///
/// Uses `G_ℓ(1/t) = t² G_ℓ(t)` to fold `(1, ∞)` onto `(0, 1]`, then geometric
/// Gauss panels with an analytic leading-order remainder near the origin.
pub fn mellin_integral(ell: usize, s: f64, mu: f64, rel_tol: f64) -> Result<f64> {
    let l1 = ell as f64 + 1.0;
    if !(s.abs() < l1) {
        return domain(format!("Mellin integral of sector {ell} diverges at s = {s}"));
    }
    let t0: f64 = 1e-13;
    // G_ℓ(t) ≈ (−μt)^ℓ M_ℓℓ as t → 0.
    let lead = (-mu).powi(ell as i32) * legendre_moment(ell, ell);
    let remainder = lead * (t0.powf(l1 + s) / (l1 + s) + t0.powf(l1 - s) / (l1 - s));
    let rule = gauss_rule(12);
    converge("Mellin integral", rel_tol, 1.0, 8, |level| {
        let edges = geometric_edges(t0, 1.0, 26 << level);
        let mut sum = remainder;
        for e in edges.windows(2) {
            sum += rule.integrate(e[0], e[1], |t| (t.powf(s) + t.powf(-s)) * g_ell(ell, t, mu));
        }
        sum
    })
}

/// `∫_0^x r^s G_ℓ(r; μ) dr` for `x > 0`.
pub fn partial_mellin(ell: usize, s: f64, mu: f64, x: f64, rel_tol: f64) -> Result<f64> {
    let l1 = ell as f64 + 1.0;
    if !(x > 0.0) {
        return domain(format!("partial Mellin integral needs x > 0, got {x}"));
    }
    if x > 1.0 {
        // ∫_0^x = total − ∫_x^∞ = total − ∫_0^{1/x} t^{-s} G_ℓ(t) dt.
        let total = mellin_integral(ell, s, mu, rel_tol)?;
        return Ok(total - folded_head(ell, -s, mu, 1.0 / x, rel_tol)?);
    }
    if !(s > -l1) {
        return domain(format!("partial Mellin integral diverges at the origin for s = {s}"));
    }
    folded_head(ell, s, mu, x, rel_tol)
}

/// `∫_0^x t^s G_ℓ(t) dt` for `0 < x ≤ 1`, `s > −ℓ − 1`.
fn folded_head(ell: usize, s: f64, mu: f64, x: f64, rel_tol: f64) -> Result<f64> {
    let l1 = ell as f64 + 1.0;
    if !(s > -l1) {
        return domain(format!("Mellin head integral diverges for s = {s}"));
    }
    let t0: f64 = (1e-13f64).min(1e-3 * x);
    let lead = (-mu).powi(ell as i32) * legendre_moment(ell, ell);
    let remainder = lead * t0.powf(l1 + s) / (l1 + s);
    let rule = gauss_rule(12);
    let n0 = ((x / t0).log10() * 2.2).ceil() as usize;
    converge("Mellin head integral", rel_tol, 1e-300_f64.max(remainder.abs()), 8, |level| {
        let edges = geometric_edges(t0, x, n0 << level);
        let mut sum = remainder;
        for e in edges.windows(2) {
            sum += rule.integrate(e[0], e[1], |t| t.powf(s) * g_ell(ell, t, mu));
        }
        sum
    })
}

/// Relative tolerance of the `C(s, m)` quadrature.
pub const C_REL_TOL: f64 = 1e-11;

/// `C(s, m) = π√ν + ∫_0^∞ r^s G₁(r; μ) dr`.
pub fn cancellation_c(s: f64, m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return domain(format!("cancellation_C needs s in [0, 1], got {s}"));
    }
    sector_symbol_unchecked(1, s, m)
}

/// `π√ν + ∫ r^s G_ℓ(r) dr` for any sector and `|s| < ℓ + 1`.
pub(crate) fn sector_symbol_unchecked(ell: usize, s: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return domain(format!("mass ratio must be positive, got {m}"));
    }
    let mu = 2.0 / (m + 1.0);
    let nu = m * (m + 2.0) / ((m + 1.0) * (m + 1.0));
    Ok(PI * nu.sqrt() + mellin_integral(ell, s, mu, C_REL_TOL)?)
}

/// Outcome of a bracketed scalar root search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Bisection safeguarded secant iteration on `[lo, hi]`.
pub fn find_root(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { lo, hi, f_lo: fa, f_hi: fb });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 1..=200 {
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        // Alternate: secant when it lands well inside, bisection otherwise.
        let x = if it % 3 != 0 && secant > a.min(b) && secant < a.max(b) { secant } else { mid };
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= tol || (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Ok(Root { x: best.0, residual: best.1.abs(), iterations: it });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Err(Error::NotConverged { what: "root search", estimate: best.0, error: best.1.abs() })
}

/// Bracket used for all threshold searches in `m`.
pub const M_BRACKET: (f64, f64) = (1e-3, 1.0);

/// Residual tolerance on `Λ − 1`.
pub const LAMBDA_TOL: f64 = 1e-10;
/// Residual tolerance on `C`.
pub const C_TOL: f64 = 1e-8;

pub fn solve_m_star(tol: f64) -> Result<Root> {
    find_root(|m| Ok(efimov_lambda(m)? - 1.0), M_BRACKET.0, M_BRACKET.1, tol)
}

/// `m(s)`: the mass at which `C(s, m) = 0`.
pub fn solve_m_of_s(s: f64) -> Result<Root> {
    solve_m_of_s_tol(s, C_TOL)
}

pub fn solve_m_of_s_tol(s: f64, tol: f64) -> Result<Root> {
    if !(0.0..=1.0).contains(&s) {
        return domain(format!("solve_m_of_s needs s in [0, 1], got {s}"));
    }
    find_root(|m| cancellation_c(s, m), M_BRACKET.0, M_BRACKET.1, tol)
}

/// `s(m)`: inverse of [`solve_m_of_s`], defined for `m* < m < m**`.
pub fn solve_s_of_m(m: f64) -> Result<Root> {
    solve_s_of_m_tol(m, C_TOL)
}

pub fn solve_s_of_m_tol(m: f64, tol: f64) -> Result<Root> {
    find_root(|s| cancellation_c(s, m), 0.0, 1.0, tol).map_err(|e| match e {
        Error::NotBracketed { f_lo, f_hi, .. } => Error::Domain(format!(
            "m = {m} lies outside (m*, m**): C(0, m) = {f_lo:e}, C(1, m) = {f_hi:e} on the bracket [0, 1]"
        )),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Root of `Λ(m) = 1`.
    pub m_star: f64,
    /// `m(1)`.
    pub m_star_star: f64,
    /// `m(1/2)`.
    pub m_minlos: f64,
    /// `m(0)`, the second characterization of `m_star`.
    pub m_of_zero: f64,
    /// Residuals of the four roots, in the order above.
    pub residuals: [f64; 4],
    pub iterations: [usize; 4],
    /// `|m(0) − m_star| / m_star`.
    pub cross_consistency: f64,
}

impl ThresholdReport {
    pub fn ordered(&self) -> bool {
        self.m_star < self.m_minlos && self.m_minlos < self.m_star_star
    }
}

pub fn thresholds() -> Result<ThresholdReport> {
    thresholds_with(LAMBDA_TOL, C_TOL)
}

pub fn thresholds_with(lambda_tol: f64, c_tol: f64) -> Result<ThresholdReport> {
    let star = solve_m_star(lambda_tol)?;
    let one = solve_m_of_s_tol(1.0, c_tol)?;
    let half = solve_m_of_s_tol(0.5, c_tol)?;
    let zero = solve_m_of_s_tol(0.0, c_tol)?;
    Ok(ThresholdReport {
        m_star: star.x,
        m_star_star: one.x,
        m_minlos: half.x,
        m_of_zero: zero.x,
        residuals: [star.residual, one.residual, half.residual, zero.residual],
        iterations: [star.iterations, one.iterations, half.iterations, zero.iterations],
        cross_consistency: (zero.x - star.x).abs() / star.x,
    })
}
