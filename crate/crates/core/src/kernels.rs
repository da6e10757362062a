//! Radial kernels of the sector operators `T_λ^{(ℓ)}` and `W_λ^{(ℓ)}`.
//!
//! With `A = r² + r'² + λ` and `B = μ r r'`, the Funk–Hecke reduction of
//! `∫ ξ̂(q)/(p² + q² + μ p·q + λ)^k dq` in sector `ℓ` gives
//! `2π ∫ r'² f(r') ∫ P_ℓ(y)/(A + B y)^k dy dr'`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::legendre::{y_integral, y_integrals, MAX_ELL};
use crate::numerics::quad::{gauss_rule, geometric_edges};
use crate::numerics::Charge;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub ell: usize,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl KernelSpec {
    pub fn new(params: &ModelParams, ell: usize) -> Result<Self> {
        if ell > MAX_ELL {
            return domain(format!("ell = {ell} exceeds the supported maximum {MAX_ELL}"));
        }
        Ok(KernelSpec { ell, lambda: params.lambda, mu: params.mu, nu: params.nu, alpha: params.alpha })
    }

    /// Spec at mass `m`; `lambda = 0` is accepted for kernel-level work.
    pub fn from_mass(m: f64, lambda: f64, alpha: f64, ell: usize) -> Result<Self> {
        if !(lambda >= 0.0) {
            return domain(format!("lambda must be non-negative, got {lambda}"));
        }
        let p = ModelParams::new(m, lambda.max(1.0), alpha)?;
        Ok(KernelSpec { lambda, ..KernelSpec::new(&p, ell)? })
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        KernelSpec { alpha, ..self }
    }

    pub fn with_ell(self, ell: usize) -> Self {
        KernelSpec { ell, ..self }
    }

    /// Mass ratio recovered from `μ = 2/(m+1)`.
    pub fn mass(&self) -> f64 {
        2.0 / self.mu - 1.0
    }

    #[inline]
    fn ab(&self, r: f64, rp: f64) -> (f64, f64) {
        (r * r + rp * rp + self.lambda, self.mu * r * rp)
    }

    /// Off-diagonal `T` kernel without argument checks.
    #[inline]
    pub fn t(&self, r: f64, rp: f64) -> f64 {
        let (a, b) = self.ab(r, rp);
        2.0 * PI * rp * rp * y_integral(self.ell, a, b, 1)
    }

    /// Off-diagonal `W` kernel without argument checks.
    #[inline]
    pub fn w(&self, r: f64, rp: f64) -> f64 {
        let (a, b) = self.ab(r, rp);
        -4.0 * PI * rp * rp * y_integral(self.ell, a, b, 2)
    }

    /// `(T, W)` kernels sharing one Legendre evaluation.
    #[inline]
    pub fn tw(&self, r: f64, rp: f64) -> (f64, f64) {
        let (a, b) = self.ab(r, rp);
        let (k1, k2) = y_integrals(self.ell, a, b);
        let c = 2.0 * PI * rp * rp;
        (c * k1, -2.0 * c * k2)
    }
}

fn check_radii(r: f64, rp: f64) -> Result<()> {
    if r > 0.0 && rp > 0.0 && r.is_finite() && rp.is_finite() {
        Ok(())
    } else {
        domain(format!("kernel radii must be positive, got ({r}, {rp})"))
    }
}

/// Integral part of `T_λ^{(ℓ)}` acting on radial functions against `dr`.
pub fn kernel_t(spec: &KernelSpec, r: f64, rp: f64) -> Result<f64> {
    check_radii(r, rp)?;
    Ok(spec.t(r, rp))
}

/// Integral part of `W_λ^{(ℓ)}` acting on radial functions against `dr`.
pub fn kernel_w(spec: &KernelSpec, r: f64, rp: f64) -> Result<f64> {
    check_radii(r, rp)?;
    Ok(spec.w(r, rp))
}

/// `2π²√(νr² + λ) + α`.
pub fn diag_t(spec: &KernelSpec, r: f64) -> f64 {
    2.0 * PI * PI * (spec.nu * r * r + spec.lambda).sqrt() + spec.alpha
}

/// `2π²/√(νr² + λ)`.
pub fn diag_w(spec: &KernelSpec, r: f64) -> f64 {
    2.0 * PI * PI / (spec.nu * r * r + spec.lambda).sqrt()
}

/// Truncated-ball building blocks at `|p₁| = p1`, power `k = 1` or `2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallIntegrals {
    /// `∫_{|q|<R} D^{-k} dq`.
    pub free: f64,
    /// `∫_{|q|<R} f(|q|) Y_{ℓn}(Ω_q) D^{-k} dq / Y_{ℓn}(Ω_{p₁})`.
    pub charged: f64,
}

pub fn ball_integrals(spec: &KernelSpec, p1: f64, big_r: f64, charge: &Charge, squared: bool) -> Result<BallIntegrals> {
    let power = if squared { 2 } else { 1 };
    Ok(BallIntegrals {
        free: ball_free(spec, p1, big_r, power)?,
        charged: ball_charge(spec, p1, big_r, charge, power)?,
    })
}

fn check_ball(p1: f64, big_r: f64, power: u32) -> Result<()> {
    if !(p1 > 0.0 && big_r > 0.0) {
        return domain(format!("ball integral needs p1 > 0 and R > 0, got ({p1}, {big_r})"));
    }
    if power != 1 && power != 2 {
        return domain("ball integral power must be 1 or 2");
    }
    Ok(())
}

/// `∫_{|q|<R} (p₁² + q² + μ p₁·q + λ)^{-k} dq`.
pub fn ball_free(spec: &KernelSpec, p1: f64, big_r: f64, power: u32) -> Result<f64> {
    check_ball(p1, big_r, power)?;
    let rule = gauss_rule(16);
    let lo = (1e-8 * big_r).min(1e-8);
    let n = ((big_r / lo).log10() * 4.0).ceil() as usize;
    let mut total = 0.0;
    for e in geometric_edges(lo, big_r, n).windows(2) {
        total += rule.integrate(e[0], e[1], |q| {
            q * q * y_integral(0, p1 * p1 + q * q + spec.lambda, spec.mu * p1 * q, power)
        });
    }
    Ok(2.0 * PI * total)
}

/// `∫_{|q|<R} f(|q|) Y(Ω_q) D^{-k} dq / Y(Ω_{p₁})`, panel by panel on the
/// charge's own grid so that the interpolant is integrated exactly.
pub fn ball_charge(spec: &KernelSpec, p1: f64, big_r: f64, charge: &Charge, power: u32) -> Result<f64> {
    check_ball(p1, big_r, power)?;
    let grid = &charge.grid;
    if big_r > grid.r_max() * (1.0 + 1e-12) {
        return domain(format!("R = {big_r} exceeds the grid coverage {}", grid.r_max()));
    }
    let rule = gauss_rule(20);
    let integrand = |q: f64| {
        let a = p1 * p1 + q * q + spec.lambda;
        q * q * charge.eval(q) * y_integral(spec.ell, a, spec.mu * p1 * q, power)
    };
    let mut total = 0.0;
    for e in grid.edges.windows(2) {
        if e[0] >= big_r {
            break;
        }
        total += rule.integrate(e[0], e[1].min(big_r), integrand);
    }
    Ok(2.0 * PI * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(ell: usize, lambda: f64) -> KernelSpec {
        KernelSpec::from_mass(1.0, lambda, 0.0, ell).unwrap()
    }

    #[test]
    fn reference_values() {
        let t1 = kernel_t(&unit(1, 0.0), 1.0, 1.0).unwrap();
        assert!((t1 + 4.0 * PI * (3f64.ln() - 1.0)).abs() < 1e-13);
        let t0 = kernel_t(&unit(0, 0.0), 1.0, 1.0).unwrap();
        assert!((t0 - 2.0 * PI * 3f64.ln()).abs() < 1e-13);
        let w0 = kernel_w(&unit(0, 0.0), 1.0, 1.0).unwrap();
        assert!((w0 + 4.0 * PI * 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn small_b_limits() {
        let s = unit(1, 1.0);
        assert!(kernel_t(&s, 1.0, 1e-9).unwrap().abs() < 1e-25);
        assert!(kernel_w(&s, 1.0, 1e-9).unwrap().abs() < 1e-25);
        assert!(kernel_t(&s, 0.0, 1.0).is_err());
    }

    #[test]
    fn diagonals() {
        let s = unit(0, 1.0);
        assert!((diag_t(&s, 0.0) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((diag_w(&s, 0.0) - 2.0 * PI * PI).abs() < 1e-14);
        let s5 = s.with_alpha(-5.0);
        assert!((diag_t(&s5, 2.0) - (2.0 * PI * PI * 2.0 - 5.0)).abs() < 1e-13);
    }

    #[test]
    fn tw_matches_separate_evaluations() {
        let s = KernelSpec::from_mass(0.09, 1.0, 0.0, 2).unwrap();
        for &(r, rp) in &[(0.3, 2.0), (5.0, 5.1), (1e-3, 40.0)] {
            let (t, w) = s.tw(r, rp);
            assert_eq!(t, s.t(r, rp));
            assert_eq!(w, s.w(r, rp));
        }
    }

    #[test]
    fn free_ball_limits() {
        let s = unit(0, 1.0);
        let nu: f64 = 0.75;
        let root = (nu + 1.0).sqrt();
        // ∫ dq/D² over R³ = π²/√(νp²+λ)
        let big = 1e7;
        let inf = ball_free(&s, 1.0, big, 2).unwrap() + 4.0 * PI / big;
        assert!((inf - PI * PI / root).abs() < 1e-9);
        // ∫_{|q|<R} dq/D = 4πR − 2π²√(νp²+λ) + O(1/R)
        let big = 1e5;
        let v = ball_free(&s, 1.0, big, 1).unwrap();
        assert!((v - 4.0 * PI * big + 2.0 * PI * PI * root).abs() < 1e-3);
    }
}
