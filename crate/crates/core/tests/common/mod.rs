//! Independent quadrature oracles shared by the integration tests.

#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Double-exponential quadrature over `n` equal pieces of `[a, b]`.
pub fn de(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, tol: f64) -> f64 {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let lo = a + h * k as f64;
            quadrature::double_exponential::integrate(&f, lo, lo + h, tol / n as f64).integral
        })
        .sum()
}

/// Explicit Legendre polynomials, `ℓ ≤ 3`.
pub fn legendre(ell: usize, x: f64) -> f64 {
    match ell {
        0 => 1.0,
        1 => x,
        2 => 0.5 * (3.0 * x * x - 1.0),
        3 => 0.5 * (5.0 * x * x * x - 3.0 * x),
        _ => panic!("oracle covers ell <= 3"),
    }
}

/// `μ`, `ν` from the mass ratio, written out independently of the library.
pub fn mu_nu(m: f64) -> (f64, f64) {
    (2.0 / (m + 1.0), m * (m + 2.0) / ((m + 1.0) * (m + 1.0)))
}

/// Sector kernels as a direct integral over the sphere of `q̂`, with `p̂` tilted
/// off the pole: `r'² ∫ P_ℓ(p̂·q̂) / (r² + r'² + μ r r' p̂·q̂ + λ)^k dΩ`.
/// Returns `(K_T, K_W)` with `K_W = −2 × (k = 2 integral)`.
pub fn sphere_kernels(ell: usize, m: f64, lambda: f64, r: f64, rp: f64) -> (f64, f64) {
    let (mu, _) = mu_nu(m);
    let (tp, fp) = (0.5f64, 0.3f64);
    let p = [tp.sin() * fp.cos(), tp.sin() * fp.sin(), tp.cos()];
    let a = r * r + rp * rp + lambda;
    let b = mu * r * rp;
    let scale = 4.0 * PI / (a - b);
    // Inner φ integral: periodic trapezoid, doubled until it settles. Both
    // powers come from the same samples; rings are cached per θ node.
    let ring = |st: f64, ct: f64| -> (f64, f64) {
        let f = |ph: f64| {
            let y = p[0] * st * ph.cos() + p[1] * st * ph.sin() + p[2] * ct;
            let d = 1.0 / (a + b * y);
            let l = legendre(ell, y);
            (l * d, l * d * d)
        };
        let mut n = 16usize;
        let mut sum = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).fold((0.0, 0.0), |s, v| (s.0 + v.0, s.1 + v.1));
        let mut prev = (sum.0 * 2.0 * PI / n as f64, sum.1 * 2.0 * PI / n as f64);
        loop {
            let mid = (0..n)
                .map(|j| f(2.0 * PI * (j as f64 + 0.5) / n as f64))
                .fold((0.0, 0.0), |s, v| (s.0 + v.0, s.1 + v.1));
            sum = (sum.0 + mid.0, sum.1 + mid.1);
            n *= 2;
            let next = (sum.0 * 2.0 * PI / n as f64, sum.1 * 2.0 * PI / n as f64);
            let settled = (next.0 - prev.0).abs() <= 1e-16 * scale && (next.1 - prev.1).abs() <= 1e-16 * scale / (a - b);
            if settled || n > 1 << 14 {
                return next;
            }
            prev = next;
        }
    };
    let cache = RefCell::new(HashMap::new());
    let integral = |k: i32| {
        de(
            |th: f64| {
                let (st, ct) = th.sin_cos();
                let v = *cache.borrow_mut().entry(th.to_bits()).or_insert_with(|| ring(st, ct));
                st * if k == 1 { v.0 } else { v.1 }
            },
            0.0,
            PI,
            4,
            1e-15 * scale,
        )
    };
    (rp * rp * integral(1), -2.0 * rp * rp * integral(2))
}

/// `π√ν + ∫_{-1}^{1} dy y ∫_0^{R_c} dr r^s/(r² + 1 + μ r y)`, integrated in the
/// printed order (y outer, r inner) with a hard cutoff.
pub fn c_cutoff(s: f64, m: f64, rc: f64) -> f64 {
    let (mu, nu) = mu_nu(m);
    let inner = |y: f64| {
        // r = e^u; the piece below e^{-40} is O(e^{-40}).
        de(
            |u: f64| {
                let r = u.exp();
                r.powf(s + 1.0) / (r * r + 1.0 + mu * r * y)
            },
            -40.0,
            rc.ln(),
            64,
            1e-13,
        )
    };
    PI * nu.sqrt() + de(|y| y * inner(y), -1.0, 1.0, 4, 1e-12)
}

/// Leading behavior of the cut-off piece: `∫_{R_c}^∞` contributes
/// `−(2/3) μ R_c^{s−2}/(2−s)` after the `y` integration.
pub fn c_cutoff_tail(s: f64, m: f64, rc: f64) -> f64 {
    let (mu, _) = mu_nu(m);
    -(2.0 / 3.0) * mu * rc.powf(s - 2.0) / (2.0 - s)
}

/// `Q_ℓ(z) = ∫_0^∞ (z + √(z²−1) cosh t)^{−ℓ−1} dt`; the integrand is positive,
/// so large `z` costs no digits.
pub fn q_oracle(ell: usize, z: f64) -> f64 {
    let w = (z * z - 1.0).sqrt();
    let f = |t: f64| (z + w * t.cosh()).powi(-(ell as i32) - 1);
    let scale = f(0.0);
    de(f, 0.0, 60.0, 60, 1e-16 * scale)
}

/// Schur kernel written out independently.
pub fn schur_k(ell: usize, r: f64, rp: f64) -> f64 {
    let e = ell as f64 + 1.0;
    (r * rp).powf(e) * (1.0 + rp * rp).powf(0.25) / ((1.0 + r * r).powf(0.75) * (r * r + rp * rp + 1.0).powf(e))
}

/// `∫_0^∞ K(r, r') dr'` on `r' = e^u`.
pub fn schur_row_oracle(ell: usize, r: f64) -> f64 {
    de(|u: f64| u.exp() * schur_k(ell, r, u.exp()), -60.0, 90.0, 150, 1e-14)
}
