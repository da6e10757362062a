//! Legendre polynomials `P_ℓ` and Legendre functions of the second kind `Q_ℓ`.
//!
//! Everything the kernels need reduces to the two integrals
//! `∫_{-1}^{1} P_ℓ(y) (a + b y)^{-k} dy`, `k ∈ {1, 2}`, with `a > b ≥ 0`.
//! For `a/b ≥ Z_SWITCH` they are summed as power series in `t = b/a` whose
//! coefficients are the moments `∫ P_ℓ(y) y^j dy`; closer to the branch point
//! the closed form `Q₀` and the upward recurrence are used instead.

use crate::error::{domain, Result};

/// Largest supported angular momentum.
pub const MAX_ELL: usize = 8;

/// Below this value of `z = a/b` the recurrence branch is used.
pub const Z_SWITCH: f64 = 1.2;

const SERIES_MAX_TERMS: usize = 400;

pub fn legendre_p(ell: usize, x: f64) -> f64 {
    match ell {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..ell {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `∫_{-1}^{1} P_ℓ(y) y^j dy`.
pub fn legendre_moment(ell: usize, j: usize) -> f64 {
    if j < ell || (j - ell) % 2 == 1 {
        return 0.0;
    }
    let mut m = leading_moment(ell);
    for k in 0..(j - ell) / 2 {
        m *= moment_ratio(ell, k);
    }
    m
}

/// `M_{ℓ,ℓ} = 2^{ℓ+1} (ℓ!)² / (2ℓ+1)!`.
fn leading_moment(ell: usize) -> f64 {
    let mut m = 2.0;
    for i in 1..=ell {
        let i = i as f64;
        m *= 2.0 * i * i / ((2.0 * i) * (2.0 * i + 1.0));
    }
    m
}

/// `M_{ℓ,ℓ+2k+2} / M_{ℓ,ℓ+2k}`.
fn moment_ratio(ell: usize, k: usize) -> f64 {
    let (l, k) = (ell as f64, k as f64);
    (l + 2.0 * k + 2.0) * (l + 2.0 * k + 1.0) * (l + k + 1.0)
        / ((k + 1.0) * (2.0 * l + 2.0 * k + 3.0) * (2.0 * l + 2.0 * k + 2.0))
}

/// `(Σ_k M_{ℓ,ℓ+2k} t^{2k}, Σ_k (ℓ+2k+1) M_{ℓ,ℓ+2k} t^{2k})` for `0 ≤ t < 1`.
fn moment_series(ell: usize, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let mut term = leading_moment(ell);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for k in 0..SERIES_MAX_TERMS {
        let d = (ell + 2 * k + 1) as f64;
        s1 += term;
        s2 += d * term;
        if d * term < 1e-18 * s2.abs() {
            break;
        }
        term *= moment_ratio(ell, k) * t2;
    }
    (s1, s2)
}

/// `(Q_ℓ(z), Q_ℓ'(z))` by the closed form of `Q₀` and upward recurrence.
fn q_recurrence(ell: usize, z: f64) -> (f64, f64) {
    let zm1 = z - 1.0;
    let q0 = 0.5 * (2.0 / zm1).ln_1p();
    let z2m1 = zm1 * (z + 1.0);
    if ell == 0 {
        return (q0, -1.0 / z2m1);
    }
    let (mut qm, mut q) = (q0, z * q0 - 1.0);
    for k in 1..ell {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * z * q - kf * qm) / (kf + 1.0);
        qm = q;
        q = next;
    }
    (q, ell as f64 * (z * q - qm) / z2m1)
}

fn q_unchecked(ell: usize, z: f64) -> (f64, f64) {
    if z < Z_SWITCH {
        return q_recurrence(ell, z);
    }
    let t = 1.0 / z;
    let (s1, s2) = moment_series(ell, t);
    let tl = t.powi(ell as i32 + 1);
    (0.5 * tl * s1, -0.5 * tl * t * s2)
}

fn check(ell: usize, z: f64) -> Result<()> {
    if ell > MAX_ELL {
        return domain(format!("ell = {ell} exceeds the supported maximum {MAX_ELL}"));
    }
    if z.is_nan() || z <= 1.0 {
        return domain(format!("Q_ell requires z > 1, got {z}"));
    }
    Ok(())
}

/// Legendre function of the second kind, `Q_ℓ(z) = ½ ∫ P_ℓ(y)/(z − y) dy`.
pub fn legendre_q(ell: usize, z: f64) -> Result<f64> {
    check(ell, z)?;
    Ok(q_unchecked(ell, z).0)
}

/// `dQ_ℓ/dz`.
pub fn legendre_q_deriv(ell: usize, z: f64) -> Result<f64> {
    check(ell, z)?;
    Ok(q_unchecked(ell, z).1)
}

/// `∫_{-1}^{1} P_ℓ(y) / (a + b y)^power dy` for `a > b ≥ 0`, `power ∈ {1, 2}`.
///
/// The caller guarantees the preconditions; kernels only call this with
/// `a − b ≥ μ r r' (m+1 − 1) > 0`.
pub fn y_integral(ell: usize, a: f64, b: f64, power: u32) -> f64 {
    debug_assert!(a > b && b >= 0.0 && (power == 1 || power == 2));
    let t = b / a;
    let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
    if t * Z_SWITCH <= 1.0 {
        let (s1, s2) = moment_series(ell, t);
        let tl = sign * t.powi(ell as i32);
        return if power == 1 { tl * s1 / a } else { tl * s2 / (a * a) };
    }
    let (q, dq) = q_recurrence(ell, a / b);
    if power == 1 {
        sign * 2.0 * q / b
    } else {
        -sign * 2.0 * dq / (b * b)
    }
}

/// Both `k = 1` and `k = 2` integrals at once.
pub fn y_integrals(ell: usize, a: f64, b: f64) -> (f64, f64) {
    debug_assert!(a > b && b >= 0.0);
    let t = b / a;
    let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
    if t * Z_SWITCH <= 1.0 {
        let (s1, s2) = moment_series(ell, t);
        let tl = sign * t.powi(ell as i32);
        return (tl * s1 / a, tl * s2 / (a * a));
    }
    let (q, dq) = q_recurrence(ell, a / b);
    (sign * 2.0 * q / b, -sign * 2.0 * dq / (b * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::GaussRule;

    fn brute(ell: usize, a: f64, b: f64, power: i32) -> f64 {
        // Graded panels towards y = -1, where the integrand peaks.
        let rule = GaussRule::new(40);
        let mut edges = vec![-1.0];
        let mut h = 1e-6;
        while edges.last().unwrap() + h < 1.0 {
            edges.push(edges.last().unwrap() + h);
            h *= 1.6;
        }
        edges.push(1.0);
        crate::numerics::quad::integrate_panels(&edges, &rule, |y| {
            legendre_p(ell, y) / (a + b * y).powi(power)
        })
    }

    #[test]
    fn closed_forms() {
        assert!((legendre_q(0, 2.0).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((legendre_q(1, 2.0).unwrap() - (3f64.ln() - 1.0)).abs() < 1e-15);
        assert!((legendre_q_deriv(0, 2.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(legendre_q_deriv(0, 1e8).unwrap().abs() < 1e-15);
    }

    #[test]
    fn domain_is_validated() {
        assert!(legendre_q(0, 1.0).is_err());
        assert!(legendre_q(0, 0.5).is_err());
        assert!(legendre_q(9, 2.0).is_err());
        assert!(legendre_q_deriv(2, f64::NAN).is_err());
    }

    #[test]
    fn moments_match_low_order_values() {
        assert!((legendre_moment(0, 0) - 2.0).abs() < 1e-15);
        assert!((legendre_moment(0, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((legendre_moment(1, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((legendre_moment(2, 2) - 4.0 / 15.0).abs() < 1e-15);
        assert!((legendre_moment(1, 3) - 2.0 / 5.0).abs() < 1e-15);
        assert_eq!(legendre_moment(2, 3), 0.0);
        assert_eq!(legendre_moment(3, 1), 0.0);
    }

    #[test]
    fn both_branches_agree_at_the_switch() {
        for ell in 0..=MAX_ELL {
            for z in [Z_SWITCH * (1.0 - 1e-12), Z_SWITCH * (1.0 + 1e-12)] {
                let (qr, dr) = q_recurrence(ell, z);
                let t = 1.0 / z;
                let (s1, s2) = moment_series(ell, t);
                let qs = 0.5 * t.powi(ell as i32 + 1) * s1;
                let ds = -0.5 * t.powi(ell as i32 + 2) * s2;
                assert!((qr - qs).abs() <= 1e-11 * qs.abs(), "Q ell={ell} z={z}: {qr} {qs}");
                assert!((dr - ds).abs() <= 1e-10 * ds.abs(), "dQ ell={ell} z={z}: {dr} {ds}");
            }
        }
    }

    #[test]
    fn y_integrals_match_brute_force() {
        for ell in 0..=4 {
            for &(a, b) in &[(2.0, 1.0), (1.07, 1.0), (3.0, 0.1), (10.0, 9.0), (1.0, 0.0)] {
                for p in [1, 2] {
                    let want = brute(ell, a, b, p as i32);
                    let got = y_integral(ell, a, b, p);
                    let scale = want.abs().max(1e-3 * brute(0, a, b, p as i32));
                    assert!((got - want).abs() <= 1e-11 * scale, "ell={ell} a={a} b={b} p={p}: {got} vs {want}");
                }
            }
        }
    }
}
