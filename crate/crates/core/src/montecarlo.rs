//! Seeded Monte-Carlo estimates of the six-dimensional inner products.
//!
//! Momenta are drawn i.i.d. from `ρ(p) = 1/(π²(1+|p|²)²)` on `ℝ³`. Samples
//! are split into fixed chunks with one ChaCha stream each, so results depend
//! on the seed only, not on the thread count.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::extensions::SeparableState;
use crate::kernels::{diag_t, KernelSpec};
use crate::numerics::legendre_p;
use crate::numerics::Charge;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const DEFAULT_SAMPLES: u64 = 10_000_000;
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|value − mean|` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.mean).abs() / self.std_error
    }
}

pub fn density(p: [f64; 3]) -> f64 {
    let q = 1.0 + dot(p, p);
    1.0 / (PI * PI * q * q)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `|p| = tan θ` with `θ ∼ (4/π) sin²θ` on `[0, π/2)`, uniform direction.
pub fn sample_momentum(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let theta = loop {
        let t = 0.5 * PI * rng.random::<f64>();
        if rng.random::<f64>() < t.sin().powi(2) {
            break t;
        }
    };
    let r = theta.tan();
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [r * s * phi.cos(), r * s * phi.sin(), r * z]
}

/// `Y_{ℓ0}` at polar cosine `c`.
pub fn y_l0(ell: usize, c: f64) -> f64 {
    ((2 * ell + 1) as f64 / (4.0 * PI)).sqrt() * legendre_p(ell, c)
}

fn norm(p: [f64; 3]) -> f64 {
    dot(p, p).sqrt()
}

fn cos_polar(p: [f64; 3], r: f64) -> f64 {
    if r > 0.0 { p[2] / r } else { 1.0 }
}

/// Runs `f` `samples` times and returns mean and standard error of each of
/// the `K` outputs.
fn estimate<const K: usize>(samples: u64, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> [f64; K] + Sync) -> [McEstimate; K] {
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<([f64; K], [f64; K], u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut sum = [0.0; K];
            let mut sq = [0.0; K];
            for _ in 0..n {
                let v = f(&mut rng);
                for k in 0..K {
                    sum[k] += v[k];
                    sq[k] += v[k] * v[k];
                }
            }
            (sum, sq, n)
        })
        .collect();
    let mut sum = [0.0; K];
    let mut sq = [0.0; K];
    let mut n = 0;
    for (s, q, m) in partial {
        for k in 0..K {
            sum[k] += s[k];
            sq[k] += q[k];
        }
        n += m;
    }
    let nf = n as f64;
    std::array::from_fn(|k| {
        let mean = sum[k] / nf;
        let var = (sq[k] / nf - mean * mean).max(0.0);
        McEstimate { mean, std_error: (var / (nf - 1.0)).sqrt(), samples: n, seed }
    })
}

fn require_zonal(xi: &Charge) -> Result<()> {
    if xi.n != 0 {
        return domain("Monte-Carlo oracles use zonal charges (n = 0)");
    }
    Ok(())
}

/// `‖u_ξ‖² = ∫∫ |ξ̂(p₁) − ξ̂(p₂)|² / D² dp₁ dp₂`.
pub fn u_norm_sq_mc(xi: &Charge, spec: &KernelSpec, samples: u64, seed: u64) -> Result<McEstimate> {
    require_zonal(xi)?;
    let ell = xi.ell;
    let [est] = estimate(samples, seed, |rng| pair(rng, |p1, p2| {
        let (r1, r2) = (norm(p1), norm(p2));
        let x1 = xi.eval(r1) * y_l0(ell, cos_polar(p1, r1));
        let x2 = xi.eval(r2) * y_l0(ell, cos_polar(p2, r2));
        let d = r1 * r1 + r2 * r2 + spec.mu * dot(p1, p2) + spec.lambda;
        let u = (x1 - x2) / d;
        [u * u / (density(p1) * density(p2))]
    }));
    Ok(est)
}

/// Evaluates `f` on an i.i.d. pair drawn from `ρ ⊗ ρ`.
fn pair<const K: usize>(rng: &mut ChaCha8Rng, f: impl Fn([f64; 3], [f64; 3]) -> [f64; K]) -> [f64; K] {
    let p1 = sample_momentum(rng);
    let p2 = sample_momentum(rng);
    f(p1, p2)
}

/// Monte-Carlo terms of the extension form for `q = 0` and a zonal `ξ_reg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFormMc {
    pub norm_f: McEstimate,
    pub h_free: McEstimate,
    pub overlap_u: McEstimate,
    pub u_norm_sq: McEstimate,
    /// `2⟨ξ, (T + α) ξ⟩`.
    pub charge_term: McEstimate,
    /// The whole form, estimated sample by sample.
    pub value: McEstimate,
}

pub fn h_form_mc(state: &SeparableState, xi: &Charge, spec: &KernelSpec, samples: u64, seed: u64) -> Result<HFormMc> {
    require_zonal(xi)?;
    if xi.ell != 1 {
        return domain("the extension form is evaluated in sector 1");
    }
    let lambda = spec.lambda;
    let [norm_f, h_free, overlap_u, u_norm_sq, charge_term, value] = estimate(samples, seed, |rng| pair(rng, |p1, p2| {
        let (r1, r2) = (norm(p1), norm(p2));
        let (c1, c2) = (cos_polar(p1, r1), cos_polar(p2, r2));
        let y00 = y_l0(0, 1.0);
        let phi1 = state.a.eval(r1) * y00;
        let phi2 = state.a.eval(r2) * y00;
        let psi1 = state.b.eval(r1) * y_l0(1, c1);
        let psi2 = state.b.eval(r2) * y_l0(1, c2);
        let f = phi1 * psi2 - phi2 * psi1;
        let x1 = xi.eval(r1) * y_l0(1, c1);
        let x2 = xi.eval(r2) * y_l0(1, c2);
        let h0 = r1 * r1 + r2 * r2 + spec.mu * dot(p1, p2);
        let d = h0 + lambda;
        let u = (x1 - x2) / d;
        let (w1, w12) = (1.0 / density(p1), 1.0 / (density(p1) * density(p2)));
        let nf = f * f * w12;
        let hf = h0 * f * f * w12;
        let ov = f * u * w12;
        let uu = u * u * w12;
        let ch = 2.0 * (diag_t(spec, r1) * x1 * x1 * w1 + x1 * x2 / d * w12);
        let total = lambda * nf - lambda * (f + u) * (f + u) * w12 + hf + ch;
        [nf, hf, ov, uu, ch, total]
    }));
    Ok(HFormMc { norm_f, h_free, overlap_u, u_norm_sq, charge_term, value })
}

/// `∫_{|q|<R} (ξ̂(p₁) − ξ̂(q))/D dq / Y(Ω_{p₁})` with `p₁` on the polar axis,
/// `q` uniform in the ball.
pub fn ball_mc(xi: &Charge, spec: &KernelSpec, p1: f64, big_r: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    require_zonal(xi)?;
    let ell = xi.ell;
    let y1 = y_l0(ell, 1.0);
    let x1 = xi.eval(p1);
    let volume = 4.0 / 3.0 * PI * big_r.powi(3);
    let [est] = estimate(samples, seed, |rng| {
        let rq = big_r * rng.random::<f64>().cbrt();
        let c = 2.0 * rng.random::<f64>() - 1.0;
        let d = p1 * p1 + rq * rq + spec.mu * p1 * rq * c + spec.lambda;
        let xq = xi.eval(rq) * y_l0(ell, c) / y1;
        [volume * (x1 - xq) / d]
    });
    Ok(est)
}
