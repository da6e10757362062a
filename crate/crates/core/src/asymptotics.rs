//! Singular parts `u_ξ`, the scalar-product identity and the large-`R`
//! Ter-Martirosyan–Skornyakov asymptotics.
//!
//! `û_ξ(p₁,p₂) = (ξ̂(p₁) − ξ̂(p₂))/D` with `D = p₁² + p₂² + μ p₁·p₂ + λ`. All
//! charges carry one spherical harmonic `Y_{ℓn}`, which is divided out of
//! pointwise quantities.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{ball_charge, ball_free, KernelSpec};
use crate::numerics::legendre::legendre_p;
use crate::numerics::quad::gauss_rule;
use crate::numerics::{Charge, RadialGrid};
use crate::operators::{assemble, OperatorKind, TAIL_DECADES};

/// Regularity margin for pointwise `T̂_λ ξ`: tails must lie in `H^{-1/2+ε}`.
pub const REGULARITY_EPS: f64 = 0.05;

/// Gauss nodes for the angular `y`-integral of the cross term.
const Y_NODES: usize = 64;

/// The `(ξ, η)` part of `ĝ = f̂ + û_η/D + û_ξ`; `f ≡ 0`.
#[derive(Debug, Clone)]
pub struct GSpec {
    pub xi: Charge,
    pub eta: Charge,
}

impl GSpec {
    pub fn new(xi: Charge, eta: Charge) -> Result<Self> {
        xi.compatible(&eta)?;
        Ok(GSpec { xi, eta })
    }

    /// `η = 0`.
    pub fn xi_only(xi: Charge) -> Result<Self> {
        let eta = Charge::zeros(xi.ell, xi.n, xi.grid.clone())?;
        Ok(GSpec { xi, eta })
    }
}

/// Extends the grid when either charge carries a tail.
fn pairing_grid(xi: &Charge, eta: &Charge) -> Result<(Charge, Charge)> {
    if xi.tail.is_none() && eta.tail.is_none() {
        return Ok((xi.clone(), eta.clone()));
    }
    let ext = Arc::new(xi.grid.extended(TAIL_DECADES)?);
    Ok((xi.resampled(ext.clone())?, eta.resampled(ext)?))
}

/// `∫_{ℝ³} D(p, q)^{-2} dq` by radial quadrature plus the `4π/R` remainder.
fn free_inverse_square(spec: &KernelSpec, p: f64) -> Result<f64> {
    let big_r = 1e8 * p.max(1.0).max(spec.lambda.sqrt());
    Ok(ball_free(spec, p.max(1e-300), big_r, 2)? + 4.0 * PI / big_r)
}

/// `∫_{-1}^1 P_ℓ(y) (a + b y)^{-2} dy` by Gauss–Legendre.
fn y_quad(ell: usize, a: f64, b: f64) -> f64 {
    let rule = gauss_rule(Y_NODES);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&y, &w)| {
            let d = a + b * y;
            w * legendre_p(ell, y) / (d * d)
        })
        .sum()
}

/// `⟨u_ξ, u_η⟩` by the `(r₁, r₂, y)` reduction.
///
/// Diagonal part: `2 ∫ ξ η r² ∫D^{-2} dq dr`; cross part:
/// `−2 · 2π ∫∫ ξ(r₁) η(r₂) r₁² r₂² ∫ P_ℓ(y) D^{-2} dy dr₁ dr₂`.
pub fn u_inner(xi: &Charge, eta: &Charge, spec: &KernelSpec) -> Result<f64> {
    xi.compatible(eta)?;
    if xi.ell != spec.ell {
        return Err(Error::Mismatch(format!("charge sector {} vs spec sector {}", xi.ell, spec.ell)));
    }
    let (x, e) = pairing_grid(xi, eta)?;
    let g: &RadialGrid = &x.grid;
    let n = g.len();
    let wx: Vec<f64> = (0..n).map(|i| g.weights[i] * g.nodes[i].powi(2) * x.values[i]).collect();
    let we: Vec<f64> = (0..n).map(|i| g.weights[i] * g.nodes[i].powi(2) * e.values[i]).collect();
    let diag: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if wx[i] == 0.0 || e.values[i] == 0.0 {
                Ok(0.0)
            } else {
                Ok(wx[i] * e.values[i] * free_inverse_square(spec, g.nodes[i])?)
            }
        })
        .collect();
    let diag: f64 = diag?.iter().sum();
    let cross: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            if wx[i] == 0.0 {
                return 0.0;
            }
            let r1 = g.nodes[i];
            let row: f64 = (0..n)
                .filter(|&j| we[j] != 0.0)
                .map(|j| {
                    let r2 = g.nodes[j];
                    we[j] * y_quad(spec.ell, r1 * r1 + r2 * r2 + spec.lambda, spec.mu * r1 * r2)
                })
                .sum();
            wx[i] * row
        })
        .sum();
    Ok(2.0 * diag - 4.0 * PI * cross)
}

/// `‖u_ξ‖²`.
pub fn u_norm_sq(xi: &Charge, spec: &KernelSpec) -> Result<f64> {
    if xi.values.iter().all(|&v| v == 0.0) && xi.tail.is_none() {
        return Ok(0.0);
    }
    u_inner(xi, xi, spec)
}

/// `‖u_{ξ + iη}‖²` for real profiles `ξ`, `η`.
pub fn u_norm_sq_complex(re: &Charge, im: &Charge, spec: &KernelSpec) -> Result<f64> {
    Ok(u_norm_sq(re, spec)? + u_norm_sq(im, spec)?)
}

fn require_regular(xi: &Charge, min_exponent: f64, what: &str) -> Result<()> {
    match xi.tail {
        Some(t) if t.exponent <= min_exponent => {
            domain(format!("{what}: tail exponent {} must exceed {min_exponent}", t.exponent))
        }
        _ => Ok(()),
    }
}

/// `∫_{|p₂|<R} ĝ(p₁, p₂) dp₂ / Y(Ω_{p₁})`.
pub fn partial_integral(g: &GSpec, spec: &KernelSpec, p1: f64, big_r: f64) -> Result<f64> {
    // r^{-e} lies in H^{-1/2+ε} iff e > 1 + ε.
    require_regular(&g.xi, 1.0 + REGULARITY_EPS, "partial_integral")?;
    if g.xi.ell != spec.ell {
        return Err(Error::Mismatch(format!("charge sector {} vs spec sector {}", g.xi.ell, spec.ell)));
    }
    let mut total = 0.0;
    let x1 = g.xi.eval(p1);
    if x1 != 0.0 {
        total += x1 * ball_free(spec, p1, big_r, 1)?;
    }
    total -= ball_charge(spec, p1, big_r, &g.xi, 1)?;
    let e1 = g.eta.eval(p1);
    if e1 != 0.0 {
        total += e1 * ball_free(spec, p1, big_r, 2)?;
    }
    if g.eta.values.iter().any(|&v| v != 0.0) {
        total -= ball_charge(spec, p1, big_r, &g.eta, 2)?;
    }
    Ok(total)
}

/// Shape of the `o(1)` drift removed by [`extract_tms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CorrectionModel {
    /// `c/R`: the leading remainder of the free ball integrals.
    #[default]
    InverseR,
    /// `c/√R`.
    InverseSqrtR,
}

impl CorrectionModel {
    fn basis(self, r: f64) -> f64 {
        match self {
            CorrectionModel::InverseR => 1.0 / r,
            CorrectionModel::InverseSqrtR => 1.0 / r.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmsFit {
    pub slope: f64,
    pub intercept: f64,
    pub correction: f64,
    /// Largest absolute fit residual.
    pub residual: f64,
    pub model: CorrectionModel,
}

/// Fits `a + b R + c·φ(R)` to [`partial_integral`] over `r_list`.
pub fn extract_tms(g: &GSpec, spec: &KernelSpec, p1: f64, r_list: &[f64]) -> Result<TmsFit> {
    extract_tms_with(g, spec, p1, r_list, CorrectionModel::default())
}

pub fn extract_tms_with(
    g: &GSpec,
    spec: &KernelSpec,
    p1: f64,
    r_list: &[f64],
    model: CorrectionModel,
) -> Result<TmsFit> {
    if r_list.len() < 4 {
        return domain("extract_tms needs at least four radii");
    }
    if r_list.windows(2).any(|w| !(w[1] > w[0])) || !(r_list[0] > 0.0) {
        return domain("radii must be positive and increasing");
    }
    if r_list[r_list.len() - 1] < 10.0 * r_list[0] * (1.0 - 1e-12) {
        return domain("radii must span at least one decade");
    }
    let values: Result<Vec<f64>> = r_list.par_iter().map(|&r| partial_integral(g, spec, p1, r)).collect();
    let values = values?;
    let a = DMatrix::from_fn(r_list.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => r_list[i],
        _ => model.basis(r_list[i]),
    });
    // Column scaling keeps the least-squares problem well conditioned.
    let scale: Vec<f64> = (0..3).map(|j| a.column(j).amax()).collect();
    let a_scaled = DMatrix::from_fn(a.nrows(), 3, |i, j| a[(i, j)] / scale[j]);
    let b = DVector::from_column_slice(&values);
    let svd = a_scaled.svd(true, true);
    if svd.singular_values.min() < 1e-12 * svd.singular_values.max() {
        return Err(Error::LinearAlgebra("degenerate TMS fit".into()));
    }
    let coef = svd.solve(&b, 0.0).map_err(|e| Error::LinearAlgebra(e.to_string()))?;
    let coef: Vec<f64> = (0..3).map(|j| coef[j] / scale[j]).collect();
    let residual = (&a * DVector::from_column_slice(&coef) - b).amax();
    Ok(TmsFit { slope: coef[1], intercept: coef[0], correction: coef[2], residual, model })
}

/// `−(T̂_λ ξ)(p₁) + ½(Ŵ_λ η)(p₁)` from the assembled sector operators,
/// interpolated to `p₁`.
pub fn constant_term(g: &GSpec, spec: &KernelSpec, p1: f64) -> Result<f64> {
    let grid = g.xi.grid.clone();
    let t = assemble(&spec.with_alpha(0.0), grid.clone(), OperatorKind::TplusAlpha)?;
    let w = assemble(spec, grid.clone(), OperatorKind::W)?;
    let tx = t.apply_charge(&g.xi)?;
    let we = w.apply_charge(&g.eta)?;
    let c: Vec<f64> = tx.iter().zip(&we).map(|(t, w)| -t + 0.5 * w).collect();
    grid.interpolate(&c, p1)
        .ok_or_else(|| Error::Domain(format!("p1 = {p1} is outside the grid")))
}

/// `η` with `½ W_λ η = (T_λ + α) ξ` on the grid of `ξ`.
pub fn tms_pair(xi: &Charge, spec: &KernelSpec) -> Result<Charge> {
    require_regular(xi, 2.0, "tms_pair")?;
    let grid = xi.grid.clone();
    let t = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
    let w = assemble(spec, grid.clone(), OperatorKind::W)?;
    let rhs = DVector::from_vec(t.apply_charge(xi)?.into_iter().map(|v| 2.0 * v).collect());
    let eta = w
        .matrix
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearAlgebra("W matrix is singular".into()))?;
    Charge::new(xi.ell, xi.n, eta.as_slice().to_vec(), grid)
}
