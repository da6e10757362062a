//! Schur-test bounds for the weighted sector kernel
//! `K(r, r') = (r r')^{ℓ+1} (1+r'²)^{1/4} / ((1+r²)^{3/4} (r²+r'²+1)^{ℓ+1})`.
//!
//! Row integrals `∫K dr'` and column integrals `∫K dr` both increase to
//! finite limits as their free variable grows; the limits are included in the
//! reported sups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::quad::{gauss_rule, geometric_edges};
use crate::numerics::{GridSpec, Measure};

pub fn schur_kernel(ell: usize, r: f64, rp: f64) -> f64 {
    let e = ell as i32 + 1;
    (r * rp).powi(e) * (1.0 + rp * rp).powf(0.25) / ((1.0 + r * r).powf(0.75) * (r * r + rp * rp + 1.0).powi(e))
}

/// `∫_0^∞ f(x) dx` for integrands behaving like `c·x^{-p}` (`p > 1`) beyond
/// `hi`, with the power-law remainder added from the last node.
fn half_line(f: impl Fn(f64) -> f64, lo: f64, hi: f64, p: f64) -> f64 {
    let rule = gauss_rule(16);
    let n = ((hi / lo).log10() * 6.0).ceil() as usize;
    let mut total = 0.0;
    for e in geometric_edges(lo, hi, n).windows(2) {
        total += rule.integrate(e[0], e[1], &f);
    }
    total + f(hi) * hi / (p - 1.0)
}

/// `∫_0^∞ K(r, r') dr'`.
pub fn row_integral(ell: usize, r: f64) -> f64 {
    let s = r.max(1.0);
    half_line(|rp| schur_kernel(ell, r, rp), 1e-10 * s, 1e8 * s, ell as f64 + 0.5)
}

/// `∫_0^∞ K(r, r') dr`.
pub fn col_integral(ell: usize, rp: f64) -> f64 {
    let s = rp.max(1.0);
    half_line(|r| schur_kernel(ell, r, rp), 1e-10 * s, 1e8 * s, ell as f64 + 1.5)
}

/// `lim_{r→∞} ∫K dr' = ∫_0^∞ u^{ℓ+3/2}/(1+u²)^{ℓ+1} du`.
pub fn row_limit(ell: usize) -> f64 {
    let e = ell as i32 + 1;
    half_line(|u| u.powf(ell as f64 + 1.5) / (1.0 + u * u).powi(e), 1e-10, 1e8, ell as f64 + 0.5)
}

/// `lim_{r'→∞} ∫K dr = ∫_0^∞ u^{ℓ−1/2}/(1+u²)^{ℓ+1} du`.
pub fn col_limit(ell: usize) -> f64 {
    let e = ell as i32 + 1;
    half_line(|u| u.powf(ell as f64 - 0.5) / (1.0 + u * u).powi(e), 1e-10, 1e8, ell as f64 + 2.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub ell: usize,
    /// `max(grid maximum, row_limit)`.
    pub sup_row: f64,
    pub sup_col: f64,
    /// Grid node maximizing the row integral.
    pub argmax_r: f64,
    pub argmax_r_col: f64,
    pub row_at_infinity: f64,
    pub col_at_infinity: f64,
    /// Both grid maxima lie strictly inside the grid and dominate the limits.
    pub interior: bool,
    /// Relative change of the sups under panel doubling.
    pub refinement_delta: f64,
    pub grid_id: String,
}

struct Sups {
    row: f64,
    col: f64,
    argmax_row: usize,
    argmax_col: usize,
    nodes: Vec<f64>,
}

fn grid_sups(ell: usize, grid: &GridSpec) -> Result<Sups> {
    let g = grid.build(Measure::L2)?;
    // The origin panel contributes no information: K vanishes at 0.
    let nodes: Vec<f64> = g.nodes.iter().copied().filter(|&r| r >= grid.r_min).collect();
    let rows: Vec<f64> = nodes.par_iter().map(|&r| row_integral(ell, r)).collect();
    let cols: Vec<f64> = nodes.par_iter().map(|&r| col_integral(ell, r)).collect();
    let arg = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
    let (ar, ac) = (arg(&rows), arg(&cols));
    Ok(Sups { row: rows[ar], col: cols[ac], argmax_row: ar, argmax_col: ac, nodes })
}

pub fn schur_bounds(ell: usize, grid: &GridSpec) -> Result<SchurReport> {
    if ell == 0 {
        return domain("the Schur bounds are stated for ell >= 1");
    }
    let coarse = grid_sups(ell, grid)?;
    let fine = grid_sups(ell, &grid.refined())?;
    let (row_inf, col_inf) = (row_limit(ell), col_limit(ell));
    let sup_row = coarse.row.max(row_inf);
    let sup_col = coarse.col.max(col_inf);
    let fine_row = fine.row.max(row_inf);
    let fine_col = fine.col.max(col_inf);
    let refinement_delta = ((sup_row - fine_row) / fine_row).abs().max(((sup_col - fine_col) / fine_col).abs());
    let last = coarse.nodes.len() - 1;
    let inside = |i: usize| i > 0 && i < last;
    let interior = inside(coarse.argmax_row)
        && inside(coarse.argmax_col)
        && coarse.row >= row_inf
        && coarse.col >= col_inf;
    Ok(SchurReport {
        ell,
        sup_row,
        sup_col,
        argmax_r: coarse.nodes[coarse.argmax_row],
        argmax_r_col: coarse.nodes[coarse.argmax_col],
        row_at_infinity: row_inf,
        col_at_infinity: col_inf,
        interior,
        refinement_delta,
        grid_id: grid.build(Measure::L2)?.id(),
    })
}
