//! Near-null modes of `T_λ^{(ℓ)} + α` in the `H^{-1/2}` sector space.
//!
//! A genuine zero mode decays like a power law and is not an element of any
//! truncated grid space. The probe closes the grid with the admissible power
//! laws: real roots `s` of the sector symbol
//! `C_ℓ(s, m) = π√ν + ∫_0^∞ u^s G_ℓ(u) du` give tails `r^{-2-s}` and, for
//! `s < 1`, `r^{-2+s}`. Their amplitudes are fitted on the last panel and the
//! tail is integrated against the kernel beyond `r_max`. Singular values are
//! taken from `H^{-1/2}` (domain) to `H^{-3/2}` (codomain).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::quad::geometric_edges;
use crate::numerics::{Charge, GridSpec, Measure, RadialGrid, Tail};
use crate::operators::{assemble, conjugate, kernel_block, OperatorKind};
use crate::params::{
    cancellation_c, efimov_lambda, find_root, partial_mellin, sector_symbol_unchecked, solve_s_of_m, C_REL_TOL,
};

/// `C_ℓ(s, m)`; for `ℓ = 1` and `s ∈ [0, 1]` this is `cancellation_C`.
pub fn sector_symbol(ell: usize, s: f64, m: f64) -> Result<f64> {
    sector_symbol_unchecked(ell, s, m)
}

/// Positive real roots of `C_ℓ(·, m)` in `(0, ℓ + 1)`, ascending.
pub fn sector_roots(ell: usize, m: f64) -> Result<Vec<f64>> {
    let top = ell as f64 + 1.0;
    let n = 40;
    let samples: Vec<f64> = (0..=n).map(|k| top * (1.0 - 1e-3) * k as f64 / n as f64).collect();
    let values: Result<Vec<f64>> = samples.iter().map(|&s| sector_symbol(ell, s, m)).collect();
    let values = values?;
    let mut roots = Vec::new();
    for k in 0..n {
        if values[k] == 0.0 {
            roots.push(samples[k]);
        } else if values[k].signum() != values[k + 1].signum() {
            roots.push(find_root(|s| sector_symbol(ell, s, m), samples[k], samples[k + 1], 1e-12)?.x);
        }
    }
    Ok(roots)
}

/// Tail exponents `e` (profiles `r^{-e}`) admissible in `H^{-1/2}`.
pub fn admissible_exponents(ell: usize, m: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for s in sector_roots(ell, m)? {
        if s < 1.0 {
            out.push(2.0 - s);
        }
        out.push(2.0 + s);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Close the grid with the admissible power-law tails.
    pub closure: bool,
    /// Extent of the tail quadrature beyond `r_max`, in decades.
    pub tail_decades: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { closure: true, tail_decades: 8.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SingularProbe {
    pub sigma_min: f64,
    /// Second smallest singular value (exposes radial multiplicity).
    pub sigma_next: f64,
    /// Right singular vector, unit norm in the `H^{-1/2}` grid geometry.
    pub vector: Charge,
    /// Closure exponents used (empty without closure).
    pub exponents: Vec<f64>,
    pub grid_id: String,
}

/// Columns mapping nodal values to the kernel integral over the fitted tail.
fn closure_term(spec: &KernelSpec, grid: &RadialGrid, exponents: &[f64], decades: f64) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let k = exponents.len();
    let npp = grid.nodes_per_panel;
    let r_max = grid.r_max();
    // Amplitudes from a least-squares fit on the last panel.
    let last = &grid.nodes[n - npp..];
    let phi_last = DMatrix::from_fn(npp, k, |i, a| (last[i] / r_max).powf(-exponents[a]));
    let fit = phi_last
        .pseudo_inverse(1e-13)
        .map_err(|e| Error::LinearAlgebra(format!("tail fit: {e}")))?;
    let tail_grid = RadialGrid::from_edges(
        geometric_edges(r_max, r_max * 10f64.powf(decades), (decades * 6.0).ceil() as usize),
        npp,
        Measure::L2,
    )?;
    let k_tail = kernel_block(spec, OperatorKind::TplusAlpha, &grid.nodes, &tail_grid.nodes, &tail_grid.weights);
    let phi_tail = DMatrix::from_fn(tail_grid.len(), k, |i, a| (tail_grid.nodes[i] / r_max).powf(-exponents[a]));
    let small = k_tail * phi_tail * fit; // n × npp
    let mut full = DMatrix::zeros(n, n);
    full.view_mut((0, n - npp), (n, npp)).copy_from(&small);
    Ok(full)
}

pub fn smallest_singular(spec: &KernelSpec, grid: Arc<RadialGrid>) -> Result<SingularProbe> {
    smallest_singular_with(spec, grid, ProbeOptions::default())
}

pub fn smallest_singular_with(spec: &KernelSpec, grid: Arc<RadialGrid>, opts: ProbeOptions) -> Result<SingularProbe> {
    let m = spec.mass();
    if efimov_lambda(m)? >= 1.0 {
        return domain(format!("m = {m} does not exceed m*"));
    }
    let op = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
    let mut matrix = op.matrix;
    let exponents = if opts.closure { admissible_exponents(spec.ell, m)? } else { Vec::new() };
    if !exponents.is_empty() {
        matrix += closure_term(spec, &grid, &exponents, opts.tail_decades)?;
    }
    let d_in = grid.measured_weights_in(Measure::Hminus12)?;
    let d_out = grid.measured_weights_in(Measure::Hminus32)?;
    let s = conjugate(&matrix, &d_out, &d_in);
    let svd = SVD::try_new(s, false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::LinearAlgebra("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let row = v_t.row(order[0]);
    let mut values: Vec<f64> = row.iter().zip(&d_in).map(|(v, d)| v / d.sqrt()).collect();
    // Deterministic sign: largest component positive.
    let big = row.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if big < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    let mut vector = Charge::new(spec.ell, 0, values, grid.clone())?;
    if let Some(&e) = exponents.first() {
        let r_max = grid.r_max();
        let npp = grid.nodes_per_panel;
        let n = grid.len();
        let phi = DMatrix::from_fn(npp, exponents.len(), |i, a| (grid.nodes[n - npp + i] / r_max).powf(-exponents[a]));
        let f = nalgebra::DVector::from_column_slice(&vector.values[n - npp..]);
        let amp = phi
            .pseudo_inverse(1e-13)
            .map_err(|e| Error::LinearAlgebra(format!("tail fit: {e}")))?
            * f;
        vector = vector.with_tail(Tail { exponent: e, coefficient: amp[0] * r_max.powf(e) });
    }
    Ok(SingularProbe {
        sigma_min: svd.singular_values[order[0]],
        sigma_next: svd.singular_values[order[1]],
        vector,
        exponents,
        grid_id: grid.id(),
    })
}

/// Least-squares slope of `log|f|` against `log r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    /// Coefficient of determination of the log-log fit.
    pub r2: f64,
    pub nodes: usize,
}

/// Fits with `r2` below this are flagged as poor power laws.
pub const GOOD_FIT_R2: f64 = 0.9999;

impl TailFit {
    pub fn good(&self) -> bool {
        self.r2 >= GOOD_FIT_R2
    }
}

pub fn fit_tail(vector: &Charge, range: (f64, f64)) -> Result<TailFit> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) || hi > vector.grid.r_max() * (1.0 + 1e-12) {
        return domain(format!("fit range [{lo}, {hi}] is not inside the grid"));
    }
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return domain("fit range must span at least two decades");
    }
    let pts: Vec<(f64, f64)> = vector
        .grid
        .nodes
        .iter()
        .zip(&vector.values)
        .filter(|(r, _)| **r >= lo && **r <= hi)
        .map(|(&r, &f)| (r, f))
        .collect();
    if pts.len() < 10 {
        return domain(format!("only {} nodes in the fit range", pts.len()));
    }
    if pts.iter().any(|&(_, f)| f == 0.0 || !f.is_finite()) {
        return domain("vector vanishes on the fit range");
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(TailFit { exponent: slope, r2, nodes: pts.len() })
}

/// Default fit window: the last two decades of the grid.
pub fn default_fit_range(grid: &RadialGrid) -> (f64, f64) {
    (grid.r_max() / 100.0, grid.r_max())
}

/// One row of a mass sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub m: f64,
    pub ell: usize,
    pub sigma_min: f64,
    pub sigma_next: f64,
    pub tail_exponent_fit: Option<f64>,
    pub tail_fit_r2: Option<f64>,
    pub s_of_m: Option<f64>,
    pub grid_id: String,
    pub r_max: f64,
}

/// Sweep over `m_values`; `template` supplies `λ` and `α`. Rows keep input order.
pub fn scan_mass(
    ell: usize,
    m_values: &[f64],
    template: &KernelSpec,
    grid: &GridSpec,
    opts: ProbeOptions,
) -> Result<Vec<ScanRecord>> {
    let g = Arc::new(grid.build(Measure::Hminus12)?);
    m_values
        .par_iter()
        .map(|&m| {
            let spec = KernelSpec::from_mass(m, template.lambda, template.alpha, ell)?;
            let probe = smallest_singular_with(&spec, g.clone(), opts)?;
            let fit = fit_tail(&probe.vector, default_fit_range(&g)).ok();
            Ok(ScanRecord {
                m,
                ell,
                sigma_min: probe.sigma_min,
                sigma_next: probe.sigma_next,
                tail_exponent_fit: fit.map(|f| f.exponent),
                tail_fit_r2: fit.map(|f| f.r2),
                s_of_m: solve_s_of_m(m).ok().map(|r| r.x),
                grid_id: probe.grid_id,
                r_max: g.r_max(),
            })
        })
        .collect()
}

/// `count` log-spaced masses in `[from, to]`.
pub fn log_spaced(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![from];
    }
    let step = (to / from).ln() / (count - 1) as f64;
    let mut v: Vec<f64> = (0..count).map(|k| from * (step * k as f64).exp()).collect();
    v[count - 1] = to;
    v
}

/// `1_{r ≥ 1} r^{-(2-s)}` in sector `ℓ = 1`, with its tail annotated.
pub fn minlos_kernel_function(n: i32, s: f64, grid: Arc<RadialGrid>) -> Result<Charge> {
    if !(s > 0.0 && s < 1.0) {
        return domain(format!("Minlos kernel functions need s in (0, 1), got {s}"));
    }
    if s >= 0.5 && grid.measure != Measure::Hminus12 {
        return domain(format!("s = {s} is outside L²; use an Hminus12 grid"));
    }
    let e = 2.0 - s;
    Ok(Charge::from_fn(1, n, grid, |r| if r >= 1.0 { r.powf(-e) } else { 0.0 })?
        .with_tail(Tail { exponent: e, coefficient: 1.0 }))
}

/// `π√ν 1_{p ≥ K} + ∫_{K/p}^∞ r^s G₁(r) dr`.
pub fn cancellation_coefficient(s: f64, m: f64, k: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) || !(k >= 0.0) {
        return domain(format!("cancellation coefficient needs p > 0 and K ≥ 0, got p = {p}, K = {k}"));
    }
    if k == 0.0 {
        return cancellation_c(s, m);
    }
    if !(0.0..=1.0).contains(&s) {
        return domain(format!("cancellation coefficient needs s in [0, 1], got {s}"));
    }
    let mu = 2.0 / (m + 1.0);
    let nu = m * (m + 2.0) / ((m + 1.0) * (m + 1.0));
    let head = partial_mellin(1, s, mu, k / p, C_REL_TOL)?;
    let total = cancellation_c(s, m)? - PI * nu.sqrt();
    let step = if p >= k { PI * nu.sqrt() } else { 0.0 };
    Ok(step + total - head)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GridSpec;
    use crate::params::solve_m_of_s;

    #[test]
    fn sector_one_roots_track_s_of_m() {
        for m in [0.085, 0.095, 0.11] {
            let s = solve_s_of_m(m).unwrap().x;
            let roots = sector_roots(1, m).unwrap();
            assert_eq!(roots.len(), 1);
            assert!((roots[0] - s).abs() < 1e-8);
        }
        let r = sector_roots(1, 0.2).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0] > 1.0 && r[0] < 2.0);
        assert!(sector_roots(2, 0.09).unwrap().is_empty());
        assert!(sector_roots(0, 0.5).unwrap().is_empty());
    }

    #[test]
    fn exponent_sets() {
        let e = admissible_exponents(1, 0.095).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0] + e[1] - 4.0).abs() < 1e-10);
        assert_eq!(admissible_exponents(1, 0.2).unwrap().len(), 1);
    }

    #[test]
    fn synthetic_tail_fits() {
        let g = Arc::new(GridSpec::default().build(Measure::Hminus12).unwrap());
        let pure = Charge::from_fn(1, 0, g.clone(), |r| r.powf(-1.7)).unwrap();
        let f = fit_tail(&pure, (1e2, 1e4)).unwrap();
        assert!((f.exponent + 1.7).abs() < 1e-6);
        assert!(f.good());
        let wavy = Charge::from_fn(1, 0, g.clone(), |r| r.powf(-1.7) * (1.0 + 0.1 * r.ln().sin())).unwrap();
        let w = fit_tail(&wavy, (1e2, 1e4)).unwrap();
        assert!(w.r2 < f.r2);
        assert!(!w.good());
        assert!(fit_tail(&pure, (1e3, 1e4)).is_err());
        let zero = Charge::zeros(1, 0, g).unwrap();
        assert!(fit_tail(&zero, (1e2, 1e4)).is_err());
    }

    #[test]
    fn minlos_function_samples_and_norms() {
        let g = Arc::new(GridSpec::default().build(Measure::L2).unwrap());
        let c = minlos_kernel_function(0, 0.3, g.clone()).unwrap();
        assert!((c.eval(2.0) / 2f64.powf(-1.7) - 1.0).abs() < 1e-10);
        assert!(c.norm_sq(Measure::L2).unwrap().is_finite());
        assert!(minlos_kernel_function(0, 0.6, g.clone()).is_err());
        assert!(minlos_kernel_function(0, 1.2, g).is_err());
        let h = Arc::new(GridSpec::default().build(Measure::Hminus12).unwrap());
        let c6 = minlos_kernel_function(1, 0.6, h).unwrap();
        assert!(c6.norm_sq(Measure::L2).unwrap().is_infinite());
        assert!(c6.norm_sq(Measure::Hminus12).unwrap().is_finite());
    }

    #[test]
    fn cancellation_coefficient_limits() {
        let m = 0.095;
        let s = solve_s_of_m(m).unwrap().x;
        for p in [0.1, 1.0, 10.0] {
            let v = cancellation_coefficient(s, m, 0.0, p).unwrap();
            assert!(v.abs() < 1e-8);
        }
        // K → 0 recovers C(s, m).
        let c = cancellation_c(0.4, m).unwrap();
        let near = cancellation_coefficient(0.4, m, 1e-9, 1.0).unwrap();
        assert!((near - c).abs() < 1e-8);
        // p < K drops the diagonal term.
        let below = cancellation_coefficient(0.4, m, 2.0, 1.0).unwrap();
        assert!(below < c);
    }

    #[test]
    fn minlos_function_is_nearly_annihilated_at_its_mass() {
        // λ = 0, ℓ = 1: away from the cut at r = 1 the r^{-(2-s)} singularity is
        // cancelled at m = m(s); the leftover decays like r^{-3}.
        let s = 0.3;
        let g = Arc::new(GridSpec { n_panels: 36, nodes_per_panel: 12, r_min: 1e-2, r_max: 1e4 }.build(Measure::L2).unwrap());
        let window = |r: f64| (10.0..=1e3).contains(&r);
        let residual = |m: f64| {
            let spec = KernelSpec::from_mass(m, 0.0, 0.0, 1).unwrap();
            let xi = minlos_kernel_function(0, s, g.clone()).unwrap();
            let t = assemble(&spec, g.clone(), OperatorKind::TplusAlpha).unwrap();
            let tx = t.apply_charge(&xi).unwrap();
            let w = g.measured_weights_in(Measure::Hminus32).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for (i, &r) in g.nodes.iter().enumerate().filter(|(_, r)| window(**r)) {
                let d = crate::kernels::diag_t(&spec, r) * xi.values[i];
                num += w[i] * tx[i] * tx[i];
                den += w[i] * d * d;
            }
            (num / den).sqrt()
        };
        let at_root = residual(solve_m_of_s(s).unwrap().x);
        let off = residual(0.2);
        assert!(at_root < 5e-3 && at_root < 0.02 * off, "{at_root} vs {off}");
        assert!(off > 0.1, "{off}");
    }
}
