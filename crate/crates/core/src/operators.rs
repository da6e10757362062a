//! Dense Nyström discretizations of `T_λ^{(ℓ)} + α` and `W_λ^{(ℓ)}`.
//!
//! Rows are output nodes: `(M f)_i = diag(r_i) f_i + Σ_j w_j K(r_i, r_j) f_j`.
//! Quadratic forms use the radial `L²` pairing `Σ_i w_i r_i² f_i g_i`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{diag_t, diag_w, KernelSpec};
use crate::numerics::quad::{gauss_rule, uniform_edges};
use crate::numerics::{Charge, GridSpec, Measure, RadialGrid, Tail};
use crate::params::efimov_lambda;

/// Decades appended to a grid when a tail-annotated charge enters a pairing.
pub const TAIL_DECADES: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    TplusAlpha,
    W,
}

#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub matrix: DMatrix<f64>,
    pub grid: Arc<RadialGrid>,
    pub kind: OperatorKind,
    pub spec: KernelSpec,
}

fn diag_of(spec: &KernelSpec, kind: OperatorKind, r: f64) -> f64 {
    match kind {
        OperatorKind::TplusAlpha => diag_t(spec, r),
        OperatorKind::W => diag_w(spec, r),
    }
}

fn kernel_of(spec: &KernelSpec, kind: OperatorKind, r: f64, rp: f64) -> f64 {
    match kind {
        OperatorKind::TplusAlpha => spec.t(r, rp),
        OperatorKind::W => spec.w(r, rp),
    }
}

/// Dense `rows × cols` matrix of `w_j K(r_i, r_j)`, rows in parallel.
pub(crate) fn kernel_block(
    spec: &KernelSpec,
    kind: OperatorKind,
    rows: &[f64],
    cols: &[f64],
    col_weights: &[f64],
) -> DMatrix<f64> {
    let data: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&r| cols.iter().zip(col_weights).map(move |(&rp, &w)| w * kernel_of(spec, kind, r, rp)))
        .collect();
    DMatrix::from_row_slice(rows.len(), cols.len(), &data)
}

pub fn assemble(spec: &KernelSpec, grid: Arc<RadialGrid>, kind: OperatorKind) -> Result<SectorOperator> {
    if kind == OperatorKind::W && spec.lambda == 0.0 && grid.nodes[0] == 0.0 {
        return domain("W at lambda = 0 is singular at the origin");
    }
    let mut matrix = kernel_block(spec, kind, &grid.nodes, &grid.nodes, &grid.weights);
    for (i, &r) in grid.nodes.iter().enumerate() {
        matrix[(i, i)] += diag_of(spec, kind, r);
    }
    Ok(SectorOperator { matrix, grid, kind, spec: *spec })
}

/// `∫_{r_max}^∞ K(r, r') c r'^{-e} dr'`; fails when the integral diverges.
pub fn tail_row_integral(spec: &KernelSpec, kind: OperatorKind, r: f64, r_max: f64, tail: &Tail) -> Result<f64> {
    let ell = spec.ell as f64;
    // K_T ~ r'^{-ℓ}, K_W ~ r'^{-ℓ-2}; with dr' = r' dv the integrand decays like e^{-κ v}.
    let kappa = match kind {
        OperatorKind::TplusAlpha => tail.exponent + ell - 1.0,
        OperatorKind::W => tail.exponent + ell + 1.0,
    };
    if kappa <= 0.0 {
        return domain(format!(
            "tail exponent {} is too slow for the sector-{} {:?} integral",
            tail.exponent, spec.ell, kind
        ));
    }
    let v_max = (40.0 / kappa).min(300.0);
    let rule = gauss_rule(12);
    let f = |v: f64| {
        let rp = r_max * v.exp();
        kernel_of(spec, kind, r, rp) * rp.powf(-tail.exponent) * rp
    };
    let mut total = 0.0;
    for e in uniform_edges(0.0, v_max, (2.0 * v_max).ceil() as usize).windows(2) {
        total += rule.integrate(e[0], e[1], f);
    }
    Ok(tail.coefficient * (total + f(v_max) / kappa))
}

impl SectorOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(values);
        (&self.matrix * v).as_slice().to_vec()
    }

    fn check(&self, xi: &Charge) -> Result<()> {
        if xi.ell != self.spec.ell {
            return Err(Error::Mismatch(format!("charge sector {} vs operator sector {}", xi.ell, self.spec.ell)));
        }
        xi.on_grid(&self.grid)
    }

    /// `M f` on the grid nodes, including the tail of `f` beyond `r_max`.
    pub fn apply_charge(&self, xi: &Charge) -> Result<Vec<f64>> {
        self.check(xi)?;
        let mut out = self.apply(&xi.values);
        if let Some(tail) = xi.tail {
            let r_max = self.grid.r_max();
            let extra: Result<Vec<f64>> = self
                .grid
                .nodes
                .par_iter()
                .map(|&r| tail_row_integral(&self.spec, self.kind, r, r_max, &tail))
                .collect();
            for (o, e) in out.iter_mut().zip(extra?) {
                *o += e;
            }
        }
        Ok(out)
    }

    /// `D^{1/2} M D^{-1/2}` in the given pointwise measure.
    pub fn conjugated(&self, measure: Measure) -> Result<DMatrix<f64>> {
        let d = self.grid.measured_weights_in(measure)?;
        Ok(conjugate(&self.matrix, &d, &d))
    }

    /// Largest relative asymmetry of the `L²`-conjugated matrix.
    pub fn symmetry_defect(&self) -> Result<f64> {
        let s = self.conjugated(Measure::L2)?;
        let asym = (&s - s.transpose()).amax();
        Ok(asym / s.amax())
    }
}

/// `diag(d_out)^{1/2} M diag(d_in)^{-1/2}`.
pub(crate) fn conjugate(m: &DMatrix<f64>, d_out: &[f64], d_in: &[f64]) -> DMatrix<f64> {
    let so: Vec<f64> = d_out.iter().map(|d| d.sqrt()).collect();
    let si: Vec<f64> = d_in.iter().map(|d| 1.0 / d.sqrt()).collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| so[i] * m[(i, j)] * si[j])
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn l2_pair(grid: &RadialGrid, f: &[f64], g: &[f64]) -> f64 {
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .zip(f.iter().zip(g))
        .map(|((r, w), (a, b))| w * r * r * a * b)
        .sum()
}

/// `⟨ξ, (T + α) ξ⟩` in the radial `L²` pairing; the Friedrichs form is twice this.
///
/// A tail of `ξ` enters through `(T + α) ξ` on the grid nodes; the pairing itself
/// stops at `r_max`.
pub fn form_phi(t_op: &SectorOperator, xi: &Charge) -> Result<f64> {
    if t_op.kind != OperatorKind::TplusAlpha {
        return Err(Error::Mismatch("form_phi needs a TplusAlpha operator".into()));
    }
    let tx = t_op.apply_charge(xi)?;
    Ok(l2_pair(&t_op.grid, &xi.values, &tx))
}

/// `⟨ξ, W_λ η⟩`. Tail-annotated charges are paired on a grid extended by
/// [`TAIL_DECADES`] decades.
pub fn w_inner(w_op: &SectorOperator, xi: &Charge, eta: &Charge) -> Result<f64> {
    if w_op.kind != OperatorKind::W {
        return Err(Error::Mismatch("w_inner needs a W operator".into()));
    }
    w_op.check(xi)?;
    w_op.check(eta)?;
    if xi.tail.is_none() && eta.tail.is_none() {
        let we = w_op.apply(&eta.values);
        return Ok(l2_pair(&w_op.grid, &xi.values, &we));
    }
    let ext = Arc::new(w_op.grid.extended(TAIL_DECADES)?);
    let (x, e) = (xi.resampled(ext.clone())?, eta.resampled(ext.clone())?);
    let big = assemble(&w_op.spec, ext.clone(), OperatorKind::W)?;
    let we = big.apply(&e.values);
    Ok(l2_pair(&ext, &x.values, &we))
}

/// Spectral bottom of `2(T + α)` against `W` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottomEstimate {
    pub value: f64,
    /// Five smallest generalized eigenvalues, ascending.
    pub lowest: Vec<f64>,
    /// `value > 0`.
    pub positive: bool,
    pub grid_id: String,
}

fn require_above_m_star(spec: &KernelSpec) -> Result<()> {
    let m = spec.mass();
    if efimov_lambda(m)? >= 1.0 {
        return domain(format!("m = {m} does not exceed m*"));
    }
    Ok(())
}

/// Smallest eigenvalues of `a x = θ b x` for symmetric `a` and positive definite `b`.
pub(crate) fn generalized_lowest(a: &DMatrix<f64>, b: &DMatrix<f64>, count: usize) -> Result<Vec<f64>> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("W matrix is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let eig = SymmetricEigen::new(symmetrized(&c));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals.truncate(count);
    Ok(vals)
}

pub fn bottom(spec: &KernelSpec, grid: Arc<RadialGrid>) -> Result<BottomEstimate> {
    require_above_m_star(spec)?;
    let t = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
    let w = assemble(spec, grid.clone(), OperatorKind::W)?;
    let st = symmetrized(&t.conjugated(Measure::L2)?) * 2.0;
    let sw = symmetrized(&w.conjugated(Measure::L2)?);
    let lowest = generalized_lowest(&st, &sw, 5)?;
    let value = lowest[0];
    Ok(BottomEstimate { value, lowest, positive: value > 0.0, grid_id: grid.id() })
}

/// Smallest singular value of `2(T + α)` in the `W`-energy geometry,
/// `σ_min(L⁻¹ 2T L⁻ᵀ)` with `W = L Lᵀ`. It never lies below a positive [`bottom`].
pub fn energy_sigma_min(spec: &KernelSpec, grid: Arc<RadialGrid>) -> Result<f64> {
    let t = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
    let w = assemble(spec, grid, OperatorKind::W)?;
    let st = t.conjugated(Measure::L2)? * 2.0;
    let chol = symmetrized(&w.conjugated(Measure::L2)?)
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("W matrix is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&st)
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    Ok(c.singular_values().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Bottom on a grid and on its panel-doubled refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottomWithError {
    pub coarse: BottomEstimate,
    pub fine: BottomEstimate,
    /// Largest relative change among the five lowest values.
    pub refinement_delta: f64,
}

pub fn bottom_with_error(spec: &KernelSpec, grid: &GridSpec) -> Result<BottomWithError> {
    let coarse = bottom(spec, Arc::new(grid.build(Measure::L2)?))?;
    let fine = bottom(spec, Arc::new(grid.refined().build(Measure::L2)?))?;
    let refinement_delta = coarse
        .lowest
        .iter()
        .zip(&fine.lowest)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    Ok(BottomWithError { coarse, fine, refinement_delta })
}

/// `min ⟨ξ,Tξ⟩ / ∫√(νr²+λ)|ξ|² r² dr − 2π²(1 − Λ(m))` over the grid space (α excluded).
pub fn positivity_margin(spec: &KernelSpec, grid: Arc<RadialGrid>) -> Result<f64> {
    require_above_m_star(spec)?;
    let bound = 2.0 * PI * PI * (1.0 - efimov_lambda(spec.mass())?);
    let t = assemble(&spec.with_alpha(0.0), grid.clone(), OperatorKind::TplusAlpha)?;
    let st = symmetrized(&t.conjugated(Measure::L2)?);
    let scale: Vec<f64> = grid.nodes.iter().map(|&r| 1.0 / (spec.nu * r * r + spec.lambda).sqrt().sqrt()).collect();
    let c = DMatrix::from_fn(st.nrows(), st.ncols(), |i, j| scale[i] * st[(i, j)] * scale[j]);
    let eig = SymmetricEigen::new(symmetrized(&c));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min - bound)
}

/// Discrete norm of `T + α` from the `H^{-1/2}`- to the `H^{-3/2}`-weighted space.
pub fn mapping_norm(spec: &KernelSpec, grid: Arc<RadialGrid>) -> Result<f64> {
    let t = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
    let d_in = grid.measured_weights_in(Measure::Hminus12)?;
    let d_out = grid.measured_weights_in(Measure::Hminus32)?;
    let s = conjugate(&t.matrix, &d_out, &d_in);
    let sv = s.singular_values();
    Ok(sv.iter().copied().fold(0.0, f64::max))
}

/// `‖(T + α) f‖_{H^{-3/2}} / ‖f‖_{H^{-1/2}}` for one profile on the grid.
pub fn mapping_ratio(spec: &KernelSpec, grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<f64> {
    let xi = Charge::from_fn(spec.ell, 0, grid.clone(), f)?;
    let t = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
    let tf = t.apply(&xi.values);
    let out = Charge::new(spec.ell, 0, tf, grid)?.norm_sq(Measure::Hminus32)?;
    Ok((out / xi.norm_sq(Measure::Hminus12)?).sqrt())
}
