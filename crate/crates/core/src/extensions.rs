//! Quadratic forms of the extension family in sector `ℓ = 1`.
//!
//! The singular charges `Ξ_{1,n}` share one radial profile (the near-null
//! vector of [`crate::zeromode`]) and differ by `Y_{1n}`. All pairings run on
//! one grid that already contains the profile's tail, so every discrete
//! identity below holds to solver precision.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::u_norm_sq;
use crate::error::{domain, Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::legendre::y_integral;
use crate::numerics::{Charge, GridSpec, Measure, RadialGrid};
use crate::operators::{assemble, OperatorKind, SectorOperator, TAIL_DECADES};
use crate::zeromode::smallest_singular;

/// `‖Ξ_{1,n}‖²_{W_λ}` after rescaling.
pub const BASIS_NORMALIZATION: f64 = 2.0;

/// One extension parameter: a real number or the Friedrichs marker `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    Finite(f64),
    Friedrichs,
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Friedrichs => None,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Friedrichs => write!(f, "inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "+inf" | "infinity" | "∞") {
            return Ok(Beta::Friedrichs);
        }
        match t.parse::<f64>() {
            Ok(b) if b.is_finite() => Ok(Beta::Finite(b)),
            _ => domain(format!("cannot read beta from '{s}'")),
        }
    }
}

/// `(β₋₁, β₀, β₁)` and `(q₋₁, q₀, q₁)`, indexed by `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub beta: [Beta; 3],
    pub q: [Complex64; 3],
}

impl BetaParams {
    pub fn new(beta: [Beta; 3], q: [Complex64; 3]) -> Result<Self> {
        for k in 0..3 {
            if beta[k] == Beta::Friedrichs && q[k] != Complex64::new(0.0, 0.0) {
                return domain(format!("q_{} must vanish in a Friedrichs direction", k as i32 - 1));
            }
            if !(q[k].re.is_finite() && q[k].im.is_finite()) {
                return domain("q must be finite");
            }
        }
        Ok(BetaParams { beta, q })
    }

    pub fn real(beta: [f64; 3], q: [f64; 3]) -> Result<Self> {
        BetaParams::new(beta.map(Beta::Finite), q.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn friedrichs() -> Self {
        BetaParams { beta: [Beta::Friedrichs; 3], q: [Complex64::new(0.0, 0.0); 3] }
    }

    fn has_charge(&self) -> bool {
        self.q.iter().any(|q| q.norm() != 0.0)
    }

    /// `βₙ qₙ`, zero in Friedrichs directions.
    pub fn beta_q(&self, k: usize) -> Complex64 {
        self.beta[k].finite().map_or(Complex64::new(0.0, 0.0), |b| b * self.q[k])
    }
}

/// Assembled `T_λ^{(1)} + α` and `W_λ^{(1)}` on one grid.
#[derive(Debug, Clone)]
pub struct FormContext {
    pub spec: KernelSpec,
    pub grid: Arc<RadialGrid>,
    pub t: SectorOperator,
    pub w: SectorOperator,
}

impl FormContext {
    pub fn new(spec: &KernelSpec, grid: Arc<RadialGrid>) -> Result<Self> {
        let t = assemble(spec, grid.clone(), OperatorKind::TplusAlpha)?;
        let w = assemble(spec, grid.clone(), OperatorKind::W)?;
        Ok(FormContext { spec: *spec, grid, t, w })
    }

    /// `Σ w r² f g` over the context grid.
    pub fn pair(&self, f: &[f64], g: &[f64]) -> f64 {
        let gr = &self.grid;
        gr.nodes.iter().zip(&gr.weights).zip(f.iter().zip(g)).map(|((r, w), (a, b))| w * r * r * a * b).sum()
    }

    fn check(&self, xi: &Charge) -> Result<()> {
        if xi.ell != self.spec.ell {
            return Err(Error::Mismatch(format!("charge sector {} vs context sector {}", xi.ell, self.spec.ell)));
        }
        xi.on_grid(&self.grid)
    }
}

/// Shared radial profile of `Ξ_{1,n}` with `‖Ξ‖²_W = normalization`.
#[derive(Debug, Clone)]
pub struct SingularBasis {
    pub profile: Charge,
    pub normalization: f64,
    /// Smallest singular value of the probe that produced the profile.
    pub sigma_min: f64,
}

impl SingularBasis {
    /// Rescales `profile` (tail-free, on `ctx.grid`) to `‖Ξ‖²_W = 2`.
    pub fn from_profile(profile: Charge, ctx: &FormContext) -> Result<Self> {
        ctx.check(&profile)?;
        if profile.tail.is_some() {
            return domain("resample the profile onto a tail-covering grid first");
        }
        let norm = ctx.pair(&profile.values, &ctx.w.apply(&profile.values));
        if !(norm > 0.0) {
            return Err(Error::LinearAlgebra(format!("profile has non-positive W norm {norm}")));
        }
        let profile = profile.scaled((BASIS_NORMALIZATION / norm).sqrt());
        Ok(SingularBasis { profile, normalization: BASIS_NORMALIZATION, sigma_min: f64::NAN })
    }
}

/// Near-null vector of the probe on `grid`, moved onto a grid extended by
/// [`TAIL_DECADES`] decades, together with the context on that grid.
pub fn singular_setup(spec: &KernelSpec, grid: &GridSpec) -> Result<(FormContext, SingularBasis)> {
    if spec.ell != 1 {
        return domain("singular charges live in sector 1");
    }
    let g = Arc::new(grid.build(Measure::Hminus12)?);
    let probe = smallest_singular(spec, g.clone())?;
    let ext = Arc::new(g.extended(TAIL_DECADES)?.with_measure(Measure::L2));
    let values = probe.vector.resampled(ext.clone())?.values;
    let ctx = FormContext::new(spec, ext.clone())?;
    let mut basis = SingularBasis::from_profile(Charge::new(1, 0, values, ext)?, &ctx)?;
    basis.sigma_min = probe.sigma_min;
    Ok((ctx, basis))
}

/// A complex charge `re + i·im` in a single `Y_{ℓn}`.
#[derive(Debug, Clone)]
pub struct ComplexCharge {
    pub re: Charge,
    pub im: Charge,
}

impl ComplexCharge {
    pub fn real(re: Charge) -> Result<Self> {
        let im = Charge::zeros(re.ell, re.n, re.grid.clone())?;
        Ok(ComplexCharge { re, im })
    }

    fn combined(&self, other: &ComplexCharge) -> Result<ComplexCharge> {
        Ok(ComplexCharge { re: self.re.add(&other.re)?, im: self.im.add(&other.im)? })
    }

    fn scaled(&self, c: Complex64) -> Result<ComplexCharge> {
        Ok(ComplexCharge {
            re: self.re.scaled(c.re).add(&self.im.scaled(-c.im))?,
            im: self.re.scaled(c.im).add(&self.im.scaled(c.re))?,
        })
    }
}

/// Regular charge in sector 1, one component per `n ∈ {−1, 0, 1}`.
#[derive(Debug, Clone)]
pub struct RegularCharge {
    pub components: [ComplexCharge; 3],
}

impl RegularCharge {
    pub fn zeros(grid: Arc<RadialGrid>) -> Result<Self> {
        let c = |n: i32| ComplexCharge::real(Charge::zeros(1, n, grid.clone())?);
        Ok(RegularCharge { components: [c(-1)?, c(0)?, c(1)?] })
    }

    /// Real profile in component `n`, zero elsewhere.
    pub fn single(xi: Charge) -> Result<Self> {
        if xi.ell != 1 || xi.n.abs() > 1 {
            return domain("regular charges live in sector 1");
        }
        let mut out = RegularCharge::zeros(xi.grid.clone())?;
        let k = (xi.n + 1) as usize;
        out.components[k] = ComplexCharge::real(xi)?;
        Ok(out)
    }

    pub fn add(&self, other: &RegularCharge) -> Result<RegularCharge> {
        let c = |k: usize| self.components[k].combined(&other.components[k]);
        Ok(RegularCharge { components: [c(0)?, c(1)?, c(2)?] })
    }

    pub fn scaled(&self, c: f64) -> Result<RegularCharge> {
        let s = |k: usize| self.components[k].scaled(Complex64::new(c, 0.0));
        Ok(RegularCharge { components: [s(0)?, s(1)?, s(2)?] })
    }
}

fn require_h_half(xi: &Charge) -> Result<()> {
    // r^{-e} lies in H^{1/2} iff e > 2.
    match xi.tail {
        Some(t) if t.exponent <= 2.0 => domain(format!("tail exponent {} is outside H^1/2", t.exponent)),
        _ => Ok(()),
    }
}

/// `2⟨ξ, (T + α) ξ⟩`.
pub fn friedrichs_form(xi: &Charge, ctx: &FormContext) -> Result<f64> {
    ctx.check(xi)?;
    require_h_half(xi)?;
    Ok(2.0 * crate::operators::form_phi(&ctx.t, xi)?)
}

fn friedrichs_regular(xi: &RegularCharge, ctx: &FormContext) -> Result<f64> {
    let mut total = 0.0;
    for c in &xi.components {
        total += friedrichs_form(&c.re, ctx)? + friedrichs_form(&c.im, ctx)?;
    }
    Ok(total)
}

/// Friedrichs form of `ξ_reg` plus `Σ βₙ |qₙ|² ‖Ξ‖²_W`.
pub fn beta_form(xi_reg: &RegularCharge, bp: &BetaParams, basis: Option<&SingularBasis>, ctx: &FormContext) -> Result<f64> {
    let mut total = friedrichs_regular(xi_reg, ctx)?;
    if bp.has_charge() {
        let basis = basis.ok_or_else(|| Error::Domain("q ≠ 0 needs a singular basis".into()))?;
        for k in 0..3 {
            if let Some(b) = bp.beta[k].finite() {
                total += b * bp.q[k].norm_sqr() * basis.normalization;
            }
        }
    }
    Ok(total)
}

/// Solution `χ` of `(T + α) χ = ½ W Ξ` for the unit profile.
pub fn unit_regular_response(basis: &SingularBasis, ctx: &FormContext) -> Result<Charge> {
    ctx.check(&basis.profile)?;
    let rhs = DVector::from_vec(ctx.w.apply(&basis.profile.values).into_iter().map(|v| 0.5 * v).collect());
    let chi = ctx
        .t
        .matrix
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearAlgebra("T + α is singular on this grid".into()))?;
    Charge::new(1, 0, chi.as_slice().to_vec(), ctx.grid.clone())
}

/// `ξ₂` with `(T + α) ξ₂ = ½ W Σ βₙ qₙ Ξ_{1,n}`.
pub fn solve_regular_from_singular(bp: &BetaParams, basis: &SingularBasis, ctx: &FormContext) -> Result<RegularCharge> {
    let mut out = RegularCharge::zeros(ctx.grid.clone())?;
    if (0..3).all(|k| bp.beta_q(k).norm() == 0.0) {
        return Ok(out);
    }
    let chi = unit_regular_response(basis, ctx)?;
    for k in 0..3 {
        let bq = bp.beta_q(k);
        if bq.norm() != 0.0 {
            let unit = ComplexCharge::real(Charge { n: k as i32 - 1, ..chi.clone() })?;
            out.components[k] = unit.scaled(bq)?;
        }
    }
    Ok(out)
}

/// `(T + α) ξ₁ = 0` tested against `Ξ`: removes the `Ξ`-component of
/// `(T + α) g` using a second profile `h`.
pub fn project_core(g: &Charge, h: &Charge, basis: &SingularBasis, ctx: &FormContext) -> Result<Charge> {
    let a = ctx.pair(&basis.profile.values, &ctx.t.apply_charge(g)?);
    let b = ctx.pair(&basis.profile.values, &ctx.t.apply_charge(h)?);
    if b == 0.0 {
        return domain("second profile is blind to the singular charge");
    }
    g.add(&h.scaled(-a / b))
}

/// How the right-hand side of the three-body condition is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Bc2Reading {
    /// `2⟨Ξ, (T + α) ξ_reg⟩ = βₙ qₙ ‖Ξ‖²_W`.
    #[default]
    Linear,
    /// `⟨Ξ, (T + α) ξ_reg⟩ = βₙ |qₙ|²`.
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bc2Check {
    pub lhs: [Complex64; 3],
    pub rhs: [Complex64; 3],
    /// `|lhs − rhs|` per `n`.
    pub residuals: [f64; 3],
    /// Largest `|lhs|` or `|rhs|` over the three components.
    pub scale: f64,
    pub reading: Bc2Reading,
}

impl Bc2Check {
    /// Residuals relative to `scale`; all zero when every side vanishes.
    pub fn relative(&self) -> [f64; 3] {
        std::array::from_fn(|k| if self.scale == 0.0 { 0.0 } else { self.residuals[k] / self.scale })
    }
}

pub fn check_bc2(xi_reg: &RegularCharge, bp: &BetaParams, basis: &SingularBasis, ctx: &FormContext) -> Result<Bc2Check> {
    check_bc2_with(xi_reg, bp, basis, ctx, Bc2Reading::default())
}

pub fn check_bc2_with(
    xi_reg: &RegularCharge,
    bp: &BetaParams,
    basis: &SingularBasis,
    ctx: &FormContext,
    reading: Bc2Reading,
) -> Result<Bc2Check> {
    // ⟨Ξ, (T+α) ξ⟩ = ⟨(T+α) Ξ, ξ⟩ in the discrete pairing.
    let t_xi = ctx.t.apply_charge(&basis.profile)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut lhs = [zero; 3];
    let mut rhs = [zero; 3];
    for k in 0..3 {
        let c = &xi_reg.components[k];
        ctx.check(&c.re)?;
        ctx.check(&c.im)?;
        let pairing = Complex64::new(ctx.pair(&t_xi, &c.re.values), ctx.pair(&t_xi, &c.im.values));
        let beta = bp.beta[k].finite().unwrap_or(0.0);
        match reading {
            Bc2Reading::Linear => {
                lhs[k] = 2.0 * pairing;
                rhs[k] = beta * bp.q[k] * basis.normalization;
            }
            Bc2Reading::Squared => {
                lhs[k] = pairing;
                rhs[k] = Complex64::new(beta * bp.q[k].norm_sqr(), 0.0);
            }
        }
    }
    let residuals = std::array::from_fn(|k| (lhs[k] - rhs[k]).norm());
    let scale = (0..3).map(|k| lhs[k].norm().max(rhs[k].norm())).fold(0.0, f64::max);
    Ok(Bc2Check { lhs, rhs, residuals, scale, reading })
}

/// `F̂(p₁,p₂) = φ̂(p₁)ψ̂(p₂) − φ̂(p₂)ψ̂(p₁)` with `φ̂ = a(|p|) Y₀₀` and
/// `ψ̂ = b(|p|) Y₁₀`.
#[derive(Debug, Clone)]
pub struct SeparableState {
    pub a: Charge,
    pub b: Charge,
}

impl SeparableState {
    pub fn new(a: Charge, b: Charge) -> Result<Self> {
        if a.ell != 0 || b.ell != 1 || b.n != 0 {
            return domain("separable states pair an s-wave a with a p-wave (n = 0) b");
        }
        if a.tail.is_some() || b.tail.is_some() {
            return domain("separable profiles must be tail-free");
        }
        if !a.grid.same_nodes(&b.grid) {
            return Err(Error::Mismatch("separable profiles on different grids".into()));
        }
        Ok(SeparableState { a, b })
    }

    fn moment(&self, f: &[f64], g: &[f64], power: i32) -> f64 {
        let gr = &self.a.grid;
        gr.nodes.iter().zip(&gr.weights).zip(f.iter().zip(g)).map(|((r, w), (x, y))| w * r.powi(power) * x * y).sum()
    }

    /// `‖F‖² = 2‖φ‖²‖ψ‖²`.
    pub fn norm_sq(&self) -> f64 {
        2.0 * self.moment(&self.a.values, &self.a.values, 2) * self.moment(&self.b.values, &self.b.values, 2)
    }

    /// `∫(p₁² + p₂² + μ p₁·p₂)|F|²`.
    pub fn h_free(&self, mu: f64) -> f64 {
        let (a, b) = (&self.a.values, &self.b.values);
        let kinetic = self.moment(a, a, 4) * self.moment(b, b, 2) + self.moment(a, a, 2) * self.moment(b, b, 4);
        let overlap = self.moment(a, b, 3);
        2.0 * kinetic - 2.0 * mu / 3.0 * overlap * overlap
    }

    /// `⟨F, u_ξ⟩` for a real `ξ = f(|p|) Y₁₀`; other `n` are orthogonal to `F`.
    pub fn overlap_u(&self, f: &Charge, spec: &KernelSpec) -> Result<f64> {
        if f.ell != 1 {
            return domain("u-overlap needs a sector-1 charge");
        }
        if f.n != 0 {
            return Ok(0.0);
        }
        let g = &self.a.grid;
        let n = g.len();
        let fv: Vec<f64> = g.nodes.iter().map(|&r| f.eval(r)).collect();
        let mut total = 0.0;
        for i in 0..n {
            let r1 = g.nodes[i];
            if fv[i] == 0.0 {
                continue;
            }
            let w1 = g.weights[i] * r1 * r1 * fv[i];
            let mut row = 0.0;
            for j in 0..n {
                let r2 = g.nodes[j];
                let aa = r1 * r1 + r2 * r2 + spec.lambda;
                let bb = spec.mu * r1 * r2;
                let k1 = y_integral(1, aa, bb, 1);
                let k0 = y_integral(0, aa, bb, 1);
                row += g.weights[j] * r2 * r2 * (self.a.values[i] * self.b.values[j] * k1 - self.a.values[j] * self.b.values[i] * k0);
            }
            total += w1 * row;
        }
        Ok(2.0 * 2.0 * PI / (4.0 * PI).sqrt() * total)
    }
}

/// Terms of the form `λ‖F‖² − λ‖F + u_ξ‖² + H_free[F] + charge term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFormTerms {
    pub norm_f: f64,
    pub norm_f_plus_u: f64,
    pub h_free: f64,
    /// `2(⟨ξ_reg, (T+α) ξ_reg⟩ + Σ βₙ|qₙ|²)`.
    pub charge_term: f64,
    pub value: f64,
}

/// The extension form on `F + u_ξ`, `ξ = ξ_reg + Σ qₙ Ξ_{1,n}`.
pub fn h_form_separable(
    state: &SeparableState,
    xi_reg: &RegularCharge,
    bp: &BetaParams,
    basis: Option<&SingularBasis>,
    ctx: &FormContext,
) -> Result<HFormTerms> {
    let spec = &ctx.spec;
    let mut full = xi_reg.clone();
    if bp.has_charge() {
        let basis = basis.ok_or_else(|| Error::Domain("q ≠ 0 needs a singular basis".into()))?;
        for k in 0..3 {
            if bp.q[k].norm() != 0.0 {
                let unit = ComplexCharge::real(Charge { n: k as i32 - 1, ..basis.profile.clone() })?;
                full.components[k] = full.components[k].combined(&unit.scaled(bp.q[k])?)?;
            }
        }
    }
    let norm_f = state.norm_sq();
    let mut u_sq = 0.0;
    let mut cross = 0.0;
    for c in &full.components {
        u_sq += u_norm_sq(&c.re, spec)? + u_norm_sq(&c.im, spec)?;
        cross += state.overlap_u(&c.re, spec)?;
    }
    let norm_f_plus_u = norm_f + 2.0 * cross + u_sq;
    let h_free = state.h_free(spec.mu);
    let charge_term = beta_form(xi_reg, bp, basis, ctx)?;
    let lambda = spec.lambda;
    let value = lambda * norm_f - lambda * norm_f_plus_u + h_free + charge_term;
    Ok(HFormTerms { norm_f, norm_f_plus_u, h_free, charge_term, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeromode::fit_tail;

    fn small_ctx(m: f64) -> FormContext {
        let g = Arc::new(GridSpec { n_panels: 18, nodes_per_panel: 10, r_min: 1e-3, r_max: 1e3 }.build(Measure::L2).unwrap());
        FormContext::new(&KernelSpec::from_mass(m, 1.0, 0.0, 1).unwrap(), g).unwrap()
    }

    fn gauss(ctx: &FormContext, n: i32, width: f64) -> Charge {
        Charge::from_fn(1, n, ctx.grid.clone(), |r| r * (-r * r / width).exp()).unwrap()
    }

    fn setup() -> (FormContext, SingularBasis) {
        let spec = KernelSpec::from_mass(0.095, 1.0, 0.0, 1).unwrap();
        singular_setup(&spec, &GridSpec { n_panels: 30, nodes_per_panel: 10, r_min: 1e-2, r_max: 1e3 }).unwrap()
    }

    #[test]
    fn beta_parsing() {
        assert_eq!("inf".parse::<Beta>().unwrap(), Beta::Friedrichs);
        assert_eq!(" -2.5".parse::<Beta>().unwrap(), Beta::Finite(-2.5));
        assert!("nan".parse::<Beta>().is_err());
        assert!(BetaParams::new([Beta::Friedrichs; 3], [Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn friedrichs_form_is_affine_in_alpha() {
        let ctx = small_ctx(1.0);
        let xi = gauss(&ctx, 0, 1.0);
        let f0 = friedrichs_form(&xi, &ctx).unwrap();
        let ctx1 = FormContext::new(&ctx.spec.with_alpha(1.0), ctx.grid.clone()).unwrap();
        let f1 = friedrichs_form(&xi, &ctx1).unwrap();
        let l2 = xi.l2_inner(&xi).unwrap();
        assert!((f1 - f0 - 2.0 * l2).abs() < 1e-12 * f1.abs());
        assert!(f0 > 0.0);
    }

    #[test]
    fn beta_form_reductions() {
        let ctx = small_ctx(1.0);
        let xi = RegularCharge::single(gauss(&ctx, 1, 1.0)).unwrap();
        let f = friedrichs_form(&xi.components[2].re, &ctx).unwrap();
        assert_eq!(beta_form(&xi, &BetaParams::friedrichs(), None, &ctx).unwrap(), f);
        assert_eq!(beta_form(&xi, &BetaParams::real([1.0, -3.0, 2.0], [0.0; 3]).unwrap(), None, &ctx).unwrap(), f);
        assert!(beta_form(&xi, &BetaParams::real([1.0; 3], [1.0, 0.0, 0.0]).unwrap(), None, &ctx).is_err());
        let basis = SingularBasis::from_profile(gauss(&ctx, 0, 4.0), &ctx).unwrap();
        let zero = RegularCharge::zeros(ctx.grid.clone()).unwrap();
        let v = beta_form(&zero, &BetaParams::real([1.0; 3], [1.0, 0.0, 0.0]).unwrap(), Some(&basis), &ctx).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        let mut last = 0.0;
        for q in [1.0, 10.0, 100.0] {
            let bp = BetaParams::real([-1.0, 1.0, 1.0], [q, 0.0, 0.0]).unwrap();
            let v = beta_form(&zero, &bp, Some(&basis), &ctx).unwrap();
            assert!((v + 2.0 * q * q).abs() < 1e-9 * q * q);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn regular_solution_satisfies_the_boundary_condition() {
        let (ctx, basis) = setup();
        let bp = BetaParams::real([0.7, 1.3, -0.4], [1.0, -0.5, 2.0]).unwrap();
        let xi2 = solve_regular_from_singular(&bp, &basis, &ctx).unwrap();
        // Linear-algebra residual of the solve.
        let chi = unit_regular_response(&basis, &ctx).unwrap();
        let lhs = ctx.t.apply(&chi.values);
        let rhs: Vec<f64> = ctx.w.apply(&basis.profile.values).iter().map(|v| 0.5 * v).collect();
        let num = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den < 1e-10, "{}", num / den);
        let g = gauss(&ctx, 0, 1.0);
        let h = gauss(&ctx, 0, 4.0);
        let xi1 = RegularCharge::single(project_core(&g, &h, &basis, &ctx).unwrap()).unwrap();
        let reg = xi2.add(&xi1).unwrap();
        let check = check_bc2(&reg, &bp, &basis, &ctx).unwrap();
        for r in check.relative() {
            assert!(r < 1e-6, "{check:?}");
        }
        // Joint homogeneity.
        let bp3 = BetaParams::real([0.7, 1.3, -0.4], [-3.0, 1.5, -6.0]).unwrap();
        let reg3 = solve_regular_from_singular(&bp3, &basis, &ctx).unwrap().add(&xi1.scaled(-3.0).unwrap()).unwrap();
        let c3 = check_bc2(&reg3, &bp3, &basis, &ctx).unwrap();
        for k in 0..3 {
            assert!((c3.lhs[k] + 3.0 * check.lhs[k]).norm() < 1e-9 * check.lhs[k].norm().max(1e-300));
        }
        // Core charges alone satisfy the condition with q = 0.
        let c0 = check_bc2(&xi1, &BetaParams::friedrichs(), &basis, &ctx).unwrap();
        assert!(c0.residuals.iter().all(|r| *r < 1e-12 * ctx.pair(&g.values, &g.values).sqrt()));
    }

    #[test]
    fn readings_coincide_for_unit_real_q() {
        let (ctx, basis) = setup();
        let bp = BetaParams::real([0.5, 2.0, -1.0], [1.0, 1.0, 0.0]).unwrap();
        let reg = solve_regular_from_singular(&bp, &basis, &ctx).unwrap();
        let lin = check_bc2_with(&reg, &bp, &basis, &ctx, Bc2Reading::Linear).unwrap();
        let sq = check_bc2_with(&reg, &bp, &basis, &ctx, Bc2Reading::Squared).unwrap();
        for k in 0..3 {
            assert!(lin.relative()[k] < 1e-8);
            assert!(sq.relative()[k] < 1e-8);
        }
    }

    #[test]
    fn complex_q_follows_the_linear_reading() {
        let (ctx, basis) = setup();
        let q = [Complex64::new(0.3, -1.1), Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)];
        let bp = BetaParams::new([Beta::Finite(1.5), Beta::Finite(-0.2), Beta::Friedrichs], q).unwrap();
        let reg = solve_regular_from_singular(&bp, &basis, &ctx).unwrap();
        let c = check_bc2(&reg, &bp, &basis, &ctx).unwrap();
        assert!(c.relative().iter().all(|r| *r < 1e-8), "{c:?}");
    }

    #[test]
    fn regular_solution_decays_faster_than_the_singular_profile() {
        let (ctx, basis) = setup();
        let chi = unit_regular_response(&basis, &ctx).unwrap();
        let fx = fit_tail(&basis.profile, (1e4, 1e6)).unwrap();
        let fc = fit_tail(&chi, (1e4, 1e6)).unwrap();
        let s = crate::params::solve_s_of_m(0.095).unwrap().x;
        assert!((fx.exponent + 2.0 - s).abs() < 0.05, "{fx:?}");
        assert!(((fx.exponent - fc.exponent) - 2.0 * s).abs() < 0.15, "{fx:?} {fc:?} s = {s}");
    }

    #[test]
    fn h_form_limits() {
        let ctx = small_ctx(1.0);
        let a = Charge::from_fn(0, 0, ctx.grid.clone(), |r| (-r * r).exp()).unwrap();
        let b = gauss(&ctx, 0, 2.0);
        let state = SeparableState::new(a.clone(), b.clone()).unwrap();
        let zero = RegularCharge::zeros(ctx.grid.clone()).unwrap();
        let h = h_form_separable(&state, &zero, &BetaParams::friedrichs(), None, &ctx).unwrap();
        assert!((h.value - h.h_free).abs() < 1e-12 * h.h_free);
        let ctx2 = FormContext::new(&KernelSpec::from_mass(1.0, 3.0, 0.0, 1).unwrap(), ctx.grid.clone()).unwrap();
        let h2 = h_form_separable(&state, &zero, &BetaParams::friedrichs(), None, &ctx2).unwrap();
        assert!((h2.value - h.value).abs() < 1e-12 * h.value);
        // F = 0.
        let za = Charge::zeros(0, 0, ctx.grid.clone()).unwrap();
        let zb = Charge::zeros(1, 0, ctx.grid.clone()).unwrap();
        let xi = RegularCharge::single(gauss(&ctx, 0, 1.0)).unwrap();
        let h0 = h_form_separable(&SeparableState::new(za, zb).unwrap(), &xi, &BetaParams::friedrichs(), None, &ctx).unwrap();
        let expect = -ctx.spec.lambda * u_norm_sq(&xi.components[1].re, &ctx.spec).unwrap()
            + friedrichs_form(&xi.components[1].re, &ctx).unwrap();
        assert!((h0.value - expect).abs() < 1e-12 * expect.abs());
    }
}
