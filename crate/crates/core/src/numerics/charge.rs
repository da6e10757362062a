//! Charges: radial profiles `f(r)` of `ξ̂(p) = f(|p|) Y_{ℓn}(Ω_p)` on a grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::grid::{Measure, RadialGrid};
use crate::numerics::quad::{gauss_rule, uniform_edges};

/// Power-law continuation `f(r) = coefficient · r^{-exponent}` beyond `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub exponent: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone)]
pub struct Charge {
    pub ell: usize,
    pub n: i32,
    pub values: Vec<f64>,
    pub grid: Arc<RadialGrid>,
    pub tail: Option<Tail>,
}

impl Charge {
    pub fn new(ell: usize, n: i32, values: Vec<f64>, grid: Arc<RadialGrid>) -> Result<Self> {
        if n.unsigned_abs() as usize > ell {
            return domain(format!("|n| = {} exceeds ell = {ell}", n.abs()));
        }
        if values.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("charge values must be finite");
        }
        Ok(Charge { ell, n, values, grid, tail: None })
    }

    pub fn from_fn(ell: usize, n: i32, grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Charge::new(ell, n, values, grid)
    }

    pub fn zeros(ell: usize, n: i32, grid: Arc<RadialGrid>) -> Result<Self> {
        let len = grid.len();
        Charge::new(ell, n, vec![0.0; len], grid)
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn scaled(&self, c: f64) -> Charge {
        Charge {
            values: self.values.iter().map(|v| c * v).collect(),
            tail: self.tail.map(|t| Tail { coefficient: c * t.coefficient, ..t }),
            ..self.clone()
        }
    }

    /// Checks that `other` lives on the same grid and sector.
    pub fn compatible(&self, other: &Charge) -> Result<()> {
        if self.ell != other.ell {
            return Err(Error::Mismatch(format!("sectors {} and {}", self.ell, other.ell)));
        }
        self.on_grid(&other.grid)
    }

    pub fn on_grid(&self, grid: &RadialGrid) -> Result<()> {
        if std::ptr::eq(self.grid.as_ref(), grid) || self.grid.same_nodes(grid) {
            Ok(())
        } else {
            Err(Error::Mismatch(format!("charge on {} used with {}", self.grid.id(), grid.id())))
        }
    }

    /// Sum of two charges; tails must match in exponent (or one be absent).
    pub fn add(&self, other: &Charge) -> Result<Charge> {
        self.compatible(other)?;
        let tail = match (self.tail, other.tail) {
            (None, t) | (t, None) => t,
            (Some(a), Some(b)) if (a.exponent - b.exponent).abs() < 1e-14 => {
                Some(Tail { exponent: a.exponent, coefficient: a.coefficient + b.coefficient })
            }
            _ => return domain("cannot add charges with different tail exponents"),
        };
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Charge { values, tail, ..self.clone() })
    }

    /// `f(r)`: interpolated on the grid, the tail beyond `r_max`.
    pub fn eval(&self, r: f64) -> f64 {
        if r > self.grid.r_max() {
            return self.tail.map_or(0.0, |t| t.coefficient * r.powf(-t.exponent));
        }
        self.grid.interpolate(&self.values, r).unwrap_or(0.0)
    }

    /// Samples this charge on `grid`, which must start with this charge's grid
    /// (typically `self.grid.extended(..)`); the tail annotation is kept.
    pub fn resampled(&self, grid: Arc<RadialGrid>) -> Result<Charge> {
        let n = self.grid.len();
        if grid.len() < n || grid.nodes[..n] != self.grid.nodes[..] {
            return Err(Error::Mismatch("target grid does not extend the charge grid".into()));
        }
        let mut values = self.values.clone();
        values.extend(grid.nodes[n..].iter().map(|&r| self.eval(r)));
        Ok(Charge { values, grid, ..self.clone() })
    }

    /// `∫ |f|² density(r) dr` including the analytic tail; `INFINITY` when the
    /// declared tail is not integrable in that measure.
    pub fn norm_sq(&self, measure: Measure) -> Result<f64> {
        let w = self.grid.measured_weights_in(measure)?;
        let inner: f64 = w.iter().zip(&self.values).map(|(w, v)| w * v * v).sum();
        let tail = match self.tail {
            None => 0.0,
            Some(t) => t.coefficient.powi(2) * power_tail_integral(2.0 * t.exponent, measure, self.grid.r_max())?,
        };
        Ok(inner + tail)
    }

    /// `∫ f g r² dr` over the grid plus analytic tails.
    pub fn l2_inner(&self, other: &Charge) -> Result<f64> {
        self.compatible(other)?;
        let inner = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(self.values.iter().zip(&other.values))
            .map(|((r, w), (a, b))| w * r * r * a * b)
            .sum::<f64>();
        let tail = match (self.tail, other.tail) {
            (Some(a), Some(b)) => {
                a.coefficient * b.coefficient
                    * power_tail_integral(a.exponent + b.exponent, Measure::L2, self.grid.r_max())?
            }
            _ => 0.0,
        };
        Ok(inner + tail)
    }
}

/// `∫_{r0}^∞ r^{-p} density(r) dr`, `INFINITY` if divergent.
pub fn power_tail_integral(p: f64, measure: Measure, r0: f64) -> Result<f64> {
    let s = match measure.sobolev_index() {
        Some(s) => s,
        None => return domain("WLambda has no pointwise weight"),
    };
    // Integrand ~ r^{2+2s-p} at infinity.
    let kappa = p - 3.0 - 2.0 * s;
    if kappa <= 0.0 {
        return Ok(f64::INFINITY);
    }
    if s == 0.0 {
        return Ok(r0.powf(-kappa) / kappa);
    }
    // r = r0 e^v; the integrand decays like e^{-κ v}.
    let v_max = (60.0 / kappa).min(400.0);
    let rule = gauss_rule(12);
    let edges = uniform_edges(0.0, v_max, (2.0 * v_max).ceil() as usize);
    let mut total = 0.0;
    for e in edges.windows(2) {
        total += rule.integrate(e[0], e[1], |v| {
            let r = r0 * v.exp();
            r.powf(-p) * measure.density(r).expect("pointwise") * r
        });
    }
    let r_far = r0 * v_max.exp();
    Ok(total + r_far.powf(-kappa) / kappa)
}
