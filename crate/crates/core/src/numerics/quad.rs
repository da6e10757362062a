//! Composite Gauss–Legendre panels.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let n = NonZeroUsize::new(n.max(1)).expect("n >= 1");
        let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Shared rule of degree `n`; rules are built once and never mutated.
pub fn gauss_rule(n: usize) -> &'static GaussRule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    *guard.entry(n).or_insert_with(|| Box::leak(Box::new(GaussRule::new(n))))
}

/// `n + 1` geometrically spaced edges from `a` to `b` (both positive).
pub fn geometric_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let ratio = (b / a).ln() / n as f64;
    let mut edges: Vec<f64> = (0..=n).map(|k| a * (ratio * k as f64).exp()).collect();
    edges[0] = a;
    edges[n] = b;
    edges
}

/// `n + 1` uniformly spaced edges from `a` to `b`.
pub fn uniform_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut edges: Vec<f64> = (0..=n).map(|k| a + h * k as f64).collect();
    edges[n] = b;
    edges
}

pub fn integrate_panels(edges: &[f64], rule: &GaussRule, mut f: impl FnMut(f64) -> f64) -> f64 {
    edges.windows(2).map(|e| rule.integrate(e[0], e[1], &mut f)).sum()
}

/// Repeats `estimate(level)` with doubled resolution until two successive
/// values agree to `rel_tol` (relative to `max(|I|, scale)`).
pub fn converge(
    what: &'static str,
    rel_tol: f64,
    scale: f64,
    max_levels: usize,
    mut estimate: impl FnMut(usize) -> f64,
) -> Result<f64> {
    let mut prev = estimate(0);
    let mut err = f64::INFINITY;
    for level in 1..=max_levels {
        let next = estimate(level);
        err = (next - prev).abs();
        if !next.is_finite() {
            break;
        }
        if err <= rel_tol * next.abs().max(scale) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NotConverged { what, estimate: prev, error: err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussRule::new(6);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-11);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cached_rule_is_shared() {
        assert!(std::ptr::eq(gauss_rule(9), gauss_rule(9)));
    }

    #[test]
    fn geometric_edges_hit_endpoints() {
        let e = geometric_edges(1e-3, 1e3, 6);
        assert_eq!(e.len(), 7);
        assert_eq!(e[0], 1e-3);
        assert_eq!(e[6], 1e3);
        assert!((e[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn converge_reports_failure() {
        let r = converge("oscillation", 1e-12, 1.0, 3, |k| k as f64);
        assert!(matches!(r, Err(Error::NotConverged { .. })));
        let ok = converge("geometric", 1e-10, 1.0, 60, |k| 1.0 - 0.5f64.powi(k as i32));
        assert!((ok.unwrap() - 1.0).abs() < 1e-9);
    }
}
