//! Radial grids: geometric Gauss panels on `[r_min, r_max]` with a measure tag.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::quad::{gauss_rule, geometric_edges};

/// Weighted inner product a grid represents.
///
/// The pointwise densities multiply `dr`:
/// `L2 ↦ r²`, `Hminus12 ↦ r²(1+r²)^{-1/2}`, `Hplus12 ↦ r²(1+r²)^{1/2}`,
/// `Hminus32 ↦ r²(1+r²)^{-3/2}`. `WLambda` has no pointwise density; it is
/// realized by the assembled `W` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    L2,
    Hminus12,
    Hplus12,
    Hminus32,
    WLambda,
}

impl Measure {
    /// Sobolev index `s` of the weight `(1+r²)^s r²`.
    pub fn sobolev_index(self) -> Option<f64> {
        match self {
            Measure::L2 => Some(0.0),
            Measure::Hminus12 => Some(-0.5),
            Measure::Hplus12 => Some(0.5),
            Measure::Hminus32 => Some(-1.5),
            Measure::WLambda => None,
        }
    }

    pub fn density(self, r: f64) -> Option<f64> {
        let s = self.sobolev_index()?;
        let r2 = r * r;
        Some(if s == 0.0 { r2 } else { r2 * (1.0 + r2).powf(s) })
    }

    pub fn tag(self) -> &'static str {
        match self {
            Measure::L2 => "L2",
            Measure::Hminus12 => "Hminus12",
            Measure::Hplus12 => "Hplus12",
            Measure::Hminus32 => "Hminus32",
            Measure::WLambda => "WLambda",
        }
    }
}

/// Panel layout of a grid, independent of the measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_panels: usize,
    pub nodes_per_panel: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_panels: 48, nodes_per_panel: 12, r_min: 1e-4, r_max: 1e4 }
    }
}

impl GridSpec {
    pub fn build(&self, measure: Measure) -> Result<RadialGrid> {
        build_grid(self.n_panels, self.nodes_per_panel, self.r_min, self.r_max, measure)
    }

    pub fn panels_per_decade(&self) -> f64 {
        self.n_panels as f64 / (self.r_max / self.r_min).log10()
    }

    /// Same panel density, different outer radius.
    pub fn with_r_max(&self, r_max: f64) -> GridSpec {
        let decades = (r_max / self.r_min).log10();
        let n_panels = (self.panels_per_decade() * decades).round().max(1.0) as usize;
        GridSpec { n_panels, r_max, ..*self }
    }

    pub fn refined(&self) -> GridSpec {
        GridSpec { n_panels: 2 * self.n_panels, ..*self }
    }
}

/// Quadrature nodes and weights for `∫_0^{r_max} · dr`.
///
/// Geometric panels cover `[r_min, r_max]`; one extra origin panel covers
/// `[0, r_min]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub measure: Measure,
    pub edges: Vec<f64>,
    pub nodes_per_panel: usize,
}

pub fn build_grid(
    n_panels: usize,
    nodes_per_panel: usize,
    r_min: f64,
    r_max: f64,
    measure: Measure,
) -> Result<RadialGrid> {
    if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
        return domain(format!("grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"));
    }
    if n_panels == 0 || nodes_per_panel == 0 {
        return domain("grid needs at least one panel and one node per panel");
    }
    let mut edges = vec![0.0];
    edges.extend(geometric_edges(r_min, r_max, n_panels));
    RadialGrid::from_edges(edges, nodes_per_panel, measure)
}

impl RadialGrid {
    /// Gauss panels on arbitrary non-negative, strictly increasing edges.
    pub fn from_edges(edges: Vec<f64>, nodes_per_panel: usize, measure: Measure) -> Result<Self> {
        if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|e| e[1] <= e[0]) {
            return domain("panel edges must be non-negative and strictly increasing");
        }
        let rule = gauss_rule(nodes_per_panel);
        let mut nodes = Vec::with_capacity((edges.len() - 1) * nodes_per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for e in edges.windows(2) {
            for (x, w) in rule.mapped(e[0], e[1]) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Ok(RadialGrid { nodes, weights, measure, edges, nodes_per_panel })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of panels, the origin panel included.
    pub fn n_panels(&self) -> usize {
        self.edges.len() - 1
    }

    /// Start of the geometric part (the first positive edge).
    pub fn r_min(&self) -> f64 {
        if self.edges[0] > 0.0 { self.edges[0] } else { self.edges[1] }
    }

    fn n_geometric(&self) -> usize {
        self.n_panels() - usize::from(self.edges[0] == 0.0)
    }

    pub fn r_max(&self) -> f64 {
        *self.edges.last().expect("non-empty edges")
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n_panels: self.n_geometric(),
            nodes_per_panel: self.nodes_per_panel,
            r_min: self.r_min(),
            r_max: self.r_max(),
        }
    }

    /// Identifier recorded with every scan row.
    pub fn id(&self) -> String {
        format!(
            "{}:p{}n{}:{:e}-{:e}",
            self.measure.tag(),
            self.n_geometric(),
            self.nodes_per_panel,
            self.r_min(),
            self.r_max()
        )
    }

    /// This grid followed by geometric panels on `[r_max, r_max·10^decades]`
    /// at the same panel density.
    pub fn extended(&self, decades: f64) -> Result<RadialGrid> {
        let r_max = self.r_max();
        let per_decade = self.spec().panels_per_decade();
        let n = (per_decade * decades).ceil().max(1.0) as usize;
        let mut edges = self.edges.clone();
        edges.extend(geometric_edges(r_max, r_max * 10f64.powf(decades), n).into_iter().skip(1));
        RadialGrid::from_edges(edges, self.nodes_per_panel, self.measure)
    }

    pub fn with_measure(&self, measure: Measure) -> RadialGrid {
        RadialGrid { measure, ..self.clone() }
    }

    /// Same nodes and weights (panel structure may differ in measure).
    pub fn same_nodes(&self, other: &RadialGrid) -> bool {
        self.nodes == other.nodes && self.weights == other.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }

    /// `w_i · density(r_i)`; fails for `WLambda`.
    pub fn measured_weights(&self) -> Result<Vec<f64>> {
        self.measured_weights_in(self.measure)
    }

    pub fn measured_weights_in(&self, measure: Measure) -> Result<Vec<f64>> {
        if measure.density(1.0).is_none() {
            return domain("WLambda has no pointwise weight; use the assembled W matrix");
        }
        Ok(self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * measure.density(r).expect("pointwise measure"))
            .collect())
    }

    /// Index of the panel containing `r`, or `None` outside the covered range.
    pub fn panel_of(&self, r: f64) -> Option<usize> {
        if !(r >= self.edges[0] && r <= self.r_max()) {
            return None;
        }
        let k = self.edges.partition_point(|&e| e <= r);
        Some(k.saturating_sub(1).min(self.n_panels() - 1))
    }

    /// Polynomial interpolation of nodal `values` within the panel holding `r`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> Option<f64> {
        let p = self.panel_of(r)?;
        let n = self.nodes_per_panel;
        let xs = &self.nodes[p * n..(p + 1) * n];
        let ys = &values[p * n..(p + 1) * n];
        Some(barycentric(xs, ys, r))
    }
}

fn barycentric(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        let d = x - xj;
        if d == 0.0 {
            return yj;
        }
        let mut wj = 1.0;
        for (k, &xk) in xs.iter().enumerate() {
            if k != j {
                wj /= xj - xk;
            }
        }
        num += wj / d * yj;
        den += wj / d;
    }
    num / den
}
