//! Quadrature, special functions, radial grids and charges.

pub mod charge;
pub mod grid;
pub mod legendre;
pub mod quad;

pub use charge::{Charge, Tail};
pub use grid::{build_grid, GridSpec, Measure, RadialGrid};
pub use legendre::{legendre_p, legendre_q, legendre_q_deriv, y_integral, y_integrals};
