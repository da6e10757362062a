//! Sector-reduced numerics for the 2+1 fermionic Ter-Martirosyan–Skornyakov
//! point-interaction model.
//!
//! Two identical fermions of unit mass interact with a third particle of mass
//! `m` through a zero-range contact. Everything here works in momentum space,
//! one angular-momentum sector at a time:
//!
//! * [`params`]: couplings, the Efimov function and the mass thresholds.
//! * [`numerics`]: Gauss panels, Legendre functions, radial grids and charges.
//! * [`kernels`]: radial kernels of the charge operators `T_λ` and `W_λ`.
//! * [`operators`]: dense sector operators, quadratic forms, spectral bottoms.
//! * [`zeromode`]: near-null-mode scans and tail diagnostics.
//! * [`asymptotics`]: `‖u_ξ‖²` and the large-momentum boundary asymptotics.
//! * [`extensions`]: quadratic forms of the self-adjoint extension family.
//! * [`appendixcheck`]: Schur-test bounds of the weighted radial kernel.
//! * [`montecarlo`]: seeded six-dimensional estimators used as oracles.

pub mod appendixcheck;
pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod extensions;
pub mod kernels;
pub mod montecarlo;
pub mod numerics;
pub mod operators;
pub mod params;
pub mod zeromode;

pub use error::{Error, Result};
pub use params::ModelParams;

/// Version string embedded in every CLI output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
