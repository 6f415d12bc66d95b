//! Shared numerical infrastructure for the polaron solvers: radial quadrature
//! grids, normalized fields, Coulomb potentials by Newton's theorem, and the
//! double Coulomb integral `D(rho1, rho2)`.
//!
//! Everything here is spherically symmetric. Fields live on Gauss-Legendre
//! nodes mapped to `(0, r_max]`; integrals against `r^2 dr` are exact for
//! polynomials up to the rule's design degree. Cumulative integrals (needed
//! for the Hartree potential) are evaluated through the Legendre expansion of
//! the sampled integrand, so smooth densities keep spectral accuracy.
//!
//! All values are immutable after construction and safe to share across
//! threads; no operation mutates its inputs.

pub mod coulomb;
pub mod error;
pub mod field;
pub mod grid;
pub mod interp;
pub mod legendre;
pub mod mesh;
pub mod params;

pub use coulomb::{coulomb_double_integral, radial_hartree_potential, SpectralOps};
pub use error::{CoreError, Result};
pub use field::{FieldKind, RadialField};
pub use grid::{build_radial_grid, RadialGrid};
pub use params::CouplingParams;

/// 4 pi, the solid-angle factor carried by every radial integral.
pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
