//! Single-polaron strong-coupling variational solver.
//!
//! Minimizes `E[psi] = int |grad psi|^2 - beta D(psi^2, psi^2)` over
//! normalized radial wavefunctions. At `beta = 1` the optimal value is
//! `-C_P`, the Pekar constant. Energies at other couplings follow from the
//! exact dilation identity `E(beta) = beta^2 E(1)`: the solve always runs at
//! coupling 1 on the given grid geometry and the result is rescaled, so
//! scaling covariance holds to machine precision (the grid argument is read
//! in coupling-rescaled units).
//!
//! The minimizer works on the reduced function `u = r psi` over an auxiliary
//! uniform mesh (second-order differences, Dirichlet ends) with a
//! kinetic-inverse preconditioner and backtracking on the energy, then
//! reports everything through the quadrature grid.

mod mesh_solver;
mod trials;

use std::sync::Arc;

use polaron_core::coulomb::{coulomb_bilinear, SpectralOps};
use polaron_core::interp::UniformSpline;
use polaron_core::mesh::UniformMesh;
use polaron_core::{CoreError, FieldKind, RadialField, RadialGrid, FOUR_PI};
use thiserror::Error;

pub use mesh_solver::InitStrategy;
pub use trials::trial_library;

#[derive(Debug, Error)]
pub enum PekarError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "no convergence after {iterations} iterations (residual {residual:.3e}, best energy {best_energy:.8})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best_energy: f64,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, PekarError>;

/// Solver knobs. Defaults: residual tolerance 1e-8, iteration cap 5e4,
/// auxiliary mesh 4x the grid's node count.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub mesh_factor: usize,
    pub init: InitStrategy,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 50_000,
            mesh_factor: 4,
            init: InitStrategy::DecayingExponential,
            record_trace: false,
        }
    }
}

/// Value and decomposition of the functional at a trial state.
#[derive(Debug, Clone, Copy)]
pub struct PekarEnergy {
    pub energy: f64,
    pub kinetic: f64,
    pub attraction: f64,
}

/// Converged solve: energy decomposition, multiplier, minimizer and
/// convergence data. `energy = kinetic - beta * attraction` exactly as
/// stored.
#[derive(Debug, Clone)]
pub struct PekarResult {
    pub beta: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub attraction: f64,
    pub chemical_potential: f64,
    pub psi: RadialField,
    pub residual: f64,
    pub iterations: usize,
    /// Accepted-step energies of the internal descent (empty unless
    /// `record_trace` was set).
    pub energy_trace: Vec<f64>,
}

/// Evaluate the functional on a normalized wavefunction:
/// `kinetic = 4 pi int (psi')^2 r^2 dr`, `attraction = D(psi^2, psi^2)`,
/// `energy = kinetic - beta * attraction`.
pub fn pekar_energy(psi: &RadialField, beta: f64) -> Result<PekarEnergy> {
    if psi.kind() != FieldKind::Wavefunction {
        return Err(PekarError::InvalidArgument(
            "pekar_energy expects a wavefunction".into(),
        ));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(PekarError::InvalidArgument(format!(
            "beta must be nonnegative and finite, got {beta}"
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(PekarError::InvalidArgument(format!(
            "wavefunction must be normalized (norm = {norm})"
        )));
    }
    let grid = psi.grid();
    let ops = SpectralOps::new(grid);
    let (energy, kinetic, attraction) = functional_parts(&ops, grid, psi.values(), beta);
    Ok(PekarEnergy {
        energy,
        kinetic,
        attraction,
    })
}

fn functional_parts(
    ops: &SpectralOps,
    grid: &RadialGrid,
    values: &[f64],
    beta: f64,
) -> (f64, f64, f64) {
    let dpsi = ops.derivative(values);
    let sq: Vec<f64> = dpsi.iter().map(|&d| d * d).collect();
    let kinetic = FOUR_PI * grid.integrate(&sq);
    let rho: Vec<f64> = values.iter().map(|&v| v * v).collect();
    let attraction = coulomb_bilinear(ops, grid, &rho, &rho);
    (kinetic - beta * attraction, kinetic, attraction)
}

/// The unconstrained functional value at arbitrary (not necessarily
/// normalized) nodal values. Test instrumentation for gradient checks.
pub fn pekar_functional_raw(grid: &RadialGrid, values: &[f64], beta: f64) -> f64 {
    let ops = SpectralOps::new(grid);
    functional_parts(&ops, grid, values, beta).0
}

/// Euclidean gradient of `pekar_functional_raw` with respect to the nodal
/// values.
pub fn pekar_gradient_raw(grid: &RadialGrid, values: &[f64], beta: f64) -> Vec<f64> {
    let ops = SpectralOps::new(grid);
    let n = values.len();
    let w = grid.weights();

    // kinetic part: T = 4 pi (D psi)^T W (D psi) => grad = 8 pi D^T (W D psi)
    let dpsi = ops.derivative(values);
    let weighted: Vec<f64> = dpsi.iter().zip(w).map(|(&d, &wi)| d * wi).collect();
    let grad_t = ops.derivative_adjoint(&weighted);

    // attraction part: D(rho, rho) with rho = psi^2;
    // dD/drho_i = 4 pi (w_i V_i + [M^T (w rho)]_i), grad_psi = 2 psi dD/drho
    let rho: Vec<f64> = values.iter().map(|&v| v * v).collect();
    let v_h = ops.hartree_values(grid, &rho);
    let dual: Vec<f64> = rho.iter().zip(w).map(|(&d, &wi)| d * wi).collect();
    let adj = ops.hartree_adjoint(grid, &dual);

    let mut grad = vec![0.0; n];
    for i in 0..n {
        let d_attr = FOUR_PI * (w[i] * v_h[i] + adj[i]);
        grad[i] = 2.0 * FOUR_PI * grad_t[i] - beta * 2.0 * values[i] * d_attr;
    }
    grad
}

/// Minimize the functional at coupling `beta`.
///
/// The numerical minimization always runs at coupling 1 on the grid's
/// geometry; the reported energies scale by `beta^2` (`attraction` by
/// `beta`) and the minimizer is returned on the grid scaled by `1 / beta`.
pub fn solve_pekar(beta: f64, grid: &Arc<RadialGrid>, opts: &SolverOptions) -> Result<PekarResult> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(PekarError::InvalidArgument(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let m = (opts.mesh_factor * grid.n_points()).clamp(64, 32_768);
    let mesh = UniformMesh::new(grid.r_max(), m)?;
    let solve = mesh_solver::minimize_on_mesh(&mesh, opts)?;

    // Transfer u = r psi to the quadrature grid.
    let m_cells = mesh.n_interior() + 1;
    let mut knots = Vec::with_capacity(m_cells + 1);
    knots.push(0.0);
    knots.extend_from_slice(&solve.u);
    knots.push(0.0);
    let spline = UniformSpline::new(mesh.h(), knots)?;
    let psi_vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| (spline.eval(r) / r).max(0.0))
        .collect();
    let psi = RadialField::wavefunction(Arc::clone(grid), psi_vals)?.normalize()?;

    let ops = SpectralOps::new(grid);
    let (e1, t1, a1) = functional_parts(&ops, grid, psi.values(), 1.0);

    let b2 = beta * beta;
    Ok(PekarResult {
        beta,
        energy: b2 * e1,
        kinetic: b2 * t1,
        attraction: beta * a1,
        chemical_potential: b2 * solve.mu,
        psi: psi.scaled(1.0 / beta),
        residual: b2 * solve.residual,
        iterations: solve.iterations,
        energy_trace: solve.trace,
    })
}

/// The Pekar constant `C_P = -E(1)` on the given grid.
pub fn pekar_constant(grid: &Arc<RadialGrid>, opts: &SolverOptions) -> Result<f64> {
    Ok(-solve_pekar(1.0, grid, opts)?.energy)
}
