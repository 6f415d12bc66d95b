//! A fixed library of analytic trial wavefunctions (normalized on the grid)
//! for variational-dominance checks.

use std::sync::Arc;

use polaron_core::{RadialField, RadialGrid};

/// Ten named trials: Gaussians `exp(-a r^2)` and exponentials `exp(-b r)`
/// of varied widths, including the closed-form optimum of each family at
/// coupling 1 (`a = 1/(9 pi)`, `b = 5/16`).
pub fn trial_library(grid: &Arc<RadialGrid>) -> Vec<(String, RadialField)> {
    let gaussian_widths = [1.0 / (9.0 * std::f64::consts::PI), 0.02, 0.05, 0.08, 0.12];
    let exponential_rates = [5.0 / 16.0, 0.2, 0.45, 0.6, 0.8];
    let mut out = Vec::with_capacity(10);
    for &a in &gaussian_widths {
        let vals: Vec<f64> = grid.nodes().iter().map(|&r| (-a * r * r).exp()).collect();
        let psi = RadialField::wavefunction(Arc::clone(grid), vals)
            .expect("trial construction")
            .normalize()
            .expect("trial normalization");
        out.push((format!("gaussian a={a:.5}"), psi));
    }
    for &b in &exponential_rates {
        let vals: Vec<f64> = grid.nodes().iter().map(|&r| (-b * r).exp()).collect();
        let psi = RadialField::wavefunction(Arc::clone(grid), vals)
            .expect("trial construction")
            .normalize()
            .expect("trial normalization");
        out.push((format!("exponential b={b:.5}"), psi));
    }
    out
}
