//! Radial Coulomb machinery: the Hartree potential of a spherical density by
//! Newton's theorem,
//!
//! `V(r) = 4 pi [ (1/r) int_0^r rho(s) s^2 ds + int_r^rmax rho(s) s ds ]`,
//!
//! and the double Coulomb integral `D(rho1, rho2) = integral of
//! rho1(x) rho2(y) / |x - y|`. The cumulative integrals go through the
//! Legendre expansion of the sampled integrand, which keeps smooth densities
//! at spectral accuracy and avoids any pointwise `1/|x - y|` singularity.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::field::{FieldKind, RadialField};
use crate::grid::RadialGrid;
use crate::legendre::{
    antiderivative_coeffs, antiderivative_coeffs_adjoint, derivative_coeffs,
    derivative_coeffs_adjoint, LegendreTable,
};
use crate::FOUR_PI;

/// Spectral transforms bound to one radial grid: cumulative integrals,
/// tail integrals and derivatives of sampled functions.
pub struct SpectralOps {
    half: f64,
    n: usize,
    table: LegendreTable,
    ref_weights: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: &RadialGrid) -> Self {
        let n = grid.n_points();
        Self {
            half: 0.5 * grid.r_max(),
            n,
            table: LegendreTable::new(grid.ref_nodes(), n + 1),
            ref_weights: grid.ref_weights().to_vec(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    /// `G(r_i) = int_0^{r_i} g dr` for sampled `g`.
    pub fn cumulative(&self, samples: &[f64]) -> Vec<f64> {
        let c = self.table.analyze(&self.ref_weights, samples);
        let b = antiderivative_coeffs(&c);
        let mut g = self.table.synthesize(&b);
        for v in &mut g {
            *v *= self.half;
        }
        g
    }

    /// Adjoint of `cumulative`.
    pub fn cumulative_adjoint(&self, node_dual: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = node_dual.iter().map(|&v| v * self.half).collect();
        let b = self.table.synthesize_adjoint(&scaled, self.n + 1);
        let c = antiderivative_coeffs_adjoint(&b);
        self.table.analyze_adjoint(&self.ref_weights, &c)
    }

    /// `int_0^rmax g dr`.
    pub fn full_integral(&self, samples: &[f64]) -> f64 {
        self.ref_weights
            .iter()
            .zip(samples)
            .map(|(&w, &g)| w * g)
            .sum::<f64>()
            * self.half
    }

    /// `dg/dr` at the nodes (derivative of the interpolant).
    pub fn derivative(&self, samples: &[f64]) -> Vec<f64> {
        let c = self.table.analyze(&self.ref_weights, samples);
        let d = derivative_coeffs(&c);
        let mut g = self.table.synthesize(&d);
        let inv = 1.0 / self.half;
        for v in &mut g {
            *v *= inv;
        }
        g
    }

    /// Adjoint of `derivative`.
    pub fn derivative_adjoint(&self, node_dual: &[f64]) -> Vec<f64> {
        let inv = 1.0 / self.half;
        let scaled: Vec<f64> = node_dual.iter().map(|&v| v * inv).collect();
        let d = self.table.synthesize_adjoint(&scaled, self.n.saturating_sub(1).max(1));
        let c = derivative_coeffs_adjoint(&d, self.n);
        self.table.analyze_adjoint(&self.ref_weights, &c)
    }

    /// Hartree potential values of density samples (no field bookkeeping).
    pub fn hartree_values(&self, grid: &RadialGrid, rho: &[f64]) -> Vec<f64> {
        let nodes = grid.nodes();
        let g2: Vec<f64> = rho.iter().zip(nodes).map(|(&d, &r)| d * r * r).collect();
        let g1: Vec<f64> = rho.iter().zip(nodes).map(|(&d, &r)| d * r).collect();
        let inner = self.cumulative(&g2);
        let outer_cum = self.cumulative(&g1);
        let outer_full = self.full_integral(&g1);
        nodes
            .iter()
            .enumerate()
            .map(|(i, &r)| FOUR_PI * (inner[i] / r + (outer_full - outer_cum[i])))
            .collect()
    }

    /// Adjoint of `hartree_values` in the plain nodal inner product.
    pub fn hartree_adjoint(&self, grid: &RadialGrid, dual: &[f64]) -> Vec<f64> {
        let nodes = grid.nodes();
        // V = 4pi [ diag(1/r) Cum diag(r^2) + (Full - Cum) diag(r) ] rho
        let y1: Vec<f64> = dual.iter().zip(nodes).map(|(&v, &r)| FOUR_PI * v / r).collect();
        let t1 = self.cumulative_adjoint(&y1);
        let dual_sum: f64 = dual.iter().sum::<f64>() * FOUR_PI;
        let t2 = self.cumulative_adjoint(dual);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let r = nodes[i];
            let full_adj = dual_sum * self.half * self.ref_weights[i];
            out[i] = t1[i] * r * r + (full_adj - FOUR_PI * t2[i]) * r;
        }
        out
    }
}

/// Hartree potential of a radial density via Newton's theorem.
///
/// The result is nonincreasing for nonnegative densities and approaches
/// `Q / r_max` at the boundary, `Q` the total charge.
pub fn radial_hartree_potential(density: &RadialField) -> Result<RadialField> {
    if density.kind() != FieldKind::Density {
        return Err(CoreError::InvalidArgument(
            "radial_hartree_potential expects a density field".into(),
        ));
    }
    let grid = density.grid();
    let ops = SpectralOps::new(grid);
    let values = ops.hartree_values(grid, density.values());
    RadialField::potential(Arc::clone(grid), values)
}

/// `D(rho1, rho2) = iint rho1(x) rho2(y) / |x - y| dx dy` for radial
/// densities on a shared grid. Symmetric by construction and equal to
/// `4 pi int rho1 V[rho2] r^2 dr` up to the quadrature's aliasing level.
pub fn coulomb_double_integral(rho1: &RadialField, rho2: &RadialField) -> Result<f64> {
    if rho1.kind() != FieldKind::Density || rho2.kind() != FieldKind::Density {
        return Err(CoreError::InvalidArgument(
            "coulomb_double_integral expects density fields".into(),
        ));
    }
    if !rho1.grid().same_layout(rho2.grid()) {
        return Err(CoreError::GridMismatch(format!(
            "grids differ: ({}, {}) vs ({}, {})",
            rho1.grid().r_max(),
            rho1.grid().n_points(),
            rho2.grid().r_max(),
            rho2.grid().n_points()
        )));
    }
    let grid = rho1.grid();
    let ops = SpectralOps::new(grid);
    Ok(coulomb_bilinear(&ops, grid, rho1.values(), rho2.values()))
}

/// The symmetrized discrete Coulomb form on raw value slices.
pub fn coulomb_bilinear(ops: &SpectralOps, grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    let vb = ops.hartree_values(grid, b);
    let va = ops.hartree_values(grid, a);
    let w = grid.weights();
    let mut s = 0.0;
    for i in 0..a.len() {
        s += w[i] * (a[i] * vb[i] + b[i] * va[i]);
    }
    0.5 * FOUR_PI * s
}
