use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::legendre::gauss_legendre;

/// Minimum number of radial nodes a grid may carry.
pub const MIN_POINTS: usize = 16;

/// Radial quadrature grid: Gauss-Legendre nodes mapped linearly onto
/// `(0, r_max]`, with weights for integrals against `r^2 dr`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    r_max: f64,
    nodes: Vec<f64>,
    /// Weights for `int_0^rmax f(r) r^2 dr`.
    weights: Vec<f64>,
    /// Reference Gauss-Legendre nodes on [-1, 1].
    ref_nodes: Vec<f64>,
    /// Reference Gauss-Legendre weights on [-1, 1].
    ref_weights: Vec<f64>,
}

/// Build the deterministic radial grid for a truncation radius and node count.
pub fn build_radial_grid(r_max: f64, n_points: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_max, n_points)
}

impl RadialGrid {
    pub fn new(r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(CoreError::InvalidArgument(format!(
                "n_points must be at least {MIN_POINTS}, got {n_points}"
            )));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(n_points);
        let half = 0.5 * r_max;
        let nodes: Vec<f64> = ref_nodes.iter().map(|&x| half * (x + 1.0)).collect();
        let weights: Vec<f64> = ref_weights
            .iter()
            .zip(&nodes)
            .map(|(&w, &r)| w * half * r * r)
            .collect();
        Ok(Self {
            r_max,
            nodes,
            weights,
            ref_nodes,
            ref_weights,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for `int f(r) r^2 dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ref_nodes(&self) -> &[f64] {
        &self.ref_nodes
    }

    pub fn ref_weights(&self) -> &[f64] {
        &self.ref_weights
    }

    /// `int f(r) r^2 dr` of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(&w, &f)| w * f)
            .sum()
    }

    /// `int f(r) dr` of sampled values (no `r^2` factor).
    pub fn integrate_plain(&self, values: &[f64]) -> f64 {
        let half = 0.5 * self.r_max;
        self.ref_weights
            .iter()
            .zip(values)
            .map(|(&w, &f)| w * half * f)
            .sum()
    }

    /// Same node layout? (deterministic construction: r_max and n agree)
    pub fn same_layout(&self, other: &RadialGrid) -> bool {
        self.n_points() == other.n_points() && self.r_max == other.r_max
    }

    /// The grid scaled by `factor` (nodes map exactly; used when reporting a
    /// coupling-rescaled solution on its own length scale).
    pub fn scaled(&self, factor: f64) -> RadialGrid {
        let s3 = factor * factor * factor;
        RadialGrid {
            r_max: self.r_max * factor,
            nodes: self.nodes.iter().map(|&r| r * factor).collect(),
            weights: self.weights.iter().map(|&w| w * s3).collect(),
            ref_nodes: self.ref_nodes.clone(),
            ref_weights: self.ref_weights.clone(),
        }
    }

    pub fn into_shared(self) -> Arc<RadialGrid> {
        Arc::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_one_is_cube_over_three() {
        let grid = build_radial_grid(20.0, 2000).unwrap();
        let ones = vec![1.0; grid.n_points()];
        let q = grid.integrate(&ones);
        let exact = 20.0_f64.powi(3) / 3.0;
        assert!(
            ((q - exact) / exact).abs() < 1e-10,
            "quadrature of 1 = {q}, expected {exact}"
        );
    }

    #[test]
    fn smallest_legal_grid() {
        let grid = build_radial_grid(1.0, 16).unwrap();
        assert!(grid.nodes().iter().all(|&r| r > 0.0 && r <= 1.0));
        assert!(grid.nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(grid.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_invalid_arguments() {
        assert!(build_radial_grid(0.0, 100).is_err());
        assert!(build_radial_grid(-3.0, 100).is_err());
        assert!(build_radial_grid(10.0, 15).is_err());
    }

    #[test]
    fn exponential_integral_matches_closed_form() {
        // int_0^R e^{-r} r^2 dr = 2 - e^{-R} (R^2 + 2R + 2)
        let grid = build_radial_grid(20.0, 2000).unwrap();
        let vals: Vec<f64> = grid.nodes().iter().map(|&r| (-r).exp()).collect();
        let q = grid.integrate(&vals);
        let r = 20.0_f64;
        let exact = 2.0 - (-r).exp() * (r * r + 2.0 * r + 2.0);
        assert!(((q - exact) / exact).abs() < 1e-8, "got {q}, want {exact}");
    }

    #[test]
    fn scaled_grid_maps_nodes_exactly() {
        let grid = build_radial_grid(20.0, 64).unwrap();
        let half = grid.scaled(0.5);
        assert_eq!(half.r_max(), 10.0);
        for (a, b) in grid.nodes().iter().zip(half.nodes()) {
            assert_eq!(*b, *a * 0.5);
        }
        // weights pick up the cube of the scale
        let ones = vec![1.0; 64];
        let q = half.integrate(&ones);
        assert!((q - 10.0_f64.powi(3) / 3.0).abs() < 1e-8);
    }
}
