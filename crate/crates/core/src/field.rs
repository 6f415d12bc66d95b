use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::RadialGrid;
use crate::FOUR_PI;

/// What a `RadialField` represents; fixes its normalization rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Single-particle wavefunction: `4 pi int psi^2 r^2 dr = 1`.
    Wavefunction,
    /// Particle density: nonnegative, `4 pi int rho r^2 dr = norm_target`.
    Density,
    /// A radial potential; carries no normalization.
    Potential,
}

/// A real function of radius sampled on a `RadialGrid`.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    kind: FieldKind,
    norm_target: f64,
}

impl RadialField {
    pub fn wavefunction(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        Self::build(grid, values, FieldKind::Wavefunction, 1.0)
    }

    pub fn density(grid: Arc<RadialGrid>, values: Vec<f64>, norm_target: f64) -> Result<Self> {
        if norm_target <= 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "density norm_target must be positive, got {norm_target}"
            )));
        }
        let peak = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let floor = -1e-12 * peak.max(1.0);
        let mut values = values;
        for v in &mut values {
            if *v < 0.0 {
                if *v < floor {
                    return Err(CoreError::InvalidArgument(format!(
                        "density values must be nonnegative (found {v})"
                    )));
                }
                // interpolation-level undershoot
                *v = 0.0;
            }
        }
        Self::build(grid, values, FieldKind::Density, norm_target)
    }

    pub fn potential(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        Self::build(grid, values, FieldKind::Potential, 0.0)
    }

    fn build(
        grid: Arc<RadialGrid>,
        values: Vec<f64>,
        kind: FieldKind,
        norm_target: f64,
    ) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(CoreError::InvalidArgument(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.n_points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "field values must be finite".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            kind,
            norm_target,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn norm_target(&self) -> f64 {
        self.norm_target
    }

    /// The kind-appropriate norm: `4 pi int psi^2 r^2 dr` for wavefunctions,
    /// `4 pi int rho r^2 dr` for densities.
    pub fn norm(&self) -> f64 {
        match self.kind {
            FieldKind::Wavefunction => {
                let sq: Vec<f64> = self.values.iter().map(|&v| v * v).collect();
                FOUR_PI * self.grid.integrate(&sq)
            }
            FieldKind::Density | FieldKind::Potential => {
                FOUR_PI * self.grid.integrate(&self.values)
            }
        }
    }

    /// Rescale so the norm invariant of the field's kind holds; the direction
    /// of the values is unchanged.
    pub fn normalize(&self) -> Result<RadialField> {
        let n = self.norm();
        let scale = match self.kind {
            FieldKind::Wavefunction => {
                if n <= 1e-280 {
                    return Err(CoreError::DegenerateInput(
                        "cannot normalize a zero wavefunction".into(),
                    ));
                }
                (1.0 / n).sqrt()
            }
            FieldKind::Density => {
                if n <= 1e-280 {
                    return Err(CoreError::DegenerateInput(
                        "cannot normalize a zero density".into(),
                    ));
                }
                self.norm_target / n
            }
            FieldKind::Potential => {
                return Err(CoreError::InvalidArgument(
                    "potentials carry no normalization".into(),
                ))
            }
        };
        let values = self.values.iter().map(|&v| v * scale).collect();
        Ok(RadialField {
            grid: Arc::clone(&self.grid),
            values,
            kind: self.kind,
            norm_target: self.norm_target,
        })
    }

    /// The probability density `psi^2` of a wavefunction, as a density field
    /// with norm target 1.
    pub fn density_of_square(&self) -> Result<RadialField> {
        if self.kind != FieldKind::Wavefunction {
            return Err(CoreError::InvalidArgument(
                "density_of_square expects a wavefunction".into(),
            ));
        }
        let values: Vec<f64> = self.values.iter().map(|&v| v * v).collect();
        RadialField::density(Arc::clone(&self.grid), values, 1.0)
    }

    /// Reinterpret the samples on a scaled grid, with values rescaled so the
    /// norm is preserved: `f_s(r) = s^{-3/2} f(r / s)` for wavefunctions,
    /// `s^{-3} f(r / s)` for densities, on `grid.scaled(s)`.
    pub fn scaled(&self, s: f64) -> RadialField {
        let amp = match self.kind {
            FieldKind::Wavefunction => s.powf(-1.5),
            FieldKind::Density => s.powi(-3),
            FieldKind::Potential => 1.0 / s,
        };
        RadialField {
            grid: Arc::new(self.grid.scaled(s)),
            values: self.values.iter().map(|&v| v * amp).collect(),
            kind: self.kind,
            norm_target: self.norm_target,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_radial_grid;

    fn grid() -> Arc<RadialGrid> {
        build_radial_grid(20.0, 256).unwrap().into_shared()
    }

    #[test]
    fn normalize_is_idempotent() {
        let g = grid();
        let vals: Vec<f64> = g.nodes().iter().map(|&r| (-r).exp()).collect();
        let psi = RadialField::wavefunction(g, vals).unwrap().normalize().unwrap();
        let again = psi.normalize().unwrap();
        for (a, b) in psi.values().iter().zip(again.values()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-30));
        }
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_scale_invariant() {
        let g = grid();
        let vals: Vec<f64> = g.nodes().iter().map(|&r| (-r).exp()).collect();
        let scaled: Vec<f64> = vals.iter().map(|v| 7.0 * v).collect();
        let a = RadialField::wavefunction(Arc::clone(&g), vals)
            .unwrap()
            .normalize()
            .unwrap();
        let b = RadialField::wavefunction(g, scaled)
            .unwrap()
            .normalize()
            .unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-30));
        }
    }

    #[test]
    fn zero_field_is_degenerate() {
        let g = grid();
        let zeros = vec![0.0; g.n_points()];
        let psi = RadialField::wavefunction(g, zeros).unwrap();
        assert!(matches!(
            psi.normalize(),
            Err(CoreError::DegenerateInput(_))
        ));
    }

    #[test]
    fn density_normalizes_to_target() {
        let g = grid();
        let vals: Vec<f64> = g.nodes().iter().map(|&r| (-r * r).exp()).collect();
        let rho = RadialField::density(g, vals, 2.0).unwrap().normalize().unwrap();
        assert!((rho.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn density_rejects_negative_values() {
        let g = grid();
        let mut vals = vec![1.0; g.n_points()];
        vals[3] = -0.5;
        assert!(RadialField::density(g, vals, 1.0).is_err());
    }
}
