use crate::error::{CoreError, Result};

/// Physical inputs of a run: phonon coupling `alpha`, Coulomb repulsion `U`,
/// and the particle count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    alpha: f64,
    repulsion_u: f64,
    n_particles: usize,
}

impl CouplingParams {
    pub fn new(alpha: f64, repulsion_u: f64, n_particles: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(repulsion_u >= 0.0) || !repulsion_u.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "repulsion_u must be nonnegative and finite, got {repulsion_u}"
            )));
        }
        if !(1..=3).contains(&n_particles) {
            return Err(CoreError::InvalidArgument(format!(
                "n_particles must be 1, 2 or 3, got {n_particles}"
            )));
        }
        Ok(Self {
            alpha,
            repulsion_u,
            n_particles,
        })
    }

    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1)
    }

    pub fn pair(alpha: f64, repulsion_u: f64) -> Result<Self> {
        Self::new(alpha, repulsion_u, 2)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn repulsion_u(&self) -> f64 {
        self.repulsion_u
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    /// Repulsion measured in units of the coupling, `U / alpha`.
    pub fn repulsion_ratio(&self) -> f64 {
        self.repulsion_u / self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(CouplingParams::new(0.0, 0.0, 1).is_err());
        assert!(CouplingParams::new(-1.0, 0.0, 1).is_err());
        assert!(CouplingParams::new(1.0, -0.5, 1).is_err());
        assert!(CouplingParams::new(1.0, 0.0, 0).is_err());
        assert!(CouplingParams::new(1.0, 0.0, 4).is_err());
        assert!(CouplingParams::new(f64::NAN, 0.0, 1).is_err());
    }

    #[test]
    fn accepts_valid_inputs() {
        let p = CouplingParams::pair(2.0, 3.0).unwrap();
        assert_eq!(p.alpha(), 2.0);
        assert_eq!(p.repulsion_u(), 3.0);
        assert_eq!(p.n_particles(), 2);
        assert_eq!(p.repulsion_ratio(), 1.5);
    }
}
