//! The rotation-reduced two-electron state on the internal grid.

use std::sync::Arc;

use polaron_core::FOUR_PI;

use crate::{BipolaronError, InternalGrid, Result};

/// Symmetric two-electron wavefunction `psi(r1, r2, u)` sampled at the
/// internal grid nodes. Exchange symmetry is enforced by storage: only the
/// triangle `i <= j` is kept and `(i, j)` mirrors to `(j, i)` exactly.
#[derive(Debug, Clone)]
pub struct BipolaronState {
    grid: Arc<InternalGrid>,
    /// Triangle-packed values: index `(tri(i, j), k)` with `i <= j`.
    values: Vec<f64>,
}

#[inline]
pub(crate) fn tri_index(i: usize, j: usize) -> usize {
    // i <= j
    j * (j + 1) / 2 + i
}

impl BipolaronState {
    /// Build from a function of `(r1, r2, u)`; the stored state is the
    /// symmetrized average of `f(r1, r2, u)` and `f(r2, r1, u)`.
    pub fn from_fn(
        grid: &Arc<InternalGrid>,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<BipolaronState> {
        let n_r = grid.n_r();
        let n_u = grid.n_u();
        let r = grid.radial().nodes();
        let mut values = vec![0.0; n_r * (n_r + 1) / 2 * n_u];
        for j in 0..n_r {
            for i in 0..=j {
                let base = tri_index(i, j) * n_u;
                for (k, &u) in grid.angular_nodes().iter().enumerate() {
                    values[base + k] = 0.5 * (f(r[i], r[j], u) + f(r[j], r[i], u));
                }
            }
        }
        let state = BipolaronState {
            grid: Arc::clone(grid),
            values,
        };
        if state.values.iter().any(|v| !v.is_finite()) {
            return Err(BipolaronError::InvalidArgument(
                "state values must be finite".into(),
            ));
        }
        Ok(state)
    }

    /// Product state `phi(r1) phi(r2)` from orbital samples on the radial
    /// grid.
    pub fn from_orbital(grid: &Arc<InternalGrid>, orbital: &[f64]) -> Result<BipolaronState> {
        if orbital.len() != grid.n_r() {
            return Err(BipolaronError::InvalidArgument(format!(
                "orbital has {} samples, radial grid has {}",
                orbital.len(),
                grid.n_r()
            )));
        }
        let n_u = grid.n_u();
        let n_r = grid.n_r();
        let mut values = vec![0.0; n_r * (n_r + 1) / 2 * n_u];
        for j in 0..n_r {
            for i in 0..=j {
                let v = orbital[i] * orbital[j];
                let base = tri_index(i, j) * n_u;
                for k in 0..n_u {
                    values[base + k] = v;
                }
            }
        }
        Ok(BipolaronState {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub(crate) fn from_packed(grid: &Arc<InternalGrid>, values: Vec<f64>) -> BipolaronState {
        debug_assert_eq!(values.len(), grid.n_r() * (grid.n_r() + 1) / 2 * grid.n_u());
        BipolaronState {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<InternalGrid> {
        &self.grid
    }

    /// Value at `(r_i, r_j, u_k)`; exchange symmetry holds exactly.
    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.values[tri_index(a, b) * self.grid.n_u() + k]
    }

    /// The angular profile at a radial pair `(i <= j)`.
    #[inline]
    pub(crate) fn pair_slice(&self, i: usize, j: usize) -> &[f64] {
        let n_u = self.grid.n_u();
        &self.values[tri_index(i, j) * n_u..(tri_index(i, j) + 1) * n_u]
    }

    /// `8 pi^2 iiint psi^2 r1^2 r2^2 dr1 dr2 du`.
    pub fn norm(&self) -> f64 {
        let n_r = self.grid.n_r();
        let w = self.grid.radial().weights();
        let wu = self.grid.angular_weights();
        let mut total = 0.0;
        for j in 0..n_r {
            for i in 0..=j {
                let pair = self.pair_slice(i, j);
                let mut s = 0.0;
                for (v, &wk) in pair.iter().zip(wu) {
                    s += wk * v * v;
                }
                let mult = if i == j { 1.0 } else { 2.0 };
                total += mult * w[i] * w[j] * s;
            }
        }
        // 8 pi^2 = (4 pi)^2 / 2
        0.5 * FOUR_PI * FOUR_PI * total
    }

    pub fn normalized(&self) -> Result<BipolaronState> {
        let n = self.norm();
        if n <= 1e-280 {
            return Err(BipolaronError::InvalidArgument(
                "cannot normalize a zero state".into(),
            ));
        }
        let s = 1.0 / n.sqrt();
        let values = self.values.iter().map(|&v| v * s).collect();
        Ok(BipolaronState {
            grid: Arc::clone(&self.grid),
            values,
        })
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(BipolaronError::InvalidArgument(format!(
                "state must be normalized (norm = {n})"
            )));
        }
        Ok(())
    }
}
