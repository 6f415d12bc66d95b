//! Quadrature-grid evaluation of the quartic functional: Hylleraas kinetic
//! form, exact-in-angle `1/r12` expectation, density extraction and the
//! density-density Coulomb attraction.

use std::sync::Arc;

use polaron_core::coulomb::SpectralOps;
use polaron_core::legendre::{eval_series, gauss_legendre, LegendreTable};
use polaron_core::{coulomb_double_integral, CouplingParams, RadialField, FOUR_PI};

use crate::state::BipolaronState;
use crate::{BipolaronError, InternalGrid, Result};

/// Energy decomposition of a state:
/// `energy = kinetic + U * repulsion_expect - alpha * attraction`.
#[derive(Debug, Clone, Copy)]
pub struct PtEnergy {
    pub energy: f64,
    pub kinetic: f64,
    pub repulsion_expect: f64,
    pub attraction: f64,
}

/// Cached tables for repeated functional evaluations on one internal grid.
pub(crate) struct GlEvaluator {
    grid: Arc<InternalGrid>,
    radial_ops: SpectralOps,
    /// Plain-Legendre analysis of angular node values (n_u x n_u,
    /// row-major: coefficient m from sum over nodes).
    u_analysis: Vec<f64>,
    /// Angular resampling to the fine rule (n_fine x n_u).
    resample: Vec<f64>,
    /// Fine-rule nodes/weights and Legendre table up to degree 2 n_u - 2.
    w_fine: Vec<f64>,
    fine_table: LegendreTable,
    /// Local rule for the radial triangle integrals.
    seg_nodes: Vec<f64>,
    seg_weights: Vec<f64>,
}

impl GlEvaluator {
    pub fn new(grid: &Arc<InternalGrid>) -> Self {
        let n_u = grid.n_u();
        let u_table = LegendreTable::new(grid.angular_nodes(), n_u - 1);
        let wu = grid.angular_weights();
        // analysis matrix: c_m = (2m+1)/2 sum_k w_k P_m(u_k) psi_k
        let mut u_analysis = vec![0.0; n_u * n_u];
        for k in 0..n_u {
            let row = u_table.row(k);
            for m in 0..n_u {
                u_analysis[m * n_u + k] = (2.0 * m as f64 + 1.0) / 2.0 * wu[k] * row[m];
            }
        }
        // fine angular rule, exact for psi^2 P_l up to l = 2 n_u - 2
        let n_fine = 2 * n_u - 1;
        let (u_fine, w_fine) = gauss_legendre(n_fine);
        let fine_table = LegendreTable::new(&u_fine, 2 * n_u - 2);
        // resample = synthesize at fine nodes after analysis
        let mut resample = vec![0.0; n_fine * n_u];
        for q in 0..n_fine {
            let rowq = fine_table.row(q);
            for k in 0..n_u {
                let mut acc = 0.0;
                for m in 0..n_u {
                    acc += rowq[m] * u_analysis[m * n_u + k];
                }
                resample[q * n_u + k] = acc;
            }
        }
        let (seg_nodes, seg_weights) = gauss_legendre(32);
        Self {
            grid: Arc::clone(grid),
            radial_ops: SpectralOps::new(grid.radial()),
            u_analysis,
            resample,
            w_fine,
            fine_table,
            seg_nodes,
            seg_weights,
        }
    }

    fn u_coeffs(&self, pair: &[f64], out: &mut [f64]) {
        let n_u = self.grid.n_u();
        for m in 0..n_u {
            let mut acc = 0.0;
            for k in 0..n_u {
                acc += self.u_analysis[m * n_u + k] * pair[k];
            }
            out[m] = acc;
        }
    }

    /// Kinetic energy `8 pi^2 <psi_r1^2 + psi_r2^2 + (1-u^2)(1/r1^2 + 1/r2^2) psi_u^2>`.
    pub fn kinetic(&self, state: &BipolaronState) -> f64 {
        let grid = &self.grid;
        let n_r = grid.n_r();
        let n_u = grid.n_u();
        let w = grid.radial().weights();
        let wu = grid.angular_weights();

        // radial part: by exchange symmetry both derivatives contribute the
        // same; compute d/dr1 columns and double
        let mut radial = 0.0;
        let mut column = vec![0.0; n_r];
        for j in 0..n_r {
            for k in 0..n_u {
                for (i, c) in column.iter_mut().enumerate() {
                    *c = state.value(i, j, k);
                }
                let d = self.radial_ops.derivative(&column);
                let mut s = 0.0;
                for (di, &wi) in d.iter().zip(w) {
                    s += wi * di * di;
                }
                radial += wu[k] * w[j] * s;
            }
        }
        radial *= 2.0;

        // angular part: exact via Legendre coefficients,
        // int (1-u^2) (psi_u)^2 du = sum_m c_m^2 * 2 m (m+1) / (2m+1)
        let mut coeff = vec![0.0; n_u];
        let mut angular = 0.0;
        for j in 0..n_r {
            let rj = grid.radial().nodes()[j];
            for i in 0..=j {
                let ri = grid.radial().nodes()[i];
                self.u_coeffs(state.pair_slice(i, j), &mut coeff);
                let mut s = 0.0;
                for (m, &c) in coeff.iter().enumerate() {
                    let mf = m as f64;
                    s += c * c * 2.0 * mf * (mf + 1.0) / (2.0 * mf + 1.0);
                }
                let mult = if i == j { 1.0 } else { 2.0 };
                angular += mult * w[i] * w[j] * (1.0 / (ri * ri) + 1.0 / (rj * rj)) * s;
            }
        }

        0.5 * FOUR_PI * FOUR_PI * (radial + angular)
    }

    /// `<1/r12>`: exact in the angle (fine-rule moments against the closed
    /// form `int P_l / r12 du = 2/(2l+1) r_<^l / r_>^{l+1}`), spectrally
    /// accurate radial triangle integrals.
    pub fn inv_r12(&self, state: &BipolaronState) -> f64 {
        let grid = &self.grid;
        let n_r = grid.n_r();
        let n_u = grid.n_u();
        let n_l = 2 * n_u - 1;
        let n_fine = self.w_fine.len();
        let r = grid.radial().nodes();
        let r_max = grid.radial().r_max();
        let w = grid.radial().weights();

        // angular moments g_l(i, j) = int psi_ij(u)^2 P_l(u) du, exact
        let mut moments = vec![0.0; n_l * n_r * n_r];
        let mut fine_vals = vec![0.0; n_fine];
        for j in 0..n_r {
            for i in 0..=j {
                let pair = state.pair_slice(i, j);
                for q in 0..n_fine {
                    let mut acc = 0.0;
                    for k in 0..n_u {
                        acc += self.resample[q * n_u + k] * pair[k];
                    }
                    fine_vals[q] = acc * acc;
                }
                for l in 0..n_l {
                    let mut acc = 0.0;
                    for q in 0..n_fine {
                        acc += self.w_fine[q] * fine_vals[q] * self.fine_table.row(q)[l];
                    }
                    moments[(l * n_r + i) * n_r + j] = acc;
                    moments[(l * n_r + j) * n_r + i] = acc;
                }
            }
        }

        // radial triangles per multipole with interpolated rows
        let ref_weights = grid.radial().ref_weights();
        let table = LegendreTable::new(grid.radial().ref_nodes(), n_r);
        let mut total = 0.0;
        let mut row_coeff;
        for l in 0..n_l {
            let lf = l as i32;
            for i in 0..n_r {
                let row = &moments[l * n_r * n_r + i * n_r..l * n_r * n_r + (i + 1) * n_r];
                row_coeff = table.analyze(ref_weights, row);
                let ri = r[i];
                // inner: (1/r_i) int_0^{r_i} g (s/r_i)^l s^2 ds
                let mut inner = 0.0;
                for (&xq, &wq) in self.seg_nodes.iter().zip(&self.seg_weights) {
                    let s = 0.5 * ri * (xq + 1.0);
                    let x_global = 2.0 * s / r_max - 1.0;
                    let g = eval_series(&row_coeff, x_global);
                    inner += wq * g * (s / ri).powi(lf) * s * s;
                }
                // jacobian r_i/2 times the 1/r_i prefactor
                inner *= 0.5;
                // outer: int_{r_i}^{R} g (r_i/s)^l s ds
                let mut outer = 0.0;
                let half_len = 0.5 * (r_max - ri);
                for (&xq, &wq) in self.seg_nodes.iter().zip(&self.seg_weights) {
                    let s = ri + half_len * (xq + 1.0);
                    let x_global = 2.0 * s / r_max - 1.0;
                    let g = eval_series(&row_coeff, x_global);
                    outer += wq * g * (ri / s).powi(lf) * s;
                }
                outer *= half_len;
                total += w[i] * (inner + outer);
            }
        }
        0.5 * FOUR_PI * FOUR_PI * total
    }

    /// The radial density (norm target 2) of a normalized state.
    pub fn density(&self, state: &BipolaronState) -> Result<RadialField> {
        let grid = &self.grid;
        let n_r = grid.n_r();
        let w = grid.radial().weights();
        let wu = grid.angular_weights();
        let mut rho = vec![0.0; n_r];
        for (i, dest) in rho.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n_r {
                let pair = if i <= j {
                    state.pair_slice(i, j)
                } else {
                    state.pair_slice(j, i)
                };
                let mut s = 0.0;
                for (v, &wk) in pair.iter().zip(wu) {
                    s += wk * v * v;
                }
                acc += w[j] * s;
            }
            *dest = FOUR_PI * acc;
        }
        Ok(RadialField::density(
            Arc::clone(grid.radial()),
            rho,
            2.0,
        )?)
    }
}

/// Radial one-particle density times two (total electron density) of a
/// normalized state; integrates to 2.
pub fn density_from_state(state: &BipolaronState) -> Result<RadialField> {
    state.check_normalized()?;
    GlEvaluator::new(state.grid()).density(state)
}

/// `<1/|x - y|>` of a normalized state.
pub fn expectation_inv_r12(state: &BipolaronState) -> Result<f64> {
    state.check_normalized()?;
    Ok(GlEvaluator::new(state.grid()).inv_r12(state))
}

/// The quartic functional at the given couplings:
/// `energy = kinetic + U <1/r12> - alpha D(rho, rho)`, every term evaluated
/// directly on the quadrature grid.
pub fn pt_energy(state: &BipolaronState, params: &CouplingParams) -> Result<PtEnergy> {
    if params.n_particles() != 2 {
        return Err(BipolaronError::InvalidArgument(format!(
            "pt_energy needs n_particles = 2, got {}",
            params.n_particles()
        )));
    }
    state.check_normalized()?;
    let eval = GlEvaluator::new(state.grid());
    let kinetic = eval.kinetic(state);
    let repulsion_expect = eval.inv_r12(state);
    let rho = eval.density(state)?;
    let attraction = coulomb_double_integral(&rho, &rho)?;
    let energy = kinetic + params.repulsion_u() * repulsion_expect - params.alpha() * attraction;
    Ok(PtEnergy {
        energy,
        kinetic,
        repulsion_expect,
        attraction,
    })
}
