//! Inner two-body ground-state solver on the auxiliary uniform mesh.
//!
//! The reduced function `chi = r1 r2 psi` is expanded in orthonormalized
//! Legendre modes of `u = cos theta_12`,
//! `chi = sum_L a_L(r1, r2) Pt_L(u)`, which makes the angular kinetic term
//! diagonal (`L (L + 1)` centrifugal walls) and the `1/r12` multiplication a
//! small per-pair mode coupling, exact through the substitution `t = r12`.
//! The eigensolver is locally optimal preconditioned CG (imaginary-time
//! flavored) with the kinetic-inverse preconditioner diagonalized per mode.

use polaron_core::legendre::{gauss_legendre, legendre_all};
use polaron_core::mesh::{ground_state_radial_fd, UniformMesh};
use rayon::prelude::*;

use crate::tridiag::eigh_tridiagonal;
use crate::{BipolaronError, Result};

/// Inner eigensolver knobs: Rayleigh-residual tolerance and iteration cap.
#[derive(Debug, Clone)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iterations: 800,
        }
    }
}

/// Per-mode preconditioner data: eigendecomposition of
/// `h_L = -d^2/dr^2 + L(L+1)/r^2` with Dirichlet ends.
struct ModePrec {
    lambda: Vec<f64>,
    /// Column-major eigenvectors: `phi[a * n + i]`.
    phi: Vec<f64>,
}

/// Mesh-side tables shared by every inner solve on one geometry.
pub(crate) struct MeshContext {
    pub mesh: UniformMesh,
    pub n_modes: usize,
    /// Per-pair (i <= j) repulsion mode-coupling matrices, orthonormalized
    /// Legendre basis; layout `[tri(i, j) * L^2 ..]`, symmetric in (L, L').
    pair_g: Vec<f64>,
    prec: Vec<ModePrec>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

impl MeshContext {
    pub fn new(r_max: f64, n_cells: usize, n_modes: usize) -> Result<Self> {
        let mesh = UniformMesh::new(r_max, n_cells)?;
        let n = mesh.n_interior();
        let r = mesh.nodes().to_vec();

        // repulsion tables: exact angular integrals via t = r12
        let n_t = 2 * n_modes + 1;
        let (t_nodes, t_weights) = gauss_legendre(n_t);
        let norms: Vec<f64> = (0..n_modes)
            .map(|l| ((2.0 * l as f64 + 1.0) / 2.0).sqrt())
            .collect();
        let n_pairs = n * (n + 1) / 2;
        let mut pair_g = vec![0.0; n_pairs * n_modes * n_modes];
        pair_g
            .par_chunks_mut(n_modes * n_modes)
            .enumerate()
            .for_each(|(idx, g)| {
                // invert the triangular index
                let j = ((((8 * idx + 1) as f64).sqrt() as usize) - 1) / 2;
                let j = if tri(0, j + 1) <= idx { j + 1 } else { j };
                let i = idx - tri(0, j);
                let (ri, rj) = (r[i], r[j]);
                let a = ri * ri + rj * rj;
                let b = 2.0 * ri * rj;
                let t_lo = (ri - rj).abs();
                let t_hi = ri + rj;
                let half = 0.5 * (t_hi - t_lo);
                let mut p = vec![0.0; n_modes];
                for (&xq, &wq) in t_nodes.iter().zip(&t_weights) {
                    let t = t_lo + half * (xq + 1.0);
                    let u = (a - t * t) / b;
                    legendre_all(u.clamp(-1.0, 1.0), &mut p);
                    let wfull = wq * half * 2.0 / b;
                    for lp in 0..n_modes {
                        let plp = p[lp] * norms[lp] * wfull;
                        for l in 0..=lp {
                            g[l * n_modes + lp] += p[l] * norms[l] * plp;
                        }
                    }
                }
                for lp in 0..n_modes {
                    for l in 0..lp {
                        g[lp * n_modes + l] = g[l * n_modes + lp];
                    }
                }
            });

        // preconditioner eigens per mode
        let h2 = mesh.h() * mesh.h();
        let prec: Vec<ModePrec> = (0..n_modes)
            .into_par_iter()
            .map(|l| {
                let ll = (l * (l + 1)) as f64;
                let diag: Vec<f64> = r.iter().map(|&ri| 2.0 / h2 + ll / (ri * ri)).collect();
                let off = vec![-1.0 / h2; n - 1];
                let (lambda, phi) = eigh_tridiagonal(&diag, &off);
                ModePrec { lambda, phi }
            })
            .collect();

        Ok(Self {
            mesh,
            n_modes,
            pair_g,
            prec,
        })
    }

    pub fn n_interior(&self) -> usize {
        self.mesh.n_interior()
    }

    pub fn state_len(&self) -> usize {
        self.n_modes * self.n_interior() * self.n_interior()
    }

    /// `out = H x` with `H = -lap_1 - lap_2 + V(r1) + V(r2) +
    /// L(L+1)(1/r1^2 + 1/r2^2) + nu / r12` in the mode basis.
    pub fn apply_h(&self, x: &[f64], potential: &[f64], nu: f64, out: &mut [f64]) {
        let n = self.n_interior();
        let h2 = self.mesh.h() * self.mesh.h();
        let r = self.mesh.nodes();
        out.par_chunks_mut(n * n)
            .zip(x.par_chunks(n * n))
            .enumerate()
            .for_each(|(l, (out_l, x_l))| {
                let ll = (l * (l + 1)) as f64;
                for i in 0..n {
                    let centr_i = ll / (r[i] * r[i]);
                    let vi = potential[i];
                    let row = &x_l[i * n..(i + 1) * n];
                    let up = if i > 0 {
                        Some(&x_l[(i - 1) * n..i * n])
                    } else {
                        None
                    };
                    let down = if i + 1 < n {
                        Some(&x_l[(i + 1) * n..(i + 2) * n])
                    } else {
                        None
                    };
                    let dest = &mut out_l[i * n..(i + 1) * n];
                    for j in 0..n {
                        let mut lap = 4.0 * row[j];
                        if j > 0 {
                            lap -= row[j - 1];
                        }
                        if j + 1 < n {
                            lap -= row[j + 1];
                        }
                        if let Some(u) = up {
                            lap -= u[j];
                        }
                        if let Some(d) = down {
                            lap -= d[j];
                        }
                        let diag = vi + potential[j] + centr_i + ll / (r[j] * r[j]);
                        dest[j] = lap / h2 + diag * row[j];
                    }
                }
            });
        if nu != 0.0 {
            self.add_repulsion(x, nu, out);
        }
    }

    fn add_repulsion(&self, x: &[f64], nu: f64, out: &mut [f64]) {
        let n = self.n_interior();
        let nm = self.n_modes;
        let n2 = n * n;
        let mut gathered = vec![0.0; nm];
        let mut coupled = vec![0.0; nm];
        for j in 0..n {
            for i in 0..=j {
                let g = &self.pair_g[tri(i, j) * nm * nm..(tri(i, j) + 1) * nm * nm];
                for l in 0..nm {
                    gathered[l] = x[l * n2 + i * n + j];
                }
                for l in 0..nm {
                    let grow = &g[l * nm..(l + 1) * nm];
                    let mut acc = 0.0;
                    for (gv, xv) in grow.iter().zip(&gathered) {
                        acc += gv * xv;
                    }
                    coupled[l] = nu * acc;
                }
                if i == j {
                    for l in 0..nm {
                        out[l * n2 + i * n + i] += coupled[l];
                    }
                } else {
                    for l in 0..nm {
                        out[l * n2 + i * n + j] += coupled[l];
                        out[l * n2 + j * n + i] += coupled[l];
                    }
                }
            }
        }
    }

    /// Repulsion quadratic form `<x, (1/r12) x>` in the mesh metric
    /// (without the `8 pi^2 h^2` prefactor).
    pub fn repulsion_form(&self, x: &[f64]) -> f64 {
        let n = self.n_interior();
        let nm = self.n_modes;
        let n2 = n * n;
        let mut gathered = vec![0.0; nm];
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..=j {
                let g = &self.pair_g[tri(i, j) * nm * nm..(tri(i, j) + 1) * nm * nm];
                for l in 0..nm {
                    gathered[l] = x[l * n2 + i * n + j];
                }
                let mut s = 0.0;
                for l in 0..nm {
                    let grow = &g[l * nm..(l + 1) * nm];
                    let mut acc = 0.0;
                    for (gv, xv) in grow.iter().zip(&gathered) {
                        acc += gv * xv;
                    }
                    s += gathered[l] * acc;
                }
                total += if i == j { s } else { 2.0 * s };
            }
        }
        total
    }

    /// `out = (sigma + h_L (x) I + I (x) h_L)^{-1} x` per mode.
    pub fn apply_prec(&self, x: &[f64], sigma: f64, out: &mut [f64]) {
        let n = self.n_interior();
        out.par_chunks_mut(n * n)
            .zip(x.par_chunks(n * n))
            .enumerate()
            .for_each(|(l, (out_l, x_l))| {
                let prec = &self.prec[l];
                let phi = &prec.phi;
                let mut w = vec![0.0; n * n];
                let mut y = vec![0.0; n * n];
                unsafe {
                    // W = Phi^T X   (Phi column-major: phi[a * n + i])
                    matrixmultiply::dgemm(
                        n, n, n, 1.0,
                        phi.as_ptr(), n as isize, 1,
                        x_l.as_ptr(), n as isize, 1,
                        0.0,
                        w.as_mut_ptr(), n as isize, 1,
                    );
                    // Y = W Phi
                    matrixmultiply::dgemm(
                        n, n, n, 1.0,
                        w.as_ptr(), n as isize, 1,
                        phi.as_ptr(), 1, n as isize,
                        0.0,
                        y.as_mut_ptr(), n as isize, 1,
                    );
                }
                for a in 0..n {
                    let la = prec.lambda[a];
                    for b in 0..n {
                        y[a * n + b] /= sigma + la + prec.lambda[b];
                    }
                }
                unsafe {
                    // Z = Phi Y
                    matrixmultiply::dgemm(
                        n, n, n, 1.0,
                        phi.as_ptr(), 1, n as isize,
                        y.as_ptr(), n as isize, 1,
                        0.0,
                        w.as_mut_ptr(), n as isize, 1,
                    );
                    // out = Z Phi^T
                    matrixmultiply::dgemm(
                        n, n, n, 1.0,
                        w.as_ptr(), n as isize, 1,
                        phi.as_ptr(), n as isize, 1,
                        0.0,
                        out_l.as_mut_ptr(), n as isize, 1,
                    );
                }
            });
    }

    /// Exchange-symmetry projection: `a_L <- (a_L + a_L^T) / 2`.
    pub fn symmetrize(&self, x: &mut [f64]) {
        let n = self.n_interior();
        for x_l in x.chunks_mut(n * n) {
            for i in 0..n {
                for j in 0..i {
                    let m = 0.5 * (x_l[i * n + j] + x_l[j * n + i]);
                    x_l[i * n + j] = m;
                    x_l[j * n + i] = m;
                }
            }
        }
    }

    /// Density contribution `rho(r_i) r_i^2 = 4 pi h sum_{j, L} a_L(i, j)^2`
    /// of a state normalized in the physical metric.
    pub fn dens_r2(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_interior();
        let mut out = vec![0.0; n];
        for x_l in x.chunks(n * n) {
            for i in 0..n {
                let row = &x_l[i * n..(i + 1) * n];
                let s: f64 = row.iter().map(|v| v * v).sum();
                out[i] += s;
            }
        }
        let scale = polaron_core::FOUR_PI * self.mesh.h();
        for v in &mut out {
            *v *= scale;
        }
        out
    }

    /// Kinetic quadratic form (bonds + centrifugal) in the mesh metric.
    pub fn kinetic_form(&self, x: &[f64]) -> f64 {
        let n = self.n_interior();
        let r = self.mesh.nodes();
        let h2 = self.mesh.h() * self.mesh.h();
        let mut total = 0.0;
        for (l, x_l) in x.chunks(n * n).enumerate() {
            let ll = (l * (l + 1)) as f64;
            let mut bonds = 0.0;
            for i in 0..=n {
                for j in 0..n {
                    let a = if i == 0 { 0.0 } else { x_l[(i - 1) * n + j] };
                    let b = if i == n { 0.0 } else { x_l[i * n + j] };
                    bonds += (b - a) * (b - a);
                    // same for the second coordinate by symmetry of storage
                }
            }
            let mut bonds_j = 0.0;
            for i in 0..n {
                for j in 0..=n {
                    let a = if j == 0 { 0.0 } else { x_l[i * n + j - 1] };
                    let b = if j == n { 0.0 } else { x_l[i * n + j] };
                    bonds_j += (b - a) * (b - a);
                }
            }
            let mut centr = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = x_l[i * n + j];
                    centr += (ll / (r[i] * r[i]) + ll / (r[j] * r[j])) * v * v;
                }
            }
            // int (d chi)^2 dr1 dr2 = sum of squared bond differences;
            // the potential-like centrifugal term carries the cell area
            total += bonds + bonds_j + h2 * centr;
        }
        total
    }
}

pub(crate) struct EigenSolve {
    pub theta: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(x: &mut [f64], s: f64) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// Jacobi eigensolver for tiny symmetric matrices (k <= 4).
fn small_symmetric_lowest(a: &[f64], k: usize) -> (f64, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _ in 0..40 {
        let mut off = 0.0;
        for p in 0..k {
            for q in p + 1..k {
                off += m[p * k + q] * m[p * k + q];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = m[p * k + q];
                if apq.abs() < 1e-30 {
                    continue;
                }
                let theta = 0.5 * (m[q * k + q] - m[p * k + p]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let mip = m[i * k + p];
                    let miq = m[i * k + q];
                    m[i * k + p] = c * mip - s * miq;
                    m[i * k + q] = s * mip + c * miq;
                }
                for j in 0..k {
                    let mpj = m[p * k + j];
                    let mqj = m[q * k + j];
                    m[p * k + j] = c * mpj - s * mqj;
                    m[q * k + j] = s * mpj + c * mqj;
                }
                for i in 0..k {
                    let vip = v[i * k + p];
                    let viq = v[i * k + q];
                    v[i * k + p] = c * vip - s * viq;
                    v[i * k + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..k {
        if m[i * k + i] < m[best * k + best] {
            best = i;
        }
    }
    let vec: Vec<f64> = (0..k).map(|i| v[i * k + best]).collect();
    (m[best * k + best], vec)
}

/// `lowest_state` with the stall diagnostic promoted to an error (the
/// public inner ground-state operation uses this).
pub(crate) fn lowest_state_strict(
    ctx: &MeshContext,
    potential: &[f64],
    nu: f64,
    x0: &[f64],
    opts: &InnerOptions,
) -> Result<EigenSolve> {
    let sol = lowest_state(ctx, potential, nu, x0, opts)?;
    if sol.residual > opts.tol * sol.theta.abs().max(1.0) * 10.0 {
        return Err(BipolaronError::NoConvergence(format!(
            "inner eigensolver stalled at residual {:.3e} after {} iterations",
            sol.residual, sol.iterations
        )));
    }
    Ok(sol)
}

/// Locally optimal preconditioned iteration for the lowest symmetric state.
/// Runs to the tolerance or the iteration cap; the residual is reported
/// either way (the SCF outer loop tolerates partially converged inner
/// states away from its own fixed point).
pub(crate) fn lowest_state(
    ctx: &MeshContext,
    potential: &[f64],
    nu: f64,
    x0: &[f64],
    opts: &InnerOptions,
) -> Result<EigenSolve> {
    let len = ctx.state_len();
    if x0.len() != len || potential.len() != ctx.n_interior() {
        return Err(BipolaronError::InvalidArgument(
            "inner solver received mismatched array sizes".into(),
        ));
    }
    let mut x = x0.to_vec();
    ctx.symmetrize(&mut x);
    let n0 = norm(&x);
    if n0 <= 1e-280 {
        return Err(BipolaronError::InvalidArgument(
            "inner solver needs a nonzero start".into(),
        ));
    }
    scale(&mut x, 1.0 / n0);
    let mut hx = vec![0.0; len];
    ctx.apply_h(&x, potential, nu, &mut hx);
    let mut theta = dot(&x, &hx);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut w = vec![0.0; len];
    let mut hw = vec![0.0; len];

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // r = Hx - theta x
        let mut r: Vec<f64> = hx.clone();
        axpy(&mut r, -theta, &x);
        residual = norm(&r);
        if residual <= opts.tol * theta.abs().max(1.0) {
            break;
        }
        let sigma = 1.0 + theta.abs();
        ctx.apply_prec(&r, sigma, &mut w);
        ctx.symmetrize(&mut w);
        // orthogonalize w against x (and p)
        let wx = dot(&w, &x);
        axpy(&mut w, -wx, &x);
        if let Some((pv, _)) = &p {
            let wp = dot(&w, pv);
            axpy(&mut w, -wp, pv);
        }
        let wn = norm(&w);
        if wn <= 1e-300 {
            break;
        }
        scale(&mut w, 1.0 / wn);
        ctx.apply_h(&w, potential, nu, &mut hw);

        // Rayleigh-Ritz over [x, w, p]
        let dim = if p.is_some() { 3 } else { 2 };
        let mut small = vec![0.0; dim * dim];
        small[0] = theta;
        small[1] = dot(&x, &hw);
        small[dim] = small[1];
        small[dim + 1] = dot(&w, &hw);
        if let Some((pv, hpv)) = &p {
            small[2] = dot(&x, hpv);
            small[2 * dim] = small[2];
            small[dim + 2] = dot(&w, hpv);
            small[2 * dim + 1] = small[dim + 2];
            small[2 * dim + 2] = dot(pv, hpv);
        }
        let (_, c) = small_symmetric_lowest(&small, dim);

        // assemble the new iterate and direction
        let mut x_new = vec![0.0; len];
        let mut hx_new = vec![0.0; len];
        axpy(&mut x_new, c[0], &x);
        axpy(&mut hx_new, c[0], &hx);
        axpy(&mut x_new, c[1], &w);
        axpy(&mut hx_new, c[1], &hw);
        let mut p_new = vec![0.0; len];
        let mut hp_new = vec![0.0; len];
        axpy(&mut p_new, c[1], &w);
        axpy(&mut hp_new, c[1], &hw);
        if let Some((pv, hpv)) = &p {
            axpy(&mut x_new, c[2], pv);
            axpy(&mut hx_new, c[2], hpv);
            axpy(&mut p_new, c[2], pv);
            axpy(&mut hp_new, c[2], hpv);
        }
        let nx = norm(&x_new);
        scale(&mut x_new, 1.0 / nx);
        scale(&mut hx_new, 1.0 / nx);
        let np = norm(&p_new);
        if np > 1e-300 {
            scale(&mut p_new, 1.0 / np);
            scale(&mut hp_new, 1.0 / np);
            p = Some((p_new, hp_new));
        } else {
            p = None;
        }
        x = x_new;
        hx = hx_new;
        theta = dot(&x, &hx);
    }

    // sign convention: nodeless ground state positive in the L = 0 sector
    let n = ctx.n_interior();
    if x[..n * n].iter().sum::<f64>() < 0.0 {
        scale(&mut x, -1.0);
    }
    Ok(EigenSolve {
        theta,
        x,
        residual,
        iterations,
    })
}

/// One-body ground state on the mesh (used for product starts and the
/// separability oracle): returns `u` with `h sum u^2 = 1`.
pub(crate) fn one_body_ground(mesh: &UniformMesh, potential: &[f64]) -> (f64, Vec<f64>) {
    ground_state_radial_fd(mesh, potential, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_box_ground_state() {
        // V = 0, nu = 0: lowest Dirichlet mode, energy -> 2 (pi / r_max)^2
        let ctx = MeshContext::new(10.0, 96, 6).unwrap();
        let n = ctx.n_interior();
        let mut x0 = vec![0.0; ctx.state_len()];
        for i in 0..n {
            for j in 0..n {
                let ri = ctx.mesh.nodes()[i] / 10.0;
                let rj = ctx.mesh.nodes()[j] / 10.0;
                x0[i * n + j] = (std::f64::consts::PI * ri).sin() * (std::f64::consts::PI * rj).sin();
            }
        }
        let v = vec![0.0; n];
        let sol = lowest_state(&ctx, &v, 0.0, &x0, &InnerOptions::default()).unwrap();
        let exact = 2.0 * (std::f64::consts::PI / 10.0).powi(2);
        assert!(
            (sol.theta - exact).abs() < 1e-2 * exact,
            "theta = {}, box mode = {exact}",
            sol.theta
        );
    }

    #[test]
    fn deep_well_separates_into_one_body_products() {
        // V deep and attractive, nu = 0: the two-body ground state is the
        // product of one-body ground states; energies match to 1e-6.
        let ctx = MeshContext::new(12.0, 120, 6).unwrap();
        let n = ctx.n_interior();
        let v: Vec<f64> = ctx
            .mesh
            .nodes()
            .iter()
            .map(|&r| -8.0 * (-0.25 * r * r).exp())
            .collect();
        let (e1, u) = one_body_ground(&ctx.mesh, &v);
        let mut x0 = vec![0.0; ctx.state_len()];
        for i in 0..n {
            for j in 0..n {
                x0[i * n + j] = u[i] * u[j];
            }
        }
        let sol = lowest_state(&ctx, &v, 0.0, &x0, &InnerOptions::default()).unwrap();
        assert!(
            ((sol.theta - 2.0 * e1) / sol.theta).abs() < 1e-6,
            "two-body {} vs twice one-body {}",
            sol.theta,
            2.0 * e1
        );
    }

    #[test]
    fn repulsion_tables_match_a_plain_quadrature() {
        // G_{00} = (1/2) int du / r12 against a fine direct rule
        let ctx = MeshContext::new(8.0, 64, 4).unwrap();
        let r = ctx.mesh.nodes();
        let (uq, wq) = gauss_legendre(4000);
        for (i, j) in [(3usize, 40usize), (10, 11), (25, 25)] {
            let g00 = ctx.pair_g[tri(i.min(j), i.max(j)) * 16];
            let (ri, rj) = (r[i], r[j]);
            let direct: f64 = uq
                .iter()
                .zip(&wq)
                .map(|(&u, &w)| w / (ri * ri + rj * rj - 2.0 * ri * rj * u).sqrt())
                .sum();
            assert!(
                (g00 - 0.5 * direct).abs() < 2e-4 * g00.abs(),
                "pair ({i}, {j}): {g00} vs {}",
                0.5 * direct
            );
        }
    }
}
