//! Uniform radial mesh with Dirichlet ends, used by the variational solvers
//! for the reduced function `u = r psi`. The kinetic operator is the
//! second-order centered difference of `-u''`; the Hartree potential is the
//! prefix-sum form of Newton's theorem; both share the max-kernel Coulomb
//! form, so the discrete functional is exactly self-consistent.

use crate::error::{CoreError, Result};
use crate::FOUR_PI;

/// Uniform mesh on `[0, r_max]` with `n_cells` cells; fields live on the
/// `n_cells - 1` interior nodes `r_i = i h`, with `u(0) = u(r_max) = 0`.
#[derive(Debug, Clone)]
pub struct UniformMesh {
    r_max: f64,
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl UniformMesh {
    pub fn new(r_max: f64, n_cells: usize) -> Result<Self> {
        if !(r_max > 0.0) || n_cells < 8 {
            return Err(CoreError::InvalidArgument(format!(
                "mesh needs r_max > 0 and at least 8 cells, got ({r_max}, {n_cells})"
            )));
        }
        let h = r_max / n_cells as f64;
        let nodes = (1..n_cells).map(|i| i as f64 * h).collect();
        Ok(Self {
            r_max,
            n_cells,
            h,
            nodes,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_interior(&self) -> usize {
        self.n_cells - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `int f dr ~ h sum f_i` (endpoints vanish for Dirichlet data).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.h * values.iter().sum::<f64>()
    }

    /// Hartree potential at the nodes from `dens_r2 = rho(r) r^2` samples:
    /// `V_i = 4 pi [ (1/r_i) sum_{j<=i} h d_j + sum_{j>i} h d_j / r_j ]`.
    ///
    /// The implied kernel is `1 / max(r_i, r_j)`, so the bilinear form
    /// `sum h d1 V[d2]` is exactly symmetric.
    pub fn hartree_from_dens_r2(&self, dens_r2: &[f64]) -> Vec<f64> {
        let n = self.n_interior();
        let h = self.h;
        let mut v = vec![0.0; n];
        let mut prefix = 0.0;
        for i in 0..n {
            prefix += h * dens_r2[i];
            v[i] = prefix / self.nodes[i];
        }
        let mut suffix = 0.0;
        for i in (0..n).rev() {
            v[i] = FOUR_PI * (v[i] + suffix);
            suffix += h * dens_r2[i] / self.nodes[i];
        }
        v
    }

    /// `D(d1, d2) = (4 pi)^2 sum_{ij} h^2 d1_i d2_j / max(r_i, r_j)`.
    pub fn coulomb_form(&self, d1_r2: &[f64], d2_r2: &[f64]) -> f64 {
        let v2 = self.hartree_from_dens_r2(d2_r2);
        FOUR_PI
            * self.h
            * d1_r2
                .iter()
                .zip(&v2)
                .map(|(&d, &v)| d * v)
                .sum::<f64>()
    }
}

/// Solve the SPD tridiagonal system with `diag` and constant off-diagonal
/// `off` (Thomas algorithm).
pub fn solve_tridiag_const_off(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` strictly
/// below `lambda` (Sturm sequence count).
fn sturm_count(diag: &[f64], off: f64, lambda: f64) -> usize {
    let off2 = off * off;
    let mut q = diag[0] - lambda;
    let mut count = usize::from(q < 0.0);
    for &d in &diag[1..] {
        let denom = if q.abs() < 1e-300 {
            1e-300_f64.copysign(q)
        } else {
            q
        };
        q = d - lambda - off2 / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `diag` and constant off-diagonal `off`: Sturm bisection for the value,
/// inverse iteration for the vector. The vector is normalized to unit
/// Euclidean length with a nonnegative sum.
pub fn smallest_eigenpair_tridiag(diag: &[f64], off: f64) -> (f64, Vec<f64>) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &d) in diag.iter().enumerate() {
        let radius = match (i == 0, i == n - 1) {
            (true, true) => 0.0,
            (true, false) | (false, true) => off.abs(),
            _ => 2.0 * off.abs(),
        };
        lo = lo.min(d - radius);
        hi = hi.max(d + radius);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let scale = diag.iter().fold(0.0f64, |m, &d| m.max(d.abs())) + 2.0 * off.abs();

    // Inverse iteration at the bisection value, then Rayleigh-shift passes.
    let mut shift = lambda - 1e-12 * scale;
    let mut x = vec![1.0; n];
    let norm0 = (n as f64).sqrt();
    for v in &mut x {
        *v /= norm0;
    }
    let mut rayleigh = lambda;
    for pass in 0..12 {
        let shifted: Vec<f64> = diag.iter().map(|&d| d - shift).collect();
        let mut y = solve_tridiag_guarded(&shifted, off, &x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut y {
            *v /= norm;
        }
        x = y;
        let tx = apply_tridiag(diag, off, &x);
        rayleigh = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
        let res: f64 = tx
            .iter()
            .zip(&x)
            .map(|(&t, &xi)| (t - rayleigh * xi) * (t - rayleigh * xi))
            .sum::<f64>()
            .sqrt();
        if res <= 1e-13 * scale {
            break;
        }
        if pass >= 1 {
            // switch to Rayleigh-quotient shifts once the vector is close
            shift = rayleigh - 1e-12 * scale;
        }
    }
    if x.iter().sum::<f64>() < 0.0 {
        for v in &mut x {
            *v = -*v;
        }
    }
    (rayleigh, x)
}

fn apply_tridiag(diag: &[f64], off: f64, x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut tx = vec![0.0; n];
    for i in 0..n {
        let mut acc = diag[i] * x[i];
        if i > 0 {
            acc += off * x[i - 1];
        }
        if i + 1 < n {
            acc += off * x[i + 1];
        }
        tx[i] = acc;
    }
    tx
}

fn solve_tridiag_guarded(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let guard = |m: f64| {
        if m.abs() < 1e-280 {
            1e-280_f64.copysign(m)
        } else {
            m
        }
    };
    let m0 = guard(diag[0]);
    c[0] = off / m0;
    d[0] = rhs[0] / m0;
    for i in 1..n {
        let m = guard(diag[i] - off * c[i - 1]);
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Ground state of `-u'' + V u (+ l(l+1)/r^2 u) = E u` on the mesh with
/// Dirichlet ends. Returns `(E, u)` with `h sum u^2 = 1` and `u >= 0` in sum.
pub fn ground_state_radial_fd(
    mesh: &UniformMesh,
    potential: &[f64],
    angular_l: usize,
) -> (f64, Vec<f64>) {
    let h2 = mesh.h() * mesh.h();
    let ll = (angular_l * (angular_l + 1)) as f64;
    let diag: Vec<f64> = mesh
        .nodes()
        .iter()
        .zip(potential)
        .map(|(&r, &v)| 2.0 / h2 + v + ll / (r * r))
        .collect();
    let off = -1.0 / h2;
    let (e, mut u) = smallest_eigenpair_tridiag(&diag, off);
    let scale = 1.0 / mesh.h().sqrt();
    for v in &mut u {
        *v *= scale;
    }
    (e, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn particle_in_a_box_ground_state() {
        // -u'' on (0, L): E_1 = (pi / L)^2, discrete (2 - 2 cos(pi h / L)) / h^2
        let mesh = UniformMesh::new(10.0, 400).unwrap();
        let v = vec![0.0; mesh.n_interior()];
        let (e, u) = ground_state_radial_fd(&mesh, &v, 0);
        let h = mesh.h();
        let exact_discrete =
            (2.0 - 2.0 * (std::f64::consts::PI * h / 10.0).cos()) / (h * h);
        assert!(
            (e - exact_discrete).abs() < 1e-10 * exact_discrete,
            "e = {e}, discrete sine mode = {exact_discrete}"
        );
        // normalized
        let norm: f64 = mesh.integrate(&u.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coulomb_form_is_symmetric() {
        let mesh = UniformMesh::new(8.0, 128).unwrap();
        let d1: Vec<f64> = mesh.nodes().iter().map(|&r| (-r).exp() * r * r).collect();
        let d2: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|&r| (-0.5 * (r - 2.0) * (r - 2.0)).exp())
            .collect();
        let a = mesh.coulomb_form(&d1, &d2);
        let b = mesh.coulomb_form(&d2, &d1);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn hydrogen_like_well() {
        // -u'' - (2/r) u: ground state E = -1 (hydrogen s-state in p^2 = -Delta
        // units with potential -2/r), u = r e^{-r} up to normalization.
        let mesh = UniformMesh::new(30.0, 3000).unwrap();
        let v: Vec<f64> = mesh.nodes().iter().map(|&r| -2.0 / r).collect();
        let (e, _) = ground_state_radial_fd(&mesh, &v, 0);
        assert!((e + 1.0).abs() < 2e-4, "hydrogen ground energy {e}");
    }
}
