//! Projected, preconditioned gradient descent for the coupling-1 functional
//! on the uniform `u = r psi` mesh.
//!
//! Discrete forms (Dirichlet ends, spacing `h`, interior values `u_i`):
//!   norm       N(u) = 4 pi h sum u_i^2
//!   kinetic    T(u) = 4 pi sum (u_{i+1} - u_i)^2 / h
//!   attraction D(u) = 4 pi h sum u_i^2 V_i,  V = hartree of rho r^2 = u^2
//! The implied Coulomb kernel is 1/max(r_i, r_j), so T, D and the
//! Euler-Lagrange operator -u'' - 2 V u all derive from one functional and
//! the accepted-step energies are nonincreasing by construction.

use polaron_core::mesh::{solve_tridiag_const_off, UniformMesh};
use polaron_core::FOUR_PI;

use crate::{PekarError, Result, SolverOptions};

/// How the descent is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// `psi ~ exp(-r)`, the default.
    DecayingExponential,
    /// A seeded smooth random deformation of an exponential profile.
    Seeded(u64),
}

pub(crate) struct MeshSolve {
    pub u: Vec<f64>,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

struct State {
    u: Vec<f64>,
    v_h: Vec<f64>,
    energy: f64,
    kinetic: f64,
    attraction: f64,
}

fn normalize(mesh: &UniformMesh, u: &mut [f64]) {
    let n2: f64 = FOUR_PI * mesh.h() * u.iter().map(|x| x * x).sum::<f64>();
    let s = 1.0 / n2.sqrt();
    for x in u.iter_mut() {
        *x *= s;
    }
}

fn evaluate(mesh: &UniformMesh, u: Vec<f64>) -> State {
    let h = mesh.h();
    let n = u.len();
    let mut kin = 0.0;
    for i in 0..=n {
        let a = if i == 0 { 0.0 } else { u[i - 1] };
        let b = if i == n { 0.0 } else { u[i] };
        kin += (b - a) * (b - a);
    }
    let kinetic = FOUR_PI * kin / h;
    let dens_r2: Vec<f64> = u.iter().map(|x| x * x).collect();
    let v_h = mesh.hartree_from_dens_r2(&dens_r2);
    let attraction = FOUR_PI
        * h
        * dens_r2
            .iter()
            .zip(&v_h)
            .map(|(&d, &v)| d * v)
            .sum::<f64>();
    State {
        u,
        v_h,
        energy: kinetic - attraction,
        kinetic,
        attraction,
    }
}

/// `(H u)_i = (-delta^2 u / h^2)_i - 2 V_i u_i` and the Rayleigh quotient.
fn apply_el_operator(mesh: &UniformMesh, state: &State) -> (Vec<f64>, f64) {
    let h2 = mesh.h() * mesh.h();
    let n = state.u.len();
    let u = &state.u;
    let mut hu = vec![0.0; n];
    for i in 0..n {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < n { u[i + 1] } else { 0.0 };
        hu[i] = (2.0 * u[i] - left - right) / h2 - 2.0 * state.v_h[i] * u[i];
    }
    // norm is 1, so mu = 4 pi h <u, H u> = T - 2 D
    let mu = state.kinetic - 2.0 * state.attraction;
    (hu, mu)
}

pub(crate) fn minimize_on_mesh(mesh: &UniformMesh, opts: &SolverOptions) -> Result<MeshSolve> {
    let n = mesh.n_interior();
    let mut u0: Vec<f64> = match opts.init {
        InitStrategy::DecayingExponential => {
            mesh.nodes().iter().map(|&r| r * (-r).exp()).collect()
        }
        InitStrategy::Seeded(seed) => {
            // deterministic smooth deformation: a few fixed modes with
            // seed-derived phases and a seed-derived decay rate
            let s = seed.wrapping_mul(0x9e3779b97f4a7c15);
            let frac = |k: u64| ((s >> (8 * k)) & 0xffff) as f64 / 65536.0;
            let a = 0.5 + frac(0);
            let r_max = mesh.r_max();
            mesh.nodes()
                .iter()
                .map(|&r| {
                    let mut bump = 1.0;
                    for k in 0..3u64 {
                        let phase = 2.0 * std::f64::consts::PI * frac(k + 1);
                        bump += 0.1
                            * ((k as f64 + 1.0) * std::f64::consts::PI * r / r_max + phase).sin();
                    }
                    r * (-a * r).exp() * bump
                })
                .collect()
        }
    };
    normalize(mesh, &mut u0);
    let mut state = evaluate(mesh, u0);
    let mut trace = if opts.record_trace {
        vec![state.energy]
    } else {
        Vec::new()
    };

    let h = mesh.h();
    let h2 = h * h;
    let mut tau = 1.0_f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let (hu, mu) = apply_el_operator(mesh, &state);
        let g: Vec<f64> = hu
            .iter()
            .zip(&state.u)
            .map(|(&t, &x)| t - mu * x)
            .collect();
        residual = (FOUR_PI * h * g.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if residual <= opts.tol {
            break;
        }

        // preconditioner (c - d^2/dr^2)^{-1}; c large enough that the
        // preconditioned Hessian stays below 1 and tau <= 1 is stable
        let c = 1.0 + 2.0 * mu.abs();
        let diag = vec![c + 2.0 / h2; n];
        let mut d = solve_tridiag_const_off(&diag, -1.0 / h2, &g);
        // project out the radial direction of the constraint sphere
        let du: f64 = d.iter().zip(&state.u).map(|(a, b)| a * b).sum();
        let uu: f64 = state.u.iter().map(|x| x * x).sum();
        let coef = du / uu;
        for (di, &ui) in d.iter_mut().zip(&state.u) {
            *di -= coef * ui;
        }

        let mut accepted = false;
        for _ in 0..45 {
            let mut candidate: Vec<f64> = state
                .u
                .iter()
                .zip(&d)
                .map(|(&x, &dx)| x - tau * dx)
                .collect();
            normalize(mesh, &mut candidate);
            let cand = evaluate(mesh, candidate);
            if cand.energy <= state.energy + 1e-14 * (1.0 + state.energy.abs()) {
                state = cand;
                if opts.record_trace {
                    trace.push(state.energy);
                }
                tau = (tau * 1.1).min(1.0);
                accepted = true;
                break;
            }
            tau *= 0.5;
            if tau < 1e-16 {
                break;
            }
        }
        if !accepted {
            // stalled line search: either converged enough or genuinely stuck
            if residual <= opts.tol * 10.0 {
                break;
            }
            tau = 0.5;
        }
    }

    if residual > opts.tol * 10.0 {
        return Err(PekarError::NoConvergence {
            iterations,
            residual,
            best_energy: state.energy,
        });
    }

    let (_, mu) = apply_el_operator(mesh, &state);
    // signs: the ground state has no nodes, keep it positive
    if state.u.iter().sum::<f64>() < 0.0 {
        for x in state.u.iter_mut() {
            *x = -*x;
        }
    }
    Ok(MeshSolve {
        u: state.u,
        mu,
        residual,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_a_coarse_mesh() {
        let mesh = UniformMesh::new(20.0, 800).unwrap();
        let solve = minimize_on_mesh(&mesh, &SolverOptions::default()).unwrap();
        let state = evaluate(&mesh, solve.u.clone());
        // coupling-1 optimum is about -0.1085
        assert!(state.energy < -0.105, "energy {}", state.energy);
        assert!(solve.residual <= 1e-7, "residual {}", solve.residual);
        // virial: T = -E at the minimizer
        assert!(
            (state.kinetic + state.energy).abs() < 1e-3 * state.energy.abs(),
            "virial defect: T = {}, E = {}",
            state.kinetic,
            state.energy
        );
        assert!(state.u.iter().all(|&x| x >= -1e-12), "nodeless positivity");
    }

    #[test]
    fn seeded_inits_reach_the_same_minimum() {
        let mesh = UniformMesh::new(20.0, 400).unwrap();
        let mut opts = SolverOptions::default();
        opts.init = InitStrategy::Seeded(7);
        let a = minimize_on_mesh(&mesh, &opts).unwrap();
        opts.init = InitStrategy::Seeded(991);
        let b = minimize_on_mesh(&mesh, &opts).unwrap();
        let ea = evaluate(&mesh, a.u).energy;
        let eb = evaluate(&mesh, b.u).energy;
        assert!((ea - eb).abs() < 1e-8, "{ea} vs {eb}");
    }
}
