//! Self-consistent field outer loop: refresh the Hartree attraction from
//! the density, re-solve the linearized two-body ground state, mix, repeat.

use std::sync::Arc;

use polaron_core::interp::UniformSpline;
use polaron_core::legendre::{eval_series, LegendreTable};
use polaron_core::{CouplingParams, FieldKind, RadialField, FOUR_PI};

use crate::energy::GlEvaluator;
use crate::inner::{lowest_state, lowest_state_strict, one_body_ground, InnerOptions, MeshContext};
use crate::state::{tri_index, BipolaronState};
use crate::{BipolaronError, InternalGrid, Result};

/// How the SCF starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScfInit {
    /// Product of coupling-rescaled single-polaron orbitals (default).
    Product,
    /// A seeded smooth random deformation of the product start.
    Seeded(u64),
}

#[derive(Debug, Clone)]
pub struct ScfOptions {
    /// Sup-norm density-change tolerance of the outer loop.
    pub tol: f64,
    pub max_outer: usize,
    /// Density mixing weight, halved on an energy increase.
    pub mixing: f64,
    /// Secant (Anderson depth-1) acceleration of the density fixed point;
    /// plain linear mixing when off.
    pub anderson: bool,
    /// Auxiliary mesh cells (`None`: 4/3 of the radial node count).
    pub mesh_cells: Option<usize>,
    pub inner: InnerOptions,
    pub init: ScfInit,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            tol: 5e-5,
            max_outer: 250,
            mixing: 0.3,
            anderson: true,
            mesh_cells: None,
            inner: InnerOptions::default(),
            init: ScfInit::Product,
        }
    }
}

/// Converged solve: couplings, quartic-energy decomposition, density,
/// reduced state and convergence diagnostics. The stored identity
/// `energy = kinetic + U * repulsion_expect - alpha * attraction` is exact.
#[derive(Debug, Clone)]
pub struct BipolaronResult {
    pub params: CouplingParams,
    pub energy: f64,
    pub kinetic: f64,
    /// `<1 / |x - y|>`.
    pub repulsion_expect: f64,
    /// `D(rho, rho)`.
    pub attraction: f64,
    pub density: RadialField,
    pub state: BipolaronState,
    pub scf_iterations: usize,
    pub scf_residual: f64,
    /// Quartic-functional values of the accepted outer iterations
    /// (coupling-rescaled to the requested alpha).
    pub energy_trace: Vec<f64>,
}

/// Reusable solver bound to one internal grid: mesh tables are built once
/// and consecutive solves warm-start from the previous state (scans and
/// bisection runs lean on this).
pub struct ScfEngine {
    grid: Arc<InternalGrid>,
    ctx: MeshContext,
    warm: Option<(f64, Vec<f64>, Vec<f64>)>, // (nu, mesh state, dens_r2)
}

struct MeshSolution {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    trace: Vec<f64>,
}

impl ScfEngine {
    pub fn new(grid: &Arc<InternalGrid>, opts: &ScfOptions) -> Result<Self> {
        let n_cells = opts
            .mesh_cells
            .unwrap_or(4 * grid.n_r() / 3)
            .clamp(96, 1024);
        let ctx = MeshContext::new(grid.radial().r_max(), n_cells, grid.n_u())?;
        Ok(Self {
            grid: Arc::clone(grid),
            ctx,
            warm: None,
        })
    }

    pub fn grid(&self) -> &Arc<InternalGrid> {
        &self.grid
    }

    /// Minimize at couplings `(alpha, U)`; internally reduced to coupling 1
    /// with repulsion ratio `U / alpha` on the grid geometry, then rescaled.
    pub fn solve(&mut self, params: &CouplingParams, opts: &ScfOptions) -> Result<BipolaronResult> {
        if params.n_particles() != 2 {
            return Err(BipolaronError::InvalidArgument(format!(
                "bipolaron solver needs n_particles = 2, got {}",
                params.n_particles()
            )));
        }
        let alpha = params.alpha();
        let nu = params.repulsion_ratio();
        // continuation: large repulsion jumps stall the inner eigensolver,
        // so ramp nu with loose warm solves first
        let mut nu_here = match &self.warm {
            Some((w, _, _)) => *w,
            None => 0.0,
        };
        if (nu - nu_here).abs() > 2.5 {
            let mut loose = opts.clone();
            loose.tol = (opts.tol * 100.0).min(1e-2);
            loose.max_outer = 80;
            while (nu - nu_here).abs() > 2.5 {
                nu_here += (nu - nu_here).clamp(-2.5, 2.5);
                self.solve_reduced(nu_here, &loose)?;
            }
        }
        let sol = self.solve_reduced(nu, opts)?;

        // quadrature-grid reporting at coupling 1
        let state1 = mesh_state_to_gl(&self.ctx, &self.grid, &sol.x)?;
        let eval = GlEvaluator::new(&self.grid);
        let kinetic1 = eval.kinetic(&state1);
        let repulsion1 = eval.inv_r12(&state1);
        let rho1 = eval.density(&state1)?;
        let attraction1 = polaron_core::coulomb_double_integral(&rho1, &rho1)?;

        // exact dilation back to (alpha, U)
        let a2 = alpha * alpha;
        let kinetic = a2 * kinetic1;
        let repulsion_expect = alpha * repulsion1;
        let attraction = alpha * attraction1;
        let energy = kinetic + params.repulsion_u() * repulsion_expect - alpha * attraction;
        let density = rho1.scaled(1.0 / alpha);
        let state = rescale_state(&state1, alpha)?;
        Ok(BipolaronResult {
            params: *params,
            energy,
            kinetic,
            repulsion_expect,
            attraction,
            density,
            state,
            scf_iterations: sol.iterations,
            scf_residual: sol.residual,
            energy_trace: sol.trace.iter().map(|e| a2 * e).collect(),
        })
    }

    /// The coupling-1 solve at repulsion ratio `nu`.
    fn solve_reduced(&mut self, nu: f64, opts: &ScfOptions) -> Result<MeshSolution> {
        let ctx = &self.ctx;
        let metric = 0.5 * FOUR_PI * FOUR_PI * ctx.mesh.h() * ctx.mesh.h(); // 8 pi^2 h^2

        // starting state and density; warm reuse skips the seeded deformation
        let (mut x, mut dens) = match &self.warm {
            Some((_, wx, wd)) => (wx.clone(), wd.clone()),
            None => {
                let (mut x, mut dens) = self.product_start(opts)?;
                if let ScfInit::Seeded(seed) = opts.init {
                    deform_state(ctx, &mut x, seed);
                    let nrm = (metric * x.iter().map(|v| v * v).sum::<f64>()).sqrt();
                    for v in &mut x {
                        *v /= nrm;
                    }
                    dens = ctx.dens_r2(&x);
                }
                (x, dens)
            }
        };

        let mut mixing = opts.mixing;
        let mut good_streak = 0usize;
        let mut e_acc = f64::INFINITY;
        let mut trace = Vec::new();
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        let r_nodes = ctx.mesh.nodes();
        // previous (input, residual) pair for the secant acceleration
        let mut prev_pair: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut best_residual = f64::INFINITY;

        for outer in 0..opts.max_outer {
            iterations = outer + 1;
            let potential: Vec<f64> = ctx
                .mesh
                .hartree_from_dens_r2(&dens)
                .iter()
                .map(|v| -2.0 * v)
                .collect();
            // loose inner tolerance early, tight once the density settles
            let mut inner = opts.inner.clone();
            inner.tol = opts.inner.tol.max((1e-3 * residual.min(1.0)).min(1e-4));
            let sol = lowest_state(ctx, &potential, nu, &x, &inner)?;
            x = sol.x;
            // normalize in the physical metric
            let nrm = (metric * x.iter().map(|v| v * v).sum::<f64>()).sqrt();
            for v in &mut x {
                *v /= nrm;
            }
            let dens_new = ctx.dens_r2(&x);

            let energy = self.quartic_energy(&x, &dens_new, nu).0;
            if energy <= e_acc + 1e-12 * (1.0 + e_acc.abs()) {
                e_acc = energy.min(e_acc);
                trace.push(energy);
                good_streak += 1;
                if !opts.anderson && good_streak >= 3 {
                    mixing = (1.3 * mixing).min(opts.mixing);
                }
            } else if !opts.anderson && energy > e_acc + 1e-7 * (1.0 + e_acc.abs()) {
                // plain mixing: damp on a material increase
                mixing = (0.5 * mixing).max(0.02);
                good_streak = 0;
            }

            residual = dens_new
                .iter()
                .zip(&dens)
                .enumerate()
                .map(|(i, (a, b))| ((a - b) / (r_nodes[i] * r_nodes[i])).abs())
                .fold(0.0f64, f64::max);
            if std::env::var("SCF_DEBUG").is_ok() {
                eprintln!("outer {iterations}: res {residual:.3e} mix {mixing:.3} E {energy:.10}");
            }
            if residual <= opts.tol {
                converged = true;
                break;
            }
            if opts.anderson && residual > 10.0 * best_residual && iterations > 5 {
                // runaway extrapolation: restart the secant history damped
                prev_pair = None;
                mixing = (0.5 * mixing).max(0.05);
            }
            best_residual = best_residual.min(residual);
            let f: Vec<f64> = dens_new.iter().zip(&dens).map(|(a, b)| a - b).collect();
            let mut theta = 0.0;
            if opts.anderson {
                if let Some((_, f_prev)) = &prev_pair {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for (fi, fp) in f.iter().zip(f_prev) {
                        num += fi * (fi - fp);
                        den += (fi - fp) * (fi - fp);
                    }
                    if den > 1e-300 {
                        theta = (num / den).clamp(-2.0, 2.0);
                    }
                }
            }
            let next: Vec<f64> = if theta != 0.0 {
                let (d_prev, f_prev) = prev_pair.as_ref().unwrap();
                dens.iter()
                    .zip(&f)
                    .zip(d_prev)
                    .zip(f_prev)
                    .map(|(((d, fi), dp), fp)| {
                        (1.0 - theta) * (d + mixing * fi) + theta * (dp + mixing * fp)
                    })
                    .collect()
            } else {
                dens.iter()
                    .zip(&f)
                    .map(|(d, fi)| d + mixing * fi)
                    .collect()
            };
            prev_pair = Some((dens.clone(), f));
            dens = next;
            // the accelerated input can graze zero at isolated nodes
            for d in &mut dens {
                if *d < 0.0 {
                    *d = 0.0;
                }
            }
        }
        if !converged && residual > opts.tol * 100.0 {
            return Err(BipolaronError::NoConvergence(format!(
                "SCF density residual {residual:.3e} after {iterations} outer iterations \
                 (oscillation detected; a smaller mixing parameter may help)"
            )));
        }
        let dens_final = ctx.dens_r2(&x);
        self.warm = Some((nu, x.clone(), dens_final));
        Ok(MeshSolution {
            x,
            iterations,
            residual,
            trace,
        })
    }

    /// Quartic functional on the mesh: `(E, T, R, D)` at coupling 1.
    fn quartic_energy(&self, x: &[f64], dens: &[f64], nu: f64) -> (f64, f64, f64, f64) {
        let metric = 0.5 * FOUR_PI * FOUR_PI; // 8 pi^2
        let kinetic = metric * self.ctx.kinetic_form(x);
        let h2 = self.ctx.mesh.h() * self.ctx.mesh.h();
        let repulsion = metric * h2 * self.ctx.repulsion_form(x);
        let attraction = self.ctx.mesh.coulomb_form(dens, dens);
        (
            kinetic + nu * repulsion - attraction,
            kinetic,
            repulsion,
            attraction,
        )
    }

    /// Product start: a quick one-body self-consistent orbital at effective
    /// coupling 2 (the `U = 0` optimum), broadcast onto the `L = 0` sector.
    fn product_start(&self, _opts: &ScfOptions) -> Result<(Vec<f64>, Vec<f64>)> {
        let ctx = &self.ctx;
        let mesh = &ctx.mesh;
        let n = ctx.n_interior();
        // physical one-body normalization: 4 pi int u^2 dr = 1
        let orbital_norm = 1.0 / FOUR_PI;
        let mut u: Vec<f64> = mesh.nodes().iter().map(|&r| r * (-r).exp()).collect();
        let nrm = (mesh.h() * u.iter().map(|v| v * v).sum::<f64>() / orbital_norm).sqrt();
        for v in &mut u {
            *v /= nrm;
        }
        // damped one-body self-consistency; the plain fixed point sloshes
        let mut dens: Vec<f64> = u.iter().map(|&ui| 2.0 * ui * ui).collect();
        for _ in 0..16 {
            let potential: Vec<f64> = mesh
                .hartree_from_dens_r2(&dens)
                .iter()
                .map(|v| -2.0 * v)
                .collect();
            let (_, unew) = one_body_ground(mesh, &potential);
            // ground_state_radial_fd returns h sum u^2 = 1
            u = unew;
            let s = orbital_norm.sqrt();
            for v in &mut u {
                *v *= s;
            }
            for (d, &ui) in dens.iter_mut().zip(&u) {
                *d = 0.7 * *d + 0.3 * 2.0 * ui * ui;
            }
        }
        // chi = u (x) u in the L = 0 mode carries 1/Pt_0 = sqrt(2)
        let mut x = vec![0.0; ctx.state_len()];
        let scale = std::f64::consts::SQRT_2;
        for i in 0..n {
            for j in 0..n {
                x[i * n + j] = scale * u[i] * u[j];
            }
        }
        let metric = 0.5 * FOUR_PI * FOUR_PI * mesh.h() * mesh.h();
        let nrm = (metric * x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        for v in &mut x {
            *v /= nrm;
        }
        let dens = ctx.dens_r2(&x);
        Ok((x, dens))
    }
}

fn deform_state(ctx: &MeshContext, x: &mut [f64], seed: u64) {
    let n = ctx.n_interior();
    let s = seed.wrapping_mul(0x9e3779b97f4a7c15);
    let frac = |k: u64| ((s >> (8 * k)) & 0xffff) as f64 / 65536.0;
    let r_max = ctx.mesh.r_max();
    for (l, x_l) in x.chunks_mut(n * n).enumerate() {
        if l > 2 {
            break;
        }
        let amp = 0.2 * frac(l as u64);
        let kx = 1.0 + 2.0 * frac(l as u64 + 3);
        for i in 0..n {
            let ri = ctx.mesh.nodes()[i];
            for j in 0..n {
                let rj = ctx.mesh.nodes()[j];
                let bump = amp
                    * (std::f64::consts::PI * kx * ri / r_max).sin()
                    * (std::f64::consts::PI * kx * rj / r_max).sin()
                    * (-(ri + rj) * 0.5).exp();
                if l == 0 {
                    x_l[i * n + j] *= 1.0 + bump;
                    x_l[i * n + j] += 0.05 * bump;
                } else {
                    x_l[i * n + j] += bump * 0.05;
                }
            }
        }
    }
    ctx.symmetrize(x);
}

/// Transfer a mesh state to the quadrature grid as a normalized
/// `BipolaronState`.
fn mesh_state_to_gl(
    ctx: &MeshContext,
    grid: &Arc<InternalGrid>,
    x: &[f64],
) -> Result<BipolaronState> {
    let n = ctx.n_interior();
    let n_r = grid.n_r();
    let n_u = grid.n_u();
    let h = ctx.mesh.h();
    let gl_nodes = grid.radial().nodes();

    // orthonormalized Legendre values at the angular nodes
    let table = LegendreTable::new(grid.angular_nodes(), n_u - 1);
    let mut ptilde = vec![0.0; n_u * n_u];
    for k in 0..n_u {
        let row = table.row(k);
        for (l, p) in row.iter().enumerate() {
            ptilde[k * n_u + l] = p * ((2.0 * l as f64 + 1.0) / 2.0).sqrt();
        }
    }

    // per-mode bicubic transfer, then synthesize over modes
    let mut a_gl = vec![0.0; ctx.n_modes * n_r * n_r];
    let mut stage = vec![0.0; n * n_r];
    for (l, x_l) in x.chunks(n * n).enumerate() {
        for i in 0..n {
            let mut knots = Vec::with_capacity(n + 2);
            knots.push(0.0);
            knots.extend_from_slice(&x_l[i * n..(i + 1) * n]);
            knots.push(0.0);
            let spline = UniformSpline::new(h, knots)?;
            for (g, &rg) in gl_nodes.iter().enumerate() {
                stage[i * n_r + g] = spline.eval(rg);
            }
        }
        for g in 0..n_r {
            let mut knots = Vec::with_capacity(n + 2);
            knots.push(0.0);
            for i in 0..n {
                knots.push(stage[i * n_r + g]);
            }
            knots.push(0.0);
            let spline = UniformSpline::new(h, knots)?;
            for (g1, &rg1) in gl_nodes.iter().enumerate() {
                a_gl[(l * n_r + g1) * n_r + g] = spline.eval(rg1);
            }
        }
    }

    let mut values = vec![0.0; n_r * (n_r + 1) / 2 * n_u];
    for j in 0..n_r {
        for i in 0..=j {
            let base = tri_index(i, j) * n_u;
            let inv_r = 1.0 / (gl_nodes[i] * gl_nodes[j]);
            for k in 0..n_u {
                let mut acc = 0.0;
                for l in 0..ctx.n_modes {
                    // average the two spline orderings: exact exchange symmetry
                    let a_sym = 0.5
                        * (a_gl[(l * n_r + i) * n_r + j] + a_gl[(l * n_r + j) * n_r + i]);
                    acc += a_sym * ptilde[k * n_u + l];
                }
                values[base + k] = acc * inv_r;
            }
        }
    }
    BipolaronState::from_packed(grid, values).normalized()
}

fn rescale_state(state: &BipolaronState, alpha: f64) -> Result<BipolaronState> {
    if alpha == 1.0 {
        return Ok(state.clone());
    }
    let old = state.grid();
    let scaled = InternalGrid::new(
        old.radial().r_max() / alpha,
        old.n_r(),
        old.n_u(),
    )?;
    let gshared = Arc::new(scaled);
    let amp = alpha.powi(3);
    let n_r = old.n_r();
    let n_u = old.n_u();
    let mut values = vec![0.0; n_r * (n_r + 1) / 2 * n_u];
    for j in 0..n_r {
        for i in 0..=j {
            let base = tri_index(i, j) * n_u;
            for k in 0..n_u {
                values[base + k] = amp * state.value(i, j, k);
            }
        }
    }
    Ok(BipolaronState::from_packed(&gshared, values))
}

/// One-shot minimization at couplings `(alpha, U)` on the given grid
/// (geometry read in coupling-rescaled units).
pub fn scf_minimize(
    params: &CouplingParams,
    grid: &Arc<InternalGrid>,
    opts: &ScfOptions,
) -> Result<BipolaronResult> {
    let mut engine = ScfEngine::new(grid, opts)?;
    engine.solve(params, opts)
}

/// Lowest symmetric eigenstate of
/// `-lap_1 - lap_2 + V(r1) + V(r2) + u_repulsion / r12` on the internal
/// grid, normalized.
pub fn inner_ground_state(
    potential: &RadialField,
    u_repulsion: f64,
    grid: &Arc<InternalGrid>,
    opts: &InnerOptions,
) -> Result<BipolaronState> {
    if potential.kind() == FieldKind::Density {
        return Err(BipolaronError::InvalidArgument(
            "inner_ground_state takes a potential, not a density".into(),
        ));
    }
    if !potential.grid().same_layout(grid.radial()) {
        return Err(BipolaronError::InvalidArgument(
            "potential grid does not match the internal grid".into(),
        ));
    }
    if potential.values().iter().any(|v| !v.is_finite()) {
        return Err(BipolaronError::InvalidArgument(
            "potential must be bounded on the grid".into(),
        ));
    }
    let n_cells = (4 * grid.n_r() / 3).clamp(96, 1024);
    let ctx = MeshContext::new(grid.radial().r_max(), n_cells, grid.n_u())?;

    // spectral interpolation of the potential onto the mesh
    let coeffs = {
        let table = LegendreTable::new(grid.radial().ref_nodes(), grid.n_r());
        table.analyze(grid.radial().ref_weights(), potential.values())
    };
    let r_max = grid.radial().r_max();
    let v_mesh: Vec<f64> = ctx
        .mesh
        .nodes()
        .iter()
        .map(|&r| eval_series(&coeffs, 2.0 * r / r_max - 1.0))
        .collect();

    let n = ctx.n_interior();
    let (_, u) = one_body_ground(&ctx.mesh, &v_mesh);
    let mut x0 = vec![0.0; ctx.state_len()];
    for i in 0..n {
        for j in 0..n {
            x0[i * n + j] = u[i] * u[j];
        }
    }
    let sol = lowest_state_strict(&ctx, &v_mesh, u_repulsion, &x0, opts)?;
    mesh_state_to_gl(&ctx, grid, &sol.x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_start_energy_is_sane() {
        let grid = Arc::new(InternalGrid::new(20.0, 48, 8).unwrap());
        let opts = ScfOptions::default();
        let engine = ScfEngine::new(&grid, &opts).unwrap();
        let (x, dens) = engine.product_start(&opts).unwrap();
        let metric = 0.5 * FOUR_PI * FOUR_PI * engine.ctx.mesh.h() * engine.ctx.mesh.h();
        let nrm2 = metric * x.iter().map(|v| v * v).sum::<f64>();
        eprintln!("norm^2 of start = {nrm2}");
        let (e, t, r12, d) = engine.quartic_energy(&x, &dens, 0.0);
        eprintln!("start quartic: E = {e}, T = {t}, R = {r12}, D = {d}");
        let total_charge = FOUR_PI * engine.ctx.mesh.h() * dens.iter().sum::<f64>() / FOUR_PI;
        eprintln!("density integral (times 4pi) = {}", FOUR_PI * engine.ctx.mesh.h() * dens.iter().sum::<f64>() / FOUR_PI * FOUR_PI);
        let _ = total_charge;
        assert!((nrm2 - 1.0).abs() < 1e-10, "start not normalized: {nrm2}");
        assert!(e < -0.5 && e > -1.2, "start energy {e}");
    }
}
