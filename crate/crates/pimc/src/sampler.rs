//! Metropolis sampling of discretized T-periodic paths.
//!
//! The chain caches the capped inverse distances between all slice pairs so
//! a single-slice move costs one new-distance pass (O(M) square roots); the
//! cached rows also give the incremental action differences exactly, and a
//! periodic full refresh guards against floating-point drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{self, capped_inv_dist, KernelTable};
use crate::kernels::RowKernel;
use crate::blocking::{block_analyze, BlockSummary};
use crate::{PimcError, PointDiagnostics, Result};

/// Discretized T-periodic paths of one or two particles with the sampling
/// statistics collected over a run.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub n_slices: usize,
    pub period: f64,
    pub dt: f64,
    pub n_particles: usize,
    pub rng_seed: u64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
    pub statistics: Option<SampleStats>,
}

impl PathEnsemble {
    /// All particles pinned at the origin (test configurations start here).
    pub fn constant(n_particles: usize, n_slices: usize, period: f64, rng_seed: u64) -> Self {
        let n = n_particles * n_slices;
        Self {
            n_slices,
            period,
            dt: period / n_slices as f64,
            n_particles,
            rng_seed,
            xs: vec![0.0; n],
            ys: vec![0.0; n],
            zs: vec![0.0; n],
            statistics: None,
        }
    }

    #[inline]
    pub(crate) fn coords(&self, p: usize) -> (&[f64], &[f64], &[f64]) {
        let s = p * self.n_slices;
        let e = s + self.n_slices;
        (&self.xs[s..e], &self.ys[s..e], &self.zs[s..e])
    }

    pub fn get(&self, p: usize, k: usize) -> [f64; 3] {
        let i = p * self.n_slices + k;
        [self.xs[i], self.ys[i], self.zs[i]]
    }

    pub fn set(&mut self, p: usize, k: usize, v: [f64; 3]) {
        let i = p * self.n_slices + k;
        self.xs[i] = v[0];
        self.ys[i] = v[1];
        self.zs[i] = v[2];
    }

    /// Positions as `[particle][slice]` triples.
    pub fn positions(&self) -> Vec<Vec<[f64; 3]>> {
        (0..self.n_particles)
            .map(|p| (0..self.n_slices).map(|k| self.get(p, k)).collect())
            .collect()
    }
}

/// Options of a single sampling run.
#[derive(Debug, Clone, Serialize)]
pub struct SampleOptions {
    pub alpha: f64,
    pub u: f64,
    pub n_particles: usize,
    pub period: f64,
    pub n_slices: usize,
    pub sweeps: usize,
    pub seed: u64,
    /// Validation mode: adds `v int |x|^2 dt` to the action.
    pub external_harmonic: Option<f64>,
    pub burn_in_fraction: f64,
    pub n_blocks: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            u: 0.0,
            n_particles: 1,
            period: 32.0,
            n_slices: 512,
            sweeps: 200_000,
            seed: 12345,
            external_harmonic: None,
            burn_in_fraction: 0.25,
            n_blocks: 32,
        }
    }
}

/// Measured statistics of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    pub sweeps: usize,
    pub measured_sweeps: usize,
    pub tuned_step: f64,
    /// Raw interaction action per unit time (no short-time counterterm).
    pub a_phonon_over_t: BlockSummary,
    pub a_coulomb_over_t: BlockSummary,
    /// `<|x(t+dt) - x(t)|^2>` over bonds.
    pub mean_bond_sq: BlockSummary,
    /// `<|x|^2>` over slices.
    pub mean_x_sq: BlockSummary,
    pub diagnostics: PointDiagnostics,
}

struct Chain {
    path: PathEnsemble,
    kernel: KernelTable,
    alpha: f64,
    u: f64,
    harmonic: Option<f64>,
    /// Ordered-pair self sums per particle (A_self enters A as half of this).
    self_sums: Vec<f64>,
    cross_sum: f64,
    coulomb_sum: f64,
    rng: ChaCha8Rng,
    step: f64,
    step_translate: f64,
    acc_single: u64,
    try_single: u64,
    acc_translate: u64,
    try_translate: u64,
    win_acc: u64,
    win_try: u64,
    rows: RowKernel,
}

impl Chain {
    fn new(opts: &SampleOptions) -> Self {
        let mut path = PathEnsemble::constant(
            opts.n_particles,
            opts.n_slices,
            opts.period,
            opts.seed,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        // Start from an exact free-path sample (periodic Gaussian bridge) so
        // the long-wavelength ring modes begin equilibrated, plus a particle
        // offset to separate a pair.
        let m = opts.n_slices;
        let dt = path.dt;
        for p in 0..opts.n_particles {
            let off = p as f64 * 1.0 - 0.5 * (opts.n_particles as f64 - 1.0);
            let mut walk = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
            for axis in &mut walk {
                // free random walk, then close it into a bridge
                let sigma = (2.0 * dt).sqrt();
                let mut acc = 0.0;
                for (k, w) in axis.iter_mut().enumerate() {
                    *w = acc;
                    let (g, _) = gaussian_pair(&mut rng);
                    acc += sigma * g;
                    let _ = k;
                }
                let drift = acc;
                let inv_m = 1.0 / m as f64;
                for (k, w) in axis.iter_mut().enumerate() {
                    *w -= drift * (k as f64 * inv_m);
                }
            }
            for k in 0..m {
                path.set(p, k, [off + walk[0][k], walk[1][k], walk[2][k]]);
            }
        }
        let kernel = KernelTable::new(opts.n_slices, path.dt);
        let mut chain = Self {
            path,
            kernel,
            alpha: opts.alpha,
            u: opts.u,
            harmonic: opts.external_harmonic,
            self_sums: vec![0.0; opts.n_particles],
            cross_sum: 0.0,
            coulomb_sum: 0.0,
            rng,
            step: 1.5 * (2.0 * dt).sqrt(),
            step_translate: 1.0,
            acc_single: 0,
            try_single: 0,
            acc_translate: 0,
            try_translate: 0,
            win_acc: 0,
            win_try: 0,
            rows: RowKernel::detect(),
        };
        chain.refresh_actions();
        chain
    }

    /// Recompute all action sums from scratch (drift control).
    fn refresh_actions(&mut self) {
        for p in 0..self.path.n_particles {
            self.self_sums[p] = action::self_action(&self.path, &self.kernel, p);
        }
        if self.path.n_particles == 2 {
            self.cross_sum = action::cross_action(&self.path, &self.kernel);
            self.coulomb_sum = action::coulomb_action(&self.path, &self.kernel);
        }
    }

    fn a_phonon(&self) -> f64 {
        0.5 * self.self_sums.iter().sum::<f64>() + self.cross_sum
    }

    fn slice_move(&mut self, p: usize, k: usize) {
        let m = self.path.n_slices;
        let dt = self.path.dt;
        let old = self.path.get(p, k);
        let new = [
            old[0] + self.step * (self.rng.random::<f64>() - 0.5),
            old[1] + self.step * (self.rng.random::<f64>() - 0.5),
            old[2] + self.step * (self.rng.random::<f64>() - 0.5),
        ];

        // kinetic: the two bonds at k (periodic neighbors)
        let prev = self.path.get(p, (k + m - 1) % m);
        let next = self.path.get(p, (k + 1) % m);
        let bond = |a: [f64; 3], b: [f64; 3]| {
            let d0 = a[0] - b[0];
            let d1 = a[1] - b[1];
            let d2 = a[2] - b[2];
            d0 * d0 + d1 * d1 + d2 * d2
        };
        let d_kin = (bond(new, prev) + bond(new, next) - bond(old, prev) - bond(old, next))
            / (4.0 * dt);

        // phonon: own chain row (ordered pairs appear twice; A carries 1/2)
        let row = self.kernel.row(k, m);
        let inv_cap = self.kernel.inv_cap;
        let d_self = {
            let (xs, ys, zs) = self.path.coords(p);
            let (sn, so) = self
                .rows
                .weighted_pair(xs, ys, zs, row, new, old, inv_cap);
            // remove the l = k term: old distance is 0 (capped), new is |delta|
            let self_new_k = capped_inv_dist(new[0] - old[0], new[1] - old[1], new[2] - old[2], inv_cap);
            (sn - row[k] * self_new_k) - (so - row[k] * inv_cap)
        };

        let mut d_cross = 0.0;
        let mut d_coulomb = 0.0;
        if self.path.n_particles == 2 {
            let q = 1 - p;
            let (oxs, oys, ozs) = self.path.coords(q);
            let (cn, co) = self
                .rows
                .weighted_pair(oxs, oys, ozs, row, new, old, inv_cap);
            d_cross = cn - co;
            let inv_new = capped_inv_dist(new[0] - oxs[k], new[1] - oys[k], new[2] - ozs[k], inv_cap);
            let inv_old = capped_inv_dist(old[0] - oxs[k], old[1] - oys[k], old[2] - ozs[k], inv_cap);
            d_coulomb = dt * (inv_new - inv_old);
        }

        let mut d_harm = 0.0;
        if self.harmonic.is_some() {
            let r2n = new[0] * new[0] + new[1] * new[1] + new[2] * new[2];
            let r2o = old[0] * old[0] + old[1] * old[1] + old[2] * old[2];
            d_harm = dt * (r2n - r2o);
        }

        let d_a_phonon = d_self + d_cross;
        let log_w = -d_kin + self.alpha * d_a_phonon
            - self.u * d_coulomb
            - self.harmonic.unwrap_or(0.0) * d_harm;
        self.try_single += 1;
        self.win_try += 1;
        if log_w >= 0.0 || self.rng.random::<f64>() < log_w.exp() {
            self.path.set(p, k, new);
            self.self_sums[p] += 2.0 * d_self;
            self.cross_sum += d_cross;
            self.coulomb_sum += d_coulomb;
            self.acc_single += 1;
            self.win_acc += 1;
        }
    }

    fn translation_move(&mut self, p: usize) {
        let shift = [
            self.step_translate * (self.rng.random::<f64>() - 0.5),
            self.step_translate * (self.rng.random::<f64>() - 0.5),
            self.step_translate * (self.rng.random::<f64>() - 0.5),
        ];
        self.try_translate += 1;
        let m = self.path.n_slices;

        let mut d_cross = 0.0;
        let mut d_coulomb = 0.0;
        if self.path.n_particles == 2 {
            let q = 1 - p;
            let (xs, ys, zs) = self.path.coords(p);
            let (oxs, oys, ozs) = self.path.coords(q);
            let inv_cap = self.kernel.inv_cap;
            let mut new_sum = 0.0;
            let mut new_coulomb = 0.0;
            for k in 0..m {
                let moved = [xs[k] + shift[0], ys[k] + shift[1], zs[k] + shift[2]];
                let row = self.kernel.row(k, m);
                new_sum += self.rows.weighted_one(oxs, oys, ozs, row, moved, inv_cap);
                new_coulomb += capped_inv_dist(
                    moved[0] - oxs[k],
                    moved[1] - oys[k],
                    moved[2] - ozs[k],
                    inv_cap,
                );
            }
            d_cross = new_sum - self.cross_sum;
            d_coulomb = new_coulomb * self.path.dt - self.coulomb_sum;
        }
        let mut d_harm_sum = 0.0;
        if self.harmonic.is_some() {
            let (xs, ys, zs) = self.path.coords(p);
            let mut d = 0.0;
            for k in 0..m {
                let r2n = (xs[k] + shift[0]).powi(2)
                    + (ys[k] + shift[1]).powi(2)
                    + (zs[k] + shift[2]).powi(2);
                d += r2n - (xs[k] * xs[k] + ys[k] * ys[k] + zs[k] * zs[k]);
            }
            d_harm_sum = d * self.path.dt;
        }

        let log_w = self.alpha * d_cross
            - self.u * d_coulomb
            - self.harmonic.unwrap_or(0.0) * d_harm_sum;
        if log_w >= 0.0 || self.rng.random::<f64>() < log_w.exp() {
            for k in 0..m {
                let v = self.path.get(p, k);
                self.path
                    .set(p, k, [v[0] + shift[0], v[1] + shift[1], v[2] + shift[2]]);
            }
            self.cross_sum += d_cross;
            self.coulomb_sum += d_coulomb;
            self.acc_translate += 1;
        }
    }

    fn sweep(&mut self, with_translation: bool) {
        let m = self.path.n_slices;
        let n = self.path.n_particles;
        for _ in 0..m * n {
            let p = if n == 1 {
                0
            } else {
                usize::from(self.rng.random::<f64>() < 0.5)
            };
            let k = self.rng.random_range(0..m);
            self.slice_move(p, k);
        }
        if with_translation {
            for p in 0..n {
                self.translation_move(p);
            }
        }
    }

    fn tune(&mut self) {
        if self.win_try == 0 {
            return;
        }
        let acc = self.win_acc as f64 / self.win_try as f64;
        if acc > 0.6 {
            self.step *= 1.1;
        } else if acc < 0.2 {
            self.step *= 0.9;
        }
        self.win_acc = 0;
        self.win_try = 0;
    }

    fn mean_bond_sq(&self) -> f64 {
        let m = self.path.n_slices;
        let mut s = 0.0;
        for p in 0..self.path.n_particles {
            let (xs, ys, zs) = self.path.coords(p);
            for k in 0..m {
                let j = (k + 1) % m;
                let d0 = xs[j] - xs[k];
                let d1 = ys[j] - ys[k];
                let d2 = zs[j] - zs[k];
                s += d0 * d0 + d1 * d1 + d2 * d2;
            }
        }
        s / (m * self.path.n_particles) as f64
    }

    fn mean_x_sq(&self) -> f64 {
        let m = self.path.n_slices;
        let mut s = 0.0;
        for p in 0..self.path.n_particles {
            let (xs, ys, zs) = self.path.coords(p);
            for k in 0..m {
                s += xs[k] * xs[k] + ys[k] * ys[k] + zs[k] * zs[k];
            }
        }
        s / (m * self.path.n_particles) as f64
    }
}

fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Run a Metropolis chain and return the final ensemble with statistics.
pub fn sample_paths(opts: &SampleOptions) -> Result<PathEnsemble> {
    validate(opts)?;
    let mut chain = Chain::new(opts);
    let burn = ((opts.sweeps as f64 * opts.burn_in_fraction) as usize).max(1);
    let measured = opts.sweeps - burn;
    let period = opts.period;

    let mut a_ph = Vec::with_capacity(measured);
    let mut a_cl = Vec::with_capacity(measured);
    let mut bond = Vec::with_capacity(measured);
    let mut xsq = Vec::with_capacity(measured);

    for sweep in 0..opts.sweeps {
        // whole-path translations only shift the pair terms and the harmonic
        // mode; amortize their O(M^2) pair cost over sweeps
        let with_translation = sweep % 10 == 0 || opts.external_harmonic.is_some();
        chain.sweep(with_translation);
        if sweep < burn {
            if sweep % 200 == 199 {
                chain.tune();
            }
        } else {
            a_ph.push(chain.a_phonon() / period);
            a_cl.push(chain.coulomb_sum / period);
            bond.push(chain.mean_bond_sq());
            xsq.push(chain.mean_x_sq());
        }
        if sweep % 4000 == 3999 {
            chain.refresh_actions();
        }
    }

    let acc_single = chain.acc_single as f64 / chain.try_single.max(1) as f64;
    let acc_translate = chain.acc_translate as f64 / chain.try_translate.max(1) as f64;
    let a_phonon_over_t = block_analyze(&a_ph, opts.n_blocks);
    let a_coulomb_over_t = block_analyze(&a_cl, opts.n_blocks);
    let mean_bond_sq = block_analyze(&bond, opts.n_blocks);
    let mean_x_sq = block_analyze(&xsq, opts.n_blocks);
    let insufficient = !a_phonon_over_t.plateau_ok;
    let stats = SampleStats {
        sweeps: opts.sweeps,
        measured_sweeps: measured,
        tuned_step: chain.step,
        diagnostics: PointDiagnostics {
            acceptance_single: acc_single,
            acceptance_translation: acc_translate,
            autocorrelation_time: a_phonon_over_t.tau_int,
            insufficient_statistics: insufficient,
        },
        a_phonon_over_t,
        a_coulomb_over_t,
        mean_bond_sq,
        mean_x_sq,
    };
    let mut path = chain.path;
    path.statistics = Some(stats);
    Ok(path)
}

fn validate(opts: &SampleOptions) -> Result<()> {
    if opts.period < 16.0 {
        return Err(PimcError::InvalidArgument(format!(
            "period must be at least 16, got {}",
            opts.period
        )));
    }
    if (opts.n_slices as f64) < 8.0 * opts.period {
        return Err(PimcError::InvalidArgument(format!(
            "need at least 8 slices per unit time ({} slices for period {})",
            opts.n_slices, opts.period
        )));
    }
    if opts.sweeps < 1000 {
        return Err(PimcError::InvalidArgument(format!(
            "sweeps must be at least 1000, got {}",
            opts.sweeps
        )));
    }
    if !(1..=2).contains(&opts.n_particles) {
        return Err(PimcError::InvalidArgument(format!(
            "n_particles must be 1 or 2, got {}",
            opts.n_particles
        )));
    }
    if opts.alpha < 0.0 || opts.u < 0.0 {
        return Err(PimcError::InvalidArgument(
            "alpha and u must be nonnegative".into(),
        ));
    }
    if !(0.05..0.9).contains(&opts.burn_in_fraction) {
        return Err(PimcError::InvalidArgument(
            "burn_in_fraction must lie in [0.05, 0.9)".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Incremental action bookkeeping must match a from-scratch evaluation.
    #[test]
    fn incremental_actions_track_full_recompute() {
        let mut opts = SampleOptions::default();
        opts.alpha = 0.8;
        opts.u = 0.4;
        opts.n_particles = 2;
        opts.period = 16.0;
        opts.n_slices = 128;
        opts.sweeps = 1000;
        opts.seed = 99;
        let mut chain = Chain::new(&opts);
        for _ in 0..300 {
            chain.sweep(true);
        }
        let inc_self: Vec<f64> = chain.self_sums.clone();
        let inc_cross = chain.cross_sum;
        let inc_coulomb = chain.coulomb_sum;
        chain.refresh_actions();
        for (a, b) in inc_self.iter().zip(&chain.self_sums) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "self {a} vs {b}");
        }
        assert!((inc_cross - chain.cross_sum).abs() <= 1e-8 * chain.cross_sum.abs().max(1.0));
        assert!((inc_coulomb - chain.coulomb_sum).abs() <= 1e-8 * chain.coulomb_sum.abs().max(1.0));
    }

    /// A proposal step of zero reproduces the current action exactly: every
    /// move is accepted with log-weight 0 and the state never changes.
    #[test]
    fn zero_step_chain_preserves_the_action() {
        let mut opts = SampleOptions::default();
        opts.alpha = 1.0;
        opts.period = 16.0;
        opts.n_slices = 128;
        opts.sweeps = 1000;
        opts.seed = 5;
        let mut chain = Chain::new(&opts);
        chain.step = 0.0;
        chain.step_translate = 0.0;
        let before = (
            chain.self_sums.clone(),
            chain.a_phonon(),
            chain.path.xs.clone(),
        );
        for _ in 0..50 {
            chain.sweep(true);
        }
        assert_eq!(before.0, chain.self_sums);
        assert_eq!(before.1, chain.a_phonon());
        assert_eq!(before.2, chain.path.xs);
    }
}
