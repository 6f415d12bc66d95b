//! Closed-form oracles for the radial Coulomb machinery.

use std::sync::Arc;

use polaron_core::{
    build_radial_grid, coulomb_double_integral, radial_hartree_potential, RadialField, RadialGrid,
    SpectralOps, FOUR_PI,
};

fn default_grid() -> Arc<RadialGrid> {
    build_radial_grid(20.0, 2000).unwrap().into_shared()
}

/// Normalized Gaussian density `rho = Q (a/pi)^{3/2} exp(-a r^2)`.
fn gaussian_density(grid: &Arc<RadialGrid>, a: f64, charge: f64) -> RadialField {
    let amp = charge * (a / std::f64::consts::PI).powf(1.5);
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| amp * (-a * r * r).exp())
        .collect();
    RadialField::density(Arc::clone(grid), vals, charge).unwrap()
}

#[test]
fn gaussian_potential_matches_erf_profile() {
    // V(r) = Q erf(sqrt(a) r) / r
    let grid = default_grid();
    let a = 0.7;
    let q = 1.3;
    let rho = gaussian_density(&grid, a, q);
    let v = radial_hartree_potential(&rho).unwrap();
    for (i, &r) in grid.nodes().iter().enumerate() {
        let exact = q * libm::erf(a.sqrt() * r) / r;
        assert!(
            (v.values()[i] - exact).abs() < 1e-6,
            "r = {r}: got {}, want {exact}",
            v.values()[i]
        );
    }
}

#[test]
fn gaussian_pair_coulomb_integral_matches_closed_form() {
    // Two identical unit-charge Gaussians of exponent a: D = sqrt(2 a / pi).
    let grid = default_grid();
    let a = 0.9;
    let rho = gaussian_density(&grid, a, 1.0);
    let d = coulomb_double_integral(&rho, &rho).unwrap();
    let exact = (2.0 * a / std::f64::consts::PI).sqrt();
    assert!(
        (d - exact).abs() < 1e-6,
        "D = {d}, closed form = {exact}"
    );
}

#[test]
fn coulomb_integral_of_zero_density_is_zero() {
    let grid = default_grid();
    let rho = gaussian_density(&grid, 0.5, 1.0);
    let zero = RadialField::density(Arc::clone(&grid), vec![0.0; grid.n_points()], 1.0).unwrap();
    let d = coulomb_double_integral(&rho, &zero).unwrap();
    assert!(d.abs() < 1e-14);
}

/// A smooth random density: positive mixture of Gaussians.
fn random_smooth_density(grid: &Arc<RadialGrid>, seed: u64) -> RadialField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_bumps = rng.random_range(2..6);
    let mut vals = vec![0.0; grid.n_points()];
    for _ in 0..n_bumps {
        let c: f64 = rng.random_range(0.1..1.0);
        let a: f64 = rng.random_range(0.2..2.0);
        let b: f64 = rng.random_range(0.0..5.0);
        for (v, &r) in vals.iter_mut().zip(grid.nodes()) {
            *v += c * (-a * (r - b) * (r - b)).exp();
        }
    }
    RadialField::density(Arc::clone(grid), vals, 1.0).unwrap()
}

#[test]
fn coulomb_integral_is_symmetric() {
    let grid = build_radial_grid(20.0, 600).unwrap().into_shared();
    for seed in 0..8 {
        let a = random_smooth_density(&grid, seed);
        let b = random_smooth_density(&grid, seed + 100);
        let dab = coulomb_double_integral(&a, &b).unwrap();
        let dba = coulomb_double_integral(&b, &a).unwrap();
        assert!(
            (dab - dba).abs() <= 1e-12 * dab.abs(),
            "asymmetry {dab} vs {dba}"
        );
        assert!(dab >= 0.0);
    }
}

#[test]
fn hartree_consistency_invariant() {
    // 4 pi int rho1 V[rho2] r^2 dr equals D(rho1, rho2) to 1e-8 relative.
    let grid = build_radial_grid(20.0, 600).unwrap().into_shared();
    for seed in 0..6 {
        let rho1 = random_smooth_density(&grid, seed);
        let rho2 = random_smooth_density(&grid, seed + 29);
        let v2 = radial_hartree_potential(&rho2).unwrap();
        let integrand: Vec<f64> = rho1
            .values()
            .iter()
            .zip(v2.values())
            .map(|(&a, &b)| a * b)
            .collect();
        let lhs = FOUR_PI * grid.integrate(&integrand);
        let rhs = coulomb_double_integral(&rho1, &rho2).unwrap();
        assert!(
            ((lhs - rhs) / rhs).abs() < 1e-8,
            "consistency: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn hartree_potential_is_nonincreasing() {
    let grid = default_grid();
    for seed in [3, 17] {
        let rho = random_smooth_density(&grid, seed);
        let v = radial_hartree_potential(&rho).unwrap();
        for w in v.values().windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs());
        }
    }
}

#[test]
fn domain_convergence_for_localized_density() {
    // Doubling r_max and n changes D(rho, rho) by < 1e-6 relative for an
    // exponentially localized density.
    let make = |r_max: f64, n: usize| {
        let grid = build_radial_grid(r_max, n).unwrap().into_shared();
        let vals: Vec<f64> = grid.nodes().iter().map(|&r| (-r).exp()).collect();
        let rho = RadialField::density(grid, vals, 1.0)
            .unwrap()
            .normalize()
            .unwrap();
        coulomb_double_integral(&rho, &rho).unwrap()
    };
    let d1 = make(20.0, 2000);
    let d2 = make(40.0, 4000);
    assert!(
        ((d1 - d2) / d1).abs() < 1e-6,
        "domain sensitivity: {d1} vs {d2}"
    );
}

#[test]
fn quadrature_is_exact_for_design_degree_polynomials() {
    // int_0^R r^k r^2 dr = R^{k+3} / (k+3), exact up to the rule's degree.
    let grid = build_radial_grid(5.0, 64).unwrap().into_shared();
    for k in 0..20u32 {
        let vals: Vec<f64> = grid.nodes().iter().map(|&r| r.powi(k as i32)).collect();
        let q = grid.integrate(&vals);
        let exact = 5.0_f64.powi(k as i32 + 3) / (k as f64 + 3.0);
        assert!(
            ((q - exact) / exact).abs() < 1e-10,
            "degree {k}: {q} vs {exact}"
        );
    }
}

#[test]
fn spectral_derivative_matches_closed_form() {
    let grid = default_grid();
    let ops = SpectralOps::new(&grid);
    let f: Vec<f64> = grid.nodes().iter().map(|&r| (-0.5 * r).exp() * r).collect();
    let df = ops.derivative(&f);
    for (i, &r) in grid.nodes().iter().enumerate() {
        let exact = (-0.5 * r).exp() * (1.0 - 0.5 * r);
        assert!(
            (df[i] - exact).abs() < 1e-8,
            "r = {r}: {} vs {exact}",
            df[i]
        );
    }
}
