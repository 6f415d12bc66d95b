//! Natural cubic spline on a uniform knot set, used to transfer solutions
//! between the solvers' finite-difference meshes and the quadrature grids.

use crate::error::{CoreError, Result};
use crate::mesh::solve_tridiag_const_off;

/// Natural cubic spline through `(i h, y_i)`, `i = 0..=n`.
pub struct UniformSpline {
    h: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(h: f64, y: Vec<f64>) -> Result<Self> {
        if y.len() < 3 || !(h > 0.0) {
            return Err(CoreError::InvalidArgument(
                "spline needs h > 0 and at least 3 knots".into(),
            ));
        }
        let n = y.len() - 1;
        // Interior system: m_{i-1} + 4 m_i + m_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2
        let rhs: Vec<f64> = (1..n)
            .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
            .collect();
        let diag = vec![4.0; n - 1];
        let interior = solve_tridiag_const_off(&diag, 1.0, &rhs);
        let mut m = vec![0.0; n + 1];
        m[1..n].copy_from_slice(&interior);
        Ok(Self { h, y, m })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len() - 1;
        let mut t = x / self.h;
        if t < 0.0 {
            t = 0.0;
        }
        let mut i = t.floor() as usize;
        if i >= n {
            i = n - 1;
        }
        let a = x - i as f64 * self.h;
        let b = self.h - a;
        let h = self.h;
        // standard natural-spline segment formula
        (self.m[i] * b * b * b + self.m[i + 1] * a * a * a) / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * b
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let n = 400;
        let h = 10.0 / n as f64;
        let y: Vec<f64> = (0..=n)
            .map(|i| {
                let x = i as f64 * h;
                x * (-0.5 * x).exp()
            })
            .collect();
        let s = UniformSpline::new(h, y).unwrap();
        for k in 0..200 {
            let x = 0.013 + k as f64 * 0.049;
            let exact = x * (-0.5 * x).exp();
            assert!(
                (s.eval(x) - exact).abs() < 5e-7,
                "x = {x}: {} vs {exact}",
                s.eval(x)
            );
        }
    }

    #[test]
    fn interpolates_knots_exactly() {
        let h = 0.25;
        let y = vec![0.0, 1.0, 0.5, -0.25, 0.0];
        let s = UniformSpline::new(h, y.clone()).unwrap();
        for (i, &yi) in y.iter().enumerate() {
            assert!((s.eval(i as f64 * h) - yi).abs() < 1e-13);
        }
    }
}
