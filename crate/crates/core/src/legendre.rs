//! Gauss-Legendre rules and Legendre-series transforms on `[-1, 1]`.
//!
//! The transforms treat sampled node values as the unique interpolating
//! polynomial of degree `n - 1`: `analyze` recovers its Legendre coefficients
//! exactly (discrete orthogonality holds through degree `2n - 1`), and the
//! antiderivative / derivative maps act on those coefficients in closed form.

/// Nodes (ascending) and weights of the `n`-point Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs n >= 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Evaluate `P_0(x) .. P_max(x)` into `out`.
pub fn legendre_all(x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Table of `P_k(x_i)` for a fixed node set, `k = 0 ..= max_degree`.
///
/// Row-major by node so that transforms stream through memory.
pub struct LegendreTable {
    n_nodes: usize,
    n_degrees: usize, // max_degree + 1
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(nodes: &[f64], max_degree: usize) -> Self {
        let n_nodes = nodes.len();
        let n_degrees = max_degree + 1;
        let mut values = vec![0.0; n_nodes * n_degrees];
        for (i, &x) in nodes.iter().enumerate() {
            legendre_all(x, &mut values[i * n_degrees..(i + 1) * n_degrees]);
        }
        Self {
            n_nodes,
            n_degrees,
            values,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_degrees..(i + 1) * self.n_degrees]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn max_degree(&self) -> usize {
        self.n_degrees - 1
    }

    /// Legendre coefficients `c_k`, `k < n_nodes`, of the interpolant of
    /// `samples` at the table's Gauss nodes with weights `gl_weights`.
    pub fn analyze(&self, gl_weights: &[f64], samples: &[f64]) -> Vec<f64> {
        let n = self.n_nodes;
        let mut c = vec![0.0; n];
        for i in 0..n {
            let wg = gl_weights[i] * samples[i];
            let row = self.row(i);
            for (ck, pk) in c.iter_mut().zip(row.iter()) {
                *ck += wg * pk;
            }
        }
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= (2.0 * k as f64 + 1.0) / 2.0;
        }
        c
    }

    /// Adjoint of `analyze` (for gradient chains).
    pub fn analyze_adjoint(&self, gl_weights: &[f64], coeff_dual: &[f64]) -> Vec<f64> {
        let n = self.n_nodes;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (k, (&yk, &pk)) in coeff_dual.iter().zip(row.iter()).enumerate() {
                acc += (2.0 * k as f64 + 1.0) / 2.0 * yk * pk;
            }
            out[i] = gl_weights[i] * acc;
        }
        out
    }

    /// Evaluate a coefficient vector at every table node.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_nodes;
        let m = coeffs.len().min(self.n_degrees);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = self.row(i);
            let mut acc = 0.0;
            for k in 0..m {
                acc += coeffs[k] * row[k];
            }
            out[i] = acc;
        }
        out
    }

    /// Adjoint of `synthesize`.
    pub fn synthesize_adjoint(&self, node_dual: &[f64], n_coeffs: usize) -> Vec<f64> {
        let m = n_coeffs.min(self.n_degrees);
        let mut out = vec![0.0; m];
        for i in 0..self.n_nodes {
            let row = self.row(i);
            let f = node_dual[i];
            for (ok, pk) in out.iter_mut().zip(row.iter()) {
                *ok += f * pk;
            }
        }
        out
    }
}

/// Evaluate a Legendre series at an arbitrary point.
pub fn eval_series(coeffs: &[f64], x: f64) -> f64 {
    let mut p_prev = 1.0;
    let mut p = x;
    let mut acc = coeffs[0];
    if coeffs.len() > 1 {
        acc += coeffs[1] * x;
    }
    for (k, &c) in coeffs.iter().enumerate().skip(2) {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
        acc += c * p;
    }
    acc
}

/// Coefficients of `G(x) = int_{-1}^x g`, given the coefficients of `g`.
/// Output has one more entry; `G(-1) = 0` by construction.
pub fn antiderivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut b = vec![0.0; n + 1];
    // int P_0 = P_0 + P_1; int P_k = (P_{k+1} - P_{k-1}) / (2k + 1), k >= 1.
    b[0] = c[0];
    for k in 1..n {
        b[k - 1] -= c[k] / (2.0 * k as f64 + 1.0);
    }
    for k in 0..n {
        b[k + 1] += c[k] / (2.0 * k as f64 + 1.0);
    }
    b
}

/// Adjoint of `antiderivative_coeffs`.
pub fn antiderivative_coeffs_adjoint(b_dual: &[f64]) -> Vec<f64> {
    let n = b_dual.len() - 1;
    let mut c = vec![0.0; n];
    c[0] = b_dual[0];
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        *ck -= b_dual[k - 1] / (2.0 * k as f64 + 1.0);
    }
    for (k, ck) in c.iter_mut().enumerate() {
        *ck += b_dual[k + 1] / (2.0 * k as f64 + 1.0);
    }
    c
}

/// Coefficients of `g'` given the coefficients of `g` (one fewer entry).
///
/// Downward recurrence `d_{k-1} = (2k - 1) (c_k + d_{k+1} / (2k + 3))`,
/// equivalent to `d_k = (2k + 1) sum_{j > k, j - k odd} c_j`.
pub fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0; 1];
    }
    let mut d = vec![0.0; n - 1];
    for k in (1..n).rev() {
        let above = if k + 1 < d.len() { d[k + 1] } else { 0.0 };
        d[k - 1] = (2.0 * k as f64 - 1.0) * (c[k] + above / (2.0 * k as f64 + 3.0));
    }
    d
}

/// Adjoint of `derivative_coeffs` (`c_j` receives `(2k + 1) d_k` for every
/// `k < j` with `j - k` odd).
pub fn derivative_coeffs_adjoint(d_dual: &[f64], n_coeffs: usize) -> Vec<f64> {
    let mut c = vec![0.0; n_coeffs];
    for (j, cj) in c.iter_mut().enumerate().skip(1) {
        let mut acc = 0.0;
        let mut k = j - 1;
        loop {
            if k < d_dual.len() {
                acc += (2.0 * k as f64 + 1.0) * d_dual[k];
            }
            if k < 2 {
                break;
            }
            k -= 2;
        }
        *cj = acc;
    }
    c
}
