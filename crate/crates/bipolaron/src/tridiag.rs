//! Full eigendecomposition of a symmetric tridiagonal matrix (implicit-shift
//! QL), used to build the kinetic-inverse preconditioner of the inner
//! eigensolver.

/// Eigenvalues (ascending) and the orthonormal eigenvector matrix
/// (column-major: `vectors[a * n + i]` is component `i` of eigenvector `a`)
/// of the symmetric tridiagonal matrix with diagonal `d` and off-diagonal
/// `e` (`e[i]` couples `i` and `i + 1`).
pub fn eigh_tridiagonal(d: &[f64], e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    assert_eq!(e.len() + 1, n);
    let mut diag = d.to_vec();
    let mut off = vec![0.0; n];
    off[..n - 1].copy_from_slice(e);
    // identity, row-major z[i * n + c] = component i of column c
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find a negligible off-diagonal splitting point
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            // implicit shift from the 2x2 at l
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                // rotate eigenvectors
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }

    // sort ascending, reorder columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&c| diag[c]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_c, &old_c) in order.iter().enumerate() {
        for i in 0..n {
            vectors[new_c * n + i] = z[i * n + old_c];
        }
    }
    (values, vectors)
}
