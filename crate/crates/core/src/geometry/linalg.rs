//! Per-node dense linear algebra for small symmetric matrices.

use crate::grid::sym_index;
use nalgebra::{DMatrix, SymmetricEigen};

/// Largest tensor dimension supported by the stack-allocated kernels.
pub const MAX_DIM: usize = 8;

/// Condition number above which a metric is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Inverse and determinant of a packed SPD matrix via Cholesky.
///
/// Returns `None` if the matrix is not numerically positive definite. The
/// inverse is written row-major into `inv[..d*d]`.
pub fn spd_inverse(d: usize, packed: &[f64], inv: &mut [f64]) -> Option<f64> {
    debug_assert!(d <= MAX_DIM);
    let mut l = [0.0; MAX_DIM * MAX_DIM];
    for j in 0..d {
        let mut diag = packed[sym_index(d, j, j)];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = packed[sym_index(d, i, j)];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    let mut det = 1.0;
    for j in 0..d {
        det *= l[j * d + j] * l[j * d + j];
    }
    // inverse of L by forward substitution, then inv = L^-T L^-1
    let mut linv = [0.0; MAX_DIM * MAX_DIM];
    for c in 0..d {
        for i in c..d {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[i * d + k] * linv[k * d + c];
            }
            linv[i * d + c] = s / l[i * d + i];
        }
    }
    for i in 0..d {
        for j in i..d {
            let mut s = 0.0;
            for k in j..d {
                s += linv[k * d + i] * linv[k * d + j];
            }
            inv[i * d + j] = s;
            inv[j * d + i] = s;
        }
    }
    Some(det)
}

/// Determinant of a packed SPD matrix via Cholesky, or `None` if it is not
/// numerically positive definite.
pub fn spd_determinant(d: usize, packed: &[f64]) -> Option<f64> {
    debug_assert!(d <= MAX_DIM);
    let mut l = [0.0; MAX_DIM * MAX_DIM];
    let mut det = 1.0;
    for j in 0..d {
        let mut diag = packed[sym_index(d, j, j)];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        det *= diag;
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = packed[sym_index(d, i, j)];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Some(det)
}

/// Eigenvalues of a packed symmetric matrix, ascending.
pub fn sym_eigenvalues(d: usize, packed: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_fn(d, d, |i, j| packed[sym_index(d, i, j)]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(smallest eigenvalue, condition number)`; the condition number is infinite
/// for matrices that are not positive definite.
pub fn spd_diagnostics(d: usize, packed: &[f64]) -> (f64, f64) {
    let ev = sym_eigenvalues(d, packed);
    let (lo, hi) = (ev[0], ev[d - 1]);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    (lo, cond)
}
