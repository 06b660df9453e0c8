use ndarray::{s, ArrayView2};

use super::expm::expm;
use crate::error::{Error, Result};
use crate::linalg::{ensure_square, Matrix, Vector};

/// `[φ_0(M), …, φ_kmax(M)]` from the top block row of
///
/// ```text
/// exp [[M, I, 0, …, 0],
///      [0, 0, I, …, 0],
///      …
///      [0, 0, 0, …, 0]]
/// ```
pub fn phi_all_dense(m: &ArrayView2<f64>, kmax: usize) -> Result<Vec<Matrix>> {
    let n = ensure_square(m)?;
    let big = (kmax + 1) * n;
    let mut aug = Matrix::zeros((big, big));
    aug.slice_mut(s![..n, ..n]).assign(m);
    for k in 0..kmax {
        for i in 0..n {
            aug[[k * n + i, (k + 1) * n + i]] = 1.0;
        }
    }
    let e = expm(&aug.view())?;
    Ok((0..=kmax)
        .map(|k| e.slice(s![..n, k * n..(k + 1) * n]).to_owned())
        .collect())
}

/// `Σ_{j=0}^{p} h^j φ_j(hM) v_j` from one exponential of the
/// `(n + p) x (n + p)` matrix `h [[M, W], [0, J]]`, where `W = [v_p, …, v_1]`
/// and `J` is the upper shift.
pub fn phi_combo_apply(m: &ArrayView2<f64>, h: f64, v: &[Vector]) -> Result<Vector> {
    let n = ensure_square(m)?;
    let p = check_vectors(n, v)?;
    let dim = n + p;
    let mut aug = Matrix::zeros((dim, dim));
    aug.slice_mut(s![..n, ..n]).assign(&(m * h));
    for c in 0..p {
        aug.slice_mut(s![..n, n + c]).assign(&(&v[p - c] * h));
        if c + 1 < p {
            aug[[n + c, n + c + 1]] = h;
        }
    }
    let e = expm(&aug.view())?;
    let mut x = Vector::zeros(dim);
    x.slice_mut(s![..n]).assign(&v[0]);
    if p > 0 {
        x[dim - 1] = 1.0;
    }
    Ok(e.slice(s![..n, ..]).dot(&x))
}

/// Validates the vector list and returns `p` (one less than its length).
pub(crate) fn check_vectors(n: usize, v: &[Vector]) -> Result<usize> {
    if v.is_empty() {
        return Err(Error::invalid("phi combination needs at least v_0"));
    }
    for vj in v {
        if vj.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: vj.len(),
            });
        }
    }
    Ok(v.len() - 1)
}
