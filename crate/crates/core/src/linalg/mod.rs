//! Dense linear-algebra helpers shared by the φ-kernels and the integrator.

pub mod dd;
mod eigen;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

pub use eigen::{symmetric_eigen, SymmetricEigen};

/// Square real matrix, row-major.
pub type Matrix = Array2<f64>;
pub type Vector = Array1<f64>;

pub fn ensure_square(m: &ArrayView2<f64>) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(rows)
}

/// Maximum absolute column sum.
pub fn norm1(m: &ArrayView2<f64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &ArrayView2<f64>) -> f64 {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm2(v: &ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn is_symmetric(m: &ArrayView2<f64>) -> bool {
    let (r, c) = m.dim();
    r == c && (0..r).all(|i| (0..i).all(|j| m[[i, j]] == m[[j, i]]))
}

pub fn all_finite<'a>(xs: impl IntoIterator<Item = &'a f64>) -> bool {
    xs.into_iter().all(|x| x.is_finite())
}

/// Dot product evaluated as if in twice the working precision, then rounded
/// (Ogita, Rump and Oishi's `Dot2`).
pub fn compensated_dot(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (p, ep) = dd::two_prod(x, y);
        let (t, es) = dd::two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// `m v` with every row reduced by [`compensated_dot`].
pub fn compensated_matvec(m: &ArrayView2<f64>, v: &ArrayView1<f64>) -> Vector {
    m.rows().into_iter().map(|row| compensated_dot(&row, v)).collect()
}

/// Solve `a x = b` by LU factorisation with partial pivoting.
pub fn lu_solve(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    let mut lu = a.to_owned();
    let mut x = b.to_owned();
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[[i, k]].abs()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::Singular);
        }
        if piv != k {
            for j in 0..n {
                lu.swap([k, j], [piv, j]);
            }
            for j in 0..x.ncols() {
                x.swap([k, j], [piv, j]);
            }
        }
        let d = lu[[k, k]];
        for i in k + 1..n {
            let f = lu[[i, k]] / d;
            if f == 0.0 {
                continue;
            }
            lu[[i, k]] = f;
            for j in k + 1..n {
                lu[[i, j]] -= f * lu[[k, j]];
            }
            for j in 0..x.ncols() {
                x[[i, j]] -= f * x[[k, j]];
            }
        }
    }
    for k in (0..n).rev() {
        let d = lu[[k, k]];
        for j in 0..x.ncols() {
            let mut s = x[[k, j]];
            for i in k + 1..n {
                s -= lu[[k, i]] * x[[i, j]];
            }
            x[[k, j]] = s / d;
        }
    }
    Ok(x)
}
