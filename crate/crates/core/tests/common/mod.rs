#![allow(dead_code)]

use exprk::linalg::Matrix;
use exprk::tableaus::Scheme;
use num::{BigRational, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

fn fact(n: usize) -> BigRational {
    (1..=n).fold(BigRational::one(), |acc, k| acc * BigRational::from_integer(k.into()))
}

/// Taylor coefficients of `Σ_i b_i(Z) c_i^{q-1}/(q-1)! - φ_q(Z)` in powers of
/// `Z`, exact, from the stored rational weights.
pub fn b_condition_taylor(scheme: &Scheme, q: usize, terms: usize) -> Vec<BigRational> {
    (0..terms)
        .map(|m| {
            let mut alpha = -(BigRational::one() / fact(m + q));
            for (&i, p) in &scheme.b {
                let c = scheme.node(i);
                let cm = (0..m).fold(BigRational::one(), |acc, _| acc * &p.node);
                let cq = (0..q - 1).fold(BigRational::one(), |acc, _| acc * c);
                for (&j, w) in &p.terms {
                    alpha += w * &cm / fact(m + j) * &cq / fact(q - 1);
                }
            }
            alpha
        })
        .collect()
}

/// `Σ_m α_m Z^m` in floating point.
pub fn eval_series(alpha: &[BigRational], z: &Matrix) -> Matrix {
    let n = z.nrows();
    let mut out = Matrix::zeros((n, n));
    let mut power = Matrix::eye(n);
    for a in alpha {
        if !a.is_zero() {
            out.scaled_add(a.to_f64().unwrap(), &power);
        }
        power = power.dot(z);
    }
    out
}

type Tf = Vec<Vec<TwoFloat>>;

fn tf_matrix(m: &Matrix) -> Tf {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|&x| TwoFloat::from(x)).collect())
        .collect()
}

fn tf_matmul(a: &Tf, b: &Tf) -> Tf {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = TwoFloat::from(0.0);
                    for k in 0..n {
                        s += a[i][k] * b[k][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// `φ_k(M) = Σ_j M^j / (j + k)!`, 200 terms in double-double arithmetic.
pub fn series_phi(m: &Matrix, kmax: usize) -> Vec<Matrix> {
    const TERMS: usize = 200;
    let n = m.nrows();
    let mt = tf_matrix(m);
    let mut power: Tf = (0..n)
        .map(|i| (0..n).map(|j| TwoFloat::from(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let mut sums = vec![vec![vec![TwoFloat::from(0.0); n]; n]; kmax + 1];
    for j in 0..TERMS {
        // power = M^j / j!
        for (k, sum) in sums.iter_mut().enumerate() {
            let mut w = TwoFloat::from(1.0);
            for r in 1..=k {
                w = w / ((j + r) as f64);
            }
            for a in 0..n {
                for b in 0..n {
                    sum[a][b] += power[a][b] * w;
                }
            }
        }
        power = tf_matmul(&power, &mt);
        for row in power.iter_mut() {
            for x in row.iter_mut() {
                *x = *x / ((j + 1) as f64);
            }
        }
    }
    sums.into_iter()
        .map(|s| Matrix::from_shape_fn((n, n), |(a, b)| f64::from(s[a][b])))
        .collect()
}
