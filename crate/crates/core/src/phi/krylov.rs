//! Matrix-free `Σ h^j φ_j(hA) v_j` by Arnoldi on the augmented operator.

use ndarray::{s, ArrayView1, ArrayView2};

use super::dense::{check_vectors, phi_combo_apply};
use super::expm::expm;
use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix, Vector};

/// Action of a square linear operator.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &ArrayView1<f64>) -> Vector;

    /// Dense representation, built column by column from `apply`.
    fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros((n, n));
        let mut e = Vector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            m.column_mut(j).assign(&self.apply(&e.view()));
            e[j] = 0.0;
        }
        m
    }
}

impl LinearOperator for Matrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &ArrayView1<f64>) -> Vector {
        self.dot(x)
    }

    fn to_dense(&self) -> Matrix {
        self.clone()
    }
}

impl LinearOperator for ArrayView2<'_, f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &ArrayView1<f64>) -> Vector {
        self.dot(x)
    }
}

#[derive(Clone, Debug)]
pub struct ArnoldiDecomposition {
    /// `n x m` orthonormal basis.
    pub basis: Matrix,
    /// `(m + 1) x m` upper Hessenberg matrix.
    pub hessenberg: Matrix,
    /// Next basis vector `v_{m+1}`; `None` after breakdown.
    pub next: Option<Vector>,
    pub beta: f64,
    pub breakdown: bool,
}

const BREAKDOWN_TOL: f64 = 1e-13;

struct Arnoldi<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    vectors: Vec<Vector>,
    h: Vec<Vec<f64>>,
    beta: f64,
    breakdown: bool,
    scale: f64,
}

impl<'a, A: LinearOperator + ?Sized> Arnoldi<'a, A> {
    fn new(op: &'a A, v: &ArrayView1<f64>) -> Result<Self> {
        let beta = norm2(v);
        if beta == 0.0 {
            return Err(Error::ZeroStartVector);
        }
        Ok(Arnoldi {
            op,
            vectors: vec![v.mapv(|x| x / beta)],
            h: Vec::new(),
            beta,
            breakdown: false,
            scale: 0.0,
        })
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    fn extend_to(&mut self, m: usize) {
        while self.h.len() < m && !self.breakdown {
            let j = self.h.len();
            let mut w = self.op.apply(&self.vectors[j].view());
            self.scale = self.scale.max(norm2(&w.view()));
            let mut col = vec![0.0; j + 2];
            // Two passes of modified Gram–Schmidt.
            for _ in 0..2 {
                for (i, vi) in self.vectors.iter().enumerate() {
                    let d = vi.dot(&w);
                    col[i] += d;
                    w.scaled_add(-d, vi);
                }
            }
            let nw = norm2(&w.view());
            col[j + 1] = nw;
            self.h.push(col);
            if nw <= BREAKDOWN_TOL * self.scale.max(f64::MIN_POSITIVE) {
                self.breakdown = true;
                self.h[j][j + 1] = 0.0;
            } else {
                self.vectors.push(w / nw);
            }
        }
    }

    fn hessenberg(&self) -> Matrix {
        let m = self.h.len();
        let mut h = Matrix::zeros((m + 1, m));
        for (j, col) in self.h.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                h[[i, j]] = x;
            }
        }
        h
    }

    fn decomposition(&self) -> ArnoldiDecomposition {
        let m = self.h.len();
        let n = self.vectors[0].len();
        let mut basis = Matrix::zeros((n, m));
        for j in 0..m {
            basis.column_mut(j).assign(&self.vectors[j]);
        }
        ArnoldiDecomposition {
            basis,
            hessenberg: self.hessenberg(),
            next: (!self.breakdown && self.vectors.len() > m).then(|| self.vectors[m].clone()),
            beta: self.beta,
            breakdown: self.breakdown,
        }
    }
}

/// `m`-step Arnoldi process with full reorthogonalisation, stopping early on
/// breakdown (the basis then spans an invariant subspace).
pub fn arnoldi<A: LinearOperator + ?Sized>(
    op: &A,
    v: &ArrayView1<f64>,
    m: usize,
) -> Result<ArnoldiDecomposition> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: v.len(),
        });
    }
    if m > op.dim() {
        return Err(Error::invalid(format!(
            "subspace dimension {m} exceeds operator dimension {}",
            op.dim()
        )));
    }
    let mut process = Arnoldi::new(op, v)?;
    process.extend_to(m);
    Ok(process.decomposition())
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub tol: f64,
    pub initial_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-9,
            initial_dim: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovResult {
    pub value: Vector,
    pub subspace_dim: usize,
    pub error_estimate: f64,
    /// Set when the subspace grew to the full space without meeting `tol`
    /// and the dense path produced `value`.
    pub dense_fallback: bool,
}

/// `[[A, W], [0, J]]` acting on `[x; y]` with `W = [v_p, …, v_1]`.
struct Augmented<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    w: &'a [Vector],
}

impl<A: LinearOperator + ?Sized> LinearOperator for Augmented<'_, A> {
    fn dim(&self) -> usize {
        self.op.dim() + self.w.len() - 1
    }

    fn apply(&self, x: &ArrayView1<f64>) -> Vector {
        let n = self.op.dim();
        let p = self.w.len() - 1;
        let mut out = Vector::zeros(n + p);
        let mut top = self.op.apply(&x.slice(s![..n]));
        for c in 0..p {
            top.scaled_add(x[n + c], &self.w[p - c]);
            if c + 1 < p {
                out[n + c] = x[n + c + 1];
            }
        }
        out.slice_mut(s![..n]).assign(&top);
        out
    }
}

/// Krylov approximation of `Σ_j h^j φ_j(hA) v_j`, growing the subspace
/// geometrically until the a-posteriori estimate
/// `β h |h_{m+1,m}| |e_mᵀ φ_1(hH_m) e_1|` drops below `tol · ‖result‖`.
pub fn phi_combo_apply_krylov<A: LinearOperator + ?Sized>(
    op: &A,
    h: f64,
    v: &[Vector],
    opts: KrylovOptions,
) -> Result<KrylovResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("Krylov tolerance must be positive"));
    }
    let n = op.dim();
    let p = check_vectors(n, v)?;
    if h == 0.0 {
        return Ok(KrylovResult {
            value: v[0].clone(),
            subspace_dim: 0,
            error_estimate: 0.0,
            dense_fallback: false,
        });
    }
    let aug = Augmented { op, w: v };
    let dim = n + p;
    let mut start = Vector::zeros(dim);
    start.slice_mut(s![..n]).assign(&v[0]);
    if p > 0 {
        start[dim - 1] = 1.0;
    }
    if norm2(&start.view()) == 0.0 {
        return Ok(KrylovResult {
            value: Vector::zeros(n),
            subspace_dim: 0,
            error_estimate: 0.0,
            dense_fallback: false,
        });
    }
    let mut process = Arnoldi::new(&aug, &start.view())?;
    let mut m = opts.initial_dim.max(1).min(dim);
    loop {
        process.extend_to(m);
        let k = process.len();
        let hm = process.hessenberg();
        let hk = hm.slice(s![..k, ..k]).to_owned();
        // exp([[hH, h e1], [0, 0]]) carries exp(hH) and h φ_1(hH) e1.
        let mut big = Matrix::zeros((k + 1, k + 1));
        big.slice_mut(s![..k, ..k]).assign(&(&hk * h));
        big[[0, k]] = h;
        let e = expm(&big.view())?;
        let mut value = Vector::zeros(n);
        for j in 0..k {
            value.scaled_add(process.beta * e[[j, 0]], &process.vectors[j].slice(s![..n]));
        }
        let estimate = if process.breakdown {
            0.0
        } else {
            process.beta * hm[[k, k - 1]].abs() * e[[k - 1, k]].abs()
        };
        let scale = norm2(&value.view()).max(f64::MIN_POSITIVE);
        if process.breakdown || estimate <= opts.tol * scale {
            return Ok(KrylovResult {
                value,
                subspace_dim: k,
                error_estimate: estimate,
                dense_fallback: false,
            });
        }
        if m >= dim {
            let dense = op.to_dense();
            return Ok(KrylovResult {
                value: phi_combo_apply(&dense.view(), h, v)?,
                subspace_dim: k,
                error_estimate: estimate,
                dense_fallback: true,
            });
        }
        m = (2 * m).min(dim);
    }
}
