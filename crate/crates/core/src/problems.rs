//! Benchmark problems `u' = Au + g(t, u)`.

use std::f64::consts::PI;

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::linalg::dd::{two_prod, two_sum};
use crate::linalg::{compensated_matvec, Matrix, Vector};

pub trait SemilinearProblem: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn dense_operator(&self) -> &Matrix;

    /// `A u`, reduced in compensated arithmetic.
    fn apply_linear(&self, u: &ArrayView1<f64>) -> Vector {
        compensated_matvec(&self.dense_operator().view(), u)
    }

    fn nonlinearity(&self, t: f64, u: &ArrayView1<f64>) -> Vector;

    fn full_rhs(&self, t: f64, u: &ArrayView1<f64>) -> Vector {
        self.apply_linear(u) + self.nonlinearity(t, u)
    }

    fn initial_state(&self) -> Vector;

    fn t0(&self) -> f64 {
        0.0
    }

    fn exact(&self, _t: f64) -> Option<Vector> {
        None
    }

    /// Mesh width used by the discrete L2 norm.
    fn dx(&self) -> f64;
}

pub const PROBLEM_NAMES: [&str; 2] = ["heat1d", "linear-decay"];

pub fn by_name(name: &str, n: usize) -> Result<Box<dyn SemilinearProblem>> {
    match name {
        "heat1d" => Ok(Box::new(Heat1d::new(n)?)),
        "linear-decay" => Ok(Box::new(LinearDecay::new(n)?)),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// Second-order central difference Laplacian on `n` interior points of
/// `[0, 1]` with homogeneous Dirichlet conditions.
pub fn dirichlet_laplacian(n: usize) -> Matrix {
    let inv = ((n + 1) * (n + 1)) as f64;
    let mut a = Matrix::zeros((n, n));
    for k in 0..n {
        a[[k, k]] = -2.0 * inv;
        if k > 0 {
            a[[k, k - 1]] = inv;
        }
        if k + 1 < n {
            a[[k, k + 1]] = inv;
        }
    }
    a
}

/// `max |d/du 1/(1 + u^2)| = 3√3/8`.
pub const HEAT1D_LIPSCHITZ: f64 = 0.649_519_052_838_329;

fn grid(n: usize) -> Vector {
    Vector::from_shape_fn(n, |k| (k + 1) as f64 / (n + 1) as f64)
}

/// Compensated `(u_{k-1} - 2u_k + u_{k+1}) (n+1)^2`, matching the dense
/// compensated product entry by entry.
fn laplacian_apply(n: usize, u: &ArrayView1<f64>) -> Vector {
    let inv = ((n + 1) * (n + 1)) as f64;
    Vector::from_shape_fn(n, |k| {
        let mut s = 0.0;
        let mut c = 0.0;
        let mut acc = |w: f64, x: f64| {
            let (p, ep) = two_prod(w, x);
            let (t, es) = two_sum(s, p);
            s = t;
            c += ep + es;
        };
        if k > 0 {
            acc(inv, u[k - 1]);
        }
        acc(-2.0 * inv, u[k]);
        if k + 1 < n {
            acc(inv, u[k + 1]);
        }
        s + c
    })
}

/// `u_t = u_xx + 1/(1 + u^2) + Φ(x, t)` on `(0, 1)` with exact solution
/// `u = x(1 - x) e^t`.
///
/// The nonlinearity is globally Lipschitz in `u` with constant
/// [`HEAT1D_LIPSCHITZ`] in the max norm.
#[derive(Clone, Debug)]
pub struct Heat1d {
    n: usize,
    a: Matrix,
    x: Vector,
}

impl Heat1d {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::invalid(format!("heat1d needs n >= 8, got {n}")));
        }
        Ok(Heat1d {
            n,
            a: dirichlet_laplacian(n),
            x: grid(n),
        })
    }

    pub fn grid(&self) -> &Vector {
        &self.x
    }

    pub fn exact_at(x: f64, t: f64) -> f64 {
        x * (1.0 - x) * t.exp()
    }

    /// `Φ = ∂_t u - ∂_xx u - 1/(1 + u^2)` for the exact solution.
    pub fn source(x: f64, t: f64) -> f64 {
        let q = x * (1.0 - x);
        let et = t.exp();
        q * et + 2.0 * et - 1.0 / (1.0 + q * q * et * et)
    }
}

impl SemilinearProblem for Heat1d {
    fn name(&self) -> &str {
        "heat1d"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn dense_operator(&self) -> &Matrix {
        &self.a
    }

    fn apply_linear(&self, u: &ArrayView1<f64>) -> Vector {
        laplacian_apply(self.n, u)
    }

    fn nonlinearity(&self, t: f64, u: &ArrayView1<f64>) -> Vector {
        Vector::from_shape_fn(self.n, |k| {
            1.0 / (1.0 + u[k] * u[k]) + Self::source(self.x[k], t)
        })
    }

    fn initial_state(&self) -> Vector {
        self.x.mapv(|x| Self::exact_at(x, 0.0))
    }

    fn exact(&self, t: f64) -> Option<Vector> {
        Some(self.x.mapv(|x| Self::exact_at(x, t)))
    }

    fn dx(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }
}

/// `u_t = u_xx`, `u(x, 0) = sin(πx)`; the initial state is an eigenvector of
/// the discrete Laplacian.
#[derive(Clone, Debug)]
pub struct LinearDecay {
    n: usize,
    a: Matrix,
    x: Vector,
}

impl LinearDecay {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("linear-decay needs n >= 2, got {n}")));
        }
        Ok(LinearDecay {
            n,
            a: dirichlet_laplacian(n),
            x: grid(n),
        })
    }

    /// Magnitude of the smallest eigenvalue, `4(n+1)^2 sin^2(π / (2(n+1)))`.
    pub fn lambda1(&self) -> f64 {
        let m = (self.n + 1) as f64;
        let s = (PI / (2.0 * m)).sin();
        4.0 * m * m * s * s
    }
}

impl SemilinearProblem for LinearDecay {
    fn name(&self) -> &str {
        "linear-decay"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn dense_operator(&self) -> &Matrix {
        &self.a
    }

    fn apply_linear(&self, u: &ArrayView1<f64>) -> Vector {
        laplacian_apply(self.n, u)
    }

    fn nonlinearity(&self, _t: f64, _u: &ArrayView1<f64>) -> Vector {
        Vector::zeros(self.n)
    }

    fn initial_state(&self) -> Vector {
        self.x.mapv(|x| (PI * x).sin())
    }

    fn exact(&self, t: f64) -> Option<Vector> {
        let decay = (-self.lambda1() * t).exp();
        Some(self.x.mapv(|x| decay * (PI * x).sin()))
    }

    fn dx(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }
}

/// The autonomous form of a problem: time is appended as a state component
/// with derivative one, carried entirely by the nonlinearity.
pub struct Autonomized<'a> {
    inner: &'a dyn SemilinearProblem,
    a: Matrix,
    name: String,
}

impl<'a> Autonomized<'a> {
    pub fn new(inner: &'a dyn SemilinearProblem) -> Self {
        let n = inner.dim();
        let mut a = Matrix::zeros((n + 1, n + 1));
        a.slice_mut(ndarray::s![..n, ..n]).assign(inner.dense_operator());
        Autonomized {
            inner,
            a,
            name: format!("{}-autonomous", inner.name()),
        }
    }
}

impl SemilinearProblem for Autonomized<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn dense_operator(&self) -> &Matrix {
        &self.a
    }

    fn apply_linear(&self, u: &ArrayView1<f64>) -> Vector {
        let n = self.inner.dim();
        let mut out = Vector::zeros(n + 1);
        out.slice_mut(ndarray::s![..n])
            .assign(&self.inner.apply_linear(&u.slice(ndarray::s![..n])));
        out
    }

    fn nonlinearity(&self, _t: f64, u: &ArrayView1<f64>) -> Vector {
        let n = self.inner.dim();
        let mut out = Vector::ones(n + 1);
        out.slice_mut(ndarray::s![..n])
            .assign(&self.inner.nonlinearity(u[n], &u.slice(ndarray::s![..n])));
        out
    }

    fn initial_state(&self) -> Vector {
        let mut u = self.inner.initial_state().to_vec();
        u.push(self.inner.t0());
        Vector::from(u)
    }

    fn t0(&self) -> f64 {
        self.inner.t0()
    }

    fn dx(&self) -> f64 {
        self.inner.dx()
    }
}

/// `sqrt(dx Σ v_k^2)`.
pub fn discrete_l2(v: &ArrayView1<f64>, dx: f64) -> f64 {
    (dx * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn error_at(problem: &dyn SemilinearProblem, state: &ArrayView1<f64>, t: f64) -> Result<f64> {
    let exact = problem.exact(t).ok_or(Error::MissingExact)?;
    if exact.len() != state.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            found: state.len(),
        });
    }
    Ok(discrete_l2(&(&exact - state).view(), problem.dx()))
}
