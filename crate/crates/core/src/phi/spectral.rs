use ndarray::ArrayView2;

use super::scalar::phi_scalar;
use crate::error::Result;
use crate::linalg::{symmetric_eigen, Matrix, SymmetricEigen};

/// A symmetric operator kept in eigendecomposed form, so that
/// `φ_k(tA) = Q diag(φ_k(tλ)) Qᵀ` costs two products per `(t, k)`.
#[derive(Clone, Debug)]
pub struct SpectralOperator {
    eigen: SymmetricEigen,
}

impl SpectralOperator {
    pub fn new(a: &ArrayView2<f64>) -> Result<Self> {
        Ok(SpectralOperator {
            eigen: symmetric_eigen(a)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigen.values.len()
    }

    pub fn eigen(&self) -> &SymmetricEigen {
        &self.eigen
    }

    /// `[φ_0(tA), …, φ_kmax(tA)]`.
    pub fn phi_all(&self, t: f64, kmax: usize) -> Vec<Matrix> {
        let q = &self.eigen.vectors;
        (0..=kmax)
            .map(|k| {
                let mut scaled = q.clone();
                for (mut col, &lambda) in scaled.columns_mut().into_iter().zip(&self.eigen.values) {
                    col *= phi_scalar(k, t * lambda);
                }
                scaled.dot(&q.t())
            })
            .collect()
    }
}
