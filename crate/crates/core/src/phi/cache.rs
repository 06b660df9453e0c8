use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use ndarray::ArrayView2;
use num::{BigRational, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use super::dense::phi_all_dense;
use super::spectral::SpectralOperator;
use crate::error::{Error, Result};
use crate::linalg::{ensure_square, is_symmetric, Matrix};

/// How the cached `φ_j(c h A)` matrices are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhiMethod {
    /// Spectral for exactly symmetric `A`, augmented exponential otherwise.
    #[default]
    Auto,
    Augmented,
    Spectral,
}

/// `φ_0..φ_kmax(c h A)` for a fixed set of nodes `c`.
#[derive(Clone, Debug)]
pub struct PhiCache {
    pub operator_id: u64,
    pub h: f64,
    pub kmax: usize,
    pub dim: usize,
    entries: BTreeMap<BigRational, Vec<Matrix>>,
}

impl PhiCache {
    pub fn get(&self, node: &BigRational, j: usize) -> Result<&Matrix> {
        self.entries
            .get(node)
            .and_then(|v| v.get(j))
            .ok_or_else(|| Error::MissingCacheEntry {
                node: node.to_string(),
                index: j,
            })
    }

    pub fn nodes(&self) -> impl Iterator<Item = &BigRational> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Hash of the dimension and entry bit patterns, used to tie a cache to the
/// operator it was built from.
pub fn operator_id(a: &ArrayView2<f64>) -> u64 {
    let mut hasher = DefaultHasher::new();
    a.dim().hash(&mut hasher);
    for x in a.iter() {
        x.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

fn check_nodes(nodes: &[BigRational]) -> Result<Vec<BigRational>> {
    let mut distinct: Vec<BigRational> = nodes.to_vec();
    distinct.sort();
    distinct.dedup();
    if let Some(bad) = distinct.iter().find(|c| !c.is_positive()) {
        return Err(Error::invalid(format!("cache node {bad} is not positive")));
    }
    Ok(distinct)
}

/// Builds the cache once per `(A, h)`; nodes are processed in parallel.
pub fn build_phi_cache(
    a: &ArrayView2<f64>,
    h: f64,
    nodes: &[BigRational],
    kmax: usize,
    method: PhiMethod,
) -> Result<PhiCache> {
    ensure_square(a)?;
    let use_spectral = match method {
        PhiMethod::Auto => is_symmetric(a),
        PhiMethod::Spectral => true,
        PhiMethod::Augmented => false,
    };
    if use_spectral {
        let spectral = SpectralOperator::new(a)?;
        return spectral_phi_cache(&spectral, operator_id(a), h, nodes, kmax);
    }
    if !h.is_finite() || h.is_zero() {
        return Err(Error::invalid("step size must be finite and nonzero"));
    }
    let distinct = check_nodes(nodes)?;
    let entries = distinct
        .par_iter()
        .map(|c| {
            let t = h * c.to_f64().unwrap_or(f64::NAN);
            phi_all_dense(&(a * t).view(), kmax).map(|m| (c.clone(), m))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(PhiCache {
        operator_id: operator_id(a),
        h,
        kmax,
        dim: a.nrows(),
        entries,
    })
}

/// Cache from an existing eigendecomposition, so the decomposition can be
/// shared between several step sizes.
pub fn spectral_phi_cache(
    spectral: &SpectralOperator,
    operator_id: u64,
    h: f64,
    nodes: &[BigRational],
    kmax: usize,
) -> Result<PhiCache> {
    if !h.is_finite() || h.is_zero() {
        return Err(Error::invalid("step size must be finite and nonzero"));
    }
    let distinct = check_nodes(nodes)?;
    let entries = distinct
        .par_iter()
        .map(|c| {
            let t = h * c.to_f64().unwrap_or(f64::NAN);
            (c.clone(), spectral.phi_all(t, kmax))
        })
        .collect();
    Ok(PhiCache {
        operator_id,
        h,
        kmax,
        dim: spectral.dim(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn unit_node_kmax_one() {
        let a = ndarray::array![[-1.0, 0.5], [0.2, -2.0]];
        let cache = build_phi_cache(&a.view(), 0.1, &[r(1, 1)], 1, PhiMethod::Auto).unwrap();
        assert_eq!(cache.len(), 1);
        assert!(cache.get(&r(1, 1), 1).is_ok());
        assert!(matches!(
            cache.get(&r(1, 1), 2),
            Err(Error::MissingCacheEntry { index: 2, .. })
        ));
        assert!(cache.get(&r(1, 2), 0).is_err());
    }

    #[test]
    fn zero_operator_gives_scaled_identities() {
        let a = Matrix::zeros((3, 3));
        for method in [PhiMethod::Augmented, PhiMethod::Spectral] {
            let cache =
                build_phi_cache(&a.view(), 0.5, &[r(1, 2), r(1, 1)], 4, method).unwrap();
            for c in [r(1, 2), r(1, 1)] {
                let mut f = 1.0;
                for j in 0..=4 {
                    if j > 0 {
                        f /= j as f64;
                    }
                    let m = cache.get(&c, j).unwrap();
                    for ((i, k), &x) in m.indexed_iter() {
                        let e = if i == k { f } else { 0.0 };
                        assert!((x - e).abs() < 1e-15, "{method:?} {c} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_nodes() {
        let a = Matrix::eye(2);
        assert!(build_phi_cache(&a.view(), 1.0, &[r(0, 1)], 1, PhiMethod::Augmented).is_err());
    }
}
