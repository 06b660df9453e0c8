//! φ-functions of scalars and matrices.

mod cache;
mod dense;
mod expm;
mod krylov;
mod scalar;
mod spectral;

pub use cache::{build_phi_cache, operator_id, spectral_phi_cache, PhiCache, PhiMethod};
pub use dense::{phi_all_dense, phi_combo_apply};
pub use expm::expm;
pub use krylov::{
    arnoldi, phi_combo_apply_krylov, ArnoldiDecomposition, KrylovOptions, KrylovResult,
    LinearOperator,
};
pub use scalar::{factorial, phi_scalar, phi_scalar_all, SERIES_THRESHOLD};
pub use spectral::SpectralOperator;
