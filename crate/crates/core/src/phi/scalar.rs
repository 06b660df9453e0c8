use crate::linalg::dd::Dd;

/// Below this modulus `phi_scalar` sums the Taylor series; above it, the
/// upward recurrence seeded by `expm1` is stable enough for `k <= 10`.
pub const SERIES_THRESHOLD: f64 = 5.0;

const SERIES_TERMS: usize = 40;

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `φ_k(z)`, with `φ_0 = exp` and `φ_{k+1}(z) = (φ_k(z) - 1/k!) / z`.
///
/// For `|z| < SERIES_THRESHOLD` the series
/// `Σ_m z^m / (k + m)!` is evaluated by Horner's rule in double-double, so
/// the alternating terms for negative `z` do not cost accuracy.
pub fn phi_scalar(k: usize, z: f64) -> f64 {
    if k == 0 {
        return z.exp();
    }
    if z.abs() < SERIES_THRESHOLD {
        return phi_series(k, z);
    }
    let mut phi = z.exp_m1() / z;
    for j in 1..k {
        phi = (phi - 1.0 / factorial(j)) / z;
    }
    phi
}

/// `[φ_0(z), …, φ_kmax(z)]`.
pub fn phi_scalar_all(kmax: usize, z: f64) -> Vec<f64> {
    (0..=kmax).map(|k| phi_scalar(k, z)).collect()
}

fn phi_series(k: usize, z: f64) -> f64 {
    // k! φ_k(z) = 1 + z/(k+1) (1 + z/(k+2) (1 + …))
    let mut r = Dd::new(1.0);
    for m in (1..=SERIES_TERMS).rev() {
        r = Dd::new(1.0).add(r.mul_f64(z).div_f64((k + m) as f64));
    }
    r.div_f64(factorial(k)).to_f64()
}
