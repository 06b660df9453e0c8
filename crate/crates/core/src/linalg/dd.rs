//! Double-double accumulation built on error-free transformations.
//!
//! Only what the eigenvector refinement and the compensated dot product need:
//! exact products of two `f64`s and unevaluated sums carried in two words.

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let r = Dd::renorm(s, e + t);
        Dd::renorm(r.hi, r.lo + f)
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    /// `self + a * b` with the product formed exactly.
    #[inline]
    pub fn add_prod(self, a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        self.add(Dd::renorm(p, e))
    }

    /// `self + a * b` where `b` is itself a double-double.
    #[inline]
    pub fn add_prod_dd(self, a: f64, b: Dd) -> Dd {
        let (p, e) = two_prod(a, b.hi);
        self.add(Dd::renorm(p, e + a * b.lo))
    }

    /// `self * x` for a plain `f64` factor.
    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        Dd::renorm(p, e + self.lo * x)
    }

    /// `self / d` for a plain `f64` divisor.
    #[inline]
    pub fn div_f64(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = (-q).mul_add(d, self.hi) + self.lo;
        Dd::renorm(q, r / d)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}
