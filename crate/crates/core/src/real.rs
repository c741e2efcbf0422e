//! Scalar abstraction so the closed-form geometry can be evaluated either in
//! `f64` or in double-double precision (`twofloat::TwoFloat`).
//!
//! Near the center the apparent horizon sits within `(8/27) r^3` of the
//! singularity curve, and quantities such as `phi(r, t_h(r))` are extremely
//! sensitive to `t`. The identity checks evaluate one route in `TwoFloat`.

use num_traits::{Float, FromPrimitive};
use twofloat::TwoFloat;

pub trait Real: Float + FromPrimitive + std::fmt::Debug {
    fn from_f64_exact(x: f64) -> Self;
    fn to_f64_lossy(self) -> f64;

    /// Quotient correctly rounded to the working precision.
    fn quo(self, rhs: Self) -> Self {
        self / rhs
    }

    /// Exact rational `num / den` at the working precision.
    fn ratio(num: i32, den: i32) -> Self {
        Self::from_i32(num)
            .expect("small integer")
            .quo(Self::from_i32(den).expect("small integer"))
    }
}

impl Real for f64 {
    fn from_f64_exact(x: f64) -> Self {
        x
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    fn from_f64_exact(x: f64) -> Self {
        TwoFloat::from(x)
    }

    fn to_f64_lossy(self) -> f64 {
        self.hi() + self.lo()
    }

    // The crate's TwoFloat / TwoFloat forms its correction term without an
    // fma and ends up with f64 accuracy. One residual step restores it.
    fn quo(self, rhs: Self) -> Self {
        let q = self / rhs;
        q + (self - q * rhs) / rhs.hi()
    }
}

/// Integer power with a non-negative exponent.
pub(crate) fn ipow<T: Real>(x: T, p: u32) -> T {
    x.powi(p as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twofloat_ratio_is_more_accurate_than_f64() {
        let third = TwoFloat::ratio(1, 3);
        let residual = third * TwoFloat::from(3.0) - TwoFloat::from(1.0);
        assert!(residual.to_f64_lossy().abs() < 1e-30);
    }

    #[test]
    fn twofloat_quotient_residual() {
        let b = TwoFloat::from(0.7) + TwoFloat::from(1e-20);
        let a = TwoFloat::from(0.3);
        let q = a.quo(b);
        assert!(((q * b - a) / a).to_f64_lossy().abs() < 1e-30);
    }

    #[test]
    fn twofloat_cbrt_round_trips() {
        let x = TwoFloat::from(0.296) * TwoFloat::from(1e-12);
        let c = x.cbrt();
        let back = c * c * c;
        assert!(((back - x) / x).to_f64_lossy().abs() < 1e-30);
    }
}
