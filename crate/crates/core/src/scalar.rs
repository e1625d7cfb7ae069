//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The linear algebra, polynomial arithmetic, LP assembly and the simplex
//! solver are written once against [`Scalar`]. Floating point types get
//! tolerance-based comparisons; [`Rational`] runs the same code in exact
//! arithmetic with all tolerances equal to zero.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational scalar.
pub type Rational = BigRational;

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Magnitude under which a pivot candidate is treated as zero.
    fn pivot_tolerance() -> Self;

    /// Slack allowed when checking primal and dual feasibility.
    fn feasibility_tolerance() -> Self;

    /// Reciprocal condition number below which a matrix counts as singular.
    fn singular_rcond() -> Self;

    /// `true` for types that round (f32, f64).
    fn is_inexact() -> bool {
        true
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    /// Exact `num / den`.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer literal") / Self::from_i64(den).expect("integer literal")
    }

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer literal")
    }

    /// Converts a double. For exact types this is the exact binary value.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn pivot_tolerance() -> Self {
        1e-11
    }
    fn feasibility_tolerance() -> Self {
        1e-9
    }
    fn singular_rcond() -> Self {
        1e-12
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn pivot_tolerance() -> Self {
        1e-6
    }
    fn feasibility_tolerance() -> Self {
        1e-4
    }
    fn singular_rcond() -> Self {
        1e-6
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn pivot_tolerance() -> Self {
        Self::zero()
    }
    fn feasibility_tolerance() -> Self {
        Self::zero()
    }
    fn singular_rcond() -> Self {
        Self::zero()
    }
    fn is_inexact() -> bool {
        false
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq<T: Scalar>(a: &T, b: &T, tol: &T) -> bool {
    let scale = T::max_of(T::one(), T::max_of(a.abs(), b.abs()));
    (a.clone() - b.clone()).abs() <= tol.clone() * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_are_exact() {
        let third = Rational::ratio(1, 3);
        assert_eq!(third.clone() * Rational::from_int(3), Rational::from_int(1));
        assert!(Rational::pivot_tolerance().is_zero());
        assert!(!Rational::is_inexact());
    }

    #[test]
    fn approx_eq_is_relative_above_one() {
        assert!(approx_eq(&1000.0, &1000.0005, &1e-6));
        assert!(!approx_eq(&1.0, &1.01, &1e-6));
        assert!(approx_eq(&1e-12, &0.0, &1e-9));
    }
}
