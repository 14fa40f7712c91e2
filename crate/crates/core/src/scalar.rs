//! Scalar abstraction for the population layer.
//!
//! Populations, transfer matrices and the ideal protocol algebra are written
//! once over [`Scalar`] and instantiated with `f64`/`f32` (floating point),
//! [`num_rational::Ratio`] (exact arithmetic) or [`FirstOrder`] (the
//! high-temperature expansion, linear in the polarization ε).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{FromPrimitive, One, Zero};

/// Field-like number type the population algebra is generic over.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon of the representation; zero for exact types.
    const EPSILON: f64;

    /// The exact value `num / den` when the type can hold it.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Nearest representable value to an `f64`.
    fn from_f64(x: f64) -> Self;

    /// Size of the value used for tolerance checks. For [`FirstOrder`] this
    /// is the larger of the two coefficients.
    fn magnitude(self) -> f64;

    /// Leading (ε → 0) value as `f64`.
    fn leading(self) -> f64;

    /// True when the number is nonnegative, up to `tol`.
    fn is_nonnegative(self, tol: f64) -> bool;

    /// Tolerance appropriate to this representation, never tighter than
    /// `requested`.
    fn tolerance(requested: f64) -> f64 {
        requested.max(64.0 * Self::EPSILON)
    }

    fn is_negligible(self, tol: f64) -> bool {
        self.magnitude() <= tol
    }

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EPSILON: f64 = <$t>::EPSILON as f64;

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn from_f64(x: f64) -> Self {
                x as $t
            }

            fn magnitude(self) -> f64 {
                self.abs() as f64
            }

            fn leading(self) -> f64 {
                self as f64
            }

            fn is_nonnegative(self, tol: f64) -> bool {
                self as f64 >= -tol
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

macro_rules! ratio_scalar {
    ($t:ty) => {
        impl Scalar for Ratio<$t> {
            const EPSILON: f64 = 0.0;

            fn from_ratio(num: i64, den: i64) -> Self {
                Ratio::new(num as $t, den as $t)
            }

            /// Irrational inputs are approximated by the closest small ratio.
            fn from_f64(x: f64) -> Self {
                Ratio::<$t>::approximate_float(x).expect("finite value")
            }

            fn magnitude(self) -> f64 {
                let v = self.leading();
                v.abs()
            }

            fn leading(self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }

            fn is_nonnegative(self, _tol: f64) -> bool {
                self >= Ratio::zero()
            }
        }
    };
}

ratio_scalar!(i64);
ratio_scalar!(i128);

/// A number `c0 + c1·ε` in which terms of order ε² are discarded.
///
/// The thermal populations, the triplet reset and the relaxation generator are
/// all linear in the polarization ε. Working in this type keeps every
/// population exactly linear in ε through arbitrarily long matrix products,
/// which is the regime in which the closed-form build-up law is exact.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FirstOrder<T> {
    /// Value at ε = 0.
    pub c0: T,
    /// Coefficient of ε.
    pub c1: T,
}

impl<T: Scalar> FirstOrder<T> {
    pub fn new(c0: T, c1: T) -> Self {
        Self { c0, c1 }
    }

    pub fn constant(c0: T) -> Self {
        Self { c0, c1: T::zero() }
    }

    /// The formal polarization ε itself.
    pub fn epsilon() -> Self {
        Self {
            c0: T::zero(),
            c1: T::one(),
        }
    }

    /// Numeric value at a given polarization.
    pub fn at(self, eps: T) -> T {
        self.c0 + self.c1 * eps
    }
}

impl<T: Scalar> Zero for FirstOrder<T> {
    fn zero() -> Self {
        Self::constant(T::zero())
    }

    fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }
}

impl<T: Scalar> One for FirstOrder<T> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Scalar> Add for FirstOrder<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.c0 + rhs.c0, self.c1 + rhs.c1)
    }
}

impl<T: Scalar> Sub for FirstOrder<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.c0 - rhs.c0, self.c1 - rhs.c1)
    }
}

impl<T: Scalar> Mul for FirstOrder<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.c0 * rhs.c0, self.c0 * rhs.c1 + self.c1 * rhs.c0)
    }
}

impl<T: Scalar> Div for FirstOrder<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let c0 = self.c0 / rhs.c0;
        Self::new(c0, (self.c1 - c0 * rhs.c1) / rhs.c0)
    }
}

impl<T: Scalar> Neg for FirstOrder<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.c0, -self.c1)
    }
}

impl<T: Scalar> Scalar for FirstOrder<T> {
    const EPSILON: f64 = T::EPSILON;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(T::from_ratio(num, den))
    }

    fn from_f64(x: f64) -> Self {
        Self::constant(T::from_f64(x))
    }

    fn magnitude(self) -> f64 {
        self.c0.magnitude().max(self.c1.magnitude())
    }

    fn leading(self) -> f64 {
        self.c0.leading()
    }

    /// Nonnegative for every sufficiently small |ε| of either sign.
    fn is_nonnegative(self, tol: f64) -> bool {
        if self.c0.leading() > tol {
            true
        } else {
            self.c0.magnitude() <= tol && self.c1.magnitude() <= tol
        }
    }
}

impl<T: Scalar + FromPrimitive> FromPrimitive for FirstOrder<T> {
    fn from_i64(n: i64) -> Option<Self> {
        T::from_i64(n).map(Self::constant)
    }

    fn from_u64(n: u64) -> Option<Self> {
        T::from_u64(n).map(Self::constant)
    }

    fn from_f64(x: f64) -> Option<Self> {
        <T as FromPrimitive>::from_f64(x).map(Self::constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type E = FirstOrder<f64>;

    #[test]
    fn epsilon_squared_vanishes() {
        let e = E::epsilon();
        assert!((e * e).is_zero());
        let x = E::new(0.25, 0.25) * E::new(1.0, -1.0);
        assert_eq!(x, E::new(0.25, 0.0));
    }

    #[test]
    fn division_is_first_order_inverse() {
        let a = E::new(3.0, 2.0);
        let b = E::new(2.0, 5.0);
        let q = a / b;
        let back = q * b;
        assert!((back.c0 - a.c0).abs() < 1e-15);
        assert!((back.c1 - a.c1).abs() < 1e-15);
    }

    #[test]
    fn nonnegativity_requires_positive_leading_term() {
        assert!(E::new(0.25, -10.0).is_nonnegative(1e-12));
        assert!(E::zero().is_nonnegative(1e-12));
        assert!(!E::new(0.0, 1.0).is_nonnegative(1e-12));
        assert!(!E::new(-0.1, 0.0).is_nonnegative(1e-12));
    }

    #[test]
    fn rationals_are_exact() {
        let third = Ratio::<i64>::from_ratio(1, 3);
        assert_eq!(third + third + third, Ratio::one());
        assert_eq!(<Ratio<i64> as Scalar>::EPSILON, 0.0);
    }

    proptest! {
        #[test]
        fn evaluation_is_a_ring_map_modulo_eps_squared(
            a0 in -2.0..2.0f64, a1 in -2.0..2.0f64,
            b0 in -2.0..2.0f64, b1 in -2.0..2.0f64,
            eps in -1e-3..1e-3f64,
        ) {
            let a = E::new(a0, a1);
            let b = E::new(b0, b1);
            let exact = a.at(eps) * b.at(eps);
            let dropped = a1 * b1 * eps * eps;
            prop_assert!(((a * b).at(eps) + dropped - exact).abs() < 1e-14);
            prop_assert!(((a + b).at(eps) - (a.at(eps) + b.at(eps))).abs() < 1e-14);
        }
    }
}
