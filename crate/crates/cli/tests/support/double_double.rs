//! Double-double scalar for running the generic exponent algebra at ~106 bits.
//!
//! Newtype over `twofloat::TwoFloat` that adds the `Sum` impl the `Real` bound needs.

use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use logsense_core::Real;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

#[derive(Debug, Default, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd(pub TwoFloat);

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::LowerExp for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&self.0, f)
    }
}

macro_rules! binary_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait for Dd {
            type Output = Dd;
            fn $method(self, rhs: Dd) -> Dd {
                Dd($trait::$method(self.0, rhs.0))
            }
        }
    )*};
}
binary_ops!(Add add, Sub sub, Mul mul, Div div, Rem rem);

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::zero(), |a, b| a + b)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd(TwoFloat::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd(TwoFloat::one())
    }
}

impl Num for Dd {
    type FromStrRadixErr = <TwoFloat as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        TwoFloat::from_str_radix(s, radix).map(Dd)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.0.to_f64()
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Dd(n.into()))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Dd(n.into()))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Dd(n.into()))
    }
}

impl NumCast for Dd {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        <TwoFloat as NumCast>::from(n).map(Dd)
    }
}

macro_rules! consts {
    ($($name:ident),*) => {$(
        fn $name() -> Self {
            Dd(TwoFloat::$name())
        }
    )*};
}

impl FloatConst for Dd {
    consts!(
        E, FRAC_1_PI, FRAC_1_SQRT_2, FRAC_2_PI, FRAC_2_SQRT_PI, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6,
        FRAC_PI_8, LN_10, LN_2, LOG10_E, LOG2_E, PI, SQRT_2
    );
}

macro_rules! unary {
    ($($name:ident),*) => {$(
        fn $name(self) -> Self {
            Dd(Float::$name(self.0))
        }
    )*};
}

macro_rules! predicate {
    ($($name:ident),*) => {$(
        fn $name(self) -> bool {
            Float::$name(self.0)
        }
    )*};
}

macro_rules! binary {
    ($($name:ident),*) => {$(
        fn $name(self, other: Self) -> Self {
            Dd(Float::$name(self.0, other.0))
        }
    )*};
}

impl Float for Dd {
    consts!(nan, infinity, neg_infinity, neg_zero, min_value, min_positive_value, max_value, epsilon);
    unary!(
        floor, ceil, round, trunc, fract, abs, signum, recip, sqrt, exp, exp2, ln, log2, log10, cbrt, sin, cos, tan,
        asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );
    predicate!(is_nan, is_infinite, is_finite, is_normal, is_sign_positive, is_sign_negative);
    binary!(powf, log, max, min, abs_sub, hypot, atan2);

    fn classify(self) -> FpCategory {
        Float::classify(self.0)
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        Dd(Float::mul_add(self.0, a.0, b.0))
    }
    fn powi(self, n: i32) -> Self {
        Dd(Float::powi(self.0, n))
    }
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = Float::sin_cos(self.0);
        (Dd(s), Dd(c))
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0)
    }
}

impl Real for Dd {}
