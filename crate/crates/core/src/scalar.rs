//! Scalar backends.
//!
//! Everything above this module is generic over [`Scalar`]. Two families are
//! provided: exact rationals ([`Rational`]) and IEEE floats (`f64`, `f32`).
//! Symbols carry complex coefficients, so [`Field`] is also implemented for
//! `Complex<T>` over every scalar backend.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number, the default exact backend.
pub type Rational = BigRational;

/// Coefficient field of jets: a commutative field with by-reference helpers.
///
/// The `*_ref` methods exist so that hot loops over big rationals do not have
/// to clone both operands for every product.
pub trait Field: Num + Clone + Debug + Neg<Output = Self> + Send + Sync + 'static {
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn add_assign_ref(&mut self, other: &Self);
    fn sub_assign_ref(&mut self, other: &Self);
    fn neg_ref(&self) -> Self;
    /// Multiplicative inverse, `None` for (numerically) zero input.
    fn inv(&self) -> Option<Self>;
    fn from_int(v: i64) -> Self;
    /// `num / den`; panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exactly zero for exact backends, below the backend tolerance for floats.
    fn is_negligible(&self) -> bool;
    /// Size used for float diagnostics.
    fn magnitude(&self) -> f64;
}

/// Real scalar backend.
pub trait Scalar: Field + PartialOrd + Signed {
    /// True when arithmetic is exact.
    const EXACT: bool;
    /// Human readable backend name.
    const NAME: &'static str;

    /// Square root if it is representable in the backend.
    fn sqrt_exact(&self) -> Option<Self>;
    /// `k`-th root of a positive value if it is representable.
    fn root_exact(&self, k: u32) -> Option<Self>;
    /// `exp(self)` if representable (rationals: only `exp(0) = 1`).
    fn exp_exact(&self) -> Option<Self>;
    /// `ln(self)` if representable (rationals: only `ln(1) = 0`).
    fn ln_exact(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Parses the text form written by [`Scalar::to_text`] (also plain integers
    /// and decimals).
    fn parse_text(s: &str) -> Option<Self>;
    fn to_text(&self) -> String;
}

macro_rules! ref_ops {
    () => {
        fn add_ref(&self, other: &Self) -> Self {
            self + other
        }
        fn sub_ref(&self, other: &Self) -> Self {
            self - other
        }
        fn mul_ref(&self, other: &Self) -> Self {
            self * other
        }
        fn add_assign_ref(&mut self, other: &Self) {
            *self += other;
        }
        fn sub_assign_ref(&mut self, other: &Self) {
            *self -= other;
        }
        fn neg_ref(&self) -> Self {
            -self
        }
    };
}

impl Field for BigRational {
    ref_ops!();

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn magnitude(&self) -> f64 {
        ToPrimitive::to_f64(&self.abs()).unwrap_or(f64::INFINITY)
    }
}

fn exact_int_root(v: &BigInt, k: u32) -> Option<BigInt> {
    let r = v.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *v {
        Some(r)
    } else {
        None
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const NAME: &'static str = "rational";

    fn sqrt_exact(&self) -> Option<Self> {
        self.root_exact(2)
    }
    fn root_exact(&self, k: u32) -> Option<Self> {
        if k == 0 || self.is_negative() {
            return None;
        }
        let n = exact_int_root(self.numer(), k)?;
        let d = exact_int_root(self.denom(), k)?;
        Some(BigRational::new(n, d))
    }
    fn exp_exact(&self) -> Option<Self> {
        self.is_zero().then(Self::one)
    }
    fn ln_exact(&self) -> Option<Self> {
        self.is_one().then(Self::zero)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn parse_text(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            return Some(BigRational::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let neg = int.starts_with('-');
            let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
            let n: BigInt = digits.parse().ok()?;
            let d = num_traits::pow(BigInt::from(10), frac.len());
            let v = BigRational::new(n, d);
            return Some(if neg { -v } else { v });
        }
        let n: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(n))
    }
    fn to_text(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

macro_rules! float_backend {
    ($t:ty, $tol:expr, $name:expr) => {
        impl Field for $t {
            ref_ops!();

            fn inv(&self) -> Option<Self> {
                if self.is_negligible() {
                    None
                } else {
                    Some(1.0 / *self)
                }
            }
            fn from_int(v: i64) -> Self {
                v as $t
            }
            fn from_ratio(num: i64, den: i64) -> Self {
                assert!(den != 0, "zero denominator");
                num as $t / den as $t
            }
            fn is_negligible(&self) -> bool {
                self.abs() <= $tol
            }
            fn magnitude(&self) -> f64 {
                self.abs() as f64
            }
        }

        impl Scalar for $t {
            const EXACT: bool = false;
            const NAME: &'static str = $name;

            fn sqrt_exact(&self) -> Option<Self> {
                (*self >= 0.0).then(|| self.sqrt())
            }
            fn root_exact(&self, k: u32) -> Option<Self> {
                (k > 0 && *self >= 0.0).then(|| self.powf(1.0 / k as $t))
            }
            fn exp_exact(&self) -> Option<Self> {
                Some(self.exp())
            }
            fn ln_exact(&self) -> Option<Self> {
                (*self > 0.0).then(|| self.ln())
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn parse_text(s: &str) -> Option<Self> {
                let s = s.trim();
                if let Some((n, d)) = s.split_once('/') {
                    let n: $t = n.trim().parse().ok()?;
                    let d: $t = d.trim().parse().ok()?;
                    return (d != 0.0).then(|| n / d);
                }
                s.parse().ok()
            }
            fn to_text(&self) -> String {
                format!("{:?}", self)
            }
        }
    };
}

float_backend!(f64, 1e-9, "f64");
float_backend!(f32, 1e-4, "f32");

impl<T: Scalar> Field for Complex<T> {
    fn add_ref(&self, other: &Self) -> Self {
        Complex::new(self.re.add_ref(&other.re), self.im.add_ref(&other.im))
    }
    fn sub_ref(&self, other: &Self) -> Self {
        Complex::new(self.re.sub_ref(&other.re), self.im.sub_ref(&other.im))
    }
    fn mul_ref(&self, other: &Self) -> Self {
        // Purely real and purely imaginary operands dominate in practice.
        let re_only = |z: &Self| z.im.is_zero();
        let im_only = |z: &Self| z.re.is_zero();
        if re_only(self) && re_only(other) {
            return Complex::new(self.re.mul_ref(&other.re), T::zero());
        }
        if re_only(self) {
            return Complex::new(self.re.mul_ref(&other.re), self.re.mul_ref(&other.im));
        }
        if re_only(other) {
            return Complex::new(self.re.mul_ref(&other.re), self.im.mul_ref(&other.re));
        }
        if im_only(self) && im_only(other) {
            return Complex::new(self.im.mul_ref(&other.im).neg_ref(), T::zero());
        }
        let mut re = self.re.mul_ref(&other.re);
        re.sub_assign_ref(&self.im.mul_ref(&other.im));
        let mut im = self.re.mul_ref(&other.im);
        im.add_assign_ref(&self.im.mul_ref(&other.re));
        Complex::new(re, im)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.re.add_assign_ref(&other.re);
        self.im.add_assign_ref(&other.im);
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        self.re.sub_assign_ref(&other.re);
        self.im.sub_assign_ref(&other.im);
    }
    fn neg_ref(&self) -> Self {
        Complex::new(self.re.neg_ref(), self.im.neg_ref())
    }
    fn inv(&self) -> Option<Self> {
        if self.is_negligible() {
            return None;
        }
        let norm = self.re.mul_ref(&self.re).add_ref(&self.im.mul_ref(&self.im));
        let k = norm.inv()?;
        Some(Complex::new(self.re.mul_ref(&k), self.im.neg_ref().mul_ref(&k)))
    }
    fn from_int(v: i64) -> Self {
        Complex::new(T::from_int(v), T::zero())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(T::from_ratio(num, den), T::zero())
    }
    fn is_negligible(&self) -> bool {
        self.re.is_negligible() && self.im.is_negligible()
    }
    fn magnitude(&self) -> f64 {
        self.re.magnitude().hypot(self.im.magnitude())
    }
}

/// Rational shorthand used throughout tests and examples.
pub fn rat<T: Scalar>(num: i64, den: i64) -> T {
    T::from_ratio(num, den)
}

/// Imaginary unit in the complex extension of `T`.
pub fn imag_unit<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Embeds a real scalar.
pub fn real<T: Scalar>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_roots() {
        let q: Rational = rat(9, 4);
        assert_eq!(q.sqrt_exact(), Some(rat(3, 2)));
        assert_eq!(rat::<Rational>(2, 1).sqrt_exact(), None);
        assert_eq!(rat::<Rational>(-1, 1).sqrt_exact(), None);
        assert_eq!(rat::<Rational>(8, 27).root_exact(3), Some(rat(2, 3)));
    }

    #[test]
    fn rational_transcendentals_only_at_trivial_points() {
        assert_eq!(Rational::zero().exp_exact(), Some(Rational::one()));
        assert_eq!(rat::<Rational>(1, 2).exp_exact(), None);
        assert_eq!(Rational::one().ln_exact(), Some(Rational::zero()));
    }

    #[test]
    fn text_round_trip() {
        for s in ["3/7", "-5", "0"] {
            let v = Rational::parse_text(s).unwrap();
            assert_eq!(v.to_text(), s);
        }
        assert_eq!(Rational::parse_text("-0.25"), Some(rat(-1, 4)));
        assert_eq!(f64::parse_text("1/4"), Some(0.25));
    }

    #[test]
    fn complex_inverse() {
        let z = Complex::new(rat::<Rational>(1, 1), rat(2, 1));
        let w = Field::inv(&z).unwrap();
        assert_eq!(z.mul_ref(&w), Complex::one());
    }
}
