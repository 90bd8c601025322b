//! Exact arithmetic primitives: Gaussian integers, rationals over ℤ and ℚ(i),
//! the nearest-integer distance `‖x‖` and ℓ∞ norms.
//!
//! The float path (`nearest_int_dist`) and the exact path
//! (`ExactRational::nearest_int_dist`) are kept apart on purpose: counting at
//! δ = 0 must never go through a rounding step.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A Gaussian integer `re + i·im` over an integer type `T`.
///
/// [`GaussianInt`] is the unbounded variant; enumeration loops use
/// `Gaussian<i64>` and promote to [`GaussianInt`] when they need exact
/// arithmetic that may overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Gaussian<T> {
    pub re: T,
    pub im: T,
}

pub type GaussianInt = Gaussian<BigInt>;

impl<T> Gaussian<T> {
    pub const fn new(re: T, im: T) -> Self {
        Gaussian { re, im }
    }
}

impl<T: Clone + Neg<Output = T>> Gaussian<T> {
    pub fn conj(&self) -> Self {
        Gaussian::new(self.re.clone(), -self.im.clone())
    }
}

impl<T: Clone + Add<Output = T> + Mul<Output = T>> Gaussian<T> {
    /// Squared complex modulus `re² + im²`.
    pub fn norm_sqr(&self) -> T {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }
}

impl<T: Add<Output = T>> Add for Gaussian<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Gaussian::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl<T: Sub<Output = T>> Sub for Gaussian<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Gaussian::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl<T: Clone + Add<Output = T> + Sub<Output = T> + Mul<Output = T>> Mul for Gaussian<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Gaussian::new(
            self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone(),
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl<T: Neg<Output = T>> Neg for Gaussian<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Gaussian::new(-self.re, -self.im)
    }
}

impl Gaussian<i64> {
    /// `max(|re|, |im|)`.
    pub fn linf(&self) -> i64 {
        self.re.abs().max(self.im.abs())
    }

    pub fn to_big(self) -> GaussianInt {
        Gaussian::new(BigInt::from(self.re), BigInt::from(self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }
}

impl GaussianInt {
    pub fn from_i64(re: i64, im: i64) -> Self {
        Gaussian::new(BigInt::from(re), BigInt::from(im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// Narrow to machine integers when both parts fit.
    pub fn to_small(&self) -> Option<Gaussian<i64>> {
        Some(Gaussian::new(self.re.to_i64()?, self.im.to_i64()?))
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -&self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// `|z|∞ = max(|ℜz|, |ℑz|)`.
pub fn gaussian_linf(z: &GaussianInt) -> BigInt {
    let re = z.re.abs();
    let im = z.im.abs();
    if re >= im {
        re
    } else {
        im
    }
}

/// Exact rational in lowest terms with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(ExactRational(BigRational::new(num.into(), den)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        ExactRational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    /// The exact binary value of a finite double.
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(ExactRational)
            .ok_or_else(|| Error::Domain(format!("non-finite value {x}")))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        ExactRational(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(ExactRational(&self.0 / &rhs.0))
    }

    /// `‖x‖`, computed by floor arithmetic.
    pub fn nearest_int_dist(&self) -> Self {
        let n = self.numer();
        let d = self.denom();
        let r = n.mod_floor(d);
        let other = d - &r;
        let best = if r <= other { r } else { other };
        ExactRational(BigRational::new(best, d.clone()))
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! rational_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: Self) -> Self {
                ExactRational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational((&self.0).$method(&rhs.0))
            }
        }
    };
}

rational_binop!(Add, add);
rational_binop!(Sub, sub);
rational_binop!(Mul, mul);

impl Neg for ExactRational {
    type Output = Self;
    fn neg(self) -> Self {
        ExactRational(-self.0)
    }
}

/// Element of ℚ(i) with exact parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComplexRational {
    pub re: ExactRational,
    pub im: ExactRational,
}

impl ComplexRational {
    pub fn new(re: ExactRational, im: ExactRational) -> Self {
        ComplexRational { re, im }
    }

    pub fn zero() -> Self {
        ComplexRational::new(ExactRational::zero(), ExactRational::zero())
    }

    pub fn from_gaussian(z: &GaussianInt) -> Self {
        ComplexRational::new(
            ExactRational::from_integer(z.re.clone()),
            ExactRational::from_integer(z.im.clone()),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexRational::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> ExactRational {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        let n = rhs.norm_sqr();
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let p = self.clone() * rhs.conj();
        Ok(ComplexRational::new(
            p.re.checked_div(&n)?,
            p.im.checked_div(&n)?,
        ))
    }

    /// Integer parts when both components are integral.
    pub fn to_gaussian(&self) -> Option<GaussianInt> {
        if self.re.is_integer() && self.im.is_integer() {
            Some(Gaussian::new(
                self.re.numer().clone(),
                self.im.numer().clone(),
            ))
        } else {
            None
        }
    }
}

impl Add for ComplexRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ComplexRational::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ComplexRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ComplexRational::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for ComplexRational {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let re = &(&self.re * &rhs.re) - &(&self.im * &rhs.im);
        let im = &(&self.re * &rhs.im) + &(&self.im * &rhs.re);
        ComplexRational::new(re, im)
    }
}

/// Exact `a / q` in ℚ(i).
pub fn gaussian_div(a: &GaussianInt, q: &GaussianInt) -> Result<ComplexRational> {
    if q.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let n = q.norm_sqr();
    let p = a.clone() * q.conj();
    Ok(ComplexRational::new(
        ExactRational::new(p.re, n.clone())?,
        ExactRational::new(p.im, n)?,
    ))
}

/// `‖x‖` for a double: round half to even, then take the absolute difference.
pub fn nearest_int_dist(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite value {x}")));
    }
    Ok((x - x.round_ties_even()).abs())
}

/// `‖x‖` without the finiteness check, for hot loops that validated upstream.
#[inline]
pub(crate) fn nearest_int_dist_unchecked(x: f64) -> f64 {
    (x - x.round_ties_even()).abs()
}

/// `|x|∞` for a real vector.
pub fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Decides `‖num/den‖ ≤ bnum/bden` for `den, bden > 0`, staying in `i128`.
/// Returns `None` on overflow so the caller can retry with big integers.
#[inline]
pub(crate) fn ratio_dist_le_i128(num: i128, den: i128, bnum: i128, bden: i128) -> Option<bool> {
    debug_assert!(den > 0 && bden > 0);
    let r = num.rem_euclid(den);
    let best = r.min(den - r);
    let lhs = best.checked_mul(bden)?;
    let rhs = bnum.checked_mul(den)?;
    Some(lhs <= rhs)
}

/// Big-integer version of [`ratio_dist_le_i128`].
pub(crate) fn ratio_dist_le_big(num: &BigInt, den: &BigInt, bound: &ExactRational) -> bool {
    let r = num.mod_floor(den);
    let other = den - &r;
    let best = if r <= other { r } else { other };
    best * bound.denom() <= bound.numer() * den
}

/// Exact value of `‖num/den‖` as a double (for witness residual reporting).
pub(crate) fn ratio_dist_f64(num: &BigInt, den: &BigInt) -> f64 {
    let r = num.mod_floor(den);
    let other = den - &r;
    let best = if r <= other { r } else { other };
    BigRational::new(best, den.clone())
        .to_f64()
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d).unwrap()
    }

    #[test]
    fn nearest_int_examples() {
        assert_eq!(nearest_int_dist(0.5).unwrap(), 0.5);
        assert_eq!(nearest_int_dist(-0.25).unwrap(), 0.25);
        assert_eq!(nearest_int_dist(3.0).unwrap(), 0.0);
        assert!(nearest_int_dist(f64::NAN).is_err());
        assert!(nearest_int_dist(f64::INFINITY).is_err());
    }

    #[test]
    fn nearest_int_exact_examples() {
        assert_eq!(q(1, 2).nearest_int_dist(), q(1, 2));
        assert_eq!(q(-1, 4).nearest_int_dist(), q(1, 4));
        assert_eq!(q(3, 1).nearest_int_dist(), q(0, 1));
        assert_eq!(q(7, 3).nearest_int_dist(), q(1, 3));
        assert_eq!(q(-7, 3).nearest_int_dist(), q(1, 3));
    }

    #[test]
    fn linf_examples() {
        assert_eq!(
            gaussian_linf(&GaussianInt::from_i64(3, -4)),
            BigInt::from(4)
        );
        assert_eq!(gaussian_linf(&GaussianInt::from_i64(0, 0)), BigInt::from(0));
        assert_eq!(
            gaussian_linf(&GaussianInt::from_i64(-7, 0)),
            BigInt::from(7)
        );
    }

    #[test]
    fn gaussian_div_examples() {
        let one_plus_i = GaussianInt::from_i64(1, 1);
        let r = gaussian_div(&one_plus_i, &GaussianInt::from_i64(2, 2)).unwrap();
        assert_eq!(r, ComplexRational::new(q(1, 2), q(0, 1)));

        let r = gaussian_div(&GaussianInt::from_i64(1, 0), &one_plus_i).unwrap();
        assert_eq!(r, ComplexRational::new(q(1, 2), q(-1, 2)));

        let r = gaussian_div(&GaussianInt::from_i64(0, 0), &GaussianInt::from_i64(5, -3)).unwrap();
        assert!(r.is_zero());

        assert_eq!(
            gaussian_div(&one_plus_i, &GaussianInt::from_i64(0, 0)),
            Err(Error::DivisionByZero)
        );
    }

    #[test]
    fn exact_from_f64_is_exact() {
        assert_eq!(ExactRational::from_f64(0.25).unwrap(), q(1, 4));
        assert!(ExactRational::from_f64(f64::NAN).is_err());
        let third = ExactRational::from_f64(0.1).unwrap();
        assert!(third.denom() > &BigInt::from(1_000_000_000_000i64));
    }

    #[test]
    fn ratio_helpers_agree() {
        for num in -40i128..40 {
            for den in 1i128..9 {
                let fast = ratio_dist_le_i128(num, den, 1, 4).unwrap();
                let slow = ratio_dist_le_big(&BigInt::from(num), &BigInt::from(den), &q(1, 4));
                assert_eq!(fast, slow, "{num}/{den}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn dist_is_integer_periodic(x in -1.0e6f64..1.0e6, n in -1000i64..1000) {
            let a = nearest_int_dist(x).unwrap();
            let b = nearest_int_dist(x + n as f64).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
            prop_assert!(a <= 0.5);
        }

        #[test]
        fn exact_dist_periodic_and_bounded(num in -10_000i64..10_000, den in 1i64..500, n in -50i64..50) {
            let x = q(num, den);
            let shifted = &x + &ExactRational::from_integer(n);
            let d = x.nearest_int_dist();
            prop_assert_eq!(d.clone(), shifted.nearest_int_dist());
            prop_assert!(d <= q(1, 2));
            prop_assert_eq!(d.is_zero(), x.is_integer());
        }

        #[test]
        fn linf_triangle_and_product(a in -1000i64..1000, b in -1000i64..1000, c in -1000i64..1000, d in -1000i64..1000) {
            let z = GaussianInt::from_i64(a, b);
            let w = GaussianInt::from_i64(c, d);
            let lz = gaussian_linf(&z);
            let lw = gaussian_linf(&w);
            prop_assert!(gaussian_linf(&(z.clone() * w.clone())) <= BigInt::from(2) * &lz * &lw);
            prop_assert!(gaussian_linf(&(z.clone() + w.clone())) <= &lz + &lw);
            prop_assert_eq!(z.conj().conj(), z.clone());
            prop_assert_eq!(lz.is_zero(), z.is_zero());
        }

        #[test]
        fn gaussian_div_round_trip(a in -5000i64..5000, b in -5000i64..5000, c in -5000i64..5000, d in -5000i64..5000) {
            prop_assume!(c != 0 || d != 0);
            let num = GaussianInt::from_i64(a, b);
            let den = GaussianInt::from_i64(c, d);
            let r = gaussian_div(&num, &den).unwrap();
            let back = r * ComplexRational::from_gaussian(&den);
            prop_assert_eq!(back.to_gaussian(), Some(num));
        }
    }
}
