//! Exact rational arithmetic for masses, rates, and losses.
//!
//! Every numeric quantity in this crate is a [`Rat`]: an arbitrary-precision
//! rational kept in lowest terms. Merging cells by equal score, deduplicating
//! boundary points, and deciding the fairness predicates all hinge on exact
//! equality tests that floating point cannot provide.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Arbitrary-precision rational number.
///
/// Displays and serializes as a lowest-terms `"num/den"` string. Parses from
/// fraction strings (`"3/8"`), finite decimal strings (`"0.375"`), or bare
/// integers (`"2"`); all three convert exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn one_half() -> Self {
        Rat::new(1, 2)
    }

    /// Builds `num/den`, reducing to lowest terms.
    ///
    /// Panics on a zero denominator; intended for in-code literals.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "Rat::new with zero denominator");
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    /// Exact parse of `"a/b"`, a finite decimal, or an integer literal.
    pub fn parse(input: &str) -> Result<Self, Error> {
        let s = input.trim();
        let fail = || Error::InvalidRational(input.to_string());
        if s.is_empty() {
            return Err(fail());
        }
        if let Some((num, den)) = s.split_once('/') {
            let num = BigInt::from_str(num.trim()).map_err(|_| fail())?;
            let den = BigInt::from_str(den.trim()).map_err(|_| fail())?;
            if den.is_zero() {
                return Err(fail());
            }
            return Ok(Rat(BigRational::new(num, den)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let (negative, int_digits) = match int_part.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, int_part.strip_prefix('+').unwrap_or(int_part)),
            };
            let digits_ok = |d: &str| d.chars().all(|c| c.is_ascii_digit());
            if !digits_ok(int_digits) || !digits_ok(frac_part) {
                return Err(fail());
            }
            if int_digits.is_empty() && frac_part.is_empty() {
                return Err(fail());
            }
            let mut all = String::with_capacity(int_digits.len() + frac_part.len() + 1);
            all.push_str(if int_digits.is_empty() { "0" } else { int_digits });
            all.push_str(frac_part);
            let num = BigInt::from_str(&all).map_err(|_| fail())?;
            let den = BigInt::from(10u32).pow(frac_part.len() as u32);
            let value = BigRational::new(num, den);
            return Ok(Rat(if negative { -value } else { value }));
        }
        let num = BigInt::from_str(s).map_err(|_| fail())?;
        Ok(Rat(BigRational::from_integer(num)))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rat::parse(s)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatVisitor;

        impl serde::de::Visitor<'_> for RatVisitor {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a fraction or finite decimal string")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Rat, E> {
                Rat::parse(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_str(RatVisitor)
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat($trait::$method(self.0, &rhs.0))
            }
        }
        impl $trait<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat($trait::$method(&self.0, rhs.0))
            }
        }
        impl $trait<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat($trait::$method(&self.0, &rhs.0))
            }
        }
    };
}

rat_binop!(Add, add);
rat_binop!(Sub, sub);
rat_binop!(Mul, mul);
rat_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl SubAssign for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        self.0 -= rhs.0;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}
