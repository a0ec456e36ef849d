//! Exact rational scalars and the extended value line used by every metric
//! and fixed-point computation.
//!
//! All orderings the algorithms rely on (sup/inf comparisons, sublevel-set
//! membership, ball membership) are decided on exact rationals. The extended
//! type [`Ext`] adds `+inf` and `-inf` with the conventions that the infimum
//! of the empty set is `+inf` and its supremum is `-inf`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, serialized as `"p"` or `"p/q"` in reduced form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Nearest multiple of `step` (ties round up), used for grid snapping.
    pub fn snap_to_grid(&self, step: &Rational) -> Rational {
        assert!(
            !step.is_zero() && !step.is_negative(),
            "grid step must be positive"
        );
        let ratio = &self.0 / &step.0;
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let k = (ratio + half).floor();
        Rational(k * &step.0)
    }

    /// Parses `"p"` or `"p/q"`; the sign may only appear on the numerator.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::BadRational(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let numer = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let denom = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Ratio prints "p" when the reduced denominator is 1, else "p/q".
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Rational::parse(s)
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, rhs: &'a Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, rhs: &'a Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, rhs: &'a Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn div(self, rhs: &'a Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Rational::parse(&s).map_err(de::Error::custom)
    }
}

/// Extended value: `-inf < finite rationals < +inf`.
///
/// `-inf` only ever arises as the supremum of an empty set; all distances and
/// simulation-function values are non-negative or `+inf`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Ext {
    NegInf,
    Fin(Rational),
    Inf,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Fin(Rational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Ext::Fin(Rational::from_int(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            Ext::Fin(r) => Some(r),
            _ => None,
        }
    }

    /// `+inf`-absorbing addition. `-inf + +inf` cannot occur in any of the
    /// flows here (sums only combine distances and V values, which are never
    /// `-inf`); it panics rather than pick a convention silently.
    pub fn add(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Inf, Ext::NegInf) | (Ext::NegInf, Ext::Inf) => {
                panic!("indeterminate sum -inf + inf")
            }
            (Ext::Inf, _) | (_, Ext::Inf) => Ext::Inf,
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
        }
    }

    /// Multiplication by a non-negative rational scalar, with `0 * inf = 0`
    /// (a zero gain annihilates, matching γ ≡ 0).
    pub fn scale(&self, k: &Rational) -> Ext {
        assert!(!k.is_negative(), "gain slopes are non-negative");
        if k.is_zero() {
            return Ext::zero();
        }
        match self {
            Ext::NegInf => Ext::NegInf,
            Ext::Inf => Ext::Inf,
            Ext::Fin(r) => Ext::Fin(r * k),
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Ext) -> Ext {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Supremum with the empty-set convention `sup ∅ = -inf`.
    pub fn sup<I: IntoIterator<Item = Ext>>(values: I) -> Ext {
        values.into_iter().fold(Ext::NegInf, Ext::max)
    }

    /// Infimum with the empty-set convention `inf ∅ = +inf`.
    pub fn inf<I: IntoIterator<Item = Ext>>(values: I) -> Ext {
        values.into_iter().fold(Ext::Inf, Ext::min)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" => Ok(Ext::Inf),
            "-inf" => Ok(Ext::NegInf),
            other => Ok(Ext::Fin(Rational::parse(other)?)),
        }
    }
}

impl From<Rational> for Ext {
    fn from(r: Rational) -> Ext {
        Ext::Fin(r)
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        use Ext::*;
        match (self, other) {
            (NegInf, NegInf) | (Inf, Inf) => Ordering::Equal,
            (NegInf, _) | (_, Inf) => Ordering::Less,
            (_, NegInf) | (Inf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::Inf => write!(f, "inf"),
            Ext::Fin(r) => write!(f, "{r}"),
        }
    }
}

impl fmt::Debug for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ext::parse(&s).map_err(de::Error::custom)
    }
}

/// Exact enclosure `[lo, hi]` of `sqrt(r)` by bisection, `hi - lo <= span/2^iters`.
///
/// Used only when an euclidean distance must be rendered; orderings never
/// consult it.
pub fn sqrt_interval(r: &Rational, iters: u32) -> (Rational, Rational) {
    assert!(!r.is_negative(), "sqrt of negative rational");
    if r.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    let one = Rational::one();
    let mut lo = Rational::zero();
    let mut hi = if *r >= one { r.clone() } else { one };
    let half = Rational::new(1, 2);
    for _ in 0..iters {
        let mid = (&lo + &hi) * half.clone();
        if &(&mid * &mid) <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
