//! Scalar backends and dense linear algebra.
//!
//! Two backends implement [`Scalar`]: exact [`Rational`] (arbitrary precision,
//! always in lowest terms) and binary `f64`. Algorithms are generic over the
//! backend, so a single computation can never mix the two; the tagged
//! [`TaggedScalar`] exists for I/O boundaries and reports a mismatch instead
//! of converting.

mod matrix;
mod parse;

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use matrix::{determinant, solve_linear_system, DenseMatrix, Determinant, Lu, Solution};
pub use parse::parse_rational;
pub(crate) use matrix::residual_inf as matrix_residual;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Rational,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Rational => "rational",
            Backend::Float => "float",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Ok(Backend::Rational),
            "float" | "f64" => Ok(Backend::Float),
            other => Err(Error::BadParameter(format!("unknown backend {other:?}"))),
        }
    }
}

/// Absolute tolerance for float zero/sign tests. Ignored by the rational backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(pub f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(1e-9);
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
    Indeterminate,
}

impl Sign {
    pub fn name(self) -> &'static str {
        match self {
            Sign::Negative => "negative",
            Sign::Zero => "zero",
            Sign::Positive => "positive",
            Sign::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignVerdict<T> {
    pub sign: Sign,
    pub magnitude: T,
    pub tolerance: f64,
}

/// Field operations shared by both backends.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    /// `num / den`; panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn pow2(exp: i32) -> Self;
    fn is_exact_zero(&self) -> bool;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// Parses a decimal (`"0.25"`, `"1e-3"`) or `"p/q"` literal.
    fn parse_literal(s: &str) -> Result<Self>;
    /// `"p/q"` string for rationals, a JSON number for floats.
    fn to_json(&self) -> serde_json::Value;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }

    /// Sign test: exact trichotomy for rationals, banded for floats.
    fn sign(&self, tol: Tolerance) -> SignVerdict<Self>;

    /// Zero within tolerance (exact for rationals).
    fn near_zero(&self, tol: Tolerance) -> bool {
        matches!(self.sign(tol).sign, Sign::Zero | Sign::Indeterminate)
    }

    fn approx_eq(&self, other: &Self, tol: Tolerance) -> bool {
        (self.clone() - other.clone()).near_zero(tol)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Rational;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn pow2(exp: i32) -> Self {
        let p = BigInt::one() << exp.unsigned_abs();
        if exp >= 0 {
            Rational::from_integer(p)
        } else {
            Rational::new(BigInt::one(), p)
        }
    }

    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_literal(s: &str) -> Result<Self> {
        parse_rational(s)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }

    fn sign(&self, tol: Tolerance) -> SignVerdict<Self> {
        let sign = if Zero::is_zero(self) {
            Sign::Zero
        } else if Signed::is_positive(self) {
            Sign::Positive
        } else {
            Sign::Negative
        };
        SignVerdict {
            sign,
            magnitude: Signed::abs(self),
            tolerance: tol.0,
        }
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn pow2(exp: i32) -> Self {
        2f64.powi(exp)
    }

    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_literal(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.contains('/') {
            return Ok(Scalar::to_f64(&parse_rational(t)?));
        }
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                literal: s.to_string(),
                reason: "not a finite decimal".into(),
            })
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn sign(&self, tol: Tolerance) -> SignVerdict<Self> {
        let sign = if *self == 0.0 {
            Sign::Zero
        } else if self.is_nan() || f64::abs(*self) <= tol.0 {
            Sign::Indeterminate
        } else if *self > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        };
        SignVerdict {
            sign,
            magnitude: f64::abs(*self),
            tolerance: tol.0,
        }
    }
}

pub fn sign_of<T: Scalar>(x: &T, tol: Tolerance) -> SignVerdict<T> {
    x.sign(tol)
}

/// Scalar tagged with its backend, for boundaries where the type is only
/// known at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum TaggedScalar {
    Rational(Rational),
    Float(f64),
}

impl TaggedScalar {
    pub fn backend(&self) -> Backend {
        match self {
            TaggedScalar::Rational(_) => Backend::Rational,
            TaggedScalar::Float(_) => Backend::Float,
        }
    }

    pub fn parse(literal: &str, backend: Backend) -> Result<Self> {
        Ok(match backend {
            Backend::Rational => TaggedScalar::Rational(Rational::parse_literal(literal)?),
            Backend::Float => TaggedScalar::Float(f64::parse_literal(literal)?),
        })
    }

    fn combine(
        &self,
        other: &Self,
        rat: impl FnOnce(&Rational, &Rational) -> Rational,
        flt: impl FnOnce(f64, f64) -> f64,
    ) -> Result<Self> {
        match (self, other) {
            (TaggedScalar::Rational(a), TaggedScalar::Rational(b)) => {
                Ok(TaggedScalar::Rational(rat(a, b)))
            }
            (TaggedScalar::Float(a), TaggedScalar::Float(b)) => Ok(TaggedScalar::Float(flt(*a, *b))),
            (a, b) => Err(Error::BackendMismatch {
                left: a.backend().name(),
                right: b.backend().name(),
            }),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            TaggedScalar::Rational(r) => r.to_json(),
            TaggedScalar::Float(f) => f.to_json(),
        }
    }
}
