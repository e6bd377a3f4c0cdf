//! Numeric scalars shared by the simulator and the game.
//!
//! Two modes exist. [`Exact`] is an arbitrary-precision rational and never
//! rounds; `f64` is ordinary binary floating point whose comparisons are
//! taken modulo a [`Tolerance`]. Everything that needs square roots (the
//! reflection embedding, mass-derived weights) is `f64`-only.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar.
pub type Exact = BigRational;

/// Which arithmetic a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Exact => f.write_str("exact"),
            NumericMode::Float => f.write_str("float"),
        }
    }
}

/// Comparison tolerance for float mode.
///
/// Two floats compare equal when `|a - b| <= tau * max(1, |a|, |b|)`.
/// `tau = 0` gives plain IEEE comparison. Exact scalars ignore it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT_TAU: f64 = 1e-9;
    pub const ZERO: Tolerance = Tolerance(0.0);

    pub fn new(tau: f64) -> Result<Self, ScalarError> {
        if tau.is_finite() && tau >= 0.0 {
            Ok(Tolerance(tau))
        } else {
            Err(ScalarError::BadTolerance(tau))
        }
    }

    pub fn tau(self) -> f64 {
        self.0
    }

    /// The same tolerance widened by `factor` (identity checks use `10 * tau`).
    pub fn scaled(self, factor: f64) -> Tolerance {
        Tolerance(self.0 * factor)
    }

    /// Float comparison under this tolerance.
    pub fn cmp_f64(self, a: f64, b: f64) -> Ordering {
        let scale = 1f64.max(a.abs()).max(b.abs());
        let diff = a - b;
        if diff.abs() <= self.0 * scale {
            Ordering::Equal
        } else if diff > 0.0 {
            Ordering::Greater
        } else if diff < 0.0 {
            Ordering::Less
        } else {
            // NaN on either side: neither ordered nor equal, report as unequal
            a.partial_cmp(&b).unwrap_or(Ordering::Less)
        }
    }

    pub fn eq_f64(self, a: f64, b: f64) -> bool {
        self.cmp_f64(a, b) == Ordering::Equal
    }

    pub fn gt_f64(self, a: f64, b: f64) -> bool {
        self.cmp_f64(a, b) == Ordering::Greater
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance(Self::DEFAULT_TAU)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("cannot parse `{0}` as a decimal or rational number")]
    Parse(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
    #[error("float value {0} has no exact rational representation")]
    NotFinite(f64),
}

/// Arithmetic and comparison contract common to both numeric modes.
pub trait Scalar:
    Clone
    + fmt::Debug
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
{
    const MODE: NumericMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    /// Ordering under `tol` (ignored in exact mode).
    fn cmp_tol(&self, other: &Self, tol: Tolerance) -> Ordering;

    /// Canonical text form: `a` or `a/b` for rationals, shortest round-trip
    /// decimal for floats.
    fn render(&self) -> String;

    fn eq_tol(&self, other: &Self, tol: Tolerance) -> bool {
        self.cmp_tol(other, tol) == Ordering::Equal
    }

    fn gt_tol(&self, other: &Self, tol: Tolerance) -> bool {
        self.cmp_tol(other, tol) == Ordering::Greater
    }

    fn lt_tol(&self, other: &Self, tol: Tolerance) -> bool {
        self.cmp_tol(other, tol) == Ordering::Less
    }

    fn is_positive_strict(&self) -> bool {
        *self > Self::zero()
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn cmp_tol(&self, other: &Self, tol: Tolerance) -> Ordering {
        tol.cmp_f64(*self, *other)
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl Scalar for BigRational {
    const MODE: NumericMode = NumericMode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn cmp_tol(&self, other: &Self, _tol: Tolerance) -> Ordering {
        self.cmp(other)
    }
    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

/// Parses `"3"`, `"-2.125"`, `"1e-2"`, `"1/100"` or `"-7/3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, ScalarError> {
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal(num).ok_or_else(|| ScalarError::Parse(text.to_string()))?;
        let den = parse_decimal(den).ok_or_else(|| ScalarError::Parse(text.to_string()))?;
        if den.is_zero() {
            return Err(ScalarError::ZeroDenominator(text.to_string()));
        }
        return Ok(num / den);
    }
    parse_decimal(s).ok_or_else(|| ScalarError::Parse(text.to_string()))
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&all_digits).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Exact rational equal to a finite float (every finite `f64` is dyadic).
pub fn rational_from_f64(v: f64) -> Result<BigRational, ScalarError> {
    BigRational::from_float(v).ok_or(ScalarError::NotFinite(v))
}

/// Parses text into either scalar mode, going through the exact value.
pub fn parse_scalar<S: Scalar>(text: &str) -> Result<S, ScalarError> {
    parse_rational(text).map(|r| S::from_rational(&r))
}

/// Serializes a scalar as a JSON string in exact mode and a JSON number in float mode.
#[derive(Debug, Clone, Copy)]
pub struct Rendered<'a, S>(pub &'a S);

impl<S: Scalar> Serialize for Rendered<'_, S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        match S::MODE {
            NumericMode::Exact => serializer.serialize_str(&self.0.render()),
            NumericMode::Float => serializer.serialize_f64(self.0.to_f64()),
        }
    }
}

/// Serializes a slice of scalars with [`Rendered`] semantics.
pub struct RenderedSeq<'a, S>(pub &'a [S]);

impl<S: Scalar> Serialize for RenderedSeq<'_, S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        serializer.collect_seq(self.0.iter().map(Rendered))
    }
}
