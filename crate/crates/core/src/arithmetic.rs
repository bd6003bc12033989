//! Number domains used by every evaluation pipeline.
//!
//! Two domains are supported:
//!
//! - exact rationals backed by arbitrary-size integers, and
//! - bit-exact two's-complement fixed point with truncation toward zero and
//!   saturating overflow.
//!
//! [`ArithMode`] selects one of them and [`Scalar`] carries a value of
//! whichever domain is active. A pipeline never mixes the two.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Largest supported `total_bits` for signed formats. Products of two raw
/// mantissas must fit in an `i128`.
pub const MAX_TOTAL_BITS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("fixed-point format mismatch: {0} vs {1}")]
    FormatMismatch(FixedPointFormat, FixedPointFormat),
    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),
    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),
    #[error("invalid arithmetic mode `{0}` (expected `exact` or `fx:<total>:<frac>`)")]
    InvalidMode(String),
}

/// Builds the rational `numer / denom`.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Builds the integer rational `n`.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Renders a rational as `num/den`, or just `num` for integers.
pub fn format_rational(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `n` or `n/d` (decimal integers, optional leading minus).
pub fn parse_rational(text: &str) -> Result<Rational, ArithError> {
    let bad = || ArithError::InvalidRational(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// A fixed-point number format: `total_bits` bits of which `frac_bits` are
/// fractional. Rounding truncates toward zero and overflow saturates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    total_bits: u32,
    frac_bits: u32,
    signed: bool,
}

impl FixedPointFormat {
    /// Signed two's-complement format.
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self, ArithError> {
        Self::with_signedness(total_bits, frac_bits, true)
    }

    pub fn with_signedness(
        total_bits: u32,
        frac_bits: u32,
        signed: bool,
    ) -> Result<Self, ArithError> {
        let max_bits = if signed {
            MAX_TOTAL_BITS
        } else {
            MAX_TOTAL_BITS - 1
        };
        if total_bits == 0 || total_bits > max_bits {
            return Err(ArithError::InvalidFormat(format!(
                "total_bits must be in 1..={max_bits}, got {total_bits}"
            )));
        }
        if frac_bits >= total_bits {
            return Err(ArithError::InvalidFormat(format!(
                "frac_bits ({frac_bits}) must be smaller than total_bits ({total_bits})"
            )));
        }
        Ok(Self {
            total_bits,
            frac_bits,
            signed,
        })
    }

    /// The 6-bit profile: signed, 2 integer bits, 3 fractional bits.
    ///
    /// Every border of the previous-bit decoding rule (1/8, 1/4, 1/2, 1, 9/8,
    /// 5/4, 3/2) is exactly representable here.
    pub fn fx6() -> Self {
        Self {
            total_bits: 6,
            frac_bits: 3,
            signed: true,
        }
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn min_raw(&self) -> i128 {
        if self.signed {
            -(1i128 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_raw(&self) -> i128 {
        if self.signed {
            (1i128 << (self.total_bits - 1)) - 1
        } else {
            (1i128 << self.total_bits) - 1
        }
    }

    fn scale(&self) -> i128 {
        1i128 << self.frac_bits
    }

    fn saturate(&self, raw: i128) -> i128 {
        raw.clamp(self.min_raw(), self.max_raw())
    }

    fn saturate_big(&self, raw: &BigInt) -> i128 {
        if raw < &BigInt::from(self.min_raw()) {
            self.min_raw()
        } else if raw > &BigInt::from(self.max_raw()) {
            self.max_raw()
        } else {
            raw.to_i128()
                .expect("value within format range fits in i128")
        }
    }

    pub fn max_value(&self) -> FixedPointValue {
        FixedPointValue {
            raw: self.max_raw(),
            format: *self,
        }
    }

    pub fn min_value(&self) -> FixedPointValue {
        FixedPointValue {
            raw: self.min_raw(),
            format: *self,
        }
    }

    pub fn zero(&self) -> FixedPointValue {
        FixedPointValue {
            raw: 0,
            format: *self,
        }
    }

    /// Value from a raw mantissa; saturates out-of-range mantissas.
    pub fn from_raw(&self, raw: i128) -> FixedPointValue {
        FixedPointValue {
            raw: self.saturate(raw),
            format: *self,
        }
    }

    /// Whether `x` is exactly representable (in range and on the grid).
    pub fn represents(&self, x: &Rational) -> bool {
        let scaled = x * Rational::from_integer(BigInt::from(self.scale()));
        scaled.is_integer()
            && scaled.numer() >= &BigInt::from(self.min_raw())
            && scaled.numer() <= &BigInt::from(self.max_raw())
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.signed {
            write!(f, "fx:{}:{}", self.total_bits, self.frac_bits)
        } else {
            write!(f, "ufx:{}:{}", self.total_bits, self.frac_bits)
        }
    }
}

impl FromStr for FixedPointFormat {
    type Err = ArithError;

    /// Accepts `fx:<total>:<frac>` (signed) and `ufx:<total>:<frac>` (unsigned).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ArithError::InvalidFormat(s.to_string());
        let mut parts = s.trim().split(':');
        let signed = match parts.next() {
            Some("fx") => true,
            Some("ufx") => false,
            _ => return Err(bad()),
        };
        let total = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let frac = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Self::with_signedness(total, frac, signed)
    }
}

/// A fixed-point value `raw / 2^frac_bits`. The mantissa is always within
/// the format's range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointValue {
    raw: i128,
    format: FixedPointFormat,
}

impl FixedPointValue {
    pub fn raw(&self) -> i128 {
        self.raw
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(self.raw), BigInt::from(self.format.scale()))
    }

    fn same_format(&self, other: &Self) -> Result<(), ArithError> {
        if self.format == other.format {
            Ok(())
        } else {
            Err(ArithError::FormatMismatch(self.format, other.format))
        }
    }

    fn add_unchecked(self, other: Self) -> Self {
        self.format.from_raw(self.raw + other.raw)
    }

    fn mul_unchecked(self, other: Self) -> Self {
        // |raw| < 2^64, so the product fits; `/` truncates toward zero.
        let product = self.raw * other.raw;
        self.format.from_raw(product / self.format.scale())
    }

    fn neg_unchecked(self) -> Self {
        self.format.from_raw(-self.raw)
    }

    fn relu_unchecked(self) -> Self {
        Self {
            raw: self.raw.max(0),
            format: self.format,
        }
    }
}

impl fmt::Display for FixedPointValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.to_rational()))
    }
}

impl PartialOrd for FixedPointValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.format == other.format).then(|| self.raw.cmp(&other.raw))
    }
}

/// Quantises `x`: scale by `2^frac_bits`, truncate toward zero, saturate.
pub fn fx_encode(x: &Rational, fmt: FixedPointFormat) -> FixedPointValue {
    let scaled = x * Rational::from_integer(BigInt::from(fmt.scale()));
    // BigInt division truncates toward zero.
    let truncated = scaled.numer() / scaled.denom();
    FixedPointValue {
        raw: fmt.saturate_big(&truncated),
        format: fmt,
    }
}

pub fn fx_add(a: FixedPointValue, b: FixedPointValue) -> Result<FixedPointValue, ArithError> {
    a.same_format(&b)?;
    Ok(a.add_unchecked(b))
}

pub fn fx_mul(a: FixedPointValue, b: FixedPointValue) -> Result<FixedPointValue, ArithError> {
    a.same_format(&b)?;
    Ok(a.mul_unchecked(b))
}

pub fn fx_neg(a: FixedPointValue) -> FixedPointValue {
    a.neg_unchecked()
}

pub fn fx_relu(a: FixedPointValue) -> FixedPointValue {
    a.relu_unchecked()
}

pub fn fx_max(a: FixedPointValue, b: FixedPointValue) -> Result<FixedPointValue, ArithError> {
    a.same_format(&b)?;
    Ok(if a.raw >= b.raw { a } else { b })
}

pub fn fx_cmp(a: FixedPointValue, b: FixedPointValue) -> Result<Ordering, ArithError> {
    a.same_format(&b)?;
    Ok(a.raw.cmp(&b.raw))
}

/// Which number domain an evaluation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithMode {
    Exact,
    Fixed(FixedPointFormat),
}

impl fmt::Display for ArithMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithMode::Exact => f.write_str("exact"),
            ArithMode::Fixed(fmt) => fmt.fmt(f),
        }
    }
}

impl FromStr for ArithMode {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "exact" => Ok(ArithMode::Exact),
            other if other.starts_with("fx:") || other.starts_with("ufx:") => {
                Ok(ArithMode::Fixed(other.parse()?))
            }
            other => Err(ArithError::InvalidMode(other.to_string())),
        }
    }
}

/// A value in one of the two domains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Exact(Rational),
    Fixed(FixedPointValue),
}

impl Scalar {
    pub fn to_rational(&self) -> Rational {
        match self {
            Scalar::Exact(x) => x.clone(),
            Scalar::Fixed(v) => v.to_rational(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(x) => x.is_zero(),
            Scalar::Fixed(v) => v.raw == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Exact(x) => x.is_one(),
            Scalar::Fixed(v) => v.raw == v.format.scale(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(x) => x.is_negative(),
            Scalar::Fixed(v) => v.raw < 0,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(x) => f.write_str(&format_rational(x)),
            Scalar::Fixed(v) => v.fmt(f),
        }
    }
}

impl ArithMode {
    /// Brings a rational constant into this domain (quantising in fixed mode).
    pub fn scalar(&self, x: &Rational) -> Scalar {
        match self {
            ArithMode::Exact => Scalar::Exact(x.clone()),
            ArithMode::Fixed(fmt) => Scalar::Fixed(fx_encode(x, *fmt)),
        }
    }

    /// Whether `x` survives [`ArithMode::scalar`] unchanged.
    pub fn represents(&self, x: &Rational) -> bool {
        match self {
            ArithMode::Exact => true,
            ArithMode::Fixed(fmt) => fmt.represents(x),
        }
    }

    pub fn zero(&self) -> Scalar {
        match self {
            ArithMode::Exact => Scalar::Exact(Rational::zero()),
            ArithMode::Fixed(fmt) => Scalar::Fixed(fmt.zero()),
        }
    }

    pub fn format(&self) -> Option<FixedPointFormat> {
        match self {
            ArithMode::Exact => None,
            ArithMode::Fixed(fmt) => Some(*fmt),
        }
    }

    /// Whether `value` belongs to this domain (and, in fixed mode, to its format).
    pub fn owns(&self, value: &Scalar) -> bool {
        match (self, value) {
            (ArithMode::Exact, Scalar::Exact(_)) => true,
            (ArithMode::Fixed(fmt), Scalar::Fixed(v)) => {
                v.format == *fmt && v.raw >= fmt.min_raw() && v.raw <= fmt.max_raw()
            }
            _ => false,
        }
    }

    // The binary operations below panic on mixed domains: an evaluation
    // pipeline that produces one is a programming error.

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(x + y),
            (Scalar::Fixed(x), Scalar::Fixed(y)) => {
                Scalar::Fixed(fx_add(*x, *y).expect("mixed fixed-point formats"))
            }
            _ => panic!("mixed arithmetic domains in {self} evaluation"),
        }
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(x * y),
            (Scalar::Fixed(x), Scalar::Fixed(y)) => {
                Scalar::Fixed(fx_mul(*x, *y).expect("mixed fixed-point formats"))
            }
            _ => panic!("mixed arithmetic domains in {self} evaluation"),
        }
    }

    pub fn relu(&self, a: &Scalar) -> Scalar {
        match a {
            Scalar::Exact(x) => {
                if x.is_negative() {
                    Scalar::Exact(Rational::zero())
                } else {
                    a.clone()
                }
            }
            Scalar::Fixed(v) => Scalar::Fixed(fx_relu(*v)),
        }
    }
}

/// Number of bits needed for the magnitude of `n` (0 for 0).
pub fn bit_length(n: &BigInt) -> u64 {
    n.abs().bits()
}

/// Smallest `frac_bits` at which `x` is on the fixed-point grid, if any
/// (denominator must be a power of two).
pub fn required_frac_bits(x: &Rational) -> Option<u32> {
    let den = x.denom();
    let tz = den.trailing_zeros().unwrap_or(0);
    let odd = den >> tz;
    if odd.is_one() {
        u32::try_from(tz).ok()
    } else {
        None
    }
}

/// Floor of a rational (toward negative infinity).
pub fn floor(x: &Rational) -> BigInt {
    x.numer().div_floor(x.denom())
}
