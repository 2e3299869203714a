//! One arithmetic interface over every scalar type the flow kernel runs in.
//!
//! A format is a small value that carries its own context (a posit
//! configuration, a tap) and hands out plain `Copy` scalars. All arithmetic
//! goes through the format object so the kernel never touches a concrete
//! number type.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::binary16::Binary16;
use crate::exact::ExactReal;
use crate::fixed::FixedQ16;
use crate::posit::{self, DecodedPosit, PositConfig, PositError};

#[allow(clippy::should_implement_trait, clippy::wrong_self_convention)]
pub trait ScalarFormat {
    type Value: Copy + Send + Sync + fmt::Debug;

    fn name(&self) -> String;

    /// Exact for every pixel value 0..=255.
    fn from_pixel(&self, pixel: u8) -> Self::Value;

    /// Nearest in-format value; used for thresholds.
    fn from_f64(&self, x: f64) -> Self::Value;

    fn add(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn sub(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn mul(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn div(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn neg(&self, a: Self::Value) -> Self::Value;

    /// `None` when either side is unordered (NaN, NaR).
    fn compare(&self, a: Self::Value, b: Self::Value) -> Option<Ordering>;

    fn is_exception(&self, a: Self::Value) -> bool;

    fn to_reference(&self, a: Self::Value) -> f64;

    fn zero(&self) -> Self::Value {
        self.from_pixel(0)
    }

    fn abs(&self, a: Self::Value) -> Self::Value {
        if self.compare(a, self.zero()) == Some(Ordering::Less) {
            self.neg(a)
        } else {
            a
        }
    }

    /// `pixel / norm` with both operands converted exactly and the quotient
    /// rounded in-format.
    fn from_norm_quotient(&self, pixel: u8, norm: u8) -> Self::Value {
        self.div(self.from_pixel(pixel), self.from_pixel(norm))
    }
}

/// Free-function form of [`ScalarFormat::from_norm_quotient`].
pub fn normalize_pixel<F: ScalarFormat>(fmt: &F, pixel: u8, norm: u8) -> F::Value {
    fmt.from_norm_quotient(pixel, norm)
}

/// Observer for the results of reference arithmetic.
pub trait Tap {
    fn record(&self, value: f64);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoTap;

impl Tap for NoTap {
    #[inline]
    fn record(&self, _value: f64) {}
}

/// Collects the distinct finite results of every add, sub, mul and div.
#[derive(Debug, Default)]
pub struct CollectTap {
    seen: RefCell<HashSet<u64>>,
}

impl CollectTap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.seen.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.borrow().is_empty()
    }

    /// Distinct recorded values in ascending order.
    pub fn unique_values(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.seen.borrow().iter().map(|b| f64::from_bits(*b)).collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

impl Tap for CollectTap {
    fn record(&self, value: f64) {
        if value.is_finite() {
            // -0.0 and 0.0 are the same data value
            let value = if value == 0.0 { 0.0 } else { value };
            self.seen.borrow_mut().insert(value.to_bits());
        }
    }
}

/// Sorted distinct values harvested by a tapped reference run.
pub fn tap_unique_values(fmt: &Reference<CollectTap>) -> Vec<f64> {
    fmt.tap().unique_values()
}

/// Plain binary64 arithmetic, optionally observed by a tap.
#[derive(Clone, Copy, Debug, Default)]
pub struct Reference<T = NoTap> {
    tap: T,
}

impl Reference<NoTap> {
    pub fn new() -> Self {
        Self { tap: NoTap }
    }
}

impl<T: Tap> Reference<T> {
    pub fn with_tap(tap: T) -> Self {
        Self { tap }
    }

    pub fn tap(&self) -> &T {
        &self.tap
    }

    pub fn into_tap(self) -> T {
        self.tap
    }

    #[inline]
    fn seen(&self, value: f64) -> f64 {
        self.tap.record(value);
        value
    }
}

impl<T: Tap> ScalarFormat for Reference<T> {
    type Value = f64;

    fn name(&self) -> String {
        "reference".to_string()
    }

    fn from_pixel(&self, pixel: u8) -> f64 {
        pixel as f64
    }

    fn from_f64(&self, x: f64) -> f64 {
        x
    }

    #[inline]
    fn add(&self, a: f64, b: f64) -> f64 {
        self.seen(a + b)
    }

    #[inline]
    fn sub(&self, a: f64, b: f64) -> f64 {
        self.seen(a - b)
    }

    #[inline]
    fn mul(&self, a: f64, b: f64) -> f64 {
        self.seen(a * b)
    }

    #[inline]
    fn div(&self, a: f64, b: f64) -> f64 {
        self.seen(a / b)
    }

    fn neg(&self, a: f64) -> f64 {
        -a
    }

    fn compare(&self, a: f64, b: f64) -> Option<Ordering> {
        a.partial_cmp(&b)
    }

    fn is_exception(&self, a: f64) -> bool {
        !a.is_finite()
    }

    fn to_reference(&self, a: f64) -> f64 {
        a
    }

    fn abs(&self, a: f64) -> f64 {
        a.abs()
    }
}

/// Widest configuration that gets a precomputed decode table.
const DECODE_TABLE_MAX_BITS: u32 = 16;

/// Posit arithmetic; scalars are raw n-bit patterns.
#[derive(Clone, Debug)]
pub struct PositFormat {
    config: PositConfig,
    decoded: Option<Arc<[DecodedPosit]>>,
}

impl PartialEq for PositFormat {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
    }
}

impl Eq for PositFormat {}

impl PositFormat {
    pub fn new(config: PositConfig) -> Self {
        let decoded = (config.n() <= DECODE_TABLE_MAX_BITS).then(|| {
            (0..1u32 << config.n())
                .map(|b| posit::decode_bits(b, config))
                .collect()
        });
        Self { config, decoded }
    }

    #[inline]
    fn decode(&self, bits: u32) -> DecodedPosit {
        match &self.decoded {
            Some(t) => t[bits as usize],
            None => posit::decode_bits(bits, self.config),
        }
    }

    pub fn config(&self) -> PositConfig {
        self.config
    }

    fn signed(&self, bits: u32) -> i32 {
        let pad = 32 - self.config.n();
        ((bits << pad) as i32) >> pad
    }
}

impl ScalarFormat for PositFormat {
    type Value = u32;

    fn name(&self) -> String {
        format!("posit:{},{}", self.config.n(), self.config.es())
    }

    fn from_pixel(&self, pixel: u8) -> u32 {
        posit::encode_bits(&ExactReal::from_i64(pixel as i64), self.config)
    }

    fn from_f64(&self, x: f64) -> u32 {
        posit::encode_bits(&ExactReal::from_f64(x), self.config)
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        posit::add_with(a, b, self.config, |x| self.decode(x))
    }

    fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        posit::mul_with(a, b, self.config, |x| self.decode(x))
    }

    fn div(&self, a: u32, b: u32) -> u32 {
        posit::div_with(a, b, self.config, |x| self.decode(x))
    }

    fn neg(&self, a: u32) -> u32 {
        posit::neg_bits(a, self.config)
    }

    fn compare(&self, a: u32, b: u32) -> Option<Ordering> {
        let nar = self.config.nar_bits();
        if a == nar || b == nar {
            return None;
        }
        Some(self.signed(a).cmp(&self.signed(b)))
    }

    fn is_exception(&self, a: u32) -> bool {
        a == self.config.nar_bits()
    }

    fn to_reference(&self, a: u32) -> f64 {
        posit::decoded_to_f64(self.decode(a))
    }
}

/// IEEE binary16 arithmetic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Float16;

impl ScalarFormat for Float16 {
    type Value = Binary16;

    fn name(&self) -> String {
        "float16".to_string()
    }

    fn from_pixel(&self, pixel: u8) -> Binary16 {
        Binary16::from_f64(pixel as f64)
    }

    fn from_f64(&self, x: f64) -> Binary16 {
        Binary16::from_f64(x)
    }

    fn add(&self, a: Binary16, b: Binary16) -> Binary16 {
        a + b
    }

    fn sub(&self, a: Binary16, b: Binary16) -> Binary16 {
        a - b
    }

    fn mul(&self, a: Binary16, b: Binary16) -> Binary16 {
        a * b
    }

    fn div(&self, a: Binary16, b: Binary16) -> Binary16 {
        a / b
    }

    fn neg(&self, a: Binary16) -> Binary16 {
        -a
    }

    fn compare(&self, a: Binary16, b: Binary16) -> Option<Ordering> {
        a.compare(b)
    }

    fn is_exception(&self, a: Binary16) -> bool {
        !a.is_finite()
    }

    fn to_reference(&self, a: Binary16) -> f64 {
        a.to_f64()
    }
}

/// Q16.16 fixed point; an overflowed value is the exception.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Q16;

impl ScalarFormat for Q16 {
    type Value = FixedQ16;

    fn name(&self) -> String {
        "q16".to_string()
    }

    fn from_pixel(&self, pixel: u8) -> FixedQ16 {
        FixedQ16::from_int(pixel as i16)
    }

    fn from_f64(&self, x: f64) -> FixedQ16 {
        FixedQ16::from_f64(x)
    }

    fn add(&self, a: FixedQ16, b: FixedQ16) -> FixedQ16 {
        a.add(b)
    }

    fn sub(&self, a: FixedQ16, b: FixedQ16) -> FixedQ16 {
        a.sub(b)
    }

    fn mul(&self, a: FixedQ16, b: FixedQ16) -> FixedQ16 {
        a.mul(b)
    }

    fn div(&self, a: FixedQ16, b: FixedQ16) -> FixedQ16 {
        a.div(b)
    }

    fn neg(&self, a: FixedQ16) -> FixedQ16 {
        a.neg()
    }

    fn compare(&self, a: FixedQ16, b: FixedQ16) -> Option<Ordering> {
        Some(a.compare(b))
    }

    fn is_exception(&self, a: FixedQ16) -> bool {
        a.overflowed()
    }

    fn to_reference(&self, a: FixedQ16) -> f64 {
        a.to_f64()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatSpecError {
    #[error("unknown format `{0}` (expected reference, posit:N,ES, float16 or q16)")]
    Unknown(String),
    #[error("malformed posit format `{0}` (expected posit:N,ES)")]
    MalformedPosit(String),
    #[error(transparent)]
    Posit(#[from] PositError),
}

/// A format named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatSpec {
    Reference,
    Posit(PositConfig),
    Float16,
    Q16,
}

impl FormatSpec {
    /// Default singularity threshold before in-format rounding.
    pub const DEFAULT_TAU: f64 = 1e-9;

    /// Default threshold for this format: 1e-9 rounded in-format, exact
    /// zero for Q16.16.
    pub fn default_tau(&self) -> f64 {
        match self {
            FormatSpec::Q16 => 0.0,
            _ => Self::DEFAULT_TAU,
        }
    }
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatSpec::Reference => write!(f, "reference"),
            FormatSpec::Posit(c) => write!(f, "posit:{},{}", c.n(), c.es()),
            FormatSpec::Float16 => write!(f, "float16"),
            FormatSpec::Q16 => write!(f, "q16"),
        }
    }
}

impl FromStr for FormatSpec {
    type Err = FormatSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "reference" | "ref" | "f64" | "binary64" => return Ok(FormatSpec::Reference),
            "float16" | "binary16" | "f16" | "half" => return Ok(FormatSpec::Float16),
            "q16" | "q16.16" | "fixed" => return Ok(FormatSpec::Q16),
            _ => {}
        }
        let Some(params) = t.strip_prefix("posit:") else {
            return Err(FormatSpecError::Unknown(s.to_string()));
        };
        let malformed = || FormatSpecError::MalformedPosit(s.to_string());
        let (n, es) = params.split_once(',').ok_or_else(malformed)?;
        let n: u32 = n.trim().parse().map_err(|_| malformed())?;
        let es: u32 = es.trim().parse().map_err(|_| malformed())?;
        Ok(FormatSpec::Posit(PositConfig::new(n, es)?))
    }
}
