//! Parametric posit(n, es) arithmetic for 2 ≤ n ≤ 32 and 0 ≤ es ≤ 4.
//!
//! Every operation is exact-then-round: operands are decoded to exact
//! binary rationals, combined in wide integer arithmetic (with a sticky bit
//! where the exact result would not fit), and encoded back by rounding the
//! infinitely long posit bit string to n bits, ties to the even pattern.
//! Magnitudes beyond maxpos clamp to maxpos and nonzero magnitudes below
//! minpos clamp to minpos, so a real result never becomes zero or NaR.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::exact::{self, bit_length, Dyadic, ExactReal, Operand};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PositError {
    #[error("unsupported posit configuration n={n}, es={es} (need 2 <= n <= 32, es <= min(4, n - 1))")]
    InvalidConfig { n: u32, es: u32 },
    #[error("bit pattern {bits:#x} does not fit in {n} bits")]
    PatternTooWide { bits: u32, n: u32 },
    #[error("operands use different configurations: {left} vs {right}")]
    ConfigMismatch {
        left: PositConfig,
        right: PositConfig,
    },
    #[error("NaR has no integer value")]
    NaRConversion,
}

/// Bit width and exponent size of a posit format. `useed = 2^(2^es)` is
/// always derived from `es`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositConfig {
    n: u32,
    es: u32,
}

impl PositConfig {
    pub const MAX_BITS: u32 = 32;
    pub const MAX_ES: u32 = 4;

    pub const P8E0: PositConfig = PositConfig { n: 8, es: 0 };
    pub const P8E1: PositConfig = PositConfig { n: 8, es: 1 };
    pub const P8E2: PositConfig = PositConfig { n: 8, es: 2 };
    pub const P16E1: PositConfig = PositConfig { n: 16, es: 1 };
    pub const P16E2: PositConfig = PositConfig { n: 16, es: 2 };
    pub const P32E2: PositConfig = PositConfig { n: 32, es: 2 };

    pub fn new(n: u32, es: u32) -> Result<Self, PositError> {
        if !(2..=Self::MAX_BITS).contains(&n) || es > Self::MAX_ES || es > n - 1 {
            return Err(PositError::InvalidConfig { n, es });
        }
        Ok(Self { n, es })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn es(&self) -> u32 {
        self.es
    }

    /// log2 of useed, i.e. `2^es`.
    pub fn useed_log2(&self) -> u32 {
        1 << self.es
    }

    /// Mask of the n valid pattern bits.
    pub fn mask(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    pub fn nar_bits(&self) -> u32 {
        1 << (self.n - 1)
    }

    pub fn maxpos_bits(&self) -> u32 {
        self.nar_bits() - 1
    }

    /// Largest scale: maxpos = 2^max_scale.
    pub fn max_scale(&self) -> i32 {
        ((self.n - 2) << self.es) as i32
    }

    pub fn zero(&self) -> Posit {
        Posit {
            bits: 0,
            config: *self,
        }
    }

    pub fn nar(&self) -> Posit {
        Posit {
            bits: self.nar_bits(),
            config: *self,
        }
    }

    pub fn one(&self) -> Posit {
        Posit {
            bits: 1 << (self.n - 2),
            config: *self,
        }
    }

    pub fn maxpos(&self) -> Posit {
        Posit {
            bits: self.maxpos_bits(),
            config: *self,
        }
    }

    pub fn minpos(&self) -> Posit {
        Posit {
            bits: 1,
            config: *self,
        }
    }

    /// Number of distinct bit patterns, `2^n`.
    pub fn pattern_count(&self) -> u64 {
        1u64 << self.n
    }
}

impl fmt::Display for PositConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "posit({},{})", self.n, self.es)
    }
}

/// Decoded form of a posit pattern. For `Real`, the value is exactly
/// `±2^scale × significand / 2^fraction_bits`, where `significand`
/// includes the hidden bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodedPosit {
    Zero,
    NaR,
    Real {
        negative: bool,
        scale: i32,
        significand: u32,
        fraction_bits: u32,
    },
}

impl DecodedPosit {
    fn operand(self) -> Option<Operand> {
        match self {
            DecodedPosit::Real {
                negative,
                scale,
                significand,
                fraction_bits,
            } => Some(Operand {
                negative,
                significand: significand as u64,
                exponent: scale - fraction_bits as i32,
            }),
            _ => None,
        }
    }
}

/// An n-bit posit pattern together with its configuration.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Posit {
    bits: u32,
    config: PositConfig,
}

impl fmt::Debug for Posit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{:#0width$x}",
            self.config,
            self.bits,
            width = (self.config.n as usize).div_ceil(4) + 2
        )
    }
}

impl Posit {
    pub fn from_bits(bits: u32, config: PositConfig) -> Result<Self, PositError> {
        if bits & !config.mask() != 0 {
            return Err(PositError::PatternTooWide { bits, n: config.n });
        }
        Ok(Self { bits, config })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn config(&self) -> PositConfig {
        self.config
    }

    pub fn is_nar(&self) -> bool {
        self.bits == self.config.nar_bits()
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// The pattern read as an n-bit two's-complement integer. Orders the
    /// same way as the represented reals (NaR sorts below everything).
    pub fn signed_bits(&self) -> i32 {
        let pad = 32 - self.config.n;
        ((self.bits << pad) as i32) >> pad
    }

    pub fn decode(&self) -> DecodedPosit {
        decode_bits(self.bits, self.config)
    }

    pub fn encode(x: &ExactReal, config: PositConfig) -> Self {
        Self {
            bits: encode_bits(x, config),
            config,
        }
    }

    pub fn to_exact(&self) -> ExactReal {
        match self.decode() {
            DecodedPosit::Zero => ExactReal::Zero,
            DecodedPosit::NaR => ExactReal::NotReal,
            DecodedPosit::Real {
                negative,
                scale,
                significand,
                fraction_bits,
            } => ExactReal::from_parts(
                negative,
                significand as u128,
                scale - fraction_bits as i32,
            ),
        }
    }

    /// Exact for every n ≤ 32 configuration; NaR maps to NaN.
    pub fn to_f64(&self) -> f64 {
        decoded_to_f64(self.decode())
    }

    pub fn from_f64(x: f64, config: PositConfig) -> Self {
        Self::encode(&ExactReal::from_f64(x), config)
    }

    /// Integer to posit, rounded like [`Posit::encode`].
    pub fn from_i32(value: i32, config: PositConfig) -> Self {
        Self::encode(&ExactReal::from_i64(value as i64), config)
    }

    /// Posit to integer: round to nearest, ties to even, saturating at the
    /// `i32` bounds.
    pub fn to_i32(&self) -> Result<i32, PositError> {
        match self.decode() {
            DecodedPosit::NaR => Err(PositError::NaRConversion),
            DecodedPosit::Zero => Ok(0),
            DecodedPosit::Real {
                negative,
                scale,
                significand,
                fraction_bits,
            } => {
                let magnitude: u64 = if scale >= 32 {
                    u64::MAX
                } else {
                    let d = Dyadic::new(
                        false,
                        significand as u128,
                        scale - fraction_bits as i32,
                        false,
                    )
                    .expect("nonzero significand");
                    let (kept, guard, rest) = exact::split_at(&d, 0);
                    let mut m = kept as u64;
                    if guard && (rest || m & 1 == 1) {
                        m += 1;
                    }
                    m
                };
                Ok(if negative {
                    if magnitude >= 1 << 31 {
                        i32::MIN
                    } else {
                        -(magnitude as i32)
                    }
                } else if magnitude > i32::MAX as u64 {
                    i32::MAX
                } else {
                    magnitude as i32
                })
            }
        }
    }

    fn check(&self, other: &Posit) -> Result<PositConfig, PositError> {
        if self.config != other.config {
            return Err(PositError::ConfigMismatch {
                left: self.config,
                right: other.config,
            });
        }
        Ok(self.config)
    }

    fn with_bits(&self, bits: u32) -> Posit {
        Posit {
            bits,
            config: self.config,
        }
    }

    /// Exact negation (two's complement of the pattern).
    pub fn neg(&self) -> Posit {
        self.with_bits(neg_bits(self.bits, self.config))
    }

    pub fn try_add(&self, rhs: &Posit) -> Result<Posit, PositError> {
        let cfg = self.check(rhs)?;
        Ok(self.with_bits(add_bits(self.bits, rhs.bits, cfg)))
    }

    pub fn try_sub(&self, rhs: &Posit) -> Result<Posit, PositError> {
        let cfg = self.check(rhs)?;
        Ok(self.with_bits(sub_bits(self.bits, rhs.bits, cfg)))
    }

    pub fn try_mul(&self, rhs: &Posit) -> Result<Posit, PositError> {
        let cfg = self.check(rhs)?;
        Ok(self.with_bits(mul_bits(self.bits, rhs.bits, cfg)))
    }

    pub fn try_div(&self, rhs: &Posit) -> Result<Posit, PositError> {
        let cfg = self.check(rhs)?;
        Ok(self.with_bits(div_bits(self.bits, rhs.bits, cfg)))
    }

    /// Real-value comparison; `None` when either side is NaR.
    pub fn compare(&self, rhs: &Posit) -> Result<Option<Ordering>, PositError> {
        self.check(rhs)?;
        if self.is_nar() || rhs.is_nar() {
            return Ok(None);
        }
        Ok(Some(self.signed_bits().cmp(&rhs.signed_bits())))
    }
}

pub(crate) fn decoded_to_f64(d: DecodedPosit) -> f64 {
    match d {
        DecodedPosit::Zero => 0.0,
        DecodedPosit::NaR => f64::NAN,
        DecodedPosit::Real {
            negative,
            scale,
            significand,
            fraction_bits,
        } => {
            // Two steps keep every intermediate power of two normal.
            let exponent = scale - fraction_bits as i32;
            let half = exponent / 2;
            let v = significand as f64 * 2f64.powi(half) * 2f64.powi(exponent - half);
            if negative {
                -v
            } else {
                v
            }
        }
    }
}

pub(crate) fn neg_bits(bits: u32, cfg: PositConfig) -> u32 {
    bits.wrapping_neg() & cfg.mask()
}

pub(crate) fn decode_bits(bits: u32, cfg: PositConfig) -> DecodedPosit {
    if bits == 0 {
        return DecodedPosit::Zero;
    }
    if bits == cfg.nar_bits() {
        return DecodedPosit::NaR;
    }
    let n = cfg.n;
    let negative = bits & cfg.nar_bits() != 0;
    let magnitude = if negative { neg_bits(bits, cfg) } else { bits };
    let body_len = n - 1;
    // body left-aligned in 32 bits: first regime bit at bit 31
    let aligned = magnitude << (33 - n);
    let regime_ones = aligned >> 31 == 1;
    let run = if regime_ones {
        (!aligned).leading_zeros()
    } else {
        aligned.leading_zeros()
    }
    .min(body_len);
    let k = if regime_ones {
        run as i32 - 1
    } else {
        -(run as i32)
    };
    let consumed = (run + 1).min(body_len);
    let remaining = body_len - consumed;
    let rest = (magnitude as u64) & ((1u64 << remaining) - 1);
    let exp_avail = cfg.es.min(remaining);
    let exponent = ((rest >> (remaining - exp_avail)) << (cfg.es - exp_avail)) as i32;
    let fraction_bits = remaining - exp_avail;
    let fraction = (rest & ((1u64 << fraction_bits) - 1)) as u32;
    DecodedPosit::Real {
        negative,
        scale: (k << cfg.es) + exponent,
        significand: (1 << fraction_bits) | fraction,
        fraction_bits,
    }
}

pub(crate) fn encode_bits(x: &ExactReal, cfg: PositConfig) -> u32 {
    match x {
        ExactReal::Zero => 0,
        ExactReal::NotReal => cfg.nar_bits(),
        ExactReal::Finite(d) => {
            let magnitude = encode_magnitude(d, cfg);
            if d.negative {
                neg_bits(magnitude, cfg)
            } else {
                magnitude
            }
        }
    }
}

fn low_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

fn encode_magnitude(d: &Dyadic, cfg: PositConfig) -> u32 {
    let es = cfg.es;
    let scale = d.scale() as i64;
    let max_scale = cfg.max_scale() as i64;
    if scale >= max_scale {
        return cfg.maxpos_bits();
    }
    if scale < -max_scale {
        return 1;
    }
    let k = scale >> es;
    let exponent = (scale & ((1 << es) - 1)) as u64;
    let (regime, regime_len) = if k >= 0 {
        (((1u64 << (k + 1)) - 1) << 1, k + 2)
    } else {
        (1u64, 1 - k)
    };
    let head = (regime << es) | exponent;
    let head_len = regime_len + es as i64;
    // n-1 body bits plus one guard bit
    let want = cfg.n as i64;
    let frac_len = bit_length(d.mantissa) as i64 - 1;
    let fraction = d.mantissa & low_mask(frac_len as u32);
    let (top, rest) = if head_len >= want {
        let drop = (head_len - want) as u32;
        let below = head & ((1u64 << drop) - 1);
        (head >> drop, below != 0 || fraction != 0 || d.inexact)
    } else {
        let need = (want - head_len) as u32;
        if frac_len >= need as i64 {
            let drop = (frac_len - need as i64) as u32;
            let taken = (fraction >> drop) as u64;
            (
                (head << need) | taken,
                fraction & low_mask(drop) != 0 || d.inexact,
            )
        } else {
            debug_assert!(!d.inexact, "inexact value narrower than the target");
            let taken = (fraction << (need as i64 - frac_len)) as u64;
            ((head << need) | taken, false)
        }
    };
    let guard = top & 1 == 1;
    let mut body = top >> 1;
    if guard && (rest || body & 1 == 1) {
        body += 1;
    }
    body as u32
}

/// Applies `op` to two real operands, decoding through `decode`.
#[inline]
fn binary(
    a: u32,
    b: u32,
    cfg: PositConfig,
    decode: impl Fn(u32) -> DecodedPosit,
    op: fn(Operand, Operand) -> ExactReal,
) -> u32 {
    let x = decode(a).operand().expect("real operand");
    let y = decode(b).operand().expect("real operand");
    encode_bits(&op(x, y), cfg)
}

pub(crate) fn add_with(a: u32, b: u32, cfg: PositConfig, decode: impl Fn(u32) -> DecodedPosit) -> u32 {
    let nar = cfg.nar_bits();
    if a == nar || b == nar {
        return nar;
    }
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    binary(a, b, cfg, decode, exact::add)
}

pub(crate) fn mul_with(a: u32, b: u32, cfg: PositConfig, decode: impl Fn(u32) -> DecodedPosit) -> u32 {
    let nar = cfg.nar_bits();
    if a == nar || b == nar {
        return nar;
    }
    if a == 0 || b == 0 {
        return 0;
    }
    binary(a, b, cfg, decode, exact::mul)
}

pub(crate) fn div_with(a: u32, b: u32, cfg: PositConfig, decode: impl Fn(u32) -> DecodedPosit) -> u32 {
    let nar = cfg.nar_bits();
    if a == nar || b == nar || b == 0 {
        return nar;
    }
    if a == 0 {
        return 0;
    }
    binary(a, b, cfg, decode, exact::div)
}

pub(crate) fn add_bits(a: u32, b: u32, cfg: PositConfig) -> u32 {
    add_with(a, b, cfg, |x| decode_bits(x, cfg))
}

pub(crate) fn sub_bits(a: u32, b: u32, cfg: PositConfig) -> u32 {
    add_bits(a, neg_bits(b, cfg), cfg)
}

pub(crate) fn mul_bits(a: u32, b: u32, cfg: PositConfig) -> u32 {
    mul_with(a, b, cfg, |x| decode_bits(x, cfg))
}

pub(crate) fn div_bits(a: u32, b: u32, cfg: PositConfig) -> u32 {
    div_with(a, b, cfg, |x| decode_bits(x, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(bits: u32, cfg: PositConfig) -> Posit {
        Posit::from_bits(bits, cfg).unwrap()
    }

    #[test]
    fn config_bounds() {
        assert!(PositConfig::new(1, 0).is_err());
        assert!(PositConfig::new(33, 0).is_err());
        assert!(PositConfig::new(16, 5).is_err());
        assert!(PositConfig::new(2, 2).is_err());
        assert!(PositConfig::new(2, 1).is_ok());
        assert!(PositConfig::new(32, 4).is_ok());
        assert_eq!(PositConfig::P16E2.useed_log2(), 4);
    }

    #[test]
    fn pattern_must_fit() {
        assert!(Posit::from_bits(0x1_0000, PositConfig::P16E2).is_err());
    }

    #[test]
    fn decode_named_patterns() {
        let cfg = PositConfig::P16E2;
        assert_eq!(p(0x4000, cfg).to_f64(), 1.0);
        assert_eq!(p(0x7FFF, cfg).to_f64(), 2f64.powi(56));
        assert_eq!(p(0x0001, PositConfig::P16E1).to_f64(), 2f64.powi(-28));
        assert_eq!(p(0x8000, cfg).decode(), DecodedPosit::NaR);
        assert_eq!(p(0, cfg).decode(), DecodedPosit::Zero);
        assert_eq!(p(0xC000, cfg).to_f64(), -1.0);
    }

    #[test]
    fn decode_pads_truncated_exponent() {
        // 0b0000_0000_0000_0010: regime of 13 zeros, terminator, one
        // exponent bit '0' then a padded zero.
        let d = p(0x0002, PositConfig::P16E2).decode();
        assert_eq!(
            d,
            DecodedPosit::Real {
                negative: false,
                scale: -52,
                significand: 1,
                fraction_bits: 0
            }
        );
        let d = p(0x0003, PositConfig::P16E2).decode();
        match d {
            DecodedPosit::Real { scale, .. } => assert_eq!(scale, -50),
            _ => panic!(),
        }
    }

    #[test]
    fn encode_examples() {
        let cfg = PositConfig::P16E2;
        assert_eq!(Posit::encode(&ExactReal::from_i64(1), cfg).bits(), 0x4000);
        assert_eq!(
            Posit::encode(&ExactReal::from_parts(false, 1, 60), cfg).bits(),
            0x7FFF
        );
        assert_eq!(
            Posit::encode(&ExactReal::from_parts(true, 1, 60), cfg).bits(),
            0x8001
        );
        assert_eq!(
            Posit::encode(&ExactReal::from_parts(false, 1, -200), cfg).bits(),
            0x0001
        );
        // midpoint of 1 and 1 + 2^-11 ties to the even pattern 0x4000
        let mid = ExactReal::from_parts(false, (1 << 12) + 1, -12);
        assert_eq!(Posit::encode(&mid, cfg).bits(), 0x4000);
        // midpoint of 1 + 2^-11 and 1 + 2^-10 ties up to 0x4002
        let mid = ExactReal::from_parts(false, (1 << 12) + 3, -12);
        assert_eq!(Posit::encode(&mid, cfg).bits(), 0x4002);
        assert_eq!(Posit::encode(&ExactReal::NotReal, cfg).bits(), 0x8000);
    }

    #[test]
    fn arithmetic_examples() {
        let c80 = PositConfig::P8E0;
        assert_eq!(p(0x40, c80).try_add(&p(0x40, c80)).unwrap().bits(), 0x60);
        let c82 = PositConfig::P8E2;
        let max = c82.maxpos();
        assert_eq!(max.try_mul(&max).unwrap(), max);
        assert_eq!(
            c82.minpos().try_mul(&c82.minpos()).unwrap(),
            c82.minpos()
        );
        let three = Posit::from_i32(3, c82);
        let q = c82.one().try_div(&three).unwrap();
        assert!((q.to_f64() - 1.0 / 3.0).abs() < 0.02);
        assert!(p(0x25, c82).try_div(&c82.zero()).unwrap().is_nar());
        assert!(c82.zero().try_div(&three).unwrap().is_zero());
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = PositConfig::P16E1.one();
        let b = PositConfig::P16E2.one();
        assert!(matches!(
            a.try_add(&b),
            Err(PositError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn integer_conversions() {
        let cfg = PositConfig::P16E2;
        assert_eq!(Posit::from_i32(255, cfg).to_f64(), 255.0);
        assert_eq!(Posit::from_i32(0, cfg).bits(), 0);
        assert_eq!(Posit::from_f64(2.5, cfg).to_i32().unwrap(), 2);
        assert_eq!(Posit::from_f64(3.5, cfg).to_i32().unwrap(), 4);
        assert_eq!(Posit::from_f64(-2.5, cfg).to_i32().unwrap(), -2);
        assert_eq!(cfg.maxpos().to_i32().unwrap(), i32::MAX);
        assert_eq!(cfg.maxpos().neg().to_i32().unwrap(), i32::MIN);
        assert_eq!(cfg.minpos().to_i32().unwrap(), 0);
        assert_eq!(cfg.nar().to_i32(), Err(PositError::NaRConversion));
        // integers beyond the significand width round
        let big = Posit::from_i32(i32::MAX, PositConfig::P32E2);
        assert_eq!(big.to_f64(), 2f64.powi(31));
    }

    #[test]
    fn two_bit_posits() {
        let cfg = PositConfig::new(2, 0).unwrap();
        assert_eq!(p(1, cfg).to_f64(), 1.0);
        assert_eq!(p(3, cfg).to_f64(), -1.0);
        assert_eq!(Posit::from_f64(5.0, cfg).bits(), 1);
        assert_eq!(Posit::from_f64(0.01, cfg).bits(), 1);
    }

    #[test]
    fn wide_configuration_extremes() {
        let cfg = PositConfig::new(32, 4).unwrap();
        assert_eq!(cfg.maxpos().to_f64(), 2f64.powi(480));
        assert_eq!(cfg.minpos().to_f64(), 2f64.powi(-480));
        let sum = cfg.maxpos().try_add(&cfg.minpos()).unwrap();
        assert_eq!(sum, cfg.maxpos());
        let diff = cfg.one().try_sub(&cfg.minpos()).unwrap();
        assert_eq!(diff, cfg.one());
    }
}
