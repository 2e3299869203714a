//! Software IEEE 754 binary16 (half precision) with round-to-nearest-even,
//! gradual underflow, signed zeros, infinities and a single canonical NaN.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::exact::{self, Dyadic, ExactReal, Operand};

const SIGN: u16 = 0x8000;
const EXP_MASK: u16 = 0x7C00;
const FRAC_MASK: u16 = 0x03FF;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Zero,
    Subnormal,
    Normal,
    Infinite,
    NaN,
}

/// A binary16 bit pattern. Equality is bitwise.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Binary16(u16);

impl fmt::Debug for Binary16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Binary16({:#06x} = {})", self.0, self.to_f64())
    }
}

/// Value of a binary16 pattern: an exact real, or one of the specials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HalfReal {
    Real(ExactReal),
    Infinite { negative: bool },
    NaN,
}

impl Binary16 {
    pub const ZERO: Self = Self(0);
    pub const NEG_ZERO: Self = Self(SIGN);
    pub const ONE: Self = Self(0x3C00);
    pub const MAX: Self = Self(0x7BFF);
    pub const MIN_POSITIVE_SUBNORMAL: Self = Self(0x0001);
    pub const MIN_POSITIVE_NORMAL: Self = Self(0x0400);
    pub const INFINITY: Self = Self(EXP_MASK);
    pub const NEG_INFINITY: Self = Self(SIGN | EXP_MASK);
    /// The quiet NaN every invalid operation returns.
    pub const NAN: Self = Self(0x7E00);

    pub const fn from_bits(bits: u16) -> Self {
        Self(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    pub fn classify(self) -> Class {
        let exp = self.0 & EXP_MASK;
        let frac = self.0 & FRAC_MASK;
        match (exp, frac) {
            (0, 0) => Class::Zero,
            (0, _) => Class::Subnormal,
            (EXP_MASK, 0) => Class::Infinite,
            (EXP_MASK, _) => Class::NaN,
            _ => Class::Normal,
        }
    }

    pub fn is_nan(self) -> bool {
        self.classify() == Class::NaN
    }

    pub fn is_infinite(self) -> bool {
        self.classify() == Class::Infinite
    }

    pub fn is_finite(self) -> bool {
        self.0 & EXP_MASK != EXP_MASK
    }

    pub fn is_zero(self) -> bool {
        self.0 & !SIGN == 0
    }

    pub fn is_sign_negative(self) -> bool {
        self.0 & SIGN != 0
    }

    fn operand(self) -> Operand {
        let biased = ((self.0 & EXP_MASK) >> 10) as i32;
        let frac = (self.0 & FRAC_MASK) as u64;
        let (significand, exponent) = if biased == 0 {
            (frac, -24)
        } else {
            (frac | 0x400, biased - 25)
        };
        Operand {
            negative: self.is_sign_negative(),
            significand,
            exponent,
        }
    }

    pub fn to_real(self) -> HalfReal {
        match self.classify() {
            Class::NaN => HalfReal::NaN,
            Class::Infinite => HalfReal::Infinite {
                negative: self.is_sign_negative(),
            },
            Class::Zero => HalfReal::Real(ExactReal::Zero),
            Class::Subnormal | Class::Normal => {
                let op = self.operand();
                HalfReal::Real(ExactReal::from_parts(
                    op.negative,
                    op.significand as u128,
                    op.exponent,
                ))
            }
        }
    }

    /// Correctly rounded conversion of an exact real. `NotReal` gives NaN.
    pub fn from_exact(x: &ExactReal) -> Self {
        match x {
            ExactReal::Zero => Self::ZERO,
            ExactReal::NotReal => Self::NAN,
            ExactReal::Finite(d) => Self(round(d)),
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return Self::NAN;
        }
        if x.is_infinite() {
            return if x > 0.0 {
                Self::INFINITY
            } else {
                Self::NEG_INFINITY
            };
        }
        if x == 0.0 {
            return if x.is_sign_negative() {
                Self::NEG_ZERO
            } else {
                Self::ZERO
            };
        }
        Self::from_exact(&ExactReal::from_f64(x))
    }

    /// Exact widening to binary64.
    pub fn to_f64(self) -> f64 {
        match self.classify() {
            Class::NaN => f64::NAN,
            Class::Infinite => {
                if self.is_sign_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            Class::Zero => {
                if self.is_sign_negative() {
                    -0.0
                } else {
                    0.0
                }
            }
            _ => {
                let op = self.operand();
                let v = op.significand as f64 * 2f64.powi(op.exponent);
                if op.negative {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// IEEE comparison: `None` when either side is NaN; `-0 == +0`.
    pub fn compare(self, other: Self) -> Option<Ordering> {
        if self.is_nan() || other.is_nan() {
            return None;
        }
        let key = |v: Self| -> i32 {
            if v.is_zero() {
                0
            } else if v.is_sign_negative() {
                -((v.0 & !SIGN) as i32)
            } else {
                v.0 as i32
            }
        };
        Some(key(self).cmp(&key(other)))
    }
}

fn round(d: &Dyadic) -> u16 {
    let sign = if d.negative { SIGN } else { 0 };
    let scale = d.scale();
    if scale >= 16 {
        return sign | EXP_MASK;
    }
    // weight of the last retained bit; fixed at 2^-24 below the normal range
    let lsb = (scale - 10).max(-24);
    let (kept, guard, rest) = exact::split_at(d, lsb);
    let mut q = kept as u32;
    if guard && (rest || q & 1 == 1) {
        q += 1;
    }
    let magnitude = if lsb == -24 {
        // subnormal or lowest normal binade: the pattern is q itself,
        // a carry into 0x400/0x800 lands on the right normal encoding
        q
    } else {
        (((scale + 15) as u32) << 10) + q - 0x400
    };
    sign | magnitude.min(EXP_MASK as u32) as u16
}

fn add_impl(a: Binary16, b: Binary16) -> Binary16 {
    use Class::*;
    match (a.classify(), b.classify()) {
        (NaN, _) | (_, NaN) => Binary16::NAN,
        (Infinite, Infinite) => {
            if a.is_sign_negative() == b.is_sign_negative() {
                a
            } else {
                Binary16::NAN
            }
        }
        (Infinite, _) => a,
        (_, Infinite) => b,
        (Zero, Zero) => {
            if a.is_sign_negative() && b.is_sign_negative() {
                Binary16::NEG_ZERO
            } else {
                Binary16::ZERO
            }
        }
        (Zero, _) => b,
        (_, Zero) => a,
        _ => Binary16::from_exact(&exact::add(a.operand(), b.operand())),
    }
}

fn signed_zero(negative: bool) -> Binary16 {
    if negative {
        Binary16::NEG_ZERO
    } else {
        Binary16::ZERO
    }
}

fn signed_inf(negative: bool) -> Binary16 {
    if negative {
        Binary16::NEG_INFINITY
    } else {
        Binary16::INFINITY
    }
}

fn mul_impl(a: Binary16, b: Binary16) -> Binary16 {
    use Class::*;
    let negative = a.is_sign_negative() != b.is_sign_negative();
    match (a.classify(), b.classify()) {
        (NaN, _) | (_, NaN) => Binary16::NAN,
        (Infinite, Zero) | (Zero, Infinite) => Binary16::NAN,
        (Infinite, _) | (_, Infinite) => signed_inf(negative),
        (Zero, _) | (_, Zero) => signed_zero(negative),
        _ => Binary16::from_exact(&exact::mul(a.operand(), b.operand())),
    }
}

fn div_impl(a: Binary16, b: Binary16) -> Binary16 {
    use Class::*;
    let negative = a.is_sign_negative() != b.is_sign_negative();
    match (a.classify(), b.classify()) {
        (NaN, _) | (_, NaN) => Binary16::NAN,
        (Infinite, Infinite) | (Zero, Zero) => Binary16::NAN,
        (Infinite, _) => signed_inf(negative),
        (_, Infinite) => signed_zero(negative),
        (_, Zero) => signed_inf(negative),
        (Zero, _) => signed_zero(negative),
        _ => Binary16::from_exact(&exact::div(a.operand(), b.operand())),
    }
}

impl Neg for Binary16 {
    type Output = Binary16;

    fn neg(self) -> Binary16 {
        Binary16(self.0 ^ SIGN)
    }
}

impl Add for Binary16 {
    type Output = Binary16;

    fn add(self, rhs: Binary16) -> Binary16 {
        add_impl(self, rhs)
    }
}

impl Sub for Binary16 {
    type Output = Binary16;

    fn sub(self, rhs: Binary16) -> Binary16 {
        add_impl(self, -rhs)
    }
}

impl Mul for Binary16 {
    type Output = Binary16;

    fn mul(self, rhs: Binary16) -> Binary16 {
        mul_impl(self, rhs)
    }
}

impl Div for Binary16 {
    type Output = Binary16;

    fn div(self, rhs: Binary16) -> Binary16 {
        div_impl(self, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(bits: u16) -> Binary16 {
        Binary16::from_bits(bits)
    }

    #[test]
    fn examples() {
        assert_eq!((h(0x3C00) + h(0x3C00)).to_bits(), 0x4000);
        // 65504 + 32 = 65536 >= 65520
        assert_eq!((Binary16::MAX + Binary16::from_f64(32.0)), Binary16::INFINITY);
        assert_eq!(Binary16::MAX + Binary16::from_f64(8.0), Binary16::MAX);
        assert_eq!(Binary16::ZERO * Binary16::INFINITY, Binary16::NAN);
        assert_eq!(Binary16::from_f64(65504.0).to_bits(), 0x7BFF);
        assert_eq!(Binary16::from_f64(65520.0), Binary16::INFINITY);
        assert_eq!(Binary16::from_f64(65519.99), Binary16::MAX);
        assert_eq!(Binary16::from_f64(2f64.powi(-24)).to_bits(), 0x0001);
        assert_eq!(Binary16::from_f64(2f64.powi(-25)).to_bits(), 0x0000);
        assert_eq!(Binary16::from_f64(-2f64.powi(-26)).to_bits(), 0x8000);
        assert_eq!(Binary16::from_f64(1.0).to_f64(), 1.0);
    }

    #[test]
    fn signed_zero_rules() {
        assert_eq!(Binary16::NEG_ZERO + Binary16::NEG_ZERO, Binary16::NEG_ZERO);
        assert_eq!(Binary16::NEG_ZERO + Binary16::ZERO, Binary16::ZERO);
        assert_eq!(Binary16::ONE - Binary16::ONE, Binary16::ZERO);
        assert_eq!(Binary16::NEG_ZERO - Binary16::ZERO, Binary16::NEG_ZERO);
        assert_eq!(-Binary16::ONE * Binary16::ZERO, Binary16::NEG_ZERO);
        assert_eq!(Binary16::ONE / Binary16::NEG_ZERO, Binary16::NEG_INFINITY);
        assert_eq!(Binary16::ZERO / Binary16::ZERO, Binary16::NAN);
        assert_eq!(Binary16::INFINITY - Binary16::INFINITY, Binary16::NAN);
    }

    #[test]
    fn subnormal_arithmetic() {
        let tiny = Binary16::MIN_POSITIVE_SUBNORMAL;
        assert_eq!((tiny + tiny).to_bits(), 0x0002);
        assert_eq!((Binary16::MIN_POSITIVE_NORMAL - tiny).to_bits(), 0x03FF);
        assert_eq!((h(0x03FF) + tiny).to_bits(), 0x0400);
        // half of the smallest subnormal ties to even zero
        assert_eq!((tiny / Binary16::from_f64(2.0)).to_bits(), 0x0000);
        assert_eq!((h(0x0003) / Binary16::from_f64(2.0)).to_bits(), 0x0002);
    }

    #[test]
    fn nan_is_canonical() {
        let payload = h(0x7C01);
        assert_eq!(payload + Binary16::ONE, Binary16::NAN);
        assert_eq!(Binary16::from_f64(f64::NAN), Binary16::NAN);
        assert!(payload.is_nan());
        assert_eq!(payload.compare(Binary16::ONE), None);
        assert_eq!(
            Binary16::NEG_ZERO.compare(Binary16::ZERO),
            Some(Ordering::Equal)
        );
        assert_eq!(
            h(0xBC00).compare(h(0x3C00)),
            Some(Ordering::Less)
        );
    }

    #[test]
    fn classification() {
        assert_eq!(h(0x0001).classify(), Class::Subnormal);
        assert_eq!(h(0x0400).classify(), Class::Normal);
        assert_eq!(h(0xFC00).classify(), Class::Infinite);
        assert_eq!(h(0x8000).classify(), Class::Zero);
        assert_eq!(h(0x7BFF).to_f64(), 65504.0);
    }
}
