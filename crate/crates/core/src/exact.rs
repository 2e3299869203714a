//! Exact intermediates for exact-then-round arithmetic.
//!
//! A [`Dyadic`] is `±mantissa × 2^exponent`. When `inexact` is set the true
//! magnitude lies strictly inside `(mantissa, mantissa + 1) × 2^exponent`;
//! producers must then keep at least 40 significant bits in the mantissa so
//! that every rounding position of a 32-bit-or-narrower target sits above
//! the unknown tail.

use std::cmp::Ordering;

/// Minimum mantissa width required when the inexact flag is set.
pub const MIN_INEXACT_BITS: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub negative: bool,
    pub mantissa: u128,
    pub exponent: i32,
    pub inexact: bool,
}

/// An exact real value, or one of the two non-finite markers a rounding
/// target needs to distinguish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactReal {
    Zero,
    /// Source of a NaR / NaN: invalid operation or non-finite input.
    NotReal,
    Finite(Dyadic),
}

impl Dyadic {
    /// Builds a canonical value: exact mantissas are made odd. Returns `None`
    /// for a zero mantissa.
    pub fn new(negative: bool, mantissa: u128, exponent: i32, inexact: bool) -> Option<Self> {
        if mantissa == 0 {
            return None;
        }
        debug_assert!(
            !inexact || bit_length(mantissa) >= MIN_INEXACT_BITS,
            "inexact dyadic needs a wide mantissa"
        );
        let (mantissa, exponent) = if inexact {
            (mantissa, exponent)
        } else {
            let tz = mantissa.trailing_zeros();
            (mantissa >> tz, exponent + tz as i32)
        };
        Some(Self {
            negative,
            mantissa,
            exponent,
            inexact,
        })
    }

    /// Exponent of the leading one: the value lies in `[2^s, 2^(s+1))`.
    pub fn scale(&self) -> i32 {
        self.exponent + bit_length(self.mantissa) as i32 - 1
    }

    pub fn negate(self) -> Self {
        Self {
            negative: !self.negative,
            ..self
        }
    }

    /// Nearest binary64, for diagnostics only.
    pub fn to_f64_approx(&self) -> f64 {
        let len = bit_length(self.mantissa) as i32;
        let shift = (len - 64).max(0);
        let top = (self.mantissa >> shift) as u64 as f64;
        let v = top * 2f64.powi(self.exponent + shift);
        if self.negative {
            -v
        } else {
            v
        }
    }
}

impl ExactReal {
    pub fn from_i64(value: i64) -> Self {
        match Dyadic::new(value < 0, value.unsigned_abs() as u128, 0, false) {
            Some(d) => ExactReal::Finite(d),
            None => ExactReal::Zero,
        }
    }

    /// Exact conversion of a binary64 value. Infinities and NaN map to
    /// [`ExactReal::NotReal`].
    pub fn from_f64(value: f64) -> Self {
        if !value.is_finite() {
            return ExactReal::NotReal;
        }
        if value == 0.0 {
            return ExactReal::Zero;
        }
        let bits = value.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7FF) as i32;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exponent) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        ExactReal::Finite(
            Dyadic::new(negative, mantissa as u128, exponent, false).expect("nonzero mantissa"),
        )
    }

    /// Builds `±mantissa × 2^exponent`, exact.
    pub fn from_parts(negative: bool, mantissa: u128, exponent: i32) -> Self {
        match Dyadic::new(negative, mantissa, exponent, false) {
            Some(d) => ExactReal::Finite(d),
            None => ExactReal::Zero,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            ExactReal::Finite(d) => ExactReal::Finite(d.negate()),
            other => other,
        }
    }
}

pub(crate) fn bit_length(x: u128) -> u32 {
    128 - x.leading_zeros()
}

/// Unsigned finite operand: `significand × 2^exponent`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Operand {
    pub negative: bool,
    pub significand: u64,
    pub exponent: i32,
}

// Operand significands sit with their leading one at this bit before
// alignment. Leaves headroom for the carry and 124 bits below it.
const ALIGN_TOP: u32 = 124;

fn align(op: &Operand) -> (u128, i32) {
    let len = 64 - op.significand.leading_zeros();
    let shift = ALIGN_TOP + 1 - len;
    ((op.significand as u128) << shift, op.exponent - shift as i32)
}

/// Exact sum with sticky collapse of bits far below the larger operand.
pub(crate) fn add(a: Operand, b: Operand) -> ExactReal {
    debug_assert!(a.significand != 0 && b.significand != 0);
    let (ma, ea) = align(&a);
    let (mb, eb) = align(&b);
    // order by magnitude
    let a_first = match ea.cmp(&eb) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => ma >= mb,
    };
    let ((big_m, big_e, big_neg), (small_m, small_e, small_neg)) = if a_first {
        ((ma, ea, a.negative), (mb, eb, b.negative))
    } else {
        ((mb, eb, b.negative), (ma, ea, a.negative))
    };
    let distance = (big_e - small_e) as u32;
    let (shifted, lost) = if distance >= 128 {
        (0, true)
    } else {
        let kept = small_m >> distance;
        (kept, kept << distance != small_m)
    };
    if big_neg == small_neg {
        // true = big + shifted + eps, eps in [0, 1) with eps > 0 iff lost
        ExactReal::Finite(
            Dyadic::new(big_neg, big_m + shifted, big_e, lost).expect("nonzero sum"),
        )
    } else if lost {
        // true = big - shifted - eps = (big - shifted - 1) + (1 - eps)
        ExactReal::Finite(
            Dyadic::new(big_neg, big_m - shifted - 1, big_e, true).expect("nonzero difference"),
        )
    } else {
        match Dyadic::new(big_neg, big_m - shifted, big_e, false) {
            Some(d) => ExactReal::Finite(d),
            None => ExactReal::Zero,
        }
    }
}

pub(crate) fn mul(a: Operand, b: Operand) -> ExactReal {
    let product = a.significand as u128 * b.significand as u128;
    ExactReal::from_parts(a.negative != b.negative, product, a.exponent + b.exponent)
}

/// Quotient to at least 64 significant bits, sticky from the remainder.
pub(crate) fn div(a: Operand, b: Operand) -> ExactReal {
    debug_assert!(a.significand < (1 << 32) && b.significand < (1 << 32));
    const EXTRA: u32 = 96;
    let dividend = (a.significand as u128) << EXTRA;
    let divisor = b.significand as u128;
    let quotient = dividend / divisor;
    let remainder = dividend % divisor;
    let negative = a.negative != b.negative;
    let exponent = a.exponent - b.exponent - EXTRA as i32;
    ExactReal::Finite(
        Dyadic::new(negative, quotient, exponent, remainder != 0).expect("nonzero quotient"),
    )
}

/// Position of the rounding boundary for a target whose least significant
/// retained bit has weight `2^lsb`: returns the retained integer, the guard
/// bit and whether anything below the guard is nonzero.
pub(crate) fn split_at(d: &Dyadic, lsb: i32) -> (u128, bool, bool) {
    let shift = lsb as i64 - d.exponent as i64;
    if shift <= 0 {
        let up = (-shift) as u32;
        debug_assert!(!d.inexact && bit_length(d.mantissa) + up <= 128);
        return (d.mantissa << up, false, d.inexact);
    }
    let shift = shift as u64;
    if shift > 128 {
        return (0, false, true);
    }
    if shift == 128 {
        let guard = d.mantissa >> 127 == 1;
        let rest = d.mantissa & !(1u128 << 127) != 0 || d.inexact;
        return (0, guard, rest);
    }
    let shift = shift as u32;
    let kept = d.mantissa >> shift;
    let guard = (d.mantissa >> (shift - 1)) & 1 == 1;
    let below_mask = (1u128 << (shift - 1)) - 1;
    let rest = d.mantissa & below_mask != 0 || d.inexact;
    (kept, guard, rest)
}
