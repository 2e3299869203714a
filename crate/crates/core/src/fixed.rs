//! Q16.16 signed fixed point with saturation and a sticky overflow flag.
//!
//! Add and subtract are exact until they saturate. Multiply and divide
//! round to nearest with ties away from zero. Any saturation, including
//! division by zero, sets `overflowed`, which then propagates through every
//! later operation that consumes the value.

use std::cmp::Ordering;
use std::fmt;

pub const FRACTION_BITS: u32 = 16;
const ONE_RAW: i32 = 1 << FRACTION_BITS;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FixedQ16 {
    raw: i32,
    overflowed: bool,
}

impl fmt::Debug for FixedQ16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedQ16({}", self.to_f64())?;
        if self.overflowed {
            write!(f, ", overflowed")?;
        }
        write!(f, ")")
    }
}

fn saturate(wide: i64) -> (i32, bool) {
    if wide > i32::MAX as i64 {
        (i32::MAX, true)
    } else if wide < i32::MIN as i64 {
        (i32::MIN, true)
    } else {
        (wide as i32, false)
    }
}

// round(num / den) with ties away from zero; den != 0
fn div_round_half_away(num: i64, den: i64) -> i64 {
    let negative = (num < 0) != (den < 0);
    let (n, d) = (num.unsigned_abs(), den.unsigned_abs());
    let q = (n / d) + u64::from((n % d) * 2 >= d);
    if negative {
        -(q as i64)
    } else {
        q as i64
    }
}

#[allow(clippy::should_implement_trait)]
impl FixedQ16 {
    pub const ZERO: Self = Self::from_raw(0);
    pub const ONE: Self = Self::from_raw(ONE_RAW);
    pub const MAX: Self = Self::from_raw(i32::MAX);
    pub const MIN: Self = Self::from_raw(i32::MIN);

    pub const fn from_raw(raw: i32) -> Self {
        Self {
            raw,
            overflowed: false,
        }
    }

    pub const fn raw(self) -> i32 {
        self.raw
    }

    pub const fn overflowed(self) -> bool {
        self.overflowed
    }

    /// Same value with the sticky flag cleared, for starting a new run.
    pub const fn reset(self) -> Self {
        Self::from_raw(self.raw)
    }

    pub fn from_int(value: i16) -> Self {
        Self::from_raw((value as i32) << FRACTION_BITS)
    }

    /// Nearest Q16.16 value, ties away from zero; saturates (and flags)
    /// outside the range. NaN gives zero with the flag set.
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return Self {
                raw: 0,
                overflowed: true,
            };
        }
        let scaled = (x * ONE_RAW as f64).round();
        if scaled > i32::MAX as f64 {
            Self {
                raw: i32::MAX,
                overflowed: true,
            }
        } else if scaled < i32::MIN as f64 {
            Self {
                raw: i32::MIN,
                overflowed: true,
            }
        } else {
            Self::from_raw(scaled as i32)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / ONE_RAW as f64
    }

    fn result(self, rhs: Self, wide: i64, forced: bool) -> Self {
        let (raw, saturated) = saturate(wide);
        Self {
            raw,
            overflowed: self.overflowed || rhs.overflowed || saturated || forced,
        }
    }

    pub fn add(self, rhs: Self) -> Self {
        self.result(rhs, self.raw as i64 + rhs.raw as i64, false)
    }

    pub fn sub(self, rhs: Self) -> Self {
        self.result(rhs, self.raw as i64 - rhs.raw as i64, false)
    }

    pub fn neg(self) -> Self {
        self.result(Self::ZERO, -(self.raw as i64), false)
    }

    pub fn mul(self, rhs: Self) -> Self {
        let product = self.raw as i64 * rhs.raw as i64;
        self.result(rhs, div_round_half_away(product, ONE_RAW as i64), false)
    }

    /// Division by zero saturates toward the dividend's sign (positive for
    /// a zero dividend) and flags overflow.
    pub fn div(self, rhs: Self) -> Self {
        if rhs.raw == 0 {
            let wide = if self.raw < 0 { i64::MIN } else { i64::MAX };
            return self.result(rhs, wide, true);
        }
        let numerator = (self.raw as i64) << FRACTION_BITS;
        self.result(rhs, div_round_half_away(numerator, rhs.raw as i64), false)
    }

    pub fn abs(self) -> Self {
        if self.raw < 0 {
            self.neg()
        } else {
            self
        }
    }

    pub fn compare(self, rhs: Self) -> Ordering {
        self.raw.cmp(&rhs.raw)
    }
}
