//! Exact-rational reference model for the arithmetic formats.
//!
//! Shares no code with the formats it checks: patterns are decoded by
//! walking their bits, results are computed as unreduced big-integer
//! fractions, and rounding brackets the exact value between neighbouring
//! representable values found by search over the (monotone) pattern order.

use std::borrow::Cow;
use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::posit::PositConfig;

/// Arithmetic operation selector for conformance checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(&self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
        }
    }
}

/// `num / den` with `den > 0`, deliberately left unreduced.
#[derive(Clone, Debug)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

impl Rational {
    pub fn zero() -> Self {
        Self::from_integer(BigInt::zero())
    }

    pub fn from_integer(num: BigInt) -> Self {
        Self {
            num,
            den: BigInt::one(),
        }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_integer(BigInt::from(v))
    }

    /// `mantissa × 2^exponent`.
    pub fn dyadic(mantissa: BigInt, exponent: i64) -> Self {
        if exponent >= 0 {
            Self::from_integer(mantissa << exponent as usize)
        } else {
            Self {
                num: mantissa,
                den: BigInt::one() << (-exponent) as usize,
            }
        }
    }

    /// Exact value of a binary64 number (finite only).
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7FF) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), biased - 1075)
        };
        let m = BigInt::from(m);
        let m = if bits >> 63 == 1 { -m } else { m };
        Some(Self::dyadic(m, e))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self {
            num: self.num.abs(),
            den: self.den.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self {
                num: &self.num + &o.num,
                den: self.den.clone(),
            };
        }
        Self {
            num: &self.num * &o.den + &o.num * &self.den,
            den: &self.den * &o.den,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            num: &self.num * &o.num,
            den: &self.den * &o.den,
        }
    }

    /// `None` for division by zero.
    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        let (num, den) = (&self.num * &o.den, &self.den * &o.num);
        Some(if den.is_negative() {
            Self {
                num: -num,
                den: -den,
            }
        } else {
            Self { num, den }
        })
    }

    pub fn half(&self) -> Self {
        Self {
            num: self.num.clone(),
            den: &self.den << 1usize,
        }
    }

    /// Nearest-ish binary64; used only to seed searches.
    pub fn approx_f64(&self) -> f64 {
        fn top(x: &BigInt) -> (f64, i64) {
            let len = x.bits() as i64;
            let shift = (len - 62).max(0);
            let t = (x >> shift as usize).to_f64().unwrap_or(0.0);
            (t, shift)
        }
        let (n, ns) = top(&self.num);
        let (d, ds) = top(&self.den);
        let exp = (ns - ds).clamp(-2000, 2000) as i32;
        (n / d) * 2f64.powi(exp / 2) * 2f64.powi(exp - exp / 2)
    }

    /// Round to the nearest integer, ties to even.
    pub fn round_half_even(&self) -> BigInt {
        let two = BigInt::from(2);
        let twice = &self.num * &two;
        // floor(num/den)
        let floor = num_integer::Integer::div_floor(&self.num, &self.den);
        let remainder2 = twice - &floor * &self.den * &two;
        match remainder2.cmp(&self.den) {
            Ordering::Less => floor,
            Ordering::Greater => floor + 1,
            Ordering::Equal => {
                if (&floor % &two).is_zero() {
                    floor
                } else {
                    floor + 1
                }
            }
        }
    }

    /// `round(self × 2^shift)` to an integer, ties away from zero.
    pub fn scaled_round_half_away(&self, shift: u32) -> BigInt {
        let scaled = &self.num << shift as usize;
        let magnitude = scaled.abs();
        let two = BigInt::from(2);
        let q = num_integer::Integer::div_floor(&(&magnitude * &two + &self.den), &(&self.den * &two));
        if scaled.sign() == Sign::Minus {
            -q
        } else {
            q
        }
    }
}

impl PartialEq for Rational {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Self) -> Ordering {
        if self.den == o.den {
            return self.num.cmp(&o.num);
        }
        (&self.num * &o.den).cmp(&(&o.num * &self.den))
    }
}

fn pattern_bits_msb_first(bits: u64, width: u32) -> Vec<bool> {
    (0..width).rev().map(|i| (bits >> i) & 1 == 1).collect()
}

/// Value of an n-bit posit pattern read straight off the bit string.
/// `None` for NaR. Supports n up to 33 so midpoints of 32-bit formats
/// can be evaluated.
pub fn posit_value(bits: u64, n: u32, es: u32) -> Option<Rational> {
    let modulus = 1u64 << n;
    let bits = bits % modulus;
    if bits == 0 {
        return Some(Rational::zero());
    }
    if bits == modulus / 2 {
        return None;
    }
    let negative = bits >= modulus / 2;
    let magnitude = if negative { modulus - bits } else { bits };
    let body = pattern_bits_msb_first(magnitude, n)[1..].to_vec();
    let first = body[0];
    let run = body.iter().take_while(|&&b| b == first).count();
    let k: i64 = if first { run as i64 - 1 } else { -(run as i64) };
    let mut cursor = run + 1;
    let mut exponent: i64 = 0;
    for _ in 0..es {
        exponent *= 2;
        if cursor < body.len() && body[cursor] {
            exponent += 1;
        }
        cursor += 1;
    }
    let mut significand = BigInt::one();
    let mut fraction_bits = 0i64;
    while cursor < body.len() {
        significand = significand * 2 + u8::from(body[cursor]);
        fraction_bits += 1;
        cursor += 1;
    }
    let scale = k * (1i64 << es) + exponent;
    let significand = if negative { -significand } else { significand };
    Some(Rational::dyadic(significand, scale - fraction_bits))
}

/// Either an exact real or the binary16 specials.
#[derive(Clone, Debug)]
pub enum HalfValue {
    Finite { value: Rational, negative_zero: bool },
    Infinite { negative: bool },
    NaN,
}

/// Value of a binary16 pattern per the IEEE 754 field definitions.
pub fn half_value(bits: u16) -> HalfValue {
    let negative = bits >> 15 == 1;
    let exp = ((bits >> 10) & 0x1F) as i64;
    let frac = (bits & 0x3FF) as i64;
    if exp == 31 {
        return if frac == 0 {
            HalfValue::Infinite { negative }
        } else {
            HalfValue::NaN
        };
    }
    let (m, e) = if exp == 0 {
        (frac, -24)
    } else {
        (frac + 1024, exp - 25)
    };
    let m = if negative { -m } else { m };
    HalfValue::Finite {
        value: Rational::dyadic(BigInt::from(m), e),
        negative_zero: negative && m == 0,
    }
}

struct Table {
    values: Vec<Rational>,
    hints: Vec<f64>,
}

impl Table {
    fn build(values: Vec<Rational>) -> Self {
        let hints = values.iter().map(Rational::approx_f64).collect();
        Self { values, hints }
    }

    /// Largest index `i` in `lo..=hi` with `values[i] <= x`, given
    /// `values[lo] <= x`; also reports whether `values[i] == x`.
    fn floor_index(&self, x: &Rational, approx: f64, lo: usize, hi: usize) -> (usize, bool) {
        let guess = self.hints.partition_point(|h| *h <= approx);
        let mut i = guess.saturating_sub(1).clamp(lo, hi);
        let mut at = self.values[i].cmp(x);
        while i > lo && at == Ordering::Greater {
            i -= 1;
            at = self.values[i].cmp(x);
        }
        while i < hi && self.values[i + 1] <= *x {
            i += 1;
            at = self.values[i].cmp(x);
        }
        (i, at == Ordering::Equal)
    }
}

/// Reference rounding and arithmetic for one posit configuration.
pub struct PositOracle {
    config: PositConfig,
    // positive patterns 0..=maxpos, for n <= 16
    table: Option<Table>,
    // midpoints[i] lies between patterns i and i + 1
    midpoints: Vec<Rational>,
}

impl PositOracle {
    const TABLE_LIMIT: u32 = 16;

    pub fn new(config: PositConfig) -> Self {
        let table = (config.n() <= Self::TABLE_LIMIT).then(|| {
            let max = config.maxpos_bits() as u64;
            Table::build(
                (0..=max)
                    .map(|b| posit_value(b, config.n(), config.es()).expect("real"))
                    .collect(),
            )
        });
        let midpoints = if table.is_some() {
            (0..config.maxpos_bits() as u64)
                .map(|b| posit_value(2 * b + 1, config.n() + 1, config.es()).expect("real"))
                .collect()
        } else {
            Vec::new()
        };
        Self {
            config,
            table,
            midpoints,
        }
    }

    pub fn config(&self) -> PositConfig {
        self.config
    }

    fn value_cmp(&self, bits: u32, x: &Rational) -> Ordering {
        match &self.table {
            Some(t) => t.values[bits as usize].cmp(x),
            None => posit_value(bits as u64, self.config.n(), self.config.es())
                .expect("real")
                .cmp(x),
        }
    }

    /// Exact value of a pattern; `None` for NaR.
    pub fn value(&self, bits: u32) -> Option<Rational> {
        let Some(t) = &self.table else {
            return posit_value(bits as u64, self.config.n(), self.config.es());
        };
        if bits == self.config.nar_bits() {
            None
        } else if bits < self.config.nar_bits() {
            Some(t.values[bits as usize].clone())
        } else {
            let magnitude = bits.wrapping_neg() & self.config.mask();
            Some(t.values[magnitude as usize].neg())
        }
    }

    fn midpoint(&self, lo: u32) -> Cow<'_, Rational> {
        match self.midpoints.get(lo as usize) {
            Some(m) => Cow::Borrowed(m),
            None => Cow::Owned(
                posit_value(2 * lo as u64 + 1, self.config.n() + 1, self.config.es())
                    .expect("real midpoint"),
            ),
        }
    }

    /// Rounds an exact real to the posit format.
    pub fn round(&self, x: &Rational) -> u32 {
        if x.is_zero() {
            return 0;
        }
        let max = self.config.maxpos_bits();
        let ax = x.abs();
        let approx = ax.approx_f64();
        // the hint only short-cuts cases far from either clamp boundary
        let (above_max, below_min) = match &self.table {
            Some(t) if approx < t.hints[max as usize] * 0.5 && approx > t.hints[1] * 2.0 => {
                (false, false)
            }
            _ => (
                self.value_cmp(max, &ax) != Ordering::Greater,
                self.value_cmp(1, &ax) != Ordering::Less,
            ),
        };
        let magnitude = if above_max {
            max
        } else if below_min {
            1
        } else {
            // value(lo) < ax < value(max)
            let (lo, exact) = match &self.table {
                Some(t) => {
                    let (i, exact) = t.floor_index(&ax, approx, 1, max as usize - 1);
                    (i as u32, exact)
                }
                None => {
                    let (mut lo, mut hi) = (1u32, max);
                    while hi - lo > 1 {
                        let mid = lo + (hi - lo) / 2;
                        if self.value_cmp(mid, &ax) == Ordering::Greater {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    (lo, self.value_cmp(lo, &ax) == Ordering::Equal)
                }
            };
            if exact {
                lo
            } else {
                // midpoint is the (n+1)-bit pattern between lo and lo + 1
                let midpoint = self.midpoint(lo);
                match ax.cmp(&*midpoint) {
                    Ordering::Less => lo,
                    Ordering::Greater => lo + 1,
                    Ordering::Equal => {
                        if lo % 2 == 0 {
                            lo
                        } else {
                            lo + 1
                        }
                    }
                }
            }
        };
        if x.is_negative() {
            magnitude.wrapping_neg() & self.config.mask()
        } else {
            magnitude
        }
    }

    pub fn apply(&self, op: Op, a: u32, b: u32) -> u32 {
        let nar = self.config.nar_bits();
        let (Some(x), Some(y)) = (self.value(a), self.value(b)) else {
            return nar;
        };
        let exact = match op {
            Op::Add => x.add(&y),
            Op::Sub => x.sub(&y),
            Op::Mul => x.mul(&y),
            Op::Div => match x.div(&y) {
                Some(q) => q,
                None => return nar,
            },
        };
        self.round(&exact)
    }

    /// Integer to posit.
    pub fn from_integer(&self, i: i64) -> u32 {
        self.round(&Rational::from_i64(i))
    }

    /// Posit to integer, nearest-even, saturating at `i32`.
    pub fn to_integer(&self, bits: u32) -> Option<i32> {
        let v = self.value(bits)?;
        let r = v.round_half_even();
        Some(
            r.clamp(BigInt::from(i32::MIN), BigInt::from(i32::MAX))
                .to_i32()
                .expect("clamped"),
        )
    }

}

/// Canonical quiet NaN produced for every invalid binary16 operation.
pub const HALF_NAN: u16 = 0x7E00;
const HALF_INF: u16 = 0x7C00;
const HALF_MAX_FINITE: u16 = 0x7BFF;

/// Reference rounding and arithmetic for IEEE 754 binary16.
pub struct Binary16Oracle {
    // patterns 0..=0x7BFF, then 2^16 standing in for the first value past
    // the largest finite one
    table: Table,
}

impl Default for Binary16Oracle {
    fn default() -> Self {
        Self::new()
    }
}

impl Binary16Oracle {
    pub fn new() -> Self {
        let mut values: Vec<Rational> = (0..=HALF_MAX_FINITE)
            .map(|b| match half_value(b) {
                HalfValue::Finite { value, .. } => value,
                _ => unreachable!("finite range"),
            })
            .collect();
        values.push(Rational::dyadic(BigInt::one(), 16));
        Self {
            table: Table::build(values),
        }
    }

    /// Round-to-nearest-even of a nonzero exact real; a zero input gives +0.
    pub fn round(&self, x: &Rational) -> u16 {
        let sign = if x.is_negative() { 0x8000 } else { 0 };
        let ax = x.abs();
        let top = HALF_INF as usize;
        let magnitude = if self.table.values[top] <= ax {
            HALF_INF
        } else {
            let (lo, exact) = self.table.floor_index(&ax, ax.approx_f64(), 0, top - 1);
            if exact {
                lo as u16
            } else {
                let midpoint = self.table.values[lo].add(&self.table.values[lo + 1]).half();
                match ax.cmp(&midpoint) {
                    Ordering::Less => lo as u16,
                    Ordering::Greater => lo as u16 + 1,
                    Ordering::Equal => {
                        if lo % 2 == 0 {
                            lo as u16
                        } else {
                            lo as u16 + 1
                        }
                    }
                }
            }
        };
        sign | magnitude
    }

    pub fn apply(&self, op: Op, a: u16, b: u16) -> u16 {
        use HalfValue::*;
        let (x, y) = (half_value(a), half_value(b));
        let sign_a = a >> 15 == 1;
        let sign_b = b >> 15 == 1;
        let inf = |negative: bool| if negative { 0xFC00 } else { HALF_INF };
        let zero = |negative: bool| if negative { 0x8000 } else { 0 };
        // reduce sub to add of the negation
        let (op, y, sign_b) = match (op, y) {
            (Op::Sub, Finite { value, negative_zero }) => {
                let nz = value.is_zero() && !negative_zero;
                (Op::Add, Finite { value: value.neg(), negative_zero: nz }, !sign_b)
            }
            (Op::Sub, Infinite { negative }) => (Op::Add, Infinite { negative: !negative }, !sign_b),
            (op, y) => (op, y, sign_b),
        };
        match (op, &x, &y) {
            (_, NaN, _) | (_, _, NaN) => HALF_NAN,
            (Op::Add, Infinite { negative: p }, Infinite { negative: q }) => {
                if p == q {
                    inf(*p)
                } else {
                    HALF_NAN
                }
            }
            (Op::Add, Infinite { negative }, _) | (Op::Add, _, Infinite { negative }) => inf(*negative),
            (Op::Add, Finite { value: u, .. }, Finite { value: v, .. }) => {
                let s = u.add(v);
                if s.is_zero() {
                    // exact zero sum: -0 only when both addends are -0
                    zero(u.is_zero() && v.is_zero() && sign_a && sign_b)
                } else {
                    self.round(&s)
                }
            }
            (Op::Mul, _, _) => {
                let negative = sign_a != sign_b;
                match (&x, &y) {
                    (Infinite { .. }, Finite { value, .. }) | (Finite { value, .. }, Infinite { .. }) => {
                        if value.is_zero() {
                            HALF_NAN
                        } else {
                            inf(negative)
                        }
                    }
                    (Infinite { .. }, Infinite { .. }) => inf(negative),
                    (Finite { value: u, .. }, Finite { value: v, .. }) => {
                        let p = u.mul(v);
                        if p.is_zero() {
                            zero(negative)
                        } else {
                            let r = self.round(&p);
                            if r & 0x7FFF == 0 {
                                zero(negative)
                            } else {
                                r
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
            (Op::Div, _, _) => {
                let negative = sign_a != sign_b;
                match (&x, &y) {
                    (Infinite { .. }, Infinite { .. }) => HALF_NAN,
                    (Infinite { .. }, Finite { .. }) => inf(negative),
                    (Finite { .. }, Infinite { .. }) => zero(negative),
                    (Finite { value: u, .. }, Finite { value: v, .. }) => {
                        if v.is_zero() {
                            if u.is_zero() {
                                HALF_NAN
                            } else {
                                inf(negative)
                            }
                        } else if u.is_zero() {
                            zero(negative)
                        } else {
                            let r = self.round(&u.div(v).expect("nonzero divisor"));
                            if r & 0x7FFF == 0 {
                                zero(negative)
                            } else {
                                r
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
            (Op::Sub, _, _) => unreachable!("rewritten as add"),
        }
    }

    /// Exact real to binary16 (round to nearest even, signed zero kept).
    pub fn from_rational(&self, x: &Rational) -> u16 {
        if x.is_zero() {
            0
        } else {
            self.round(x)
        }
    }
}

/// Q16.16 reference: exact quotient or product rounded to a multiple of
/// 2^-16, ties away from zero, saturated to the i32 range. Returns the raw
/// value and whether saturation happened.
pub fn q16_round(x: &Rational) -> (i32, bool) {
    let raw = x.scaled_round_half_away(16);
    if raw > BigInt::from(i32::MAX) {
        (i32::MAX, true)
    } else if raw < BigInt::from(i32::MIN) {
        (i32::MIN, true)
    } else {
        (raw.to_i32().expect("in range"), false)
    }
}

pub fn q16_value(raw: i32) -> Rational {
    Rational::dyadic(BigInt::from(raw), -16)
}
