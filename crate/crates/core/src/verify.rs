//! Conformance runs: every operand pair of a suite is evaluated by the
//! format implementation and by the exact-rational oracle, and the result
//! patterns must match bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::binary16::Binary16;
use crate::fixed::FixedQ16;
use crate::oracle::{self, Binary16Oracle, Op, PositOracle};
use crate::posit::{self, PositConfig};

/// Largest posit width for which the all-pairs suite is offered.
pub const EXHAUSTIVE_MAX_BITS: u32 = 12;
/// Mismatches kept for the dump; the counts are always complete.
pub const MISMATCH_DUMP_LIMIT: usize = 1000;
const CHUNK: usize = 1 << 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("exhaustive verification is limited to n <= {EXHAUSTIVE_MAX_BITS} (got {0})")]
    TooWideForExhaustive(PositConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub op: Op,
    pub a: u32,
    pub b: u32,
    pub expected: u32,
    pub actual: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpTally {
    pub op: Op,
    pub checked: u64,
    pub mismatches: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConformanceReport {
    pub format: String,
    pub suite: String,
    /// Hex digits used when printing patterns.
    pub pattern_width: usize,
    pub tallies: Vec<OpTally>,
    pub mismatches: Vec<Mismatch>,
}

impl ConformanceReport {
    pub fn checked(&self) -> u64 {
        self.tallies.iter().map(|t| t.checked).sum()
    }

    pub fn mismatch_count(&self) -> u64 {
        self.tallies.iter().map(|t| t.mismatches).sum()
    }

    pub fn passed(&self) -> bool {
        self.mismatch_count() == 0
    }
}

/// Runs `pairs` through both evaluators, chunked so the work parallelises
/// while the result (including mismatch order) stays deterministic.
fn run_pairs<P, I, R>(
    format: String,
    suite: String,
    pattern_width: usize,
    chunks: usize,
    pairs_of_chunk: P,
    implementation: I,
    reference: R,
) -> ConformanceReport
where
    P: Fn(usize) -> Vec<(u32, u32)> + Sync,
    I: Fn(Op, u32, u32) -> u32 + Sync,
    R: Fn(Op, u32, u32) -> u32 + Sync,
{
    let per_chunk: Vec<(Vec<u64>, Vec<Mismatch>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let pairs = pairs_of_chunk(c);
            let mut bad = vec![0u64; Op::ALL.len()];
            let mut dump = Vec::new();
            for &(a, b) in &pairs {
                for (slot, op) in Op::ALL.iter().enumerate() {
                    let actual = implementation(*op, a, b);
                    let expected = reference(*op, a, b);
                    if actual != expected {
                        bad[slot] += 1;
                        if dump.len() < MISMATCH_DUMP_LIMIT {
                            dump.push(Mismatch {
                                op: *op,
                                a,
                                b,
                                expected,
                                actual,
                            });
                        }
                    }
                }
            }
            (bad, dump, pairs.len() as u64)
        })
        .collect();

    let mut tallies: Vec<OpTally> = Op::ALL
        .iter()
        .map(|&op| OpTally {
            op,
            checked: 0,
            mismatches: 0,
        })
        .collect();
    let mut mismatches = Vec::new();
    for (bad, dump, count) in per_chunk {
        for (t, b) in tallies.iter_mut().zip(bad) {
            t.checked += count;
            t.mismatches += b;
        }
        let room = MISMATCH_DUMP_LIMIT - mismatches.len();
        mismatches.extend(dump.into_iter().take(room));
    }
    ConformanceReport {
        format,
        suite,
        pattern_width,
        tallies,
        mismatches,
    }
}

fn posit_impl(cfg: PositConfig) -> impl Fn(Op, u32, u32) -> u32 + Sync {
    move |op, a, b| match op {
        Op::Add => posit::add_bits(a, b, cfg),
        Op::Sub => posit::sub_bits(a, b, cfg),
        Op::Mul => posit::mul_bits(a, b, cfg),
        Op::Div => posit::div_bits(a, b, cfg),
    }
}

fn hex_width(bits: u32) -> usize {
    (bits as usize).div_ceil(4)
}

/// All `2^n × 2^n` operand pairs under add, sub, mul and div.
pub fn posit_exhaustive(cfg: PositConfig) -> Result<ConformanceReport, VerifyError> {
    if cfg.n() > EXHAUSTIVE_MAX_BITS {
        return Err(VerifyError::TooWideForExhaustive(cfg));
    }
    let oracle = PositOracle::new(cfg);
    let count = cfg.pattern_count() as usize;
    let total = count * count;
    let chunks = total.div_ceil(CHUNK);
    Ok(run_pairs(
        cfg.to_string(),
        "exhaustive".into(),
        hex_width(cfg.n()),
        chunks,
        |c| {
            (c * CHUNK..((c + 1) * CHUNK).min(total))
                .map(|i| ((i / count) as u32, (i % count) as u32))
                .collect()
        },
        posit_impl(cfg),
        |op, a, b| oracle.apply(op, a, b),
    ))
}

/// `{0, NaR, ±minpos, ±2·minpos, ±maxpos, ±(maxpos − ulp), ±1, ±(1 ± ulp)}`
/// as patterns.
pub fn posit_corner_patterns(cfg: PositConfig) -> Vec<u32> {
    let one = cfg.one().bits();
    let mut v = vec![
        0,
        cfg.nar_bits(),
        1,
        2,
        cfg.maxpos_bits(),
        cfg.maxpos_bits() - 1,
        one,
        one + 1,
        one - 1,
    ];
    let negatives: Vec<u32> = v[2..]
        .iter()
        .map(|&b| posit::neg_bits(b, cfg))
        .collect();
    v.extend(negatives);
    v.sort_unstable();
    v.dedup();
    v
}

fn corner_pairs(corners: &[u32]) -> Vec<(u32, u32)> {
    corners
        .iter()
        .flat_map(|&a| corners.iter().map(move |&b| (a, b)))
        .collect()
}

/// Every pair drawn from the corner set plus `samples` uniformly random
/// pairs from a ChaCha8 stream seeded with `seed`.
pub fn posit_sampled(cfg: PositConfig, samples: u64, seed: u64) -> ConformanceReport {
    let oracle = PositOracle::new(cfg);
    let corners = corner_pairs(&posit_corner_patterns(cfg));
    let mask = cfg.mask();
    let random_chunks = (samples as usize).div_ceil(CHUNK);
    run_pairs(
        cfg.to_string(),
        format!("sampled(seed={seed}, samples={samples})"),
        hex_width(cfg.n()),
        random_chunks + 1,
        |c| {
            if c == 0 {
                return corners.clone();
            }
            let start = (c - 1) * CHUNK;
            let len = CHUNK.min(samples as usize - start);
            let mut rng = chunk_rng(seed, c as u64);
            (0..len)
                .map(|_| (rng.gen::<u32>() & mask, rng.gen::<u32>() & mask))
                .collect()
        },
        posit_impl(cfg),
        |op, a, b| oracle.apply(op, a, b),
    )
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// 512 binary16 values: every sign and exponent field combined with eight
/// fraction fields, so zeros, subnormals, the top binade, infinities and
/// NaNs are all present.
pub fn binary16_basis() -> Vec<u16> {
    const FRACTIONS: [u16; 8] = [0x000, 0x001, 0x002, 0x155, 0x200, 0x2AA, 0x3FE, 0x3FF];
    let mut v = Vec::with_capacity(512);
    for sign in [0u16, 0x8000] {
        for exp in 0..32u16 {
            for f in FRACTIONS {
                v.push(sign | (exp << 10) | f);
            }
        }
    }
    v
}

fn binary16_impl(op: Op, a: u32, b: u32) -> u32 {
    let (x, y) = (Binary16::from_bits(a as u16), Binary16::from_bits(b as u16));
    let r = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x * y,
        Op::Div => x / y,
    };
    r.to_bits() as u32
}

pub fn binary16_basis_suite() -> ConformanceReport {
    let oracle = Binary16Oracle::new();
    let basis = binary16_basis();
    let pairs: Vec<(u32, u32)> = basis
        .iter()
        .flat_map(|&a| basis.iter().map(move |&b| (a as u32, b as u32)))
        .collect();
    let chunks = pairs.len().div_ceil(CHUNK);
    run_pairs(
        "float16".into(),
        "basis(512)".into(),
        4,
        chunks,
        |c| pairs[c * CHUNK..((c + 1) * CHUNK).min(pairs.len())].to_vec(),
        binary16_impl,
        |op, a, b| oracle.apply(op, a as u16, b as u16) as u32,
    )
}

pub fn binary16_sampled(samples: u64, seed: u64) -> ConformanceReport {
    let oracle = Binary16Oracle::new();
    let chunks = (samples as usize).div_ceil(CHUNK);
    run_pairs(
        "float16".into(),
        format!("sampled(seed={seed}, samples={samples})"),
        4,
        chunks,
        |c| {
            let len = CHUNK.min(samples as usize - c * CHUNK);
            let mut rng = chunk_rng(seed, c as u64);
            (0..len)
                .map(|_| (rng.gen::<u16>() as u32, rng.gen::<u16>() as u32))
                .collect()
        },
        binary16_impl,
        |op, a, b| oracle.apply(op, a as u16, b as u16) as u32,
    )
}

// Compares raw results only; the overflow flag has its own unit tests.
fn q16_impl(op: Op, a: u32, b: u32) -> u32 {
    let (x, y) = (FixedQ16::from_raw(a as i32), FixedQ16::from_raw(b as i32));
    let r = match op {
        Op::Add => x.add(y),
        Op::Sub => x.sub(y),
        Op::Mul => x.mul(y),
        Op::Div => x.div(y),
    };
    r.raw() as u32
}

fn q16_reference(op: Op, a: u32, b: u32) -> u32 {
    let (x, y) = (oracle::q16_value(a as i32), oracle::q16_value(b as i32));
    let exact = match op {
        Op::Add => x.add(&y),
        Op::Sub => x.sub(&y),
        Op::Mul => x.mul(&y),
        Op::Div => match x.div(&y) {
            Some(q) => q,
            None => {
                let negative = (a as i32) < 0;
                return if negative { i32::MIN as u32 } else { i32::MAX as u32 };
            }
        },
    };
    oracle::q16_round(&exact).0 as u32
}

/// Random raw operand pairs, biased toward small magnitudes so that
/// products and quotients stay mostly in range.
pub fn q16_sampled(samples: u64, seed: u64) -> ConformanceReport {
    let chunks = (samples as usize).div_ceil(CHUNK);
    run_pairs(
        "q16".into(),
        format!("sampled(seed={seed}, samples={samples})"),
        8,
        chunks,
        |c| {
            let len = CHUNK.min(samples as usize - c * CHUNK);
            let mut rng = chunk_rng(seed, c as u64);
            (0..len)
                .map(|_| {
                    let draw = |rng: &mut ChaCha8Rng| {
                        let width = rng.gen_range(1..=32u32);
                        let v = rng.gen::<u32>() >> (32 - width);
                        if rng.gen::<bool>() {
                            v.wrapping_neg()
                        } else {
                            v
                        }
                    };
                    (draw(&mut rng), draw(&mut rng))
                })
                .collect()
        },
        q16_impl,
        q16_reference,
    )
}
