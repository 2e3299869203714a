use std::cmp::Ordering;

use positflow::exact::ExactReal;
use positflow::oracle::{posit_value, Op, PositOracle};
use positflow::posit::{DecodedPosit, Posit, PositConfig};
use proptest::prelude::*;

fn all(cfg: PositConfig) -> impl Iterator<Item = Posit> {
    (0..1u32 << cfg.n()).map(move |b| Posit::from_bits(b, cfg).unwrap())
}

fn apply(op: Op, a: Posit, b: Posit) -> Posit {
    match op {
        Op::Add => a.try_add(&b),
        Op::Sub => a.try_sub(&b),
        Op::Mul => a.try_mul(&b),
        Op::Div => a.try_div(&b),
    }
    .unwrap()
}

#[test]
fn every_16_bit_pattern_round_trips() {
    for cfg in [PositConfig::P16E1, PositConfig::P16E2] {
        for p in all(cfg) {
            assert_eq!(Posit::encode(&p.to_exact(), cfg), p);
            if !p.is_nar() {
                assert_eq!(Posit::from_f64(p.to_f64(), cfg), p);
            }
        }
    }
}

#[test]
fn pattern_order_is_value_order() {
    for cfg in [PositConfig::P8E0, PositConfig::P16E1, PositConfig::P16E2] {
        let mut reals: Vec<Posit> = all(cfg).filter(|p| !p.is_nar()).collect();
        reals.sort_by_key(|p| p.signed_bits());
        for w in reals.windows(2) {
            assert!(w[0].to_f64() < w[1].to_f64(), "{:?} {:?}", w[0], w[1]);
            assert_eq!(w[0].compare(&w[1]).unwrap(), Some(Ordering::Less));
        }
    }
}

#[test]
fn decoder_matches_bit_walk() {
    for (n, es) in [(3, 1), (8, 0), (8, 2), (12, 3), (16, 1), (16, 2)] {
        let cfg = PositConfig::new(n, es).unwrap();
        for p in all(cfg) {
            let walked = posit_value(p.bits() as u64, n, es).map(|r| r.approx_f64());
            match walked {
                Some(v) => assert_eq!(p.to_f64(), v, "{p:?}"),
                None => assert!(p.is_nar()),
            }
        }
    }
}

#[test]
fn significance_band_of_posit16_2() {
    let cfg = PositConfig::P16E2;
    let mut in_band = 0;
    for p in all(cfg) {
        let v = p.to_f64().abs();
        if (1.0 / 16.0..16.0).contains(&v) {
            in_band += 1;
            match p.decode() {
                DecodedPosit::Real { fraction_bits, .. } => assert_eq!(fraction_bits + 1, 12),
                other => panic!("{other:?}"),
            }
        }
    }
    // 8 binades of 2048 values, both signs
    assert_eq!(in_band, 2 * 8 * 2048);
}

#[test]
fn integer_conversions() {
    let cfg = PositConfig::P16E2;
    for i in -1024..=1024 {
        let p = Posit::from_i32(i, cfg);
        assert_eq!(p.to_f64(), i as f64);
        assert_eq!(p.to_i32().unwrap(), i);
    }
    assert!(cfg.nar().to_i32().is_err());
    let oracle = PositOracle::new(PositConfig::P8E1);
    for i in -300..300 {
        assert_eq!(Posit::from_i32(i, PositConfig::P8E1).bits(), oracle.from_integer(i as i64));
    }
}

fn config() -> impl Strategy<Value = PositConfig> {
    (2u32..=32)
        .prop_flat_map(|n| (Just(n), 0..=n.saturating_sub(1).min(4)))
        .prop_map(|(n, es)| PositConfig::new(n, es).unwrap())
}

fn pattern(cfg: PositConfig) -> impl Strategy<Value = Posit> {
    any::<u32>().prop_map(move |b| Posit::from_bits(b & cfg.mask(), cfg).unwrap())
}

fn config_and_pair() -> impl Strategy<Value = (Posit, Posit)> {
    config().prop_flat_map(|cfg| (pattern(cfg), pattern(cfg)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arithmetic_matches_oracle((a, b) in config_and_pair(), op in 0usize..4) {
        let cfg = a.config();
        let op = Op::ALL[op];
        let oracle = PositOracle::new(cfg);
        prop_assert_eq!(apply(op, a, b).bits(), oracle.apply(op, a.bits(), b.bits()));
    }

    #[test]
    fn no_silent_nar((a, b) in config_and_pair(), op in 0usize..4) {
        let op = Op::ALL[op];
        let r = apply(op, a, b);
        let invalid = a.is_nar() || b.is_nar() || (op == Op::Div && b.is_zero());
        prop_assert_eq!(r.is_nar(), invalid);
        // zero only from an exact zero
        if r.is_zero() && !invalid {
            let exact_zero = match op {
                Op::Add => a.to_f64() == -b.to_f64(),
                Op::Sub => a == b,
                Op::Mul | Op::Div => a.is_zero() || (op == Op::Mul && b.is_zero()),
            };
            prop_assert!(exact_zero);
        }
    }

    #[test]
    fn commutative((a, b) in config_and_pair()) {
        prop_assert_eq!(a.try_add(&b).unwrap(), b.try_add(&a).unwrap());
        prop_assert_eq!(a.try_mul(&b).unwrap(), b.try_mul(&a).unwrap());
    }

    #[test]
    fn negation_is_exact(a in config().prop_flat_map(pattern)) {
        prop_assert_eq!(a.neg().neg(), a);
        if !a.is_nar() {
            prop_assert_eq!(a.neg().to_f64(), -a.to_f64());
        }
    }

    #[test]
    fn rounding_is_monotone(x in -1e20f64..1e20, y in -1e20f64..1e20, cfg in config()) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (pl, ph) = (Posit::from_f64(lo, cfg), Posit::from_f64(hi, cfg));
        prop_assert!(pl.signed_bits() <= ph.signed_bits());
    }

    #[test]
    fn nonzero_never_rounds_to_zero(x in prop::num::f64::NORMAL, cfg in config()) {
        let p = Posit::encode(&ExactReal::from_f64(x), cfg);
        prop_assert!(!p.is_zero() && !p.is_nar());
        prop_assert_eq!(p.to_f64() < 0.0, x < 0.0);
    }
}
