use positflow::binary16::Binary16;
use positflow::oracle::{Binary16Oracle, Op};
use proptest::prelude::*;
use std::sync::OnceLock;

fn oracle() -> &'static Binary16Oracle {
    static ORACLE: OnceLock<Binary16Oracle> = OnceLock::new();
    ORACLE.get_or_init(Binary16Oracle::new)
}

fn apply(op: Op, a: Binary16, b: Binary16) -> Binary16 {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
    }
}

#[test]
fn every_pattern_widens_exactly() {
    for bits in 0..=u16::MAX {
        let h = Binary16::from_bits(bits);
        let back = Binary16::from_f64(h.to_f64());
        if h.is_nan() {
            assert!(back.is_nan());
        } else {
            assert_eq!(back.to_bits(), bits);
        }
    }
}

#[test]
fn constants() {
    assert_eq!(Binary16::MAX.to_f64(), 65504.0);
    assert_eq!(Binary16::MIN_POSITIVE_SUBNORMAL.to_f64(), 2f64.powi(-24));
    assert_eq!(Binary16::MIN_POSITIVE_NORMAL.to_f64(), 2f64.powi(-14));
    // 65519.99 rounds down, 65520 is the tie that overflows
    assert_eq!(Binary16::from_f64(65519.99), Binary16::MAX);
    assert!(Binary16::from_f64(65520.0).is_infinite());
}

#[test]
fn signed_zero_rules() {
    let z = Binary16::ZERO;
    let nz = Binary16::NEG_ZERO;
    assert_eq!((z + nz).to_bits(), 0);
    assert_eq!((nz + nz).to_bits(), 0x8000);
    assert_eq!((Binary16::ONE - Binary16::ONE).to_bits(), 0);
    assert_eq!((nz * Binary16::ONE).to_bits(), 0x8000);
    assert!((z / z).is_nan());
    assert_eq!((Binary16::ONE / nz), Binary16::NEG_INFINITY);
}

fn half() -> impl Strategy<Value = Binary16> {
    any::<u16>().prop_map(Binary16::from_bits)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]

    #[test]
    fn arithmetic_matches_oracle(a in half(), b in half(), op in 0usize..4) {
        let oracle = oracle();
        let op = Op::ALL[op];
        prop_assert_eq!(apply(op, a, b).to_bits(), oracle.apply(op, a.to_bits(), b.to_bits()));
    }

    #[test]
    fn commutative(a in half(), b in half()) {
        prop_assert_eq!((a + b).to_bits(), (b + a).to_bits());
        prop_assert_eq!((a * b).to_bits(), (b * a).to_bits());
    }

    #[test]
    fn narrowing_is_nearest(x in -70000.0f64..70000.0) {
        let h = Binary16::from_f64(x);
        let oracle = oracle();
        let exact = positflow::oracle::Rational::from_f64(x).unwrap();
        prop_assert_eq!(h.to_bits(), oracle.from_rational(&exact));
    }
}
