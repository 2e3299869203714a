use positflow::fixed::FixedQ16;
use positflow::oracle::{q16_round, q16_value, Op};
use proptest::prelude::*;

fn expected(op: Op, a: i32, b: i32) -> Option<(i32, bool)> {
    let (x, y) = (q16_value(a), q16_value(b));
    let exact = match op {
        Op::Add => x.add(&y),
        Op::Sub => x.sub(&y),
        Op::Mul => x.mul(&y),
        Op::Div => x.div(&y)?,
    };
    Some(q16_round(&exact))
}

fn apply(op: Op, a: FixedQ16, b: FixedQ16) -> FixedQ16 {
    match op {
        Op::Add => a.add(b),
        Op::Sub => a.sub(b),
        Op::Mul => a.mul(b),
        Op::Div => a.div(b),
    }
}

#[test]
fn conversions() {
    for i in i16::MIN..=i16::MAX {
        assert_eq!(FixedQ16::from_int(i).to_f64(), i as f64);
    }
    assert_eq!(FixedQ16::from_f64(1.0 / 65536.0).raw(), 1);
    assert_eq!(FixedQ16::from_f64(0.5 / 65536.0).raw(), 1);
    assert_eq!(FixedQ16::from_f64(-0.5 / 65536.0).raw(), -1);
    assert!(FixedQ16::from_f64(40000.0).overflowed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]

    #[test]
    fn arithmetic_matches_oracle(a in any::<i32>(), b in any::<i32>(), op in 0usize..4) {
        let op = Op::ALL[op];
        let r = apply(op, FixedQ16::from_raw(a), FixedQ16::from_raw(b));
        match expected(op, a, b) {
            Some((raw, overflow)) => {
                prop_assert_eq!(r.raw(), raw);
                prop_assert_eq!(r.overflowed(), overflow);
            }
            None => prop_assert!(r.overflowed()),
        }
    }

    #[test]
    fn small_operands_match_oracle(a in -0x4_0000i32..0x4_0000, b in -0x4_0000i32..0x4_0000, op in 0usize..4) {
        let op = Op::ALL[op];
        let r = apply(op, FixedQ16::from_raw(a), FixedQ16::from_raw(b));
        if let Some((raw, overflow)) = expected(op, a, b) {
            prop_assert_eq!((r.raw(), r.overflowed()), (raw, overflow));
        }
    }

    #[test]
    fn overflow_is_sticky(a in any::<i32>(), b in any::<i32>(), op in 0usize..4) {
        let bad = FixedQ16::MAX.add(FixedQ16::ONE);
        let op = Op::ALL[op];
        prop_assert!(apply(op, bad, FixedQ16::from_raw(b)).overflowed());
        prop_assert!(apply(op, FixedQ16::from_raw(a), bad).overflowed());
    }
}
