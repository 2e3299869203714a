use positflow::analysis::{
    binade, compare, histogram_overlap, representable_census, sweep, Stats, SweepParams,
};
use positflow::flow::{FlowField, FlowStatus, Frame};
use positflow::posit::PositConfig;
use positflow::scalar::{CollectTap, FormatSpec, Reference};
use proptest::prelude::*;

fn field(u: Vec<f64>, v: Vec<f64>, status: Vec<FlowStatus>) -> FlowField<f64> {
    FlowField {
        width: u.len(),
        height: 1,
        u,
        v,
        status,
    }
}

#[test]
fn identical_fields_have_zero_error() {
    let f = field(vec![0.5, 1.0], vec![-0.25, 2.0], vec![FlowStatus::Ok; 2]);
    let c = compare("x", 1, &f, &f).unwrap();
    assert_eq!((c.report.max_abs_error, c.report.rms_error, c.report.std_deviation), (0.0, 0.0, 0.0));
}

#[test]
fn exception_pixel_is_counted_not_averaged() {
    let r = field(vec![0.0, 0.0, 0.0], vec![0.0; 3], vec![FlowStatus::Ok; 3]);
    let t = field(
        vec![3.0, f64::NAN, 0.0],
        vec![4.0, f64::NAN, 0.0],
        vec![FlowStatus::Ok, FlowStatus::Exception, FlowStatus::Ok],
    );
    let c = compare("x", 1, &t, &r).unwrap();
    assert_eq!(c.report.exception_count, 1);
    assert_eq!(c.report.compared, 2);
    assert_eq!(c.report.max_abs_error, 4.0);
    assert_eq!(c.heat_u.flag[1], FlowStatus::Exception);
    assert!(c.heat_u.error.iter().all(|e| *e >= 0.0));
    assert!(compare("x", 1, &t, &field(vec![0.0], vec![0.0], vec![FlowStatus::Ok])).is_err());
}

#[test]
fn census_totals_and_binades() {
    let h = representable_census(FormatSpec::Float16).unwrap();
    assert_eq!(h.finite_nonzero, 63486);
    for b in -14..=15 {
        assert_eq!(h.count(b), 1024);
    }
    // subnormal binades hold 2^(b+24) values each
    for b in -24..-14 {
        assert_eq!(h.count(b), 1 << (b + 24));
    }
    for cfg in [PositConfig::P16E1, PositConfig::P16E2] {
        let p = representable_census(FormatSpec::Posit(cfg)).unwrap();
        assert_eq!(p.finite_nonzero, 65534);
        assert_eq!(p.binades.values().sum::<u64>(), 32767);
    }
    let p = representable_census(FormatSpec::Posit(PositConfig::P16E2)).unwrap();
    for b in -4..4 {
        assert_eq!(p.count(b), 2048);
    }
    assert_eq!(p.max_finite, 2f64.powi(56));
    assert_eq!(p.min_positive, 2f64.powi(-56));
}

#[test]
fn overlap_of_constant_frames() {
    let f = Frame::filled(9, 9, 200).unwrap();
    let tap = Reference::with_tap(CollectTap::new());
    positflow::flow::flow_sequential(&tap, &f, &f, positflow::flow::FlowParams::new(8)).unwrap();
    let values = tap.tap().unique_values();
    assert_eq!(values, vec![0.0, 25.0]);
    let censuses = [representable_census(FormatSpec::Posit(PositConfig::P16E2)).unwrap()];
    let o = histogram_overlap(&values, &censuses);
    assert_eq!(o.zeros, 1);
    let with_data: Vec<i32> = o.rows.iter().filter(|r| r.data > 0).map(|r| r.binade).collect();
    assert_eq!(with_data, vec![4]);
    assert_eq!(o.coverage, vec![1.0]);
}

#[test]
fn reference_sweep_is_error_free() {
    let f1 = Frame::from_fn(12, 12, |x, y| ((x * 31 + y * 17) % 256) as u8).unwrap();
    let f2 = Frame::from_fn(12, 12, |x, y| ((x * 29 + y * 19) % 256) as u8).unwrap();
    let s = sweep(FormatSpec::Reference, &f1, &f2, &[1, 7, 255], SweepParams::default()).unwrap();
    assert!(s.reports.iter().all(|r| r.max_abs_error == 0.0 && r.exception_count == 0));
    assert_eq!(s.best_norm, Some(1));
    let one = sweep(FormatSpec::Float16, &f1, &f2, &[9], SweepParams::default()).unwrap();
    assert_eq!(one.reports.len(), 1);
    assert!(sweep(FormatSpec::Float16, &f1, &f2, &[], SweepParams::default()).is_err());
    assert!(sweep(FormatSpec::Float16, &f1, &f2, &[0], SweepParams::default()).is_err());
}

#[test]
fn sweep_never_picks_a_norm_with_exceptions() {
    let f1 = Frame::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 255 } else { 0 }).unwrap();
    let f2 = Frame::from_fn(16, 16, |x, y| if (x / 2 + y) % 2 == 0 { 250 } else { 10 }).unwrap();
    let s = sweep(FormatSpec::Q16, &f1, &f2, &[1, 2, 4, 16, 64, 255], SweepParams::default()).unwrap();
    let best = s.best_norm.unwrap();
    assert_eq!(s.report(best).unwrap().exception_count, 0);
    assert!(s.reports.iter().any(|r| r.exception_count > 0));
}

fn naive(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mut max = f64::MIN;
    for s in samples {
        if *s > max {
            max = *s;
        }
    }
    let mean = samples.iter().fold(0.0, |a, s| a + s) / n;
    let ms = samples.iter().fold(0.0, |a, s| a + s * s) / n;
    let var = samples.iter().fold(0.0, |a, s| a + (s - mean).powi(2)) / n;
    (max, ms.sqrt(), var.sqrt())
}

proptest! {
    #[test]
    fn metrics_match_two_pass(samples in prop::collection::vec(0.0f64..10.0, 1..500)) {
        let s = Stats::from_samples(&samples);
        let (max, rms, std) = naive(&samples);
        prop_assert_eq!(s.max, max);
        prop_assert!((s.rms - rms).abs() <= 1e-12);
        prop_assert!((s.std - std).abs() <= 1e-12);
        prop_assert!(s.max >= s.rms);
    }

    #[test]
    fn binade_brackets_value(x in prop::num::f64::POSITIVE | prop::num::f64::NEGATIVE) {
        if let Some(b) = binade(x) {
            let a = x.abs();
            prop_assert!(2f64.powi(b) <= a || b < -1022);
            prop_assert!(a < 2f64.powi(b + 1) || b >= 1023);
        }
    }

    #[test]
    fn data_counts_sum_to_total(values in prop::collection::vec(-1e6f64..1e6, 0..200)) {
        let censuses = [representable_census(FormatSpec::Float16).unwrap()];
        let o = histogram_overlap(&values, &censuses);
        let data: u64 = o.rows.iter().map(|r| r.data).sum();
        prop_assert_eq!(data + o.zeros, values.len() as u64);
    }
}
