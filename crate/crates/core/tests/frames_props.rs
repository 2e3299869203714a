use std::collections::BTreeSet;

use positflow::flow::{flow, FlowParams, FlowStatus, Frame};
use positflow::frames::{checksum, gen_sphere, load_pgm, save_pgm, PgmError, SphereParams};
use positflow::scalar::Reference;
use proptest::prelude::*;

// Frozen output of the default scene; a change here means the renderer changed.
const DEFAULT_CHECKSUMS: [&str; 2] = [
    "7c8a2194eca70ec0254553a7fbac366dc6b753fd3befb2a6566e377967522a38",
    "579b3cba91196f115446ad30256db80aade7fe350ecae40392109b4374900238",
];

#[test]
fn default_scene_checksums() {
    let frames = gen_sphere(&SphereParams::default()).unwrap();
    let sums: Vec<String> = frames.iter().map(checksum).collect();
    assert_eq!(sums, DEFAULT_CHECKSUMS);
}

#[test]
fn sphere_is_textured() {
    let p = SphereParams::default();
    let frames = gen_sphere(&p).unwrap();
    let c = p.size as f64 / 2.0;
    let mut levels = BTreeSet::new();
    for y in 0..p.size {
        for x in 0..p.size {
            let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
            let inside = dx * dx + dy * dy < p.radius * p.radius;
            if inside {
                levels.insert(frames[0].get(x, y));
            } else {
                assert_eq!(frames[0].get(x, y), 0);
            }
        }
    }
    assert!(levels.len() >= 30, "{}", levels.len());
}

#[test]
fn rotation_moves_the_disk_only() {
    let p = SphereParams {
        size: 80,
        radius: 30.0,
        angle: 0.02,
        ..SphereParams::default()
    };
    let f = gen_sphere(&p).unwrap();
    let field = flow(&Reference::new(), &f[0], &f[1], FlowParams::new(1)).unwrap();
    let mut moving = 0;
    for y in 0..p.size {
        for x in 0..p.size {
            let i = field.index(x, y);
            let (dx, dy) = (x as f64 + 0.5 - 40.0, y as f64 + 0.5 - 40.0);
            let r = (dx * dx + dy * dy).sqrt();
            if r > p.radius + 4.0 {
                assert_eq!((field.u[i], field.v[i]), (0.0, 0.0));
            } else if r < p.radius - 4.0 && field.status[i] == FlowStatus::Ok && field.u[i] != 0.0 {
                moving += 1;
            }
        }
    }
    assert!(moving > 1000, "{moving}");
}

#[test]
fn parse_errors_are_distinct() {
    assert_eq!(load_pgm(b"P2 1 1 255 0"), Err(PgmError::UnsupportedMagic));
    assert!(matches!(load_pgm(b"P5 1 1 15 \x00"), Err(PgmError::UnsupportedMaxval { maxval: 15, .. })));
    assert!(matches!(load_pgm(b"P5 3 3 255 \x00"), Err(PgmError::Truncated { expected: 9, found: 1, .. })));
    assert!(matches!(load_pgm(b"P5 0 3 255 "), Err(PgmError::BadHeader { .. })));
}

fn frame() -> impl Strategy<Value = Frame> {
    (1usize..40, 1usize..40).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| Frame::new(w, h, d).unwrap())
    })
}

proptest! {
    #[test]
    fn pgm_round_trip(f in frame()) {
        prop_assert_eq!(load_pgm(&save_pgm(&f)).unwrap(), f);
    }

    #[test]
    fn truncation_is_reported(f in frame(), cut in 1usize..10) {
        let bytes = save_pgm(&f);
        let cut = cut.min(f.data().len());
        let short = &bytes[..bytes.len() - cut];
        let is_truncated = matches!(load_pgm(short), Err(PgmError::Truncated { .. }));
        prop_assert!(is_truncated);
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), angle in -0.05f64..0.05) {
        let p = SphereParams { size: 24, radius: 10.0, angle, seed, ..SphereParams::default() };
        prop_assert_eq!(gen_sphere(&p).unwrap(), gen_sphere(&p).unwrap());
    }
}
