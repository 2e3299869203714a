//! Binary PGM input/output and a procedural rotating-sphere scene.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::flow::Frame;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("unsupported magic at byte 0: expected P5")]
    UnsupportedMagic,
    #[error("malformed header at byte {offset}: {reason}")]
    BadHeader { offset: usize, reason: &'static str },
    #[error("unsupported maxval {maxval} at byte {offset}: only 255 is accepted")]
    UnsupportedMaxval { offset: usize, maxval: u64 },
    #[error("truncated pixel data at byte {offset}: expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("unexpected data after the image at byte {offset}")]
    TrailingData { offset: usize },
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && !matches!(self.bytes[self.pos], b'\n' | b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<(usize, u64), PgmError> {
        let at_space = self.pos;
        self.skip_space();
        if self.pos == at_space {
            return Err(PgmError::BadHeader {
                offset: self.pos,
                reason: "expected whitespace",
            });
        }
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as u64))
                .ok_or(PgmError::BadHeader {
                    offset: start,
                    reason: "number too large",
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PgmError::BadHeader {
                offset: start,
                reason: "expected a decimal number",
            });
        }
        Ok((start, value))
    }
}

/// Parses a single binary (P5) graymap with maxval 255.
pub fn load_pgm(bytes: &[u8]) -> Result<Frame, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::UnsupportedMagic);
    }
    let mut h = Header { bytes, pos: 2 };
    let (w_at, width) = h.number()?;
    let (h_at, height) = h.number()?;
    let (m_at, maxval) = h.number()?;
    if width == 0 {
        return Err(PgmError::BadHeader {
            offset: w_at,
            reason: "width must be positive",
        });
    }
    if height == 0 {
        return Err(PgmError::BadHeader {
            offset: h_at,
            reason: "height must be positive",
        });
    }
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval {
            offset: m_at,
            maxval,
        });
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => {
            return Err(PgmError::BadHeader {
                offset: h.pos,
                reason: "expected one whitespace byte before pixel data",
            })
        }
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .ok_or(PgmError::BadHeader {
            offset: w_at,
            reason: "image too large",
        })?;
    let data = &bytes[h.pos..];
    if data.len() < expected {
        return Err(PgmError::Truncated {
            offset: bytes.len(),
            expected,
            found: data.len(),
        });
    }
    if data.len() > expected {
        return Err(PgmError::TrailingData {
            offset: h.pos + expected,
        });
    }
    Ok(Frame::new(width as usize, height as usize, data.to_vec()).expect("checked size"))
}

pub fn save_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

/// Lowercase hex SHA-256 of the frame's PGM encoding.
pub fn checksum(frame: &Frame) -> String {
    Sha256::digest(save_pgm(frame))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("image size must be at least 3 pixels")]
    TooSmall,
    #[error("radius {radius} must be positive and below half the image size ({size})")]
    BadRadius { radius: f64, size: usize },
    #[error("rotation angle {0} exceeds the small-motion limit of 0.05 rad")]
    AngleTooLarge(f64),
    #[error("texture frequency must be positive and finite")]
    BadFrequency,
    #[error("frame count must be at least 1")]
    NoFrames,
}

/// A textured unit sphere seen from the front, spinning about its
/// vertical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereParams {
    pub size: usize,
    pub radius: f64,
    pub frequency: f64,
    /// Rotation per frame in radians.
    pub angle: f64,
    pub frames: usize,
    pub seed: u64,
}

impl Default for SphereParams {
    fn default() -> Self {
        Self {
            size: 200,
            radius: 80.0,
            frequency: 12.0,
            angle: 0.01,
            frames: 2,
            seed: 1,
        }
    }
}

impl SphereParams {
    pub const MAX_ANGLE: f64 = 0.05;

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.size < 3 {
            return Err(SceneError::TooSmall);
        }
        if !(self.radius > 0.0 && self.radius < self.size as f64 / 2.0) {
            return Err(SceneError::BadRadius {
                radius: self.radius,
                size: self.size,
            });
        }
        if !(self.angle.abs() <= Self::MAX_ANGLE) {
            return Err(SceneError::AngleTooLarge(self.angle));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(SceneError::BadFrequency);
        }
        if self.frames == 0 {
            return Err(SceneError::NoFrames);
        }
        Ok(())
    }
}

/// Renders `params.frames` frames. Shading is `0.2 + 0.8·z`, the texture is
/// a product of sines in longitude and latitude with seeded phases, and the
/// background is black.
pub fn gen_sphere(params: &SphereParams) -> Result<Vec<Frame>, SceneError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let tau = 2.0 * std::f64::consts::PI;
    let phase_lon = rng.gen::<f64>() * tau;
    let phase_lat = rng.gen::<f64>() * tau;
    let centre = params.size as f64 / 2.0;
    let frames = (0..params.frames)
        .map(|t| {
            let spin = t as f64 * params.angle;
            Frame::from_fn(params.size, params.size, |x, y| {
                let nx = (x as f64 + 0.5 - centre) / params.radius;
                let ny = (centre - (y as f64 + 0.5)) / params.radius;
                let r2 = nx * nx + ny * ny;
                if r2 >= 1.0 {
                    return 0;
                }
                let z = libm::sqrt(1.0 - r2);
                let lon = libm::atan2(nx, z) + spin;
                let lat = libm::asin(ny);
                let texture = 0.5
                    + 0.5
                        * libm::sin(params.frequency * lon + phase_lon)
                        * libm::sin(params.frequency * lat + phase_lat);
                let shade = 0.2 + 0.8 * z;
                libm::round(255.0 * shade * texture).clamp(0.0, 255.0) as u8
            })
            .expect("valid size")
        })
        .collect();
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let f = load_pgm(b"P5 2 2 255 \x01\x02\x03\x04").unwrap();
        assert_eq!((f.width(), f.height()), (2, 2));
        assert_eq!(f.data(), &[1, 2, 3, 4]);
        assert_eq!(load_pgm(&save_pgm(&f)).unwrap(), f);
    }

    #[test]
    fn comments_are_skipped() {
        let f = load_pgm(b"P5\n# made by hand\n3 1 # width height\n255\n\x00\x80\xff").unwrap();
        assert_eq!(f.data(), &[0, 128, 255]);
    }

    #[test]
    fn distinct_errors() {
        assert_eq!(load_pgm(b"P6 1 1 255 \x00"), Err(PgmError::UnsupportedMagic));
        assert_eq!(
            load_pgm(b"P5 1 1 65535 \x00\x00"),
            Err(PgmError::UnsupportedMaxval {
                offset: 7,
                maxval: 65535
            })
        );
        assert_eq!(
            load_pgm(b"P5 2 2 255 \x00"),
            Err(PgmError::Truncated {
                offset: 12,
                expected: 4,
                found: 1
            })
        );
        assert!(matches!(load_pgm(b"P5 x"), Err(PgmError::BadHeader { offset: 3, .. })));
        assert!(matches!(load_pgm(b"P5 1 1 255 \x00\x00"), Err(PgmError::TrailingData { offset: 12 })));
    }

    #[test]
    fn zero_angle_repeats_frame() {
        let p = SphereParams {
            size: 40,
            radius: 15.0,
            angle: 0.0,
            frames: 3,
            ..SphereParams::default()
        };
        let f = gen_sphere(&p).unwrap();
        assert_eq!(f[0], f[1]);
        assert_eq!(f[1], f[2]);
    }

    #[test]
    fn invalid_scenes() {
        let base = SphereParams::default();
        assert!(gen_sphere(&SphereParams { radius: 100.0, ..base }).is_err());
        assert!(gen_sphere(&SphereParams { angle: 0.2, ..base }).is_err());
        assert!(gen_sphere(&SphereParams { frames: 0, ..base }).is_err());
    }
}
