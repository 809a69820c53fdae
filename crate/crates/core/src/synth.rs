//! Deterministic synthetic videos.
//!
//! Smooth procedural textures that can be sampled at sub-pixel offsets, plus
//! helpers that turn them into panning, rotating, flickering or random
//! sequences. Everything is seeded, so identical arguments always produce
//! identical pixels.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::frame::{BinaryMap, FrameSequence, MaskSequence, RgbImage};

const COMPONENTS: usize = 6;

/// Uniform sample in `[0, 1)`.
pub(crate) fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: [f64; 3],
}

/// Band-limited procedural RGB texture.
#[derive(Debug, Clone)]
pub struct Texture {
    waves: [Wave; COMPONENTS],
}

impl Texture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = core::array::from_fn(|_| {
            let period = 10.0 + 26.0 * unit_f64(&mut rng);
            let angle = 2.0 * PI * unit_f64(&mut rng);
            let f = 1.0 / period;
            Wave {
                fx: f * libm::cos(angle),
                fy: f * libm::sin(angle),
                phase: 2.0 * PI * unit_f64(&mut rng),
                amp: core::array::from_fn(|_| 6.0 + 10.0 * unit_f64(&mut rng)),
            }
        });
        Self { waves }
    }

    /// Continuous colour at texture coordinates `(x, y)`.
    pub fn sample(&self, x: f64, y: f64) -> [f64; 3] {
        let mut c = [128.0; 3];
        for w in &self.waves {
            let s = libm::sin(2.0 * PI * (w.fx * x + w.fy * y) + w.phase);
            for (ch, a) in c.iter_mut().zip(w.amp) {
                *ch += a * s;
            }
        }
        c
    }

    /// Frame whose content is the texture moved by `(dx, dy)`:
    /// `frame(x, y) = texture(x − dx, y − dy)`.
    pub fn render(&self, width: usize, height: usize, dx: f64, dy: f64) -> RgbImage {
        RgbImage::from_fn(width, height, |x, y| {
            quantize(self.sample(x as f64 - dx, y as f64 - dy))
        })
    }

    /// Frame whose content is the texture rotated by `angle` radians about
    /// the image centre.
    pub fn render_rotated(&self, width: usize, height: usize, angle: f64) -> RgbImage {
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        RgbImage::from_fn(width, height, |x, y| {
            let px = x as f64 - cx;
            let py = y as f64 - cy;
            quantize(self.sample(c * px + s * py + cx, -s * px + c * py + cy))
        })
    }
}

fn quantize(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| libm::round(v).clamp(0.0, 255.0) as u8)
}

/// Texture translated by `(vx, vy)` pixels per frame.
pub fn pan(seed: u64, width: usize, height: usize, frames: usize, vx: f64, vy: f64) -> FrameSequence {
    let tex = Texture::new(seed);
    let f = (0..frames)
        .map(|t| tex.render(width, height, vx * t as f64, vy * t as f64))
        .collect();
    FrameSequence::new(f).expect("synthetic frames are uniform")
}

pub fn static_video(seed: u64, width: usize, height: usize, frames: usize) -> FrameSequence {
    pan(seed, width, height, frames, 0.0, 0.0)
}

/// Texture rotating by `step` radians per frame.
pub fn rotating(seed: u64, width: usize, height: usize, frames: usize, step: f64) -> FrameSequence {
    let tex = Texture::new(seed);
    let f = (0..frames)
        .map(|t| tex.render_rotated(width, height, step * t as f64))
        .collect();
    FrameSequence::new(f).expect("synthetic frames are uniform")
}

/// Same texture jumping to an unrelated random offset every frame.
pub fn random_jumps(seed: u64, width: usize, height: usize, frames: usize, max_jump: f64) -> FrameSequence {
    let tex = Texture::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let f = (0..frames)
        .map(|_| {
            let dx = (2.0 * unit_f64(&mut rng) - 1.0) * max_jump;
            let dy = (2.0 * unit_f64(&mut rng) - 1.0) * max_jump;
            tex.render(width, height, libm::round(dx), libm::round(dy))
        })
        .collect();
    FrameSequence::new(f).expect("synthetic frames are uniform")
}

/// Independent uniform noise in every pixel of every frame.
pub fn noise_video(seed: u64, width: usize, height: usize, frames: usize) -> FrameSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = (0..frames)
        .map(|_| RgbImage::from_fn(width, height, |_, _| core::array::from_fn(|_| rng.next_u32() as u8)))
        .collect();
    FrameSequence::new(f).expect("synthetic frames are uniform")
}

/// Adds i.i.d. integer noise uniform in `[-amplitude, amplitude]` to every
/// channel of every pixel, clamping to 0–255.
pub fn add_noise(video: &FrameSequence, amplitude: u8, seed: u64) -> FrameSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 2 * amplitude as u64 + 1;
    let frames = video
        .frames()
        .iter()
        .map(|f| {
            let data: Vec<u8> = f
                .as_raw()
                .iter()
                .map(|&p| {
                    let n = (rng.next_u64() % span) as i32 - amplitude as i32;
                    (p as i32 + n).clamp(0, 255) as u8
                })
                .collect();
            RgbImage::new(f.width(), f.height(), data).expect("same geometry")
        })
        .collect();
    FrameSequence::new(frames).expect("same geometry")
}

/// Applies `f` to every pixel of every frame.
pub fn map_pixels(video: &FrameSequence, mut f: impl FnMut(usize, usize, usize, [u8; 3]) -> [u8; 3]) -> FrameSequence {
    let frames = video
        .frames()
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            RgbImage::from_fn(frame.width(), frame.height(), |x, y| f(i, x, y, frame.pixel(x, y)))
        })
        .collect();
    FrameSequence::new(frames).expect("same geometry")
}

/// Centered axis-aligned rectangle covering `fraction` of each side.
pub fn box_masks(width: usize, height: usize, frames: usize, fraction: f64) -> MaskSequence {
    let bw = (width as f64 * fraction / 2.0) as usize;
    let bh = (height as f64 * fraction / 2.0) as usize;
    let (cx, cy) = (width / 2, height / 2);
    let m = BinaryMap::from_fn(width, height, |x, y| {
        x + bw >= cx && x < cx + bw && y + bh >= cy && y < cy + bh
    });
    MaskSequence::new(alloc::vec![m; frames]).expect("uniform masks")
}
