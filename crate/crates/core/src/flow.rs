//! Dense optical flow.
//!
//! Convention: for a pixel `p` of frame `a`, `flow(p)` points to the matching
//! location in frame `b`, so backward-warping `b` by the field reconstructs
//! `a`.
//!
//! [`CoarseToFineFlow`] is the deterministic reference estimator: a dense
//! Lucas–Kanade solve on a Gaussian pyramid with iterative warping and a
//! median pass per level. It is not competitive with learned estimators on
//! real footage but is exact on identical frames, bit-stable across runs and
//! good to a fraction of a pixel on smooth translating textures.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendDescriptor, BackendKind};
use crate::frame::RgbImage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("frame size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("flow field buffers must hold {expected} values, got u={u} v={v}")]
    BufferSize { expected: usize, u: usize, v: usize },
    #[error("flow field contains a non-finite value")]
    NonFinite,
    #[error("flow backend unavailable: {0}")]
    Unavailable(String),
    #[error("flow backend failed: {0}")]
    Backend(String),
}

/// Per-pixel displacement in pixels, row-major planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self, FlowError> {
        let expected = width * height;
        if u.len() != expected || v.len() != expected {
            return Err(FlowError::BufferSize {
                expected,
                u: u.len(),
                v: v.len(),
            });
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(FlowError::NonFinite);
        }
        Ok(Self {
            width,
            height,
            u,
            v,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, 0.0, 0.0)
    }

    pub fn uniform(width: usize, height: usize, u: f32, v: f32) -> Self {
        Self {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }
}

/// A dense flow backend.
pub trait FlowEstimator {
    fn descriptor(&self) -> BackendDescriptor;

    /// Flow from `frame_a` to `frame_b` under the module convention.
    fn estimate_flow(&self, frame_a: &RgbImage, frame_b: &RgbImage) -> Result<FlowField, FlowError>;
}

impl<T: FlowEstimator + ?Sized> FlowEstimator for alloc::boxed::Box<T> {
    fn descriptor(&self) -> BackendDescriptor {
        (**self).descriptor()
    }

    fn estimate_flow(&self, frame_a: &RgbImage, frame_b: &RgbImage) -> Result<FlowField, FlowError> {
        (**self).estimate_flow(frame_a, frame_b)
    }
}

pub(crate) fn check_same_size(a: &RgbImage, b: &RgbImage) -> Result<(), FlowError> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(FlowError::SizeMismatch(a.width(), a.height(), b.width(), b.height()))
    }
}

/// Pyramidal dense Lucas–Kanade.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseToFineFlow {
    /// Upper bound on pyramid depth.
    pub max_levels: usize,
    /// Coarsest level keeps at least this many pixels on its short side.
    pub min_level_size: usize,
    /// Half-width of the binomial integration window.
    pub window_radius: usize,
    /// Warp/solve iterations per level.
    pub iterations: usize,
    /// Tikhonov term added to the structure tensor diagonal.
    pub regularization: f64,
    /// Per-iteration update clamp, in pixels of the current level.
    pub max_step: f64,
}

impl Default for CoarseToFineFlow {
    fn default() -> Self {
        Self {
            max_levels: 5,
            min_level_size: 12,
            window_radius: 3,
            iterations: 6,
            regularization: 1.0,
            max_step: 1.5,
        }
    }
}

impl FlowEstimator for CoarseToFineFlow {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            kind: BackendKind::OpticalFlow,
            model_id: String::from("classical-coarse-to-fine-lk"),
            version: alloc::format!(
                "2;levels={};win={};iters={}",
                self.max_levels,
                self.window_radius,
                self.iterations
            ),
            deterministic: true,
        }
    }

    fn estimate_flow(&self, frame_a: &RgbImage, frame_b: &RgbImage) -> Result<FlowField, FlowError> {
        check_same_size(frame_a, frame_b)?;
        let (w, h) = (frame_a.width(), frame_a.height());
        let pyr_a = build_pyramid(Plane::new(w, h, frame_a.luma()), self);
        let pyr_b = build_pyramid(Plane::new(w, h, frame_b.luma()), self);

        let mut u = Plane::zeros(0, 0);
        let mut v = Plane::zeros(0, 0);
        for level in (0..pyr_a.len()).rev() {
            let a = &pyr_a[level];
            let b = &pyr_b[level];
            if u.w == 0 {
                u = Plane::zeros(a.w, a.h);
                v = Plane::zeros(a.w, a.h);
            } else {
                u = upsample_flow(&u, a.w, a.h);
                v = upsample_flow(&v, a.w, a.h);
            }
            for _ in 0..self.iterations {
                self.refine(a, b, &mut u, &mut v);
            }
            u = median3(&u);
            v = median3(&v);
        }

        FlowField::new(
            w,
            h,
            u.data.iter().map(|&x| x as f32).collect(),
            v.data.iter().map(|&x| x as f32).collect(),
        )
    }
}

impl CoarseToFineFlow {
    fn refine(&self, a: &Plane, b: &Plane, u: &mut Plane, v: &mut Plane) {
        let (w, h) = (a.w, a.h);
        let n = w * h;
        let mut warped = vec![0.0; n];
        let mut inside = vec![false; n];
        let (max_x, max_y) = ((w - 1) as f64, (h - 1) as f64);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (sx, sy) = (x as f64 + u.data[i], y as f64 + v.data[i]);
                inside[i] = (0.0..=max_x).contains(&sx) && (0.0..=max_y).contains(&sy);
                warped[i] = b.sample_clamped(sx, sy);
            }
        }
        let warped = Plane::new(w, h, warped);

        let mut ixx = vec![0.0; n];
        let mut ixy = vec![0.0; n];
        let mut iyy = vec![0.0; n];
        let mut ixt = vec![0.0; n];
        let mut iyt = vec![0.0; n];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                // clamped samples carry no information about the displacement
                if !inside[i] {
                    continue;
                }
                let gx = a.dx(x, y);
                let gy = a.dy(x, y);
                let it = warped.data[i] - a.data[i];
                ixx[i] = gx * gx;
                ixy[i] = gx * gy;
                iyy[i] = gy * gy;
                ixt[i] = gx * it;
                iyt[i] = gy * it;
            }
        }
        let k = binomial_weights(self.window_radius);
        let sxx = window_sum(&ixx, w, h, &k);
        let sxy = window_sum(&ixy, w, h, &k);
        let syy = window_sum(&iyy, w, h, &k);
        let sxt = window_sum(&ixt, w, h, &k);
        let syt = window_sum(&iyt, w, h, &k);

        let lambda = self.regularization;
        for i in 0..n {
            let a11 = sxx[i] + lambda;
            let a22 = syy[i] + lambda;
            let a12 = sxy[i];
            let det = a11 * a22 - a12 * a12;
            if det <= 0.0 || !det.is_finite() {
                continue;
            }
            let du = -(a22 * sxt[i] - a12 * syt[i]) / det;
            let dv = -(a11 * syt[i] - a12 * sxt[i]) / det;
            u.data[i] += du.clamp(-self.max_step, self.max_step);
            v.data[i] += dv.clamp(-self.max_step, self.max_step);
        }
    }
}

#[derive(Debug, Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn new(w: usize, h: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), w * h);
        Self { w, h, data }
    }

    fn zeros(w: usize, h: usize) -> Self {
        Self::new(w, h, vec![0.0; w * h])
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    #[inline]
    fn dx(&self, x: usize, y: usize) -> f64 {
        let l = x.saturating_sub(1);
        let r = (x + 1).min(self.w - 1);
        if r == l {
            return 0.0;
        }
        (self.at(r, y) - self.at(l, y)) / (r - l) as f64
    }

    #[inline]
    fn dy(&self, x: usize, y: usize) -> f64 {
        let t = y.saturating_sub(1);
        let b = (y + 1).min(self.h - 1);
        if b == t {
            return 0.0;
        }
        (self.at(x, b) - self.at(x, t)) / (b - t) as f64
    }

    fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.w - 1) as f64);
        let y = y.clamp(0.0, (self.h - 1) as f64);
        let x0 = libm::floor(x) as usize;
        let y0 = libm::floor(y) as usize;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.at(x0, y0) * (1.0 - fx) + self.at(x1, y0) * fx;
        let bottom = self.at(x0, y1) * (1.0 - fx) + self.at(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Separable 5-tap binomial blur with edge clamping.
fn blur(p: &Plane) -> Plane {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let (w, h) = (p.w, p.h);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in K.iter().enumerate() {
                let xx = (x as isize + k as isize - 2).clamp(0, w as isize - 1) as usize;
                acc += wt * p.at(xx, y);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in K.iter().enumerate() {
                let yy = (y as isize + k as isize - 2).clamp(0, h as isize - 1) as usize;
                acc += wt * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    Plane::new(w, h, out)
}

fn build_pyramid(base: Plane, cfg: &CoarseToFineFlow) -> Vec<Plane> {
    let mut levels = vec![base];
    while levels.len() < cfg.max_levels.max(1) {
        let last = levels.last().expect("pyramid is non-empty");
        let (nw, nh) = (last.w.div_ceil(2), last.h.div_ceil(2));
        if nw.min(nh) < cfg.min_level_size {
            break;
        }
        let blurred = blur(last);
        let mut data = Vec::with_capacity(nw * nh);
        for y in 0..nh {
            for x in 0..nw {
                data.push(blurred.at(2 * x, 2 * y));
            }
        }
        levels.push(Plane::new(nw, nh, data));
    }
    levels
}

/// Coarse pixel `x` sits at fine pixel `2x`; displacements double.
fn upsample_flow(coarse: &Plane, w: usize, h: usize) -> Plane {
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(2.0 * coarse.sample_clamped(x as f64 / 2.0, y as f64 / 2.0));
        }
    }
    Plane::new(w, h, data)
}

/// Binomial weights of length `2r + 1`, scaled to sum to `2r + 1`.
fn binomial_weights(r: usize) -> Vec<f64> {
    let n = 2 * r;
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    let total: f64 = row.iter().sum();
    row.iter().map(|c| c * (n + 1) as f64 / total).collect()
}

/// Separable binomial-weighted window sum, truncated at the borders. The
/// kernel's frequency response is non-negative, which keeps the per-level
/// iteration from amplifying high-frequency flow error.
fn window_sum(src: &[f64], w: usize, h: usize, weights: &[f64]) -> Vec<f64> {
    let r = weights.len() / 2;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut acc = 0.0;
            for xx in lo..=hi {
                acc += weights[xx + r - x] * row[xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            let mut acc = 0.0;
            for yy in lo..=hi {
                acc += weights[yy + r - y] * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn median3(p: &Plane) -> Plane {
    let (w, h) = (p.w, p.h);
    let mut out = vec![0.0; w * h];
    let mut buf = [0.0f64; 9];
    for y in 0..h {
        for x in 0..w {
            let mut n = 0;
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    buf[n] = p.at(xx, yy);
                    n += 1;
                }
            }
            let window = &mut buf[..n];
            window.sort_unstable_by(f64::total_cmp);
            out[y * w + x] = if n % 2 == 1 {
                window[n / 2]
            } else {
                0.5 * (window[n / 2 - 1] + window[n / 2])
            };
        }
    }
    Plane::new(w, h, out)
}

/// Median of a slice, used by tests and diagnostics.
pub fn median(values: &[f32]) -> Option<f32> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f32> = values.to_vec();
    v.sort_unstable_by(f32::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
