//! Backward warping and warp-validity masks.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowField;
use crate::frame::{BinaryMap, RgbImage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WarpError {
    #[error("size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("mask is empty")]
    EmptyMask,
}

/// Unquantized RGB samples produced by warping, interleaved and row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl WarpedImage {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn as_raw(&self) -> &[f64] {
        &self.data
    }

    /// Rounds to the nearest 8-bit value.
    pub fn quantize(&self) -> RgbImage {
        let data = self
            .data
            .iter()
            .map(|&v| libm::round(v).clamp(0.0, 255.0) as u8)
            .collect();
        RgbImage::new(self.width, self.height, data).expect("geometry preserved")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub warped: WarpedImage,
    /// 1 where the bilinear footprint lies inside the source frame.
    pub in_bounds: BinaryMap,
}

/// Pixels where warping reproduced the original within the threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityMask(pub BinaryMap);

impl ValidityMask {
    pub fn map(&self) -> &BinaryMap {
        &self.0
    }
}

/// Samples `source` at `p + flow(p)` with bilinear interpolation.
///
/// A sample position counts as in bounds when it lies in
/// `[0, w−1] × [0, h−1]`; out-of-bounds pixels are written as 0 and flagged,
/// never clamped to the border.
pub fn backward_warp(source: &RgbImage, flow: &FlowField) -> Result<WarpResult, WarpError> {
    let (w, h) = (source.width(), source.height());
    if flow.width() != w || flow.height() != h {
        return Err(WarpError::SizeMismatch(w, h, flow.width(), flow.height()));
    }
    let src = source.as_raw();
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    let mut data = Vec::with_capacity(w * h * 3);
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (u, v) = flow.at(x, y);
            let sx = x as f64 + u as f64;
            let sy = y as f64 + v as f64;
            if !(0.0..=max_x).contains(&sx) || !(0.0..=max_y).contains(&sy) {
                data.extend_from_slice(&[0.0; 3]);
                bits.push(false);
                continue;
            }
            let x0 = libm::floor(sx) as usize;
            let y0 = libm::floor(sy) as usize;
            let fx = sx - x0 as f64;
            let fy = sy - y0 as f64;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let i00 = (y0 * w + x0) * 3;
            let i10 = (y0 * w + x1) * 3;
            let i01 = (y1 * w + x0) * 3;
            let i11 = (y1 * w + x1) * 3;
            for c in 0..3 {
                let top = src[i00 + c] as f64 * (1.0 - fx) + src[i10 + c] as f64 * fx;
                let bottom = src[i01 + c] as f64 * (1.0 - fx) + src[i11 + c] as f64 * fx;
                data.push(top * (1.0 - fy) + bottom * fy);
            }
            bits.push(true);
        }
    }
    Ok(WarpResult {
        warped: WarpedImage {
            width: w,
            height: h,
            data,
        },
        in_bounds: BinaryMap::new(w, h, bits).expect("geometry preserved"),
    })
}

/// Largest per-channel absolute difference at one pixel.
#[inline]
pub(crate) fn max_channel_diff(a: [f64; 3], b: [u8; 3]) -> f64 {
    let d0 = libm::fabs(a[0] - b[0] as f64);
    let d1 = libm::fabs(a[1] - b[1] as f64);
    let d2 = libm::fabs(a[2] - b[2] as f64);
    d0.max(d1).max(d2)
}

/// 1 where the pixel is in bounds and the largest channel difference between
/// the warped and the original frame is strictly below `theta`.
pub fn validity_mask(
    warped_original: &WarpedImage,
    original: &RgbImage,
    in_bounds: &BinaryMap,
    theta: f64,
) -> Result<ValidityMask, WarpError> {
    let (w, h) = (original.width(), original.height());
    for (ow, oh) in [
        (warped_original.width(), warped_original.height()),
        (in_bounds.width(), in_bounds.height()),
    ] {
        if ow != w || oh != h {
            return Err(WarpError::SizeMismatch(w, h, ow, oh));
        }
    }
    let map = BinaryMap::from_fn(w, h, |x, y| {
        in_bounds.get(x, y) && max_channel_diff(warped_original.pixel(x, y), original.pixel(x, y)) < theta
    });
    Ok(ValidityMask(map))
}

/// Share of valid pixels.
pub fn valid_fraction(mask: &ValidityMask) -> Result<f64, WarpError> {
    let m = mask.map();
    if m.is_empty() {
        return Err(WarpError::EmptyMask);
    }
    Ok(m.count_ones() as f64 / m.len() as f64)
}
