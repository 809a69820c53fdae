//! Frame, mask and sequence containers.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("pixel buffer has {actual} bytes, expected {expected} for {width}x{height}")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("image dimensions must be non-zero")]
    EmptyImage,
    #[error("insufficient frames: {0} (need at least 2)")]
    InsufficientFrames(usize),
    #[error("frame {index} is {actual_w}x{actual_h}, expected {width}x{height}")]
    SizeMismatch {
        index: usize,
        width: usize,
        height: usize,
        actual_w: usize,
        actual_h: usize,
    },
    #[error("frame-count mismatch: {original} original vs {edited} edited")]
    FrameCountMismatch { original: usize, edited: usize },
    #[error("mask count mismatch: {masks} masks for {frames} frames")]
    MaskCountMismatch { masks: usize, frames: usize },
    #[error("mask {index} value {value} is not binary")]
    NonBinaryMask { index: usize, value: u8 },
}

/// 8-bit interleaved RGB image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyImage);
        }
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(FrameError::BufferSize {
                width,
                height,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
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
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn same_size(&self, other: &RgbImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rec. 601 luma on the 0–255 scale, row-major.
    pub fn luma(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }
}

/// Per-pixel binary map, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyImage);
        }
        if bits.len() != width * height {
            return Err(FrameError::BufferSize {
                width,
                height,
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: alloc::vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Thresholds an 8-bit single-channel plane: values ≥ 128 become 1.
    pub fn from_gray(width: usize, height: usize, gray: &[u8]) -> Result<Self, FrameError> {
        Self::new(width, height, gray.iter().map(|&g| g >= 128).collect())
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
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Renders the map as 0/255 gray bytes.
    pub fn to_gray(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }
}

/// Ordered frames of one video; all frames share one size and there are at
/// least two of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSequence {
    frames: Vec<RgbImage>,
}

impl FrameSequence {
    pub fn new(frames: Vec<RgbImage>) -> Result<Self, FrameError> {
        if frames.len() < 2 {
            return Err(FrameError::InsufficientFrames(frames.len()));
        }
        let (width, height) = (frames[0].width(), frames[0].height());
        for (index, f) in frames.iter().enumerate() {
            if f.width() != width || f.height() != height {
                return Err(FrameError::SizeMismatch {
                    index,
                    width,
                    height,
                    actual_w: f.width(),
                    actual_h: f.height(),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[RgbImage] {
        &self.frames
    }

    pub fn frame(&self, index: usize) -> &RgbImage {
        &self.frames[index]
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    /// Same frames, reverse order.
    pub fn reversed(&self) -> Self {
        let mut frames = self.frames.clone();
        frames.reverse();
        Self { frames }
    }

    /// Checks that `other` can be compared frame-by-frame with `self`.
    pub fn check_paired(&self, other: &FrameSequence) -> Result<(), FrameError> {
        if self.frame_count() != other.frame_count() {
            return Err(FrameError::FrameCountMismatch {
                original: self.frame_count(),
                edited: other.frame_count(),
            });
        }
        if self.width() != other.width() || self.height() != other.height() {
            return Err(FrameError::SizeMismatch {
                index: 0,
                width: self.width(),
                height: self.height(),
                actual_w: other.width(),
                actual_h: other.height(),
            });
        }
        Ok(())
    }
}

/// Object masks paired with a video: 1 marks the region to be edited.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSequence {
    masks: Vec<BinaryMap>,
}

impl MaskSequence {
    pub fn new(masks: Vec<BinaryMap>) -> Result<Self, FrameError> {
        if masks.is_empty() {
            return Err(FrameError::MaskCountMismatch { masks: 0, frames: 0 });
        }
        let (width, height) = (masks[0].width(), masks[0].height());
        for (index, m) in masks.iter().enumerate() {
            if m.width() != width || m.height() != height {
                return Err(FrameError::SizeMismatch {
                    index,
                    width,
                    height,
                    actual_w: m.width(),
                    actual_h: m.height(),
                });
            }
        }
        Ok(Self { masks })
    }

    pub fn masks(&self) -> &[BinaryMap] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn check_paired(&self, frames: &FrameSequence) -> Result<(), FrameError> {
        if self.len() != frames.frame_count() {
            return Err(FrameError::MaskCountMismatch {
                masks: self.len(),
                frames: frames.frame_count(),
            });
        }
        let m = &self.masks[0];
        if m.width() != frames.width() || m.height() != frames.height() {
            return Err(FrameError::SizeMismatch {
                index: 0,
                width: frames.width(),
                height: frames.height(),
                actual_w: m.width(),
                actual_h: m.height(),
            });
        }
        Ok(())
    }
}
