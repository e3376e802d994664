//! Raster primitives shared by every metric: RGB frames, binary masks and the
//! per-frame Preserve/Reveal/Expand/Dynamic mask bundle.

mod color;
mod morphology;
pub mod png;
pub(crate) mod stats;

pub use color::{
    histogram_intersection, hsv_histogram, rgb_to_hsv, rgb_to_hsv_pixel, HsvHistogram,
    HUE_BINS, SATURATION_BINS, VALUE_BINS,
};
pub use morphology::dilate_mask;
pub use stats::{mean_color, masked_mae};

use thiserror::Error;

pub type Rgb = [f64; 3];

/// An ordered list of frames sharing one resolution.
pub type FrameSequence = Vec<Frame>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("band is empty")]
    EmptyBand,
    #[error("region is empty")]
    EmptyRegion,
    #[error("partition violated at pixel ({x}, {y}): {reason}")]
    PartitionViolation { x: usize, y: usize, reason: String },
}

/// Row-major RGB raster with every channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Builds a frame from interleaved RGB values. Values outside `[0, 1]`
    /// are clamped and reported once through `log::warn!`.
    pub fn new(width: usize, height: usize, mut data: Vec<f64>) -> Result<Self, RasterError> {
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(RasterError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        let mut clamped = 0usize;
        for v in data.iter_mut() {
            let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            if c != *v || v.is_nan() {
                clamped += 1;
                *v = c;
            }
        }
        if clamped > 0 {
            log::warn!("clamped {clamped} channel values into [0, 1]");
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Self::from_fn(width, height, |_, _| color)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                let p = f(x, y);
                data.extend(p.iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Interleaved RGB values, row-major.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixel_at(y * self.width + x)
    }

    /// Pixel by linear (row-major) index.
    #[inline]
    pub fn pixel_at(&self, i: usize) -> Rgb {
        let o = i * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, color: Rgb) {
        let o = (y * self.width + x) * 3;
        for c in 0..3 {
            self.data[o + c] = color[c].clamp(0.0, 1.0);
        }
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, w: usize, h: usize) -> Result<(), RasterError> {
        if self.width == w && self.height == h {
            Ok(())
        } else {
            Err(RasterError::DimensionMismatch(self.width, self.height, w, h))
        }
    }
}

/// Row-major binary mask; `true` marks a pixel inside the region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != width * height {
            return Err(RasterError::BufferSize {
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

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
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

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn not(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert!(self.same_shape(other), "mask shapes differ");
        Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub(crate) fn check_shape(&self, w: usize, h: usize) -> Result<(), RasterError> {
        if self.width == w && self.height == h {
            Ok(())
        } else {
            Err(RasterError::DimensionMismatch(self.width, self.height, w, h))
        }
    }
}

/// Per-frame region roles. Preserve, Reveal and Expand partition the frame;
/// Dynamic is the moving subset of Preserve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMasks {
    pub preserve: Mask,
    pub reveal: Mask,
    pub expand: Mask,
    pub dynamic: Mask,
}

impl RegionMasks {
    /// All-preserve masks (the identity edit).
    pub fn all_preserve(width: usize, height: usize) -> Self {
        Self {
            preserve: Mask::full(width, height),
            reveal: Mask::empty(width, height),
            expand: Mask::empty(width, height),
            dynamic: Mask::empty(width, height),
        }
    }

    pub fn width(&self) -> usize {
        self.preserve.width()
    }

    pub fn height(&self) -> usize {
        self.preserve.height()
    }

    /// Checks shapes, the three-way partition and `dynamic ⊆ preserve`.
    /// Reports the first offending pixel in row-major order.
    pub fn validate(&self) -> Result<(), RasterError> {
        let (w, h) = (self.width(), self.height());
        for m in [&self.reveal, &self.expand, &self.dynamic] {
            m.check_shape(w, h)?;
        }
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let p = self.preserve.bits[i];
                let r = self.reveal.bits[i];
                let e = self.expand.bits[i];
                let n = p as u8 + r as u8 + e as u8;
                if n != 1 {
                    let reason = if n == 0 {
                        "pixel belongs to no region".to_string()
                    } else {
                        let mut roles = Vec::new();
                        if p {
                            roles.push("preserve");
                        }
                        if r {
                            roles.push("reveal");
                        }
                        if e {
                            roles.push("expand");
                        }
                        format!("pixel belongs to {}", roles.join(" and "))
                    };
                    return Err(RasterError::PartitionViolation { x, y, reason });
                }
                if self.dynamic.bits[i] && !p {
                    return Err(RasterError::PartitionViolation {
                        x,
                        y,
                        reason: "dynamic pixel outside preserve".to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}
