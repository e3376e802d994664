//! Latent-resolution packing of the region-aware conditioning signals.
//!
//! Layout of the 81 channels, in order:
//!
//! | channels | content |
//! |----------|---------|
//! | 0..16    | appearance latent |
//! | 16       | confidence, area-averaged over each 8x8 cell |
//! | 17..49   | reveal mask fold |
//! | 49..81   | expand mask fold |
//!
//! Mask fold: within an 8x8 cell, fold channel `c` covers row `c / 4` and the
//! horizontal pixel pair at columns `2 (c % 4)` and `2 (c % 4) + 1`. The
//! channel is set when either pixel of the pair is set. The fold is exact for
//! masks that are constant on every horizontal pair; other masks lose the
//! distinction between the two pixels of a pair.

use super::condition::ConditionField;
use super::GeometryError;
use crate::raster::{Mask, RegionMasks};

pub const SPATIAL_STRIDE: usize = 8;
pub const TEMPORAL_STRIDE: usize = 4;
pub const APPEARANCE_CHANNELS: usize = 16;
pub const MASK_CHANNELS_PER_REGION: usize = 32;
pub const MASK_CHANNELS: usize = 2 * MASK_CHANNELS_PER_REGION;
pub const PACKED_CHANNELS: usize = APPEARANCE_CHANNELS + 1 + MASK_CHANNELS;

const CONFIDENCE_CHANNEL: usize = APPEARANCE_CHANNELS;
const REVEAL_BASE: usize = CONFIDENCE_CHANNEL + 1;
const EXPAND_BASE: usize = REVEAL_BASE + MASK_CHANNELS_PER_REGION;

/// Channel-major latent raster.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRaster {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl LatentRaster {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }
}

/// The 81-channel conditioning tensor for one latent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedConditioning(pub LatentRaster);

impl PackedConditioning {
    pub fn channels(&self) -> usize {
        self.0.channels
    }

    pub fn raster(&self) -> &LatentRaster {
        &self.0
    }
}

/// Cell-relative `(dy, dx0)` of fold channel `c`; the pair is `dx0, dx0 + 1`.
fn fold_position(c: usize) -> (usize, usize) {
    (c / 4, 2 * (c % 4))
}

fn fold_mask(mask: &Mask, out: &mut LatentRaster, base: usize) {
    let (lh, lw) = (out.height, out.width);
    for c in 0..MASK_CHANNELS_PER_REGION {
        let (dy, dx) = fold_position(c);
        let ch = out.channel_mut(base + c);
        for ly in 0..lh {
            for lx in 0..lw {
                let (y, x) = (ly * SPATIAL_STRIDE + dy, lx * SPATIAL_STRIDE + dx);
                let set = mask.get(x, y) || mask.get(x + 1, y);
                ch[ly * lw + lx] = if set { 1.0 } else { 0.0 };
            }
        }
    }
}

fn unfold_mask(packed: &LatentRaster, base: usize) -> Mask {
    let (lh, lw) = (packed.height, packed.width);
    let mut m = Mask::empty(lw * SPATIAL_STRIDE, lh * SPATIAL_STRIDE);
    for c in 0..MASK_CHANNELS_PER_REGION {
        let (dy, dx) = fold_position(c);
        let ch = packed.channel(base + c);
        for ly in 0..lh {
            for lx in 0..lw {
                if ch[ly * lw + lx] > 0.5 {
                    let (y, x) = (ly * SPATIAL_STRIDE + dy, lx * SPATIAL_STRIDE + dx);
                    m.set(x, y, true);
                    m.set(x + 1, y, true);
                }
            }
        }
    }
    m
}

/// Concatenates `[appearance | confidence | reveal fold | expand fold]`.
pub fn pack_conditioning(
    field: &ConditionField,
    masks: &RegionMasks,
    appearance: &LatentRaster,
) -> Result<PackedConditioning, GeometryError> {
    let (w, h) = (field.width(), field.height());
    if w % SPATIAL_STRIDE != 0 || h % SPATIAL_STRIDE != 0 {
        return Err(GeometryError::Config(format!(
            "{w}x{h} is not a multiple of the spatial stride {SPATIAL_STRIDE}"
        )));
    }
    if masks.width() != w || masks.height() != h {
        return Err(GeometryError::Config(format!(
            "masks are {}x{}, field is {w}x{h}",
            masks.width(),
            masks.height()
        )));
    }
    let (lh, lw) = (h / SPATIAL_STRIDE, w / SPATIAL_STRIDE);
    if appearance.channels != APPEARANCE_CHANNELS || appearance.height != lh || appearance.width != lw {
        return Err(GeometryError::Config(format!(
            "appearance latent is {}x{}x{}, expected {APPEARANCE_CHANNELS}x{lh}x{lw}",
            appearance.channels, appearance.height, appearance.width
        )));
    }
    let mut out = LatentRaster::zeros(PACKED_CHANNELS, lh, lw);
    out.data[..appearance.data.len()].copy_from_slice(&appearance.data);

    let conf = out.channel_mut(CONFIDENCE_CHANNEL);
    let area = (SPATIAL_STRIDE * SPATIAL_STRIDE) as f64;
    for ly in 0..lh {
        for lx in 0..lw {
            let mut sum = 0.0;
            for dy in 0..SPATIAL_STRIDE {
                let row = (ly * SPATIAL_STRIDE + dy) * w + lx * SPATIAL_STRIDE;
                sum += field.confidence[row..row + SPATIAL_STRIDE].iter().sum::<f64>();
            }
            conf[ly * lw + lx] = (sum / area) as f32;
        }
    }
    fold_mask(&masks.reveal, &mut out, REVEAL_BASE);
    fold_mask(&masks.expand, &mut out, EXPAND_BASE);
    Ok(PackedConditioning(out))
}

/// Expands the 64 fold channels back to full-resolution `(reveal, expand)`.
pub fn unfold_masks(packed: &PackedConditioning) -> (Mask, Mask) {
    (
        unfold_mask(&packed.0, REVEAL_BASE),
        unfold_mask(&packed.0, EXPAND_BASE),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Frame;

    fn field(w: usize, h: usize, conf: f64) -> ConditionField {
        ConditionField {
            rgb: Frame::filled(w, h, [0.5; 3]),
            confidence: vec![conf; w * h],
            support: Mask::full(w, h),
            source_frame: vec![None; w * h],
        }
    }

    fn masks(reveal: Mask, expand: Mask) -> RegionMasks {
        let (w, h) = (reveal.width(), reveal.height());
        RegionMasks {
            preserve: reveal.or(&expand).not(),
            reveal,
            expand,
            dynamic: Mask::empty(w, h),
        }
    }

    #[test]
    fn fold_positions_cover_each_cell_once() {
        let mut seen = [[0u8; 8]; 8];
        for c in 0..MASK_CHANNELS_PER_REGION {
            let (dy, dx) = fold_position(c);
            seen[dy][dx] += 1;
            seen[dy][dx + 1] += 1;
        }
        assert!(seen.iter().flatten().all(|&n| n == 1));
    }

    #[test]
    fn channel_count_and_empty_masks() {
        let (w, h) = (32, 16);
        let p = pack_conditioning(
            &field(w, h, 0.25),
            &masks(Mask::empty(w, h), Mask::empty(w, h)),
            &LatentRaster::zeros(16, 2, 4),
        )
        .unwrap();
        assert_eq!(p.channels(), 81);
        for c in REVEAL_BASE..PACKED_CHANNELS {
            assert!(p.raster().channel(c).iter().all(|&v| v == 0.0));
        }
        assert!(p.raster().channel(CONFIDENCE_CHANNEL).iter().all(|&v| v == 0.25));
    }

    #[test]
    fn full_reveal_sets_first_mask_half() {
        let (w, h) = (16, 16);
        let p = pack_conditioning(
            &field(w, h, 1.0),
            &masks(Mask::full(w, h), Mask::empty(w, h)),
            &LatentRaster::zeros(16, 2, 2),
        )
        .unwrap();
        for c in 0..32 {
            assert!(p.raster().channel(REVEAL_BASE + c).iter().all(|&v| v == 1.0));
            assert!(p.raster().channel(EXPAND_BASE + c).iter().all(|&v| v == 0.0));
        }
        let (r, e) = unfold_masks(&p);
        assert_eq!(r, Mask::full(w, h));
        assert_eq!(e, Mask::empty(w, h));
    }

    #[test]
    fn fold_round_trips_pair_constant_masks() {
        let (w, h) = (24, 16);
        let reveal = Mask::from_fn(w, h, |x, y| (x / 2 * 7 + y * 3) % 5 == 0);
        let expand = Mask::from_fn(w, h, |x, y| !reveal.get(x, y) && (x / 2 + y) % 3 == 1);
        let p = pack_conditioning(
            &field(w, h, 0.0),
            &masks(reveal.clone(), expand.clone()),
            &LatentRaster::zeros(16, 2, 3),
        )
        .unwrap();
        assert_eq!(unfold_masks(&p), (reveal, expand));
    }

    #[test]
    fn confidence_area_average() {
        let (w, h) = (16, 8);
        let mut f = field(w, h, 0.0);
        for y in 0..8 {
            for x in 0..4 {
                f.confidence[y * w + x] = 1.0;
            }
        }
        let p = pack_conditioning(&f, &masks(Mask::empty(w, h), Mask::empty(w, h)), &LatentRaster::zeros(16, 1, 2)).unwrap();
        assert_eq!(p.raster().channel(CONFIDENCE_CHANNEL), &[0.5, 0.0]);
    }

    #[test]
    fn appearance_copied_and_shapes_checked() {
        let (w, h) = (16, 8);
        let mut app = LatentRaster::zeros(16, 1, 2);
        for (i, v) in app.data.iter_mut().enumerate() {
            *v = i as f32;
        }
        let m = masks(Mask::empty(w, h), Mask::empty(w, h));
        let p = pack_conditioning(&field(w, h, 0.0), &m, &app).unwrap();
        assert_eq!(&p.raster().data[..32], &app.data[..]);

        assert!(pack_conditioning(&field(w, h, 0.0), &m, &LatentRaster::zeros(16, 2, 2)).is_err());
        let odd = masks(Mask::empty(12, 8), Mask::empty(12, 8));
        assert!(matches!(
            pack_conditioning(&field(12, 8, 0.0), &odd, &LatentRaster::zeros(16, 1, 1)),
            Err(GeometryError::Config(_))
        ));
    }
}
