use super::{Frame, Mask, Rgb};

pub const HUE_BINS: usize = 16;
pub const SATURATION_BINS: usize = 8;
pub const VALUE_BINS: usize = 8;
const BIN_COUNT: usize = HUE_BINS * SATURATION_BINS * VALUE_BINS;

/// Hexcone RGB to HSV with all three components in `[0, 1]`.
/// Hue is `degrees / 360`; achromatic pixels get hue 0.
pub fn rgb_to_hsv_pixel(rgb: Rgb) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else {
        let sector = if max == r {
            ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            (b - r) / delta + 2.0
        } else {
            (r - g) / delta + 4.0
        };
        let h = sector / 6.0;
        if h >= 1.0 {
            h - 1.0
        } else {
            h
        }
    };
    [h, s, max]
}

/// Converts a whole frame; the returned raster stores `(h, s, v)` in place of
/// `(r, g, b)`.
pub fn rgb_to_hsv(f: &Frame) -> Frame {
    let data = f
        .data()
        .chunks_exact(3)
        .flat_map(|p| rgb_to_hsv_pixel([p[0], p[1], p[2]]))
        .collect();
    Frame::new(f.width(), f.height(), data).expect("shape preserved")
}

/// Normalized 16 x 8 x 8 HSV histogram (hue-major layout).
#[derive(Debug, Clone, PartialEq)]
pub struct HsvHistogram {
    bins: Vec<f64>,
}

impl HsvHistogram {
    pub fn zeros() -> Self {
        Self {
            bins: vec![0.0; BIN_COUNT],
        }
    }

    /// Wraps raw bin values; the caller is responsible for normalization.
    pub fn from_bins(bins: Vec<f64>) -> Option<Self> {
        (bins.len() == BIN_COUNT && bins.iter().all(|b| *b >= 0.0)).then_some(Self { bins })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bin_index(hsv: [f64; 3]) -> usize {
        let q = |v: f64, n: usize| ((v * n as f64) as usize).min(n - 1);
        let h = q(hsv[0], HUE_BINS);
        let s = q(hsv[1], SATURATION_BINS);
        let v = q(hsv[2], VALUE_BINS);
        (h * SATURATION_BINS + s) * VALUE_BINS + v
    }
}

/// Histogram of the masked pixels, normalized by the masked pixel count.
/// An empty mask gives the all-zero histogram.
pub fn hsv_histogram(f: &Frame, m: &Mask) -> HsvHistogram {
    assert!(
        f.width() == m.width() && f.height() == m.height(),
        "frame and mask shapes differ"
    );
    let mut hist = HsvHistogram::zeros();
    let mut n = 0usize;
    for (i, _) in m.bits().iter().enumerate().filter(|(_, &b)| b) {
        hist.bins[HsvHistogram::bin_index(rgb_to_hsv_pixel(f.pixel_at(i)))] += 1.0;
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        hist.bins.iter_mut().for_each(|b| *b *= inv);
    }
    hist
}

/// `Σ_k min(a_k, b_k)`.
pub fn histogram_intersection(a: &HsvHistogram, b: &HsvHistogram) -> f64 {
    a.bins.iter().zip(&b.bins).map(|(x, y)| x.min(*y)).sum()
}
