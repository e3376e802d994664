use super::Mask;

/// Binary dilation with a `(2r+1) x (2r+1)` square structuring element.
///
/// Separable: a horizontal running-window pass followed by a vertical one.
/// Pixels outside the image are treated as background.
pub fn dilate_mask(m: &Mask, r: usize) -> Mask {
    if r == 0 {
        return m.clone();
    }
    let (w, h) = (m.width(), m.height());
    let bits = m.bits();
    let mut horiz = vec![false; w * h];
    let mut prefix = vec![0u32; w.max(h) + 1];
    for y in 0..h {
        let row = &bits[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x] as u32;
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            horiz[y * w + x] = prefix[hi] > prefix[lo];
        }
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + horiz[y * w + x] as u32;
        }
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r + 1).min(h);
            out[y * w + x] = prefix[hi] > prefix[lo];
        }
    }
    Mask::new(w, h, out).expect("shape preserved")
}
