use super::{Frame, Mask, RasterError, Rgb};

/// Per-channel mean over the masked pixels, `μ(I, M)`.
pub fn mean_color(f: &Frame, m: &Mask) -> Result<Rgb, RasterError> {
    m.check_shape(f.width(), f.height())?;
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for (i, _) in m.bits().iter().enumerate().filter(|(_, &b)| b) {
        let p = f.pixel_at(i);
        for c in 0..3 {
            sum[c] += p[c];
        }
        n += 1;
    }
    if n == 0 {
        return Err(RasterError::EmptyBand);
    }
    let n = n as f64;
    Ok([sum[0] / n, sum[1] / n, sum[2] / n])
}

/// Sum of absolute channel differences over the mask, with the number of
/// masked pixels. Shared by the pooled and per-frame error metrics.
pub(crate) fn masked_abs_sum(a: &Frame, b: &Frame, m: &Mask) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    let (da, db) = (a.data(), b.data());
    for (i, _) in m.bits().iter().enumerate().filter(|(_, &bit)| bit) {
        let o = i * 3;
        sum += (da[o] - db[o]).abs() + (da[o + 1] - db[o + 1]).abs() + (da[o + 2] - db[o + 2]).abs();
        n += 1;
    }
    (sum, n)
}

/// Mean absolute error over masked pixels and all three channels.
pub fn masked_mae(a: &Frame, b: &Frame, m: &Mask) -> Result<f64, RasterError> {
    b.check_shape(a.width(), a.height())?;
    m.check_shape(a.width(), a.height())?;
    let (sum, n) = masked_abs_sum(a, b, m);
    if n == 0 {
        return Err(RasterError::EmptyRegion);
    }
    Ok(sum / (3 * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_of_uniform_frame() {
        let f = Frame::filled(5, 4, [0.3, 0.6, 0.9]);
        let m = Mask::from_fn(5, 4, |x, y| x == y);
        let mu = mean_color(&f, &m).unwrap();
        for (a, b) in mu.iter().zip([0.3, 0.6, 0.9]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_of_black_and_white() {
        let f = Frame::from_fn(2, 1, |x, _| if x == 0 { [0.0; 3] } else { [1.0; 3] });
        assert_eq!(mean_color(&f, &Mask::full(2, 1)).unwrap(), [0.5; 3]);
    }

    #[test]
    fn empty_band_is_signalled() {
        let f = Frame::filled(3, 3, [0.1; 3]);
        assert_eq!(mean_color(&f, &Mask::empty(3, 3)), Err(RasterError::EmptyBand));
        assert_eq!(masked_mae(&f, &f, &Mask::empty(3, 3)), Err(RasterError::EmptyRegion));
    }

    #[test]
    fn mae_examples() {
        let m = Mask::full(4, 4);
        let a = Frame::filled(4, 4, [0.5; 3]);
        assert_eq!(masked_mae(&a, &a, &m).unwrap(), 0.0);
        let b = Frame::filled(4, 4, [0.68; 3]);
        assert!((masked_mae(&a, &b, &m).unwrap() - 0.18).abs() < 1e-12);
        let zero = Frame::filled(4, 4, [0.0; 3]);
        let one = Frame::filled(4, 4, [1.0; 3]);
        assert_eq!(masked_mae(&zero, &one, &m).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn mae_symmetric_nonnegative(
            a in proptest::collection::vec(0.0f64..=1.0, 48),
            b in proptest::collection::vec(0.0f64..=1.0, 48),
            bits in proptest::collection::vec(any::<bool>(), 16),
        ) {
            prop_assume!(bits.iter().any(|&x| x));
            let a = Frame::new(4, 4, a).unwrap();
            let b = Frame::new(4, 4, b).unwrap();
            let m = Mask::new(4, 4, bits).unwrap();
            let ab = masked_mae(&a, &b, &m).unwrap();
            prop_assert_eq!(ab, masked_mae(&b, &a, &m).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(masked_mae(&a, &a, &m).unwrap(), 0.0);
        }
    }
}
