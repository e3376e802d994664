use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use super::{Frame, Mask};

/// Mask pixels strictly above this 8-bit value are set.
pub const MASK_THRESHOLD: u8 = 127;

pub fn load_frame_png(path: &Path) -> Result<Frame, image::ImageError> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => img
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        _ => img
            .to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 255.0)
            .collect(),
    };
    Ok(Frame::new(w, h, data).expect("decoder returns w*h*3 samples"))
}

/// Loads an 8-bit mask, binarized at [`MASK_THRESHOLD`].
pub fn load_mask_png(path: &Path) -> Result<Mask, image::ImageError> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let bits = img.into_raw().into_iter().map(|v| v > MASK_THRESHOLD).collect();
    Ok(Mask::new(w, h, bits).expect("decoder returns w*h samples"))
}

fn encode(path: &Path, bytes: &[u8], w: usize, h: usize, color: ExtendedColorType) -> Result<(), image::ImageError> {
    let file = BufWriter::new(File::create(path)?);
    PngEncoder::new_with_quality(file, CompressionType::Fast, FilterType::Sub).write_image(
        bytes,
        w as u32,
        h as u32,
        color,
    )
}

/// Writes an 8-bit RGB PNG (channels rounded to the nearest 1/255).
pub fn save_frame_png(frame: &Frame, path: &Path) -> Result<(), image::ImageError> {
    let bytes: Vec<u8> = frame.data().iter().map(|v| (v * 255.0).round() as u8).collect();
    encode(path, &bytes, frame.width(), frame.height(), ExtendedColorType::Rgb8)
}

/// Writes an 8-bit grayscale PNG with 255 for set pixels.
pub fn save_mask_png(mask: &Mask, path: &Path) -> Result<(), image::ImageError> {
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode(path, &bytes, mask.width(), mask.height(), ExtendedColorType::L8)
}
