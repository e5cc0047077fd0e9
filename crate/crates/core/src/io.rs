//! Image decoding and lossless encoding.
//!
//! Decoded 8-bit samples map to `v / 255` and 16-bit samples to
//! `v / 65535`, taken as linear intensities with no transfer-curve
//! conversion. Outputs are always 8-bit RGB PNG.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ImageEncoder, ImageReader, RgbImage};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;

pub fn from_rgb8(rgb: &RgbImage) -> Image {
    let data = rgb.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
    Image::new(rgb.width() as usize, rgb.height() as usize, data).expect("decoded image is non-empty")
}

pub fn to_rgb8(img: &Image) -> RgbImage {
    let raw: Vec<u8> = img
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    RgbImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("buffer size matches")
}

pub fn from_dynamic(img: &DynamicImage) -> Result<Image> {
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::EmptyImage);
    }
    let is_16bit = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    if is_16bit {
        let rgb = img.to_rgb16();
        let data = rgb.as_raw().iter().map(|&v| v as f64 / 65535.0).collect();
        Image::new(rgb.width() as usize, rgb.height() as usize, data)
    } else {
        Ok(from_rgb8(&img.to_rgb8()))
    }
}

pub fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| Error::Decode {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

pub fn load_image(path: &Path) -> Result<Image> {
    from_dynamic(&decode(path)?)
}

/// Deterministic PNG bytes: fixed compression level and filter.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let rgb = to_rgb8(img);
    let mut buf = Cursor::new(Vec::new());
    PngEncoder::new_with_quality(&mut buf, CompressionType::Default, FilterType::Adaptive)
        .write_image(
            rgb.as_raw(),
            rgb.width(),
            rgb.height(),
            image::ExtendedColorType::Rgb8,
        )?;
    Ok(buf.into_inner())
}

pub fn save_png(img: &Image, path: &Path) -> Result<Vec<u8>> {
    let bytes = encode_png(img)?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
