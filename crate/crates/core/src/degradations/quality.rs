use std::f64::consts::PI;
use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageFormat};
use rand_chacha::ChaCha8Rng;

use super::rng::uniform;
use crate::error::Result;
use crate::image::{resize_area, resize_nearest, sample_bilinear, Image};
use crate::io::{from_rgb8, to_rgb8};

/// Area-average down to `scale` of the size, then nearest-neighbour back up.
pub(super) fn pixelate(img: &Image, scale: f64) -> Image {
    let (w, h) = (img.width(), img.height());
    let sw = ((w as f64 * scale).floor() as usize).max(1);
    let sh = ((h as f64 * scale).floor() as usize).max(1);
    resize_nearest(&resize_area(img, sw, sh), w, h)
}

/// Baseline JPEG encode/decode round trip at the given quality.
pub(super) fn jpeg(img: &Image, quality: u8) -> Result<Image> {
    let rgb = to_rgb8(img);
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality).encode(
        rgb.as_raw(),
        rgb.width(),
        rgb.height(),
        ExtendedColorType::Rgb8,
    )?;
    let decoded = image::load(Cursor::new(buf), ImageFormat::Jpeg)?.to_rgb8();
    Ok(from_rgb8(&decoded))
}

/// Sets a random `fraction` of pixels (all channels) to black.
pub(super) fn pixel_dropout(img: &Image, fraction: f64, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        if uniform(rng) < fraction {
            px.fill(0.0);
        }
    }
    out
}

/// Sinusoidal displacement: x shifts with a wave along y and vice versa.
pub(super) fn wave(img: &Image, amplitude: f64, wavelength: f64, rng: &mut ChaCha8Rng) -> Image {
    let phase_x = uniform(rng) * 2.0 * PI;
    let phase_y = uniform(rng) * 2.0 * PI;
    let k = 2.0 * PI / wavelength;
    Image::from_fn(img.width(), img.height(), |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        sample_bilinear(
            img,
            xf + amplitude * (k * yf + phase_x).sin(),
            yf + amplitude * (k * xf + phase_y).sin(),
        )
    })
    .expect("same size")
}
