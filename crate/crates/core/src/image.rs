//! The H×W×3 linear-intensity image every transform operates on.

use crate::error::{Error, Result};

/// Number of colour channels. Every image is RGB.
pub const CHANNELS: usize = 3;

/// Row-major, channel-interleaved RGB image of `f64` intensities.
///
/// Values are expected in `[0, 1]` at module boundaries; intermediate
/// stages may leave the range and are clamped once at the end of a
/// composite transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height * CHANNELS {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image needs {} values, got {}",
                width,
                height,
                CHANNELS,
                width * height * CHANNELS,
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Uniform image with the same value in every channel.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height * CHANNELS])
    }

    /// Builds an image from a per-pixel function returning `[r, g, b]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
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
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Extracts one channel as a dense `height × width` plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(CHANNELS).copied().collect()
    }

    /// Rebuilds an image from three planes.
    pub fn from_planes(width: usize, height: usize, planes: [&[f64]; 3]) -> Result<Self> {
        let n = width * height;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch(
                "plane length does not match width*height".into(),
            ));
        }
        let mut data = Vec::with_capacity(n * CHANNELS);
        for i in 0..n {
            data.push(planes[0][i]);
            data.push(planes[1][i]);
            data.push(planes[2][i]);
        }
        Self::new(width, height, data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn clamped(mut self) -> Self {
        self.clamp_unit();
        self
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "max_abs_diff on differently sized images"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Peak signal-to-noise ratio in dB for unit-range images.
/// Identical images give `f64::INFINITY`.
pub fn psnr(reference: &Image, test: &Image) -> f64 {
    assert!(reference.same_dims(test), "psnr on differently sized images");
    let mse = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.data.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Half-sample symmetric reflection (`dcba|abcd|dcba`) of an arbitrary
/// integer index into `0..n`.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Bilinear sample at a fractional position; out-of-range taps reflect.
pub(crate) fn sample_bilinear(img: &Image, x: f64, y: f64) -> [f64; 3] {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (w, h) = (img.width(), img.height());
    let xa = reflect_index(x0 as isize, w);
    let xb = reflect_index(x0 as isize + 1, w);
    let ya = reflect_index(y0 as isize, h);
    let yb = reflect_index(y0 as isize + 1, h);
    let p00 = img.pixel(xa, ya);
    let p10 = img.pixel(xb, ya);
    let p01 = img.pixel(xa, yb);
    let p11 = img.pixel(xb, yb);
    let mut out = [0.0; 3];
    for c in 0..CHANNELS {
        let top = p00[c] + (p10[c] - p00[c]) * fx;
        let bottom = p01[c] + (p11[c] - p01[c]) * fx;
        out[c] = top + (bottom - top) * fy;
    }
    out
}

/// Resamples to `(width, height)` by area averaging; a no-op clone when the
/// size already matches.
pub fn resize(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    if img.width() == width && img.height() == height {
        return Ok(img.clone());
    }
    Ok(resize_area(img, width, height))
}

/// Area-averaging resample to `(new_w, new_h)`. Each output pixel is the
/// coverage-weighted mean of the input pixels under its footprint.
pub(crate) fn resize_area(img: &Image, new_w: usize, new_h: usize) -> Image {
    let xw = area_weights(img.width(), new_w);
    let yw = area_weights(img.height(), new_h);
    let mut out = vec![0.0; new_w * new_h * CHANNELS];
    for (oy, ys) in yw.iter().enumerate() {
        for (ox, xs) in xw.iter().enumerate() {
            let mut acc = [0.0; 3];
            let mut total = 0.0;
            for &(iy, wy) in ys {
                for &(ix, wx) in xs {
                    let w = wy * wx;
                    let p = img.pixel(ix, iy);
                    for c in 0..CHANNELS {
                        acc[c] += p[c] * w;
                    }
                    total += w;
                }
            }
            let o = (oy * new_w + ox) * CHANNELS;
            for c in 0..CHANNELS {
                out[o + c] = acc[c] / total;
            }
        }
    }
    Image::new(new_w, new_h, out).expect("resize target is non-empty")
}

fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let start = o as f64 * scale;
            let end = (o + 1) as f64 * scale;
            let mut taps = Vec::new();
            let mut i = start.floor() as usize;
            while (i as f64) < end && i < src {
                let lo = (i as f64).max(start);
                let hi = ((i + 1) as f64).min(end);
                if hi > lo {
                    taps.push((i, hi - lo));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

/// Nearest-neighbour resample, used to blow a pixelated image back up.
pub(crate) fn resize_nearest(img: &Image, new_w: usize, new_h: usize) -> Image {
    let sx = img.width() as f64 / new_w as f64;
    let sy = img.height() as f64 / new_h as f64;
    Image::from_fn(new_w, new_h, |x, y| {
        let ix = (((x as f64 + 0.5) * sx) as usize).min(img.width() - 1);
        let iy = (((y as f64 + 0.5) * sy) as usize).min(img.height() - 1);
        img.pixel(ix, iy)
    })
    .expect("resize target is non-empty")
}
