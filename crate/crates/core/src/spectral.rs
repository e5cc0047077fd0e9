//! Per-channel 2-D DFT, power spectrum, and amplitude thresholding.
//!
//! Convention: the forward transform is unnormalized and the inverse
//! divides by `H·W`. Coefficients are stored in standard DFT order (DC at
//! index 0, no fftshift). Transforms run on the scalar FFT planner so the
//! floating-point operation sequence does not depend on the host's SIMD
//! features.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlannerScalar};

use crate::error::{Error, Result};
use crate::image::{Image, CHANNELS};

/// Largest side accepted by [`reference_dft`]; it is O(N⁴).
pub const REFERENCE_DFT_MAX_SIDE: usize = 64;

/// Imaginary residue above which an inverse transform is rejected.
pub const IMAGINARY_RESIDUAL_LIMIT: f64 = 1e-4;

/// Three channels of `height × width` complex coefficients, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralImage {
    width: usize,
    height: usize,
    channels: [Vec<Complex64>; 3],
}

impl SpectralImage {
    pub fn new(width: usize, height: usize, channels: [Vec<Complex64>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if channels.iter().any(|c| c.len() != width * height) {
            return Err(Error::DimensionMismatch(format!(
                "each channel of a {width}x{height} spectrum needs {} coefficients",
                width * height
            )));
        }
        Ok(SpectralImage {
            width,
            height,
            channels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        &self.channels[c]
    }

    #[inline]
    pub fn coefficient(&self, c: usize, u: usize, v: usize) -> Complex64 {
        self.channels[c][v * self.width + u]
    }

    /// Squared magnitude of every coefficient, per channel.
    pub fn power(&self) -> PowerSpectrum {
        PowerSpectrum {
            width: self.width,
            height: self.height,
            power: self
                .channels
                .clone()
                .map(|ch| ch.iter().map(|z| z.norm_sqr()).collect()),
        }
    }

    /// Number of non-zero coefficients over all channels.
    pub fn nonzero_count(&self) -> usize {
        self.channels
            .iter()
            .flatten()
            .filter(|z| z.re != 0.0 || z.im != 0.0)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub width: usize,
    pub height: usize,
    pub power: [Vec<f64>; 3],
}

impl PowerSpectrum {
    /// Maximum over all channels and frequencies.
    pub fn max(&self) -> f64 {
        self.power
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Unnormalized forward 2-D DFT of each channel.
pub fn forward_transform(img: &Image) -> Result<SpectralImage> {
    if !img.is_finite() {
        return Err(Error::InvalidArgument(
            "image contains non-finite values".into(),
        ));
    }
    let (w, h) = (img.width(), img.height());
    let mut planner = FftPlannerScalar::new();
    let row_fft = planner.plan_fft_forward(w);
    let col_fft = planner.plan_fft_forward(h);
    let channels = [0, 1, 2].map(|c| {
        let mut buf: Vec<Complex64> = img
            .channel(c)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        fft_2d(&mut buf, w, h, row_fft.as_ref(), col_fft.as_ref());
        buf
    });
    SpectralImage::new(w, h, channels)
}

/// Inverse 2-D DFT scaled by `1/(H·W)`; returns the real part.
///
/// The output is not clamped. A spectrum whose inverse has imaginary
/// residue above [`IMAGINARY_RESIDUAL_LIMIT`] is not the transform of a
/// real image and is rejected.
pub fn inverse_transform(spec: &SpectralImage) -> Result<Image> {
    let (w, h) = (spec.width, spec.height);
    let mut planner = FftPlannerScalar::new();
    let row_fft = planner.plan_fft_inverse(w);
    let col_fft = planner.plan_fft_inverse(h);
    let norm = 1.0 / (w * h) as f64;
    let mut residual = 0.0f64;
    let planes = spec.channels.clone().map(|mut buf| {
        fft_2d(&mut buf, w, h, row_fft.as_ref(), col_fft.as_ref());
        buf.iter()
            .map(|z| {
                residual = residual.max((z.im * norm).abs());
                z.re * norm
            })
            .collect::<Vec<f64>>()
    });
    if residual > IMAGINARY_RESIDUAL_LIMIT {
        return Err(Error::NumericalIntegrity {
            residual,
            limit: IMAGINARY_RESIDUAL_LIMIT,
        });
    }
    Image::from_planes(w, h, [&planes[0], &planes[1], &planes[2]])
}

fn fft_2d(buf: &mut [Complex64], w: usize, h: usize, rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
    rows.process(buf);
    let mut column = vec![Complex64::default(); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = buf[y * w + x];
        }
        cols.process(&mut column);
        for y in 0..h {
            buf[y * w + x] = column[y];
        }
    }
}

/// Maximum squared magnitude over every channel and frequency.
pub fn max_power(spec: &SpectralImage) -> f64 {
    spec.channels
        .iter()
        .flatten()
        .map(|z| z.norm_sqr())
        .fold(0.0, f64::max)
}

/// The single comparison deciding whether a coefficient is dropped: its
/// power (squared magnitude) lies strictly below the threshold.
#[inline]
pub fn is_suppressed(coefficient: Complex64, threshold: f64) -> bool {
    coefficient.norm_sqr() < threshold
}

/// Zeroes every non-DC coefficient whose power is below `threshold`. The
/// same threshold applies to all three channels.
pub fn apply_amplitude_threshold(spec: &SpectralImage, threshold: f64) -> Result<SpectralImage> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be non-negative, got {threshold}"
        )));
    }
    let channels = spec.channels.clone().map(|mut ch| {
        for z in ch.iter_mut().skip(1) {
            if is_suppressed(*z, threshold) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        ch
    });
    SpectralImage::new(spec.width, spec.height, channels)
}

/// Direct double-sum DFT, the ground truth for [`forward_transform`].
/// Twiddle angles are reduced modulo the period before evaluation.
pub fn reference_dft(img: &Image) -> Result<SpectralImage> {
    let (w, h) = (img.width(), img.height());
    if w > REFERENCE_DFT_MAX_SIDE || h > REFERENCE_DFT_MAX_SIDE {
        return Err(Error::InvalidArgument(format!(
            "reference_dft is limited to {REFERENCE_DFT_MAX_SIDE}x{REFERENCE_DFT_MAX_SIDE}, got {w}x{h}"
        )));
    }
    let tw_x: Vec<Complex64> = (0..w)
        .map(|k| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / w as f64))
        .collect();
    let tw_y: Vec<Complex64> = (0..h)
        .map(|k| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / h as f64))
        .collect();
    let channels = [0, 1, 2].map(|c| {
        let plane = img.channel(c);
        let mut out = vec![Complex64::default(); w * h];
        for v in 0..h {
            for u in 0..w {
                let mut acc = Complex64::default();
                for y in 0..h {
                    let ty = tw_y[(v * y) % h];
                    for x in 0..w {
                        acc += plane[y * w + x] * ty * tw_x[(u * x) % w];
                    }
                }
                out[v * w + u] = acc;
            }
        }
        out
    });
    SpectralImage::new(w, h, channels)
}

/// Direct double-sum inverse, paired with [`reference_dft`] in oracle chains.
pub fn reference_idft(spec: &SpectralImage) -> Result<Image> {
    let (w, h) = (spec.width, spec.height);
    if w > REFERENCE_DFT_MAX_SIDE || h > REFERENCE_DFT_MAX_SIDE {
        return Err(Error::InvalidArgument(format!(
            "reference_idft is limited to {REFERENCE_DFT_MAX_SIDE}x{REFERENCE_DFT_MAX_SIDE}"
        )));
    }
    let tw_x: Vec<Complex64> = (0..w)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / w as f64))
        .collect();
    let tw_y: Vec<Complex64> = (0..h)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / h as f64))
        .collect();
    let norm = 1.0 / (w * h) as f64;
    let mut data = vec![0.0; w * h * CHANNELS];
    for c in 0..CHANNELS {
        let ch = &spec.channels[c];
        for y in 0..h {
            for x in 0..w {
                let mut acc = Complex64::default();
                for v in 0..h {
                    let ty = tw_y[(v * y) % h];
                    for u in 0..w {
                        acc += ch[v * w + u] * ty * tw_x[(u * x) % w];
                    }
                }
                data[(y * w + x) * CHANNELS + c] = acc.re * norm;
            }
        }
    }
    Image::new(w, h, data)
}
