//! Weather effects. `snow` follows the common-corruptions recipe; `rain`,
//! `drizzle` and `icy_window` are parameterized by the local ladders in the
//! constants file.

use rand_chacha::ChaCha8Rng;

use super::blur::{center_zoom, directional_blur};
use super::constants::{Drizzle, IcyWindow, Rain, Snow};
use super::rng::{normal, uniform};
use crate::image::{sample_bilinear, Image, CHANNELS};
use crate::transforms::{apply_acuity_blur, REC601_LUMA};

const RAIN_COLOUR: [f64; 3] = [0.78, 0.8, 0.85];
const ICE_COLOUR: [f64; 3] = [0.86, 0.91, 0.96];

struct Streaks {
    density: f64,
    length: f64,
    opacity: f64,
    max_slant_deg: f64,
}

/// Draws straight streaks from a shared random stream. The slant is drawn
/// first and drop positions after, so a denser setting repeats every drop
/// of a sparser one.
fn draw_streaks(img: &mut Image, s: &Streaks, rng: &mut ChaCha8Rng) {
    let (w, h) = (img.width(), img.height());
    let slant = (uniform(rng) * 2.0 - 1.0) * s.max_slant_deg.to_radians();
    let (dx, dy) = (slant.sin(), slant.cos());
    let drops = (s.density * (w * h) as f64 / 1000.0).round() as usize;
    let steps = s.length.round().max(1.0) as usize;
    for _ in 0..drops {
        let x0 = uniform(rng) * w as f64;
        let y0 = uniform(rng) * h as f64;
        for k in 0..steps {
            let x = (x0 + k as f64 * dx).floor();
            let y = (y0 + k as f64 * dy).floor();
            if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
                continue;
            }
            let mut p = img.pixel(x as usize, y as usize);
            for c in 0..CHANNELS {
                p[c] += s.opacity * (RAIN_COLOUR[c] - p[c]);
            }
            img.set_pixel(x as usize, y as usize, p);
        }
    }
}

pub(super) fn rain(img: &Image, c: &Rain, i: usize, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v *= c.dim[i];
    }
    draw_streaks(
        &mut out,
        &Streaks {
            density: c.drops_per_kilopixel[i],
            length: c.length[i],
            opacity: c.opacity[i],
            max_slant_deg: c.max_slant_deg,
        },
        rng,
    );
    apply_acuity_blur(&out, c.haze_sigma[i])
}

pub(super) fn drizzle(img: &Image, c: &Drizzle, i: usize, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    let haze = c.haze[i];
    for v in out.data_mut() {
        *v += haze * (0.7 - *v);
    }
    draw_streaks(
        &mut out,
        &Streaks {
            density: c.drops_per_kilopixel[i],
            length: c.length[i],
            opacity: c.opacity[i],
            max_slant_deg: 10.0,
        },
        rng,
    );
    apply_acuity_blur(&out, c.blur_sigma[i])
}

/// Smoothed white-noise field rescaled to `[-1, 1]`.
fn smooth_field(w: usize, h: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw = Image::from_fn(w, h, |_, _| [normal(rng); 3]).expect("non-empty");
    let plane = apply_acuity_blur(&raw, sigma).channel(0);
    let peak = plane.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    plane.into_iter().map(|v| v / peak).collect()
}

/// Frosted glass: a smooth refraction warp, blur, and a patchy ice overlay.
pub(super) fn icy_window(img: &Image, c: &IcyWindow, i: usize, rng: &mut ChaCha8Rng) -> Image {
    let (w, h) = (img.width(), img.height());
    let frost = smooth_field(w, h, c.texture_sigma, rng);
    let warp_x = smooth_field(w, h, 3.0 * c.texture_sigma, rng);
    let warp_y = smooth_field(w, h, 3.0 * c.texture_sigma, rng);
    let amount = c.distortion[i];
    let warped = Image::from_fn(w, h, |x, y| {
        let k = y * w + x;
        sample_bilinear(img, x as f64 + amount * warp_x[k], y as f64 + amount * warp_y[k])
    })
    .expect("same size");
    let mut out = apply_acuity_blur(&warped, c.blur_sigma[i]);
    let strength = c.frost[i];
    for (k, px) in out.data_mut().chunks_exact_mut(CHANNELS).enumerate() {
        let n = 0.5 + 0.5 * frost[k];
        let m = strength * (0.5 + 0.5 * n);
        for ch in 0..CHANNELS {
            let ice = ICE_COLOUR[ch] * (0.85 + 0.15 * n);
            px[ch] += m * (ice - px[ch]);
        }
    }
    out
}

pub(super) fn snow(img: &Image, c: &Snow, i: usize, rng: &mut ChaCha8Rng) -> Image {
    let (w, h) = (img.width(), img.height());
    let layer = Image::from_fn(w, h, |_, _| [normal(rng); 3]).expect("non-empty");
    let angle = -135.0 + 90.0 * uniform(rng);

    let mut layer = layer;
    for v in layer.data_mut() {
        *v = c.mean[i] + c.std[i] * *v;
    }
    let mut layer = if c.zoom[i] > 1.0 {
        center_zoom(&layer, c.zoom[i])
    } else {
        layer
    };
    for v in layer.data_mut() {
        *v = if *v < c.threshold[i] { 0.0 } else { v.min(1.0) };
    }
    let layer = directional_blur(&layer, c.motion_radius[i], c.motion_sigma[i], angle);

    let blend = c.blend[i];
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let p = img.pixel(x, y);
            let gray = REC601_LUMA[0] * p[0] + REC601_LUMA[1] * p[1] + REC601_LUMA[2] * p[2];
            let flake = layer.pixel(x, y)[0] + layer.pixel(w - 1 - x, h - 1 - y)[0];
            let mut q = [0.0; 3];
            for ch in 0..CHANNELS {
                let lifted = p[ch].max(gray * 1.5 + 0.5);
                q[ch] = blend * p[ch] + (1.0 - blend) * lifted + flake;
            }
            out.set_pixel(x, y, q);
        }
    }
    out
}
