use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;

use super::constants::MotionBlur;
use super::rng::uniform;
use crate::image::{reflect_index, sample_bilinear, Image, CHANNELS};
use crate::transforms::apply_acuity_blur;

pub(super) fn gaussian(img: &Image, sigma: f64) -> Image {
    apply_acuity_blur(img, sigma)
}

/// Averages the image with centre zooms `1, 1+step, …` below `max_zoom`.
pub(super) fn zoom(img: &Image, max_zoom: f64, step: f64) -> Image {
    let factors: Vec<f64> = (0..)
        .map(|i| 1.0 + i as f64 * step)
        .take_while(|z| *z < max_zoom - 1e-9)
        .collect();
    let mut acc = img.clone();
    for &z in &factors {
        let zoomed = center_zoom(img, z);
        for (a, b) in acc.data_mut().iter_mut().zip(zoomed.data()) {
            *a += b;
        }
    }
    let n = (factors.len() + 1) as f64;
    for v in acc.data_mut() {
        *v /= n;
    }
    acc
}

/// Magnifies about the image centre by `z ≥ 1`, keeping the size.
pub(super) fn center_zoom(img: &Image, z: f64) -> Image {
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    Image::from_fn(img.width(), img.height(), |x, y| {
        sample_bilinear(img, cx + (x as f64 - cx) / z, cy + (y as f64 - cy) / z)
    })
    .expect("same size")
}

/// One-sided directional blur with Gaussian tap weights over `2r+1`
/// integer offsets along a random angle in `±max_angle_deg`.
pub(super) fn motion(img: &Image, c: &MotionBlur, i: usize, rng: &mut ChaCha8Rng) -> Image {
    let angle = (uniform(rng) * 2.0 - 1.0) * c.max_angle_deg;
    directional_blur(img, c.radius[i], c.sigma[i], angle)
}

pub(super) fn directional_blur(img: &Image, radius: usize, sigma: f64, angle_deg: f64) -> Image {
    let theta = angle_deg * PI / 180.0;
    let (dx, dy) = (theta.cos(), theta.sin());
    let taps: Vec<(isize, isize, f64)> = (0..=2 * radius)
        .map(|k| {
            let k = k as f64;
            let w = (-(k * k) / (2.0 * sigma * sigma)).exp();
            ((k * dx).round() as isize, (k * dy).round() as isize, w)
        })
        .collect();
    let total: f64 = taps.iter().map(|t| t.2).sum();
    let (w, h) = (img.width(), img.height());
    Image::from_fn(w, h, |x, y| {
        let mut acc = [0.0; 3];
        for &(ox, oy, wt) in &taps {
            let p = img.pixel(
                reflect_index(x as isize - ox, w),
                reflect_index(y as isize - oy, h),
            );
            for ch in 0..CHANNELS {
                acc[ch] += wt * p[ch];
            }
        }
        acc.map(|a| a / total)
    })
    .expect("same size")
}

/// Disk kernel of the given radius, softened by a small Gaussian to reduce
/// aliasing, applied as a 2-D convolution with reflective borders.
pub(super) fn defocus(img: &Image, radius: f64, alias_sigma: f64) -> Image {
    let kernel = disk_kernel(radius, alias_sigma);
    convolve_2d(img, &kernel)
}

fn disk_kernel(radius: f64, alias_sigma: f64) -> Vec<Vec<f64>> {
    let half = radius.max(8.0).ceil() as isize;
    let size = (2 * half + 1) as usize;
    let mut disk = vec![vec![0.0; size]; size];
    for (yi, row) in disk.iter_mut().enumerate() {
        for (xi, v) in row.iter_mut().enumerate() {
            let (x, y) = (xi as f64 - half as f64, yi as f64 - half as f64);
            if x * x + y * y <= radius * radius {
                *v = 1.0;
            }
        }
    }
    // soften with a 3×3 (or 5×5 for large radii) Gaussian
    let r = if radius <= 8.0 { 1isize } else { 2 };
    let g: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * alias_sigma * alias_sigma)).exp())
        .collect();
    let mut soft = vec![vec![0.0; size]; size];
    for y in 0..size as isize {
        for x in 0..size as isize {
            let mut acc = 0.0;
            for (j, gy) in g.iter().enumerate() {
                for (i, gx) in g.iter().enumerate() {
                    let sx = x + i as isize - r;
                    let sy = y + j as isize - r;
                    if (0..size as isize).contains(&sx) && (0..size as isize).contains(&sy) {
                        acc += gx * gy * disk[sy as usize][sx as usize];
                    }
                }
            }
            soft[y as usize][x as usize] = acc;
        }
    }
    let sum: f64 = soft.iter().flatten().sum();
    soft.into_iter()
        .map(|row| row.into_iter().map(|v| v / sum).collect())
        .collect()
}

fn convolve_2d(img: &Image, kernel: &[Vec<f64>]) -> Image {
    let half = (kernel.len() / 2) as isize;
    let taps: Vec<(isize, isize, f64)> = kernel
        .iter()
        .enumerate()
        .flat_map(|(j, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(move |(i, v)| (i as isize - half, j as isize - half, *v))
        })
        .collect();
    let (w, h) = (img.width(), img.height());
    Image::from_fn(w, h, |x, y| {
        let mut acc = [0.0; 3];
        for &(ox, oy, wt) in &taps {
            let p = img.pixel(
                reflect_index(x as isize + ox, w),
                reflect_index(y as isize + oy, h),
            );
            for ch in 0..CHANNELS {
                acc[ch] += wt * p[ch];
            }
        }
        acc
    })
    .expect("same size")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoom_factor_ladder_matches_arange() {
        let count = |max: f64, step: f64| {
            (0..)
                .map(|i| 1.0 + i as f64 * step)
                .take_while(|z| *z < max - 1e-9)
                .count()
        };
        assert_eq!(count(1.11, 0.01), 11);
        assert_eq!(count(1.31, 0.03), 11);
        assert_eq!(count(1.21, 0.02), 11);
    }

    #[test]
    fn kernels_are_normalized() {
        for r in [3.0, 10.0] {
            let k = disk_kernel(r, 0.5);
            let s: f64 = k.iter().flatten().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_image_survives_blurs() {
        let img = Image::filled(20, 15, 0.6).unwrap();
        for out in [
            directional_blur(&img, 10, 3.0, 30.0),
            defocus(&img, 6.0, 0.5),
            zoom(&img, 1.31, 0.03),
        ] {
            assert!(out.max_abs_diff(&img) < 1e-12);
        }
    }
}
