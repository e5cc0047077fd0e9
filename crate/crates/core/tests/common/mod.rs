//! Synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use dvd_core::io::save_png;
use dvd_core::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic "natural-looking" image: low-frequency colour gradients,
/// a few solid shapes and fine texture, quantized to 8 bits so it survives a
/// PNG round trip unchanged.
pub fn synthetic_image(seed: u64, width: usize, height: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.2..0.8));
    let waves: Vec<(f64, f64, f64, [f64; 3])> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.5..6.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.0..std::f64::consts::TAU),
                std::array::from_fn(|_| rng.random_range(-0.12..0.12)),
            )
        })
        .collect();
    let shapes: Vec<(f64, f64, f64, [f64; 3])> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.2..0.8),
                rng.random_range(0.2..0.8),
                rng.random_range(0.08..0.25),
                std::array::from_fn(|_| rng.random_range(0.0..1.0)),
            )
        })
        .collect();
    let texture: f64 = rng.random_range(0.02..0.06);
    let tex_freq: f64 = rng.random_range(0.6..1.4);
    Image::from_fn(width, height, |x, y| {
        let u = x as f64 / width as f64;
        let v = y as f64 / height as f64;
        let mut p = base;
        for &(f, phase, dir, amp) in &waves {
            let arg = std::f64::consts::TAU * f * (u * dir.cos() + v * dir.sin()) + phase;
            for c in 0..3 {
                p[c] += amp[c] * arg.sin();
            }
        }
        for &(cx, cy, r, col) in &shapes {
            if (u - cx).powi(2) + (v - cy).powi(2) < r * r {
                p = col;
            }
        }
        let t = texture * ((x as f64 * tex_freq).sin() * (y as f64 * tex_freq * 1.3).cos());
        p.map(|c| ((c + t).clamp(0.0, 1.0) * 255.0).round() / 255.0)
    })
    .expect("non-empty fixture")
}

/// Writes `n` synthetic images round-robin over `classes` class directories.
pub fn write_dataset(root: &Path, n: usize, classes: usize, side: usize) {
    for i in 0..n {
        let class = format!("class{:02}", i % classes);
        let img = synthetic_image(1000 + i as u64, side, side);
        save_png(&img, &root.join(class).join(format!("img{i:03}.png"))).unwrap();
    }
}

/// Random image with independent uniform pixels.
pub fn random_image(seed: u64, width: usize, height: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(width, height, |_, _| std::array::from_fn(|_| rng.random::<f64>())).unwrap()
}
