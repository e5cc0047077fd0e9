use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use super::rng::{normal, uniform};
use crate::image::Image;

/// Additive `N(0, std²)` per element.
pub(super) fn gaussian(img: &Image, std: f64, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v += std * normal(rng);
    }
    out
}

/// Photon-count noise: `Poisson(x · photons) / photons`.
pub(super) fn shot(img: &Image, photons: f64, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    for v in out.data_mut() {
        let lambda = v.max(0.0) * photons;
        *v = if lambda > 0.0 {
            let count: f64 = rng.sample(Poisson::new(lambda).expect("positive rate"));
            count / photons
        } else {
            0.0
        };
    }
    out
}

/// Salt-and-pepper per element: with probability `amount` an element is
/// replaced by 0 or 1 with equal odds.
pub(super) fn impulse(img: &Image, amount: f64, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    for v in out.data_mut() {
        let hit = uniform(rng);
        let salt = uniform(rng) < 0.5;
        if hit < amount {
            *v = if salt { 1.0 } else { 0.0 };
        }
    }
    out
}

/// Multiplicative noise: `x + x · N(0, std²)`.
pub(super) fn speckle(img: &Image, std: f64, rng: &mut ChaCha8Rng) -> Image {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v += *v * std * normal(rng);
    }
    out
}
