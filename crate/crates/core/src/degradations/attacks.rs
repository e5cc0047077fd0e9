//! Black-box noise attacks. L2 amplitudes are norms in 255-scale pixel
//! units; salt-and-pepper maps amplitude `a` to a corrupted-pixel fraction
//! `a · 0.001` (configurable in the constants file).

use super::constants::CorruptionConstants;
use super::rng::{normal, stream_rng, uniform};
use super::{AttackKind, NoiseAttackSpec};
use crate::error::{Error, Result};
use crate::image::Image;

/// The additive perturbation (unit pixel scale, before clamping) an L2
/// attack adds to an image of `len` values. `None` for salt-and-pepper.
pub fn attack_perturbation(
    len: usize,
    spec: &NoiseAttackSpec,
    image_id: &str,
    c: &CorruptionConstants,
) -> Option<Vec<f64>> {
    let mut rng = stream_rng(spec.seed, image_id, spec.kind.name());
    let mut dir: Vec<f64> = match spec.kind {
        AttackKind::L2Gaussian => (0..len).map(|_| normal(&mut rng)).collect(),
        AttackKind::L2Uniform => (0..len).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect(),
        AttackKind::SaltAndPepper => return None,
    };
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = spec.amplitude as f64 / c.attacks.pixel_scale / norm;
    for v in &mut dir {
        *v *= scale;
    }
    Some(dir)
}

pub fn perturb(img: &Image, spec: &NoiseAttackSpec, image_id: &str) -> Result<Image> {
    perturb_with(img, spec, image_id, CorruptionConstants::builtin())
}

pub fn perturb_with(
    img: &Image,
    spec: &NoiseAttackSpec,
    image_id: &str,
    c: &CorruptionConstants,
) -> Result<Image> {
    if !c.attacks.amplitudes.contains(&spec.amplitude) {
        return Err(Error::InvalidArgument(format!(
            "attack amplitude must be one of {:?}, got {}",
            c.attacks.amplitudes, spec.amplitude
        )));
    }
    let mut out = img.clone();
    match attack_perturbation(img.data().len(), spec, image_id, c) {
        Some(delta) => {
            for (v, d) in out.data_mut().iter_mut().zip(delta) {
                *v += d;
            }
        }
        None => {
            let fraction = spec.amplitude as f64 * c.attacks.salt_and_pepper_fraction_per_unit;
            let mut rng = stream_rng(spec.seed, image_id, spec.kind.name());
            for px in out.data_mut().chunks_exact_mut(3) {
                let hit = uniform(&mut rng);
                let salt = uniform(&mut rng) < 0.5;
                if hit < fraction {
                    px.fill(if salt { 1.0 } else { 0.0 });
                }
            }
        }
    }
    Ok(out.clamped())
}
