//! Image degradations for robustness evaluation: 16 corruption kinds at five
//! severities, and three black-box noise attacks at fixed amplitudes.
//!
//! All randomness comes from [`rng::stream_rng`] keyed by the run seed, the
//! image id and the degradation kind. Severity and amplitude are not part of
//! the key, so the same random draws drive every severity of a kind and
//! stronger settings perturb a superset of what weaker ones do.

mod attacks;
mod blur;
pub mod constants;
mod noise;
mod quality;
pub mod rng;
mod weather;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::attacks::{attack_perturbation, perturb, perturb_with};
pub use self::constants::CorruptionConstants;
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    SpeckleNoise,
    MotionBlur,
    ZoomBlur,
    GaussianBlur,
    DefocusBlur,
    Rain,
    IcyWindow,
    Drizzle,
    Snow,
    Pixelate,
    JpegCompression,
    PixelDropout,
    WaveDistortion,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 16] = [
        CorruptionKind::GaussianNoise,
        CorruptionKind::ShotNoise,
        CorruptionKind::ImpulseNoise,
        CorruptionKind::SpeckleNoise,
        CorruptionKind::MotionBlur,
        CorruptionKind::ZoomBlur,
        CorruptionKind::GaussianBlur,
        CorruptionKind::DefocusBlur,
        CorruptionKind::Rain,
        CorruptionKind::IcyWindow,
        CorruptionKind::Drizzle,
        CorruptionKind::Snow,
        CorruptionKind::Pixelate,
        CorruptionKind::JpegCompression,
        CorruptionKind::PixelDropout,
        CorruptionKind::WaveDistortion,
    ];

    pub fn name(self) -> &'static str {
        use CorruptionKind::*;
        match self {
            GaussianNoise => "gaussian_noise",
            ShotNoise => "shot_noise",
            ImpulseNoise => "impulse_noise",
            SpeckleNoise => "speckle_noise",
            MotionBlur => "motion_blur",
            ZoomBlur => "zoom_blur",
            GaussianBlur => "gaussian_blur",
            DefocusBlur => "defocus_blur",
            Rain => "rain",
            IcyWindow => "icy_window",
            Drizzle => "drizzle",
            Snow => "snow",
            Pixelate => "pixelate",
            JpegCompression => "jpeg_compression",
            PixelDropout => "pixel_dropout",
            WaveDistortion => "wave_distortion",
        }
    }

    /// Taxonomy group: noise, blur, weather or quality.
    pub fn family(self) -> &'static str {
        use CorruptionKind::*;
        match self {
            GaussianNoise | ShotNoise | ImpulseNoise | SpeckleNoise => "noise",
            MotionBlur | ZoomBlur | GaussianBlur | DefocusBlur => "blur",
            Rain | IcyWindow | Drizzle | Snow => "weather",
            Pixelate | JpegCompression | PixelDropout | WaveDistortion => "quality",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown corruption kind `{s}`; valid kinds: {}",
                    CorruptionKind::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }
}

/// Severity level, 1 (mildest) to 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Severity(u8);

impl Severity {
    pub const ALL: [Severity; 5] = [Severity(1), Severity(2), Severity(3), Severity(4), Severity(5)];

    pub fn new(level: u8) -> Result<Self> {
        if (1..=5).contains(&level) {
            Ok(Severity(level))
        } else {
            Err(Error::InvalidArgument(format!(
                "severity must be 1..=5, got {level}"
            )))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    #[inline]
    pub(crate) fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u8> for Severity {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Severity::new(v)
    }
}

impl From<Severity> for u8 {
    fn from(s: Severity) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: Severity,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: u8) -> Result<Self> {
        Ok(CorruptionSpec {
            kind,
            severity: Severity::new(severity)?,
        })
    }

    /// All 80 kind × severity combinations.
    pub fn grid() -> Vec<CorruptionSpec> {
        CorruptionKind::ALL
            .into_iter()
            .flat_map(|kind| Severity::ALL.map(|severity| CorruptionSpec { kind, severity }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    L2Gaussian,
    L2Uniform,
    SaltAndPepper,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [
        AttackKind::L2Gaussian,
        AttackKind::L2Uniform,
        AttackKind::SaltAndPepper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::L2Gaussian => "l2_gaussian",
            AttackKind::L2Uniform => "l2_uniform",
            AttackKind::SaltAndPepper => "salt_and_pepper",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown attack `{s}`; valid attacks: {}",
                    AttackKind::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }
}

/// Black-box perturbation: a fixed-L2 random direction (255-scale pixel
/// units) or a salt-and-pepper pixel fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseAttackSpec {
    pub kind: AttackKind,
    pub amplitude: u32,
    pub seed: u64,
}

impl NoiseAttackSpec {
    pub fn new(kind: AttackKind, amplitude: u32, seed: u64) -> Result<Self> {
        Self::validated(kind, amplitude, seed, CorruptionConstants::builtin())
    }

    pub fn validated(
        kind: AttackKind,
        amplitude: u32,
        seed: u64,
        constants: &CorruptionConstants,
    ) -> Result<Self> {
        if !constants.attacks.amplitudes.contains(&amplitude) {
            return Err(Error::InvalidArgument(format!(
                "attack amplitude must be one of {:?}, got {amplitude}",
                constants.attacks.amplitudes
            )));
        }
        Ok(NoiseAttackSpec {
            kind,
            amplitude,
            seed,
        })
    }
}

/// Either a corruption or a noise attack; the per-image map of a
/// degradation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Degradation {
    Corruption { spec: CorruptionSpec, seed: u64 },
    Attack { spec: NoiseAttackSpec },
}

impl Degradation {
    pub fn apply(&self, img: &Image, image_id: &str) -> Result<Image> {
        match self {
            Degradation::Corruption { spec, seed } => corrupt(img, spec, *seed, image_id),
            Degradation::Attack { spec } => perturb(img, spec, image_id),
        }
    }

    /// Short path-safe label, e.g. `gaussian_noise/3` or `l2_uniform/50`.
    pub fn label(&self) -> String {
        match self {
            Degradation::Corruption { spec, .. } => {
                format!("{}/{}", spec.kind, spec.severity.level())
            }
            Degradation::Attack { spec } => format!("{}/{}", spec.kind, spec.amplitude),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Degradation::Corruption { spec, .. } => spec.kind.name(),
            Degradation::Attack { spec } => spec.kind.name(),
        }
    }

    /// Severity level for corruptions, amplitude for attacks.
    pub fn level(&self) -> u32 {
        match self {
            Degradation::Corruption { spec, .. } => spec.severity.level() as u32,
            Degradation::Attack { spec } => spec.amplitude,
        }
    }
}

/// Applies one corruption with the built-in constants.
pub fn corrupt(img: &Image, spec: &CorruptionSpec, seed: u64, image_id: &str) -> Result<Image> {
    corrupt_with(img, spec, seed, image_id, CorruptionConstants::builtin())
}

pub fn corrupt_with(
    img: &Image,
    spec: &CorruptionSpec,
    seed: u64,
    image_id: &str,
    c: &CorruptionConstants,
) -> Result<Image> {
    let mut rng = rng::stream_rng(seed, image_id, spec.kind.name());
    let i = spec.severity.index();
    use CorruptionKind::*;
    let out = match spec.kind {
        GaussianNoise => noise::gaussian(img, c.gaussian_noise.std[i], &mut rng),
        ShotNoise => noise::shot(img, c.shot_noise.photons[i], &mut rng),
        ImpulseNoise => noise::impulse(img, c.impulse_noise.amount[i], &mut rng),
        SpeckleNoise => noise::speckle(img, c.speckle_noise.std[i], &mut rng),
        MotionBlur => blur::motion(img, &c.motion_blur, i, &mut rng),
        ZoomBlur => blur::zoom(img, c.zoom_blur.max_zoom[i], c.zoom_blur.step[i]),
        GaussianBlur => blur::gaussian(img, c.gaussian_blur.sigma[i]),
        DefocusBlur => blur::defocus(img, c.defocus_blur.radius[i], c.defocus_blur.alias_sigma[i]),
        Rain => weather::rain(img, &c.rain, i, &mut rng),
        IcyWindow => weather::icy_window(img, &c.icy_window, i, &mut rng),
        Drizzle => weather::drizzle(img, &c.drizzle, i, &mut rng),
        Snow => weather::snow(img, &c.snow, i, &mut rng),
        Pixelate => quality::pixelate(img, c.pixelate.scale[i]),
        JpegCompression => quality::jpeg(img, c.jpeg_compression.quality[i])?,
        PixelDropout => quality::pixel_dropout(img, c.pixel_dropout.fraction[i], &mut rng),
        WaveDistortion => quality::wave(
            img,
            c.wave_distortion.amplitude[i],
            c.wave_distortion.wavelength[i],
            &mut rng,
        ),
    };
    debug_assert!(out.same_dims(img));
    Ok(out.clamped())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::psnr;

    fn textured(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            [
                0.5 + 0.4 * (fx * 17.0).sin() * (fy * 5.0).cos(),
                0.3 + 0.5 * fx * fy,
                0.6 + 0.3 * ((fx + fy) * 23.0).sin(),
            ]
        })
        .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in CorruptionKind::ALL {
            assert_eq!(k.name().parse::<CorruptionKind>().unwrap(), k);
        }
        assert_eq!("jpeg-compression".parse::<CorruptionKind>().unwrap(), CorruptionKind::JpegCompression);
        let err = "fog".parse::<CorruptionKind>().unwrap_err().to_string();
        assert!(err.contains("wave_distortion"));
        for k in AttackKind::ALL {
            assert_eq!(k.name().parse::<AttackKind>().unwrap(), k);
        }
    }

    #[test]
    fn taxonomy_has_four_per_family() {
        for fam in ["noise", "blur", "weather", "quality"] {
            assert_eq!(CorruptionKind::ALL.iter().filter(|k| k.family() == fam).count(), 4);
        }
        assert_eq!(CorruptionSpec::grid().len(), 80);
    }

    #[test]
    fn severity_and_amplitude_validation() {
        assert!(Severity::new(0).is_err());
        assert!(Severity::new(6).is_err());
        assert!(CorruptionSpec::new(CorruptionKind::Snow, 5).is_ok());
        assert!(NoiseAttackSpec::new(AttackKind::L2Gaussian, 30, 0).is_err());
        assert!(NoiseAttackSpec::new(AttackKind::L2Gaussian, 80, 0).is_ok());
    }

    #[test]
    fn every_kind_preserves_dims_range_and_is_deterministic() {
        let img = textured(40, 28);
        for spec in CorruptionSpec::grid() {
            let a = corrupt(&img, &spec, 11, "img").unwrap();
            assert!(a.same_dims(&img));
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)), "{spec:?}");
            let b = corrupt(&img, &spec, 11, "img").unwrap();
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn pixelate_constant_is_unchanged() {
        let img = Image::filled(31, 23, 0.42).unwrap();
        for s in 1..=5 {
            let spec = CorruptionSpec::new(CorruptionKind::Pixelate, s).unwrap();
            let out = corrupt(&img, &spec, 0, "c").unwrap();
            assert!(out.max_abs_diff(&img) < 1e-12);
        }
    }

    #[test]
    fn jpeg_severity_five_changes_the_image() {
        let img = textured(32, 32);
        let spec = CorruptionSpec::new(CorruptionKind::JpegCompression, 5).unwrap();
        let out = corrupt(&img, &spec, 0, "j").unwrap();
        assert!(out.same_dims(&img));
        assert!(out.max_abs_diff(&img) > 1e-3);
    }

    #[test]
    fn gaussian_noise_psnr_falls_with_severity() {
        let img = textured(48, 48);
        let p: Vec<f64> = (1..=5)
            .map(|s| {
                let spec = CorruptionSpec::new(CorruptionKind::GaussianNoise, s).unwrap();
                psnr(&img, &corrupt(&img, &spec, 3, "g").unwrap())
            })
            .collect();
        assert!(p.windows(2).all(|w| w[1] < w[0]), "{p:?}");
    }
}
