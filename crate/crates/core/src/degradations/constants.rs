//! Severity constants, loaded from a versioned JSON document so fixtures can
//! detect drift.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const BUILTIN_JSON: &str = include_str!("../../data/corruptions.json");

pub type Ladder<T> = [T; 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionConstants {
    pub version: String,
    #[serde(default)]
    pub notes: String,
    pub gaussian_noise: StdLadder,
    pub shot_noise: ShotNoise,
    pub impulse_noise: ImpulseNoise,
    pub speckle_noise: StdLadder,
    pub motion_blur: MotionBlur,
    pub zoom_blur: ZoomBlur,
    pub gaussian_blur: GaussianBlur,
    pub defocus_blur: DefocusBlur,
    pub rain: Rain,
    pub icy_window: IcyWindow,
    pub drizzle: Drizzle,
    pub snow: Snow,
    pub pixelate: Pixelate,
    pub jpeg_compression: Jpeg,
    pub pixel_dropout: PixelDropout,
    pub wave_distortion: Wave,
    pub attacks: Attacks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdLadder {
    pub std: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotNoise {
    pub photons: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseNoise {
    pub amount: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionBlur {
    pub radius: Ladder<usize>,
    pub sigma: Ladder<f64>,
    pub max_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomBlur {
    pub max_zoom: Ladder<f64>,
    pub step: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlur {
    pub sigma: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefocusBlur {
    pub radius: Ladder<f64>,
    pub alias_sigma: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rain {
    pub drops_per_kilopixel: Ladder<f64>,
    pub length: Ladder<f64>,
    pub opacity: Ladder<f64>,
    pub haze_sigma: Ladder<f64>,
    pub dim: Ladder<f64>,
    pub max_slant_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcyWindow {
    pub blur_sigma: Ladder<f64>,
    pub frost: Ladder<f64>,
    pub distortion: Ladder<f64>,
    pub texture_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drizzle {
    pub drops_per_kilopixel: Ladder<f64>,
    pub length: Ladder<f64>,
    pub opacity: Ladder<f64>,
    pub haze: Ladder<f64>,
    pub blur_sigma: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snow {
    pub mean: Ladder<f64>,
    pub std: Ladder<f64>,
    pub zoom: Ladder<f64>,
    pub threshold: Ladder<f64>,
    pub motion_radius: Ladder<usize>,
    pub motion_sigma: Ladder<f64>,
    pub blend: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pixelate {
    pub scale: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jpeg {
    pub quality: Ladder<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelDropout {
    pub fraction: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: Ladder<f64>,
    pub wavelength: Ladder<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attacks {
    pub amplitudes: Ladder<u32>,
    /// Pixel scale the amplitudes are expressed in.
    pub pixel_scale: f64,
    /// Salt-and-pepper corrupted-pixel fraction per unit of amplitude.
    pub salt_and_pepper_fraction_per_unit: f64,
}

impl CorruptionConstants {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: CorruptionConstants = serde_json::from_str(text)?;
        if c.version.is_empty() {
            return Err(Error::config("version", "must not be empty"));
        }
        if !(c.attacks.pixel_scale > 0.0) {
            return Err(Error::config("attacks.pixel_scale", "must be positive"));
        }
        Ok(c)
    }

    pub fn builtin() -> &'static CorruptionConstants {
        static C: OnceLock<CorruptionConstants> = OnceLock::new();
        C.get_or_init(|| {
            CorruptionConstants::from_json(BUILTIN_JSON).expect("built-in corruption constants")
        })
    }

    /// SHA-256 of the canonical serialization; changes whenever any constant
    /// changes, independently of the declared version string.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("serializes")))
    }
}
