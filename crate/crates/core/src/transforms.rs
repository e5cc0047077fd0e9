//! The three developmental simulations (acuity blur, contrast limiting,
//! chromatic fidelity) and their age-parameterized composition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{reflect_index, Image, CHANNELS};
use crate::schedules::{AgeMonths, ScheduleSet};
use crate::spectral::{apply_amplitude_threshold, forward_transform, inverse_transform, max_power};

/// Below this σ the Gaussian kernel degenerates to a unit impulse.
pub const MIN_BLUR_SIGMA: f64 = 0.05;

/// ITU-R BT.601 luma weights.
pub const REC601_LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Newborn reference: σ = 4 px at width 100 px for MAR 30 (20/600).
const NEWBORN_SIGMA: f64 = 4.0;
const NEWBORN_WIDTH: f64 = 100.0;
const NEWBORN_MAR: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Acuity,
    Contrast,
    Chroma,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Acuity => "acuity",
            Stage::Contrast => "contrast",
            Stage::Chroma => "chroma",
        })
    }
}

pub const DEFAULT_ORDER: [Stage; 3] = [Stage::Acuity, Stage::Contrast, Stage::Chroma];

/// Which image dimension plays `w` in the σ formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaReference {
    #[default]
    Width,
    MinDimension,
}

impl SigmaReference {
    pub fn pixels(self, img: &Image) -> f64 {
        match self {
            SigmaReference::Width => img.width() as f64,
            SigmaReference::MinDimension => img.width().min(img.height()) as f64,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_order() -> Vec<Stage> {
    DEFAULT_ORDER.to_vec()
}

fn default_luma() -> [f64; 3] {
    REC601_LUMA
}

/// Hyperparameters of the diet plus controlled-rearing switches.
///
/// `alpha`, `beta` and `lambda` have no serde defaults: a config document
/// must state them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvdConfig {
    /// Months of development per training epoch.
    pub alpha: f64,
    /// Base threshold in the frequency-power domain.
    pub beta: f64,
    /// Threshold decay period in months.
    pub lambda: f64,
    #[serde(default = "default_true")]
    pub enable_acuity: bool,
    #[serde(default = "default_true")]
    pub enable_contrast: bool,
    #[serde(default = "default_true")]
    pub enable_chroma: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_order")]
    pub order: Vec<Stage>,
    #[serde(default = "default_luma")]
    pub luma_weights: [f64; 3],
    #[serde(default)]
    pub sigma_reference: SigmaReference,
}

impl Default for DvdConfig {
    /// The DVD-B setting: 2 months per epoch, β = 1e-4, λ = 100.
    fn default() -> Self {
        DvdConfig {
            alpha: 2.0,
            beta: 1e-4,
            lambda: 100.0,
            enable_acuity: true,
            enable_contrast: true,
            enable_chroma: true,
            seed: 0,
            order: default_order(),
            luma_weights: REC601_LUMA,
            sigma_reference: SigmaReference::Width,
        }
    }
}

impl DvdConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DvdConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("<document>")
                .to_owned();
            Error::InvalidConfig { field, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        let mut seen = [false; 3];
        for stage in &self.order {
            let i = *stage as usize;
            if seen[i] {
                return Err(Error::config("order", format!("stage `{stage}` listed twice")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::config(
                "order",
                "must list acuity, contrast and chroma exactly once",
            ));
        }
        let sum: f64 = self.luma_weights.iter().sum();
        if self.luma_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::config(
                "luma_weights",
                "must be non-negative and sum to 1",
            ));
        }
        Ok(())
    }

    pub fn flags(&self) -> (bool, bool, bool) {
        (self.enable_acuity, self.enable_contrast, self.enable_chroma)
    }

    pub fn with_rearing(mut self, condition: RearingCondition) -> Self {
        (self.enable_acuity, self.enable_contrast, self.enable_chroma) = condition.flags();
        self
    }

    pub fn is_passthrough(&self) -> bool {
        !(self.enable_acuity || self.enable_contrast || self.enable_chroma)
    }
}

/// The seven controlled-rearing conditions: every non-empty subset of the
/// three developmental dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RearingCondition {
    All,
    AcuityChromatic,
    AcuityContrast,
    ContrastChromatic,
    AcuityOnly,
    ChromaticOnly,
    ContrastOnly,
}

impl RearingCondition {
    pub const ALL: [RearingCondition; 7] = [
        RearingCondition::All,
        RearingCondition::AcuityChromatic,
        RearingCondition::AcuityContrast,
        RearingCondition::ContrastChromatic,
        RearingCondition::AcuityOnly,
        RearingCondition::ChromaticOnly,
        RearingCondition::ContrastOnly,
    ];

    /// `(acuity, contrast, chroma)` enable flags.
    pub fn flags(self) -> (bool, bool, bool) {
        use RearingCondition::*;
        match self {
            All => (true, true, true),
            AcuityChromatic => (true, false, true),
            AcuityContrast => (true, true, false),
            ContrastChromatic => (false, true, true),
            AcuityOnly => (true, false, false),
            ChromaticOnly => (false, false, true),
            ContrastOnly => (false, true, false),
        }
    }

    pub fn name(self) -> &'static str {
        use RearingCondition::*;
        match self {
            All => "all",
            AcuityChromatic => "acuity_chromatic",
            AcuityContrast => "acuity_contrast",
            ContrastChromatic => "contrast_chromatic",
            AcuityOnly => "acuity_only",
            ChromaticOnly => "chromatic_only",
            ContrastOnly => "contrast_only",
        }
    }
}

impl fmt::Display for RearingCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RearingCondition {
    type Err = Error;

    /// Accepts `contrast_only`, `contrast only`, `acuity+chromatic`,
    /// `all three present`, and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if matches!(c, ' ' | '-' | '+') { '_' } else { c })
            .collect::<String>()
            .replace("chromatic", "chroma");
        use RearingCondition::*;
        Ok(match norm.as_str() {
            "all" | "all_three" | "all_three_present" => All,
            "acuity_chroma" => AcuityChromatic,
            "acuity_contrast" => AcuityContrast,
            "contrast_chroma" => ContrastChromatic,
            "acuity_only" | "acuity" => AcuityOnly,
            "chroma_only" | "chroma" => ChromaticOnly,
            "contrast_only" | "contrast" => ContrastOnly,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown rearing condition `{s}`; expected one of: {}",
                    RearingCondition::ALL.map(|c| c.name()).join(", ")
                )))
            }
        })
    }
}

/// Convenience wrapper mirroring the named-condition lookup.
pub fn rearing_condition(name: &str) -> Result<(bool, bool, bool)> {
    name.parse::<RearingCondition>().map(RearingCondition::flags)
}

/// Gaussian σ in pixels for an image `width` pixels wide viewed with the
/// given MAR: `4 · (width/100) · (mar/30)`.
pub fn snellen_to_sigma(width: f64, mar: f64) -> f64 {
    NEWBORN_SIGMA * (width / NEWBORN_WIDTH) * (mar / NEWBORN_MAR)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|k| k / sum).collect()
}

/// Separable Gaussian blur with kernel radius `⌈3σ⌉` and half-sample
/// reflective borders. `sigma < 0.05` returns the input unchanged.
pub fn apply_acuity_blur(img: &Image, sigma: f64) -> Image {
    if !(sigma >= MIN_BLUR_SIGMA) {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    convolve_separable(img, &kernel, &kernel)
}

pub(crate) fn convolve_separable(img: &Image, kx: &[f64], ky: &[f64]) -> Image {
    let (w, h) = (img.width(), img.height());
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let src = img.data();

    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (k, &wt) in kx.iter().enumerate() {
                let sx = reflect_index(x as isize + k as isize - rx, w);
                let i = (row + sx) * CHANNELS;
                acc[0] += wt * src[i];
                acc[1] += wt * src[i + 1];
                acc[2] += wt * src[i + 2];
            }
            tmp[(row + x) * CHANNELS..(row + x + 1) * CHANNELS].copy_from_slice(&acc);
        }
    }

    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (k, &wt) in ky.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - ry, h);
                let i = (sy * w + x) * CHANNELS;
                acc[0] += wt * tmp[i];
                acc[1] += wt * tmp[i + 1];
                acc[2] += wt * tmp[i + 2];
            }
            out[(y * w + x) * CHANNELS..(y * w + x + 1) * CHANNELS].copy_from_slice(&acc);
        }
    }
    Image::new(w, h, out).expect("same dimensions as input")
}

/// `T_t = P_max · (1 − C_t) · max(⌊t/λ⌋, 1)⁻¹ · β`.
pub fn contrast_threshold_value(
    p_max: f64,
    contrast_sensitivity: f64,
    age: AgeMonths,
    beta: f64,
    lambda: f64,
) -> f64 {
    let periods = (age.value() / lambda).floor().max(1.0);
    p_max * (1.0 - contrast_sensitivity) * periods.recip() * beta
}

/// Drops spectral components whose power falls under the age threshold,
/// reconstructs, and clamps to `[0, 1]`.
pub fn apply_contrast_limit(
    img: &Image,
    age: AgeMonths,
    contrast_sensitivity: f64,
    beta: f64,
    lambda: f64,
) -> Result<Image> {
    if !(0.0..=1.0).contains(&contrast_sensitivity) {
        return Err(Error::InvalidArgument(format!(
            "contrast sensitivity must lie in [0,1], got {contrast_sensitivity}"
        )));
    }
    if !(beta >= 0.0 && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need beta >= 0 and lambda > 0, got beta={beta}, lambda={lambda}"
        )));
    }
    let spec = forward_transform(img)?;
    let threshold =
        contrast_threshold_value(max_power(&spec), contrast_sensitivity, age, beta, lambda);
    let kept = apply_amplitude_threshold(&spec, threshold)?;
    Ok(inverse_transform(&kept)?.clamped())
}

/// Replaces every pixel by its luminance in all three channels. Pixels that
/// are already gray pass through untouched.
pub fn to_grayscale(img: &Image, weights: [f64; 3]) -> Image {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(CHANNELS) {
        if px[0] == px[1] && px[1] == px[2] {
            continue;
        }
        let y = weights[0] * px[0] + weights[1] * px[1] + weights[2] * px[2];
        px.fill(y);
    }
    out
}

/// `I_t = (1 − S_t)·I_gray + S_t·I_rgb`, per pixel and channel.
pub fn apply_chromatic_fidelity(img: &Image, chroma: f64, weights: [f64; 3]) -> Image {
    let gray = to_grayscale(img, weights);
    let keep = 1.0 - chroma;
    let mut out = gray;
    for (o, c) in out.data_mut().iter_mut().zip(img.data()) {
        *o = keep * *o + chroma * c;
    }
    out
}

/// Per-stage parameters looked up for one age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageParameters {
    pub age_months: f64,
    pub mar: f64,
    pub sigma: f64,
    pub contrast_sensitivity: f64,
    pub chromatic_sensitivity: f64,
}

pub fn stage_parameters(
    img: &Image,
    age: AgeMonths,
    cfg: &DvdConfig,
    schedules: &ScheduleSet,
) -> StageParameters {
    let mar = schedules.acuity_at(age);
    StageParameters {
        age_months: age.value(),
        mar,
        sigma: snellen_to_sigma(cfg.sigma_reference.pixels(img), mar),
        contrast_sensitivity: schedules.contrast_sensitivity_at(age),
        chromatic_sensitivity: schedules.chromatic_sensitivity_at(age),
    }
}

/// Applies the enabled simulations in `cfg.order` at the given age, then
/// clamps to `[0, 1]`. With every stage disabled the input is returned
/// unchanged.
pub fn dvd_transform(
    img: &Image,
    age: AgeMonths,
    cfg: &DvdConfig,
    schedules: &ScheduleSet,
) -> Result<Image> {
    if cfg.is_passthrough() {
        return Ok(img.clone());
    }
    let params = stage_parameters(img, age, cfg, schedules);
    let mut cur = img.clone();
    for stage in &cfg.order {
        cur = match stage {
            Stage::Acuity if cfg.enable_acuity => apply_acuity_blur(&cur, params.sigma),
            Stage::Contrast if cfg.enable_contrast => apply_contrast_limit(
                &cur,
                age,
                params.contrast_sensitivity,
                cfg.beta,
                cfg.lambda,
            )?,
            Stage::Chroma if cfg.enable_chroma => {
                apply_chromatic_fidelity(&cur, params.chromatic_sensitivity, cfg.luma_weights)
            }
            _ => continue,
        };
    }
    Ok(cur.clamped())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age(m: f64) -> AgeMonths {
        AgeMonths::new(m).unwrap()
    }

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            [fx, fy, (fx * 7.0 + fy * 3.0).sin() * 0.5 + 0.5]
        })
        .unwrap()
    }

    #[test]
    fn sigma_anchor_and_linearity() {
        assert_eq!(snellen_to_sigma(100.0, 30.0), 4.0);
        assert!((snellen_to_sigma(200.0, 30.0) - 8.0).abs() < 1e-12);
        assert!((snellen_to_sigma(100.0, 1.0) - 4.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(contrast_threshold_value(1.0, 1.0, age(0.0), 1e-4, 100.0), 0.0);
        assert_eq!(contrast_threshold_value(1.0, 0.0, age(0.0), 1e-4, 100.0), 1e-4);
        let t = contrast_threshold_value(1.0, 0.5, age(250.0), 1e-4, 100.0);
        assert!((t - 2.5e-5).abs() <= 1e-12 * 2.5e-5);
    }

    #[test]
    fn blur_identity_cases() {
        let img = ramp(9, 7);
        assert_eq!(apply_acuity_blur(&img, 0.0), img);
        assert_eq!(apply_acuity_blur(&img, 0.049), img);
        let flat = Image::filled(9, 7, 0.37).unwrap();
        let blurred = apply_acuity_blur(&flat, 3.3);
        assert!(blurred.max_abs_diff(&flat) < 1e-15);
    }

    #[test]
    fn blur_preserves_mean_even_when_kernel_exceeds_image() {
        let img = ramp(5, 4);
        for sigma in [0.7, 2.0, 6.0] {
            let out = apply_acuity_blur(&img, sigma);
            assert!((out.mean() - img.mean()).abs() < 1e-12, "sigma {sigma}");
        }
    }

    #[test]
    fn grayscale_cases() {
        let red = Image::filled(1, 1, 0.0)
            .map(|mut i| {
                i.set_pixel(0, 0, [1.0, 0.0, 0.0]);
                i
            })
            .unwrap();
        assert_eq!(to_grayscale(&red, REC601_LUMA).pixel(0, 0), [0.299; 3]);
        let white = Image::filled(2, 2, 1.0).unwrap();
        assert_eq!(to_grayscale(&white, REC601_LUMA), white);
        let gray = Image::from_fn(3, 3, |x, _| [x as f64 / 3.0; 3]).unwrap();
        assert_eq!(to_grayscale(&gray, REC601_LUMA), gray);

        let half = apply_chromatic_fidelity(&red, 0.5, REC601_LUMA).pixel(0, 0);
        for (got, want) in half.iter().zip([0.6495, 0.1495, 0.1495]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn chromatic_endpoints_are_exact() {
        let img = ramp(8, 8);
        assert_eq!(apply_chromatic_fidelity(&img, 1.0, REC601_LUMA), img);
        assert_eq!(
            apply_chromatic_fidelity(&img, 0.0, REC601_LUMA),
            to_grayscale(&img, REC601_LUMA)
        );
    }

    #[test]
    fn contrast_limit_identity_and_total_suppression() {
        let img = ramp(12, 10);
        let same = apply_contrast_limit(&img, age(0.0), 1.0, 1e-4, 100.0).unwrap();
        assert!(same.max_abs_diff(&img) < 1e-6);

        let flat = apply_contrast_limit(&img, age(0.0), 0.0, 1e9, 100.0).unwrap();
        for c in 0..3 {
            let plane = flat.channel(c);
            let mean = img.channel(c).iter().sum::<f64>() / plane.len() as f64;
            assert!(plane.iter().all(|v| (v - mean).abs() < 1e-12));
        }
        assert!(apply_contrast_limit(&img, age(0.0), 1.5, 1e-4, 100.0).is_err());
    }

    #[test]
    fn rearing_names() {
        assert_eq!(rearing_condition("contrast only").unwrap(), (false, true, false));
        assert_eq!(rearing_condition("all").unwrap(), (true, true, true));
        assert_eq!(rearing_condition("acuity+chromatic").unwrap(), (true, false, true));
        assert_eq!(rearing_condition("contrast_only").unwrap(), (false, true, false));
        assert!(rearing_condition("everything").is_err());
        for c in RearingCondition::ALL {
            assert_eq!(c.name().parse::<RearingCondition>().unwrap(), c);
            let (a, b, d) = c.flags();
            assert!(a || b || d);
        }
    }

    #[test]
    fn config_validation_names_fields() {
        let err = DvdConfig::from_json(r#"{"alpha":2,"lambda":100}"#).unwrap_err();
        assert!(matches!(&err, Error::InvalidConfig { field, .. } if field == "beta"), "{err}");
        let err = DvdConfig::from_json(r#"{"alpha":2,"beta":1e-4,"lambda":-5}"#).unwrap_err();
        assert!(matches!(&err, Error::InvalidConfig { field, .. } if field == "lambda"), "{err}");
        let err = DvdConfig::from_json(
            r#"{"alpha":2,"beta":1e-4,"lambda":5,"order":["acuity","acuity","chroma"]}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, Error::InvalidConfig { field, .. } if field == "order"));
        let ok = DvdConfig::from_json(r#"{"alpha":2,"beta":1e-4,"lambda":100}"#).unwrap();
        assert_eq!(ok, DvdConfig::default());
    }

    #[test]
    fn passthrough_is_exact() {
        let img = ramp(10, 10);
        let cfg = DvdConfig {
            enable_acuity: false,
            enable_contrast: false,
            enable_chroma: false,
            ..DvdConfig::default()
        };
        let out = dvd_transform(&img, age(0.0), &cfg, ScheduleSet::builtin()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn newborn_is_blurred_and_gray() {
        let img = ramp(100, 100);
        let s = ScheduleSet::builtin();
        let cfg = DvdConfig::default();
        let p = stage_parameters(&img, age(0.0), &cfg, s);
        assert!((p.sigma - 4.0).abs() < 0.25, "sigma {}", p.sigma);
        let out = dvd_transform(&img, age(0.0), &cfg, s).unwrap();
        let max_chroma_spread = out
            .data()
            .chunks_exact(3)
            .map(|px| px.iter().cloned().fold(f64::MIN, f64::max) - px.iter().cloned().fold(f64::MAX, f64::min))
            .fold(0.0, f64::max);
        assert!(max_chroma_spread < 0.05, "{max_chroma_spread}");
    }
}
