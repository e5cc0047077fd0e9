use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::degradations::{CorruptionConstants, Degradation};
use crate::error::{Error, Result};
use crate::transforms::{DvdConfig, Stage};
use crate::{DvdEngine, DFT_CONVENTION, TOOL_VERSION};

use super::dataset::SkipRecord;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Process,
    Corrupt,
    Preview,
}

/// Optional pre-transform resize target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResizeSpec {
    pub width: usize,
    pub height: usize,
}

impl std::str::FromStr for ResizeSpec {
    type Err = Error;

    /// Parses `WxH` or a single side `N` (square).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("resize must be `N` or `WxH`, got `{s}`"));
        let (w, h) = match s.split_once(['x', 'X']) {
            Some((w, h)) => (w.trim().parse(), h.trim().parse()),
            None => (s.trim().parse(), s.trim().parse()),
        };
        let (width, height): (usize, usize) = (w.map_err(|_| bad())?, h.map_err(|_| bad())?);
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(ResizeSpec { width, height })
    }
}

/// Everything about the diet that determines transformed pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DietProvenance {
    pub config: DvdConfig,
    pub epoch: Option<u64>,
    pub fingerprint: String,
    pub schedule_fingerprint: String,
    pub schedule_fallback: bool,
    pub transform_order: Vec<Stage>,
    pub dft_convention: String,
}

impl DietProvenance {
    pub fn new(engine: &DvdEngine, epoch: Option<u64>) -> Self {
        DietProvenance {
            config: engine.config().clone(),
            epoch,
            fingerprint: engine.fingerprint().to_owned(),
            schedule_fingerprint: engine.schedules().fingerprint(),
            schedule_fallback: engine.schedules().has_fallback(),
            transform_order: engine.config().order.clone(),
            dft_convention: DFT_CONVENTION.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationProvenance {
    pub specs: Vec<Degradation>,
    pub constants_version: String,
    pub constants_digest: String,
}

impl DegradationProvenance {
    pub fn new(specs: &[Degradation], constants: &CorruptionConstants) -> Self {
        DegradationProvenance {
            specs: specs.to_vec(),
            constants_version: constants.version.clone(),
            constants_digest: constants.digest(),
        }
    }
}

/// One written file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub image_id: String,
    pub class_label: String,
    /// Relative to the output root.
    pub path: PathBuf,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub age_months: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<String>,
    /// Severity (1..=5) for corruptions, amplitude for attacks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub severity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub image_id: String,
    pub error: String,
}

/// Wall-clock accounting. Not part of the output contract: it differs
/// between otherwise identical runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub images: usize,
    pub outputs: usize,
    pub workers: usize,
    pub wall_seconds: f64,
    pub images_per_second: f64,
    pub decode_seconds: f64,
    pub transform_seconds: f64,
    pub encode_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub kind: RunKind,
    pub complete: bool,
    pub input: PathBuf,
    pub output_root: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resize: Option<ResizeSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub age_months: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diet: Option<DietProvenance>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degradations: Option<DegradationProvenance>,
    pub outputs: Vec<OutputRecord>,
    pub skipped: Vec<SkipRecord>,
    pub failures: Vec<FailureRecord>,
    pub timings: Timings,
}

impl RunManifest {
    pub(crate) fn new(kind: RunKind, input: &Path, output_root: &Path) -> Self {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_owned(),
            kind,
            complete: false,
            input: input.to_path_buf(),
            output_root: output_root.to_path_buf(),
            resize: None,
            age_months: None,
            diet: None,
            degradations: None,
            outputs: Vec::new(),
            skipped: Vec::new(),
            failures: Vec::new(),
            timings: Timings::default(),
        }
    }

    /// `(relative path, sha256)` for every output, in manifest order.
    pub fn checksums(&self) -> Vec<(PathBuf, String)> {
        self.outputs
            .iter()
            .map(|o| (o.path.clone(), o.sha256.clone()))
            .collect()
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes `manifest.json` under the output root and returns its path.
    pub fn write(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_root).map_err(|e| Error::io(&self.output_root, e))?;
        let path = self.output_root.join(MANIFEST_FILE_NAME);
        let mut text = self.to_json_pretty()?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_spec_parsing() {
        assert_eq!(
            "64".parse::<ResizeSpec>().unwrap(),
            ResizeSpec { width: 64, height: 64 }
        );
        assert_eq!(
            "32x16".parse::<ResizeSpec>().unwrap(),
            ResizeSpec { width: 32, height: 16 }
        );
        assert!("0x3".parse::<ResizeSpec>().is_err());
        assert!("ax3".parse::<ResizeSpec>().is_err());
    }

    #[test]
    fn manifest_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new(RunKind::Process, Path::new("in"), dir.path());
        m.outputs.push(OutputRecord {
            image_id: "a/x.png".into(),
            class_label: "a".into(),
            path: "a/x.png".into(),
            sha256: "00".into(),
            age_months: Some(20.0),
            kind: None,
            severity: None,
        });
        let path = m.write().unwrap();
        assert_eq!(RunManifest::read(&path).unwrap(), m);
    }
}
