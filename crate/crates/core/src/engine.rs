use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::image::Image;
use crate::schedules::{AgeMonths, EpochClock, ScheduleSet};
use crate::transforms::{dvd_transform, DvdConfig};

/// Normalization convention recorded in manifests.
pub const DFT_CONVENTION: &str = "forward unnormalized; inverse scaled by 1/(H*W); no fftshift";

/// Immutable snapshot of a diet configuration and its schedules.
///
/// Everything that influences transformed pixels is covered by
/// [`DvdEngine::fingerprint`], so two engines with the same fingerprint are
/// interchangeable. The CLI manifests and the C ABI handle both report it.
#[derive(Debug, Clone)]
pub struct DvdEngine {
    config: DvdConfig,
    schedules: ScheduleSet,
    fingerprint: String,
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    config: &'a DvdConfig,
    schedule_fingerprint: String,
    dft_convention: &'static str,
}

impl DvdEngine {
    pub fn new(config: DvdConfig, schedules: ScheduleSet) -> Result<Self> {
        config.validate()?;
        let input = FingerprintInput {
            config: &config,
            schedule_fingerprint: schedules.fingerprint(),
            dft_convention: DFT_CONVENTION,
        };
        let json = serde_json::to_vec(&input)?;
        let fingerprint = hex::encode(Sha256::digest(&json));
        Ok(DvdEngine {
            config,
            schedules,
            fingerprint,
        })
    }

    /// Engine over the built-in schedules.
    pub fn with_builtin_schedules(config: DvdConfig) -> Result<Self> {
        Self::new(config, ScheduleSet::builtin().clone())
    }

    pub fn config(&self) -> &DvdConfig {
        &self.config
    }

    pub fn schedules(&self) -> &ScheduleSet {
        &self.schedules
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn clock(&self) -> EpochClock {
        EpochClock::new(self.config.alpha).expect("alpha validated at construction")
    }

    pub fn transform(&self, img: &Image, age: AgeMonths) -> Result<Image> {
        dvd_transform(img, age, &self.config, &self.schedules)
    }

    pub fn transform_at_epoch(&self, img: &Image, epoch: u64) -> Result<Image> {
        self.transform(img, self.clock().epoch_to_age(epoch))
    }
}
