//! Developmental visual diet (DVD): age-parameterized image transforms that
//! simulate the maturation of visual acuity, contrast sensitivity and
//! chromatic sensitivity from birth (0 months) to adulthood (300 months).
//!
//! The crate also ships the degradation generators and behavioral metrics
//! used to evaluate classifiers trained on such a diet. Training itself is
//! out of scope: metrics consume prediction logs written by external code.
//!
//! Module map:
//!
//! * [`schedules`] developmental trajectories and the epoch→age clock
//! * [`spectral`] 2-D DFT, power spectrum and amplitude thresholding
//! * [`transforms`] the three simulations and their composition
//! * [`degradations`] 16 corruptions × 5 severities and black-box noise attacks
//! * [`pipeline`] dataset ingestion, batch processing and run manifests
//! * [`metrics`] shape bias, shape/scene recall, robustness curves

pub mod degradations;
mod engine;
mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod schedules;
pub mod spectral;
pub mod transforms;

pub use crate::engine::{DvdEngine, DFT_CONVENTION};
pub use crate::error::{Error, Result};
pub use crate::image::Image;

/// Version string recorded in every manifest.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
