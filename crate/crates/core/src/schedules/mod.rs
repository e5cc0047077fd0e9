//! Developmental trajectories for acuity, contrast sensitivity and chromatic
//! sensitivity, plus the clock that maps training epochs onto age.
//!
//! Each dimension is described by an [`AnchorTable`] of (age, level) points
//! and fitted with a monotone logistic curve. Acuity is stored as MAR
//! (minimum angle of resolution, Snellen denominator / 20), so newborn
//! 20/600 is 30 and adult 20/20 is 1. Contrast and chroma are unitless
//! sensitivities in `[0, 1]`.
//!
//! Lookups beyond 300 months hold the adult value.

mod fit;

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use self::fit::{fit_logistic, LogisticFit};

/// Upper end of the developmental axis: 25 years.
pub const ADULT_AGE_MONTHS: f64 = 300.0;

/// Schema version of the anchor / fitted-parameter JSON documents.
pub const SCHEDULE_SCHEMA_VERSION: u32 = 1;

/// Header of the exported schedule CSV.
pub const SCHEDULE_CSV_HEADER: &str =
    "age_months,mar,contrast_sensitivity,chromatic_sensitivity";

const DEFAULT_ANCHORS_JSON: &str = include_str!("../../data/default_anchors.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("age must be finite and non-negative, got {0}")]
    InvalidAge(f64),

    #[error("alpha (months per epoch) must be finite and positive, got {0}")]
    InvalidAlpha(f64),

    #[error("{dimension} anchors: need at least 3 points, got {count}")]
    TooFewAnchors { dimension: Dimension, count: usize },

    #[error("{dimension} anchors: ages must be strictly increasing (index {index})")]
    AgesNotIncreasing { dimension: Dimension, index: usize },

    #[error("{dimension} anchors: non-finite value at index {index}")]
    NonFinite { dimension: Dimension, index: usize },

    #[error(
        "{dimension} anchors: level at index {index} ({level}) breaks the {direction} maturation direction"
    )]
    NonMonotone {
        dimension: Dimension,
        index: usize,
        level: f64,
        direction: Direction,
    },

    #[error(
        "{dimension} logistic fit did not converge after {iterations} iterations (best rms {rms:e})"
    )]
    NotConverged {
        dimension: Dimension,
        best: LogisticCurve,
        rms: f64,
        iterations: usize,
    },

    #[error("{dimension} logistic fit reversed the maturation direction (amplitude {amplitude})")]
    FitNotMonotone { dimension: Dimension, amplitude: f64 },

    #[error("export step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("anchor document: {0}")]
    Document(String),
}

/// Months since birth.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AgeMonths(f64);

impl AgeMonths {
    pub const BIRTH: AgeMonths = AgeMonths(0.0);
    pub const ADULT: AgeMonths = AgeMonths(ADULT_AGE_MONTHS);

    pub fn new(months: f64) -> Result<Self, ScheduleError> {
        if months.is_finite() && months >= 0.0 {
            Ok(AgeMonths(months))
        } else {
            Err(ScheduleError::InvalidAge(months))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The age used for scheduled lookups: values past 300 hold at 300.
    #[inline]
    pub fn scheduled(self) -> f64 {
        self.0.min(ADULT_AGE_MONTHS)
    }
}

impl TryFrom<f64> for AgeMonths {
    type Error = ScheduleError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        AgeMonths::new(v)
    }
}

impl From<AgeMonths> for f64 {
    fn from(a: AgeMonths) -> f64 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Acuity,
    Contrast,
    Chroma,
}

impl Dimension {
    /// Direction in which the stored quantity moves as vision matures.
    pub fn direction(self) -> Direction {
        match self {
            Dimension::Acuity => Direction::Decreasing,
            Dimension::Contrast | Dimension::Chroma => Direction::Increasing,
        }
    }

    /// Physical lower bound of the stored quantity.
    pub fn floor(self) -> f64 {
        match self {
            Dimension::Acuity => 1.0,
            Dimension::Contrast | Dimension::Chroma => 0.0,
        }
    }

    /// Physical upper bound, if any.
    pub fn ceiling(self) -> f64 {
        match self {
            Dimension::Acuity => f64::INFINITY,
            Dimension::Contrast | Dimension::Chroma => 1.0,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Dimension::Acuity => "MAR",
            Dimension::Contrast | Dimension::Chroma => "unitless [0,1]",
        }
    }

    fn clamp_level(self, v: f64) -> f64 {
        v.clamp(self.floor(), self.ceiling())
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dimension::Acuity => "acuity",
            Dimension::Contrast => "contrast",
            Dimension::Chroma => "chroma",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    #[inline]
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorPoint {
    pub age_months: f64,
    pub level: f64,
}

/// Digitized (age, level) samples of one developmental trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTable {
    pub dimension: Dimension,
    #[serde(default)]
    pub unit: String,
    pub points: Vec<AnchorPoint>,
}

impl AnchorTable {
    pub fn new(dimension: Dimension, points: Vec<AnchorPoint>) -> Result<Self, ScheduleError> {
        let table = AnchorTable {
            dimension,
            unit: dimension.unit().to_owned(),
            points,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn from_pairs(dimension: Dimension, pairs: &[(f64, f64)]) -> Result<Self, ScheduleError> {
        Self::new(
            dimension,
            pairs
                .iter()
                .map(|&(age_months, level)| AnchorPoint { age_months, level })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let dimension = self.dimension;
        if self.points.len() < 3 {
            return Err(ScheduleError::TooFewAnchors {
                dimension,
                count: self.points.len(),
            });
        }
        for (index, p) in self.points.iter().enumerate() {
            if !p.age_months.is_finite() || !p.level.is_finite() || p.age_months < 0.0 {
                return Err(ScheduleError::NonFinite { dimension, index });
            }
        }
        let direction = dimension.direction();
        for (i, pair) in self.points.windows(2).enumerate() {
            if pair[1].age_months <= pair[0].age_months {
                return Err(ScheduleError::AgesNotIncreasing {
                    dimension,
                    index: i + 1,
                });
            }
            if (pair[1].level - pair[0].level) * direction.sign() < 0.0 {
                return Err(ScheduleError::NonMonotone {
                    dimension,
                    index: i + 1,
                    level: pair[1].level,
                    direction,
                });
            }
        }
        Ok(())
    }

    pub fn ages(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.age_months)
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.level)
    }
}

/// `floor + amplitude / (1 + exp(-s·rate·(t - midpoint)))`, where `s` is
/// +1 for increasing curves and -1 for decreasing ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticCurve {
    pub amplitude: f64,
    /// Growth rate in 1/month; always positive.
    pub rate_per_month: f64,
    pub midpoint_months: f64,
    pub floor: f64,
    pub direction: Direction,
}

impl LogisticCurve {
    #[inline]
    pub fn eval(&self, months: f64) -> f64 {
        let z = self.direction.sign() * self.rate_per_month * (months - self.midpoint_months);
        self.floor + self.amplitude * logistic(z)
    }
}

#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A fitted trajectory. Falls back to piecewise-linear interpolation of
/// the anchors when the logistic fit does not converge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleCurve {
    Logistic(LogisticCurve),
    PiecewiseLinear { points: Vec<AnchorPoint> },
}

impl ScheduleCurve {
    pub fn eval(&self, months: f64) -> f64 {
        match self {
            ScheduleCurve::Logistic(c) => c.eval(months),
            ScheduleCurve::PiecewiseLinear { points } => interpolate(points, months),
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, ScheduleCurve::PiecewiseLinear { .. })
    }
}

fn interpolate(points: &[AnchorPoint], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.age_months {
        return first.level;
    }
    if t >= last.age_months {
        return last.level;
    }
    let i = points.partition_point(|p| p.age_months <= t);
    let (a, b) = (points[i - 1], points[i]);
    let f = (t - a.age_months) / (b.age_months - a.age_months);
    a.level + f * (b.level - a.level)
}

/// One dimension's fitted curve along with its fit residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSchedule {
    pub dimension: Dimension,
    pub unit: String,
    pub curve: ScheduleCurve,
    pub fit_rms: f64,
    /// Anchor levels at birth and at the adult age, when the table has
    /// them. A logistic only approaches its asymptotes, so fitted values
    /// are mapped affinely to pass exactly through these endpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newborn_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adult_level: Option<f64>,
}

impl DimensionSchedule {
    /// Fits the anchors; a non-converging fit degrades to piecewise-linear.
    pub fn fit(anchors: &AnchorTable) -> Result<Self, ScheduleError> {
        let (curve, fit_rms) = match fit_logistic(anchors) {
            Ok(fit) => (ScheduleCurve::Logistic(fit.curve), fit.rms),
            Err(ScheduleError::NotConverged { rms, .. }) => {
                log::warn!(
                    "{} logistic fit did not converge (rms {rms:e}); using piecewise-linear anchors",
                    anchors.dimension
                );
                (
                    ScheduleCurve::PiecewiseLinear {
                        points: anchors.points.clone(),
                    },
                    0.0,
                )
            }
            Err(e) => return Err(e),
        };
        let level_at = |age: f64| {
            anchors
                .points
                .iter()
                .find(|p| p.age_months == age)
                .map(|p| p.level)
        };
        Ok(DimensionSchedule {
            dimension: anchors.dimension,
            unit: anchors.dimension.unit().to_owned(),
            curve,
            fit_rms,
            newborn_level: level_at(0.0),
            adult_level: level_at(ADULT_AGE_MONTHS),
        })
    }

    pub fn at(&self, age: AgeMonths) -> f64 {
        self.dimension.clamp_level(self.eval(age.scheduled()))
    }

    fn eval(&self, months: f64) -> f64 {
        let raw = self.curve.eval(months);
        if self.curve.is_fallback() {
            return raw;
        }
        let (start, end) = (self.curve.eval(0.0), self.curve.eval(ADULT_AGE_MONTHS));
        let lo = self.newborn_level.unwrap_or(start);
        let hi = self.adult_level.unwrap_or(end);
        let span = end - start;
        if span == 0.0 || (hi - lo) * span <= 0.0 {
            return raw;
        }
        if months <= 0.0 {
            return lo;
        }
        if months >= ADULT_AGE_MONTHS {
            return hi;
        }
        lo + (raw - start) * ((hi - lo) / span)
    }
}

/// The three anchor tables, as read from / written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub source: Option<String>,
    pub acuity: AnchorTable,
    pub contrast: AnchorTable,
    pub chroma: AnchorTable,
}

impl AnchorDocument {
    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        let mut doc: AnchorDocument =
            serde_json::from_str(text).map_err(|e| ScheduleError::Document(e.to_string()))?;
        if doc.schema_version != SCHEDULE_SCHEMA_VERSION {
            return Err(ScheduleError::Document(format!(
                "unsupported schema_version {} (expected {})",
                doc.schema_version, SCHEDULE_SCHEMA_VERSION
            )));
        }
        for (table, expected) in [
            (&mut doc.acuity, Dimension::Acuity),
            (&mut doc.contrast, Dimension::Contrast),
            (&mut doc.chroma, Dimension::Chroma),
        ] {
            if table.dimension != expected {
                return Err(ScheduleError::Document(format!(
                    "table under `{expected}` declares dimension `{}`",
                    table.dimension
                )));
            }
            if !table.unit.is_empty() && table.unit != expected.unit() {
                return Err(ScheduleError::Document(format!(
                    "`{expected}` unit must be `{}`, got `{}`",
                    expected.unit(),
                    table.unit
                )));
            }
            table.unit = expected.unit().to_owned();
            table.validate()?;
        }
        Ok(doc)
    }

    /// The anchors shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_ANCHORS_JSON).expect("built-in anchor document is valid")
    }
}

/// Fitted acuity (MAR), contrast-sensitivity and chromatic-sensitivity
/// trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    pub schema_version: u32,
    pub acuity: DimensionSchedule,
    pub contrast: DimensionSchedule,
    pub chroma: DimensionSchedule,
}

impl ScheduleSet {
    pub fn fit(doc: &AnchorDocument) -> Result<Self, ScheduleError> {
        Ok(ScheduleSet {
            schema_version: SCHEDULE_SCHEMA_VERSION,
            acuity: DimensionSchedule::fit(&doc.acuity)?,
            contrast: DimensionSchedule::fit(&doc.contrast)?,
            chroma: DimensionSchedule::fit(&doc.chroma)?,
        })
    }

    /// Schedules fitted to the built-in anchors. Fitted once per process.
    pub fn builtin() -> &'static ScheduleSet {
        static SET: OnceLock<ScheduleSet> = OnceLock::new();
        SET.get_or_init(|| {
            ScheduleSet::fit(&AnchorDocument::builtin()).expect("built-in anchors fit")
        })
    }

    /// MAR at the given age; always ≥ 1.
    pub fn acuity_at(&self, age: AgeMonths) -> f64 {
        self.acuity.at(age)
    }

    /// Normalized contrast sensitivity `C_t` in `[0, 1]`.
    pub fn contrast_sensitivity_at(&self, age: AgeMonths) -> f64 {
        self.contrast.at(age)
    }

    /// Chromatic sensitivity `S_t` in `[0, 1]`.
    pub fn chromatic_sensitivity_at(&self, age: AgeMonths) -> f64 {
        self.chroma.at(age)
    }

    /// True when any dimension fell back to piecewise-linear anchors.
    pub fn has_fallback(&self) -> bool {
        [&self.acuity, &self.contrast, &self.chroma]
            .iter()
            .any(|d| d.curve.is_fallback())
    }

    /// SHA-256 over the canonical JSON of the fitted parameters.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schedule set serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule set serializes")
    }
}

/// Maps training epochs to developmental age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochClock {
    alpha: f64,
}

impl EpochClock {
    pub fn new(months_per_epoch: f64) -> Result<Self, ScheduleError> {
        if months_per_epoch.is_finite() && months_per_epoch > 0.0 {
            Ok(EpochClock {
                alpha: months_per_epoch,
            })
        } else {
            Err(ScheduleError::InvalidAlpha(months_per_epoch))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `min(alpha · epoch, 300)`.
    pub fn epoch_to_age(&self, epoch: u64) -> AgeMonths {
        AgeMonths((self.alpha * epoch as f64).min(ADULT_AGE_MONTHS))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub age_months: f64,
    pub mar: f64,
    pub contrast_sensitivity: f64,
    pub chromatic_sensitivity: f64,
}

/// Tabulates the three schedules at `0, step, 2·step, …` up to and
/// including 300 months. When 300 is not a multiple of `step` it is
/// appended as the last row.
pub fn export_schedule(s: &ScheduleSet, step: f64) -> Result<Vec<ScheduleRow>, ScheduleError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(ScheduleError::InvalidStep(step));
    }
    let mut ages = Vec::new();
    let mut k = 0u64;
    loop {
        let age = k as f64 * step;
        if age > ADULT_AGE_MONTHS + 1e-9 * ADULT_AGE_MONTHS {
            break;
        }
        ages.push(age.min(ADULT_AGE_MONTHS));
        k += 1;
    }
    if *ages.last().unwrap() < ADULT_AGE_MONTHS {
        ages.push(ADULT_AGE_MONTHS);
    }
    Ok(ages
        .into_iter()
        .map(|a| {
            let age = AgeMonths(a);
            ScheduleRow {
                age_months: a,
                mar: s.acuity_at(age),
                contrast_sensitivity: s.contrast_sensitivity_at(age),
                chromatic_sensitivity: s.chromatic_sensitivity_at(age),
            }
        })
        .collect())
}

pub fn write_schedule_csv<W: Write>(rows: &[ScheduleRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age(m: f64) -> AgeMonths {
        AgeMonths::new(m).unwrap()
    }

    #[test]
    fn rejects_negative_and_nan_ages() {
        assert!(AgeMonths::new(-1.0).is_err());
        assert!(AgeMonths::new(f64::NAN).is_err());
        assert_eq!(age(450.0).scheduled(), 300.0);
    }

    #[test]
    fn anchor_validation() {
        use Dimension::*;
        assert!(matches!(
            AnchorTable::from_pairs(Chroma, &[(0.0, 0.0), (1.0, 1.0)]),
            Err(ScheduleError::TooFewAnchors { count: 2, .. })
        ));
        assert!(matches!(
            AnchorTable::from_pairs(Chroma, &[(0.0, 0.0), (5.0, 0.5), (5.0, 1.0)]),
            Err(ScheduleError::AgesNotIncreasing { index: 2, .. })
        ));
        assert!(matches!(
            AnchorTable::from_pairs(Contrast, &[(0.0, 0.0), (5.0, 0.6), (9.0, 0.4)]),
            Err(ScheduleError::NonMonotone { index: 2, .. })
        ));
        // acuity MAR must fall with age
        assert!(matches!(
            AnchorTable::from_pairs(Acuity, &[(0.0, 30.0), (5.0, 10.0), (9.0, 12.0)]),
            Err(ScheduleError::NonMonotone { index: 2, .. })
        ));
        assert!(AnchorTable::from_pairs(Acuity, &[(0.0, 30.0), (5.0, 10.0), (9.0, 1.0)]).is_ok());
    }

    #[test]
    fn builtin_endpoints() {
        let s = ScheduleSet::builtin();
        assert!(!s.has_fallback());
        let mar0 = s.acuity_at(AgeMonths::BIRTH);
        assert!((mar0 - 30.0).abs() <= 1.5, "newborn MAR {mar0}");
        assert!((s.acuity_at(AgeMonths::ADULT) - 1.0).abs() < 1e-3);
        let mar24 = s.acuity_at(age(24.0));
        assert!(mar24 < mar0 && mar24 >= 1.0);
        assert!(s.contrast_sensitivity_at(AgeMonths::BIRTH) <= 0.05);
        assert!(s.contrast_sensitivity_at(AgeMonths::ADULT) >= 0.95);
        assert!(s.chromatic_sensitivity_at(AgeMonths::BIRTH) <= 0.05);
        assert!(s.chromatic_sensitivity_at(AgeMonths::ADULT) >= 0.999);
    }

    #[test]
    fn lookups_hold_adult_value_past_300() {
        let s = ScheduleSet::builtin();
        assert_eq!(s.acuity_at(age(300.0)), s.acuity_at(age(1000.0)));
        assert_eq!(
            s.contrast_sensitivity_at(age(300.0)),
            s.contrast_sensitivity_at(age(301.0))
        );
    }

    #[test]
    fn fitted_curves_land_on_the_endpoint_anchors() {
        let s = ScheduleSet::builtin();
        assert_eq!(s.acuity_at(AgeMonths::ADULT), 1.0);
        assert_eq!(s.contrast_sensitivity_at(AgeMonths::ADULT), 1.0);
        assert_eq!(s.chromatic_sensitivity_at(AgeMonths::ADULT), 1.0);
        let ScheduleCurve::Logistic(raw) = s.contrast.curve else {
            panic!("expected logistic contrast curve")
        };
        assert!(raw.eval(300.0) < 1.0);
        assert_eq!(s.acuity_at(AgeMonths::BIRTH), 30.0);
        assert_eq!(s.contrast_sensitivity_at(AgeMonths::BIRTH), 0.03);
        assert_eq!(s.chromatic_sensitivity_at(AgeMonths::BIRTH), 0.0);
    }

    #[test]
    fn chroma_midpoint_identity() {
        let s = ScheduleSet::builtin();
        let ScheduleCurve::Logistic(c) = s.chroma.curve else {
            panic!("expected logistic chroma curve")
        };
        assert!((c.eval(c.midpoint_months) - (c.floor + c.amplitude / 2.0)).abs() < 1e-12);
        // The lookup is the endpoint-matched image of the raw curve.
        let (start, end) = (c.eval(0.0), c.eval(300.0));
        let want = (c.floor + c.amplitude / 2.0 - start) / (end - start);
        let mid = s.chromatic_sensitivity_at(age(c.midpoint_months));
        assert!((mid - want).abs() < 1e-12);
    }

    #[test]
    fn clock() {
        let c2 = EpochClock::new(2.0).unwrap();
        assert_eq!(c2.epoch_to_age(150).value(), 300.0);
        assert_eq!(c2.epoch_to_age(10).value(), 20.0);
        assert_eq!(EpochClock::new(1.0).unwrap().epoch_to_age(0).value(), 0.0);
        assert_eq!(EpochClock::new(8.0).unwrap().epoch_to_age(100).value(), 300.0);
        assert!(EpochClock::new(0.0).is_err());
        assert!(EpochClock::new(-2.0).is_err());
    }

    #[test]
    fn export_row_counts_and_consistency() {
        let s = ScheduleSet::builtin();
        assert_eq!(export_schedule(s, 300.0).unwrap().len(), 2);
        assert_eq!(export_schedule(s, 10.0).unwrap().len(), 31);
        assert_eq!(export_schedule(s, 50.0).unwrap().len(), 7);
        let rows = export_schedule(s, 7.0).unwrap();
        assert_eq!(rows.last().unwrap().age_months, 300.0);
        assert_eq!(rows[rows.len() - 2].age_months, 294.0);

        let rows = export_schedule(s, 10.0).unwrap();
        let r = rows.iter().find(|r| r.age_months == 120.0).unwrap();
        let a = age(120.0);
        assert_eq!(r.mar, s.acuity_at(a));
        assert_eq!(r.contrast_sensitivity, s.contrast_sensitivity_at(a));
        assert_eq!(r.chromatic_sensitivity, s.chromatic_sensitivity_at(a));

        assert!(export_schedule(s, 0.0).is_err());
        assert!(export_schedule(s, -1.0).is_err());
        assert!(export_schedule(s, f64::NAN).is_err());
    }

    #[test]
    fn csv_header_matches_contract() {
        let rows = export_schedule(ScheduleSet::builtin(), 300.0).unwrap();
        let mut buf = Vec::new();
        write_schedule_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), SCHEDULE_CSV_HEADER);
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn fallback_curve_interpolates_and_holds() {
        let pts = vec![
            AnchorPoint { age_months: 0.0, level: 0.0 },
            AnchorPoint { age_months: 10.0, level: 0.5 },
            AnchorPoint { age_months: 20.0, level: 1.0 },
        ];
        let c = ScheduleCurve::PiecewiseLinear { points: pts };
        assert_eq!(c.eval(5.0), 0.25);
        assert_eq!(c.eval(250.0), 1.0);
        assert!(c.is_fallback());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let s = ScheduleSet::builtin();
        assert_eq!(s.fingerprint(), s.clone().fingerprint());
        let mut t = s.clone();
        t.chroma.fit_rms += 1.0;
        assert_ne!(s.fingerprint(), t.fingerprint());
    }

    #[test]
    fn anchor_document_rejects_mislabelled_table() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_ANCHORS_JSON).unwrap();
        v["contrast"]["dimension"] = "chroma".into();
        assert!(AnchorDocument::from_json(&v.to_string()).is_err());
    }
}
