//! Behavioral metrics over externally produced prediction logs.
//!
//! * shape bias on cue-conflict stimuli: `N_shape / (N_shape + N_texture)`
//!   per category, aggregated as the median over categories
//! * shape / scene recall on scene-embedded abstract shapes
//! * top-1 accuracy per (condition, severity) cell
//!
//! All aggregations go through ordered maps, so record order never matters.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

pub const PREDICTION_CSV_HEADER: &str =
    "image_id,predicted_class,shape_label,texture_label,scene_label,severity,condition";

const TAXONOMIES_JSON: &str = include_str!("../data/taxonomies.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("no prediction records")]
    Empty,

    #[error("every category has zero cue-matching predictions; shape bias is undefined")]
    AllUndefined,

    #[error("record `{image_id}`: shape and texture labels are both `{label}`")]
    SameCue { image_id: String, label: String },

    #[error("record `{image_id}`: missing `{field}`")]
    MissingField { image_id: String, field: &'static str },

    #[error("prediction log line {line}: {reason}")]
    Malformed { line: u64, reason: String },

    #[error("superclass map: {0}")]
    InvalidMap(String),
}

/// One model prediction joined with its stimulus labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    pub predicted_class: String,
    /// Shape cue; doubles as the ground-truth class in clean or degraded
    /// classification runs.
    pub shape_label: String,
    #[serde(default)]
    pub texture_label: Option<String>,
    #[serde(default)]
    pub scene_label: Option<String>,
    #[serde(default)]
    pub severity: Option<u32>,
    #[serde(default)]
    pub condition: Option<String>,
}

impl PredictionRecord {
    pub fn new(image_id: &str, predicted: &str, shape: &str) -> Self {
        PredictionRecord {
            image_id: image_id.into(),
            predicted_class: predicted.into(),
            shape_label: shape.into(),
            texture_label: None,
            scene_label: None,
            severity: None,
            condition: None,
        }
    }

    pub fn with_texture(mut self, texture: &str) -> Self {
        self.texture_label = Some(texture.into());
        self
    }

    pub fn with_scene(mut self, scene: &str) -> Self {
        self.scene_label = Some(scene.into());
        self
    }

    pub fn with_severity(mut self, severity: u32) -> Self {
        self.severity = Some(severity);
        self
    }

    pub fn with_condition(mut self, condition: &str) -> Self {
        self.condition = Some(condition.into());
        self
    }
}

/// Reads a prediction CSV. Errors carry the 1-based line number.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRecord>, MetricError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MetricError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    for required in ["image_id", "predicted_class", "shape_label"] {
        if !headers.iter().any(|h| h == required) {
            return Err(MetricError::Malformed {
                line: 1,
                reason: format!("header lacks `{required}` (expected `{PREDICTION_CSV_HEADER}`)"),
            });
        }
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<PredictionRecord>() {
        match row {
            Ok(mut r) => {
                for field in [&mut r.texture_label, &mut r.scene_label, &mut r.condition] {
                    if field.as_deref() == Some("") {
                        *field = None;
                    }
                }
                out.push(r);
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(MetricError::Malformed {
                    line,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryBias {
    pub category: String,
    pub n_shape: usize,
    pub n_texture: usize,
    pub n_neither: usize,
    /// `None` when no prediction matched either cue.
    pub shape_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeBiasReport {
    pub per_category: Vec<CategoryBias>,
    /// Median of the defined per-category biases.
    pub overall_median: f64,
    /// Mean of the defined per-category biases, for comparison only.
    pub overall_mean: f64,
    pub n_records: usize,
    pub undefined_categories: Vec<String>,
}

/// Shape bias per shape category and overall (median over categories).
pub fn shape_bias(records: &[PredictionRecord]) -> Result<ShapeBiasReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut counts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for r in records {
        let texture = r
            .texture_label
            .as_deref()
            .ok_or_else(|| MetricError::MissingField {
                image_id: r.image_id.clone(),
                field: "texture_label",
            })?;
        if texture == r.shape_label {
            return Err(MetricError::SameCue {
                image_id: r.image_id.clone(),
                label: texture.to_owned(),
            });
        }
        let slot = if r.predicted_class == r.shape_label {
            0
        } else if r.predicted_class == texture {
            1
        } else {
            2
        };
        counts.entry(r.shape_label.as_str()).or_default()[slot] += 1;
    }

    let per_category: Vec<CategoryBias> = counts
        .into_iter()
        .map(|(category, [s, t, n])| CategoryBias {
            category: category.to_owned(),
            n_shape: s,
            n_texture: t,
            n_neither: n,
            shape_bias: (s + t > 0).then(|| s as f64 / (s + t) as f64),
        })
        .collect();
    let defined: Vec<f64> = per_category.iter().filter_map(|c| c.shape_bias).collect();
    if defined.is_empty() {
        return Err(MetricError::AllUndefined);
    }
    let undefined_categories = per_category
        .iter()
        .filter(|c| c.shape_bias.is_none())
        .map(|c| c.category.clone())
        .collect();
    Ok(ShapeBiasReport {
        overall_median: median(&defined),
        overall_mean: defined.iter().sum::<f64>() / defined.len() as f64,
        per_category,
        n_records: records.len(),
        undefined_categories,
    })
}

/// Median; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Category taxonomies shipped with the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomies {
    pub version: String,
    pub cue_conflict_categories: Vec<String>,
    pub shape_superclasses: Vec<String>,
    pub scene_superclasses: Vec<String>,
}

impl Taxonomies {
    pub fn builtin() -> &'static Taxonomies {
        static T: OnceLock<Taxonomies> = OnceLock::new();
        T.get_or_init(|| serde_json::from_str(TAXONOMIES_JSON).expect("built-in taxonomies"))
    }
}

/// Maps classifier output classes to shape and scene superclasses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperclassMap {
    pub shape: BTreeMap<String, String>,
    pub scene: BTreeMap<String, String>,
}

impl SuperclassMap {
    pub fn new(
        shape: BTreeMap<String, String>,
        scene: BTreeMap<String, String>,
    ) -> Result<Self, MetricError> {
        let map = SuperclassMap { shape, scene };
        map.validate()?;
        Ok(map)
    }

    pub fn from_json(text: &str) -> Result<Self, MetricError> {
        let map: SuperclassMap =
            serde_json::from_str(text).map_err(|e| MetricError::InvalidMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    /// Every taxonomy superclass maps to itself; suitable for logs whose
    /// predictions are already superclass names.
    pub fn identity() -> Self {
        let t = Taxonomies::builtin();
        let id = |v: &[String]| v.iter().map(|s| (s.clone(), s.clone())).collect();
        SuperclassMap::new(id(&t.shape_superclasses), id(&t.scene_superclasses))
            .expect("built-in taxonomies are disjoint")
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if let Some(class) = self.shape.keys().find(|k| self.scene.contains_key(*k)) {
            return Err(MetricError::InvalidMap(format!(
                "class `{class}` is mapped in both the shape and scene tables"
            )));
        }
        let shape_sc: BTreeSet<&String> = self.shape.values().collect();
        let scene_sc: BTreeSet<&String> = self.scene.values().collect();
        if let Some(sc) = shape_sc.intersection(&scene_sc).next() {
            return Err(MetricError::InvalidMap(format!(
                "superclass `{sc}` appears in both the shape and scene sets"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    /// Percent of records whose prediction maps into the record's shape superclass.
    pub shape_recall: f64,
    /// Percent of records whose prediction maps into the record's scene superclass.
    pub scene_recall: f64,
    pub n_records: usize,
    pub n_shape_correct: usize,
    pub n_scene_correct: usize,
    /// Predictions absent from both tables.
    pub n_unmapped: usize,
}

pub fn shape_scene_recall(
    records: &[PredictionRecord],
    map: &SuperclassMap,
) -> Result<RecallReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::Empty);
    }
    let (mut shape_ok, mut scene_ok, mut unmapped) = (0, 0, 0);
    for r in records {
        let scene_label = r
            .scene_label
            .as_deref()
            .ok_or_else(|| MetricError::MissingField {
                image_id: r.image_id.clone(),
                field: "scene_label",
            })?;
        match (map.shape.get(&r.predicted_class), map.scene.get(&r.predicted_class)) {
            (Some(sc), _) if *sc == r.shape_label => shape_ok += 1,
            (_, Some(sc)) if sc == scene_label => scene_ok += 1,
            (None, None) => unmapped += 1,
            _ => {}
        }
    }
    let n = records.len();
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    Ok(RecallReport {
        shape_recall: pct(shape_ok),
        scene_recall: pct(scene_ok),
        n_records: n,
        n_shape_correct: shape_ok,
        n_scene_correct: scene_ok,
        n_unmapped: unmapped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessCell {
    pub condition: Option<String>,
    pub severity: Option<u32>,
    pub correct: usize,
    pub total: usize,
    pub top1_accuracy: f64,
}

/// Top-1 accuracy per (condition, severity); cells without records are
/// absent rather than zero.
pub fn robustness_curve(records: &[PredictionRecord]) -> Vec<RobustnessCell> {
    let mut cells: BTreeMap<(Option<&str>, Option<u32>), (usize, usize)> = BTreeMap::new();
    for r in records {
        let cell = cells
            .entry((r.condition.as_deref(), r.severity))
            .or_default();
        cell.1 += 1;
        if r.predicted_class == r.shape_label {
            cell.0 += 1;
        }
    }
    cells
        .into_iter()
        .map(|((condition, severity), (correct, total))| RobustnessCell {
            condition: condition.map(str::to_owned),
            severity,
            correct,
            total,
            top1_accuracy: correct as f64 / total as f64,
        })
        .collect()
}

/// Combined JSON output of `dvd score`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_bias: Option<ShapeBiasReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<RecallReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robustness: Option<Vec<RobustnessCell>>,
}

pub fn write_shape_bias_csv<W: Write>(report: &ShapeBiasReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "category",
        "n_shape",
        "n_texture",
        "n_neither",
        "shape_bias",
    ])?;
    let v = METRICS_SCHEMA_VERSION.to_string();
    for c in &report.per_category {
        w.write_record([
            v.clone(),
            c.category.clone(),
            c.n_shape.to_string(),
            c.n_texture.to_string(),
            c.n_neither.to_string(),
            c.shape_bias.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.write_record([
        v.clone(),
        "__median__".into(),
        String::new(),
        String::new(),
        String::new(),
        report.overall_median.to_string(),
    ])?;
    w.write_record([
        v,
        "__mean__".into(),
        String::new(),
        String::new(),
        String::new(),
        report.overall_mean.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_recall_csv<W: Write>(report: &RecallReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "shape_recall",
        "scene_recall",
        "n_records",
        "n_unmapped",
    ])?;
    w.write_record([
        METRICS_SCHEMA_VERSION.to_string(),
        report.shape_recall.to_string(),
        report.scene_recall.to_string(),
        report.n_records.to_string(),
        report.n_unmapped.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_robustness_csv<W: Write>(cells: &[RobustnessCell], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "condition",
        "severity",
        "correct",
        "total",
        "top1_accuracy",
    ])?;
    for c in cells {
        w.write_record([
            METRICS_SCHEMA_VERSION.to_string(),
            c.condition.clone().unwrap_or_default(),
            c.severity.map(|s| s.to_string()).unwrap_or_default(),
            c.correct.to_string(),
            c.total.to_string(),
            c.top1_accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
