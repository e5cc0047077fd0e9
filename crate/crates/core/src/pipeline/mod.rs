//! Dataset ingestion, age-scheduled batch processing and run manifests.
//!
//! Work is spread over a rayon pool, one image per task. Tasks share only
//! the immutable engine and degradation specs, and results are collected in
//! index order, so outputs and manifests do not depend on the worker count.

mod dataset;
mod manifest;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use dataset::{ingest, DatasetIndex, IndexEntry, SkipRecord};
pub use manifest::{
    DegradationProvenance, DietProvenance, FailureRecord, OutputRecord, ResizeSpec, RunKind,
    RunManifest, Timings, MANIFEST_FILE_NAME, MANIFEST_SCHEMA_VERSION,
};

use crate::degradations::{CorruptionConstants, Degradation};
use crate::error::{Error, Result};
use crate::image::{resize, Image};
use crate::io::{encode_png, load_image, sha256_hex};
use crate::schedules::AgeMonths;
use crate::DvdEngine;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    pub resize: Option<ResizeSpec>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            resize: None,
        }
    }
}

#[derive(Default, Clone, Copy)]
struct StageTimes {
    decode: Duration,
    transform: Duration,
    encode: Duration,
}

impl std::ops::AddAssign for StageTimes {
    fn add_assign(&mut self, o: Self) {
        self.decode += o.decode;
        self.transform += o.transform;
        self.encode += o.encode;
    }
}

struct Derived {
    rel_path: PathBuf,
    image: Image,
    age_months: Option<f64>,
    kind: Option<String>,
    severity: Option<u32>,
}

type TaskResult = (Vec<OutputRecord>, Option<FailureRecord>, StageTimes);

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn output_rel(entry: &IndexEntry) -> PathBuf {
    Path::new(&entry.class_label).join(format!("{}.png", entry.stem()))
}

fn check_collisions(idx: &DatasetIndex) -> Result<()> {
    let mut seen = BTreeSet::new();
    for e in &idx.entries {
        if !seen.insert(output_rel(e)) {
            return Err(Error::InvalidArgument(format!(
                "`{}` collides with another file of the same stem in class `{}`",
                e.image_id, e.class_label
            )));
        }
    }
    Ok(())
}

fn write_output(out: &Path, d: Derived, entry: &IndexEntry) -> Result<OutputRecord> {
    let bytes = encode_png(&d.image)?;
    let path = out.join(&d.rel_path);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(OutputRecord {
        image_id: entry.image_id.clone(),
        class_label: entry.class_label.clone(),
        path: d.rel_path,
        sha256: sha256_hex(&bytes),
        age_months: d.age_months,
        kind: d.kind,
        severity: d.severity,
    })
}

/// Runs `derive` over every entry and writes what it produces. `derive`
/// receives the decoded (and resized) image and returns derived images.
fn run<F>(
    mut manifest: RunManifest,
    idx: &DatasetIndex,
    opts: &RunOptions,
    derive: F,
) -> Result<RunManifest>
where
    F: Fn(&IndexEntry, &Image) -> Result<Vec<Derived>> + Sync,
{
    check_collisions(idx)?;
    let pool = build_pool(opts.workers)?;
    let out = manifest.output_root.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let started = Instant::now();

    let task = |entry: &IndexEntry| -> TaskResult {
        let mut times = StageTimes::default();
        let mut records = Vec::new();
        let result = (|| -> Result<()> {
            let t = Instant::now();
            let mut img = load_image(&entry.path)?;
            if let Some(r) = opts.resize {
                img = resize(&img, r.width, r.height)?;
            }
            times.decode += t.elapsed();
            let t = Instant::now();
            let derived = derive(entry, &img)?;
            times.transform += t.elapsed();
            let t = Instant::now();
            for d in derived {
                records.push(write_output(&out, d, entry)?);
            }
            times.encode += t.elapsed();
            Ok(())
        })();
        let failure = result.err().map(|e| FailureRecord {
            image_id: entry.image_id.clone(),
            error: e.to_string(),
        });
        (records, failure, times)
    };

    let results: Vec<TaskResult> = pool.install(|| idx.entries.par_iter().map(task).collect());

    let mut totals = StageTimes::default();
    for (records, failure, times) in results {
        manifest.outputs.extend(records);
        manifest.failures.extend(failure);
        totals += times;
    }
    manifest.skipped = idx.skipped.clone();
    let wall = started.elapsed().as_secs_f64();
    manifest.timings = Timings {
        images: idx.len(),
        outputs: manifest.outputs.len(),
        workers: opts.workers.max(1),
        wall_seconds: wall,
        images_per_second: if wall > 0.0 { idx.len() as f64 / wall } else { 0.0 },
        decode_seconds: totals.decode.as_secs_f64(),
        transform_seconds: totals.transform.as_secs_f64(),
        encode_seconds: totals.encode.as_secs_f64(),
    };
    manifest.complete = manifest.failures.is_empty();
    let path = manifest.write()?;
    if !manifest.complete {
        for f in &manifest.failures {
            log::error!("{}: {}", f.image_id, f.error);
        }
        return Err(Error::Incomplete {
            failed: manifest.failures.len(),
            total: idx.len(),
            manifest: path,
        });
    }
    Ok(manifest)
}

/// Transforms every image at the age the engine's clock assigns to `epoch`
/// and writes `out/<class>/<stem>.png` plus `out/manifest.json`.
pub fn process_epoch(
    idx: &DatasetIndex,
    epoch: u64,
    engine: &DvdEngine,
    out: &Path,
    opts: &RunOptions,
) -> Result<RunManifest> {
    let age = engine.clock().epoch_to_age(epoch);
    let mut manifest = RunManifest::new(RunKind::Process, &idx.root, out);
    manifest.resize = opts.resize;
    manifest.age_months = Some(age.value());
    manifest.diet = Some(DietProvenance::new(engine, Some(epoch)));
    log::info!(
        "epoch {epoch}: age {} months, {} images, {} workers",
        age.value(),
        idx.len(),
        opts.workers
    );
    run(manifest, idx, opts, |entry, img| {
        Ok(vec![Derived {
            rel_path: output_rel(entry),
            image: engine.transform(img, age)?,
            age_months: Some(age.value()),
            kind: None,
            severity: None,
        }])
    })
}

/// Applies each degradation to every image, writing
/// `out/<kind>/<level>/<class>/<stem>.png`. The degradation RNG is keyed by
/// the image id, so results do not depend on scheduling.
pub fn corrupt_dataset(
    idx: &DatasetIndex,
    specs: &[Degradation],
    out: &Path,
    opts: &RunOptions,
) -> Result<RunManifest> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no degradations requested".into()));
    }
    let mut manifest = RunManifest::new(RunKind::Corrupt, &idx.root, out);
    manifest.resize = opts.resize;
    manifest.degradations = Some(DegradationProvenance::new(
        specs,
        CorruptionConstants::builtin(),
    ));
    log::info!(
        "{} degradation(s) over {} images, {} workers",
        specs.len(),
        idx.len(),
        opts.workers
    );
    run(manifest, idx, opts, |entry, img| {
        specs
            .iter()
            .map(|d| {
                Ok(Derived {
                    rel_path: Path::new(&d.label()).join(output_rel(entry)),
                    image: d.apply(img, &entry.image_id)?,
                    age_months: None,
                    kind: Some(d.kind_name().to_owned()),
                    severity: Some(d.level()),
                })
            })
            .collect()
    })
}

/// One transformed image per requested age.
pub fn preview_images(img: &Image, ages: &[AgeMonths], engine: &DvdEngine) -> Result<Vec<Image>> {
    ages.iter().map(|&a| engine.transform(img, a)).collect()
}

/// File name used for a preview at `age`.
pub fn preview_file_name(age: AgeMonths) -> String {
    let v = age.value();
    if v.fract() == 0.0 {
        format!("age_{:03}.png", v as u64)
    } else {
        format!("age_{v}.png")
    }
}

/// Writes one `age_<t>.png` per requested age under `out`.
pub fn preview(
    image: &Path,
    ages: &[AgeMonths],
    engine: &DvdEngine,
    out: &Path,
    resize_to: Option<ResizeSpec>,
) -> Result<RunManifest> {
    let mut img = load_image(image)?;
    if let Some(r) = resize_to {
        img = resize(&img, r.width, r.height)?;
    }
    let mut manifest = RunManifest::new(RunKind::Preview, image, out);
    manifest.resize = resize_to;
    manifest.diet = Some(DietProvenance::new(engine, None));
    let id = image
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for (age, result) in ages.iter().zip(preview_images(&img, ages, engine)?) {
        let bytes = encode_png(&result)?;
        let rel = PathBuf::from(preview_file_name(*age));
        let path = out.join(&rel);
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        manifest.outputs.push(OutputRecord {
            image_id: id.clone(),
            class_label: String::new(),
            path: rel,
            sha256: sha256_hex(&bytes),
            age_months: Some(age.value()),
            kind: None,
            severity: None,
        });
    }
    manifest.complete = true;
    manifest.write()?;
    Ok(manifest)
}

/// Mean over pixels of the variance across the three channels; zero for
/// any gray image.
pub fn colorfulness(img: &Image) -> f64 {
    let total: f64 = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            ((p[0] - p[1]).powi(2) + (p[1] - p[2]).powi(2) + (p[2] - p[0]).powi(2)) / 9.0
        })
        .sum();
    total / img.pixel_count() as f64
}
