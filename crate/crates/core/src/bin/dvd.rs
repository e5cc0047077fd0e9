//! `dvd`: command-line front end for the developmental visual diet.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dvd_core::degradations::{AttackKind, CorruptionConstants, CorruptionKind, CorruptionSpec, Degradation, NoiseAttackSpec, Severity};
use dvd_core::metrics::{self, MetricsReport, SuperclassMap};
use dvd_core::pipeline::{self, ResizeSpec, RunOptions};
use dvd_core::schedules::{self, AgeMonths, AnchorDocument, ScheduleSet};
use dvd_core::transforms::{DvdConfig, RearingCondition};
use dvd_core::{DvdEngine, Error};

#[derive(Parser)]
#[command(name = "dvd", version, about = "Developmental visual diet: age-scheduled image transforms, degradations and metrics")]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the developmental schedules as CSV.
    Schedule(ScheduleArgs),
    /// Render one image at several ages.
    Preview(PreviewArgs),
    /// Transform a dataset at the age of one training epoch.
    Process(ProcessArgs),
    /// Apply corruptions or noise attacks to a dataset.
    Corrupt(CorruptArgs),
    /// Score a prediction log.
    Score(ScoreArgs),
}

#[derive(Args)]
struct ScheduleArgs {
    /// Age step in months; rows at 0, step, 2·step, … and 300.
    #[arg(long, allow_negative_numbers = true)]
    step: f64,
    /// Anchor document (JSON) replacing the built-in anchors.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DietArgs {
    /// Config file (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Anchor document (JSON) replacing the built-in anchors.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Months of development per epoch.
    #[arg(long)]
    alpha: Option<f64>,
    /// Base spectral threshold.
    #[arg(long)]
    beta: Option<f64>,
    /// Threshold decay period in months.
    #[arg(long)]
    lambda: Option<f64>,
    /// Controlled-rearing condition, e.g. `all`, `contrast_only`, `acuity_chromatic`.
    #[arg(long)]
    rearing: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset root laid out as `<root>/<class>/<image>`.
    #[arg(long)]
    input: PathBuf,
    /// Output root; receives images and `manifest.json`.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Resize before transforming: `N` or `WxH`.
    #[arg(long)]
    resize: Option<String>,
    /// Skip undecodable files instead of aborting.
    #[arg(long)]
    skip_bad: bool,
}

#[derive(Args)]
struct PreviewArgs {
    #[arg(long)]
    image: PathBuf,
    /// Comma-separated ages in months.
    #[arg(long, value_delimiter = ',', default_value = "0,60,120,300")]
    ages: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    resize: Option<String>,
    #[command(flatten)]
    diet: DietArgs,
}

#[derive(Args)]
struct ProcessArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Training epoch; age = min(alpha·epoch, 300).
    #[arg(long)]
    epoch: u64,
    #[command(flatten)]
    diet: DietArgs,
}

#[derive(Args)]
struct CorruptArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Corruption kinds (comma-separated) or `all`.
    #[arg(long, value_delimiter = ',')]
    kind: Vec<String>,
    /// Severities 1-5 (comma-separated) or `all`.
    #[arg(long, value_delimiter = ',')]
    severity: Vec<String>,
    /// Noise attacks (`l2_gaussian`, `l2_uniform`, `salt_and_pepper`) or `all`.
    #[arg(long, value_delimiter = ',')]
    attack: Vec<String>,
    /// Attack amplitudes (comma-separated) or `all`.
    #[arg(long, value_delimiter = ',')]
    amplitude: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    ShapeBias,
    Recall,
    Robustness,
}

#[derive(Args)]
struct ScoreArgs {
    /// Prediction CSV: image_id,predicted_class,shape_label,texture_label,scene_label,severity,condition
    #[arg(long)]
    predictions: PathBuf,
    /// Metrics to compute; repeat or comma-separate.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    metric: Vec<Metric>,
    /// Superclass map (JSON) for recall; identity over the built-in taxonomy by default.
    #[arg(long)]
    superclass_map: Option<PathBuf>,
    /// Output directory for `metrics.json` and per-metric CSVs; JSON to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad flag values: reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Usage(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Schedule(a) => cmd_schedule(a),
        Command::Preview(a) => cmd_preview(a),
        Command::Process(a) => cmd_process(a),
        Command::Corrupt(a) => cmd_corrupt(a),
        Command::Score(a) => cmd_score(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e:#}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_schedules(anchors: Option<&Path>) -> anyhow::Result<ScheduleSet> {
    match anchors {
        None => Ok(ScheduleSet::builtin().clone()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading anchors {}", path.display()))?;
            let doc = AnchorDocument::from_json(&text)
                .map_err(|e| Usage(format!("anchors {}: {e}", path.display())))?;
            let set = ScheduleSet::fit(&doc)
                .with_context(|| format!("fitting anchors {}", path.display()))?;
            if set.has_fallback() {
                log::warn!("at least one schedule uses piecewise-linear fallback");
            }
            Ok(set)
        }
    }
}

fn parse_resize(s: Option<&str>) -> anyhow::Result<Option<ResizeSpec>> {
    s.map(|s| s.parse::<ResizeSpec>().or_else(|e| usage(e.to_string())))
        .transpose()
}

/// Defaults, then the config file, then flags.
fn effective_config(d: &DietArgs) -> anyhow::Result<DvdConfig> {
    let mut cfg = match &d.config {
        None => DvdConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            DvdConfig::from_json(&text).map_err(|e| Usage(format!("config {}: {e}", path.display())))?
        }
    };
    if let Some(v) = d.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = d.beta {
        cfg.beta = v;
    }
    if let Some(v) = d.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = d.seed {
        cfg.seed = v;
    }
    if let Some(name) = &d.rearing {
        let cond: RearingCondition = name.parse().map_err(|e: Error| Usage(e.to_string()))?;
        cfg = cfg.with_rearing(cond);
    }
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    log::info!("effective config: {}", serde_json::to_string(&cfg)?);
    Ok(cfg)
}

fn build_engine(d: &DietArgs) -> anyhow::Result<DvdEngine> {
    let cfg = effective_config(d)?;
    let schedules = load_schedules(d.anchors.as_deref())?;
    let engine = DvdEngine::new(cfg, schedules)?;
    log::info!("fingerprint {}", engine.fingerprint());
    Ok(engine)
}

fn cmd_schedule(a: ScheduleArgs) -> anyhow::Result<()> {
    if !(a.step > 0.0) || !a.step.is_finite() {
        return usage(format!("--step must be a positive number of months, got {}", a.step));
    }
    let set = load_schedules(a.anchors.as_deref())?;
    let rows = schedules::export_schedule(&set, a.step)?;
    match &a.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            schedules::write_schedule_csv(&rows, BufWriter::new(f))?;
            log::info!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => schedules::write_schedule_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_preview(a: PreviewArgs) -> anyhow::Result<()> {
    let ages = a
        .ages
        .iter()
        .map(|&t| {
            if !(0.0..=300.0).contains(&t) {
                return usage(format!("ages must lie in [0, 300], got {t}"));
            }
            AgeMonths::new(t).or_else(|e| usage(e.to_string()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let resize = parse_resize(a.resize.as_deref())?;
    let engine = build_engine(&a.diet)?;
    let m = pipeline::preview(&a.image, &ages, &engine, &a.out, resize)?;
    for o in &m.outputs {
        eprintln!("{}", a.out.join(&o.path).display());
    }
    Ok(())
}

fn ingest(d: &DatasetArgs) -> anyhow::Result<(pipeline::DatasetIndex, RunOptions)> {
    if d.workers == 0 {
        return usage("--workers must be at least 1");
    }
    let opts = RunOptions {
        workers: d.workers,
        resize: parse_resize(d.resize.as_deref())?,
    };
    let idx = pipeline::ingest(&d.input, d.skip_bad)?;
    let hist = idx.histogram();
    log::info!(
        "indexed {} images in {} classes ({} skipped)",
        idx.len(),
        hist.len(),
        idx.skipped.len()
    );
    Ok((idx, opts))
}

fn report(m: &pipeline::RunManifest) {
    log::info!(
        "wrote {} outputs in {:.2}s ({:.1} images/s) to {}",
        m.outputs.len(),
        m.timings.wall_seconds,
        m.timings.images_per_second,
        m.output_root.display()
    );
}

fn cmd_process(a: ProcessArgs) -> anyhow::Result<()> {
    let engine = build_engine(&a.diet)?;
    let (idx, opts) = ingest(&a.dataset)?;
    let m = pipeline::process_epoch(&idx, a.epoch, &engine, &a.dataset.out, &opts)?;
    report(&m);
    Ok(())
}

fn select<T: Copy>(
    values: &[String],
    all: &[T],
    parse: impl Fn(&str) -> anyhow::Result<T>,
) -> anyhow::Result<Vec<T>> {
    if values.iter().any(|v| v.eq_ignore_ascii_case("all")) {
        return Ok(all.to_vec());
    }
    values.iter().map(|v| parse(v)).collect()
}

fn degradation_list(a: &CorruptArgs) -> anyhow::Result<Vec<Degradation>> {
    let constants = CorruptionConstants::builtin();
    let mut out = Vec::new();
    if !a.kind.is_empty() {
        let kinds = select(&a.kind, &CorruptionKind::ALL, |s| {
            s.parse().or_else(|e: Error| usage(e.to_string()))
        })?;
        let severities = if a.severity.is_empty() {
            Severity::ALL.to_vec()
        } else {
            select(&a.severity, &Severity::ALL, |s| {
                let level: u8 = s
                    .trim()
                    .parse()
                    .or_else(|_| usage(format!("severity must be 1-5 or `all`, got `{s}`")))?;
                Severity::new(level).or_else(|e| usage(e.to_string()))
            })?
        };
        for kind in kinds {
            for &sev in &severities {
                out.push(Degradation::Corruption {
                    spec: CorruptionSpec { kind, severity: sev },
                    seed: a.seed,
                });
            }
        }
    } else if !a.severity.is_empty() {
        return usage("--severity needs --kind");
    }
    if !a.attack.is_empty() {
        let kinds = select(&a.attack, &AttackKind::ALL, |s| {
            s.parse().or_else(|e: Error| usage(e.to_string()))
        })?;
        let amplitudes = if a.amplitude.is_empty() {
            constants.attacks.amplitudes.to_vec()
        } else {
            select(&a.amplitude, &constants.attacks.amplitudes, |s| {
                s.trim()
                    .parse()
                    .or_else(|_| usage(format!("amplitude must be an integer or `all`, got `{s}`")))
            })?
        };
        for kind in kinds {
            for &amp in &amplitudes {
                let spec = NoiseAttackSpec::new(kind, amp, a.seed).or_else(|e| usage(e.to_string()))?;
                out.push(Degradation::Attack { spec });
            }
        }
    } else if !a.amplitude.is_empty() {
        return usage("--amplitude needs --attack");
    }
    if out.is_empty() {
        return usage("give --kind and/or --attack");
    }
    Ok(out)
}

fn cmd_corrupt(a: CorruptArgs) -> anyhow::Result<()> {
    let specs = degradation_list(&a)?;
    let (idx, opts) = ingest(&a.dataset)?;
    log::info!("{} degradation specs", specs.len());
    let m = pipeline::corrupt_dataset(&idx, &specs, &a.dataset.out, &opts)?;
    report(&m);
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> anyhow::Result<()> {
    let file = File::open(&a.predictions)
        .with_context(|| format!("opening {}", a.predictions.display()))?;
    let records = metrics::read_predictions(io::BufReader::new(file))
        .with_context(|| format!("reading {}", a.predictions.display()))?;
    log::info!("{} prediction records", records.len());

    let want = |m: Metric| a.metric.contains(&m);
    let shape_bias = want(Metric::ShapeBias)
        .then(|| metrics::shape_bias(&records))
        .transpose()?;
    let recall = if want(Metric::Recall) {
        let map = match &a.superclass_map {
            None => SuperclassMap::identity(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                SuperclassMap::from_json(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?
            }
        };
        Some(metrics::shape_scene_recall(&records, &map)?)
    } else {
        None
    };
    let robustness = want(Metric::Robustness).then(|| metrics::robustness_curve(&records));
    let report = MetricsReport {
        schema_version: metrics::METRICS_SCHEMA_VERSION,
        shape_bias,
        recall,
        robustness,
    };

    let Some(dir) = &a.out else {
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        return Ok(());
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let create = |name: &str| -> anyhow::Result<BufWriter<File>> {
        let p = dir.join(name);
        Ok(BufWriter::new(
            File::create(&p).with_context(|| format!("creating {}", p.display()))?,
        ))
    };
    let mut json = create("metrics.json")?;
    serde_json::to_writer_pretty(&mut json, &report)?;
    writeln!(json)?;
    json.flush()?;
    if let Some(r) = &report.shape_bias {
        metrics::write_shape_bias_csv(r, create("shape_bias.csv")?)?;
    }
    if let Some(r) = &report.recall {
        metrics::write_recall_csv(r, create("recall.csv")?)?;
    }
    if let Some(r) = &report.robustness {
        metrics::write_robustness_csv(r, create("robustness.csv")?)?;
    }
    if report.shape_bias.is_none() && report.recall.is_none() && report.robustness.is_none() {
        bail!("no metric computed");
    }
    log::info!("wrote metrics to {}", dir.display());
    Ok(())
}
