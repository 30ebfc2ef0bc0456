//! `smr` command-line front end: track, eval, synth, diagnose, compare.
//!
//! Each command is also callable as a library function so tests can drive
//! the exact pipeline the binary runs.

pub mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use smr_core::error::{Error, Result};
use smr_core::eval::{compare, evaluate, GroundTruth, NamedReport, DEFAULT_IOU_THRESHOLD};
use smr_core::imaging::{decode_frame, encode_pgm, extract_patch, BBox, FrameDir};
use smr_core::matching::{diff_histogram, diff_map, histogram_csv, sad_score, smr_score_scaled, Metric, Template};
use smr_core::synth::{self, generate, SynthSpec};
use smr_core::tracker::{parse_results_csv, results_csv, track_sequence, TrackerConfig};

use crate::manifest::{beside, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "smr", version, about = "Similarity Matching Ratio template tracker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a target through a directory of frames.
    Track(TrackArgs),
    /// Score tracking results against ground truth.
    Eval(EvalArgs),
    /// Render a synthetic sequence from a spec file.
    Synth(SynthArgs),
    /// Difference maps, histograms and scores for two candidate boxes.
    Diagnose(DiagnoseArgs),
    /// Run SMR and SAD over sequences and tabulate correctly tracked frames.
    Compare(CompareArgs),
}

/// Tracker settings; flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct TrackerFlags {
    /// Flat key=value file with TrackerConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long)]
    pub radius: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha0: Option<f64>,
    #[arg(long = "alpha-min", allow_negative_numbers = true)]
    pub alpha_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// smr or sad.
    #[arg(long)]
    pub metric: Option<Metric>,
}

impl TrackerFlags {
    pub fn resolve(&self) -> Result<TrackerConfig> {
        let mut config = match &self.config {
            Some(path) => TrackerConfig::parse(&read_text(path)?)?,
            None => TrackerConfig::default(),
        };
        if let Some(v) = self.k {
            config.k = v;
        }
        if let Some(v) = self.radius {
            config.search_radius = v;
        }
        if let Some(v) = self.alpha0 {
            config.alpha0 = v;
        }
        if let Some(v) = self.alpha_min {
            config.alpha_min = v;
        }
        if let Some(v) = self.beta {
            config.beta = v;
        }
        if let Some(v) = self.metric {
            config.metric = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// Directory of numbered .pgm/.png frames.
    #[arg(long)]
    pub frames: PathBuf,
    /// Initial box as "x y w h".
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// One-line file holding the initial box; defaults to <frames>/init.txt.
    #[arg(long, conflicts_with = "init")]
    pub init_file: Option<PathBuf>,
    /// Results CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub tracker: TrackerFlags,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long = "iou-threshold", default_value_t = DEFAULT_IOU_THRESHOLD, allow_negative_numbers = true)]
    pub iou_threshold: f64,
    /// Per-frame IoU CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for frames, truth.csv and init.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// Frame holding the candidate boxes.
    #[arg(long)]
    pub frame: PathBuf,
    /// Frame the template is cut from.
    #[arg(long)]
    pub template_frame: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub template_box: String,
    #[arg(long, allow_hyphen_values = true)]
    pub box_a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub box_b: String,
    /// Threshold for the SMR scores.
    #[arg(long, default_value_t = 63.75)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long = "bin-width", default_value_t = 8)]
    pub bin_width: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Sequence as NAME=DIR; DIR holds frames and truth.csv. Repeatable.
    #[arg(long = "seq", required = true)]
    pub sequences: Vec<String>,
    #[arg(long = "iou-threshold", default_value_t = DEFAULT_IOU_THRESHOLD, allow_negative_numbers = true)]
    pub iou_threshold: f64,
    /// Comparison table CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub tracker: TrackerFlags,
}

/// Failure class used for the diagnostic prefix and exit status.
pub fn failure_class(err: &Error) -> (&'static str, i32) {
    match err.root() {
        Error::Config(_) | Error::Parse { .. } | Error::Spec(_) => ("config", 2),
        Error::NoSuchInput(_) => ("input", 3),
        Error::Decode { .. } | Error::InvalidFrame(_) | Error::DimensionMismatch { .. } => ("decode", 4),
        Error::OutOfBounds { .. } => ("bounds", 5),
        Error::IndexMismatch(_) => ("eval", 6),
        Error::Io(_) | Error::Frame { .. } => ("io", 1),
    }
}

/// One-line diagnostic for `err`.
pub fn diagnostic(err: &Error) -> String {
    let (class, _) = failure_class(err);
    format!("smr: {class} error: {err}")
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Track(a) => cmd_track(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NoSuchInput(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn record_config(manifest: &mut RunManifest, config: &TrackerConfig) {
    manifest.set("k", format!("{:.6}", config.k));
    manifest.set("search_radius", config.search_radius);
    manifest.set("alpha0", format!("{:.6}", config.alpha0));
    manifest.set("alpha_min", format!("{:.6}", config.alpha_min));
    manifest.set("beta", format!("{:.6}", config.beta));
    manifest.set("metric", config.metric);
}

fn resolve_init(args: &TrackArgs) -> Result<BBox> {
    if let Some(text) = &args.init {
        return BBox::parse(text);
    }
    let path = args
        .init_file
        .clone()
        .unwrap_or_else(|| args.frames.join(synth::INIT_FILE));
    BBox::parse(read_text(&path)?.lines().next().unwrap_or(""))
}

/// Tracks a frame directory and writes the results CSV plus its manifest.
pub fn cmd_track(args: &TrackArgs) -> Result<String> {
    let start = Instant::now();
    let config = args.tracker.resolve()?;
    let frames = FrameDir::open(&args.frames)?;
    let init = resolve_init(args)?;
    let results = track_sequence(frames.frames(), init, &config)?;
    write_file(&args.out, results_csv(&results))?;

    let mut m = RunManifest::new("track");
    record_config(&mut m, &config);
    m.set("init_box", format!("{} {} {} {}", init.x, init.y, init.w, init.h));
    m.inputs.push(args.frames.clone());
    m.outputs.push(args.out.clone());
    m.write(&beside(&args.out), start.elapsed())?;
    Ok(format!("tracked {} frames -> {}", results.len(), args.out.display()))
}

/// Evaluates a results CSV against ground truth; prints `correct: N / M`.
pub fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let start = Instant::now();
    if !args.iou_threshold.is_finite() {
        return Err(Error::Config("iou threshold must be finite".into()));
    }
    let results = parse_results_csv(&read_text(&args.results)?)?;
    let truth = GroundTruth::parse(&read_text(&args.truth)?)?;
    let report = evaluate(&results, &truth, args.iou_threshold)?;
    write_file(&args.out, report.to_csv())?;

    let mut m = RunManifest::new("eval");
    m.set("iou_threshold", format!("{:.6}", args.iou_threshold));
    m.inputs.extend([args.results.clone(), args.truth.clone()]);
    m.outputs.push(args.out.clone());
    m.write(&beside(&args.out), start.elapsed())?;
    Ok(report.summary())
}

/// Renders a spec file into numbered PGM frames, truth.csv and init.txt.
pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let start = Instant::now();
    let spec = SynthSpec::parse(&read_text(&args.spec)?)?;
    let (frames, truth) = generate(&spec)?;
    let written = synth::write_sequence(&args.out, &frames, &truth)?;

    let mut m = RunManifest::new("synth");
    m.set("frames", frames.len());
    m.set("size", format!("{}x{}", spec.width, spec.height));
    m.inputs.push(args.spec.clone());
    m.outputs = written;
    m.write(&args.out.join("manifest.json"), start.elapsed())?;
    Ok(format!("wrote {} frames -> {}", frames.len(), args.out.display()))
}

/// Writes difference maps, histograms and SMR/SAD scores for two boxes.
pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<String> {
    let start = Instant::now();
    let frame = decode_frame(&args.frame)?;
    let template_frame = decode_frame(&args.template_frame)?;
    let template = Template::new(extract_patch(&template_frame, &BBox::parse(&args.template_box)?)?, 1);
    let candidates = [("a", BBox::parse(&args.box_a)?), ("b", BBox::parse(&args.box_b)?)];
    std::fs::create_dir_all(&args.out)?;

    let mut m = RunManifest::new("diagnose");
    m.set("alpha", format!("{:.6}", args.alpha));
    m.set("beta", format!("{:.6}", args.beta));
    m.set("bin_width", args.bin_width);
    m.inputs.extend([args.frame.clone(), args.template_frame.clone()]);

    let mut scores = String::from("candidate,x,y,w,h,smr,sad\n");
    for (name, bbox) in &candidates {
        let patch = extract_patch(&frame, bbox)?;
        let map = diff_map(&patch, &template)?;
        let hist = diff_histogram(&map, args.bin_width)?;
        let smr = smr_score_scaled(&patch, &template, args.alpha, args.beta)?;
        let sad = sad_score(&patch, &template)?;
        writeln!(
            scores,
            "{name},{},{},{},{},{smr:.6},{sad}",
            bbox.x, bbox.y, bbox.w, bbox.h
        )
        .unwrap();

        let map_path = args.out.join(format!("diff_{name}.pgm"));
        let hist_path = args.out.join(format!("hist_{name}.csv"));
        write_file(&map_path, encode_pgm(&map))?;
        write_file(&hist_path, histogram_csv(&hist))?;
        m.outputs.extend([map_path, hist_path]);
    }
    let scores_path = args.out.join("scores.csv");
    write_file(&scores_path, &scores)?;
    m.outputs.push(scores_path);
    m.write(&args.out.join("manifest.json"), start.elapsed())?;
    Ok(scores.trim_end().to_string())
}

/// Tracks every sequence with SMR and SAD under the same settings and
/// writes the correctly-tracked table.
pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let start = Instant::now();
    let base = args.tracker.resolve()?;
    let mut m = RunManifest::new("compare");
    record_config(&mut m, &base);
    m.config.remove("metric");
    m.set("iou_threshold", format!("{:.6}", args.iou_threshold));

    let mut reports = Vec::new();
    for entry in &args.sequences {
        let (name, dir) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--seq expects NAME=DIR, got {entry:?}")))?;
        let dir = PathBuf::from(dir);
        let truth = GroundTruth::parse(&read_text(&dir.join(synth::TRUTH_FILE))?)?;
        let (_, init) = truth
            .first_box()
            .ok_or_else(|| Error::Config(format!("{name}: ground truth has no annotated box")))?;
        let frames = FrameDir::open(&dir)?;
        for metric in [Metric::Smr, Metric::Sad] {
            let config = TrackerConfig { metric, ..base.clone() };
            let results = track_sequence(frames.frames(), init, &config)?;
            reports.push(NamedReport {
                tracker: metric.name().to_string(),
                sequence: name.to_string(),
                report: evaluate(&results, &truth, args.iou_threshold)?,
            });
        }
        m.inputs.push(dir);
    }
    let table = compare(&reports);
    write_file(&args.out, table.to_csv())?;
    m.outputs.push(args.out.clone());
    m.write(&beside(&args.out), start.elapsed())?;
    Ok(format!(
        "correctly tracked frames (iou >= {:.6})\n{}",
        args.iou_threshold,
        table.to_text().trim_end()
    ))
}
