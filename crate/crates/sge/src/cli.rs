//! The `sge` command line.
//!
//! Every flag may also come from a `--config` file of `key = value` lines
//! whose keys are the long flag names; flags given on the command line win.
//! Switches are written `key = true` or `key = false` in the file.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sge_core::graycode::{make_pattern_set, patterns_required};
use sge_core::matching::{DepthPipeline, Stage, StageObserver};
use sge_core::metrics::compute_metrics;
use sge_core::simulator::generate_events;
use sge_core::{
    GrayCodeConfig, PipelineConfig, ProjectionTiming, RectifiedRig, SensorModel, ThresholdMode,
};

use crate::bench::{run_bench, MIN_REPEATS};
use crate::error::{Error, Result};
use crate::event_io::{read_events, write_events};
use crate::image_io::{
    read_depth_text, write_code_pgm, write_codes_text, write_depth_pgm, write_depth_text, write_disparity_text,
    write_pbm,
};
use crate::manifest::Manifest;
use crate::rig_file::{parse_key_values, read_rig};
use crate::scene_spec::{bench_scenes, SceneSpec};

pub const DEFAULT_BITS: u32 = 9;

#[derive(Debug, Parser)]
#[command(name = "sge", version, about = "Event-camera structured light: simulate, decode, score and time")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an event stream and its ground truth.
    Simulate(SimulateArgs),
    /// Decode an event stream into one depth map per window.
    Depth(DepthArgs),
    /// Score a depth map against a reference.
    Metrics(MetricsArgs),
    /// Time the GX-map lookup against the row search.
    Bench(BenchArgs),
    /// Write the Gray-code patterns as PBM images.
    Patterns(PatternsArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Rig description; defaults to a 1280x720 desk rig.
    #[arg(long)]
    pub rig: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CodeArgs {
    /// Number of Gray-code bit planes.
    #[arg(long)]
    pub bits: Option<u32>,
    /// Columns to encode; sets `--bits` to the fewest planes that cover them.
    #[arg(long)]
    pub columns: Option<u64>,
    /// First projector column carrying the code.
    #[arg(long)]
    pub offset: Option<usize>,
    /// Project the least significant bit first.
    #[arg(long)]
    pub lsb_first: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Scene description, e.g. `plane:200`, `step:150:250`, `ramp:150:0.05:0.02`,
    /// `sphere:180:60`, `translating:150:250:2`.
    #[arg(long)]
    pub scene: Option<String>,
    /// Number of projected slides; defaults to one full window.
    #[arg(long)]
    pub slides: Option<usize>,
    #[arg(long)]
    pub slide_us: Option<u64>,
    #[arg(long)]
    pub dark_us: Option<u64>,
    /// Half-width of the uniform timestamp noise.
    #[arg(long)]
    pub jitter_us: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bit plane of the first slide.
    #[arg(long)]
    pub start_phase: Option<usize>,
    /// Switch patterns without a dark interval in between.
    #[arg(long)]
    pub no_dark: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub c_pos: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_neg: Option<f64>,
    #[arg(long)]
    pub ambient: Option<f64>,
    #[arg(long)]
    pub albedo_floor: Option<f64>,
    /// Fraction of pixels given the dropout albedo.
    #[arg(long)]
    pub dropout_fraction: Option<f64>,
    #[arg(long)]
    pub dropout_albedo: Option<f64>,
    /// Event file format.
    #[arg(long, value_parser = ["text", "binary"])]
    pub format: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DepthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long)]
    pub events: PathBuf,
    /// Slice gap threshold; defaults to half the dark interval.
    #[arg(long)]
    pub gap_us: Option<f64>,
    #[arg(long)]
    pub close_radius: Option<usize>,
    #[arg(long)]
    pub median_radius: Option<usize>,
    /// Invalidate pixels that stayed silent for a whole window.
    #[arg(long)]
    pub require_activity: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Absolute agreement threshold; defaults to 1 % of the mean depth.
    #[arg(long)]
    pub threshold_mm: Option<f64>,
    /// Relative agreement threshold as a fraction of the mean depth.
    #[arg(long)]
    pub threshold_frac: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Comma-separated scene descriptions; defaults to a plane, step, ramp and sphere.
    #[arg(long)]
    pub scenes: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Also write the key=value report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PatternsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Command-line values layered over an optional config file.
struct Settings {
    path: PathBuf,
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let values = match path {
            Some(p) => {
                require_file(p)?;
                let text = fs::read_to_string(p).map_err(Error::io(p))?;
                parse_key_values(p, &text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            path: path.map(Path::to_path_buf).unwrap_or_default(),
            values,
            used: RefCell::default(),
        })
    }

    fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse().map_err(|_| {
                    Error::Usage(format!("{}: bad value `{raw}` for `{key}`", self.path.display()))
                })
            })
            .transpose()
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get(None, key, false)?)
    }

    /// Rejects config keys that the command never looked up.
    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.values.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(Error::Usage(format!(
                "{}: unknown key `{k}` for this command",
                self.path.display()
            ))),
            None => Ok(()),
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Usage(format!("input file not found: {}", path.display())))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(Error::io(path))
}

fn load_rig(common: &CommonArgs, settings: &Settings) -> Result<RectifiedRig> {
    match settings.opt(common.rig.clone(), "rig")? {
        Some(path) => {
            require_file(&path)?;
            read_rig(&path)
        }
        None => Ok(RectifiedRig::desk_default()),
    }
}

fn resolve_code(code: &CodeArgs, settings: &Settings) -> Result<GrayCodeConfig> {
    let columns = settings.opt(code.columns, "columns")?;
    let bits = match settings.opt(code.bits, "bits")? {
        Some(b) => b,
        None => columns.map_or(DEFAULT_BITS, |c| patterns_required(c).max(1)),
    };
    let config = GrayCodeConfig::new(bits, settings.get(code.offset, "offset", 0)?, !settings.switch(code.lsb_first, "lsb-first")?)?;
    if let Some(c) = columns {
        if (config.num_columns() as u64) < c {
            return Err(Error::Usage(format!("{bits} bits cannot encode {c} columns")));
        }
    }
    Ok(config)
}

fn push_code(m: &mut Manifest, code: &GrayCodeConfig) {
    m.push("bits", code.num_bits())
        .push("offset", code.column_offset())
        .push("msb_first", code.msb_first());
}

fn push_rig(m: &mut Manifest, rig: &RectifiedRig, source: Option<&Path>) {
    let (cw, ch) = rig.cam_dims();
    let (pw, ph) = rig.proj_dims();
    m.push("rig", source.map_or("desk-default".to_string(), |p| p.display().to_string()))
        .push("focal_length_px", rig.focal_length_px())
        .push("baseline_mm", rig.baseline_mm())
        .push("cam_dims", format!("{cw}x{ch}"))
        .push("proj_dims", format!("{pw}x{ph}"))
        .push("cam_remap", rig.cam_remap().is_some())
        .push("proj_remap", rig.proj_remap().is_some());
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a, out),
        Command::Depth(a) => depth(&a, out),
        Command::Metrics(a) => metrics(&a, out),
        Command::Bench(a) => bench(&a, out),
        Command::Patterns(a) => patterns(&a, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(Error::io("<stdout>"))
}

pub fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let s = Settings::load(a.common.config.as_deref())?;
    let rig = load_rig(&a.common, &s)?;
    let code = resolve_code(&a.code, &s)?;
    let spec: SceneSpec = s.get(a.scene.clone(), "scene", "plane:200".to_string())?.parse()?;
    let defaults = SensorModel::default();
    let sensor = SensorModel {
        c_positive: s.get(a.c_pos, "c-pos", defaults.c_positive)?,
        c_negative: s.get(a.c_neg, "c-neg", defaults.c_negative)?,
        jitter_bound_us: s.get(a.jitter_us, "jitter-us", defaults.jitter_bound_us)?,
        ambient_level: s.get(a.ambient, "ambient", defaults.ambient_level)?,
        projector_on_level: defaults.projector_on_level,
        albedo_floor: s.get(a.albedo_floor, "albedo-floor", defaults.albedo_floor)?,
        rng_seed: s.get(a.seed, "seed", defaults.rng_seed)?,
    };
    let base_timing = ProjectionTiming::with_slides(code.num_bits() as usize);
    let timing = ProjectionTiming {
        slide_period_us: s.get(a.slide_us, "slide-us", base_timing.slide_period_us)?,
        dark_interval_us: s.get(a.dark_us, "dark-us", base_timing.dark_interval_us)?,
        num_slides: s.get(a.slides, "slides", base_timing.num_slides)?,
        start_phase: s.get(a.start_phase, "start-phase", 0)?,
        model_dark_interval: !s.switch(a.no_dark, "no-dark")?,
    };
    let dropout_fraction = s.get(a.dropout_fraction, "dropout-fraction", 0.0)?;
    let dropout_albedo = s.get(a.dropout_albedo, "dropout-albedo", 0.01)?;
    let format = s.get(a.format.clone(), "format", "text".to_string())?;
    let events_name = match format.as_str() {
        "text" => "events.txt",
        "binary" => "events.sgev",
        other => return Err(Error::Usage(format!("unknown event format `{other}`"))),
    };
    s.finish()?;
    if !(0.0..=1.0).contains(&dropout_fraction) {
        return Err(Error::Usage(format!("dropout fraction must lie in [0, 1], got {dropout_fraction}")));
    }

    let mut scene = spec.build(rig.cam_dims())?;
    if dropout_fraction > 0.0 {
        // Separate stream from the sensor noise so toggling one leaves the
        // other unchanged.
        scene = scene.with_dropouts(dropout_fraction, dropout_albedo, sensor.rng_seed ^ 0x5eed_d809)?;
    }
    let set = make_pattern_set(code, rig.proj_dims())?;
    let stream = generate_events(&scene, &set, &rig, &sensor, &timing)?;
    let gt_disparity = scene.ground_truth(0, &rig, &code);
    let gt_depth = sge_core::geometry::triangulate(&gt_disparity, &rig)?;

    create_dir(&a.out)?;
    write_events(&a.out.join(events_name), &stream)?;
    write_disparity_text(&a.out.join("gt_disparity.txt"), &gt_disparity)?;
    write_depth_text(&a.out.join("gt_depth.txt"), &gt_depth)?;
    write_depth_pgm(&a.out.join("gt_depth.pgm"), &gt_depth)?;

    let mut m = Manifest::new("simulate");
    push_rig(&mut m, &rig, s.opt(a.common.rig.clone(), "rig")?.as_deref());
    push_code(&mut m, &code);
    m.push("scene", spec)
        .push("slides", timing.num_slides)
        .push("slide_us", timing.slide_period_us)
        .push("dark_us", timing.dark_interval_us)
        .push("dark_interval_modelled", timing.model_dark_interval)
        .push("start_phase", timing.start_phase)
        .push("jitter_us", sensor.jitter_bound_us)
        .push("seed", sensor.rng_seed)
        .push("c_pos", sensor.c_positive)
        .push("c_neg", sensor.c_negative)
        .push("ambient", sensor.ambient_level)
        .push("albedo_floor", sensor.albedo_floor)
        .push("dropout_fraction", dropout_fraction)
        .push("dropout_albedo", dropout_albedo)
        .push("events", stream.len())
        .push("events_file", events_name)
        .push("ground_truth_slide", 0)
        .push("ground_truth_valid", gt_depth.valid_count());
    m.write(&a.out.join("manifest.txt"))?;
    say(
        out,
        &format!(
            "simulated {} events over {} slides into {}\n",
            stream.len(),
            timing.num_slides,
            a.out.display()
        ),
    )
}

#[derive(Default)]
struct StageTimer {
    totals: [f64; Stage::ALL.len()],
    started: Option<Instant>,
}

impl StageObserver for StageTimer {
    fn enter(&mut self, _stage: Stage) {
        self.started = Some(Instant::now());
    }

    fn exit(&mut self, stage: Stage) {
        if let Some(t) = self.started.take() {
            let i = Stage::ALL.iter().position(|s| *s == stage).unwrap_or(0);
            self.totals[i] += t.elapsed().as_secs_f64();
        }
    }
}

pub fn depth(a: &DepthArgs, out: &mut dyn Write) -> Result<()> {
    let s = Settings::load(a.common.config.as_deref())?;
    let rig = load_rig(&a.common, &s)?;
    let mut config = PipelineConfig::new(resolve_code(&a.code, &s)?);
    config.gap_threshold_us = s.opt(a.gap_us, "gap-us")?;
    config.close_radius = s.get(a.close_radius, "close-radius", 0)?;
    config.median_radius = s.get(a.median_radius, "median-radius", 0)?;
    config.require_activity = s.switch(a.require_activity, "require-activity")?;
    s.finish()?;
    require_file(&a.events)?;

    let load_start = Instant::now();
    let stream = read_events(&a.events)?;
    let load_s = load_start.elapsed().as_secs_f64();
    let build_start = Instant::now();
    let mut pipeline = DepthPipeline::new(&rig, config, stream.meta())?;
    let gx_build_s = build_start.elapsed().as_secs_f64();
    let mut timer = StageTimer::default();
    let frames = pipeline.run(&stream, &mut timer)?;

    create_dir(&a.out)?;
    if stream.is_empty() {
        eprintln!("warning: {} contains no events; no depth maps written", a.events.display());
    }
    for (i, f) in frames.iter().enumerate() {
        write_depth_text(&a.out.join(format!("depth_{i:04}.txt")), &f.depth)?;
        write_depth_pgm(&a.out.join(format!("depth_{i:04}.pgm")), &f.depth)?;
        write_disparity_text(&a.out.join(format!("disparity_{i:04}.txt")), &f.disparity)?;
        write_codes_text(&a.out.join(format!("codes_{i:04}.txt")), &f.codes)?;
        write_code_pgm(&a.out.join(format!("codes_{i:04}.pgm")), &f.codes)?;
    }

    let mut m = Manifest::new("depth");
    push_rig(&mut m, &rig, s.opt(a.common.rig.clone(), "rig")?.as_deref());
    push_code(&mut m, &config.code);
    m.push("events_file", a.events.display())
        .push("events", stream.len())
        .push(
            "gap_us",
            config
                .gap_threshold_us
                .unwrap_or_else(|| sge_core::event_pipeline::default_gap_threshold_us(stream.meta().dark_interval_us)),
        )
        .push("close_radius", config.close_radius)
        .push("median_radius", config.median_radius)
        .push("require_activity", config.require_activity)
        .push("windows", frames.len())
        .push("gx_duplicate_codes", pipeline.duplicate_codes());
    for (i, f) in frames.iter().enumerate() {
        let (first, last) = f.codes.source_slice_range();
        m.push(&format!("window.{i}.slices"), format!("{first}..={last}"))
            .push(&format!("window.{i}.valid_pixels"), f.depth.valid_count())
            .push(&format!("window.{i}.negative_disparities"), f.negative_disparities);
    }
    m.push("time.load_s", load_s).push("time.gx_build_s", gx_build_s);
    for (stage, t) in Stage::ALL.iter().zip(timer.totals) {
        m.push(&format!("time.{}_s", stage.name()), t);
    }
    m.write(&a.out.join("manifest.txt"))?;
    say(out, &format!("wrote {} depth maps to {}\n", frames.len(), a.out.display()))
}

pub fn metrics(a: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let s = Settings::load(a.common.config.as_deref())?;
    let abs = s.opt(a.threshold_mm, "threshold-mm")?;
    let frac = s.opt(a.threshold_frac, "threshold-frac")?;
    s.finish()?;
    let mode = match (abs, frac) {
        (Some(_), Some(_)) => return Err(Error::Usage("give at most one of --threshold-mm and --threshold-frac".into())),
        (Some(t), None) => ThresholdMode::AbsoluteMm(t),
        (None, Some(f)) => ThresholdMode::RelativeToMeanDepth(f),
        (None, None) => ThresholdMode::default(),
    };
    require_file(&a.candidate)?;
    require_file(&a.reference)?;
    let candidate = read_depth_text(&a.candidate)?;
    let reference = read_depth_text(&a.reference)?;
    let r = compute_metrics(&candidate, &reference, mode)?;
    let text = format!(
        "rmse_mm = {}\nfill_rate = {}\nsolid_pixels = {}\nreference_valid = {}\nthreshold_mm = {}\nmean_depth_mm = {}\n",
        r.rmse_mm.map_or("none".to_string(), |v| v.to_string()),
        r.fill_rate,
        r.solid_pixel_count,
        r.reference_valid_count,
        r.threshold_mm,
        r.mean_depth_mm
    );
    if let Some(path) = &a.out {
        fs::write(path, &text).map_err(Error::io(path))?;
    }
    say(out, &text)
}

pub fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let s = Settings::load(a.common.config.as_deref())?;
    let rig = load_rig(&a.common, &s)?;
    let code = resolve_code(&a.code, &s)?;
    let scenes = match s.opt(a.scenes.clone(), "scenes")? {
        Some(list) => list.split(',').map(|t| t.trim().parse()).collect::<Result<Vec<SceneSpec>>>()?,
        None => bench_scenes(),
    };
    let repeats = s.get(a.repeats, "repeats", MIN_REPEATS)?;
    s.finish()?;
    let report = run_bench(&scenes, &rig, code, repeats)?;
    let mut m = Manifest::new("bench");
    push_rig(&mut m, &rig, s.opt(a.common.rig.clone(), "rig")?.as_deref());
    push_code(&mut m, &code);
    let kv = format!("{}{}", m.render(), report.render_key_values());
    if let Some(path) = &a.out {
        fs::write(path, &kv).map_err(Error::io(path))?;
    }
    say(out, &format!("{}\n{kv}", report.render_table()))
}

pub fn patterns(a: &PatternsArgs, out: &mut dyn Write) -> Result<()> {
    let s = Settings::load(a.common.config.as_deref())?;
    let rig = load_rig(&a.common, &s)?;
    let code = resolve_code(&a.code, &s)?;
    s.finish()?;
    let set = make_pattern_set(code, rig.proj_dims())?;
    create_dir(&a.out)?;
    for (k, p) in set.patterns().iter().enumerate() {
        write_pbm(&a.out.join(format!("pattern_{k:02}.pbm")), p)?;
    }
    let mut m = Manifest::new("patterns");
    push_rig(&mut m, &rig, s.opt(a.common.rig.clone(), "rig")?.as_deref());
    push_code(&mut m, &code);
    m.write(&a.out.join("manifest.txt"))?;
    say(out, &format!("wrote {} patterns to {}\n", set.len(), a.out.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("sge").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn config_file_supplies_defaults_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "bits = 5\ncolumns = 20\n# comment\nlsb-first = true\n").unwrap();
        let s = Settings::load(Some(&cfg)).unwrap();
        let code = resolve_code(&CodeArgs::default(), &s).unwrap();
        assert_eq!((code.num_bits(), code.msb_first()), (5, false));
        let code = resolve_code(&CodeArgs { bits: Some(6), ..Default::default() }, &s).unwrap();
        assert_eq!(code.num_bits(), 6);
        s.finish().unwrap();

        fs::write(&cfg, "bits = 5\nbogus = 1\n").unwrap();
        let s = Settings::load(Some(&cfg)).unwrap();
        resolve_code(&CodeArgs::default(), &s).unwrap();
        assert_eq!(s.finish().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn columns_pick_bits() {
        let s = Settings::load(None).unwrap();
        let code = resolve_code(&CodeArgs { columns: Some(600), ..Default::default() }, &s).unwrap();
        assert_eq!(code.num_bits(), 10);
        let err = resolve_code(&CodeArgs { bits: Some(3), columns: Some(9), ..Default::default() }, &s).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn patterns_command_writes_planes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("p");
        let cli = parse(&["patterns", "--bits", "4", "--out", out.to_str().unwrap()]);
        run(cli, &mut Vec::new()).unwrap();
        assert!(out.join("pattern_03.pbm").is_file());
        assert!(!out.join("pattern_04.pbm").exists());
    }
}
