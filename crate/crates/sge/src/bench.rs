//! Disparity-lookup benchmark: GX-map query against the full-row search.
//!
//! Each kernel runs `repeats` times on one thread and the median wall time
//! is reported. The GX-map build is timed separately and excluded from the
//! query time.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use sge_core::graycode::make_pattern_set;
use sge_core::matching::{build_gx_map, depth_pipeline, query_disparity, search_disparity};
use sge_core::simulator::generate_events;
use sge_core::{
    DepthEncodedImage, GrayCodeConfig, PipelineConfig, ProjectionTiming, ProjectorCodeImage, RectifiedRig,
    SensorModel,
};

use crate::error::{Error, Result};
use crate::scene_spec::SceneSpec;

pub const MIN_REPEATS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub name: String,
    pub pixels: usize,
    pub valid_pixels: usize,
    pub gx_build_s: f64,
    pub gx_query_s: f64,
    pub search_s: f64,
    /// Whether both kernels produced the same disparity map.
    pub agree: bool,
}

impl BenchCase {
    pub fn speedup(&self) -> f64 {
        self.search_s / self.gx_query_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub cases: Vec<BenchCase>,
    pub repeats: usize,
    pub cpu_model: String,
    pub build_profile: &'static str,
}

impl BenchReport {
    /// Smallest per-scene speedup.
    pub fn min_speedup(&self) -> f64 {
        self.cases.iter().map(BenchCase::speedup).fold(f64::INFINITY, f64::min)
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:>9} {:>12} {:>12} {:>12} {:>9} {:>6}",
            "scene", "pixels", "build_ms", "gx_ms", "search_ms", "speedup", "agree"
        );
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{:<28} {:>9} {:>12.3} {:>12.3} {:>12.3} {:>9.1} {:>6}",
                c.name,
                c.pixels,
                c.gx_build_s * 1e3,
                c.gx_query_s * 1e3,
                c.search_s * 1e3,
                c.speedup(),
                c.agree
            );
        }
        let _ = writeln!(
            s,
            "median of {} runs, 1 thread, {} build, cpu: {}",
            self.repeats, self.build_profile, self.cpu_model
        );
        s
    }

    pub fn render_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "threads = 1");
        let _ = writeln!(s, "build_profile = {}", self.build_profile);
        let _ = writeln!(s, "cpu_model = {}", self.cpu_model);
        for (i, c) in self.cases.iter().enumerate() {
            let _ = writeln!(s, "case.{i}.scene = {}", c.name);
            let _ = writeln!(s, "case.{i}.pixels = {}", c.pixels);
            let _ = writeln!(s, "case.{i}.valid_pixels = {}", c.valid_pixels);
            let _ = writeln!(s, "case.{i}.gx_build_s = {:e}", c.gx_build_s);
            let _ = writeln!(s, "case.{i}.gx_query_s = {:e}", c.gx_query_s);
            let _ = writeln!(s, "case.{i}.search_s = {:e}", c.search_s);
            let _ = writeln!(s, "case.{i}.speedup = {}", c.speedup());
            let _ = writeln!(s, "case.{i}.agree = {}", c.agree);
        }
        let _ = writeln!(s, "min_speedup = {}", self.min_speedup());
        s
    }
}

pub fn build_profile() -> &'static str {
    if cfg!(debug_assertions) {
        "debug-assertions"
    } else {
        "release"
    }
}

pub fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string())
}

/// Median wall time of `repeats` calls, in seconds.
pub fn median_seconds(repeats: usize, mut f: impl FnMut()) -> f64 {
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    median.max(1e-9)
}

pub fn bench_code_image(
    name: &str,
    image: &DepthEncodedImage,
    rp: &ProjectorCodeImage,
    repeats: usize,
) -> Result<BenchCase> {
    if repeats < MIN_REPEATS {
        return Err(Error::Usage(format!("bench needs at least {MIN_REPEATS} repeats, got {repeats}")));
    }
    let gx_build_s = median_seconds(repeats, || {
        black_box(build_gx_map(black_box(rp)).ok());
    });
    let gx = build_gx_map(rp)?;
    let gx_query_s = median_seconds(repeats, || {
        black_box(query_disparity(black_box(image), &gx).ok());
    });
    let search_s = median_seconds(repeats, || {
        black_box(search_disparity(black_box(image), rp).ok());
    });
    let fast = query_disparity(image, &gx)?;
    let slow = search_disparity(image, rp)?;
    Ok(BenchCase {
        name: name.to_string(),
        pixels: image.width() * image.height(),
        valid_pixels: image.valid_count(),
        gx_build_s,
        gx_query_s,
        search_s,
        agree: fast == slow,
    })
}

/// The noise-free decoded code image of one window over the described scene.
pub fn decoded_codes(spec: &SceneSpec, rig: &RectifiedRig, code: GrayCodeConfig) -> Result<DepthEncodedImage> {
    let scene = spec.build(rig.cam_dims())?;
    let set = make_pattern_set(code, rig.proj_dims())?;
    let timing = ProjectionTiming::with_slides(code.num_bits() as usize);
    let stream = generate_events(&scene, &set, rig, &SensorModel::default(), &timing)?;
    let frames = depth_pipeline(&stream, rig, &PipelineConfig::new(code))?;
    frames
        .into_iter()
        .next()
        .map(|f| f.codes)
        .ok_or_else(|| Error::Usage("scene produced no complete window".into()))
}

pub fn run_bench(scenes: &[SceneSpec], rig: &RectifiedRig, code: GrayCodeConfig, repeats: usize) -> Result<BenchReport> {
    if repeats < MIN_REPEATS {
        return Err(Error::Usage(format!("bench needs at least {MIN_REPEATS} repeats, got {repeats}")));
    }
    let rp = ProjectorCodeImage::for_rig(&code, rig)?;
    let cases = scenes
        .iter()
        .map(|spec| bench_code_image(&spec.to_string(), &decoded_codes(spec, rig, code)?, &rp, repeats))
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        cases,
        repeats,
        cpu_model: cpu_model(),
        build_profile: build_profile(),
    })
}
