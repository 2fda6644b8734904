//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sge::bench::run_bench;
use sge_core::graycode::{decode_gray, encode_gray, make_pattern_set, patterns_required};
use sge_core::matching::{build_gx_map, depth_pipeline, query_disparity, search_disparity, DepthFrame};
use sge_core::metrics::compute_metrics;
use sge_core::simulator::{generate_events, plane, ramp, step};
use sge_core::{
    DepthMap, GrayCodeConfig, PipelineConfig, ProjectionTiming, ProjectorCodeImage, RectifiedRig, Scene, SensorModel,
    ThresholdMode,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn code9() -> GrayCodeConfig {
    GrayCodeConfig::with_bits(9).unwrap()
}

fn simulate(scene: &Scene, rig: &RectifiedRig, code: GrayCodeConfig, slides: usize, sensor: &SensorModel) -> sge_core::EventStream {
    let set = make_pattern_set(code, rig.proj_dims()).unwrap();
    generate_events(scene, &set, rig, sensor, &ProjectionTiming::with_slides(slides)).unwrap()
}

fn decode(scene: &Scene, rig: &RectifiedRig, config: &PipelineConfig, slides: usize, sensor: &SensorModel) -> Vec<DepthFrame> {
    depth_pipeline(&simulate(scene, rig, config.code, slides, sensor), rig, config).unwrap()
}

fn random_scene(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> (String, Scene) {
    let (w, h) = dims;
    let (name, disparity) = match rng.gen_range(0..3) {
        0 => {
            let d = rng.gen_range(20.0..400.0);
            (format!("plane d={d:.2}"), plane(w, h, d))
        }
        1 => {
            let (l, r) = (rng.gen_range(20.0..400.0), rng.gen_range(20.0..400.0));
            let split = rng.gen_range(1..w);
            (format!("step {l:.2}|{r:.2} at {split}"), step(w, h, l, r, split))
        }
        _ => {
            let base = rng.gen_range(20.0..300.0);
            let (c, r) = (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            (format!("ramp {base:.2}{c:+.3}x{r:+.3}y"), ramp(w, h, base, c, r))
        }
    };
    (name, Scene::with_uniform_albedo(disparity).unwrap())
}

/// Noise-free randomized scenes decode exactly wherever the true projector
/// column is coded.
fn end_to_end_exactness() -> Outcome {
    let start = Instant::now();
    let rig = RectifiedRig::desk_default();
    let config = PipelineConfig::new(code9());
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    let mut checked = 0usize;
    for i in 0..20 {
        let (name, scene) = random_scene(&mut rng, rig.cam_dims());
        let frames = decode(&scene, &rig, &config, 9, &SensorModel::default());
        ensure(frames.len() == 1, || format!("scene {i} ({name}): {} frames", frames.len()))?;
        let gt = scene.ground_truth(0, &rig, &config.code);
        ensure(gt.valid_count() > 0, || format!("scene {i} ({name}) covers no pixels"))?;
        for y in 0..gt.height() {
            for x in 0..gt.width() {
                if let Some(d) = gt.get(x, y) {
                    let got = frames[0].disparity.get(x, y);
                    ensure(got == Some(d), || format!("scene {i} ({name}): pixel ({x}, {y}) decoded {got:?}, expected {d}"))?;
                    checked += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!("20 scenes, {checked} covered pixels exact, {secs:.1} s"))
}

/// Jittered timestamps decode to the same code images as the clean run.
fn jitter_immunity() -> Outcome {
    let rig = RectifiedRig::desk_default();
    let config = PipelineConfig::new(code9());
    let half_dark = ProjectionTiming::with_slides(0).dark_interval_us as f64 / 2.0;
    let scenes = [
        Scene::with_uniform_albedo(step(1280, 720, 120.0, 310.0, 500)).unwrap(),
        Scene::with_uniform_albedo(ramp(1280, 720, 60.0, 0.15, -0.05)).unwrap(),
    ];
    let mut compared = 0;
    for (s, scene) in scenes.iter().enumerate() {
        let seed = 77 + s as u64;
        let clean = decode(scene, &rig, &config, 12, &SensorModel { rng_seed: seed, ..SensorModel::default() });
        for frac in [0.10, 0.25, 0.49] {
            let sensor = SensorModel { jitter_bound_us: frac * half_dark, rng_seed: seed, ..SensorModel::default() };
            let noisy = decode(scene, &rig, &config, 12, &sensor);
            ensure(noisy.len() == clean.len(), || format!("scene {s}, jitter {frac}: {} vs {} windows", noisy.len(), clean.len()))?;
            for (a, b) in noisy.iter().zip(&clean) {
                ensure(a.codes == b.codes, || format!("scene {s}, jitter {frac}: window {:?} differs", a.codes.source_slice_range()))?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} windows bit-identical at 10/25/49 % of half-dark"))
}

/// GX-map lookup and full-row search agree on every pixel.
fn oracle_equivalence() -> Outcome {
    let rig = RectifiedRig::desk_default();
    let config = PipelineConfig::new(code9());
    let rp = ProjectorCodeImage::for_rig(&config.code, &rig).unwrap();
    let gx = build_gx_map(&rp).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let mut pixels = 0;
    for i in 0..10 {
        let (name, scene) = random_scene(&mut rng, rig.cam_dims());
        let codes = &decode(&scene, &rig, &config, 9, &SensorModel::default())[0].codes;
        let fast = query_disparity(codes, &gx).unwrap();
        let slow = search_disparity(codes, &rp).unwrap();
        ensure(fast == slow, || format!("scene {i} ({name}) disagrees"))?;
        pixels += codes.width() * codes.height();
    }
    Ok(format!("10 scenes, {pixels} pixels identical"))
}

/// GX-map query at least 50x faster than the row search on 720x1280.
fn speedup() -> Outcome {
    let rig = RectifiedRig::desk_default();
    let scenes = sge::scene_spec::bench_scenes();
    let report = run_bench(&scenes, &rig, code9(), 5).map_err(|e| e.to_string())?;
    for c in &report.cases {
        ensure(c.agree, || format!("{}: kernels disagree", c.name))?;
        ensure(c.pixels == 1280 * 720, || format!("{}: {} pixels", c.name, c.pixels))?;
    }
    let min = report.min_speedup();
    let detail = report
        .cases
        .iter()
        .map(|c| format!("{} {:.0}x", c.name, c.speedup()))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(min >= 50.0, || format!("min speedup {min:.1}x ({detail})"))?;
    Ok(format!("min {min:.0}x, median of 5, 1 thread, {} build ({detail})", report.build_profile))
}

/// Pattern count is the smallest n with 2^n >= c.
fn encoding_efficiency() -> Outcome {
    for (c, expected) in [(2u64, 1u32), (16, 4), (512, 9), (1024, 10)] {
        let oracle = (0..=64).find(|&n| (1u128 << n) >= c as u128).unwrap();
        ensure(oracle == expected, || format!("oracle for {c} gave {oracle}"))?;
        let got = patterns_required(c);
        ensure(got == expected, || format!("c = {c}: {got} patterns, expected {expected}"))?;
        let set = make_pattern_set(GrayCodeConfig::with_bits(got).unwrap(), (c as usize, 1)).unwrap();
        ensure(set.len() == expected as usize, || format!("c = {c}: pattern set of {}", set.len()))?;
        // Every coded column's temporal bit sequence is unique.
        let mut seqs: Vec<Vec<bool>> = (0..c as usize)
            .map(|x| set.patterns().iter().map(|p| *p.get(x, 0)).collect())
            .collect();
        seqs.sort();
        seqs.dedup();
        ensure(seqs.len() == c as usize, || format!("c = {c}: columns not uniquely coded"))?;
    }
    Ok("c = 2, 16, 512, 1024 -> 1, 4, 9, 10 patterns".into())
}

/// M slices of an N-bit stream give M - N + 1 identical maps.
fn overlapping_throughput() -> Outcome {
    let mut parts = Vec::new();
    for (n, m, expected) in [(4u32, 7usize, 4usize), (9, 20, 12)] {
        let rig = RectifiedRig::desk_default();
        let config = PipelineConfig::new(GrayCodeConfig::with_bits(n).unwrap());
        let d = if n == 4 { 3.0 } else { 150.0 };
        let scene = Scene::with_uniform_albedo(plane(1280, 720, d)).unwrap();
        let frames = decode(&scene, &rig, &config, m, &SensorModel::default());
        ensure(frames.len() == expected, || format!("N={n}, M={m}: {} maps", frames.len()))?;
        for f in &frames {
            ensure(f.depth == frames[0].depth, || format!("N={n}, M={m}: window {:?} differs", f.codes.source_slice_range()))?;
        }
        parts.push(format!("N={n} M={m} -> {expected} identical maps"));
    }
    Ok(parts.join(", "))
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Hand-computed metrics, clean-run accuracy and filtered dropout accuracy.
fn metric_fidelity() -> Outcome {
    // Reference 1000, 2000, 3000, 4000, 1500 mm: mean 2300, threshold 23 mm.
    // Candidate errors 0, +10, -22, +30 (outside), invalid, plus one pixel
    // the reference lacks.
    let reference = DepthMap::from_fn(6, 1, |x, _| (x < 5).then(|| [1000.0, 2000.0, 3000.0, 4000.0, 1500.0][x]));
    let candidate = DepthMap::from_fn(6, 1, |x, _| match x {
        0 => Some(1000.0),
        1 => Some(2010.0),
        2 => Some(2978.0),
        3 => Some(4030.0),
        4 => None,
        _ => Some(77.0),
    });
    let r = compute_metrics(&candidate, &reference, ThresholdMode::default()).map_err(|e| e.to_string())?;
    let mean = (1000.0 + 2000.0 + 3000.0 + 4000.0 + 1500.0) / 5.0;
    let want_rmse = ((0.0f64 + 100.0 + 484.0) / 3.0).sqrt();
    for (label, got, want) in [
        ("mean", r.mean_depth_mm, mean),
        ("threshold", r.threshold_mm, 0.01 * mean),
        ("rmse", r.rmse_mm.unwrap_or(f64::NAN), want_rmse),
        ("fill", r.fill_rate, 3.0 / 5.0),
    ] {
        ensure(rel_err(got, want) <= 1e-9, || format!("{label}: {got} vs {want}"))?;
    }
    ensure(r.solid_pixel_count == 3, || format!("{} solid pixels", r.solid_pixel_count))?;
    let r = compute_metrics(&candidate, &reference, ThresholdMode::AbsoluteMm(30.0)).map_err(|e| e.to_string())?;
    let want_rmse = ((0.0f64 + 100.0 + 484.0 + 900.0) / 4.0).sqrt();
    ensure(rel_err(r.rmse_mm.unwrap_or(f64::NAN), want_rmse) <= 1e-9 && rel_err(r.fill_rate, 0.8) <= 1e-9, || {
        format!("absolute threshold: {r:?}")
    })?;

    let rig = RectifiedRig::desk_default();
    let code = code9();
    let scene = Scene::with_uniform_albedo(ramp(1280, 720, 180.0, 0.06, 0.03)).unwrap();
    let gt = sge_core::geometry::triangulate(&scene.ground_truth(0, &rig, &code), &rig).unwrap();

    let clean = decode(&scene, &rig, &PipelineConfig::new(code), 9, &SensorModel::default());
    let r = compute_metrics(&clean[0].depth, &gt, ThresholdMode::default()).map_err(|e| e.to_string())?;
    let clean_rmse = r.rmse_mm.ok_or("clean run has no solid pixels")?;
    ensure(clean_rmse < r.mean_depth_mm / 200.0, || format!("clean rmse {clean_rmse}"))?;

    let dropped = scene.clone().with_dropouts(0.05, 0.01, 11).map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        close_radius: 1,
        median_radius: 1,
        require_activity: true,
        ..PipelineConfig::new(code)
    };
    let filtered = decode(&dropped, &rig, &config, 9, &SensorModel::default());
    let r = compute_metrics(&filtered[0].depth, &gt, ThresholdMode::default()).map_err(|e| e.to_string())?;
    let rmse = r.rmse_mm.ok_or("filtered run has no solid pixels")?;
    ensure(rmse < 0.005 * r.mean_depth_mm, || format!("filtered rmse {rmse} mm vs mean {}", r.mean_depth_mm))?;
    Ok(format!(
        "hand cases to 1e-9; clean rmse {clean_rmse:.3} mm; 5 % dropouts filtered rmse {rmse:.3} mm ({:.3} % of mean), fill {:.4}",
        100.0 * rmse / r.mean_depth_mm,
        r.fill_rate
    ))
}

/// Bijectivity and single-bit adjacency of the Gray code, exhaustively.
fn gray_laws() -> Outcome {
    for n in 1..=12u32 {
        let size = 1u32 << n;
        // Reflected construction as an independent oracle.
        let mut oracle = vec![0u32];
        for b in 0..n {
            let mirrored: Vec<u32> = oracle.iter().rev().map(|g| g | (1 << b)).collect();
            oracle.extend(mirrored);
        }
        let mut seen = vec![false; size as usize];
        for i in 0..size {
            let g = encode_gray(i, n).map_err(|e| e.to_string())?;
            ensure(g == oracle[i as usize], || format!("N={n}: gray({i}) = {g}, oracle {}", oracle[i as usize]))?;
            ensure(g < size && !seen[g as usize], || format!("N={n}: gray({i}) = {g} repeats or overflows"))?;
            seen[g as usize] = true;
            ensure(decode_gray(g, n).ok() == Some(i), || format!("N={n}: decode(gray({i})) != {i}"))?;
            let next = encode_gray((i + 1) % size, n).map_err(|e| e.to_string())?;
            ensure((g ^ next).count_ones() == 1 || size == 1, || format!("N={n}: {i} and its successor differ in more than one bit"))?;
        }
    }
    Ok("N = 1..=12 bijective, unit-distance (cyclic)".into())
}

fn run_sge(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_sge")).args(args).output().map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("sge {args:?}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn without_timings(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("time.") && !l.starts_with("events_file")).collect::<Vec<_>>().join("\n")
}

/// Two seeded simulate+depth runs produce identical files.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rig = dir.path().join("rig.txt");
    fs::write(
        &rig,
        "focal_length_px = 600\nbaseline_mm = 100\ncam_width = 320\ncam_height = 120\nproj_width = 320\nproj_height = 120\n",
    )
    .map_err(|e| e.to_string())?;
    let rig = rig.to_str().unwrap();
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let sim = dir.path().join(run).join("sim");
        let dep = dir.path().join(run).join("depth");
        run_sge(&[
            "simulate", "--rig", rig, "--bits", "8", "--scene", "sphere:40:25", "--slides", "11", "--jitter-us", "17",
            "--seed", "2024", "--dropout-fraction", "0.02", "--out", sim.to_str().unwrap(),
        ])?;
        run_sge(&[
            "depth", "--rig", rig, "--bits", "8", "--events", sim.join("events.txt").to_str().unwrap(), "--close-radius", "1",
            "--median-radius", "1", "--require-activity", "--out", dep.to_str().unwrap(),
        ])?;
        runs.push((sim, dep));
    }
    let list = |p: &Path| -> Vec<String> {
        let mut v: Vec<String> = fs::read_dir(p).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        v.sort();
        v
    };
    let mut files = 0;
    for (a, b) in [(&runs[0].0, &runs[1].0), (&runs[0].1, &runs[1].1)] {
        let names = list(a);
        ensure(names == list(b), || format!("{} and {} hold different files", a.display(), b.display()))?;
        for name in names {
            let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
            let same = if a.ends_with("depth") && name == "manifest.txt" {
                without_timings(&String::from_utf8_lossy(&x)) == without_timings(&String::from_utf8_lossy(&y))
            } else {
                x == y
            };
            ensure(same, || format!("{name} differs between runs"))?;
            files += 1;
        }
    }
    let maps = list(&runs[0].1).iter().filter(|n| n.starts_with("depth_")).count();
    ensure(maps == 2 * 4, || format!("{maps} depth files, expected 4 windows x 2 formats"))?;
    Ok(format!("{files} files identical (event file, ground truth, 4 depth windows)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("end-to-end exactness", end_to_end_exactness),
        ("timestamp-noise immunity", jitter_immunity),
        ("oracle equivalence", oracle_equivalence),
        ("GX-map speedup >= 50x", speedup),
        ("encoding efficiency", encoding_efficiency),
        ("time-overlapping throughput", overlapping_throughput),
        ("metric fidelity", metric_fidelity),
        ("Gray-code laws", gray_laws),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name} [{secs:.1} s]: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {}. {name} [{secs:.1} s]: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
