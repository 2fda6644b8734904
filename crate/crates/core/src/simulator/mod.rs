//! Event-camera simulation of a projected Gray-code sequence.
//!
//! Each slide period starts with a dark interval followed by the pattern.
//! A pixel fires when the log-intensity step between consecutive states
//! exceeds the sensor's contrast thresholds. All transitions of a slide are
//! stamped at its onset plus bounded uniform timestamp noise, so consecutive
//! slides stay separated by an event-free gap.

mod scene;

pub use scene::{plane, ramp, sphere_cap, step, Motion, Scene};

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Error, Result};
use crate::geometry::RectifiedRig;
use crate::graycode::PatternSet;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Polarity {
    type Error = Error;

    fn try_from(value: i8) -> Result<Self> {
        match value {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(Error::Domain(format!("polarity must be 1 or -1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t_us: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

/// Recording parameters carried alongside the events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamMeta {
    pub width: usize,
    pub height: usize,
    pub slide_period_us: u64,
    pub dark_interval_us: u64,
    pub num_slides: usize,
    /// Bit plane carried by the first slide.
    pub start_phase: usize,
    /// Whether the recording starts from an all-dark reference state, so
    /// pixels silent in the first slide are known to be unlit.
    pub dark_start: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    meta: StreamMeta,
    events: Vec<Event>,
}

impl EventStream {
    pub fn new(meta: StreamMeta, events: Vec<Event>) -> Result<Self> {
        if meta.width > usize::from(u16::MAX) + 1 || meta.height > usize::from(u16::MAX) + 1 {
            return Err(Error::Config("sensor resolution exceeds 16-bit coordinates".into()));
        }
        for (i, e) in events.iter().enumerate() {
            if usize::from(e.x) >= meta.width || usize::from(e.y) >= meta.height {
                return Err(Error::Domain(format!(
                    "event {i} at ({}, {}) outside {}x{} sensor",
                    e.x, e.y, meta.width, meta.height
                )));
            }
            if i > 0 && events[i - 1].t_us > e.t_us {
                return Err(Error::Domain(format!("event {i} breaks timestamp order")));
            }
        }
        Ok(Self { meta, events })
    }

    pub fn meta(&self) -> &StreamMeta {
        &self.meta
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    pub c_positive: f64,
    pub c_negative: f64,
    /// Half-width of the uniform timestamp noise.
    pub jitter_bound_us: f64,
    pub ambient_level: f64,
    pub projector_on_level: f64,
    /// Pixels with albedo below this never fire.
    pub albedo_floor: f64,
    pub rng_seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            c_positive: 0.2,
            c_negative: -0.2,
            jitter_bound_us: 0.0,
            ambient_level: 0.05,
            projector_on_level: 1.0,
            albedo_floor: 0.05,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionTiming {
    pub slide_period_us: u64,
    pub dark_interval_us: u64,
    pub num_slides: usize,
    pub start_phase: usize,
    /// When false the projector switches straight from one pattern to the
    /// next, and pixels lit in consecutive slides stay silent.
    pub model_dark_interval: bool,
}

impl ProjectionTiming {
    /// 400 µs slides with a 20 % dark interval.
    pub fn with_slides(num_slides: usize) -> Self {
        Self {
            slide_period_us: 400,
            dark_interval_us: 80,
            num_slides,
            start_phase: 0,
            model_dark_interval: true,
        }
    }

    /// Ideal timestamp of the pattern onset of slide `k`.
    pub fn onset_us(&self, k: usize) -> u64 {
        k as u64 * self.slide_period_us + self.dark_interval_us
    }
}

/// What the camera sees of one projector pattern: pixel `(x, y)` with
/// disparity `d` sees projector pixel `(x - d, y)`. `None` where that pixel
/// is off the projector or the scene has no surface.
pub fn project_slide(scene: &Scene, pattern: &Grid<bool>, rig: &RectifiedRig) -> Result<Grid<Option<bool>>> {
    check_dims(rig.cam_dims(), scene.dims())?;
    check_dims(rig.proj_dims(), pattern.dims())?;
    let (pw, ph) = pattern.dims();
    let (w, h) = scene.dims();
    Ok(Grid::from_fn(w, h, |x, y| {
        let d = libm::round(scene.disparity().get(x, y)?) as i64;
        let col = x as i64 - d;
        (y < ph && col >= 0 && (col as usize) < pw).then(|| *pattern.get(col as usize, y))
    }))
}

// Negated comparisons so NaN parameters are rejected.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validate(sensor: &SensorModel, timing: &ProjectionTiming) -> Result<()> {
    if !(sensor.c_positive > 0.0) || !(sensor.c_negative < 0.0) {
        return Err(Error::Config("contrast thresholds must satisfy C+ > 0 > C-".into()));
    }
    if !(sensor.ambient_level >= 0.0) || !(sensor.projector_on_level > sensor.ambient_level) {
        return Err(Error::Config(
            "intensity levels must satisfy on > ambient >= 0".into(),
        ));
    }
    if timing.dark_interval_us == 0 || timing.slide_period_us <= timing.dark_interval_us {
        return Err(Error::Config(format!(
            "slide period {} µs must exceed a non-zero dark interval {} µs",
            timing.slide_period_us, timing.dark_interval_us
        )));
    }
    let half_dark = timing.dark_interval_us as f64 / 2.0;
    if !(sensor.jitter_bound_us >= 0.0 && sensor.jitter_bound_us < half_dark) {
        return Err(Error::Config(format!(
            "jitter bound {} µs must be below half the dark interval ({half_dark} µs)",
            sensor.jitter_bound_us
        )));
    }
    Ok(())
}

/// Simulates the event stream for `timing.num_slides` slides, cycling
/// through the bit planes from `timing.start_phase`.
pub fn generate_events(
    scene: &Scene,
    patterns: &PatternSet,
    rig: &RectifiedRig,
    sensor: &SensorModel,
    timing: &ProjectionTiming,
) -> Result<EventStream> {
    validate(sensor, timing)?;
    check_dims(rig.cam_dims(), scene.dims())?;
    check_dims(rig.proj_dims(), patterns.dims())?;
    let (w, h) = scene.dims();
    let num_planes = patterns.len();
    let mut rng = ChaCha8Rng::seed_from_u64(sensor.rng_seed);
    let jitter = sensor.jitter_bound_us;
    let on = sensor.projector_on_level;
    let ambient = sensor.ambient_level;

    // Intensity of every pixel at the end of the previous slide; the
    // recording starts dark.
    let mut state: Vec<f64> = scene.albedo().as_slice().iter().map(|a| a * ambient).collect();
    let mut events = Vec::new();
    let mut slide_events = Vec::new();

    for k in 0..timing.num_slides {
        let plane = (timing.start_phase + k) % num_planes;
        let snapshot;
        let view_scene = if scene.motion().is_static() {
            scene
        } else {
            snapshot = scene.at_slide(k);
            &snapshot
        };
        let view = project_slide(view_scene, &patterns.patterns()[plane], rig)?;
        let onset = timing.onset_us(k) as i64;
        slide_events.clear();

        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let albedo = *view_scene.albedo().get(x, y);
                let lit = view.get(x, y).unwrap_or(false);
                let next = albedo * if lit { on } else { ambient };
                let prev = state[i];
                state[i] = next;
                if albedo < sensor.albedo_floor {
                    continue;
                }
                let mut fired = [None; 2];
                if timing.model_dark_interval {
                    let dark = albedo * ambient;
                    if libm::log(dark / prev) < sensor.c_negative {
                        fired[0] = Some(Polarity::Negative);
                    }
                    if libm::log(next / dark) > sensor.c_positive {
                        fired[1] = Some(Polarity::Positive);
                    }
                } else {
                    let step = libm::log(next / prev);
                    if step > sensor.c_positive {
                        fired[0] = Some(Polarity::Positive);
                    } else if step < sensor.c_negative {
                        fired[0] = Some(Polarity::Negative);
                    }
                }
                if fired.iter().all(Option::is_none) {
                    continue;
                }
                // One noise draw per pixel and slide: the falling and rising
                // transitions of a pixel keep their physical order.
                let sigma = if jitter > 0.0 {
                    libm::round(rng.gen_range(-jitter..=jitter)) as i64
                } else {
                    0
                };
                let t_us = (onset + sigma) as u64;
                for polarity in fired.into_iter().flatten() {
                    slide_events.push(Event {
                        t_us,
                        x: x as u16,
                        y: y as u16,
                        polarity,
                    });
                }
            }
        }
        // Stable: ties keep (y, x) scan order and per-pixel emission order.
        slide_events.sort_by_key(|e| e.t_us);
        events.extend_from_slice(&slide_events);
    }

    EventStream::new(
        StreamMeta {
            width: w,
            height: h,
            slide_period_us: timing.slide_period_us,
            dark_interval_us: timing.dark_interval_us,
            num_slides: timing.num_slides,
            start_phase: timing.start_phase,
            dark_start: true,
        },
        events,
    )
}
