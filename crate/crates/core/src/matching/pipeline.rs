use alloc::vec::Vec;

use super::{build_gx_map, build_gx_map_keep_leftmost, query_disparity, GxMap, ProjectorCodeImage};
use crate::error::{check_dims, Result};
use crate::event_pipeline::{
    binarize_slice, default_gap_threshold_us, segment_stream, BinarySlice, BitState, DepthEncodedImage,
    OverlapBuffer,
};
use crate::filter::{median_filter, morph_close};
use crate::geometry::{triangulate, DepthMap, DisparityMap, RectifiedRig};
use crate::graycode::GrayCodeConfig;
use crate::simulator::{Event, EventStream, StreamMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Segment,
    Binarize,
    Decode,
    Rectify,
    Close,
    Query,
    Triangulate,
    Median,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Segment,
        Stage::Binarize,
        Stage::Decode,
        Stage::Rectify,
        Stage::Close,
        Stage::Query,
        Stage::Triangulate,
        Stage::Median,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Segment => "segment",
            Stage::Binarize => "binarize",
            Stage::Decode => "decode",
            Stage::Rectify => "rectify",
            Stage::Close => "close",
            Stage::Query => "query",
            Stage::Triangulate => "triangulate",
            Stage::Median => "median",
        }
    }
}

/// Hook around each pipeline stage, e.g. for wall-clock timing.
pub trait StageObserver {
    fn enter(&mut self, _stage: Stage) {}
    fn exit(&mut self, _stage: Stage) {}
}

impl StageObserver for () {}

fn observed<T>(obs: &mut dyn StageObserver, stage: Stage, f: impl FnOnce() -> T) -> T {
    obs.enter(stage);
    let out = f();
    obs.exit(stage);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub code: GrayCodeConfig,
    /// Defaults to half the stream's dark interval.
    pub gap_threshold_us: Option<f64>,
    pub close_radius: usize,
    pub median_radius: usize,
    /// Invalidate pixels that stayed silent for a whole window.
    pub require_activity: bool,
}

impl PipelineConfig {
    pub fn new(code: GrayCodeConfig) -> Self {
        Self {
            code,
            gap_threshold_us: None,
            close_radius: 0,
            median_radius: 0,
            require_activity: false,
        }
    }
}

/// Result of one completed window.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub codes: DepthEncodedImage,
    pub disparity: DisparityMap,
    pub depth: DepthMap,
    pub negative_disparities: usize,
}

/// Streaming decoder: feed it one slice of events at a time.
#[derive(Debug, Clone)]
pub struct DepthPipeline {
    rig: RectifiedRig,
    config: PipelineConfig,
    rp: ProjectorCodeImage,
    gx: GxMap,
    duplicate_codes: usize,
    buffer: OverlapBuffer,
    prev: Option<BinarySlice>,
    slices_seen: usize,
}

impl DepthPipeline {
    pub fn new(rig: &RectifiedRig, config: PipelineConfig, meta: &StreamMeta) -> Result<Self> {
        check_dims(rig.cam_dims(), (meta.width, meta.height))?;
        let rp = ProjectorCodeImage::for_rig(&config.code, rig)?;
        // Nearest-neighbour rectification may duplicate codes; an unremapped
        // projector cannot.
        let (gx, duplicate_codes) = if rig.proj_remap().is_some() {
            build_gx_map_keep_leftmost(&rp)?
        } else {
            (build_gx_map(&rp)?, 0)
        };
        let (w, h) = rig.cam_dims();
        Ok(Self {
            rig: rig.clone(),
            config,
            rp,
            gx,
            duplicate_codes,
            buffer: OverlapBuffer::new(config.code, meta.start_phase)
                .require_activity(config.require_activity),
            prev: meta.dark_start.then(|| BinarySlice::uniform(w, h, BitState::Zero, 0)),
            slices_seen: 0,
        })
    }

    pub fn gx_map(&self) -> &GxMap {
        &self.gx
    }

    pub fn projector_codes(&self) -> &ProjectorCodeImage {
        &self.rp
    }

    /// Codes dropped while building the GX-map from a remapped projector.
    pub fn duplicate_codes(&self) -> usize {
        self.duplicate_codes
    }

    pub fn push_slice(&mut self, events: &[Event], obs: &mut dyn StageObserver) -> Result<Option<DepthFrame>> {
        let index = self.slices_seen;
        self.slices_seen += 1;
        let slice = observed(obs, Stage::Binarize, || {
            binarize_slice(events, self.rig.cam_dims(), self.prev.as_ref(), index)
        })?;
        self.prev = Some(slice.clone());
        let Some(raw) = observed(obs, Stage::Decode, || self.buffer.feed(slice))? else {
            return Ok(None);
        };
        let codes = observed(obs, Stage::Rectify, || raw.rectified(Some(self.rig.cam_rectification())))?;
        let codes = observed(obs, Stage::Close, || morph_close(&codes, self.config.close_radius));
        let q = observed(obs, Stage::Query, || query_disparity(&codes, &self.gx))?;
        let depth = observed(obs, Stage::Triangulate, || triangulate(&q.disparity, &self.rig))?;
        let depth = observed(obs, Stage::Median, || median_filter(&depth, self.config.median_radius));
        Ok(Some(DepthFrame {
            codes,
            disparity: q.disparity,
            depth,
            negative_disparities: q.negative,
        }))
    }

    pub fn run(&mut self, stream: &EventStream, obs: &mut dyn StageObserver) -> Result<Vec<DepthFrame>> {
        let gap = self
            .config
            .gap_threshold_us
            .unwrap_or_else(|| default_gap_threshold_us(stream.meta().dark_interval_us));
        let slices = observed(obs, Stage::Segment, || segment_stream(stream.events(), gap));
        let mut frames = Vec::new();
        for events in slices {
            if let Some(frame) = self.push_slice(events, obs)? {
                frames.push(frame);
            }
        }
        Ok(frames)
    }
}

/// Segment, binarize, decode overlapping windows and triangulate: one
/// depth map per completed window.
pub fn depth_pipeline(stream: &EventStream, rig: &RectifiedRig, config: &PipelineConfig) -> Result<Vec<DepthFrame>> {
    depth_pipeline_observed(stream, rig, config, &mut ())
}

pub fn depth_pipeline_observed(
    stream: &EventStream,
    rig: &RectifiedRig,
    config: &PipelineConfig,
    obs: &mut dyn StageObserver,
) -> Result<Vec<DepthFrame>> {
    DepthPipeline::new(rig, *config, stream.meta())?.run(stream, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graycode::make_pattern_set;
    use crate::simulator::{generate_events, plane, ProjectionTiming, Scene, SensorModel};

    fn run_plane(d: f64, bits: u32, slides: usize, dims: (usize, usize)) -> (Vec<DepthFrame>, Scene, RectifiedRig, GrayCodeConfig) {
        let rig = RectifiedRig::new(1000.0, 150.0, dims, dims).unwrap();
        let cfg = GrayCodeConfig::with_bits(bits).unwrap();
        let set = make_pattern_set(cfg, rig.proj_dims()).unwrap();
        let scene = Scene::with_uniform_albedo(plane(dims.0, dims.1, d)).unwrap();
        let stream = generate_events(&scene, &set, &rig, &SensorModel::default(), &ProjectionTiming::with_slides(slides)).unwrap();
        let frames = depth_pipeline(&stream, &rig, &PipelineConfig::new(cfg)).unwrap();
        (frames, scene, rig, cfg)
    }

    #[test]
    fn plane_at_32_px() {
        let (frames, scene, rig, cfg) = run_plane(32.0, 9, 9, (600, 3));
        assert_eq!(frames.len(), 1);
        let gt = scene.ground_truth(0, &rig, &cfg);
        let expected = 1000.0 * 150.0 / 32.0;
        for y in 0..3 {
            for x in 0..600 {
                if gt.get(x, y).is_some() {
                    assert_eq!(frames[0].depth.get(x, y), Some(expected));
                }
            }
        }
    }

    #[test]
    fn seven_slides_four_frames() {
        let (frames, ..) = run_plane(3.0, 4, 7, (24, 2));
        assert_eq!(frames.len(), 4);
        for f in &frames {
            assert_eq!(f.depth, frames[0].depth);
        }
    }

    #[test]
    fn empty_stream() {
        let (frames, ..) = run_plane(3.0, 4, 0, (24, 2));
        assert!(frames.is_empty());
    }

    #[test]
    fn stage_observer_sees_every_stage() {
        struct Count([usize; 8]);
        impl StageObserver for Count {
            fn exit(&mut self, stage: Stage) {
                self.0[Stage::ALL.iter().position(|s| *s == stage).unwrap()] += 1;
            }
        }
        let rig = RectifiedRig::new(1000.0, 150.0, (16, 1), (16, 1)).unwrap();
        let cfg = GrayCodeConfig::with_bits(3).unwrap();
        let set = make_pattern_set(cfg, rig.proj_dims()).unwrap();
        let scene = Scene::with_uniform_albedo(plane(16, 1, 2.0)).unwrap();
        let stream = generate_events(&scene, &set, &rig, &SensorModel::default(), &ProjectionTiming::with_slides(4)).unwrap();
        let mut count = Count([0; 8]);
        let frames = depth_pipeline_observed(&stream, &rig, &PipelineConfig::new(cfg), &mut count).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(count.0, [1, 4, 4, 2, 2, 2, 2, 2]);
    }
}
