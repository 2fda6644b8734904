#![no_std]
//! Depth from Gray-code structured light observed by an event camera.
//!
//! The crate covers the whole path from a simulated event stream to metric
//! depth:
//!
//! - [`graycode`] builds the stripe patterns and decodes bit stacks.
//! - [`simulator`] renders a ground-truth scene into sensor events.
//! - [`event_pipeline`] segments the stream at dark gaps, binarizes slices
//!   and assembles depth-encoded images over a sliding window.
//! - [`matching`] turns codes into disparity with a GX-map lookup table,
//!   with a row-scan matcher as reference.
//! - [`geometry`] holds the rectified rig and triangulates depth.
//! - [`filter`] and [`metrics`] cover hole filling, smoothing and
//!   accuracy reporting.
//!
//! Everything here is `no_std` + `alloc`; file formats, timing and the CLI
//! live in the `sge` crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod event_pipeline;
pub mod filter;
pub mod geometry;
pub mod graycode;
pub mod grid;
pub mod matching;
pub mod metrics;
pub mod simulator;

pub use error::{Error, Result};
pub use event_pipeline::{BinarySlice, BitState, DepthEncodedImage, OverlapBuffer};
pub use geometry::{DepthMap, DisparityMap, RectifiedRig, RemapTable};
pub use graycode::{GrayCodeConfig, PatternSet};
pub use grid::Grid;
pub use matching::{DepthFrame, GxMap, PipelineConfig, ProjectorCodeImage};
pub use metrics::{MetricReport, ThresholdMode};
pub use simulator::{Event, EventStream, Polarity, ProjectionTiming, Scene, SensorModel, StreamMeta};
