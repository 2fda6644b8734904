//! File formats, benchmarking and the command line for `sge-core`.

pub mod bench;
pub mod cli;
pub mod error;
pub mod event_io;
pub mod image_io;
pub mod manifest;
pub mod rig_file;
pub mod scene_spec;

pub use error::{Error, Result};
