//! From events to depth-encoded images.
//!
//! The stream is cut at event-free gaps, each slice becomes a binary image
//! of the pattern it carries, and every run of `N` consecutive slices (one
//! per bit plane) decodes to a per-pixel column code.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dims, Error, Result};
use crate::geometry::{rectify_grid, Rectification, Sample};
use crate::graycode::{decode_gray, GrayCodeConfig};
use crate::grid::Grid;
use crate::simulator::{Event, Polarity};

/// Cuts a timestamp-ordered event sequence wherever two consecutive events
/// are more than `gap_threshold_us` apart.
pub fn segment_stream(events: &[Event], gap_threshold_us: f64) -> Vec<&[Event]> {
    let mut slices = Vec::new();
    let mut start = 0;
    for i in 1..events.len() {
        if (events[i].t_us - events[i - 1].t_us) as f64 > gap_threshold_us {
            slices.push(&events[start..i]);
            start = i;
        }
    }
    if start < events.len() {
        slices.push(&events[start..]);
    }
    slices
}

/// Segmentation threshold used when none is configured: half the dark
/// interval.
pub fn default_gap_threshold_us(dark_interval_us: u64) -> f64 {
    dark_interval_us as f64 / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum BitState {
    Zero,
    One,
    Unknown,
}

impl Sample for BitState {
    const INVALID: Self = BitState::Unknown;
}

/// Binary image recovered from one slice of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySlice {
    states: Grid<BitState>,
    /// Pixels that produced at least one event in this slice.
    fired: Grid<bool>,
    slice_index: usize,
}

impl BinarySlice {
    pub fn uniform(width: usize, height: usize, state: BitState, slice_index: usize) -> Self {
        Self {
            states: Grid::filled(width, height, state),
            fired: Grid::filled(width, height, false),
            slice_index,
        }
    }

    pub fn from_states(states: Grid<BitState>, slice_index: usize) -> Self {
        let (w, h) = states.dims();
        Self {
            states,
            fired: Grid::filled(w, h, false),
            slice_index,
        }
    }

    pub fn states(&self) -> &Grid<BitState> {
        &self.states
    }

    pub fn fired(&self) -> &Grid<bool> {
        &self.fired
    }

    pub fn slice_index(&self) -> usize {
        self.slice_index
    }

    pub fn dims(&self) -> (usize, usize) {
        self.states.dims()
    }

    pub fn rectified(&self, rect: Option<Rectification<'_>>) -> Result<Self> {
        Ok(Self {
            states: rectify_grid(&self.states, rect)?,
            fired: rectify_grid(&self.fired, rect)?,
            slice_index: self.slice_index,
        })
    }
}

/// Latest event per pixel wins (`+1 -> 1`, `-1 -> 0`). Silent pixels carry
/// `prev`'s state, or are unknown without a previous slice.
pub fn binarize_slice(
    events: &[Event],
    dims: (usize, usize),
    prev: Option<&BinarySlice>,
    slice_index: usize,
) -> Result<BinarySlice> {
    let (w, h) = dims;
    let mut out = match prev {
        Some(p) => {
            check_dims(dims, p.dims())?;
            BinarySlice {
                states: p.states.clone(),
                fired: Grid::filled(w, h, false),
                slice_index,
            }
        }
        None => BinarySlice::uniform(w, h, BitState::Unknown, slice_index),
    };
    let states = out.states.as_mut_slice();
    let fired = out.fired.as_mut_slice();
    for e in events {
        let (x, y) = (usize::from(e.x), usize::from(e.y));
        if x >= w || y >= h {
            return Err(Error::Domain(format!("event at ({x}, {y}) outside {w}x{h} slice")));
        }
        let i = y * w + x;
        states[i] = match e.polarity {
            Polarity::Positive => BitState::One,
            Polarity::Negative => BitState::Zero,
        };
        fired[i] = true;
    }
    Ok(out)
}

/// Per-pixel column code in `[0, c)`; `None` marks undecodable pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthEncodedImage {
    codes: Grid<Option<u32>>,
    /// First and last slice index that contributed.
    source_slice_range: (usize, usize),
}

impl DepthEncodedImage {
    pub fn new(codes: Grid<Option<u32>>, source_slice_range: (usize, usize)) -> Self {
        Self {
            codes,
            source_slice_range,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> Option<u32>,
    ) -> Self {
        Self::new(Grid::from_fn(width, height, f), (0, 0))
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<u32> {
        *self.codes.get(x, y)
    }

    pub fn codes(&self) -> &Grid<Option<u32>> {
        &self.codes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.codes.dims()
    }

    pub fn width(&self) -> usize {
        self.codes.width()
    }

    pub fn height(&self) -> usize {
        self.codes.height()
    }

    pub fn source_slice_range(&self) -> (usize, usize) {
        self.source_slice_range
    }

    pub fn valid_count(&self) -> usize {
        self.codes.as_slice().iter().filter(|c| c.is_some()).count()
    }

    pub fn rectified(&self, rect: Option<Rectification<'_>>) -> Result<Self> {
        Ok(Self {
            codes: rectify_grid(&self.codes, rect)?,
            source_slice_range: self.source_slice_range,
        })
    }
}

/// Decodes `N` slices given in bit-plane order. A pixel with any unknown
/// bit is invalid.
pub fn assemble_code(slices: &[&BinarySlice], config: &GrayCodeConfig) -> Result<DepthEncodedImage> {
    let n = config.num_bits() as usize;
    if slices.len() != n {
        return Err(Error::Domain(format!(
            "a {n}-bit code needs {n} slices, got {}",
            slices.len()
        )));
    }
    let dims = slices[0].dims();
    for s in slices {
        check_dims(dims, s.dims())?;
    }
    let shifts: Vec<u32> = (0..n).map(|p| config.bit_of_plane(p)).collect();
    let planes: Vec<&[BitState]> = slices.iter().map(|s| s.states.as_slice()).collect();
    let codes = (0..dims.0 * dims.1)
        .map(|i| {
            let mut packed = 0u32;
            for (plane, shift) in planes.iter().zip(&shifts) {
                match plane[i] {
                    BitState::One => packed |= 1 << shift,
                    BitState::Zero => {}
                    BitState::Unknown => return None,
                }
            }
            // packed < 2^N by construction
            decode_gray(packed, config.num_bits()).ok()
        })
        .collect();
    let first = slices.iter().map(|s| s.slice_index).min().unwrap_or(0);
    let last = slices.iter().map(|s| s.slice_index).max().unwrap_or(0);
    Ok(DepthEncodedImage::new(
        Grid::from_vec(dims.0, dims.1, codes)?,
        (first, last),
    ))
}

/// Invalidates pixels that produced no event in any of `slices`.
pub fn invalidate_silent(image: &mut DepthEncodedImage, slices: &[&BinarySlice]) -> Result<()> {
    for s in slices {
        check_dims(image.dims(), s.dims())?;
    }
    for (i, code) in image.codes.as_mut_slice().iter_mut().enumerate() {
        if !slices.iter().any(|s| s.fired.as_slice()[i]) {
            *code = None;
        }
    }
    Ok(())
}

/// Sliding window over the most recent `N` slices, one per bit plane.
#[derive(Debug, Clone)]
pub struct OverlapBuffer {
    config: GrayCodeConfig,
    slots: Vec<Option<BinarySlice>>,
    phase: usize,
    buffered: usize,
    require_activity: bool,
}

impl OverlapBuffer {
    /// `start_phase` is the bit plane carried by the first slice fed.
    pub fn new(config: GrayCodeConfig, start_phase: usize) -> Self {
        let n = config.num_bits() as usize;
        Self {
            config,
            slots: (0..n).map(|_| None).collect(),
            phase: start_phase % n,
            buffered: 0,
            require_activity: false,
        }
    }

    /// Also invalidate pixels silent over the whole window.
    pub fn require_activity(mut self, on: bool) -> Self {
        self.require_activity = on;
        self
    }

    pub fn buffered(&self) -> usize {
        self.buffered
    }

    pub fn next_phase(&self) -> usize {
        self.phase
    }

    /// Stores `slice` in its bit-plane slot and, once every plane is filled,
    /// decodes the current window.
    pub fn feed(&mut self, slice: BinarySlice) -> Result<Option<DepthEncodedImage>> {
        let n = self.slots.len();
        self.slots[self.phase] = Some(slice);
        self.phase = (self.phase + 1) % n;
        self.buffered = (self.buffered + 1).min(n);
        if self.buffered < n {
            return Ok(None);
        }
        let window: Vec<&BinarySlice> = self.slots.iter().flatten().collect();
        let mut image = assemble_code(&window, &self.config)?;
        if self.require_activity {
            invalidate_silent(&mut image, &window)?;
        }
        Ok(Some(image))
    }
}
