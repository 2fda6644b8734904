//! Correspondence between camera and projector codes.
//!
//! The GX-map inverts the projector's rectified code image row by row, so
//! the projector column of a camera pixel is one table lookup:
//! `d = x_cam - GX(y_cam, v_cam)`. [`search_disparity`] answers the same
//! question by scanning the row and serves as the reference oracle.

mod pipeline;

pub use pipeline::{depth_pipeline, depth_pipeline_observed, DepthFrame, DepthPipeline, PipelineConfig, Stage, StageObserver};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::event_pipeline::DepthEncodedImage;
use crate::geometry::{rectify_grid, DisparityMap, RectifiedRig};
use crate::graycode::GrayCodeConfig;
use crate::grid::Grid;

/// The projector's rectified depth-encoded image `RP(y, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorCodeImage {
    codes: Grid<Option<u32>>,
    num_codes: u32,
}

impl ProjectorCodeImage {
    pub fn new(codes: Grid<Option<u32>>, num_codes: u32) -> Result<Self> {
        if let Some(c) = codes.as_slice().iter().flatten().find(|c| **c >= num_codes) {
            return Err(Error::Domain(format!("code {c} outside [0, {num_codes})")));
        }
        Ok(Self { codes, num_codes })
    }

    /// Code image of an already rectified projector:
    /// `RP(y, x) = x - column_offset` over the covered columns.
    pub fn for_config(config: &GrayCodeConfig, proj_dims: (usize, usize)) -> Self {
        Self {
            codes: Grid::from_fn(proj_dims.0, proj_dims.1, |x, _| config.column_code(x)),
            num_codes: config.num_columns() as u32,
        }
    }

    /// Projector code image rectified with the rig's projector remap, if any.
    pub fn for_rig(config: &GrayCodeConfig, rig: &RectifiedRig) -> Result<Self> {
        config.check_projector_width(rig.proj_dims().0)?;
        let raw = Self::for_config(config, rig.proj_dims());
        Ok(Self {
            codes: rectify_grid(&raw.codes, Some(rig.proj_rectification()))?,
            num_codes: raw.num_codes,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<u32> {
        *self.codes.get(x, y)
    }

    pub fn codes(&self) -> &Grid<Option<u32>> {
        &self.codes
    }

    pub fn num_codes(&self) -> u32 {
        self.num_codes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.codes.dims()
    }
}

const ABSENT: u32 = u32::MAX;

/// Dense `rows x codes` table of projector columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GxMap {
    height: usize,
    num_codes: usize,
    table: Vec<u32>,
}

impl GxMap {
    #[inline]
    pub fn get(&self, y: usize, code: u32) -> Option<u32> {
        if y >= self.height || code as usize >= self.num_codes {
            return None;
        }
        let x = self.table[y * self.num_codes + code as usize];
        (x != ABSENT).then_some(x)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_codes(&self) -> usize {
        self.num_codes
    }

    #[inline]
    fn row(&self, y: usize) -> &[u32] {
        &self.table[y * self.num_codes..(y + 1) * self.num_codes]
    }
}

fn build(rp: &ProjectorCodeImage, strict: bool) -> Result<(GxMap, usize)> {
    let (w, h) = rp.dims();
    if w >= ABSENT as usize {
        return Err(Error::Config(format!("projector width {w} too large")));
    }
    let nc = rp.num_codes as usize;
    let mut table = alloc::vec![ABSENT; h * nc];
    let mut duplicates = 0;
    for y in 0..h {
        let row = &mut table[y * nc..(y + 1) * nc];
        for (x, code) in rp.codes.row(y).iter().enumerate() {
            let Some(v) = *code else { continue };
            let slot = &mut row[v as usize];
            if *slot == ABSENT {
                *slot = x as u32;
            } else if strict {
                return Err(Error::DuplicateCode { row: y, code: v });
            } else {
                duplicates += 1;
            }
        }
    }
    Ok((
        GxMap {
            height: h,
            num_codes: nc,
            table,
        },
        duplicates,
    ))
}

/// Inverts `RP(y, x) = v` into `GX(y, v) = x`. A code occurring twice in a
/// row is an integrity error.
pub fn build_gx_map(rp: &ProjectorCodeImage) -> Result<GxMap> {
    build(rp, true).map(|(gx, _)| gx)
}

/// Like [`build_gx_map`] but keeps the leftmost column of a duplicated code
/// and returns how many duplicates were dropped.
pub fn build_gx_map_keep_leftmost(rp: &ProjectorCodeImage) -> Result<(GxMap, usize)> {
    build(rp, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisparityQuery {
    pub disparity: DisparityMap,
    /// Matches rejected because the disparity came out negative.
    pub negative: usize,
}

fn check_rows(image: &DepthEncodedImage, rows: usize) -> Result<()> {
    if image.height() > rows {
        return Err(Error::Config(format!(
            "code image has {} rows but the projector only {rows}",
            image.height()
        )));
    }
    Ok(())
}

/// Constant-time-per-pixel disparity lookup through the GX-map.
pub fn query_disparity(image: &DepthEncodedImage, gx: &GxMap) -> Result<DisparityQuery> {
    check_rows(image, gx.height)?;
    let (w, h) = image.dims();
    let mut out = Vec::with_capacity(w * h);
    let mut negative = 0;
    for y in 0..h {
        let lut = gx.row(y);
        for (x, code) in image.codes().row(y).iter().enumerate() {
            let matched = code.and_then(|v| lut.get(v as usize)).filter(|&&px| px != ABSENT);
            out.push(match matched {
                Some(&px) if px as usize <= x => Some((x - px as usize) as f64),
                Some(_) => {
                    negative += 1;
                    None
                }
                None => None,
            });
        }
    }
    Ok(DisparityQuery {
        disparity: DisparityMap::from_checked(Grid::from_vec(w, h, out)?),
        negative,
    })
}

/// Reference matcher: scans the whole projector row for the camera pixel's
/// code.
pub fn search_disparity(image: &DepthEncodedImage, rp: &ProjectorCodeImage) -> Result<DisparityQuery> {
    check_rows(image, rp.dims().1)?;
    let (w, h) = image.dims();
    let mut out = Vec::with_capacity(w * h);
    let mut negative = 0;
    for y in 0..h {
        let proj_row = rp.codes.row(y);
        for (x, code) in image.codes().row(y).iter().enumerate() {
            let Some(v) = *code else {
                out.push(None);
                continue;
            };
            let mut found = None;
            for (px, c) in proj_row.iter().enumerate() {
                if *c == Some(v) {
                    if found.is_some() {
                        return Err(Error::DuplicateCode { row: y, code: v });
                    }
                    found = Some(px);
                }
            }
            out.push(match found {
                Some(px) if px <= x => Some((x - px) as f64),
                Some(_) => {
                    negative += 1;
                    None
                }
                None => None,
            });
        }
    }
    Ok(DisparityQuery {
        disparity: DisparityMap::from_checked(Grid::from_vec(w, h, out)?),
        negative,
    })
}
