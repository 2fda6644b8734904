//! Rectified camera/projector rig, disparity and depth maps, triangulation
//! and nearest-neighbour rectification of categorical images.
//!
//! Units: focal length and disparity in pixels, baseline and depth in
//! millimetres.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dims, Error, Result};
use crate::grid::Grid;

/// Per-pixel source coordinates for a rectified image.
///
/// Entry `(x, y)` names the pixel of the unrectified image whose value lands
/// at rectified pixel `(x, y)`. Invalid entries are stored as NaN; entries
/// that fall outside the source image are normalised to invalid on
/// construction, so every stored coordinate rounds to an in-bounds pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapTable {
    width: usize,
    height: usize,
    coords: Vec<[f32; 2]>,
}

const INVALID_COORD: [f32; 2] = [f32::NAN, f32::NAN];

impl RemapTable {
    pub fn new(width: usize, height: usize, mut coords: Vec<[f32; 2]>) -> Result<Self> {
        check_dims((width * height, 1), (coords.len(), 1))?;
        for c in coords.iter_mut() {
            if nearest(*c, width, height).is_none() {
                *c = INVALID_COORD;
            }
        }
        Ok(Self {
            width,
            height,
            coords,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<(f32, f32)>,
    ) -> Self {
        let coords = Grid::from_fn(width, height, |x, y| match f(x, y) {
            Some((sx, sy)) => [sx, sy],
            None => INVALID_COORD,
        })
        .into_vec();
        // Lengths agree by construction.
        Self::new(width, height, coords).expect("remap length")
    }

    pub fn identity(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| Some((x as f32, y as f32)))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coords(&self) -> &[[f32; 2]] {
        &self.coords
    }

    /// Nearest source pixel for rectified pixel `(x, y)`, or `None` if the
    /// entry is invalid.
    #[inline]
    pub fn source(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        nearest(self.coords[y * self.width + x], self.width, self.height)
    }
}

fn nearest(c: [f32; 2], width: usize, height: usize) -> Option<(usize, usize)> {
    let sx = libm::roundf(c[0]);
    let sy = libm::roundf(c[1]);
    // NaN fails both comparisons.
    if sx >= 0.0 && sy >= 0.0 && (sx as usize) < width && (sy as usize) < height {
        Some((sx as usize, sy as usize))
    } else {
        None
    }
}

/// Parallel-axis camera/projector pair with a horizontal baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RectifiedRig {
    focal_length_px: f64,
    baseline_mm: f64,
    cam_width: usize,
    cam_height: usize,
    proj_width: usize,
    proj_height: usize,
    cam_remap: Option<RemapTable>,
    proj_remap: Option<RemapTable>,
}

impl RectifiedRig {
    pub fn new(
        focal_length_px: f64,
        baseline_mm: f64,
        cam_dims: (usize, usize),
        proj_dims: (usize, usize),
    ) -> Result<Self> {
        if !(focal_length_px.is_finite() && focal_length_px > 0.0) {
            return Err(Error::Config(format!(
                "focal_length_px must be positive, got {focal_length_px}"
            )));
        }
        if !(baseline_mm.is_finite() && baseline_mm > 0.0) {
            return Err(Error::Config(format!(
                "baseline_mm must be positive, got {baseline_mm}"
            )));
        }
        if cam_dims.0 == 0 || cam_dims.1 == 0 || proj_dims.0 == 0 || proj_dims.1 == 0 {
            return Err(Error::Config("rig resolutions must be non-zero".into()));
        }
        Ok(Self {
            focal_length_px,
            baseline_mm,
            cam_width: cam_dims.0,
            cam_height: cam_dims.1,
            proj_width: proj_dims.0,
            proj_height: proj_dims.1,
            cam_remap: None,
            proj_remap: None,
        })
    }

    /// 1280x720 camera and projector, f = 1000 px, b = 150 mm.
    pub fn desk_default() -> Self {
        Self::new(1000.0, 150.0, (1280, 720), (1280, 720)).expect("valid default rig")
    }

    pub fn with_cam_remap(mut self, remap: RemapTable) -> Result<Self> {
        check_dims(self.cam_dims(), (remap.width, remap.height))?;
        self.cam_remap = Some(remap);
        Ok(self)
    }

    pub fn with_proj_remap(mut self, remap: RemapTable) -> Result<Self> {
        check_dims(self.proj_dims(), (remap.width, remap.height))?;
        self.proj_remap = Some(remap);
        Ok(self)
    }

    pub fn focal_length_px(&self) -> f64 {
        self.focal_length_px
    }

    pub fn baseline_mm(&self) -> f64 {
        self.baseline_mm
    }

    pub fn cam_dims(&self) -> (usize, usize) {
        (self.cam_width, self.cam_height)
    }

    pub fn proj_dims(&self) -> (usize, usize) {
        (self.proj_width, self.proj_height)
    }

    pub fn cam_remap(&self) -> Option<&RemapTable> {
        self.cam_remap.as_ref()
    }

    pub fn proj_remap(&self) -> Option<&RemapTable> {
        self.proj_remap.as_ref()
    }

    /// Camera rectification; a rig without a camera remap is already
    /// rectified.
    pub fn cam_rectification(&self) -> Rectification<'_> {
        self.cam_remap
            .as_ref()
            .map_or(Rectification::Identity, Rectification::Table)
    }

    pub fn proj_rectification(&self) -> Rectification<'_> {
        self.proj_remap
            .as_ref()
            .map_or(Rectification::Identity, Rectification::Table)
    }

    #[inline]
    pub fn depth_for_disparity(&self, disparity: f64) -> Option<f64> {
        if disparity > 0.0 && disparity.is_finite() {
            Some(self.focal_length_px * self.baseline_mm / disparity)
        } else {
            None
        }
    }

    #[inline]
    pub fn disparity_for_depth(&self, depth_mm: f64) -> Option<f64> {
        self.depth_for_disparity(depth_mm)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Rectification<'a> {
    Identity,
    Table(&'a RemapTable),
}

/// Pixel types with a distinguished "no value" state, used to fill pixels
/// whose remap entry is invalid.
pub trait Sample: Copy {
    const INVALID: Self;
}

impl<T: Copy> Sample for Option<T> {
    const INVALID: Self = None;
}

impl Sample for bool {
    const INVALID: Self = false;
}

/// Resamples a categorical image with nearest-neighbour lookup.
///
/// `None` means no rectification was declared, which is a configuration
/// error rather than an implicit identity.
pub fn rectify_grid<T: Sample>(image: &Grid<T>, remap: Option<Rectification<'_>>) -> Result<Grid<T>> {
    match remap {
        None => Err(Error::Config(
            "no remap table given and identity rectification not declared".into(),
        )),
        Some(Rectification::Identity) => Ok(image.clone()),
        Some(Rectification::Table(table)) => {
            check_dims((table.width, table.height), image.dims())?;
            Ok(Grid::from_fn(table.width, table.height, |x, y| {
                match table.source(x, y) {
                    Some((sx, sy)) => *image.get(sx, sy),
                    None => T::INVALID,
                }
            }))
        }
    }
}

macro_rules! scalar_map {
    ($name:ident, $doc:literal, $accept:expr) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Grid<Option<f64>>);

        impl $name {
            pub fn invalid(width: usize, height: usize) -> Self {
                Self(Grid::filled(width, height, None))
            }

            /// Builds a map, invalidating values that break the map's
            /// invariant.
            pub fn from_fn(
                width: usize,
                height: usize,
                mut f: impl FnMut(usize, usize) -> Option<f64>,
            ) -> Self {
                Self(Grid::from_fn(width, height, |x, y| f(x, y).filter($accept)))
            }

            /// Wraps values already known to satisfy the invariant.
            #[allow(dead_code)]
            pub(crate) fn from_checked(grid: Grid<Option<f64>>) -> Self {
                debug_assert!(grid.as_slice().iter().flatten().all($accept));
                Self(grid)
            }

            pub fn from_grid(grid: Grid<Option<f64>>) -> Self {
                let (w, h) = grid.dims();
                Self::from_fn(w, h, |x, y| *grid.get(x, y))
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.0.width()
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.0.height()
            }

            #[inline]
            pub fn dims(&self) -> (usize, usize) {
                self.0.dims()
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> Option<f64> {
                *self.0.get(x, y)
            }

            #[inline]
            pub fn set(&mut self, x: usize, y: usize, value: Option<f64>) {
                *self.0.get_mut(x, y) = value.filter($accept);
            }

            pub fn values(&self) -> &[Option<f64>] {
                self.0.as_slice()
            }

            pub fn grid(&self) -> &Grid<Option<f64>> {
                &self.0
            }

            pub fn valid_count(&self) -> usize {
                self.0.as_slice().iter().filter(|v| v.is_some()).count()
            }
        }
    };
}

scalar_map!(
    DisparityMap,
    "Per-pixel disparity in pixels; `None` marks invalid pixels.",
    |d: &f64| d.is_finite()
);
scalar_map!(
    DepthMap,
    "Per-pixel depth in millimetres; valid depths are finite and positive.",
    |z: &f64| z.is_finite() && *z > 0.0
);

/// Converts disparity to depth with `Z = f * b / d`. Pixels with `d <= 0`
/// become invalid.
pub fn triangulate(disparity: &DisparityMap, rig: &RectifiedRig) -> Result<DepthMap> {
    check_dims(rig.cam_dims(), disparity.dims())?;
    let (w, h) = disparity.dims();
    Ok(DepthMap::from_fn(w, h, |x, y| {
        disparity.get(x, y).and_then(|d| rig.depth_for_disparity(d))
    }))
}
