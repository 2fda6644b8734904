//! Ground-truth scenes expressed directly in rectified camera coordinates.

use alloc::format;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Error, Result};
use crate::geometry::{DisparityMap, RectifiedRig};
use crate::graycode::GrayCodeConfig;
use crate::grid::Grid;

/// Piecewise-static lateral motion, applied once per slide.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Motion {
    pub dx_px: i32,
    pub dy_px: i32,
}

impl Motion {
    pub fn is_static(&self) -> bool {
        self.dx_px == 0 && self.dy_px == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    disparity: DisparityMap,
    albedo: Grid<f64>,
    motion: Motion,
}

impl Scene {
    pub fn new(disparity: DisparityMap, albedo: Grid<f64>) -> Result<Self> {
        check_dims(disparity.dims(), albedo.dims())?;
        if let Some(a) = albedo.as_slice().iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::Config(format!("albedo must lie in (0, 1], found {a}")));
        }
        if let Some(d) = disparity.values().iter().flatten().find(|d| **d < 0.0) {
            return Err(Error::Config(format!("scene disparity must be non-negative, found {d}")));
        }
        Ok(Self {
            disparity,
            albedo,
            motion: Motion::default(),
        })
    }

    pub fn with_uniform_albedo(disparity: DisparityMap) -> Result<Self> {
        let (w, h) = disparity.dims();
        Self::new(disparity, Grid::filled(w, h, 1.0))
    }

    pub fn with_motion(mut self, motion: Motion) -> Self {
        self.motion = motion;
        self
    }

    /// Sets the albedo of a seeded random `fraction` of pixels to `albedo`.
    pub fn with_dropouts(mut self, fraction: f64, albedo: f64, seed: u64) -> Result<Self> {
        if !(albedo > 0.0 && albedo <= 1.0) {
            return Err(Error::Config(format!("albedo must lie in (0, 1], got {albedo}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in self.albedo.as_mut_slice() {
            if rng.gen::<f64>() < fraction {
                *a = albedo;
            }
        }
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.disparity.dims()
    }

    pub fn disparity(&self) -> &DisparityMap {
        &self.disparity
    }

    pub fn albedo(&self) -> &Grid<f64> {
        &self.albedo
    }

    pub fn motion(&self) -> Motion {
        self.motion
    }

    /// The static scene seen during slide `slide`. Pixels uncovered by the
    /// motion have no surface.
    pub fn at_slide(&self, slide: usize) -> Scene {
        if self.motion.is_static() || slide == 0 {
            return Scene {
                motion: Motion::default(),
                ..self.clone()
            };
        }
        let (w, h) = self.dims();
        let dx = i64::from(self.motion.dx_px) * slide as i64;
        let dy = i64::from(self.motion.dy_px) * slide as i64;
        let src = |x: usize, y: usize| {
            let sx = x as i64 - dx;
            let sy = y as i64 - dy;
            (sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h)
                .then_some((sx as usize, sy as usize))
        };
        Scene {
            disparity: DisparityMap::from_fn(w, h, |x, y| {
                src(x, y).and_then(|(sx, sy)| self.disparity.get(sx, sy))
            }),
            albedo: Grid::from_fn(w, h, |x, y| {
                src(x, y).map_or(1.0, |(sx, sy)| *self.albedo.get(sx, sy))
            }),
            motion: Motion::default(),
        }
    }

    /// Disparity of every pixel lit by a covered projector column during
    /// slide `slide`; all other pixels are invalid.
    pub fn ground_truth(&self, slide: usize, rig: &RectifiedRig, config: &GrayCodeConfig) -> DisparityMap {
        let snap = self.at_slide(slide);
        let (w, h) = snap.dims();
        let (_, ph) = rig.proj_dims();
        DisparityMap::from_fn(w, h, |x, y| {
            let d = libm::round(snap.disparity.get(x, y)?);
            if y >= ph {
                return None;
            }
            let col = x as i64 - d as i64;
            if col < 0 {
                return None;
            }
            config.column_code(col as usize).map(|_| d)
        })
    }
}

/// Front-parallel plane at constant disparity.
pub fn plane(width: usize, height: usize, disparity: f64) -> DisparityMap {
    DisparityMap::from_fn(width, height, |_, _| Some(disparity))
}

/// Two planes meeting at column `split_x`.
pub fn step(width: usize, height: usize, left: f64, right: f64, split_x: usize) -> DisparityMap {
    DisparityMap::from_fn(width, height, |x, _| Some(if x < split_x { left } else { right }))
}

/// Slanted plane, rounded to whole-pixel disparities.
pub fn ramp(width: usize, height: usize, base: f64, per_col: f64, per_row: f64) -> DisparityMap {
    DisparityMap::from_fn(width, height, |x, y| {
        Some(libm::fmax(libm::round(base + per_col * x as f64 + per_row * y as f64), 0.0))
    })
}

/// Spherical bump of `height_px` disparity over a `base` plane.
pub fn sphere_cap(
    width: usize,
    height: usize,
    base: f64,
    height_px: f64,
    center: (f64, f64),
    radius: f64,
) -> DisparityMap {
    DisparityMap::from_fn(width, height, |x, y| {
        let dx = x as f64 - center.0;
        let dy = y as f64 - center.1;
        let r2 = (dx * dx + dy * dy) / (radius * radius);
        let bump = if r2 < 1.0 { height_px * libm::sqrt(1.0 - r2) } else { 0.0 };
        Some(libm::round(base + bump))
    })
}
