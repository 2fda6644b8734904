//! Hole filling on code images and median smoothing on depth maps. Both use
//! a square `(2r + 1)^2` window clipped at the image border.

use alloc::vec::Vec;

use crate::event_pipeline::DepthEncodedImage;
use crate::geometry::DepthMap;
use crate::grid::Grid;

fn window(x: usize, y: usize, radius: usize, dims: (usize, usize)) -> (core::ops::Range<usize>, core::ops::Range<usize>) {
    (
        x.saturating_sub(radius)..(x + radius + 1).min(dims.0),
        y.saturating_sub(radius)..(y + radius + 1).min(dims.1),
    )
}

/// Morphological closing of the validity mask. Pixels that the closing adds
/// take the lower median of the valid codes in their window.
pub fn morph_close(image: &DepthEncodedImage, radius: usize) -> DepthEncodedImage {
    if radius == 0 {
        return image.clone();
    }
    let dims = image.dims();
    let valid = image.codes().map(Option::is_some);
    let dilated = Grid::from_fn(dims.0, dims.1, |x, y| {
        let (xs, ys) = window(x, y, radius, dims);
        ys.clone().any(|yy| xs.clone().any(|xx| *valid.get(xx, yy)))
    });
    let mut scratch = Vec::new();
    let codes = Grid::from_fn(dims.0, dims.1, |x, y| {
        if let Some(c) = image.get(x, y) {
            return Some(c);
        }
        let (xs, ys) = window(x, y, radius, dims);
        let closed = ys.clone().all(|yy| xs.clone().all(|xx| *dilated.get(xx, yy)));
        if !closed {
            return None;
        }
        scratch.clear();
        for yy in ys {
            scratch.extend(xs.clone().filter_map(|xx| image.get(xx, yy)));
        }
        scratch.sort_unstable();
        scratch.get((scratch.len().max(1) - 1) / 2).copied()
    });
    DepthEncodedImage::new(codes, image.source_slice_range())
}

/// Median over the valid pixels of each window. Invalid pixels stay
/// invalid; even counts average the two middle values.
pub fn median_filter(depth: &DepthMap, radius: usize) -> DepthMap {
    if radius == 0 {
        return depth.clone();
    }
    let dims = depth.dims();
    let mut scratch: Vec<f64> = Vec::new();
    DepthMap::from_fn(dims.0, dims.1, |x, y| {
        depth.get(x, y)?;
        let (xs, ys) = window(x, y, radius, dims);
        scratch.clear();
        for yy in ys {
            scratch.extend(xs.clone().filter_map(|xx| depth.get(xx, yy)));
        }
        scratch.sort_unstable_by(f64::total_cmp);
        let n = scratch.len();
        Some(if n % 2 == 1 {
            scratch[n / 2]
        } else {
            0.5 * (scratch[n / 2 - 1] + scratch[n / 2])
        })
    })
}
