//! Depth accuracy against a reference map.
//!
//! A pixel is *solid* when both maps are valid there and they agree within
//! the threshold. RMSE is taken over solid pixels only; the fill rate is the
//! solid count over the reference's valid count.

use crate::error::{check_dims, Result};
use crate::geometry::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Fraction of the reference's mean valid depth.
    RelativeToMeanDepth(f64),
    AbsoluteMm(f64),
}

impl Default for ThresholdMode {
    /// 1 % of the mean scene depth.
    fn default() -> Self {
        ThresholdMode::RelativeToMeanDepth(0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// `None` when there are no solid pixels.
    pub rmse_mm: Option<f64>,
    pub fill_rate: f64,
    pub solid_pixel_count: usize,
    pub reference_valid_count: usize,
    pub threshold_mm: f64,
    /// Mean over the reference's valid pixels (0 when there are none).
    pub mean_depth_mm: f64,
}

pub fn compute_metrics(candidate: &DepthMap, reference: &DepthMap, mode: ThresholdMode) -> Result<MetricReport> {
    check_dims(reference.dims(), candidate.dims())?;
    let (sum, count) = reference
        .values()
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), z| (s + z, n + 1));
    let mean_depth_mm = if count > 0 { sum / count as f64 } else { 0.0 };
    let threshold_mm = match mode {
        ThresholdMode::RelativeToMeanDepth(f) => f * mean_depth_mm,
        ThresholdMode::AbsoluteMm(t) => t,
    };
    let mut solid = 0usize;
    let mut sq = 0.0;
    for (c, r) in candidate.values().iter().zip(reference.values()) {
        if let (Some(c), Some(r)) = (c, r) {
            let e = c - r;
            if libm::fabs(e) <= threshold_mm {
                solid += 1;
                sq += e * e;
            }
        }
    }
    Ok(MetricReport {
        rmse_mm: (solid > 0).then(|| libm::sqrt(sq / solid as f64)),
        fill_rate: if count > 0 { solid as f64 / count as f64 } else { 0.0 },
        solid_pixel_count: solid,
        reference_valid_count: count,
        threshold_mm,
        mean_depth_mm,
    })
}
