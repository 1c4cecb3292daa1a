//! Metric scale alignment of external relative depth maps and the
//! resulting depth-branch estimate.

use alloc::vec::Vec;

use crate::detection::PlateQuad;
use crate::ranging::{Estimate, FeatureSource};
use crate::stats::median;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl DepthMap {
    /// Wraps depth-like values (larger = farther).
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("depth map must be non-empty"));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, actual: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("depth values must be finite"));
        }
        Ok(Self { width, height, values })
    }

    /// Converts inverse-depth (disparity-like) output to depth-like values.
    /// Non-positive entries become 0 and are ignored downstream.
    pub fn from_inverse(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        let depth = values.into_iter().map(|v| if v > 0.0 { 1.0 / v } else { 0.0 }).collect();
        Self::new(width, height, depth)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// Median depth inside the quad's axis-aligned bounding box, clipped to the
/// map. Quad coordinates are scaled by `scale` (map pixels per frame pixel).
/// Non-positive entries carry no depth and are skipped.
pub fn plate_relative_depth(depth: &DepthMap, quad: &PlateQuad, scale: (f64, f64)) -> Result<f64> {
    let (x0, y0, x1, y1) = quad.bounds();
    let clip = |v: f64, hi: usize| v.clamp(0.0, hi as f64) as usize;
    let (xa, xb) = (clip(libm::floor(x0 * scale.0), depth.width), clip(libm::ceil(x1 * scale.0), depth.width));
    let (ya, yb) = (clip(libm::floor(y0 * scale.1), depth.height), clip(libm::ceil(y1 * scale.1), depth.height));
    if xa >= xb || ya >= yb {
        return Err(Error::EmptyIntersection);
    }
    let mut vals = Vec::with_capacity((xb - xa) * (yb - ya));
    for y in ya..yb {
        let row = &depth.values[y * depth.width + xa..y * depth.width + xb];
        vals.extend(row.iter().filter(|&&v| v > 0.0).map(|&v| v as f64));
    }
    if vals.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(median(&vals))
}

/// Exponential moving average of the metric-per-relative-depth scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleAligner {
    pub scale: f64,
    pub alpha: f64,
    pub initialized: bool,
}

impl Default for ScaleAligner {
    fn default() -> Self {
        Self::new(0.9)
    }
}

impl ScaleAligner {
    pub fn new(alpha: f64) -> Self {
        Self { scale: 0.0, alpha, initialized: false }
    }
}

pub fn update_scale(a: ScaleAligner, geometric_m: f64, d_plate: f64) -> Result<ScaleAligner> {
    if !(geometric_m > 0.0 && d_plate > 0.0) {
        return Err(Error::NonPositive("scale alignment input"));
    }
    let ratio = geometric_m / d_plate;
    let scale = if a.initialized { a.alpha * a.scale + (1.0 - a.alpha) * ratio } else { ratio };
    Ok(ScaleAligner { scale, initialized: true, ..a })
}

/// Relative variance assumed for the depth branch: σ = 15% of the value.
pub const DEPTH_RELATIVE_SIGMA: f64 = 0.15;

/// Metric depth estimate; `variance` defaults to `(0.15 · value)²`.
pub fn depth_estimate(a: &ScaleAligner, d_plate: f64, variance: Option<f64>) -> Result<Estimate> {
    if !a.initialized {
        return Err(Error::UninitializedAligner);
    }
    let value = a.scale * d_plate;
    let var = variance.unwrap_or_else(|| {
        let s = DEPTH_RELATIVE_SIGMA * value;
        s * s
    });
    Ok(Estimate::new(value, var, FeatureSource::DepthNet))
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn recurrence_matches_scalar_replay(
            stream in proptest::collection::vec((0.1f64..50.0, 0.1f64..10.0), 1..60),
        ) {
            let mut a = ScaleAligner::default();
            let mut s = f64::NAN;
            for (i, &(d, p)) in stream.iter().enumerate() {
                a = update_scale(a, d, p).unwrap();
                s = if i == 0 { d / p } else { 0.9 * s + (1.0 - 0.9) * (d / p) };
                prop_assert_eq!(a.scale, s);
            }
        }

        #[test]
        fn constant_ratio_error_decays_geometrically(r in 0.1f64..100.0, s0 in 0.1f64..100.0) {
            prop_assume!((s0 - r).abs() > 1e-3);
            let mut a = ScaleAligner { scale: s0, alpha: 0.9, initialized: true };
            let mut prev = (a.scale - r).abs();
            for _ in 0..20 {
                a = update_scale(a, r * 3.0, 3.0).unwrap();
                let e = (a.scale - r).abs();
                prop_assert!((e / prev - 0.9).abs() < 1e-9 * (1.0 + r / prev));
                prev = e;
            }
        }

        #[test]
        fn depth_estimate_is_monotone(s in 0.01f64..10.0, a in 0.01f64..100.0, b in 0.01f64..100.0) {
            let al = ScaleAligner { scale: s, alpha: 0.9, initialized: true };
            let (ea, eb) = (depth_estimate(&al, a, None).unwrap(), depth_estimate(&al, b, None).unwrap());
            prop_assert_eq!(a < b, ea.value < eb.value);
        }
    }
}
