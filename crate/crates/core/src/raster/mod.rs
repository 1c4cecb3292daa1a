//! Single-channel 8-bit raster primitives.
//!
//! Pixel `(x, y)` is stored at `data[y * width + x]`. Continuous image
//! coordinates put the center of pixel `(x, y)` at `(x + 0.5, y + 0.5)`;
//! homographies, plate corners and rendered geometry all use that frame.
//! Sparse optical flow works in pixel-index coordinates (pixel centers at
//! integers) like most tracking code.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

mod clahe;
mod contours;
mod edges;
mod flow;
mod geometry;
mod hough;
mod morphology;
mod resize;
mod threshold;

pub use clahe::{clahe, equalize_histogram};
pub use contours::{find_contours, find_contours_min_rect, Contour, Rect};
pub use edges::canny;
pub use flow::{lk_flow, FlowPoint, LkConfig};
pub use geometry::{
    convex_hull, min_area_rect, order_corners, solve_homography, warp_perspective, Homography,
    Point, RotatedRect,
};
pub use hough::{hough_lines, HoughConfig, LineSegment};
pub use morphology::{dilate, erode, morphology, MorphOp};
pub use resize::resize_bicubic;
pub use threshold::{adaptive_threshold, gaussian_kernel_q16, otsu_threshold, Polarity, KERNEL_ONE};

/// Foreground value of binary rasters.
pub const FOREGROUND: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 {
            return Err(Error::NonPositive("raster width"));
        }
        if height == 0 {
            return Err(Error::NonPositive("raster height"));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A raster with every pixel set to `value`.
    ///
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut r = Self::filled(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                r.data[y * width + x] = f(x, y);
            }
        }
        r
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Pixel lookup with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Copy of the sub-rectangle `[x, x + w) × [y, y + h)`, clipped to the raster.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Option<Self> {
        if x >= self.width || y >= self.height {
            return None;
        }
        let w = w.min(self.width - x);
        let h = h.min(self.height - y);
        if w == 0 || h == 0 {
            return None;
        }
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            data.extend_from_slice(&self.data[row * self.width + x..row * self.width + x + w]);
        }
        Some(Self {
            width: w,
            height: h,
            data,
        })
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as u64).sum::<u64>() as f64 / self.data.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self
            .data
            .iter()
            .map(|&v| {
                let d = v as f64 - m;
                d * d
            })
            .sum::<f64>()
            / self.data.len() as f64;
        libm::sqrt(var)
    }

    pub fn histogram(&self) -> [u32; 256] {
        let mut hist = [0u32; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }
}

/// Converts interleaved 8-bit RGB to luma with the BT.601 weights.
pub fn to_grayscale(width: usize, height: usize, rgb: &[u8]) -> Result<Raster> {
    if rgb.len() != 3 * width * height {
        return Err(Error::DimensionMismatch {
            expected: 3 * width * height,
            actual: rgb.len(),
        });
    }
    let data = rgb
        .chunks_exact(3)
        .map(|p| {
            let luma = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            libm::round(luma).clamp(0.0, 255.0) as u8
        })
        .collect();
    Raster::new(width, height, data)
}
