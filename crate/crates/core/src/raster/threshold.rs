use alloc::vec;
use alloc::vec::Vec;

use super::{Raster, FOREGROUND};
use crate::{Error, Result};

/// Which side of the threshold is marked as foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    /// Pixels at or below the threshold are foreground (dark glyphs on a light plate).
    #[default]
    DarkForeground,
    /// Pixels above the threshold are foreground.
    LightForeground,
}

/// Fixed-point scale of the 1-D Gaussian taps. The 2-D weights are the
/// outer product, so they sum to `KERNEL_ONE²` exactly.
pub const KERNEL_ONE: u32 = 1 << 16;

/// 1-D Gaussian taps for an odd `window`, quantized so they sum to
/// [`KERNEL_ONE`]. σ follows the usual window rule `0.3·((window−1)/2 − 1) + 0.8`.
pub fn gaussian_kernel_q16(window: usize) -> Result<Vec<u32>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter("threshold window must be odd and >= 3"));
    }
    let radius = (window - 1) / 2;
    let sigma = 0.3 * (radius as f64 - 1.0) + 0.8;
    let raw: Vec<f64> = (0..window)
        .map(|i| {
            let d = i as f64 - radius as f64;
            libm::exp(-(d * d) / (2.0 * sigma * sigma))
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let mut taps: Vec<u32> = raw
        .iter()
        .map(|w| libm::round(w / total * KERNEL_ONE as f64) as u32)
        .collect();
    // Rounding drift goes to the center tap so the taps sum exactly.
    let sum: i64 = taps.iter().map(|&t| t as i64).sum();
    let center = taps[radius] as i64 + (KERNEL_ONE as i64 - sum);
    taps[radius] = center as u32;
    Ok(taps)
}

/// Gaussian-weighted local-mean threshold.
///
/// `T(x, y) = Σ w·I − c`, with weights normalized to one and edge-replicated
/// borders. Sums are exact integers (weights in 16.16 fixed point), so the
/// separable evaluation here agrees bit-for-bit with a direct 2-D window sum.
pub fn adaptive_threshold(img: &Raster, window: usize, c: i32, polarity: Polarity) -> Result<Raster> {
    let taps = gaussian_kernel_q16(window)?;
    let radius = (window - 1) / 2;
    let (w, h) = (img.width(), img.height());

    // Horizontal pass: row sums scaled by KERNEL_ONE (fits in u32).
    let mut horiz = vec![0u32; w * h];
    for y in 0..h {
        let row = img.row(y);
        let out = &mut horiz[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0u32;
            if x >= radius && x + radius < w {
                for (k, &t) in taps.iter().enumerate() {
                    acc += t * row[x + k - radius] as u32;
                }
            } else {
                for (k, &t) in taps.iter().enumerate() {
                    let sx = (x as isize + k as isize - radius as isize).clamp(0, w as isize - 1);
                    acc += t * row[sx as usize] as u32;
                }
            }
            *o = acc;
        }
    }

    let mut out = Raster::filled(w, h, 0);
    let mut acc = vec![0u64; w];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0);
        for (k, &t) in taps.iter().enumerate() {
            let sy = (y as isize + k as isize - radius as isize).clamp(0, h as isize - 1) as usize;
            let src = &horiz[sy * w..(sy + 1) * w];
            for (a, &s) in acc.iter_mut().zip(src) {
                *a += t as u64 * s as u64;
            }
        }
        let row = img.row(y).to_vec();
        let dst = &mut out.data_mut()[y * w..(y + 1) * w];
        for x in 0..w {
            dst[x] = mark(row[x], acc[x], c, polarity);
        }
    }
    Ok(out)
}

/// Decides a pixel against `T = sum / KERNEL_ONE² − c` without rounding.
#[inline]
fn mark(intensity: u8, weighted_sum: u64, c: i32, polarity: Polarity) -> u8 {
    let lhs = (intensity as i64 + c as i64) << 32;
    let rhs = weighted_sum as i64;
    let fg = match polarity {
        Polarity::DarkForeground => lhs <= rhs,
        Polarity::LightForeground => lhs > rhs,
    };
    if fg {
        FOREGROUND
    } else {
        0
    }
}

/// Otsu's global threshold.
///
/// Scans all 256 candidates `t` (class 0 is `I ≤ t`) and returns the lowest
/// `t` that maximizes the between-class variance `n0·n1·(μ0 − μ1)²`. A uniform
/// image has no split at all; it returns its own intensity and an empty
/// foreground.
pub fn otsu_threshold(img: &Raster, polarity: Polarity) -> (u8, Raster) {
    let hist = img.histogram();
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    if occupied <= 1 {
        let value = img.data()[0];
        return (value, Raster::filled(img.width(), img.height(), 0));
    }
    let total_n: u64 = img.data().len() as u64;
    let total_s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c as u64).sum();

    let mut best_t = 0u8;
    let mut best_var = -1.0f64;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 0..256usize {
        n0 += hist[t] as u64;
        s0 += t as u64 * hist[t] as u64;
        let var = between_class_variance(n0, s0, total_n - n0, total_s - s0);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }

    let binary = binarize(img, best_t, polarity);
    (best_t, binary)
}

/// `n0·n1·(μ0 − μ1)²`; zero when either class is empty.
pub(crate) fn between_class_variance(n0: u64, s0: u64, n1: u64, s1: u64) -> f64 {
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let mu0 = s0 as f64 / n0 as f64;
    let mu1 = s1 as f64 / n1 as f64;
    n0 as f64 * n1 as f64 * (mu0 - mu1) * (mu0 - mu1)
}

/// Fixed global threshold using the same polarity convention as Otsu.
pub(crate) fn binarize(img: &Raster, t: u8, polarity: Polarity) -> Raster {
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let fg = match polarity {
                Polarity::DarkForeground => v <= t,
                Polarity::LightForeground => v > t,
            };
            if fg {
                FOREGROUND
            } else {
                0
            }
        })
        .collect();
    Raster::new(img.width(), img.height(), data).expect("same shape")
}
