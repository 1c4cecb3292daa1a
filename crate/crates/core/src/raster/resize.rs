use alloc::vec;
use alloc::vec::Vec;

use super::Raster;
use crate::{Error, Result};

const CUBIC_A: f64 = -0.5;

/// Catmull-Rom (a = −0.5) kernel.
#[inline]
pub(crate) fn cubic_weight(t: f64) -> f64 {
    let t = libm::fabs(t);
    if t <= 1.0 {
        ((CUBIC_A + 2.0) * t - (CUBIC_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((CUBIC_A * t - 5.0 * CUBIC_A) * t + 8.0 * CUBIC_A) * t - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Taps for one output coordinate: four (source index, weight) pairs with
/// edge-replicated indices.
fn taps(dst: usize, scale: f64, len: usize) -> [(usize, f64); 4] {
    let src = (dst as f64 + 0.5) / scale - 0.5;
    let base = libm::floor(src);
    let frac = src - base;
    let mut out = [(0usize, 0.0f64); 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let offset = k as isize - 1;
        let idx = (base as isize + offset).clamp(0, len as isize - 1) as usize;
        *slot = (idx, cubic_weight(frac - offset as f64));
    }
    out
}

/// Bicubic resampling by `scale` with pixel-center alignment. Output
/// dimensions are `round(width · scale) × round(height · scale)`.
pub fn resize_bicubic(img: &Raster, scale: f64) -> Result<Raster> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NonPositive("resize scale"));
    }
    let out_w = libm::round(img.width() as f64 * scale) as usize;
    let out_h = libm::round(img.height() as f64 * scale) as usize;
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParameter("resized raster would be empty"));
    }
    let (w, h) = (img.width(), img.height());

    let col_taps: Vec<_> = (0..out_w).map(|x| taps(x, scale, w)).collect();
    let mut horiz = vec![0.0f64; out_w * h];
    for y in 0..h {
        let row = img.row(y);
        for (x, t) in col_taps.iter().enumerate() {
            horiz[y * out_w + x] = t.iter().map(|&(i, wt)| row[i] as f64 * wt).sum();
        }
    }

    let mut out = Raster::filled(out_w, out_h, 0);
    for y in 0..out_h {
        let t = taps(y, scale, h);
        for x in 0..out_w {
            let v: f64 = t.iter().map(|&(j, wt)| horiz[j * out_w + x] * wt).sum();
            out.set(x, y, libm::round(v).clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scale_is_identity() {
        let img = Raster::from_fn(13, 7, |x, y| (x * 19 + y * 31) as u8);
        assert_eq!(resize_bicubic(&img, 1.0).unwrap(), img);
    }

    #[test]
    fn constants_survive_any_scale() {
        let img = Raster::filled(9, 5, 201);
        for s in [0.3, 0.5, 1.7, 2.0, 3.33] {
            let r = resize_bicubic(&img, s).unwrap();
            assert!(r.data().iter().all(|&v| v == 201), "scale {s}");
        }
    }

    #[test]
    fn rejects_bad_scale() {
        let img = Raster::filled(2, 2, 0);
        assert!(resize_bicubic(&img, 0.0).is_err());
        assert!(resize_bicubic(&img, 0.01).is_err());
    }

    #[test]
    fn ramp_upscale_matches_direct_kernel_evaluation() {
        let img = Raster::from_fn(4, 4, |x, y| (10 + 20 * x + 5 * y) as u8);
        let out = resize_bicubic(&img, 2.0).unwrap();
        assert_eq!((out.width(), out.height()), (8, 8));
        // Direct 2-D evaluation of the Catmull-Rom polynomial.
        let k = |t: f64| {
            let t = t.abs();
            if t <= 1.0 {
                1.5 * t * t * t - 2.5 * t * t + 1.0
            } else if t < 2.0 {
                -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
            } else {
                0.0
            }
        };
        for oy in 2..6 {
            for ox in 2..6 {
                let sx = (ox as f64 + 0.5) / 2.0 - 0.5;
                let sy = (oy as f64 + 0.5) / 2.0 - 0.5;
                let mut acc = 0.0;
                for j in -1..3 {
                    for i in -1..3 {
                        let px = (sx.floor() as i64 + i).clamp(0, 3) as usize;
                        let py = (sy.floor() as i64 + j).clamp(0, 3) as usize;
                        acc += img.get(px, py) as f64 * k(sx - (sx.floor() + i as f64)) * k(sy - (sy.floor() + j as f64));
                    }
                }
                assert_eq!(out.get(ox, oy), acc.round() as u8, "({ox}, {oy})");
            }
        }
    }
}
