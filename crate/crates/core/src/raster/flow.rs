use alloc::vec;
use alloc::vec::Vec;

use super::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkConfig {
    /// Pyramid levels including the full-resolution image.
    pub levels: usize,
    /// Odd integration window side.
    pub window: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the update step, in pixels.
    pub epsilon: f64,
    /// Minimum eigenvalue of the normalized structure tensor.
    pub min_eigenvalue: f64,
}

impl Default for LkConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            window: 15,
            max_iterations: 30,
            epsilon: 0.01,
            min_eigenvalue: 1e-4,
        }
    }
}

/// Tracked position in pixel-index coordinates (pixel centers at integers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub x: f64,
    pub y: f64,
    pub status: bool,
}

struct Level {
    w: usize,
    h: usize,
    px: Vec<f32>,
}

impl Level {
    fn from_raster(r: &Raster) -> Self {
        Self {
            w: r.width(),
            h: r.height(),
            px: r.data().iter().map(|&v| v as f32).collect(),
        }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f32 {
        let cx = x.clamp(0, self.w as isize - 1) as usize;
        let cy = y.clamp(0, self.h as isize - 1) as usize;
        self.px[cy * self.w + cx]
    }

    #[inline]
    fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = libm::floor(x);
        let y0 = libm::floor(y);
        let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
        let (xi, yi) = (x0 as isize, y0 as isize);
        let a = self.at(xi, yi) * (1.0 - fx) + self.at(xi + 1, yi) * fx;
        let b = self.at(xi, yi + 1) * (1.0 - fx) + self.at(xi + 1, yi + 1) * fx;
        (a * (1.0 - fy) + b * fy) as f64
    }

    /// 5-tap binomial blur followed by 2× decimation.
    fn down(&self) -> Self {
        const K: [f32; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
        let (w2, h2) = (self.w.div_ceil(2).max(1), self.h.div_ceil(2).max(1));
        let mut tmp = vec![0.0f32; w2 * self.h];
        for y in 0..self.h {
            for x2 in 0..w2 {
                let x = (2 * x2) as isize;
                let s: f32 = (0..5).map(|k| K[k] * self.at(x + k as isize - 2, y as isize)).sum();
                tmp[y * w2 + x2] = s / 16.0;
            }
        }
        let mut px = vec![0.0f32; w2 * h2];
        for y2 in 0..h2 {
            for x in 0..w2 {
                let y = (2 * y2) as isize;
                let s: f32 = (0..5)
                    .map(|k| {
                        let yy = (y + k as isize - 2).clamp(0, self.h as isize - 1) as usize;
                        K[k] * tmp[yy * w2 + x]
                    })
                    .sum();
                px[y2 * w2 + x] = s / 16.0;
            }
        }
        Self { w: w2, h: h2, px }
    }
}

fn pyramid(r: &Raster, levels: usize) -> Vec<Level> {
    let mut pyr = vec![Level::from_raster(r)];
    while pyr.len() < levels.max(1) {
        let next = pyr.last().expect("non-empty").down();
        pyr.push(next);
    }
    pyr
}

/// Template intensities and central-difference gradients over the window.
struct Patch {
    values: Vec<f64>,
    grads: Vec<(f64, f64)>,
    /// Unnormalized tensor entries (gxx, gxy, gyy).
    tensor: [f64; 3],
    /// Smaller eigenvalue of the tensor normalized by window area and 255².
    min_eig: f64,
}

fn patch(level: &Level, x: f64, y: f64, r: isize) -> Patch {
    let side = (2 * r + 1) as usize;
    let mut values = Vec::with_capacity(side * side);
    let mut grads = Vec::with_capacity(side * side);
    let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
    for j in -r..=r {
        for i in -r..=r {
            let (px, py) = (x + i as f64, y + j as f64);
            let ix = 0.5 * (level.sample(px + 1.0, py) - level.sample(px - 1.0, py));
            let iy = 0.5 * (level.sample(px, py + 1.0) - level.sample(px, py - 1.0));
            values.push(level.sample(px, py));
            grads.push((ix, iy));
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
        }
    }
    let n = (side * side) as f64 * 255.0 * 255.0;
    let (a, b, c) = (gxx / n, gxy / n, gyy / n);
    let tr = a + c;
    let det = a * c - b * b;
    let min_eig = 0.5 * (tr - libm::sqrt(libm::fmax(tr * tr - 4.0 * det, 0.0)));
    Patch { values, grads, tensor: [gxx, gxy, gyy], min_eig }
}

/// Pyramidal Lucas-Kanade sparse flow.
///
/// A point is lost (`status = false`) when the structure tensor of its window
/// is near-singular in either frame or when it leaves the image.
pub fn lk_flow(prev: &Raster, next: &Raster, points: &[(f64, f64)], cfg: &LkConfig) -> Result<Vec<FlowPoint>> {
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(Error::DimensionMismatch {
            expected: prev.width() * prev.height(),
            actual: next.width() * next.height(),
        });
    }
    if cfg.window < 3 || cfg.window.is_multiple_of(2) {
        return Err(Error::InvalidParameter("LK window must be odd and >= 3"));
    }
    let levels = cfg.levels.max(1);
    let prev_pyr = pyramid(prev, levels);
    let next_pyr = pyramid(next, levels);
    let r = (cfg.window / 2) as isize;
    let (w, h) = (prev.width() as f64, prev.height() as f64);

    let mut out = Vec::with_capacity(points.len());
    for &(px, py) in points {
        let mut status = true;
        let mut g = (0.0f64, 0.0f64);
        for lvl in (0..levels).rev() {
            let scale = (1u32 << lvl) as f64;
            let (lx, ly) = (px / scale, py / scale);
            let pl = &prev_pyr[lvl];
            let nl = &next_pyr[lvl];
            let tmpl = patch(pl, lx, ly, r);
            if tmpl.min_eig < cfg.min_eigenvalue {
                if lvl == 0 {
                    status = false;
                }
                if lvl > 0 {
                    g = (2.0 * g.0, 2.0 * g.1);
                }
                continue;
            }
            let tensor = tmpl.tensor;
            let det = tensor[0] * tensor[2] - tensor[1] * tensor[1];
            let mut d = (0.0f64, 0.0f64);
            for _ in 0..cfg.max_iterations {
                let (mut bx, mut by) = (0.0, 0.0);
                let mut k = 0;
                for j in -r..=r {
                    for i in -r..=r {
                        let (sx, sy) = (lx + i as f64 + g.0 + d.0, ly + j as f64 + g.1 + d.1);
                        let diff = tmpl.values[k] - nl.sample(sx, sy);
                        bx += diff * tmpl.grads[k].0;
                        by += diff * tmpl.grads[k].1;
                        k += 1;
                    }
                }
                let step = (
                    (tensor[2] * bx - tensor[1] * by) / det,
                    (tensor[0] * by - tensor[1] * bx) / det,
                );
                d = (d.0 + step.0, d.1 + step.1);
                if libm::hypot(step.0, step.1) < cfg.epsilon {
                    break;
                }
            }
            g = if lvl > 0 {
                (2.0 * (g.0 + d.0), 2.0 * (g.1 + d.1))
            } else {
                (g.0 + d.0, g.1 + d.1)
            };
        }
        let (nx, ny) = (px + g.0, py + g.1);
        if !(nx >= 0.0 && ny >= 0.0 && nx <= w - 1.0 && ny <= h - 1.0) || !nx.is_finite() || !ny.is_finite() {
            status = false;
        } else if status
            && patch(&next_pyr[0], nx, ny, r).min_eig < cfg.min_eigenvalue {
                status = false;
            }
        out.push(FlowPoint { x: nx, y: ny, status });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Smooth deterministic texture.
    fn texture(w: usize, h: usize, dx: f64, dy: f64) -> Raster {
        Raster::from_fn(w, h, |x, y| {
            let (u, v) = (x as f64 - dx, y as f64 - dy);
            let s = (u * 0.21).sin() * (v * 0.17).cos() + 0.6 * (u * 0.07 + v * 0.11).sin() + 0.3 * ((u - v) * 0.13).cos();
            (128.0 + 60.0 * s).round().clamp(0.0, 255.0) as u8
        })
    }

    #[test]
    fn no_motion() {
        let img = texture(96, 96, 0.0, 0.0);
        let pts = [(30.0, 30.0), (48.0, 60.0), (70.0, 40.0)];
        for f in lk_flow(&img, &img, &pts, &LkConfig::default()).unwrap().iter().zip(pts) {
            let (p, (x, y)) = f;
            assert!(p.status);
            assert!((p.x - x).abs() < 1e-6 && (p.y - y).abs() < 1e-6);
        }
    }

    #[test]
    fn recovers_integer_translation() {
        let a = texture(128, 128, 0.0, 0.0);
        let b = texture(128, 128, 2.0, 3.0);
        let pts = [(40.0, 40.0), (64.0, 64.0), (80.0, 50.0), (50.0, 85.0)];
        for (p, (x, y)) in lk_flow(&a, &b, &pts, &LkConfig::default()).unwrap().iter().zip(pts) {
            assert!(p.status);
            assert!((p.x - x - 2.0).abs() < 0.25, "dx {}", p.x - x);
            assert!((p.y - y - 3.0).abs() < 0.25, "dy {}", p.y - y);
        }
    }

    #[test]
    fn flat_region_is_lost() {
        let img = Raster::filled(64, 64, 90);
        let f = lk_flow(&img, &img, &[(32.0, 32.0)], &LkConfig::default()).unwrap();
        assert!(!f[0].status);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = Raster::filled(10, 10, 0);
        let b = Raster::filled(10, 11, 0);
        assert!(lk_flow(&a, &b, &[], &LkConfig::default()).is_err());
    }
}
