//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use platerange_core::raster::{gaussian_kernel_q16, Polarity, Raster};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adaptive threshold evaluated as a direct 2-D weighted window sum.
pub fn adaptive_direct(img: &Raster, window: usize, c: i32, polarity: Polarity) -> Raster {
    let taps = gaussian_kernel_q16(window).unwrap();
    let r = (window / 2) as isize;
    Raster::from_fn(img.width(), img.height(), |x, y| {
        let mut sum = 0u64;
        for (j, &ty) in taps.iter().enumerate() {
            for (i, &tx) in taps.iter().enumerate() {
                let v = img.get_clamped(x as isize + i as isize - r, y as isize + j as isize - r);
                sum += ty as u64 * tx as u64 * v as u64;
            }
        }
        let lhs = (img.get(x, y) as i64 + c as i64) << 32;
        let fg = match polarity {
            Polarity::DarkForeground => lhs <= sum as i64,
            Polarity::LightForeground => lhs > sum as i64,
        };
        if fg {
            255
        } else {
            0
        }
    })
}

/// Lowest threshold maximizing between-class variance, each candidate
/// evaluated from scratch over every pixel.
pub fn otsu_exhaustive(img: &Raster) -> u8 {
    let mut best = (0u8, -1.0f64);
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for &v in img.data() {
            if v <= t {
                n0 += 1;
                s0 += v as u64;
            } else {
                n1 += 1;
                s1 += v as u64;
            }
        }
        let var = if n0 == 0 || n1 == 0 {
            0.0
        } else {
            let (m0, m1) = (s0 as f64 / n0 as f64, s1 as f64 / n1 as f64);
            n0 as f64 * n1 as f64 * (m0 - m1) * (m0 - m1)
        };
        if var > best.1 {
            best = (t, var);
        }
    }
    best.0
}

/// One 8-connected foreground component found by breadth-first flood fill.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Component {
    /// Bounding rectangle as (x, y, w, h).
    pub rect: (usize, usize, usize, usize),
    pub area: usize,
    /// Component pixels 4-adjacent to background connected to the image exterior
    /// without crossing this component.
    pub outer_border: BTreeSet<(i32, i32)>,
    /// Not enclosed by any other foreground.
    pub external: bool,
}

pub fn flood_components(img: &Raster) -> Vec<Component> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let fg = |x: i32, y: i32| x >= 0 && y >= 0 && x < w && y < h && img.get(x as usize, y as usize) != 0;
    let exterior_all = exterior(w, h, |x, y| !fg(x, y));
    let mut label = vec![usize::MAX; (w * h) as usize];
    let mut out = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if !fg(sx, sy) || label[(sy * w + sx) as usize] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut pixels = Vec::new();
            let mut queue = VecDeque::from([(sx, sy)]);
            label[(sy * w + sx) as usize] = id;
            while let Some((x, y)) = queue.pop_front() {
                pixels.push((x, y));
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if fg(nx, ny) && label[(ny * w + nx) as usize] == usize::MAX {
                            label[(ny * w + nx) as usize] = id;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
            let inside = |x: i32, y: i32| x >= 0 && y >= 0 && x < w && y < h && label[(y * w + x) as usize] == id;
            let outside = exterior(w, h, |x, y| !inside(x, y));
            let n4 = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            let touches = |set: &dyn Fn(i32, i32) -> bool, x: i32, y: i32| n4.iter().any(|(dx, dy)| set(x + dx, y + dy));
            let outer_border = pixels
                .iter()
                .copied()
                .filter(|&(x, y)| touches(&|a, b| outside(a, b), x, y))
                .collect();
            let external = pixels.iter().any(|&(x, y)| touches(&|a, b| exterior_all(a, b), x, y));
            let (x0, x1) = (pixels.iter().map(|p| p.0).min().unwrap(), pixels.iter().map(|p| p.0).max().unwrap());
            let (y0, y1) = (pixels.iter().map(|p| p.1).min().unwrap(), pixels.iter().map(|p| p.1).max().unwrap());
            out.push(Component {
                rect: (x0 as usize, y0 as usize, (x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize),
                area: pixels.len(),
                outer_border,
                external,
            });
        }
    }
    out
}

/// Cells reachable from beyond the image border through 4-connected `open` cells.
fn exterior(w: i32, h: i32, open: impl Fn(i32, i32) -> bool) -> impl Fn(i32, i32) -> bool {
    let pw = w + 2;
    let mut seen = vec![false; (pw * (h + 2)) as usize];
    let idx = move |x: i32, y: i32| ((y + 1) * pw + x + 1) as usize;
    let mut queue = VecDeque::from([(-1, -1)]);
    seen[idx(-1, -1)] = true;
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < -1 || ny < -1 || nx > w || ny > h || seen[idx(nx, ny)] {
                continue;
            }
            let border = nx < 0 || ny < 0 || nx >= w || ny >= h;
            if border || open(nx, ny) {
                seen[idx(nx, ny)] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    move |x, y| x >= -1 && y >= -1 && x <= w && y <= h && seen[idx(x, y)]
}

pub fn random_binary(w: usize, h: usize, density: f64, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = (density * u32::MAX as f64) as u32;
    Raster::from_fn(w, h, |_, _| if rng.next_u32() < cut { 255 } else { 0 })
}

pub fn random_gray(w: usize, h: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Raster::from_fn(w, h, |_, _| rng.next_u32() as u8)
}

/// Smooth band-limited texture sampled with a sub-pixel offset.
pub fn texture(w: usize, h: usize, dx: f64, dy: f64) -> Raster {
    Raster::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 - dx, y as f64 - dy);
        let s = (0.21 * u).sin() * (0.17 * v).cos() + 0.5 * (0.11 * u + 0.13 * v).sin() + 0.3 * (0.07 * u - 0.23 * v).cos();
        (128.0 + 60.0 * s).round().clamp(0.0, 255.0) as u8
    })
}
