use alloc::vec;
use alloc::vec::Vec;

use super::{Raster, FOREGROUND};

/// Canny edge detector: 3×3 Sobel gradients with L1 magnitude, non-maximum
/// suppression along the gradient quantized to 0°/45°/90°/135°, then
/// 8-connected hysteresis. Pixels above `high` seed edges; pixels above
/// `low` extend them.
pub fn canny(img: &Raster, low: u8, high: u8) -> Raster {
    let (low, high) = if low <= high { (low, high) } else { (high, low) };
    let (w, h) = (img.width(), img.height());
    let mut mag = vec![0i32; w * h];
    let mut dir = vec![0u8; w * h];

    for y in 0..h {
        let (up, mid, down) = (img.row(y.saturating_sub(1)), img.row(y), img.row((y + 1).min(h - 1)));
        for x in 0..w {
            let (l, r) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let p = |row: &[u8], i: usize| row[i] as i32;
            let gx = (p(up, r) + 2 * p(mid, r) + p(down, r)) - (p(up, l) + 2 * p(mid, l) + p(down, l));
            let gy = (p(down, l) + 2 * p(down, x) + p(down, r)) - (p(up, l) + 2 * p(up, x) + p(up, r));
            let i = y * w + x;
            mag[i] = gx.abs() + gy.abs();
            dir[i] = quantize_direction(gx, gy);
        }
    }

    // 0 = suppressed, 1 = weak candidate, 2 = strong.
    let mut class = vec![0u8; w * h];
    let at = |x: isize, y: isize| -> i32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut stack: Vec<usize> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= low as i32 {
                continue;
            }
            let (dx, dy) = match dir[i] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = at(xi - dx, yi - dy);
            let after = at(xi + dx, yi + dy);
            if m > before && m >= after {
                if m > high as i32 {
                    class[i] = 2;
                    stack.push(i);
                } else {
                    class[i] = 1;
                }
            }
        }
    }

    let mut out = Raster::filled(w, h, 0);
    for &i in &stack {
        out.data_mut()[i] = FOREGROUND;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 {
                    class[j] = 2;
                    out.data_mut()[j] = FOREGROUND;
                    stack.push(j);
                }
            }
        }
    }
    out
}

/// Gradient direction bin: 0 horizontal gradient, 1 the y = x diagonal,
/// 2 vertical, 3 the y = −x diagonal.
fn quantize_direction(gx: i32, gy: i32) -> u8 {
    // tan(22.5°) ≈ 0.41421 as 13573 / 32768.
    const TAN22: i64 = 13573;
    let (ax, ay) = ((gx as i64).abs(), (gy as i64).abs());
    if ay * 32768 <= ax * TAN22 {
        0
    } else if ax * 32768 <= ay * TAN22 {
        2
    } else if (gx > 0) == (gy > 0) {
        1
    } else {
        3
    }
}
