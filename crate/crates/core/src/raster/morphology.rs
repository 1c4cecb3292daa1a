use alloc::vec;

use super::{Raster, FOREGROUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    /// Erode then dilate.
    Open,
    /// Dilate then erode.
    Close,
}

/// Binary opening or closing with a `kw × kh` rectangle anchored at its center.
/// Pixels outside the raster count as background for both primitives.
pub fn morphology(img: &Raster, op: MorphOp, kernel: (usize, usize)) -> Raster {
    match op {
        MorphOp::Open => dilate(&erode(img, kernel), kernel),
        MorphOp::Close => erode(&dilate(img, kernel), kernel),
    }
}

/// Dilation by the reflected rectangle, so that dilation and erosion are
/// adjoint and open/close stay idempotent for even kernel sides too.
pub fn dilate(img: &Raster, kernel: (usize, usize)) -> Raster {
    let (kw, kh) = (kernel.0.max(1), kernel.1.max(1));
    let anchor = (kw - 1 - kw / 2, kh - 1 - kh / 2);
    sweep(img, (kw, kh), anchor, |count, _area, _inside| count > 0)
}

pub fn erode(img: &Raster, kernel: (usize, usize)) -> Raster {
    let (kw, kh) = (kernel.0.max(1), kernel.1.max(1));
    sweep(img, (kw, kh), (kw / 2, kh / 2), |count, area, inside| inside && count == area)
}

/// Evaluates `rule(foreground count, kernel area, window fully inside)` at
/// every anchor position using a summed-area table.
fn sweep(
    img: &Raster,
    kernel: (usize, usize),
    anchor: (usize, usize),
    rule: impl Fn(usize, usize, bool) -> bool,
) -> Raster {
    let (w, h) = (img.width(), img.height());
    let stride = w + 1;
    let mut sums = vec![0u32; stride * (h + 1)];
    for y in 0..h {
        let mut row_acc = 0u32;
        for (x, &v) in img.row(y).iter().enumerate() {
            row_acc += (v != 0) as u32;
            sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row_acc;
        }
    }
    let count = |x0: usize, y0: usize, x1: usize, y1: usize| -> usize {
        (sums[y1 * stride + x1] + sums[y0 * stride + x0] - sums[y0 * stride + x1] - sums[y1 * stride + x0])
            as usize
    };

    let (kw, kh) = (kernel.0 as isize, kernel.1 as isize);
    let area = (kw * kh) as usize;
    let (ax, ay) = (anchor.0 as isize, anchor.1 as isize);
    let (wi, hi) = (w as isize, h as isize);
    let mut out = Raster::filled(w, h, 0);
    for y in 0..hi {
        let y0 = y - ay;
        let y1 = y0 + kh;
        let (cy0, cy1) = (y0.clamp(0, hi) as usize, y1.clamp(0, hi) as usize);
        let dst = &mut out.data_mut()[y as usize * w..(y as usize + 1) * w];
        for x in 0..wi {
            let x0 = x - ax;
            let x1 = x0 + kw;
            let inside = x0 >= 0 && y0 >= 0 && x1 <= wi && y1 <= hi;
            let n = count(x0.clamp(0, wi) as usize, cy0, x1.clamp(0, wi) as usize, cy1);
            if rule(n, area, inside) {
                dst[x as usize] = FOREGROUND;
            }
        }
    }
    out
}
