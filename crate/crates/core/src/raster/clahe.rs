use alloc::vec::Vec;

use super::Raster;
use crate::{Error, Result};

/// Contrast-limited adaptive histogram equalization.
///
/// The image is split into `tile_grid = (cols, rows)` tiles. Each tile's
/// histogram is clipped at `clip_limit · tile_pixels / 256` with the excess
/// spread evenly over all bins, and its CDF becomes a lookup table. Output
/// pixels blend the four nearest tile tables bilinearly, with tile centers as
/// the interpolation nodes and edge tiles replicated outward. A tile holding a
/// single intensity has nothing to equalize and maps through unchanged.
///
/// Images smaller than the tile grid fall back to [`equalize_histogram`].
pub fn clahe(img: &Raster, clip_limit: f64, tile_grid: (usize, usize)) -> Result<Raster> {
    let (cols, rows) = tile_grid;
    if cols == 0 || rows == 0 {
        return Err(Error::InvalidParameter("CLAHE tile grid must be at least 1x1"));
    }
    if !(clip_limit > 0.0) {
        return Err(Error::NonPositive("CLAHE clip limit"));
    }
    let (w, h) = (img.width(), img.height());
    if w < cols || h < rows {
        return Ok(equalize_histogram(img));
    }

    let tile_w = w as f64 / cols as f64;
    let tile_h = h as f64 / rows as f64;
    let x_edges: Vec<usize> = (0..=cols).map(|i| libm::round(i as f64 * tile_w) as usize).collect();
    let y_edges: Vec<usize> = (0..=rows).map(|j| libm::round(j as f64 * tile_h) as usize).collect();

    let mut luts: Vec<[u8; 256]> = Vec::with_capacity(cols * rows);
    for ty in 0..rows {
        for tx in 0..cols {
            let mut hist = [0u32; 256];
            for y in y_edges[ty]..y_edges[ty + 1] {
                for &v in &img.row(y)[x_edges[tx]..x_edges[tx + 1]] {
                    hist[v as usize] += 1;
                }
            }
            luts.push(clipped_lut(&hist, clip_limit));
        }
    }

    let mut out = Raster::filled(w, h, 0);
    for y in 0..h {
        let tyf = (y as f64 + 0.5) / tile_h - 0.5;
        let ty0 = libm::floor(tyf);
        let ya = tyf - ty0;
        let ty1 = clamp_tile(ty0 as isize + 1, rows);
        let ty0 = clamp_tile(ty0 as isize, rows);
        for x in 0..w {
            let txf = (x as f64 + 0.5) / tile_w - 0.5;
            let tx0 = libm::floor(txf);
            let xa = txf - tx0;
            let tx1 = clamp_tile(tx0 as isize + 1, cols);
            let tx0 = clamp_tile(tx0 as isize, cols);
            let v = img.get(x, y) as usize;
            let top = luts[ty0 * cols + tx0][v] as f64 * (1.0 - xa) + luts[ty0 * cols + tx1][v] as f64 * xa;
            let bot = luts[ty1 * cols + tx0][v] as f64 * (1.0 - xa) + luts[ty1 * cols + tx1][v] as f64 * xa;
            let value = top * (1.0 - ya) + bot * ya;
            out.set(x, y, libm::round(value).clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

#[inline]
fn clamp_tile(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Lookup table of one tile: clip, redistribute, then scale the CDF to 255.
pub(crate) fn clipped_lut(hist: &[u32; 256], clip_limit: f64) -> [u8; 256] {
    let total: u32 = hist.iter().sum();
    let mut lut = [0u8; 256];
    if hist.iter().filter(|&&c| c > 0).count() <= 1 {
        for (v, l) in lut.iter_mut().enumerate() {
            *l = v as u8;
        }
        return lut;
    }
    let limit = libm::fmax(1.0, libm::floor(clip_limit * total as f64 / 256.0));
    let limit = if limit >= u32::MAX as f64 { u32::MAX } else { limit as u32 };

    let mut clipped = *hist;
    let mut excess: u32 = 0;
    for c in clipped.iter_mut() {
        if *c > limit {
            excess += *c - limit;
            *c = limit;
        }
    }
    let per_bin = excess / 256;
    let mut residual = excess % 256;
    for c in clipped.iter_mut() {
        *c += per_bin;
    }
    if residual > 0 {
        let step = (256 / residual as usize).max(1);
        let mut i = 0;
        while i < 256 && residual > 0 {
            clipped[i] += 1;
            residual -= 1;
            i += step;
        }
    }

    let scale = 255.0 / total as f64;
    let mut cdf: u64 = 0;
    for (v, l) in lut.iter_mut().enumerate() {
        cdf += clipped[v] as u64;
        *l = libm::round(cdf as f64 * scale).clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Global histogram equalization: `v ↦ round(255 · cdf(v) / N)`, with the
/// identity for single-intensity images.
pub fn equalize_histogram(img: &Raster) -> Raster {
    let hist = img.histogram();
    let lut = clipped_lut(&hist, f64::INFINITY);
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    Raster::new(img.width(), img.height(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_unchanged() {
        let img = Raster::filled(64, 64, 93);
        assert_eq!(clahe(&img, 2.0, (8, 8)).unwrap(), img);
    }

    #[test]
    fn parameter_errors() {
        let img = Raster::filled(16, 16, 1);
        assert!(clahe(&img, 2.0, (0, 8)).is_err());
        assert!(clahe(&img, 0.0, (8, 8)).is_err());
    }

    #[test]
    fn tiny_image_falls_back_to_global_equalization() {
        let img = Raster::from_fn(4, 4, |x, y| (x * 16 + y) as u8);
        assert_eq!(clahe(&img, 2.0, (8, 8)).unwrap(), equalize_histogram(&img));
    }

    /// Independent clipped-CDF table for one tile's pixel list.
    fn reference_table(pixels: &[u8], clip: f64) -> [u8; 256] {
        let n = pixels.len() as f64;
        let mut hist = [0f64; 256];
        for &p in pixels {
            hist[p as usize] += 1.0;
        }
        let limit = (clip * n / 256.0).floor().max(1.0);
        let excess: f64 = hist.iter().map(|&c| (c - limit).max(0.0)).sum();
        let excess = excess as u32;
        let per = (excess / 256) as f64;
        let mut residual = excess % 256;
        let mut bins: [f64; 256] = [0.0; 256];
        for v in 0..256 {
            bins[v] = hist[v].min(limit) + per;
        }
        if residual > 0 {
            let step = (256 / residual as usize).max(1);
            let mut i = 0;
            while i < 256 && residual > 0 {
                bins[i] += 1.0;
                residual -= 1;
                i += step;
            }
        }
        let mut out = [0u8; 256];
        let mut acc = 0.0;
        for v in 0..256 {
            acc += bins[v];
            out[v] = (acc * 255.0 / n).round() as u8;
        }
        out
    }

    #[test]
    fn two_tile_centers_match_clipped_cdf() {
        // 66x20 image, grid (2, 1): tiles are 33 px wide; column 16 is the left
        // tile center, column 49 the right one. Interpolation weight there is 1.
        let img = Raster::from_fn(66, 20, |x, y| {
            if x < 33 {
                (x + y) as u8 * 2
            } else {
                160 + ((x - 33) + y) as u8
            }
        });
        let out = clahe(&img, 2.0, (2, 1)).unwrap();
        for (tile, cx) in [(0usize, 16usize), (1, 49)] {
            let pixels: Vec<u8> = (0..20)
                .flat_map(|y| (tile * 33..tile * 33 + 33).map(move |x| (x, y)))
                .map(|(x, y)| img.get(x, y))
                .collect();
            let table = reference_table(&pixels, 2.0);
            for y in 0..20 {
                assert_eq!(out.get(cx, y), table[img.get(cx, y) as usize], "tile {tile} row {y}");
            }
        }
    }

    #[test]
    fn unlimited_single_tile_is_global_equalization() {
        let img = Raster::from_fn(40, 30, |x, y| ((x * x + 3 * y) % 200) as u8);
        let out = clahe(&img, 1e9, (1, 1)).unwrap();
        // Reference: plain CDF equalization computed from scratch.
        let n = img.data().len() as f64;
        let mut counts = [0u32; 256];
        img.data().iter().for_each(|&v| counts[v as usize] += 1);
        for (i, &v) in img.data().iter().enumerate() {
            let below: u32 = counts[..=v as usize].iter().sum();
            let expected = (below as f64 * 255.0 / n).round() as u8;
            assert_eq!(out.data()[i], expected);
        }
    }
}
