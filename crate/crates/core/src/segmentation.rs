//! Character segmentation on a rectified plate and the typographic
//! measurements used for ranging.

use alloc::vec::Vec;

use crate::raster::{
    adaptive_threshold, clahe, find_contours, morphology, otsu_threshold, resize_bicubic, MorphOp, Polarity,
    Raster, Rect,
};
use crate::stats::{mean, median, std_dev};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    /// Plates shorter than this many rows are upscaled first.
    pub upscale_below_rows: f64,
    pub min_upscale: f64,
    pub clahe_clip: f64,
    pub clahe_grid: (usize, usize),
    pub threshold_window: usize,
    pub threshold_c: i32,
    pub polarity: Polarity,
    pub morph_kernel: (usize, usize),
    pub filters: CharFilters,
    pub min_chars: usize,
    /// Outlier band in standard deviations about the median height.
    pub outlier_sigmas: f64,
    /// Use the trimmed mean with this even `k` instead of the plain mean.
    pub trimmed_k: Option<usize>,
    /// How far from each plate edge a border run may start, as a fraction.
    pub border_search_fraction: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            upscale_below_rows: 100.0,
            min_upscale: 2.0,
            clahe_clip: 2.0,
            clahe_grid: (8, 8),
            threshold_window: 11,
            threshold_c: 2,
            polarity: Polarity::DarkForeground,
            morph_kernel: (3, 3),
            filters: CharFilters::default(),
            min_chars: 3,
            outlier_sigmas: 2.0,
            trimmed_k: None,
            border_search_fraction: 0.15,
        }
    }
}

/// Geometric gates a candidate box must pass, all relative to plate height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFilters {
    pub height_fraction: (f64, f64),
    pub max_width_over_height: f64,
    pub aspect: (f64, f64),
    pub min_height: usize,
    pub min_width: usize,
    pub vertical_band: (f64, f64),
}

impl Default for CharFilters {
    fn default() -> Self {
        Self {
            height_fraction: (0.2, 0.8),
            max_width_over_height: 1.8,
            aspect: (0.15, 1.5),
            min_height: 5,
            min_width: 2,
            vertical_band: (0.1, 0.9),
        }
    }
}

/// One of the five candidate rejection rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharFilter {
    HeightFraction,
    MergedWidth,
    Aspect,
    MinSize,
    VerticalBand,
}

impl CharFilter {
    pub const ALL: [CharFilter; 5] = [
        CharFilter::HeightFraction,
        CharFilter::MergedWidth,
        CharFilter::Aspect,
        CharFilter::MinSize,
        CharFilter::VerticalBand,
    ];

    pub fn accepts(self, r: &Rect, plate_rows: f64, f: &CharFilters) -> bool {
        let (w, h, y) = (r.w as f64, r.h as f64, r.y as f64);
        match self {
            CharFilter::HeightFraction => h >= f.height_fraction.0 * plate_rows && h <= f.height_fraction.1 * plate_rows,
            CharFilter::MergedWidth => w <= f.max_width_over_height * h,
            CharFilter::Aspect => {
                let ar = w / h;
                ar >= f.aspect.0 && ar <= f.aspect.1
            }
            CharFilter::MinSize => r.h >= f.min_height && r.w >= f.min_width,
            CharFilter::VerticalBand => y >= f.vertical_band.0 * plate_rows && y + h <= f.vertical_band.1 * plate_rows,
        }
    }
}

/// Candidate boxes surviving every filter, in input order.
pub fn filter_candidates(rects: &[Rect], plate_rows: f64, filters: &CharFilters) -> Vec<Rect> {
    rects
        .iter()
        .filter(|r| CharFilter::ALL.iter().all(|f| f.accepts(r, plate_rows, filters)))
        .copied()
        .collect()
}

/// Indices of heights within `sigmas` population standard deviations of the
/// median. Nothing is rejected when all heights are equal.
pub fn reject_outliers(heights: &[f64], sigmas: f64) -> Vec<usize> {
    let sd = std_dev(heights);
    if sd == 0.0 {
        return (0..heights.len()).collect();
    }
    let m = median(heights);
    heights
        .iter()
        .enumerate()
        .filter(|(_, &h)| libm::fabs(h - m) < sigmas * sd)
        .map(|(i, _)| i)
        .collect()
}

/// Mean after dropping the `k/2` largest and `k/2` smallest values.
pub fn trimmed_mean(heights: &[f64], k: usize) -> Result<f64> {
    if k % 2 == 1 {
        return Err(Error::InvalidParameter("trimmed mean k must be even"));
    }
    if k >= heights.len() {
        return Err(Error::InvalidParameter("trimmed mean k must be smaller than the sample"));
    }
    let mut sorted = heights.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(mean(&sorted[k / 2..sorted.len() - k / 2]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binarization {
    Adaptive,
    Otsu,
}

/// Auxiliary typographic measurements, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TypographicFeatures {
    pub stroke_width: f64,
    pub char_spacing: f64,
    pub border_thickness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    /// Kept character boxes sorted left to right.
    pub boxes: Vec<CharBox>,
    pub heights: Vec<f64>,
    pub avg_height: f64,
    /// Population standard deviation of the kept heights.
    pub height_std: f64,
    pub n: usize,
    pub stroke_width: f64,
    pub char_spacing: f64,
    pub border_thickness: f64,
    /// Upscale factor applied before segmentation (1 when none).
    pub scale_applied: f64,
    pub method: Binarization,
}

impl SegmentationResult {
    /// Re-expresses every measurement after stretching the plate by `sx`
    /// horizontally and `sy` vertically (e.g. rectified → source pixels).
    pub fn rescaled(&self, sx: f64, sy: f64) -> SegmentationResult {
        let mut out = self.clone();
        for b in out.boxes.iter_mut() {
            *b = CharBox { x: b.x * sx, y: b.y * sy, w: b.w * sx, h: b.h * sy };
        }
        for h in out.heights.iter_mut() {
            *h *= sy;
        }
        out.avg_height *= sy;
        out.height_std *= sy;
        out.stroke_width *= sx;
        out.char_spacing *= sx;
        out.border_thickness *= 0.5 * (sx + sy);
        out
    }
}

struct MethodResult {
    method: Binarization,
    binary: Raster,
    kept: Vec<Rect>,
}

fn run_method(binary: Raster, method: Binarization, plate_rows: f64, cfg: &SegmentationConfig) -> Option<MethodResult> {
    let cleaned = morphology(&morphology(&binary, MorphOp::Open, cfg.morph_kernel), MorphOp::Close, cfg.morph_kernel);
    let rects: Vec<Rect> = find_contours(&cleaned).iter().map(|c| c.bounding_rect).collect();
    let candidates = filter_candidates(&rects, plate_rows, &cfg.filters);
    if candidates.len() < cfg.min_chars {
        return None;
    }
    let heights: Vec<f64> = candidates.iter().map(|r| r.h as f64).collect();
    let kept = reject_outliers(&heights, cfg.outlier_sigmas)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    Some(MethodResult { method, binary: cleaned, kept })
}

/// Multi-method character segmentation of a rectified grayscale plate.
///
/// Both binarizations (adaptive Gaussian, then Otsu) go through open/close,
/// contour extraction, the five box filters and 2σ height rejection; the one
/// keeping more characters wins, ties going to the adaptive method. The
/// auxiliary features are measured on the Otsu binary, whose strokes are
/// solid. All returned measurements are in the input plate's pixels.
pub fn segment_characters(plate: &Raster, cfg: &SegmentationConfig) -> Option<SegmentationResult> {
    let rows = plate.height() as f64;
    let (work, scale) = if rows < cfg.upscale_below_rows {
        let s = cfg.min_upscale.max(cfg.upscale_below_rows / rows);
        (resize_bicubic(plate, s).ok()?, s)
    } else {
        (plate.clone(), 1.0)
    };
    let plate_rows = work.height() as f64;
    let enhanced = clahe(&work, cfg.clahe_clip, cfg.clahe_grid).ok()?;

    let adaptive = adaptive_threshold(&enhanced, cfg.threshold_window, cfg.threshold_c, cfg.polarity).ok()?;
    let (_, otsu) = otsu_threshold(&enhanced, cfg.polarity);

    let first = run_method(adaptive, Binarization::Adaptive, plate_rows, cfg);
    let second = run_method(otsu, Binarization::Otsu, plate_rows, cfg);
    let otsu_binary = second.as_ref().map(|m| m.binary.clone());

    let best = match (first, second) {
        (Some(a), Some(b)) => {
            if b.kept.len() > a.kept.len() {
                b
            } else {
                a
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return None,
    };
    if best.kept.len() < cfg.min_chars {
        return None;
    }

    let mut kept = best.kept.clone();
    kept.sort_by_key(|r| (r.x, r.y));
    let heights_px: Vec<f64> = kept.iter().map(|r| r.h as f64).collect();
    let avg = match cfg.trimmed_k {
        Some(k) if k < heights_px.len() => trimmed_mean(&heights_px, k).ok()?,
        _ => mean(&heights_px),
    };
    let feature_binary = otsu_binary.unwrap_or(best.binary);
    let features = measure_typographic_features(&feature_binary, &kept, cfg.border_search_fraction);

    let inv = 1.0 / scale;
    Some(SegmentationResult {
        boxes: kept
            .iter()
            .map(|r| CharBox { x: r.x as f64 * inv, y: r.y as f64 * inv, w: r.w as f64 * inv, h: r.h as f64 * inv })
            .collect(),
        heights: heights_px.iter().map(|h| h * inv).collect(),
        avg_height: avg * inv,
        height_std: std_dev(&heights_px) * inv,
        n: kept.len(),
        stroke_width: features.stroke_width * inv,
        char_spacing: features.char_spacing * inv,
        border_thickness: features.border_thickness * inv,
        scale_applied: scale,
        method: best.method,
    })
}

/// Stroke width, character spacing and border thickness from a binary plate.
///
/// * stroke width: median length of maximal horizontal foreground runs inside
///   the character boxes;
/// * spacing: median gap between consecutive boxes ordered by x;
/// * border: lower median of the four foreground runs met walking inward
///   from each plate edge along the middle row and column, each 0 when no
///   foreground starts within `search_fraction` of its edge.
pub fn measure_typographic_features(binary: &Raster, boxes: &[Rect], search_fraction: f64) -> TypographicFeatures {
    let fg = |x: usize, y: usize| binary.get(x, y) != 0;

    let mut runs: Vec<f64> = Vec::new();
    for b in boxes {
        let x_end = (b.x + b.w).min(binary.width());
        let y_end = (b.y + b.h).min(binary.height());
        for y in b.y..y_end {
            let mut len = 0usize;
            for x in b.x..x_end {
                if fg(x, y) {
                    len += 1;
                } else if len > 0 {
                    runs.push(len as f64);
                    len = 0;
                }
            }
            if len > 0 {
                runs.push(len as f64);
            }
        }
    }
    let stroke_width = median(&runs);

    let mut sorted: Vec<&Rect> = boxes.iter().collect();
    sorted.sort_by_key(|r| r.x);
    let gaps: Vec<f64> = sorted
        .windows(2)
        .map(|p| p[1].x as f64 - (p[0].x + p[0].w) as f64)
        .collect();
    let char_spacing = median(&gaps);

    let (w, h) = (binary.width(), binary.height());
    let (mid_row, mid_col) = (h / 2, w / 2);
    let reach_x = libm::ceil(search_fraction * w as f64) as usize;
    let reach_y = libm::ceil(search_fraction * h as f64) as usize;
    let walk = |len: usize, reach: usize, at: &dyn Fn(usize) -> bool| -> f64 {
        let Some(start) = (0..reach.min(len)).find(|&i| at(i)) else {
            return 0.0;
        };
        (start..len).take_while(|&i| at(i)).count() as f64
    };
    let mut borders = [
        walk(w, reach_x, &|i| fg(i, mid_row)),
        walk(w, reach_x, &|i| fg(w - 1 - i, mid_row)),
        walk(h, reach_y, &|i| fg(mid_col, i)),
        walk(h, reach_y, &|i| fg(mid_col, h - 1 - i)),
    ];
    borders.sort_by(|a, b| a.total_cmp(b));
    let border_thickness = borders[1];

    TypographicFeatures { stroke_width, char_spacing, border_thickness }
}
