//! Plate localisation: candidate search over an adaptive binarization,
//! rotated-rect fitting, rectification and verification.

use alloc::vec::Vec;

use crate::raster::{
    adaptive_threshold, find_contours, find_contours_min_rect, min_area_rect, morphology, order_corners, otsu_threshold, solve_homography,
    warp_perspective, Contour, MorphOp, Point, Polarity, Raster, RotatedRect,
};
use crate::segmentation::{segment_characters, SegmentationConfig, SegmentationResult};

/// Frame area at which `a_min` is specified (1280×720).
pub const REFERENCE_FRAME_AREA: f64 = 921_600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectionMode {
    #[default]
    Strict,
    Permissive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub foreground_fraction: (f64, f64),
    pub min_transitions: usize,
    /// Upper bound on middle-row transitions per column of width.
    pub max_transition_density: f64,
    pub min_std: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { foreground_fraction: (0.10, 0.60), min_transitions: 3, max_transition_density: 0.1, min_std: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    /// Minimum candidate box area in px² at the reference resolution.
    pub a_min: f64,
    pub strict_ar: (f64, f64),
    pub permissive_ar: (f64, f64),
    pub max_contours: usize,
    /// Minimum rectified size as (rows, cols).
    pub min_warp: (usize, usize),
    pub small_plate_rows: f64,
    pub mode_switch_frames: u32,
    pub warp_width: usize,
    pub threshold_window: usize,
    pub threshold_c: i32,
    pub polarity: Polarity,
    pub min_chars: usize,
    pub verify: VerifyConfig,
    pub segmentation: SegmentationConfig,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            a_min: 500.0,
            strict_ar: (1.5, 4.0),
            permissive_ar: (1.2, 5.0),
            max_contours: 30,
            min_warp: (20, 60),
            small_plate_rows: 80.0,
            mode_switch_frames: 30,
            warp_width: 400,
            threshold_window: 11,
            threshold_c: 2,
            polarity: Polarity::DarkForeground,
            min_chars: 3,
            verify: VerifyConfig::default(),
            segmentation: SegmentationConfig::default(),
        }
    }
}

impl DetectionConfig {
    /// `a_min` scaled to a frame of the given size.
    pub fn scaled_a_min(&self, width: usize, height: usize) -> f64 {
        self.a_min * (width * height) as f64 / REFERENCE_FRAME_AREA
    }

    pub fn aspect_range(&self, mode: DetectionMode) -> (f64, f64) {
        match mode {
            DetectionMode::Strict => self.strict_ar,
            DetectionMode::Permissive => self.permissive_ar,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let (s, p) = (self.strict_ar, self.permissive_ar);
        if !(s.0 < s.1 && p.0 < p.1) {
            return Err(crate::Error::InvalidParameter("aspect ranges must be ordered low < high"));
        }
        if p.0 > s.0 || p.1 < s.1 {
            return Err(crate::Error::InvalidParameter("permissive aspect range must contain the strict range"));
        }
        Ok(())
    }
}

/// Plate corners in source pixels, clockwise from top-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateQuad {
    pub corners: [Point; 4],
    pub rotated_rect: RotatedRect,
}

impl PlateQuad {
    pub fn translated(&self, dx: f64, dy: f64) -> PlateQuad {
        let shift = |p: Point| Point::new(p.x + dx, p.y + dy);
        let mut rr = self.rotated_rect;
        rr.center = shift(rr.center);
        PlateQuad { corners: self.corners.map(shift), rotated_rect: rr }
    }

    /// Axis-aligned bounds as (min x, min y, max x, max y).
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.corners.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub quad: PlateQuad,
    pub warped: Raster,
    /// Segmentation computed during acceptance (small plates only).
    pub segmentation: Option<SegmentationResult>,
    /// Source pixels per rectified pixel as (horizontal, vertical).
    pub source_scale: (f64, f64),
}

/// Locates the first plate-like candidate in `frame`.
pub fn detect_plate(frame: &Raster, cfg: &DetectionConfig, mode: DetectionMode) -> Option<Detection> {
    let binary = adaptive_threshold(frame, cfg.threshold_window, cfg.threshold_c, cfg.polarity).ok()?;
    let a_min = cfg.scaled_a_min(frame.width(), frame.height());
    let min_rect = libm::ceil(a_min).max(0.0) as usize;
    let mut contours: Vec<(f64, Contour)> = find_contours_min_rect(&binary, min_rect)
        .into_iter()
        .filter(|c| c.is_external)
        .map(|c| (c.polygon_area(), c))
        .collect();
    contours.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.area.cmp(&a.1.area)));
    contours.truncate(cfg.max_contours);

    let (ar_lo, ar_hi) = cfg.aspect_range(mode);
    for (_, c) in &contours {
        let r = c.bounding_rect;
        if ((r.w * r.h) as f64) < a_min {
            continue;
        }
        let kw = 3usize.max(libm::round(0.2 * r.w as f64) as usize);
        let kh = 3usize.max(libm::round(0.1 * r.h as f64) as usize);
        let Some(rect) = fit_candidate(&binary, r, (kw, kh)) else { continue };
        let ar = rect.aspect_ratio();
        if !(ar >= ar_lo && ar <= ar_hi) {
            continue;
        }
        if let Some(det) = rectify_and_accept(frame, rect, cfg) {
            return Some(det);
        }
    }
    None
}

/// Closes the candidate's region of interest and fits a rotated rectangle to
/// its largest sub-contour. The ROI is zero-padded by the kernel size so the
/// closing does not erode the candidate at the ROI boundary.
fn fit_candidate(binary: &Raster, r: crate::raster::Rect, kernel: (usize, usize)) -> Option<RotatedRect> {
    let (px, py) = kernel;
    let mut roi = Raster::filled(r.w + 2 * px, r.h + 2 * py, 0);
    for y in 0..r.h {
        for x in 0..r.w {
            roi.set(x + px, y + py, binary.get(r.x + x, r.y + y));
        }
    }
    let closed = morphology(&roi, MorphOp::Close, kernel);
    let largest = find_contours(&closed)
        .into_iter()
        .max_by(|a, b| a.polygon_area().total_cmp(&b.polygon_area()).then(a.area.cmp(&b.area)))?;
    let ox = r.x as f64 - px as f64;
    let oy = r.y as f64 - py as f64;
    let mut pts = Vec::with_capacity(largest.points.len() * 4);
    for &(x, y) in &largest.points {
        let (x, y) = (x as f64 + ox, y as f64 + oy);
        pts.extend_from_slice(&[
            Point::new(x, y),
            Point::new(x + 1.0, y),
            Point::new(x, y + 1.0),
            Point::new(x + 1.0, y + 1.0),
        ]);
    }
    min_area_rect(&pts)
}

fn rectify_and_accept(frame: &Raster, rect: RotatedRect, cfg: &DetectionConfig) -> Option<Detection> {
    let corners = order_corners(&rect.corners());
    let out_w = cfg.warp_width;
    let out_h = libm::round(out_w as f64 / rect.aspect_ratio()) as usize;
    if out_h < cfg.min_warp.0 || out_w < cfg.min_warp.1 {
        return None;
    }
    let (w, h) = (out_w as f64, out_h as f64);
    let dst = [Point::new(0.0, 0.0), Point::new(w, 0.0), Point::new(w, h), Point::new(0.0, h)];
    let hom = solve_homography(&corners, &dst).ok()?;
    let warped = warp_perspective(frame, &hom, (out_w, out_h)).ok()?;

    let segmentation = if rect.height < cfg.small_plate_rows {
        let seg = segment_characters(&warped, &cfg.segmentation)?;
        if seg.n < cfg.min_chars {
            return None;
        }
        Some(seg)
    } else {
        if !verify_plate_region(&warped, &cfg.verify) {
            return None;
        }
        None
    };
    Some(Detection {
        quad: PlateQuad { corners, rotated_rect: rect },
        warped,
        segmentation,
        source_scale: (rect.width / w, rect.height / h),
    })
}

/// Plate-likeness test on a rectified region: moderate dark-foreground
/// fraction, a plausible count of dark→light transitions on the middle row,
/// and enough contrast.
pub fn verify_plate_region(warped: &Raster, cfg: &VerifyConfig) -> bool {
    if warped.std_dev() < cfg.min_std {
        return false;
    }
    let (_, binary) = otsu_threshold(warped, Polarity::DarkForeground);
    let total = (warped.width() * warped.height()) as f64;
    let frac = binary.count_foreground() as f64 / total;
    if !(frac >= cfg.foreground_fraction.0 && frac <= cfg.foreground_fraction.1) {
        return false;
    }
    let row = binary.row(warped.height() / 2);
    let transitions = row.windows(2).filter(|p| p[0] != 0 && p[1] == 0).count();
    transitions >= cfg.min_transitions && (transitions as f64) <= cfg.max_transition_density * warped.width() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModeController {
    pub mode: DetectionMode,
    pub miss_count: u32,
}

/// Advances the strict/permissive state machine by one frame.
pub fn step_mode(ctrl: ModeController, detected: bool, cfg: &DetectionConfig) -> ModeController {
    if detected {
        return ModeController::default();
    }
    let miss_count = ctrl.miss_count.saturating_add(1);
    let mode = if miss_count >= cfg.mode_switch_frames { DetectionMode::Permissive } else { ctrl.mode };
    ModeController { mode, miss_count }
}
