//! Evaluation suites: the bench-table recomputation, character height versus
//! plate width on noisy renders, and a noise-free distance sweep.

use std::fmt;

use platerange_core::detection::{detect_plate, DetectionConfig, DetectionMode};
use platerange_core::pipeline::{FramePipeline, PipelineConfig};
use platerange_core::ranging::{
    distance_from_feature, range_plate, range_plate_width, CameraModel, PlateDimensions, RangingConfig,
};
use platerange_core::segmentation::segment_characters;
use platerange_core::stats::mean;
use platerange_core::synth::{measure_char_heights, render_scene, SceneSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{MethodMetrics, RunMetrics};

pub const TABLE2_FOCAL_PX: f64 = 83.92;
pub const TABLE2_CHAR_HEIGHT_M: f64 = 0.07;
pub const TABLE2_TRUE_DISTANCE_M: f64 = 0.030;
pub const TABLE2_HEIGHTS_PX: [f64; 7] = [186.5, 177.1, 181.9, 182.3, 179.9, 186.9, 174.7];
pub const TABLE2_CHARS: [usize; 7] = [13, 14, 14, 13, 12, 12, 10];
/// Distances as printed in the bench table, four decimals.
pub const TABLE2_PRINTED_M: [f64; 7] = [0.0315, 0.0332, 0.0323, 0.0322, 0.0327, 0.0314, 0.0336];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub heights_px: Vec<f64>,
    pub distances_m: Vec<f64>,
    pub metrics: RunMetrics,
}

impl Table2 {
    /// Distances rounded to the table's four decimals.
    pub fn printed_distances(&self) -> Vec<f64> {
        self.distances_m.iter().map(|d| (d * 1e4).round() / 1e4).collect()
    }
}

pub fn table2() -> Table2 {
    let distances_m: Vec<f64> = TABLE2_HEIGHTS_PX
        .iter()
        .map(|&h| distance_from_feature(TABLE2_FOCAL_PX, TABLE2_CHAR_HEIGHT_M, h).expect("positive inputs"))
        .collect();
    let truth = vec![TABLE2_TRUE_DISTANCE_M; distances_m.len()];
    let metrics = RunMetrics { methods: vec![MethodMetrics::compute("char_height", &distances_m, Some(&truth))], fps: None };
    Table2 { heights_px: TABLE2_HEIGHTS_PX.to_vec(), distances_m, metrics }
}

impl fmt::Display for Table2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "f = {TABLE2_FOCAL_PX} px, H = {TABLE2_CHAR_HEIGHT_M} m, true distance {TABLE2_TRUE_DISTANCE_M} m")?;
        writeln!(f, "{:>6} {:>16} {:>13}", "chars", "avg height (px)", "distance (m)")?;
        for ((n, h), d) in TABLE2_CHARS.iter().zip(&self.heights_px).zip(&self.distances_m) {
            writeln!(f, "{n:>6} {h:>16.1} {d:>13.4}")?;
        }
        let m = &self.metrics.methods[0];
        writeln!(f, "mean ± std (m)  {:.4} ± {:.4}", m.mean_m, m.std_m)?;
        writeln!(f, "CV (%)          {:.1}", m.cv_pct)?;
        writeln!(f, "MAE (m)         {:.4}", m.mae_m.unwrap_or(0.0))?;
        write!(f, "RMSE (m)        {:.4}", m.rmse_m.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub frames: usize,
    pub distance_m: f64,
    pub focal_px: f64,
    pub noise_sigma: f64,
    /// Plate yaw is drawn uniformly from ±this many degrees per frame.
    pub max_yaw_deg: f64,
    pub seed: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { frames: 200, distance_m: 3.0, focal_px: 1000.0, noise_sigma: 3.0, max_yaw_deg: 25.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub options: CompareOptions,
    /// Frames where the plate was not detected or not segmented.
    pub skipped: usize,
    pub char_based: MethodMetrics,
    pub plate_width: MethodMetrics,
    pub std_improvement_pct: f64,
    pub mae_improvement_pct: f64,
}

fn improvement(ours: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        (1.0 - ours / baseline) * 100.0
    } else {
        0.0
    }
}

/// Ranges the same detections by mean character height and by plate width.
pub fn compare(opts: &CompareOptions) -> Comparison {
    let spec0 = SceneSpec { focal_px: opts.focal_px, distance_m: opts.distance_m, noise_sigma: opts.noise_sigma, ..SceneSpec::default() };
    let cam = CameraModel::new(opts.focal_px, spec0.principal_point, PlateDimensions::us_standard()).expect("valid camera");
    let det_cfg = DetectionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut chars, mut widths) = (Vec::new(), Vec::new());
    let mut skipped = 0;
    for i in 0..opts.frames {
        let yaw = rng.random_range(-opts.max_yaw_deg..=opts.max_yaw_deg).to_radians();
        let spec = SceneSpec { plate_yaw: yaw, seed: opts.seed.wrapping_add(i as u64), ..spec0.clone() };
        let Ok((frame, _)) = render_scene(&spec) else {
            skipped += 1;
            continue;
        };
        let pair = detect_plate(&frame, &det_cfg, DetectionMode::Strict).and_then(|det| {
            let seg = det.segmentation.clone().or_else(|| segment_characters(&det.warped, &det_cfg.segmentation))?;
            let seg = seg.rescaled(det.source_scale.0, det.source_scale.1);
            let c = range_plate(&seg, &cam, false, &RangingConfig::default()).ok()?;
            let w = range_plate_width(&cam, det.quad.rotated_rect.width, 1.0).ok()?;
            Some((c.fused.value, w.value))
        });
        match pair {
            Some((c, w)) => {
                chars.push(c);
                widths.push(w);
            }
            None => skipped += 1,
        }
    }
    let truth = vec![opts.distance_m; chars.len()];
    let char_based = MethodMetrics::compute("char_height", &chars, Some(&truth));
    let plate_width = MethodMetrics::compute("plate_width", &widths, Some(&truth));
    Comparison {
        options: opts.clone(),
        skipped,
        std_improvement_pct: improvement(char_based.std_m, plate_width.std_m),
        mae_improvement_pct: improvement(char_based.mae_m.unwrap_or(0.0), plate_width.mae_m.unwrap_or(0.0)),
        char_based,
        plate_width,
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        writeln!(
            f,
            "{} frames at {} m, f = {} px, noise σ = {}, yaw ±{}°, seed {} ({} skipped)",
            o.frames, o.distance_m, o.focal_px, o.noise_sigma, o.max_yaw_deg, o.seed, self.skipped
        )?;
        let metrics = RunMetrics { methods: vec![self.char_based.clone(), self.plate_width.clone()], fps: None };
        write!(f, "{metrics}")?;
        write!(f, "improvement: std {:.1}%, MAE {:.1}%", self.std_improvement_pct, self.mae_improvement_pct)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub focal_px: f64,
    /// Multiplies the base distances 0.5, 2, 5 and 10 m.
    pub scale: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { focal_px: 1000.0, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance_m: f64,
    pub char_height_px: f64,
    /// Distance from the sub-pixel ink extent of the rendered glyphs.
    pub coverage_m: Option<f64>,
    pub coverage_error_pct: Option<f64>,
    /// Distance from the full single-frame pipeline.
    pub pipeline_m: Option<f64>,
    pub pipeline_error_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub options: SweepOptions,
    pub rows: Vec<SweepRow>,
}

/// Character height in pixels below which the sweep bound is not applied.
pub const SWEEP_MIN_CHAR_PX: f64 = 8.0;

impl Sweep {
    /// Largest coverage error over rows with characters at least
    /// [`SWEEP_MIN_CHAR_PX`] tall; infinite when such a row was not measured.
    pub fn max_coverage_error_pct(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.char_height_px >= SWEEP_MIN_CHAR_PX)
            .map(|r| r.coverage_error_pct.map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max)
    }
}

pub const SWEEP_BASE_DISTANCES_M: [f64; 4] = [0.5, 2.0, 5.0, 10.0];

/// Every glyph has top and bottom bars, so each center column spans the full height.
pub const SWEEP_TEXT: &str = "5230968";

pub fn synth_sweep(opts: &SweepOptions) -> Sweep {
    let dims = PlateDimensions::us_standard();
    let rows = SWEEP_BASE_DISTANCES_M
        .iter()
        .map(|&base| {
            let d = base * opts.scale;
            let spec = SceneSpec { focal_px: opts.focal_px, distance_m: d, text: SWEEP_TEXT.into(), ..SceneSpec::default() };
            let char_height_px = opts.focal_px * dims.char_height_m / d;
            let rel = |v: f64| (v - d) / d * 100.0;
            let Ok((frame, truth)) = render_scene(&spec) else {
                return SweepRow { distance_m: d, char_height_px, coverage_m: None, coverage_error_pct: None, pipeline_m: None, pipeline_error_pct: None };
            };
            let heights = measure_char_heights(&frame, &truth, &spec.palette);
            let coverage_m = (!heights.is_empty()).then(|| opts.focal_px * dims.char_height_m / mean(&heights));
            let cam = CameraModel::new(opts.focal_px, spec.principal_point, dims).expect("valid camera");
            let pipeline_m = FramePipeline::new(cam, PipelineConfig::default()).process(frame, None).fused.map(|e| e.value);
            SweepRow {
                distance_m: d,
                char_height_px,
                coverage_m,
                coverage_error_pct: coverage_m.map(rel),
                pipeline_m,
                pipeline_error_pct: pipeline_m.map(rel),
            }
        })
        .collect();
    Sweep { options: opts.clone(), rows }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
        writeln!(f, "f = {} px, noise-free", self.options.focal_px)?;
        writeln!(f, "{:>8} {:>10} {:>12} {:>10} {:>12} {:>10}", "D (m)", "h (px)", "coverage (m)", "err (%)", "pipeline (m)", "err (%)")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>8.2} {:>10.2} {:>12} {:>10} {:>12} {:>10}",
                r.distance_m,
                r.char_height_px,
                cell(r.coverage_m, 4),
                cell(r.coverage_error_pct, 3),
                cell(r.pipeline_m, 4),
                cell(r.pipeline_error_pct, 3)
            )?;
        }
        write!(f, "max coverage error where h >= {SWEEP_MIN_CHAR_PX} px: {:.3}%", self.max_coverage_error_pct())
    }
}
