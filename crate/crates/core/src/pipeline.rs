//! Stateful per-stream pipeline: detection with mode switching, flow-based
//! coasting, segmentation, pose correction, ranging, depth fusion and
//! Kalman tracking.

use alloc::vec::Vec;

use crate::detection::{detect_plate, step_mode, DetectionConfig, DetectionMode, ModeController, PlateQuad};
use crate::fusion::{depth_estimate, plate_relative_depth, update_scale, DepthMap, ScaleAligner};
use crate::pose::{correct_height, estimate_pose_masked, HeightCorrection, PoseConfig, PoseEstimate};
use crate::ranging::{fuse_estimates, range_plate, CameraModel, Estimate, RangingConfig};
use crate::raster::{LkConfig, Raster};
use crate::segmentation::{segment_characters, SegmentationResult};
use crate::temporal::{innovation_accepted, kf_predict, kf_update, velocity_and_ttc, KalmanConfig, TrackState};

/// Padding around the plate box, as a fraction of its height, whose edges
/// are withheld from pose estimation.
pub const PLATE_MASK_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub detection: DetectionConfig,
    pub pose: PoseConfig,
    pub ranging: RangingConfig,
    pub kalman: KalmanConfig,
    pub lk: LkConfig,
    pub multi_feature: bool,
    pub use_pose: bool,
    /// Forces a detection mode instead of the automatic controller.
    pub fixed_mode: Option<DetectionMode>,
    /// Depth-branch variance in m²; `None` uses the relative default.
    pub depth_variance: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            detection: DetectionConfig::default(),
            pose: PoseConfig::default(),
            ranging: RangingConfig::default(),
            kalman: KalmanConfig::default(),
            lk: LkConfig::default(),
            multi_feature: false,
            use_pose: true,
            fixed_mode: None,
            depth_variance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: u64,
    pub mode: DetectionMode,
    pub detected: bool,
    /// The quad came from optical flow rather than detection.
    pub tracked: bool,
    pub quad: Option<PlateQuad>,
    /// Segmentation in source-image pixels, before pose correction.
    pub segmentation: Option<SegmentationResult>,
    /// Rotated-rect plate width in source pixels.
    pub plate_width_px: Option<f64>,
    pub pose: Option<PoseEstimate>,
    pub correction: Option<HeightCorrection>,
    pub per_feature: Vec<Estimate>,
    pub geometric: Option<Estimate>,
    pub depth: Option<Estimate>,
    pub fused: Option<Estimate>,
    pub track: Option<TrackState>,
    pub velocity: Option<f64>,
    pub ttc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FramePipeline {
    cfg: PipelineConfig,
    camera: CameraModel,
    controller: ModeController,
    track: Option<TrackState>,
    aligner: ScaleAligner,
    last_quad: Option<PlateQuad>,
    /// Most recent quad from any frame, used to sample depth maps while the
    /// plate is lost.
    last_seen_quad: Option<PlateQuad>,
    prev_frame: Option<Raster>,
    frame_index: u64,
}

impl FramePipeline {
    pub fn new(camera: CameraModel, cfg: PipelineConfig) -> Self {
        Self {
            cfg,
            camera,
            controller: ModeController::default(),
            track: None,
            aligner: ScaleAligner::default(),
            last_quad: None,
            last_seen_quad: None,
            prev_frame: None,
            frame_index: 0,
        }
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn track(&self) -> Option<&TrackState> {
        self.track.as_ref()
    }

    pub fn process(&mut self, frame: Raster, depth: Option<&DepthMap>) -> FrameResult {
        let cfg = &self.cfg;
        let index = self.frame_index;
        let mode = cfg.fixed_mode.unwrap_or(self.controller.mode);
        let detection = detect_plate(&frame, &cfg.detection, mode);
        self.controller = step_mode(self.controller, detection.is_some(), &cfg.detection);

        let mut result = FrameResult {
            frame_index: index,
            mode,
            detected: detection.is_some(),
            tracked: false,
            quad: None,
            segmentation: None,
            plate_width_px: None,
            pose: None,
            correction: None,
            per_feature: Vec::new(),
            geometric: None,
            depth: None,
            fused: None,
            track: None,
            velocity: None,
            ttc: None,
        };

        if let Some(det) = &detection {
            result.quad = Some(det.quad);
            result.plate_width_px = Some(det.quad.rotated_rect.width);
            let seg = det.segmentation.clone().or_else(|| segment_characters(&det.warped, &cfg.detection.segmentation));
            result.segmentation = seg.map(|s| s.rescaled(det.source_scale.0, det.source_scale.1));
        } else if let (Some(prev), Some(quad)) = (&self.prev_frame, &self.last_quad) {
            if let Some(moved) = crate::temporal::track_bbox(prev, &frame, quad, &cfg.lk) {
                result.quad = Some(moved);
                result.tracked = true;
            }
        }
        self.last_quad = result.quad;
        if result.quad.is_some() {
            self.last_seen_quad = result.quad;
        }

        if let Some(seg) = &result.segmentation {
            let mut seg = seg.clone();
            if cfg.use_pose {
                let exclude = result.quad.map(|q| {
                    let (x0, y0, x1, y1) = q.bounds();
                    let m = PLATE_MASK_MARGIN * (y1 - y0);
                    (x0 - m, y0 - m, x1 + m, y1 + m)
                });
                let pose = estimate_pose_masked(&frame, &self.camera, &cfg.pose, exclude);
                let corr = correct_height(seg.avg_height, &pose, cfg.pose.min_cos);
                let k = corr.height / seg.avg_height;
                seg.avg_height = corr.height;
                seg.height_std *= k;
                seg.heights.iter_mut().for_each(|h| *h *= k);
                result.pose = Some(pose);
                result.correction = Some(corr);
            }
            if let Ok(r) = range_plate(&seg, &self.camera, cfg.multi_feature, &cfg.ranging) {
                result.geometric = Some(r.fused);
                result.per_feature = r.per_feature;
            }
        }

        if let (Some(map), Some(quad)) = (depth, &self.last_seen_quad) {
            let scale = (map.width() as f64 / frame.width() as f64, map.height() as f64 / frame.height() as f64);
            if let Ok(d_plate) = plate_relative_depth(map, quad, scale) {
                if let Some(geo) = &result.geometric {
                    if let Ok(a) = update_scale(self.aligner, geo.value, d_plate) {
                        self.aligner = a;
                    }
                }
                result.depth = depth_estimate(&self.aligner, d_plate, cfg.depth_variance).ok();
            }
        }

        let sources: Vec<Estimate> = result.geometric.iter().chain(result.depth.iter()).copied().collect();
        result.fused = fuse_estimates(&sources).ok();

        let kcfg = &cfg.kalman;
        self.track = match (self.track.take(), result.fused) {
            (Some(t), z) => {
                let predicted = kf_predict(&t, kcfg);
                let updated = match z {
                    Some(e) if innovation_accepted(&predicted, e.value, kcfg) => {
                        kf_update(&predicted, e.value, kcfg).unwrap_or(predicted)
                    }
                    _ => predicted,
                };
                (!updated.is_lost(kcfg)).then_some(updated)
            }
            (None, Some(e)) => TrackState::init(e.value, index, kcfg).ok(),
            (None, None) => None,
        };
        if let Some(t) = &self.track {
            let (v, ttc) = velocity_and_ttc(t);
            result.track = Some(*t);
            result.velocity = Some(v);
            result.ttc = ttc;
        }

        self.prev_frame = Some(frame);
        self.frame_index += 1;
        result
    }
}
