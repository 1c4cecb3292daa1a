//! Camera pitch and roll from lane-line geometry, and the matching
//! correction of measured character heights.

use alloc::vec::Vec;

use crate::raster::{canny, hough_lines, HoughConfig, LineSegment, Raster};
use crate::ranging::CameraModel;
use crate::stats::{mean, median};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseConfig {
    pub canny_low: u8,
    pub canny_high: u8,
    pub hough: HoughConfig,
    /// Segments steeper than this (radians from horizontal) are ignored.
    pub max_line_angle: f64,
    /// Line pairs closer than this to parallel (radians) are not intersected.
    pub min_pair_angle: f64,
    pub calibration_pitch: f64,
    pub calibration_roll: f64,
    /// Corrections whose denominator cosines fall below this are skipped.
    pub min_cos: f64,
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self {
            canny_low: 50,
            canny_high: 150,
            hough: HoughConfig::default(),
            max_line_angle: core::f64::consts::FRAC_PI_4,
            min_pair_angle: 0.02,
            calibration_pitch: 0.0,
            calibration_roll: 0.0,
            min_cos: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub pitch: f64,
    pub roll: f64,
    pub delta_pitch: f64,
    pub delta_roll: f64,
    /// Vanishing-point row in continuous pixel coordinates.
    pub vanishing_row: f64,
    pub lines_used: usize,
    pub valid: bool,
}

impl PoseEstimate {
    pub const INVALID: PoseEstimate = PoseEstimate {
        pitch: 0.0,
        roll: 0.0,
        delta_pitch: 0.0,
        delta_roll: 0.0,
        vanishing_row: f64::NAN,
        lines_used: 0,
        valid: false,
    };

    /// A valid pose from absolute angles and the calibration pose.
    pub fn from_angles(pitch: f64, roll: f64, calibration_pitch: f64, calibration_roll: f64) -> Self {
        Self {
            pitch,
            roll,
            delta_pitch: pitch - calibration_pitch,
            delta_roll: roll - calibration_roll,
            vanishing_row: f64::NAN,
            lines_used: 0,
            valid: true,
        }
    }

    /// The pose that undoes this one's height correction.
    pub fn inverse(&self) -> Self {
        Self {
            pitch: self.pitch + self.delta_pitch,
            roll: self.roll + self.delta_roll,
            delta_pitch: -self.delta_pitch,
            delta_roll: -self.delta_roll,
            ..*self
        }
    }
}

/// Pose from the lane lines visible in `frame`.
pub fn estimate_pose(frame: &Raster, cam: &CameraModel, cfg: &PoseConfig) -> PoseEstimate {
    estimate_pose_masked(frame, cam, cfg, None)
}

/// As [`estimate_pose`], ignoring edges inside `exclude` (continuous
/// coordinates `(x0, y0, x1, y1)`), typically the plate's bounding box.
pub fn estimate_pose_masked(frame: &Raster, cam: &CameraModel, cfg: &PoseConfig, exclude: Option<(f64, f64, f64, f64)>) -> PoseEstimate {
    let mut edges = canny(frame, cfg.canny_low, cfg.canny_high);
    if let Some((x0, y0, x1, y1)) = exclude {
        let clip = |v: f64, hi: usize| libm::floor(v).clamp(0.0, hi as f64) as usize;
        let (xa, xb) = (clip(x0, edges.width()), clip(libm::ceil(x1), edges.width()));
        let (ya, yb) = (clip(y0, edges.height()), clip(libm::ceil(y1), edges.height()));
        for y in ya..yb {
            for x in xa..xb {
                edges.set(x, y, 0);
            }
        }
    }
    let lines = hough_lines(&edges, &cfg.hough);
    estimate_pose_from_lines(&lines, cam, cfg)
}

/// Pose from already extracted line segments (pixel-index coordinates).
///
/// The vanishing row is the median row of all pairwise intersections among
/// the near-horizontal segments, skipping nearly parallel pairs; roll is
/// their mean angle.
pub fn estimate_pose_from_lines(lines: &[LineSegment], cam: &CameraModel, cfg: &PoseConfig) -> PoseEstimate {
    let kept: Vec<&LineSegment> = lines.iter().filter(|l| libm::fabs(l.angle) < cfg.max_line_angle).collect();
    if kept.len() < 2 {
        return PoseEstimate::INVALID;
    }
    let mut rows = Vec::new();
    for (i, a) in kept.iter().enumerate() {
        for b in &kept[i + 1..] {
            if libm::fabs(libm::sin(a.theta - b.theta)) < libm::sin(cfg.min_pair_angle) {
                continue;
            }
            if let Some(p) = a.intersect(b) {
                if p.y.is_finite() {
                    rows.push(p.y + 0.5);
                }
            }
        }
    }
    if rows.is_empty() {
        return PoseEstimate::INVALID;
    }
    let v_inf = median(&rows);
    let pitch = libm::atan((v_inf - cam.principal_point.y) / cam.focal_px);
    let angles: Vec<f64> = kept.iter().map(|l| l.angle).collect();
    let roll = mean(&angles);
    PoseEstimate {
        vanishing_row: v_inf,
        lines_used: kept.len(),
        ..PoseEstimate::from_angles(pitch, roll, cfg.calibration_pitch, cfg.calibration_roll)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightCorrection {
    pub height: f64,
    pub applied: bool,
}

/// Rescales a measured height for the pose change since calibration:
/// `h · cos φ cos ψ / (cos(φ+Δφ) cos(ψ+Δψ))`.
pub fn correct_height(h: f64, pose: &PoseEstimate, min_cos: f64) -> HeightCorrection {
    let unchanged = HeightCorrection { height: h, applied: false };
    if !pose.valid {
        return unchanged;
    }
    let den_p = libm::cos(pose.pitch + pose.delta_pitch);
    let den_r = libm::cos(pose.roll + pose.delta_roll);
    if den_p < min_cos || den_r < min_cos {
        return unchanged;
    }
    let num = libm::cos(pose.pitch) * libm::cos(pose.roll);
    HeightCorrection { height: h * num / (den_p * den_r), applied: true }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn zero_deltas_are_identity(phi in -0.6f64..0.6, psi in -0.6f64..0.6, h in 1.0f64..500.0) {
            let p = PoseEstimate { delta_pitch: 0.0, delta_roll: 0.0, ..PoseEstimate::from_angles(phi, psi, phi, psi) };
            let c = correct_height(h, &p, 0.1);
            prop_assert!((c.height - h).abs() <= 1e-12 * h);
        }

        #[test]
        fn correction_round_trips(
            phi in -0.4f64..0.4, psi in -0.4f64..0.4, dphi in -0.3f64..0.3, dpsi in -0.3f64..0.3, h in 1.0f64..500.0,
        ) {
            let p = PoseEstimate { delta_pitch: dphi, delta_roll: dpsi, ..PoseEstimate::from_angles(phi, psi, 0.0, 0.0) };
            let once = correct_height(h, &p, 0.1);
            prop_assert!(once.applied);
            let back = correct_height(once.height, &p.inverse(), 0.1);
            prop_assert!((back.height - h).abs() <= 1e-9 * h);
        }
    }
}
