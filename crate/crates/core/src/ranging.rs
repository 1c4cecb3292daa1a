//! Pinhole ranging from plate typography: focal calibration, per-feature
//! distances with propagated uncertainty, and inverse-variance fusion.

use alloc::vec::Vec;

use crate::raster::Point;
use crate::segmentation::SegmentationResult;
use crate::{Error, Result};

/// Physical plate dimensions in meters. Optional entries take part in
/// multi-feature ranging only when set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateDimensions {
    pub char_height_m: f64,
    pub plate_height_m: f64,
    pub plate_width_m: Option<f64>,
    pub stroke_width_m: Option<f64>,
    pub char_spacing_m: Option<f64>,
    pub border_thickness_m: Option<f64>,
}

impl PlateDimensions {
    /// Standard U.S. plate with 75 mm characters.
    pub const fn us_standard() -> Self {
        Self {
            char_height_m: 0.075,
            plate_height_m: 0.152,
            plate_width_m: Some(0.305),
            stroke_width_m: None,
            char_spacing_m: None,
            border_thickness_m: None,
        }
    }

    /// U.S. plate with the 70 mm characters used in the bench experiment.
    pub const fn us_experiment() -> Self {
        Self { char_height_m: 0.07, ..Self::us_standard() }
    }

    pub fn validate(&self) -> Result<()> {
        let optional = [self.plate_width_m, self.stroke_width_m, self.char_spacing_m, self.border_thickness_m];
        if !(self.char_height_m > 0.0 && self.plate_height_m > 0.0) || optional.iter().flatten().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositive("plate dimension"));
        }
        Ok(())
    }
}

impl Default for PlateDimensions {
    fn default() -> Self {
        Self::us_standard()
    }
}

/// Focal lengths outside this range (pixels) are flagged during calibration.
pub const FOCAL_RANGE: (f64, f64) = (300.0, 5000.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub focal_px: f64,
    pub principal_point: Point,
    pub dims: PlateDimensions,
}

impl CameraModel {
    pub fn new(focal_px: f64, principal_point: Point, dims: PlateDimensions) -> Result<Self> {
        if !(focal_px > 0.0) {
            return Err(Error::NonPositive("focal length"));
        }
        dims.validate()?;
        Ok(Self { focal_px, principal_point, dims })
    }

    pub fn focal_warning(&self) -> Option<CalibrationWarning> {
        focal_warning(self.focal_px)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub plate_pixel_height: f64,
    pub reference_distance: f64,
    pub top_width: f64,
    pub bottom_width: f64,
}

impl CalibrationSample {
    /// A sample with no tilt information.
    pub fn new(plate_pixel_height: f64, reference_distance: f64) -> Self {
        Self { plate_pixel_height, reference_distance, top_width: 0.0, bottom_width: 0.0 }
    }

    /// Relative difference between the top and bottom plate edge widths.
    pub fn tilt_ratio(&self) -> f64 {
        let m = self.top_width.max(self.bottom_width);
        if m > 0.0 {
            libm::fabs(self.top_width - self.bottom_width) / m
        } else {
            0.0
        }
    }
}

/// Maximum top/bottom width mismatch before a sample is flagged as tilted.
pub const MAX_TILT_RATIO: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationWarning {
    FocalBelowRange { focal_px: f64 },
    FocalAboveRange { focal_px: f64 },
    PlateTilt { sample: usize, ratio: f64 },
}

impl core::fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::FocalBelowRange { focal_px } => {
                write!(f, "focal length below {} px ({focal_px:.2} px): check the reference distance", FOCAL_RANGE.0)
            }
            Self::FocalAboveRange { focal_px } => {
                write!(f, "focal length above {} px ({focal_px:.2} px): check the reference distance", FOCAL_RANGE.1)
            }
            Self::PlateTilt { sample, ratio } => {
                write!(f, "sample {sample}: plate tilt {:.1}% exceeds 15%", ratio * 100.0)
            }
        }
    }
}

fn focal_warning(f: f64) -> Option<CalibrationWarning> {
    if f < FOCAL_RANGE.0 {
        Some(CalibrationWarning::FocalBelowRange { focal_px: f })
    } else if f > FOCAL_RANGE.1 {
        Some(CalibrationWarning::FocalAboveRange { focal_px: f })
    } else {
        None
    }
}

/// Focal length in pixels averaged over `samples`, with quality warnings.
pub fn calibrate(samples: &[CalibrationSample], plate_height_m: f64) -> Result<(f64, Vec<CalibrationWarning>)> {
    if samples.is_empty() {
        return Err(Error::Empty("calibration samples"));
    }
    if !(plate_height_m > 0.0) {
        return Err(Error::NonPositive("plate height"));
    }
    let mut warnings = Vec::new();
    let mut sum = 0.0;
    for (i, s) in samples.iter().enumerate() {
        if !(s.plate_pixel_height > 0.0 && s.reference_distance > 0.0) {
            return Err(Error::NonPositive("calibration sample"));
        }
        sum += s.plate_pixel_height * s.reference_distance / plate_height_m;
        let ratio = s.tilt_ratio();
        if ratio > MAX_TILT_RATIO {
            warnings.push(CalibrationWarning::PlateTilt { sample: i, ratio });
        }
    }
    let f = sum / samples.len() as f64;
    warnings.extend(focal_warning(f));
    Ok((f, warnings))
}

/// Pinhole distance `f · physical / measured`.
pub fn distance_from_feature(focal_px: f64, physical_m: f64, measured_px: f64) -> Result<f64> {
    if !(focal_px > 0.0 && physical_m > 0.0 && measured_px > 0.0) {
        return Err(Error::NonPositive("ranging input"));
    }
    Ok(focal_px * physical_m / measured_px)
}

/// First-order distance uncertainty `σ_D = D / h · σ_h`.
pub fn propagate_uncertainty(distance_m: f64, measured_px: f64, sigma_px: f64) -> Result<f64> {
    if !(distance_m > 0.0 && measured_px > 0.0 && sigma_px >= 0.0) {
        return Err(Error::NonPositive("uncertainty input"));
    }
    Ok(distance_m / measured_px * sigma_px)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    CharHeight,
    StrokeWidth,
    Spacing,
    Border,
    PlateWidth,
    DepthNet,
    Fused,
}

impl FeatureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CharHeight => "char_height",
            Self::StrokeWidth => "stroke_width",
            Self::Spacing => "spacing",
            Self::Border => "border",
            Self::PlateWidth => "plate_width",
            Self::DepthNet => "depth_net",
            Self::Fused => "fused",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub variance: f64,
    pub source: FeatureSource,
}

impl Estimate {
    pub fn new(value: f64, variance: f64, source: FeatureSource) -> Self {
        Self { value, variance, source }
    }

    pub fn sigma(&self) -> f64 {
        libm::sqrt(self.variance)
    }
}

/// Smallest variance admitted into fusion, in m².
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Inverse-variance weighted mean. A single estimate is returned as is.
///
/// Weights use variances floored at [`VARIANCE_FLOOR`]; the fused variance
/// never exceeds the smallest input variance.
pub fn fuse_estimates(estimates: &[Estimate]) -> Result<Estimate> {
    match estimates {
        [] => Err(Error::Empty("estimates")),
        [only] => Ok(*only),
        _ => {
            let (mut wsum, mut wd) = (0.0, 0.0);
            let mut min_var = f64::INFINITY;
            for e in estimates {
                let w = 1.0 / e.variance.max(VARIANCE_FLOOR);
                wsum += w;
                wd += w * e.value;
                min_var = min_var.min(e.variance);
            }
            Ok(Estimate::new(wd / wsum, (1.0 / wsum).min(min_var), FeatureSource::Fused))
        }
    }
}

/// How the character-height σ is derived from the kept heights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeightSigma {
    /// Population std over √n: the uncertainty of the mean height.
    #[default]
    StandardError,
    /// Population std of the individual heights.
    Spread,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangingConfig {
    pub height_sigma: HeightSigma,
    /// Measurement σ for single-shot features, in pixels.
    pub aux_sigma_px: f64,
}

impl Default for RangingConfig {
    fn default() -> Self {
        Self { height_sigma: HeightSigma::StandardError, aux_sigma_px: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeResult {
    pub fused: Estimate,
    pub per_feature: Vec<Estimate>,
}

fn feature_estimate(f: f64, physical: f64, measured: f64, sigma: f64, source: FeatureSource) -> Result<Estimate> {
    let d = distance_from_feature(f, physical, measured)?;
    let s = propagate_uncertainty(d, measured, sigma)?;
    Ok(Estimate::new(d, s * s, source))
}

/// Ranges a segmented plate whose measurements are in image pixels.
pub fn range_plate(
    seg: &SegmentationResult,
    cam: &CameraModel,
    multi_feature: bool,
    cfg: &RangingConfig,
) -> Result<RangeResult> {
    let f = cam.focal_px;
    let n = seg.n.max(1) as f64;
    let sigma_h = match cfg.height_sigma {
        HeightSigma::StandardError => seg.height_std / libm::sqrt(n),
        HeightSigma::Spread => seg.height_std,
    };
    let mut per_feature =
        alloc::vec![feature_estimate(f, cam.dims.char_height_m, seg.avg_height, sigma_h, FeatureSource::CharHeight)?];
    if multi_feature {
        let aux = [
            (cam.dims.stroke_width_m, seg.stroke_width, FeatureSource::StrokeWidth),
            (cam.dims.char_spacing_m, seg.char_spacing, FeatureSource::Spacing),
            (cam.dims.border_thickness_m, seg.border_thickness, FeatureSource::Border),
        ];
        for (physical, measured, source) in aux {
            if let Some(p) = physical {
                if measured > 0.0 {
                    per_feature.push(feature_estimate(f, p, measured, cfg.aux_sigma_px, source)?);
                }
            }
        }
    }
    let fused = fuse_estimates(&per_feature)?;
    Ok(RangeResult { fused, per_feature })
}

/// Baseline distance from the rectified plate width alone.
pub fn range_plate_width(cam: &CameraModel, plate_width_px: f64, sigma_px: f64) -> Result<Estimate> {
    let physical = cam.dims.plate_width_m.ok_or(Error::InvalidParameter("plate width not configured"))?;
    feature_estimate(cam.focal_px, physical, plate_width_px, sigma_px, FeatureSource::PlateWidth)
}
