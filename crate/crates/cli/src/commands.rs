//! Command implementations behind the `platerange` binary. Each writes JSON
//! to `out` and human-readable text to `err`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use platerange_core::detection::{detect_plate, Detection, DetectionConfig, DetectionMode};
use platerange_core::fusion::DepthMap;
use platerange_core::pipeline::{FramePipeline, PipelineConfig};
use platerange_core::ranging::{calibrate, CalibrationSample};
use platerange_core::raster::Raster;
use platerange_core::synth::{render_scene, SceneSpec};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::eval;
use crate::pfm::{self, DepthKind};
use crate::pnm;
use crate::profile::{self, CameraProfile};
use crate::report::{FrameReport, MethodMetrics, RunMetrics};

fn emit(w: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| CliError::io("<output>", e))
}

/// Detects a plate trying strict mode first, then permissive.
fn detect_any(frame: &Raster) -> Option<Detection> {
    let cfg = DetectionConfig::default();
    detect_plate(frame, &cfg, DetectionMode::Strict).or_else(|| detect_plate(frame, &cfg, DetectionMode::Permissive))
}

#[derive(Debug, Clone)]
pub struct CalibrateArgs {
    pub images: Vec<PathBuf>,
    pub distances_m: Vec<f64>,
    pub plate_height_m: f64,
    pub jurisdiction: String,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CalibrationSampleReport {
    image: String,
    distance_m: f64,
    plate_height_px: f64,
    tilt_ratio: f64,
}

#[derive(Debug, Serialize)]
struct CalibrationReport {
    focal_px: f64,
    samples: Vec<CalibrationSampleReport>,
    warnings: Vec<String>,
}

/// Averages the focal length over every image whose plate is detected and
/// writes a camera profile.
pub fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<f64> {
    if args.images.is_empty() || args.images.len() != args.distances_m.len() {
        return Err(CliError::Usage(format!(
            "need one known distance per image ({} images, {} distances)",
            args.images.len(),
            args.distances_m.len()
        )));
    }
    let mut dims = profile::jurisdiction(&args.jurisdiction)
        .ok_or_else(|| CliError::Usage(format!("unknown jurisdiction {:?}", args.jurisdiction)))?;
    dims.plate_height_m = args.plate_height_m;

    let mut samples = Vec::new();
    let mut reports = Vec::new();
    let mut size = None;
    for (path, &d) in args.images.iter().zip(&args.distances_m) {
        let frame = pnm::read_image(path)?;
        size.get_or_insert((frame.width(), frame.height()));
        let Some(det) = detect_any(&frame) else {
            let _ = writeln!(err, "{}: no plate found", path.display());
            continue;
        };
        let c = det.quad.corners;
        let sample = CalibrationSample {
            plate_pixel_height: det.quad.rotated_rect.height,
            reference_distance: d,
            top_width: c[0].distance(&c[1]),
            bottom_width: c[3].distance(&c[2]),
        };
        reports.push(CalibrationSampleReport {
            image: path.display().to_string(),
            distance_m: d,
            plate_height_px: sample.plate_pixel_height,
            tilt_ratio: sample.tilt_ratio(),
        });
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(CliError::NoPlate("no calibration image contained a detectable plate".into()));
    }
    let (focal_px, warnings) = calibrate(&samples, args.plate_height_m)?;
    let warnings: Vec<String> = warnings.iter().map(|w| w.to_string()).collect();
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let _ = writeln!(err, "focal length {focal_px:.3} px from {} of {} images", samples.len(), args.images.len());
    let report = CalibrationReport { focal_px, samples: reports, warnings };
    emit(out, &serde_json::to_string(&report).expect("report serializes"))?;

    if let Some(path) = &args.out {
        let (w, h) = size.expect("at least one image read");
        let profile = CameraProfile {
            focal_px,
            principal_point: Some((w as f64 / 2.0, h as f64 / 2.0)),
            jurisdiction: Some(args.jurisdiction.clone()),
            dims,
        };
        profile.save(path)?;
    }
    Ok(focal_px)
}

/// Camera source shared by `range` and `track`.
#[derive(Debug, Clone)]
pub enum CameraSource {
    Profile(PathBuf),
    Focal { focal_px: f64, jurisdiction: String },
}

impl CameraSource {
    fn load(&self) -> Result<CameraProfile> {
        match self {
            CameraSource::Profile(p) => CameraProfile::load(p),
            CameraSource::Focal { focal_px, jurisdiction } => {
                let dims = profile::jurisdiction(jurisdiction)
                    .ok_or_else(|| CliError::Usage(format!("unknown jurisdiction {jurisdiction:?}")))?;
                Ok(CameraProfile { jurisdiction: Some(jurisdiction.clone()), ..CameraProfile::new(*focal_px, dims) })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineArgs {
    pub camera: CameraSource,
    pub multi_feature: bool,
    pub no_pose: bool,
    pub mode: Option<DetectionMode>,
    /// Adds wall-clock `processing_ms` to every report.
    pub timing: bool,
}

impl PipelineArgs {
    fn pipeline(&self, width: usize, height: usize, dt: Option<f64>) -> Result<FramePipeline> {
        let cam = self.camera.load()?.camera(width, height)?;
        let mut cfg = PipelineConfig {
            multi_feature: self.multi_feature,
            use_pose: !self.no_pose,
            fixed_mode: self.mode,
            ..PipelineConfig::default()
        };
        if let Some(dt) = dt {
            cfg.kalman = platerange_core::temporal::KalmanConfig::with_dt(dt);
            cfg.kalman.validate()?;
        }
        Ok(FramePipeline::new(cam, cfg))
    }
}

#[derive(Debug, Clone)]
pub struct RangeArgs {
    pub image: PathBuf,
    pub pipeline: PipelineArgs,
    pub depth: Option<PathBuf>,
    pub depth_kind: DepthKind,
}

pub fn cmd_range(args: &RangeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<FrameReport> {
    let frame = pnm::read_image(&args.image)?;
    let depth: Option<DepthMap> = args.depth.as_deref().map(|p| pfm::read_depth(p, args.depth_kind)).transpose()?;
    let mut pipe = args.pipeline.pipeline(frame.width(), frame.height(), None)?;
    let start = Instant::now();
    let result = pipe.process(frame, depth.as_ref());
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut report = FrameReport::from_result(&result);
    if args.pipeline.timing {
        report.processing_ms = Some(elapsed);
    }
    emit(out, &report.to_json())?;
    if let Some(cam) = pipe.camera().focal_warning() {
        let _ = writeln!(err, "warning: {cam}");
    }
    if !result.detected {
        return Err(CliError::NoPlate(args.image.display().to_string()));
    }
    match report.fused_m {
        Some(d) => {
            let _ = writeln!(err, "{}: {d:.3} m ({} characters)", args.image.display(), report.n_chars.unwrap_or(0));
        }
        None => {
            let _ = writeln!(err, "{}: plate found but no distance (segmentation failed)", args.image.display());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct TrackArgs {
    /// Frame files, or a single directory of `.pgm`/`.ppm`/`.pnm` files.
    pub frames: Vec<PathBuf>,
    pub pipeline: PipelineArgs,
    pub dt: f64,
    /// One true distance per frame, one per line.
    pub truth: Option<PathBuf>,
    /// Writes the run metrics as JSON.
    pub metrics: Option<PathBuf>,
}

const FRAME_EXTENSIONS: [&str; 3] = ["pgm", "ppm", "pnm"];

/// Expands a single directory argument into its image files, sorted by name.
pub fn collect_frames(args: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if let [dir] = args {
        if dir.is_dir() {
            let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
            let mut files = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| CliError::io(dir, e))?.path();
                let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
                if FRAME_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) {
                    files.push(path);
                }
            }
            files.sort();
            return Ok(files);
        }
    }
    Ok(args.to_vec())
}

pub fn read_truth(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<f64>().map_err(|_| CliError::format(path, format!("not a distance: {l:?}"))))
        .collect()
}

pub fn cmd_track(args: &TrackArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<RunMetrics> {
    let frames = collect_frames(&args.frames)?;
    if frames.len() < 2 {
        return Err(CliError::Usage(format!("tracking needs at least 2 frames, got {}", frames.len())));
    }
    let truth = args.truth.as_deref().map(read_truth).transpose()?;
    if let Some(t) = &truth {
        if t.len() != frames.len() {
            return Err(CliError::Usage(format!("{} truth distances for {} frames", t.len(), frames.len())));
        }
    }

    let mut pipe: Option<FramePipeline> = None;
    let (mut fused, mut fused_truth, mut kalman, mut kalman_truth) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut compute_s, mut detected, mut coasting) = (0.0, 0usize, 0usize);
    for (i, path) in frames.iter().enumerate() {
        let frame = pnm::read_image(path)?;
        let p = match &mut pipe {
            Some(p) => p,
            None => pipe.insert(args.pipeline.pipeline(frame.width(), frame.height(), Some(args.dt))?),
        };
        let start = Instant::now();
        let result = p.process(frame, None);
        let elapsed = start.elapsed().as_secs_f64();
        compute_s += elapsed;
        let mut report = FrameReport::from_result(&result);
        if args.pipeline.timing {
            report.processing_ms = Some(elapsed * 1e3);
        }
        emit(out, &report.to_json())?;

        detected += result.detected as usize;
        if !result.detected && result.track.is_some() {
            coasting += 1;
            let how = if result.tracked { "optical flow" } else { "prediction only" };
            let _ = writeln!(err, "frame {i}: no detection, coasting ({how})");
        }
        let t = truth.as_ref().map(|t| t[i]);
        if let Some(v) = report.fused_m {
            fused.push(v);
            fused_truth.extend(t);
        }
        if let Some(v) = report.kalman_m {
            kalman.push(v);
            kalman_truth.extend(t);
        }
    }
    let known = truth.is_some();
    let metrics = RunMetrics {
        methods: vec![
            MethodMetrics::compute("per_frame", &fused, known.then_some(&fused_truth[..])),
            MethodMetrics::compute("kalman", &kalman, known.then_some(&kalman_truth[..])),
        ],
        fps: (compute_s > 0.0).then(|| frames.len() as f64 / compute_s),
    };
    let _ = writeln!(err, "{} frames, {detected} detected, {coasting} coasting", frames.len());
    let _ = write!(err, "{metrics}");
    if let Some(path) = &args.metrics {
        std::fs::write(path, metrics.to_json()).map_err(|e| CliError::io(path, e))?;
    }
    if detected == 0 {
        return Err(CliError::NoPlate("no frame contained a detectable plate".into()));
    }
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Table2,
    Compare,
    SynthSweep,
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub suite: Suite,
    pub compare: eval::CompareOptions,
    pub sweep: eval::SweepOptions,
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let (json, text) = match args.suite {
        Suite::Table2 => {
            let t = eval::table2();
            (serde_json::to_string(&t), t.to_string())
        }
        Suite::Compare => {
            let c = eval::compare(&args.compare);
            (serde_json::to_string(&c), c.to_string())
        }
        Suite::SynthSweep => {
            let s = eval::synth_sweep(&args.sweep);
            (serde_json::to_string(&s), s.to_string())
        }
    };
    emit(out, &json.expect("suite result serializes"))?;
    let _ = writeln!(err, "{text}");
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RenderArgs {
    pub scene: SceneSpec,
    pub out: PathBuf,
    /// `(start, end, count)` renders a sequence into `out` as a directory.
    pub trajectory: Option<(f64, f64, usize)>,
    /// Frame index range `[a, b)` in which the plate is hidden.
    pub hide: Option<(usize, usize)>,
    /// Also writes a relative depth map next to each frame.
    pub depth: bool,
}

/// Relative depth map (one quarter resolution) for a fronto-parallel scene:
/// the whole map reads `0.25 · distance`.
pub fn synthetic_depth(spec: &SceneSpec) -> DepthMap {
    let (w, h) = ((spec.width / 4).max(1), (spec.height / 4).max(1));
    DepthMap::new(w, h, vec![(0.25 * spec.distance_m) as f32; w * h]).expect("finite depth")
}

#[derive(Debug, Serialize)]
struct RenderReport {
    path: String,
    distance_m: f64,
    char_height_px: f64,
    corners: Vec<[f64; 2]>,
}

pub fn cmd_render(args: &RenderArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut frames: Vec<(PathBuf, SceneSpec)> = Vec::new();
    match args.trajectory {
        None => frames.push((args.out.clone(), args.scene.clone())),
        Some((start, end, n)) => {
            if n < 2 {
                return Err(CliError::Usage("a trajectory needs at least 2 frames".into()));
            }
            std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
            for i in 0..n {
                let d = start + (end - start) * i as f64 / (n - 1) as f64;
                let visible = !args.hide.is_some_and(|(a, b)| (a..b).contains(&i));
                let spec = SceneSpec {
                    distance_m: d,
                    plate_visible: visible && args.scene.plate_visible,
                    seed: args.scene.seed.wrapping_add(i as u64),
                    ..args.scene.clone()
                };
                frames.push((args.out.join(format!("frame_{i:04}.pgm")), spec));
            }
        }
    }
    let mut truth = String::new();
    for (path, spec) in &frames {
        let (img, gt) = render_scene(spec)?;
        pnm::write_pgm(path, &img)?;
        if args.depth {
            pfm::write_depth(&path.with_extension("pfm"), &synthetic_depth(spec))?;
        }
        truth.push_str(&format!("{}\n", spec.distance_m));
        let report = RenderReport {
            path: path.display().to_string(),
            distance_m: gt.distance_m,
            char_height_px: gt.mean_char_height(),
            corners: gt.corners.iter().map(|p| [p.x, p.y]).collect(),
        };
        emit(out, &serde_json::to_string(&report).expect("report serializes"))?;
    }
    if args.trajectory.is_some() {
        let path = args.out.join("truth.txt");
        std::fs::write(&path, truth).map_err(|e| CliError::io(&path, e))?;
    }
    let _ = writeln!(err, "rendered {} frame(s)", frames.len());
    Ok(())
}
