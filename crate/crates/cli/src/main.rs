use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use platerange::commands::{self, CameraSource, PipelineArgs, Suite};
use platerange::eval::{CompareOptions, SweepOptions};
use platerange::pfm::DepthKind;
use platerange_core::detection::DetectionMode;
use platerange_core::raster::Point;
use platerange_core::synth::{LaneSpec, SceneSpec};

/// Monocular distance estimation from license-plate typography.
#[derive(Parser, Debug)]
#[command(name = "platerange", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the focal length from images of a plate at known distances.
    Calibrate {
        /// Calibration images (PGM/PPM).
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Known distance in meters for each image, in order.
        #[arg(long, value_delimiter = ',', required = true)]
        distances: Vec<f64>,
        /// Physical plate height in meters.
        #[arg(long, default_value_t = 0.152)]
        plate_height: f64,
        #[arg(long, default_value = "us")]
        jurisdiction: String,
        /// Writes a camera profile.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the distance to the plate in one image.
    Range {
        image: PathBuf,
        #[command(flatten)]
        pipeline: PipelineOpts,
        /// Relative depth map (PF-GRAY) for the same frame.
        #[arg(long)]
        depth: Option<PathBuf>,
        /// The depth map holds inverse depth.
        #[arg(long, requires = "depth")]
        inverse_depth: bool,
    },
    /// Track the plate across a frame sequence.
    Track {
        /// Frame files in order, or one directory of frames.
        #[arg(required = true)]
        frames: Vec<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineOpts,
        /// Seconds between frames.
        #[arg(long, default_value_t = 0.066)]
        dt: f64,
        /// True distance per frame, one per line.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Writes run metrics as JSON.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Run a built-in evaluation suite.
    Eval {
        suite: SuiteArg,
        /// Frames for `compare`.
        #[arg(long, default_value_t = 200)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Distance multiplier for `synth-sweep`.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Render a synthetic plate scene (or sequence) to PGM.
    Render {
        /// Output file, or directory with `--trajectory`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        distance: f64,
        #[arg(long, default_value_t = 1000.0)]
        focal: f64,
        #[arg(long, default_value_t = 1280)]
        width: usize,
        #[arg(long, default_value_t = 720)]
        height: usize,
        #[arg(long, default_value = "5HPL327")]
        text: String,
        /// Camera pitch in degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pitch: f64,
        /// Camera roll in degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        roll: f64,
        /// Plate yaw in degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        yaw: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.0)]
        blur: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw lane markings.
        #[arg(long)]
        lanes: bool,
        /// Omit the plate.
        #[arg(long)]
        no_plate: bool,
        /// `START:END:N` distances in meters over N frames.
        #[arg(long, value_parser = parse_trajectory)]
        trajectory: Option<(f64, f64, usize)>,
        /// `A:B` frame range (end exclusive) with the plate hidden.
        #[arg(long, value_parser = parse_hide, requires = "trajectory")]
        hide: Option<(usize, usize)>,
        /// Also write a constant relative depth map (`.pfm`) per frame.
        #[arg(long)]
        depth_out: bool,
    },
}

#[derive(Args, Debug)]
struct PipelineOpts {
    /// Camera profile written by `calibrate`.
    #[arg(long, conflicts_with = "focal", required_unless_present = "focal")]
    profile: Option<PathBuf>,
    /// Focal length in pixels, instead of a profile.
    #[arg(long)]
    focal: Option<f64>,
    /// Plate preset used with `--focal`.
    #[arg(long, default_value = "us")]
    jurisdiction: String,
    /// Fuse stroke, spacing, border and width estimates too.
    #[arg(long)]
    multi_feature: bool,
    /// Skip the pitch/roll correction.
    #[arg(long)]
    no_pose: bool,
    /// Pin the detection mode.
    #[arg(long)]
    mode: Option<ModeArg>,
    /// Include per-frame processing time in the output.
    #[arg(long)]
    timing: bool,
}

impl PipelineOpts {
    fn into_args(self) -> PipelineArgs {
        let camera = match (self.profile, self.focal) {
            (Some(p), _) => CameraSource::Profile(p),
            (None, Some(focal_px)) => CameraSource::Focal { focal_px, jurisdiction: self.jurisdiction },
            (None, None) => unreachable!("clap requires one of --profile/--focal"),
        };
        PipelineArgs {
            camera,
            multi_feature: self.multi_feature,
            no_pose: self.no_pose,
            mode: self.mode.map(|m| match m {
                ModeArg::Strict => DetectionMode::Strict,
                ModeArg::Permissive => DetectionMode::Permissive,
            }),
            timing: self.timing,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Strict,
    Permissive,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SuiteArg {
    Table2,
    Compare,
    SynthSweep,
}

fn parse_trajectory(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err("expected START:END:N".into());
    };
    let num = |x: &str| x.parse::<f64>().map_err(|_| format!("{x:?} is not a number"));
    let n = n.parse().map_err(|_| format!("{n:?} is not a frame count"))?;
    Ok((num(a)?, num(b)?, n))
}

fn parse_hide(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected A:B")?;
    let idx = |x: &str| x.parse::<usize>().map_err(|_| format!("{x:?} is not a frame index"));
    Ok((idx(a)?, idx(b)?))
}

fn run(cli: Cli) -> platerange::Result<()> {
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    match cli.command {
        Command::Calibrate { images, distances, plate_height, jurisdiction, out: path } => {
            let args = commands::CalibrateArgs { images, distances_m: distances, plate_height_m: plate_height, jurisdiction, out: path };
            commands::cmd_calibrate(&args, &mut out, &mut err).map(drop)
        }
        Command::Range { image, pipeline, depth, inverse_depth } => {
            let depth_kind = if inverse_depth { DepthKind::InverseDepth } else { DepthKind::Depth };
            let args = commands::RangeArgs { image, pipeline: pipeline.into_args(), depth, depth_kind };
            commands::cmd_range(&args, &mut out, &mut err).map(drop)
        }
        Command::Track { frames, pipeline, dt, truth, metrics } => {
            let args = commands::TrackArgs { frames, pipeline: pipeline.into_args(), dt, truth, metrics };
            commands::cmd_track(&args, &mut out, &mut err).map(drop)
        }
        Command::Eval { suite, frames, seed, scale } => {
            let suite = match suite {
                SuiteArg::Table2 => Suite::Table2,
                SuiteArg::Compare => Suite::Compare,
                SuiteArg::SynthSweep => Suite::SynthSweep,
            };
            let args = commands::EvalArgs {
                suite,
                compare: CompareOptions { frames, seed, ..CompareOptions::default() },
                sweep: SweepOptions { scale, ..SweepOptions::default() },
            };
            commands::cmd_eval(&args, &mut out, &mut err)
        }
        Command::Render {
            out: path,
            distance,
            focal,
            width,
            height,
            text,
            pitch,
            roll,
            yaw,
            noise,
            blur,
            seed,
            lanes,
            no_plate,
            trajectory,
            hide,
            depth_out,
        } => {
            let scene = SceneSpec {
                width,
                height,
                focal_px: focal,
                principal_point: Point::new(width as f64 / 2.0, height as f64 / 2.0),
                distance_m: distance,
                text,
                pitch: pitch.to_radians(),
                roll: roll.to_radians(),
                plate_yaw: yaw.to_radians(),
                lanes: lanes.then(LaneSpec::default),
                plate_visible: !no_plate,
                noise_sigma: noise,
                blur_sigma: blur,
                seed,
                ..SceneSpec::default()
            };
            let args = commands::RenderArgs { scene, out: path, trajectory, hide, depth: depth_out };
            commands::cmd_render(&args, &mut out, &mut err)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
