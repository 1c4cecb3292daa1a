use std::path::Path;
use std::process::{Command, Output};

use platerange::report::{FrameReport, RunMetrics};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_platerange"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?} failed: {}", stderr(&o));
    o
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn reports(o: &Output) -> Vec<FrameReport> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn render(path: &Path, extra: &[&str]) {
    let mut args = vec!["render", "--out", p(path)];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn calibrate_recovers_focal_length() {
    let dir = tempfile::tempdir().unwrap();
    let mut images = Vec::new();
    for d in ["2", "5", "10"] {
        let path = dir.path().join(format!("cal_{d}.pgm"));
        render(&path, &["--distance", d, "--focal", "3000"]);
        images.push(path);
    }
    let profile = dir.path().join("camera.txt");
    let o = ok(&["calibrate", p(&images[0]), p(&images[1]), p(&images[2]), "--distances", "2,5,10", "--out", p(&profile)]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let f = v["focal_px"].as_f64().unwrap();
    assert!((f - 3000.0).abs() / 3000.0 < 0.01, "focal {f}");
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
    assert!(std::fs::read_to_string(&profile).unwrap().contains("f_px"));

    let o = ok(&["range", p(&images[1]), "--profile", p(&profile)]);
    let d = reports(&o)[0].fused_m.unwrap();
    assert!((d - 5.0).abs() < 0.1, "ranged {d}");
}

#[test]
fn calibrate_warns_on_short_focal_length() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("near.pgm");
    render(&img, &["--distance", "0.5", "--focal", "250", "--width", "640", "--height", "480"]);
    let o = ok(&["calibrate", p(&img), "--distances", "0.5"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(!v["warnings"].as_array().unwrap().is_empty());
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn calibrate_without_any_plate_fails() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("empty.pgm");
    render(&img, &["--no-plate"]);
    assert_eq!(run(&["calibrate", p(&img), "--distances", "3"]).status.code(), Some(3));
    assert_eq!(run(&["calibrate", p(&img), "--distances", "3,4"]).status.code(), Some(1));
}

#[test]
fn range_single_image() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("five.pgm");
    render(&img, &["--distance", "5", "--focal", "5000"]);
    let o = ok(&["range", p(&img), "--focal", "5000"]);
    let r = &reports(&o)[0];
    assert!(r.detected);
    assert_eq!(r.n_chars, Some(7));
    let d = r.fused_m.unwrap();
    assert!((4.9..=5.1).contains(&d), "ranged {d}");
    assert!(r.processing_ms.is_none());

    let timed = reports(&ok(&["range", p(&img), "--focal", "5000", "--timing"]));
    assert!(timed[0].processing_ms.unwrap() > 0.0);
}

#[test]
fn range_without_plate_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("blank.pgm");
    render(&img, &["--no-plate", "--noise", "3"]);
    let o = run(&["range", p(&img), "--focal", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let r = &reports(&o)[0];
    assert!(!r.detected && r.fused_m.is_none());
}

#[test]
fn pose_flag_is_identity_on_level_scene() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("level.pgm");
    render(&img, &["--distance", "5", "--focal", "5000"]);
    let with = reports(&ok(&["range", p(&img), "--focal", "5000"]));
    let without = reports(&ok(&["range", p(&img), "--focal", "5000", "--no-pose"]));
    assert_eq!(with[0].fused_m, without[0].fused_m);
    assert_eq!(without[0].pitch_rad, None);
}

#[test]
fn depth_map_joins_the_fusion() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("frame.pgm");
    render(&img, &["--distance", "5", "--focal", "5000", "--depth-out"]);
    let depth = img.with_extension("pfm");
    let r = &reports(&ok(&["range", p(&img), "--focal", "5000", "--depth", p(&depth)]))[0];
    assert!(r.estimates.iter().any(|e| e.source == "depth_net"), "{:?}", r.estimates);
    let d = r.fused_m.unwrap();
    assert!((4.9..=5.1).contains(&d));
}

#[test]
fn multi_feature_reports_every_feature() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("frame.pgm");
    render(&img, &["--distance", "4", "--focal", "3000"]);
    let profile = dir.path().join("camera.txt");
    std::fs::write(
        &profile,
        "f_px = 3000\nchar_height_m = 0.075\nplate_height_m = 0.152\nstroke_width_m = 0.008\nchar_spacing_m = 0.009\nborder_thickness_m = 0.005\n",
    )
    .unwrap();
    let r = &reports(&ok(&["range", p(&img), "--profile", p(&profile), "--multi-feature"]))[0];
    assert_eq!(r.estimates.len(), 4, "{:?}", r.estimates);
    for e in &r.estimates {
        assert!((e.distance_m - 4.0).abs() < 0.6, "{e:?}");
    }
}

#[test]
fn approach_sequence_is_tracked() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    ok(&["render", "--out", p(&seq), "--focal", "5000", "--trajectory", "20:15:90"]);
    let metrics = dir.path().join("metrics.json");
    let truth = seq.join("truth.txt");
    let o = ok(&["track", p(&seq), "--focal", "5000", "--truth", p(&truth), "--metrics", p(&metrics)]);
    let frames = reports(&o);
    assert_eq!(frames.len(), 90);

    let truth_v = -5.0 / (89.0 * 0.066);
    let v = frames.last().unwrap().velocity_mps.unwrap();
    assert!((v - truth_v).abs() < 0.1 * truth_v.abs(), "velocity {v} vs {truth_v}");
    assert!(frames.last().unwrap().ttc_s.unwrap() > 0.0);

    let m: RunMetrics = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    let (raw, kalman) = (&m.methods[0], &m.methods[1]);
    assert!(kalman.rmse_m.unwrap() < raw.rmse_m.unwrap(), "{m:?}");
    assert!(m.fps.unwrap() > 0.0);
    assert!(stderr(&o).contains("RMSE"));
}

#[test]
fn hidden_plate_coasts() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    ok(&["render", "--out", p(&seq), "--focal", "2500", "--trajectory", "8:7:40", "--hide", "15:25"]);
    let o = ok(&["track", p(&seq), "--focal", "2500"]);
    let frames = reports(&o);
    for (i, f) in frames.iter().enumerate() {
        assert_eq!(f.detected, !(15..25).contains(&i), "frame {i}");
        assert!(f.kalman_m.is_some(), "frame {i} lost its track");
    }
    assert_eq!(stderr(&o).matches("coasting (").count(), 10);
    let last = frames.last().unwrap().kalman_m.unwrap();
    assert!((last - 7.0).abs() < 0.5, "{last}");
}

#[test]
fn static_scene_has_no_velocity() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    ok(&["render", "--out", p(&seq), "--focal", "2500", "--trajectory", "8:8:30", "--noise", "2"]);
    let frames = reports(&ok(&["track", p(&seq), "--focal", "2500"]));
    let v = frames.last().unwrap().velocity_mps.unwrap();
    assert!(v.abs() < 0.05, "{v}");
}

#[test]
fn track_needs_two_frames_and_one_detection() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("blank.pgm");
    render(&img, &["--no-plate"]);
    assert_eq!(run(&["track", p(&img), "--focal", "1000"]).status.code(), Some(1));
    assert_eq!(run(&["track", p(&img), p(&img), "--focal", "1000"]).status.code(), Some(3));
}

#[test]
fn eval_table2() {
    let o = ok(&["eval", "table2"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let printed: Vec<f64> = v["distances_m"].as_array().unwrap().iter().map(|d| (d.as_f64().unwrap() * 1e4).round() / 1e4).collect();
    assert_eq!(printed, platerange::eval::TABLE2_PRINTED_M.to_vec());
    assert!(stderr(&o).contains("CV"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["eval", "everything"]).status.code(), Some(1));
    assert_eq!(run(&["range"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["range", "x.pgm", "--profile", "a", "--focal", "3"]).status.code(), Some(1));
}

#[test]
fn io_and_format_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pgm");
    assert_eq!(run(&["range", p(&missing), "--focal", "1000"]).status.code(), Some(2));

    let garbage = dir.path().join("garbage.pgm");
    std::fs::write(&garbage, b"P5\n10 10\n255\nshort").unwrap();
    assert_eq!(run(&["range", p(&garbage), "--focal", "1000"]).status.code(), Some(2));

    let img = dir.path().join("ok.pgm");
    render(&img, &["--distance", "5"]);
    let bad_depth = dir.path().join("bad.pfm");
    std::fs::write(&bad_depth, b"PF-GRAY\n2 2\n-1.0\n\x00").unwrap();
    assert_eq!(run(&["range", p(&img), "--focal", "1000", "--depth", p(&bad_depth)]).status.code(), Some(2));

    let bad_profile = dir.path().join("camera.txt");
    std::fs::write(&bad_profile, "zoom = 3\n").unwrap();
    assert_eq!(run(&["range", p(&img), "--profile", p(&bad_profile)]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("noisy.pgm");
    render(&img, &["--distance", "4", "--noise", "3", "--seed", "9"]);
    let a = ok(&["range", p(&img), "--focal", "1000", "--multi-feature"]);
    let b = ok(&["range", p(&img), "--focal", "1000", "--multi-feature"]);
    assert_eq!(a.stdout, b.stdout);

    let r = &reports(&a)[0];
    let back: FrameReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(&back, r);

    let again = dir.path().join("noisy2.pgm");
    render(&again, &["--distance", "4", "--noise", "3", "--seed", "9"]);
    assert_eq!(std::fs::read(&img).unwrap(), std::fs::read(&again).unwrap());
}
