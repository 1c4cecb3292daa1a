use std::fmt;

use platerange_core::detection::DetectionMode;
use platerange_core::pipeline::FrameResult;
use platerange_core::stats::{mean, std_dev};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub source: String,
    pub distance_m: f64,
    pub sigma_m: f64,
}

/// One processed frame, serialized as a single JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame: u64,
    pub mode: String,
    pub detected: bool,
    pub tracked: bool,
    pub n_chars: Option<usize>,
    pub avg_height_px: Option<f64>,
    pub estimates: Vec<FeatureReport>,
    pub pitch_rad: Option<f64>,
    pub roll_rad: Option<f64>,
    pub fused_m: Option<f64>,
    pub kalman_m: Option<f64>,
    pub velocity_mps: Option<f64>,
    pub ttc_s: Option<f64>,
    /// Wall-clock processing time; only present when timing is requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processing_ms: Option<f64>,
}

pub fn mode_name(mode: DetectionMode) -> &'static str {
    match mode {
        DetectionMode::Strict => "strict",
        DetectionMode::Permissive => "permissive",
    }
}

impl FrameReport {
    pub fn from_result(r: &FrameResult) -> Self {
        let seg = r.segmentation.as_ref();
        let estimates: Vec<FeatureReport> = r
            .per_feature
            .iter()
            .chain(r.depth.iter())
            .map(|e| FeatureReport { source: e.source.as_str().to_string(), distance_m: e.value, sigma_m: e.sigma() })
            .collect();
        let pose = r.pose.filter(|p| p.valid);
        FrameReport {
            frame: r.frame_index,
            mode: mode_name(r.mode).to_string(),
            detected: r.detected,
            tracked: r.tracked,
            n_chars: seg.map(|s| s.n),
            avg_height_px: r.correction.map(|c| c.height).or(seg.map(|s| s.avg_height)),
            estimates,
            pitch_rad: pose.map(|p| p.pitch),
            roll_rad: pose.map(|p| p.roll),
            fused_m: r.fused.map(|e| e.value),
            kalman_m: r.track.map(|t| t.distance()),
            velocity_mps: r.velocity,
            ttc_s: r.ttc,
            processing_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Accuracy and spread of one estimation method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub n: usize,
    pub mean_m: f64,
    pub std_m: f64,
    pub cv_pct: f64,
    /// Against ground truth, when known.
    pub mae_m: Option<f64>,
    pub rmse_m: Option<f64>,
}

impl MethodMetrics {
    /// Summary of `values`, compared with `truth` element-wise when given.
    pub fn compute(method: &str, values: &[f64], truth: Option<&[f64]>) -> Self {
        let (m, s) = (mean(values), std_dev(values));
        let errors: Option<Vec<f64>> = truth.map(|t| values.iter().zip(t).map(|(v, t)| v - t).collect());
        let mae = errors.as_ref().map(|e| mean(&e.iter().map(|x| x.abs()).collect::<Vec<_>>()));
        let rmse = errors.as_ref().map(|e| mean(&e.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt());
        Self {
            method: method.to_string(),
            n: values.len(),
            mean_m: m,
            std_m: s,
            cv_pct: if m != 0.0 { s / m * 100.0 } else { 0.0 },
            mae_m: mae,
            rmse_m: rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub methods: Vec<MethodMetrics>,
    /// Pipeline frames per second from wall-clock time, compute only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
}

impl RunMetrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl fmt::Display for RunMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>5} {:>10} {:>10} {:>7} {:>10} {:>10}", "method", "n", "mean (m)", "std (m)", "CV (%)", "MAE (m)", "RMSE (m)")?;
        for m in &self.methods {
            writeln!(
                f,
                "{:<16} {:>5} {:>10.4} {:>10.4} {:>7.2} {:>10} {:>10}",
                m.method,
                m.n,
                m.mean_m,
                m.std_m,
                m.cv_pct,
                opt(m.mae_m),
                opt(m.rmse_m)
            )?;
        }
        if let Some(fps) = self.fps {
            writeln!(f, "fps (pipeline compute only): {fps:.1}")?;
        }
        Ok(())
    }
}
