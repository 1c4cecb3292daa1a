//! Plain-text `key = value` camera profiles.
//!
//! Recognized keys are `f_px`, `u0`, `v0`, `jurisdiction` (a preset name) and
//! the plate dimension keys in meters: `char_height_m`, `plate_height_m`,
//! `plate_width_m`, `stroke_width_m`, `char_spacing_m`, `border_thickness_m`.
//! Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use platerange_core::ranging::{CameraModel, PlateDimensions};
use platerange_core::raster::Point;

use crate::error::{CliError, Result};

/// Named plate-dimension presets.
pub fn jurisdiction(name: &str) -> Option<PlateDimensions> {
    match name {
        "us" => Some(PlateDimensions::us_standard()),
        "us-experiment" => Some(PlateDimensions::us_experiment()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraProfile {
    pub focal_px: f64,
    /// Principal point; the image center when absent.
    pub principal_point: Option<(f64, f64)>,
    pub jurisdiction: Option<String>,
    pub dims: PlateDimensions,
}

impl CameraProfile {
    pub fn new(focal_px: f64, dims: PlateDimensions) -> Self {
        Self { focal_px, principal_point: None, jurisdiction: None, dims }
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            entries.push((n + 1, k.trim(), v.trim()));
        }
        let preset = entries.iter().find(|e| e.1 == "jurisdiction").map(|e| e.2);
        let mut dims = match preset {
            Some(name) => jurisdiction(name).ok_or_else(|| format!("unknown jurisdiction {name:?}"))?,
            None => PlateDimensions::us_standard(),
        };
        let (mut focal, mut u0, mut v0) = (None, None, None);
        for (n, key, value) in entries {
            if key == "jurisdiction" {
                continue;
            }
            let x: f64 = value.parse().map_err(|_| format!("line {n}: {key} is not a number"))?;
            match key {
                "f_px" => focal = Some(x),
                "u0" => u0 = Some(x),
                "v0" => v0 = Some(x),
                "char_height_m" => dims.char_height_m = x,
                "plate_height_m" => dims.plate_height_m = x,
                "plate_width_m" => dims.plate_width_m = Some(x),
                "stroke_width_m" => dims.stroke_width_m = Some(x),
                "char_spacing_m" => dims.char_spacing_m = Some(x),
                "border_thickness_m" => dims.border_thickness_m = Some(x),
                _ => return Err(format!("line {n}: unknown key {key:?}")),
            }
        }
        let focal_px = focal.ok_or("missing f_px")?;
        let principal_point = match (u0, v0) {
            (Some(u), Some(v)) => Some((u, v)),
            (None, None) => None,
            _ => return Err("u0 and v0 must be given together".into()),
        };
        dims.validate().map_err(|e| e.to_string())?;
        Ok(Self { focal_px, principal_point, jurisdiction: preset.map(str::to_string), dims })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "f_px = {}", self.focal_px);
        if let Some((u, v)) = self.principal_point {
            let _ = writeln!(s, "u0 = {u}\nv0 = {v}");
        }
        if let Some(j) = &self.jurisdiction {
            let _ = writeln!(s, "jurisdiction = {j}");
        }
        let d = &self.dims;
        let _ = writeln!(s, "char_height_m = {}\nplate_height_m = {}", d.char_height_m, d.plate_height_m);
        let optional = [
            ("plate_width_m", d.plate_width_m),
            ("stroke_width_m", d.stroke_width_m),
            ("char_spacing_m", d.char_spacing_m),
            ("border_thickness_m", d.border_thickness_m),
        ];
        for (k, v) in optional {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// Camera for a `width × height` image.
    pub fn camera(&self, width: usize, height: usize) -> Result<CameraModel> {
        let (u, v) = self.principal_point.unwrap_or((width as f64 / 2.0, height as f64 / 2.0));
        Ok(CameraModel::new(self.focal_px, Point::new(u, v), self.dims)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|m| CliError::format(path, m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# bench camera\nf_px = 83.92\nu0 = 320\nv0 = 240\njurisdiction = us-experiment\nstroke_width_m = 0.008\n";
        let p = CameraProfile::parse(text).unwrap();
        assert_eq!(p.focal_px, 83.92);
        assert_eq!(p.principal_point, Some((320.0, 240.0)));
        assert_eq!(p.dims.char_height_m, 0.07);
        assert_eq!(p.dims.stroke_width_m, Some(0.008));
        assert_eq!(CameraProfile::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn defaults_to_image_center_and_us_plate() {
        let p = CameraProfile::parse("f_px=1000").unwrap();
        assert_eq!(p.dims, PlateDimensions::us_standard());
        let cam = p.camera(1280, 720).unwrap();
        assert_eq!(cam.principal_point, Point::new(640.0, 360.0));
    }

    #[test]
    fn errors_name_the_problem() {
        assert!(CameraProfile::parse("u0 = 1\nv0 = 2").unwrap_err().contains("f_px"));
        assert!(CameraProfile::parse("f_px = x").unwrap_err().contains("not a number"));
        assert!(CameraProfile::parse("f_px = 1\nzoom = 2").unwrap_err().contains("zoom"));
        assert!(CameraProfile::parse("f_px = 1\nu0 = 2").unwrap_err().contains("together"));
        assert!(CameraProfile::parse("f_px = 1\njurisdiction = mars").unwrap_err().contains("mars"));
        assert!(CameraProfile::parse("f_px 1").unwrap_err().contains("key = value"));
    }
}
