//! Synthetic plate scenes rendered through an exact pinhole camera, with a
//! ground-truth record for every geometric quantity.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::raster::{Point, Raster};
use crate::{Error, Result};

/// Physical plate layout in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateLayout {
    pub width_m: f64,
    pub height_m: f64,
    pub char_height_m: f64,
    pub char_width_m: f64,
    pub stroke_m: f64,
    pub gap_m: f64,
    /// Border ring thickness; `None` draws no border.
    pub border_m: Option<f64>,
}

impl PlateLayout {
    /// U.S. plate, 75 mm characters.
    pub const fn us() -> Self {
        Self {
            width_m: 0.305,
            height_m: 0.152,
            char_height_m: 0.075,
            char_width_m: 0.030,
            stroke_m: 0.008,
            gap_m: 0.009,
            border_m: Some(0.005),
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = [self.width_m, self.height_m, self.char_height_m, self.char_width_m, self.stroke_m, self.gap_m];
        if dims.iter().chain(self.border_m.iter()).any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositive("plate layout dimension"));
        }
        Ok(())
    }
}

impl Default for PlateLayout {
    fn default() -> Self {
        Self::us()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Palette {
    pub background: u8,
    pub plate: u8,
    pub border: u8,
    pub ink: u8,
    pub lane: u8,
}

impl Default for Palette {
    fn default() -> Self {
        Self { background: 200, plate: 235, border: 30, ink: 25, lane: 250 }
    }
}

/// Painted ground lines parallel to the optical axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneSpec {
    /// Camera height above the road, meters.
    pub camera_height_m: f64,
    /// Lateral position of each marking's center, meters.
    pub offsets_m: Vec<f64>,
    pub marking_width_m: f64,
    pub z_range_m: (f64, f64),
}

impl Default for LaneSpec {
    fn default() -> Self {
        Self {
            camera_height_m: 1.2,
            offsets_m: vec![-5.4, -1.8, 1.8, 5.4],
            marking_width_m: 0.15,
            z_range_m: (4.0, 60.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub focal_px: f64,
    pub principal_point: Point,
    /// Plate distance along the world Z axis, meters.
    pub distance_m: f64,
    /// Plate center offset (X right, Y down), meters.
    pub plate_offset_m: (f64, f64),
    pub layout: PlateLayout,
    /// Characters from `0-9` and `A C E F H L P U`.
    pub text: String,
    /// Camera pitch in radians; positive moves the horizon down the image.
    pub pitch: f64,
    /// Camera roll about the optical axis, radians.
    pub roll: f64,
    /// Plate rotation about its vertical axis, radians; positive turns the
    /// right edge away from the camera.
    pub plate_yaw: f64,
    pub lanes: Option<LaneSpec>,
    pub plate_visible: bool,
    pub palette: Palette,
    /// Gaussian blur σ in pixels (0 disables).
    pub blur_sigma: f64,
    /// Additive Gaussian noise σ in intensity levels (0 disables).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 1280,
            height: 720,
            focal_px: 1000.0,
            principal_point: Point::new(640.0, 360.0),
            distance_m: 5.0,
            plate_offset_m: (0.0, 0.0),
            layout: PlateLayout::us(),
            text: String::from("5HPL327"),
            pitch: 0.0,
            roll: 0.0,
            plate_yaw: 0.0,
            lanes: None,
            plate_visible: true,
            palette: Palette::default(),
            blur_sigma: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Plate corners (tl, tr, br, bl) in continuous pixel coordinates.
    pub corners: [Point; 4],
    /// Each character's box corners (tl, tr, br, bl).
    pub char_corners: Vec<[Point; 4]>,
    /// Projected distance from each character's top-center to bottom-center.
    pub char_heights_px: Vec<f64>,
    pub distance_m: f64,
    /// Range rate by central difference; only set for sequences.
    pub range_rate: Option<f64>,
}

impl GroundTruth {
    pub fn mean_char_height(&self) -> f64 {
        crate::stats::mean(&self.char_heights_px)
    }
}

const SEG_A: u8 = 1;
const SEG_B: u8 = 2;
const SEG_C: u8 = 4;
const SEG_D: u8 = 8;
const SEG_E: u8 = 16;
const SEG_F: u8 = 32;
const SEG_G: u8 = 64;

/// Seven-segment mask for a supported character.
pub fn glyph_segments(c: char) -> Option<u8> {
    Some(match c {
        '0' => SEG_A | SEG_B | SEG_C | SEG_D | SEG_E | SEG_F,
        // Footed "1" so the glyph keeps a letter-like aspect ratio.
        '1' => SEG_B | SEG_C | SEG_D,
        '2' => SEG_A | SEG_B | SEG_G | SEG_E | SEG_D,
        '3' => SEG_A | SEG_B | SEG_G | SEG_C | SEG_D,
        '4' => SEG_F | SEG_G | SEG_B | SEG_C,
        '5' => SEG_A | SEG_F | SEG_G | SEG_C | SEG_D,
        '6' => SEG_A | SEG_F | SEG_G | SEG_E | SEG_C | SEG_D,
        '7' => SEG_A | SEG_B | SEG_C,
        '8' => 0x7f,
        '9' => SEG_A | SEG_B | SEG_C | SEG_D | SEG_F | SEG_G,
        'A' => SEG_A | SEG_B | SEG_C | SEG_E | SEG_F | SEG_G,
        'C' => SEG_A | SEG_D | SEG_E | SEG_F,
        'E' => SEG_A | SEG_D | SEG_E | SEG_F | SEG_G,
        'F' => SEG_A | SEG_E | SEG_F | SEG_G,
        'H' => SEG_B | SEG_C | SEG_E | SEG_F | SEG_G,
        'L' => SEG_D | SEG_E | SEG_F,
        'P' => SEG_A | SEG_B | SEG_E | SEG_F | SEG_G,
        'U' => SEG_B | SEG_C | SEG_D | SEG_E | SEG_F,
        _ => return None,
    })
}

/// Non-overlapping ink rectangles `(x0, y0, x1, y1)` of a glyph in a
/// `w × h` box with stroke `t`, from a 3×5 cell partition.
fn glyph_cells(mask: u8, w: f64, h: f64, t: f64) -> Vec<(f64, f64, f64, f64)> {
    let on = |s: u8| mask & s != 0;
    let m = h / 2.0;
    let xs = [0.0, t, w - t, w];
    let ys = [0.0, t, m - t / 2.0, m + t / 2.0, h - t, h];
    let (a, b, c, d, e, f, g) = (on(SEG_A), on(SEG_B), on(SEG_C), on(SEG_D), on(SEG_E), on(SEG_F), on(SEG_G));
    let table: [[bool; 3]; 5] = [
        [a || f, a, a || b],
        [f, false, b],
        [f || e || g, g, b || c || g],
        [e, false, c],
        [e || d, d, c || d],
    ];
    let mut out = Vec::new();
    for (row, cells) in table.iter().enumerate() {
        for (col, &inked) in cells.iter().enumerate() {
            if inked {
                out.push((xs[col], ys[row], xs[col + 1], ys[row + 1]));
            }
        }
    }
    out
}

impl SceneSpec {
    /// Camera-frame coordinates of a world point.
    pub fn to_camera(&self, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
        let (sp, cp) = (libm::sin(self.pitch), libm::cos(self.pitch));
        let (yc, zc) = (y * cp + z * sp, -y * sp + z * cp);
        let (sr, cr) = (libm::sin(self.roll), libm::cos(self.roll));
        (x * cr - yc * sr, x * sr + yc * cr, zc)
    }

    /// Pinhole projection in continuous pixel coordinates.
    pub fn project(&self, x: f64, y: f64, z: f64) -> Option<Point> {
        let (xc, yc, zc) = self.to_camera(x, y, z);
        if !(zc > 1e-9) {
            return None;
        }
        Some(Point::new(
            self.focal_px * xc / zc + self.principal_point.x,
            self.focal_px * yc / zc + self.principal_point.y,
        ))
    }

    /// World point of plate-local coordinates (meters from the top-left).
    fn plate_point(&self, s: f64, t: f64) -> (f64, f64, f64) {
        let l = &self.layout;
        let dx = s - l.width_m / 2.0;
        let (sy, cy) = (libm::sin(self.plate_yaw), libm::cos(self.plate_yaw));
        (self.plate_offset_m.0 + dx * cy, self.plate_offset_m.1 - l.height_m / 2.0 + t, self.distance_m + dx * sy)
    }

    fn project_plate_rect(&self, s0: f64, t0: f64, s1: f64, t1: f64) -> Option<[Point; 4]> {
        let p = |s, t| {
            let (x, y, z) = self.plate_point(s, t);
            self.project(x, y, z)
        };
        Some([p(s0, t0)?, p(s1, t0)?, p(s1, t1)?, p(s0, t1)?])
    }

    /// Left edge of each character box in plate-local meters.
    fn char_lefts(&self) -> Vec<f64> {
        let l = &self.layout;
        let n = self.text.chars().count();
        let total = n as f64 * l.char_width_m + n.saturating_sub(1) as f64 * l.gap_m;
        let s0 = (l.width_m - total) / 2.0;
        (0..n).map(|i| s0 + i as f64 * (l.char_width_m + l.gap_m)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("frame must be non-empty"));
        }
        if !(self.focal_px > 0.0 && self.distance_m > 0.0) {
            return Err(Error::NonPositive("focal length or distance"));
        }
        if self.noise_sigma < 0.0 || self.blur_sigma < 0.0 {
            return Err(Error::InvalidParameter("noise and blur must be non-negative"));
        }
        self.layout.validate()?;
        if self.text.chars().any(|c| glyph_segments(c).is_none()) {
            return Err(Error::InvalidParameter("unsupported plate character"));
        }
        let l = &self.layout;
        let n = self.text.chars().count() as f64;
        if n * l.char_width_m + (n - 1.0).max(0.0) * l.gap_m > l.width_m || l.char_height_m > l.height_m {
            return Err(Error::InvalidParameter("characters do not fit on the plate"));
        }
        Ok(())
    }
}

/// Renders the scene and its ground truth.
pub fn render_scene(spec: &SceneSpec) -> Result<(Raster, GroundTruth)> {
    spec.validate()?;
    let l = spec.layout;
    let corners = spec.project_plate_rect(0.0, 0.0, l.width_m, l.height_m).ok_or(Error::OutOfFrame)?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    if corners.iter().any(|p| !(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h)) {
        return Err(Error::OutOfFrame);
    }

    let t0 = (l.height_m - l.char_height_m) / 2.0;
    let mut char_corners = Vec::new();
    let mut char_heights = Vec::new();
    for s in spec.char_lefts() {
        let q = spec.project_plate_rect(s, t0, s + l.char_width_m, t0 + l.char_height_m).ok_or(Error::OutOfFrame)?;
        let mid = s + l.char_width_m / 2.0;
        let (xt, yt, zt) = spec.plate_point(mid, t0);
        let (xb, yb, zb) = spec.plate_point(mid, t0 + l.char_height_m);
        let top = spec.project(xt, yt, zt).ok_or(Error::OutOfFrame)?;
        let bottom = spec.project(xb, yb, zb).ok_or(Error::OutOfFrame)?;
        char_corners.push(q);
        char_heights.push(top.distance(&bottom));
    }

    let mut canvas = Canvas::new(spec.width, spec.height, spec.palette.background as f64);
    if let Some(lanes) = &spec.lanes {
        let mut polys = Vec::new();
        for &x in &lanes.offsets_m {
            let hw = lanes.marking_width_m / 2.0;
            let y = lanes.camera_height_m;
            let (z0, z1) = lanes.z_range_m;
            let pts = [(x - hw, z0), (x + hw, z0), (x + hw, z1), (x - hw, z1)];
            let proj: Option<Vec<Point>> = pts.iter().map(|&(px, pz)| spec.project(px, y, pz)).collect();
            if let Some(p) = proj {
                polys.push(p);
            }
        }
        canvas.paint(&polys, spec.palette.lane as f64);
    }
    if spec.plate_visible {
        canvas.paint(&[corners.to_vec()], spec.palette.plate as f64);
        if let Some(b) = l.border_m {
            let rects = [
                (0.0, 0.0, l.width_m, b),
                (0.0, l.height_m - b, l.width_m, l.height_m),
                (0.0, b, b, l.height_m - b),
                (l.width_m - b, b, l.width_m, l.height_m - b),
            ];
            let polys: Vec<Vec<Point>> = rects
                .iter()
                .filter_map(|&(s0, t0, s1, t1)| spec.project_plate_rect(s0, t0, s1, t1))
                .map(|q| q.to_vec())
                .collect();
            canvas.paint(&polys, spec.palette.border as f64);
        }
        let mut ink = Vec::new();
        for (ch, s) in spec.text.chars().zip(spec.char_lefts()) {
            let mask = glyph_segments(ch).unwrap_or(0);
            for (x0, y0, x1, y1) in glyph_cells(mask, l.char_width_m, l.char_height_m, l.stroke_m) {
                if let Some(q) = spec.project_plate_rect(s + x0, t0 + y0, s + x1, t0 + y1) {
                    ink.push(q.to_vec());
                }
            }
        }
        canvas.paint(&ink, spec.palette.ink as f64);
    }
    if spec.blur_sigma > 0.0 {
        canvas.blur(spec.blur_sigma);
    }
    let frame = canvas.finish(spec.noise_sigma, spec.seed);
    let truth = GroundTruth {
        corners,
        char_corners,
        char_heights_px: char_heights,
        distance_m: spec.distance_m,
        range_rate: None,
    };
    Ok((frame, truth))
}

/// Renders one frame per trajectory distance, `dt` seconds apart.
pub fn render_sequence(spec: &SceneSpec, trajectory: &[f64], dt: f64) -> Result<Vec<(Raster, GroundTruth)>> {
    if !(dt > 0.0) {
        return Err(Error::NonPositive("frame interval"));
    }
    if trajectory.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::NonPositive("trajectory distance"));
    }
    let n = trajectory.len();
    let mut out = Vec::with_capacity(n);
    for (i, &d) in trajectory.iter().enumerate() {
        let frame_spec = SceneSpec { distance_m: d, seed: spec.seed.wrapping_add(i as u64), ..spec.clone() };
        let (frame, mut truth) = render_scene(&frame_spec)?;
        truth.range_rate = match n {
            0 | 1 => None,
            _ if i == 0 => Some((trajectory[1] - trajectory[0]) / dt),
            _ if i == n - 1 => Some((trajectory[n - 1] - trajectory[n - 2]) / dt),
            _ => Some((trajectory[i + 1] - trajectory[i - 1]) / (2.0 * dt)),
        };
        out.push((frame, truth));
    }
    Ok(out)
}

/// Sub-pixel vertical extent of the ink crossed by pixel column `x`,
/// searched within rows `[y0, y1)`. Coverage is recovered from intensity
/// relative to the `paper` and `ink` levels; an edge falling inside a pixel
/// that the ink also leaves is placed at the pixel's uncovered midpoint.
pub fn measure_ink_extent(frame: &Raster, x: usize, y0: usize, y1: usize, paper: u8, ink: u8) -> Option<f64> {
    let span = paper as f64 - ink as f64;
    if span == 0.0 || x >= frame.width() {
        return None;
    }
    let y1 = y1.min(frame.height());
    let cov = |y: usize| ((paper as f64 - frame.get(x, y) as f64) / span).clamp(0.0, 1.0);
    let eps = 1e-6;
    let first = (y0..y1).find(|&y| cov(y) > eps)?;
    let last = (y0..y1).rev().find(|&y| cov(y) > eps)?;
    let top = if first + 1 < y1 && cov(first + 1) > eps {
        (first + 1) as f64 - cov(first)
    } else {
        first as f64 + (1.0 - cov(first)) / 2.0
    };
    let bottom = if last > y0 && cov(last - 1) > eps {
        last as f64 + cov(last)
    } else {
        last as f64 + 1.0 - (1.0 - cov(last)) / 2.0
    };
    Some(bottom - top)
}

/// Mean character height measured from a noise-free level render, probing
/// each glyph's center column. Glyphs need both top and bottom bars.
pub fn measure_char_heights(frame: &Raster, truth: &GroundTruth, palette: &Palette) -> Vec<f64> {
    truth
        .char_corners
        .iter()
        .filter_map(|q| {
            let cx = (q[0].x + q[1].x + q[2].x + q[3].x) / 4.0;
            let top = q[0].y.min(q[1].y);
            let bottom = q[2].y.max(q[3].y);
            let margin = 0.2 * (bottom - top) + 1.0;
            let y0 = libm::floor(top - margin).max(0.0) as usize;
            let y1 = libm::ceil(bottom + margin) as usize;
            measure_ink_extent(frame, libm::floor(cx) as usize, y0, y1, palette.plate, palette.ink)
        })
        .collect()
}

struct Canvas {
    width: usize,
    height: usize,
    px: Vec<f64>,
}

impl Canvas {
    fn new(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, px: vec![value; width * height] }
    }

    /// Composites one same-colored layer. Coverage of the layer's
    /// (non-overlapping) polygons is summed per pixel before blending.
    fn paint(&mut self, polys: &[Vec<Point>], value: f64) {
        let (w, h) = (self.width as f64, self.height as f64);
        let mut bounds = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in polys.iter().flatten() {
            bounds = (bounds.0.min(p.x), bounds.1.min(p.y), bounds.2.max(p.x), bounds.3.max(p.y));
        }
        let x0 = libm::floor(bounds.0).clamp(0.0, w) as usize;
        let y0 = libm::floor(bounds.1).clamp(0.0, h) as usize;
        let x1 = libm::ceil(bounds.2).clamp(0.0, w) as usize;
        let y1 = libm::ceil(bounds.3).clamp(0.0, h) as usize;
        if x0 >= x1 || y0 >= y1 {
            return;
        }
        let bw = x1 - x0;
        let mut cover = vec![0.0f64; bw * (y1 - y0)];
        for poly in polys {
            accumulate_coverage(poly, (x0, y0, x1, y1), bw, &mut cover);
        }
        for y in y0..y1 {
            for x in x0..x1 {
                let c = cover[(y - y0) * bw + (x - x0)].min(1.0);
                if c > 0.0 {
                    let i = y * self.width + x;
                    self.px[i] = self.px[i] * (1.0 - c) + value * c;
                }
            }
        }
    }

    fn blur(&mut self, sigma: f64) {
        let radius = libm::ceil(3.0 * sigma) as isize;
        let mut k: Vec<f64> = (-radius..=radius).map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma))).collect();
        let sum: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= sum);
        let (w, h) = (self.width as isize, self.height as isize);
        let mut tmp = vec![0.0; self.px.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let xx = (x + j as isize - radius).clamp(0, w - 1);
                    acc += kv * self.px[(y * w + xx) as usize];
                }
                tmp[(y * w + x) as usize] = acc;
            }
        }
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let yy = (y + j as isize - radius).clamp(0, h - 1);
                    acc += kv * tmp[(yy * w + x) as usize];
                }
                self.px[(y * w + x) as usize] = acc;
            }
        }
    }

    fn finish(self, noise_sigma: f64, seed: u64) -> Raster {
        let mut px = self.px;
        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Ok(normal) = Normal::new(0.0, noise_sigma) {
                for v in px.iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
        }
        let data = px.iter().map(|v| libm::round(*v).clamp(0.0, 255.0) as u8).collect();
        Raster::new(self.width, self.height, data).expect("canvas dimensions are consistent")
    }
}

fn accumulate_coverage(poly: &[Point], region: (usize, usize, usize, usize), stride: usize, cover: &mut [f64]) {
    let (rx0, ry0, rx1, ry1) = region;
    let (mut bx0, mut by0, mut bx1, mut by1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        bx0 = bx0.min(p.x);
        by0 = by0.min(p.y);
        bx1 = bx1.max(p.x);
        by1 = by1.max(p.y);
    }
    let x0 = (libm::floor(bx0).max(rx0 as f64)) as usize;
    let y0 = (libm::floor(by0).max(ry0 as f64)) as usize;
    let x1 = (libm::ceil(bx1).min(rx1 as f64)).max(x0 as f64) as usize;
    let y1 = (libm::ceil(by1).min(ry1 as f64)).max(y0 as f64) as usize;
    let orient = signed_area(poly).signum();
    let inside = |x: f64, y: f64| {
        poly.iter().zip(poly.iter().cycle().skip(1)).all(|(a, b)| {
            let cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
            cross * orient >= 0.0
        })
    };
    let mut scratch = Vec::with_capacity(8);
    for y in y0..y1 {
        for x in x0..x1 {
            let (fx, fy) = (x as f64, y as f64);
            let c = if inside(fx, fy) && inside(fx + 1.0, fy) && inside(fx, fy + 1.0) && inside(fx + 1.0, fy + 1.0) {
                1.0
            } else {
                pixel_coverage(poly, fx, fy, &mut scratch)
            };
            cover[(y - ry0) * stride + (x - rx0)] += c;
        }
    }
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

/// Area of a convex polygon inside the unit pixel at `(x, y)`.
fn pixel_coverage(poly: &[Point], x: f64, y: f64, scratch: &mut Vec<Point>) -> f64 {
    let mut cur: Vec<Point> = poly.to_vec();
    let planes: [(f64, f64, f64); 4] = [(1.0, 0.0, x), (-1.0, 0.0, -(x + 1.0)), (0.0, 1.0, y), (0.0, -1.0, -(y + 1.0))];
    for (a, b, c) in planes {
        scratch.clear();
        let n = cur.len();
        for i in 0..n {
            let p = cur[i];
            let q = cur[(i + 1) % n];
            let dp = a * p.x + b * p.y - c;
            let dq = a * q.x + b * q.y - c;
            if dp >= 0.0 {
                scratch.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                scratch.push(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
        core::mem::swap(&mut cur, scratch);
        if cur.len() < 3 {
            return 0.0;
        }
    }
    libm::fabs(signed_area(&cur))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_char_height_is_exact() {
        let spec = SceneSpec { distance_m: 1.0, ..SceneSpec::default() };
        let (_, truth) = render_scene(&spec).unwrap();
        for h in &truth.char_heights_px {
            assert!((h - 75.0).abs() < 1e-9, "{h}");
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let spec = SceneSpec { noise_sigma: 5.0, blur_sigma: 0.8, seed: 9, ..SceneSpec::default() };
        let (a, _) = render_scene(&spec).unwrap();
        let (b, _) = render_scene(&spec).unwrap();
        assert_eq!(a, b);
        let (c, _) = render_scene(&SceneSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pitch_changes_heights_like_the_correction_factor() {
        let base = SceneSpec::default();
        let (_, level) = render_scene(&base).unwrap();
        let phi = 3.0f64.to_radians();
        let (_, pitched) = render_scene(&SceneSpec { pitch: phi, ..base }).unwrap();
        let ratio = pitched.mean_char_height() / level.mean_char_height();
        let factor = libm::cos(phi) / libm::cos(2.0 * phi);
        assert!((ratio - factor).abs() / factor < 0.005, "{ratio} vs {factor}");
    }

    #[test]
    fn truth_corners_satisfy_projection() {
        let spec = SceneSpec { distance_m: 3.0, plate_offset_m: (0.2, -0.1), ..SceneSpec::default() };
        let (_, t) = render_scene(&spec).unwrap();
        let l = spec.layout;
        let x = 0.2 - l.width_m / 2.0;
        let y = -0.1 - l.height_m / 2.0;
        let u = spec.focal_px * x / 3.0 + 640.0;
        let v = spec.focal_px * y / 3.0 + 360.0;
        assert!((t.corners[0].x - u).abs() < 1e-9 && (t.corners[0].y - v).abs() < 1e-9);
    }

    #[test]
    fn yaw_narrows_the_plate_but_not_the_characters() {
        let base = SceneSpec::default();
        let (_, flat) = render_scene(&base).unwrap();
        let (_, turned) = render_scene(&SceneSpec { plate_yaw: 0.3, ..base }).unwrap();
        let width = |t: &GroundTruth| t.corners[1].x - t.corners[0].x;
        assert!(width(&turned) < width(&flat) * 0.97);
        let rel = (turned.mean_char_height() - flat.mean_char_height()).abs() / flat.mean_char_height();
        assert!(rel < 0.005, "{rel}");
    }

    #[test]
    fn out_of_frame_is_rejected() {
        let spec = SceneSpec { distance_m: 0.1, ..SceneSpec::default() };
        assert_eq!(render_scene(&spec).unwrap_err(), Error::OutOfFrame);
        let bad = SceneSpec { text: String::from("XYZ"), ..SceneSpec::default() };
        assert!(render_scene(&bad).is_err());
    }

    #[test]
    fn coverage_of_half_pixel_rectangle() {
        let poly = [Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(0.5, 1.0), Point::new(0.0, 1.0)];
        let mut s = Vec::new();
        assert!((pixel_coverage(&poly, 0.0, 0.0, &mut s) - 0.5).abs() < 1e-12);
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!((pixel_coverage(&tri, 0.0, 0.0, &mut s) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn layer_coverage_has_no_seams() {
        // Two abutting rectangles meeting inside a pixel column.
        let mut c = Canvas::new(4, 2, 200.0);
        let left = vec![Point::new(0.0, 0.0), Point::new(1.3, 0.0), Point::new(1.3, 2.0), Point::new(0.0, 2.0)];
        let right = vec![Point::new(1.3, 0.0), Point::new(4.0, 0.0), Point::new(4.0, 2.0), Point::new(1.3, 2.0)];
        c.paint(&[left, right], 20.0);
        assert!(c.px.iter().all(|v| (v - 20.0).abs() < 1e-9));
    }

    #[test]
    fn glyph_cells_do_not_overlap() {
        for ch in "0123456789ACEFHLPU".chars() {
            let cells = glyph_cells(glyph_segments(ch).unwrap(), 30.0, 75.0, 8.0);
            let area: f64 = cells.iter().map(|c| (c.2 - c.0) * (c.3 - c.1)).sum();
            for (i, a) in cells.iter().enumerate() {
                for b in &cells[i + 1..] {
                    let ox = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
                    let oy = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
                    assert_eq!(ox * oy, 0.0, "{ch}");
                }
            }
            assert!(area > 0.0);
            let top = cells.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let bottom = cells.iter().map(|c| c.3).fold(0.0, f64::max);
            assert_eq!((top, bottom), (0.0, 75.0), "{ch} spans the full height");
        }
    }

    #[test]
    fn sequence_truth_rate() {
        let traj: Vec<f64> = (0..5).map(|i| 20.0 - 0.5 * i as f64 * 0.1).collect();
        let seq = render_sequence(&SceneSpec::default(), &traj, 0.1).unwrap();
        for (_, t) in &seq[1..4] {
            assert!((t.range_rate.unwrap() + 0.5).abs() < 1e-9);
        }
        let flat = render_sequence(&SceneSpec::default(), &[7.0; 3], 0.1).unwrap();
        assert_eq!(flat[0].1.char_heights_px, flat[2].1.char_heights_px);
    }

    #[test]
    fn measured_height_matches_truth() {
        for d in [1.0, 2.7, 6.3] {
            let spec = SceneSpec { distance_m: d, text: String::from("8023569"), ..SceneSpec::default() };
            let (frame, truth) = render_scene(&spec).unwrap();
            let m = measure_char_heights(&frame, &truth, &spec.palette);
            assert_eq!(m.len(), 7);
            let mean = crate::stats::mean(&m);
            assert!((mean - truth.mean_char_height()).abs() / truth.mean_char_height() < 0.002, "{d}: {mean}");
        }
    }
}
