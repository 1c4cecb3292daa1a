use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::{Point, Raster};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughConfig {
    /// Distance resolution in pixels.
    pub rho_res: f64,
    /// Angle resolution in radians.
    pub theta_res: f64,
    pub votes_min: u32,
    /// Non-maximum suppression radius in rho bins.
    pub suppress_rho: usize,
    /// Non-maximum suppression radius in theta bins.
    pub suppress_theta: usize,
}

impl Default for HoughConfig {
    fn default() -> Self {
        Self {
            rho_res: 1.0,
            theta_res: core::f64::consts::PI / 180.0,
            votes_min: 50,
            suppress_rho: 8,
            suppress_theta: 5,
        }
    }
}

/// A detected line clipped to the image bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub p0: Point,
    pub p1: Point,
    /// Angle from the horizontal image axis in (−π/2, π/2], y pointing down.
    pub angle: f64,
    /// Normal form `x cos θ + y sin θ = ρ` in pixel-index coordinates.
    pub rho: f64,
    pub theta: f64,
    pub votes: u32,
}

impl LineSegment {
    /// Intersection of the two infinite lines, `None` when (nearly) parallel.
    pub fn intersect(&self, other: &LineSegment) -> Option<Point> {
        let (c1, s1) = (libm::cos(self.theta), libm::sin(self.theta));
        let (c2, s2) = (libm::cos(other.theta), libm::sin(other.theta));
        let den = c1 * s2 - s1 * c2;
        if libm::fabs(den) < 1e-9 {
            return None;
        }
        Some(Point::new(
            (self.rho * s2 - other.rho * s1) / den,
            (c1 * other.rho - c2 * self.rho) / den,
        ))
    }
}

/// Standard (ρ, θ) Hough transform over foreground pixels.
///
/// Peaks at or above `votes_min` are taken strongest first. Each accepted
/// peak is refined to the vote-weighted centroid of its 3×3 accumulator
/// neighborhood and then by a least-squares fit to the edge pixels near it;
/// those pixels withdraw their votes. Later peaks within the suppression
/// radius of an accepted one are dropped.
pub fn hough_lines(edges: &Raster, cfg: &HoughConfig) -> Vec<LineSegment> {
    if !(cfg.rho_res > 0.0 && cfg.theta_res > 0.0) {
        return Vec::new();
    }
    let (w, h) = (edges.width(), edges.height());
    let pi = core::f64::consts::PI;
    let n_theta = libm::round(pi / cfg.theta_res).max(1.0) as usize;
    let theta_step = pi / n_theta as f64;
    let diag = libm::hypot(w as f64, h as f64);
    let rho_half = libm::ceil(diag / cfg.rho_res) as usize;
    let n_rho = 2 * rho_half + 1;

    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|t| {
            let th = t as f64 * theta_step;
            (libm::cos(th) / cfg.rho_res, libm::sin(th) / cfg.rho_res)
        })
        .collect();

    let mut points: Vec<(f64, f64)> = Vec::new();
    for y in 0..h {
        for (x, &v) in edges.row(y).iter().enumerate() {
            if v != 0 {
                points.push((x as f64, y as f64));
            }
        }
    }
    // Nearest bin; the offset keeps the argument positive so truncation rounds.
    let offset = rho_half as f64 + 0.5;
    let bin = |x: f64, y: f64, c: f64, s: f64| (x * c + y * s + offset) as usize;
    let mut acc = vec![0u32; n_theta * n_rho];
    for &(x, y) in &points {
        for (t, &(c, s)) in trig.iter().enumerate() {
            acc[t * n_rho + bin(x, y, c, s)] += 1;
        }
    }

    let band = 1.5 * cfg.rho_res.max(1.0);
    let mut used = vec![false; points.len()];
    let floor = cfg.votes_min.max(1);
    // Votes only decrease, so stale heap entries are re-queued at their
    // current count; ties resolve to the lowest accumulator index.
    let mut heap: BinaryHeap<(u32, Reverse<usize>)> =
        acc.iter().enumerate().filter(|&(_, &v)| v >= floor).map(|(i, &v)| (v, Reverse(i))).collect();
    let mut kept: Vec<(usize, usize)> = Vec::new();
    let mut lines = Vec::new();
    while let Some((queued, Reverse(i))) = heap.pop() {
        let votes = acc[i];
        if votes != queued {
            if votes >= floor {
                heap.push((votes, Reverse(i)));
            }
            continue;
        }
        let (t, r) = (i / n_rho, i % n_rho);
        let near = kept.iter().any(|&(kt, kr)| {
            let dt = t.abs_diff(kt);
            if dt <= cfg.suppress_theta {
                return r.abs_diff(kr) <= cfg.suppress_rho;
            }
            // Across the θ = 0/π seam the same line has ρ negated.
            if n_theta - dt <= cfg.suppress_theta {
                let mirrored = n_rho - 1 - kr;
                return r.abs_diff(mirrored) <= cfg.suppress_rho;
            }
            false
        });
        if near {
            continue;
        }
        kept.push((t, r));

        let (mut sw, mut st, mut sr) = (0.0, 0.0, 0.0);
        for dt in -1isize..=1 {
            let tt = t as isize + dt;
            if tt < 0 || tt >= n_theta as isize {
                continue;
            }
            for dr in -1isize..=1 {
                let rr = r as isize + dr;
                if rr < 0 || rr >= n_rho as isize {
                    continue;
                }
                let v = acc[tt as usize * n_rho + rr as usize] as f64;
                sw += v;
                st += v * tt as f64;
                sr += v * rr as f64;
            }
        }
        let mut theta = st / sw * theta_step;
        let mut rho = (sr / sw - rho_half as f64) * cfg.rho_res;
        let mut inliers: Vec<usize> = Vec::new();
        for _ in 0..3 {
            let (c0, s0) = (libm::cos(theta), libm::sin(theta));
            inliers.clear();
            inliers.extend(
                (0..points.len()).filter(|&i| !used[i] && libm::fabs(points[i].0 * c0 + points[i].1 * s0 - rho) <= band),
            );
            match fit_line(&points, &inliers) {
                Some((t_fit, r_fit)) => {
                    theta = t_fit;
                    rho = r_fit;
                }
                None => break,
            }
        }
        if let Some(seg) = clip_line(rho, theta, w, h, votes) {
            lines.push(seg);
        }

        // Pixels explained by this line stop voting for any other.
        for &i in &inliers {
            let (x, y) = points[i];
            used[i] = true;
            for (tt, &(c, s)) in trig.iter().enumerate() {
                acc[tt * n_rho + bin(x, y, c, s)] -= 1;
            }
        }
    }
    lines
}

/// Total-least-squares line through the selected points as `(θ, ρ)` with
/// θ in [0, π).
fn fit_line(points: &[(f64, f64)], idx: &[usize]) -> Option<(f64, f64)> {
    if idx.len() < 2 {
        return None;
    }
    let n = idx.len() as f64;
    let (mx, my) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + points[i].0, b + points[i].1));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &i in idx {
        let (dx, dy) = (points[i].0 - mx, points[i].1 - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Normal direction is the minor axis of the scatter.
    let mut theta = 0.5 * libm::atan2(2.0 * sxy, sxx - syy) + core::f64::consts::FRAC_PI_2;
    let pi = core::f64::consts::PI;
    theta = theta.rem_euclid(pi);
    let rho = mx * libm::cos(theta) + my * libm::sin(theta);
    Some((theta, rho))
}

fn clip_line(rho: f64, theta: f64, w: usize, h: usize, votes: u32) -> Option<LineSegment> {
    let (c, s) = (libm::cos(theta), libm::sin(theta));
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    let mut hits: Vec<Point> = Vec::new();
    let eps = 1e-9;
    if libm::fabs(s) > eps {
        for x in [0.0, xmax] {
            let y = (rho - x * c) / s;
            if (-eps..=ymax + eps).contains(&y) {
                hits.push(Point::new(x, y.clamp(0.0, ymax)));
            }
        }
    }
    if libm::fabs(c) > eps {
        for y in [0.0, ymax] {
            let x = (rho - y * s) / c;
            if (-eps..=xmax + eps).contains(&x) {
                hits.push(Point::new(x.clamp(0.0, xmax), y));
            }
        }
    }
    hits.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    hits.dedup_by(|a, b| a.distance(b) < 1e-6);
    if hits.len() < 2 {
        return None;
    }
    let (p0, p1) = (hits[0], hits[hits.len() - 1]);
    Some(LineSegment { p0, p1, angle: segment_angle(p0, p1), rho, theta, votes })
}

/// Angle of the segment from the horizontal axis in (−π/2, π/2].
pub(crate) fn segment_angle(p0: Point, p1: Point) -> f64 {
    let dx = p1.x - p0.x;
    let dy = p1.y - p0.y;
    if dx == 0.0 {
        return core::f64::consts::FRAC_PI_2;
    }
    libm::atan(dy / dx)
}
