use alloc::vec::Vec;

use super::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Projective transform `p' ~ H p` with `H[2][2] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Normalizes so the last entry is one and checks invertibility.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let s = m[2][2];
        if libm::fabs(s) < 1e-300 || !s.is_finite() {
            return Err(Error::SingularHomography);
        }
        let mut n = m;
        for row in n.iter_mut() {
            for v in row.iter_mut() {
                *v /= s;
            }
        }
        let h = Homography { m: n };
        if libm::fabs(h.determinant()) <= 1e-12 || !h.determinant().is_finite() {
            return Err(Error::SingularHomography);
        }
        Ok(h)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, p: Point) -> Option<Point> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if libm::fabs(w) < 1e-300 {
            return None;
        }
        Some(Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Homography> {
        let m = &self.m;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Homography::new(adj)
    }

    pub fn compose(&self, rhs: &Homography) -> Result<Homography> {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        Homography::new(out)
    }
}

/// Projective map taking the unit square corners (0,0), (1,0), (1,1), (0,1)
/// onto `q` in order (Heckbert's closed form).
fn square_to_quad(q: &[Point; 4]) -> Result<Homography> {
    let (x0, y0, x1, y1, x2, y2, x3, y3) = (q[0].x, q[0].y, q[1].x, q[1].y, q[2].x, q[2].y, q[3].x, q[3].y);
    let sx = x0 - x1 + x2 - x3;
    let sy = y0 - y1 + y2 - y3;
    let (dx1, dx2, dy1, dy2) = (x1 - x2, x3 - x2, y1 - y2, y3 - y2);
    let den = dx1 * dy2 - dx2 * dy1;
    if libm::fabs(den) < 1e-15 {
        return Err(Error::DegenerateConfiguration);
    }
    let g = (sx * dy2 - dx2 * sy) / den;
    let h = (dx1 * sy - sx * dy1) / den;
    Homography::new([
        [x1 - x0 + g * x1, x3 - x0 + h * x3, x0],
        [y1 - y0 + g * y1, y3 - y0 + h * y3, y0],
        [g, h, 1.0],
    ])
}

fn has_collinear_triple(p: &[Point; 4]) -> bool {
    let scale = p
        .iter()
        .flat_map(|a| p.iter().map(move |b| a.distance(b)))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                if libm::fabs(cross(p[i], p[j], p[k])) <= 1e-9 * scale * scale {
                    return true;
                }
            }
        }
    }
    false
}

/// Exact homography mapping each `src[i]` onto `dst[i]`.
pub fn solve_homography(src: &[Point; 4], dst: &[Point; 4]) -> Result<Homography> {
    if has_collinear_triple(src) || has_collinear_triple(dst) {
        return Err(Error::DegenerateConfiguration);
    }
    let a = square_to_quad(src)?;
    let b = square_to_quad(dst)?;
    b.compose(&a.inverse()?)
}

/// Inverse-mapped bilinear warp in continuous coordinates. `h` maps source
/// to destination; samples falling outside the source are 0.
pub fn warp_perspective(img: &Raster, h: &Homography, out_size: (usize, usize)) -> Result<Raster> {
    let inv = h.inverse()?;
    let (ow, oh) = out_size;
    if ow == 0 || oh == 0 {
        return Err(Error::NonPositive("warp output size"));
    }
    let (w, hgt) = (img.width() as f64, img.height() as f64);
    let mut out = Raster::filled(ow, oh, 0);
    for y in 0..oh {
        for x in 0..ow {
            let Some(s) = inv.apply(Point::new(x as f64 + 0.5, y as f64 + 0.5)) else {
                continue;
            };
            if !(s.x >= 0.0 && s.y >= 0.0 && s.x <= w && s.y <= hgt) {
                continue;
            }
            out.set(x, y, sample_bilinear(img, s.x - 0.5, s.y - 0.5));
        }
    }
    Ok(out)
}

/// Bilinear sample at pixel-index coordinates with edge replication.
pub(crate) fn sample_bilinear(img: &Raster, x: f64, y: f64) -> u8 {
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let (fx, fy) = (x - x0, y - y0);
    let (xi, yi) = (x0 as isize, y0 as isize);
    let p00 = img.get_clamped(xi, yi) as f64;
    let p10 = img.get_clamped(xi + 1, yi) as f64;
    let p01 = img.get_clamped(xi, yi + 1) as f64;
    let p11 = img.get_clamped(xi + 1, yi + 1) as f64;
    let v = (p00 * (1.0 - fx) + p10 * fx) * (1.0 - fy) + (p01 * (1.0 - fx) + p11 * fx) * fy;
    libm::round(v).clamp(0.0, 255.0) as u8
}

/// Convex hull (Andrew's monotone chain), clockwise on screen, no collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rectangle. `width ≥ height` always; `angle` is the
/// direction of the width side in radians, in (−π/2, π/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub center: Point,
    pub width: f64,
    pub height: f64,
    pub angle: f64,
}

impl RotatedRect {
    pub fn aspect_ratio(&self) -> f64 {
        if self.height > 0.0 {
            self.width / self.height
        } else {
            f64::INFINITY
        }
    }

    pub fn corners(&self) -> [Point; 4] {
        let (s, c) = (libm::sin(self.angle), libm::cos(self.angle));
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        let at = |u: f64, v: f64| Point::new(self.center.x + u * c - v * s, self.center.y + u * s + v * c);
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }
}

/// Rotating-calipers search over hull edges.
pub fn min_area_rect(points: &[Point]) -> Option<RotatedRect> {
    let hull = convex_hull(points);
    match hull.len() {
        0 => return None,
        1 => {
            return Some(RotatedRect { center: hull[0], width: 0.0, height: 0.0, angle: 0.0 });
        }
        _ => {}
    }
    let mut best: Option<(f64, RotatedRect)> = None;
    let n = hull.len();
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = a.distance(&b);
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let u = p.x * ux + p.y * uy;
            let v = -p.x * uy + p.y * ux;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|(a, _)| area < *a - 1e-9) {
            let (cu, cv) = ((umin + umax) / 2.0, (vmin + vmax) / 2.0);
            let center = Point::new(cu * ux - cv * uy, cu * uy + cv * ux);
            let rect = normalize_rect(center, umax - umin, vmax - vmin, libm::atan2(uy, ux));
            best = Some((area, rect));
        }
    }
    best.map(|(_, r)| r)
}

fn normalize_rect(center: Point, w: f64, h: f64, angle: f64) -> RotatedRect {
    let (width, height, mut angle) = if w >= h { (w, h, angle) } else { (h, w, angle + core::f64::consts::FRAC_PI_2) };
    let pi = core::f64::consts::PI;
    while angle > pi / 2.0 {
        angle -= pi;
    }
    while angle <= -pi / 2.0 {
        angle += pi;
    }
    RotatedRect { center, width, height, angle }
}

/// Orders four corners as (tl, tr, br, bl): tl has the smallest `x + y`, br the
/// largest, and tr the smaller `y − x` of the remaining two. Ties break on
/// `(x, y)` so any input permutation yields the same order.
pub fn order_corners(corners: &[Point; 4]) -> [Point; 4] {
    let key = |p: &Point| (p.x, p.y);
    let mut pts = *corners;
    pts.sort_by(|a, b| {
        (a.x + a.y)
            .total_cmp(&(b.x + b.y))
            .then(key(a).0.total_cmp(&key(b).0))
            .then(key(a).1.total_cmp(&key(b).1))
    });
    let tl = pts[0];
    let br = pts[3];
    let (mut tr, mut bl) = (pts[1], pts[2]);
    let order = (tr.y - tr.x).total_cmp(&(bl.y - bl.x)).then(tr.x.total_cmp(&bl.x).reverse());
    if order == core::cmp::Ordering::Greater {
        core::mem::swap(&mut tr, &mut bl);
    }
    [tl, tr, br, bl]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(s: f64) -> [Point; 4] {
        [Point::new(0.0, 0.0), Point::new(s, 0.0), Point::new(s, s), Point::new(0.0, s)]
    }

    #[test]
    fn identity_and_scale() {
        let h = solve_homography(&sq(1.0), &sq(1.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((h.m[i][j] - e).abs() < 1e-12);
            }
        }
        let h = solve_homography(&sq(1.0), &sq(2.0)).unwrap();
        let expect = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((h.m[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collinear_points_are_rejected() {
        let bad = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0), Point::new(0.0, 5.0)];
        assert_eq!(solve_homography(&bad, &sq(1.0)), Err(Error::DegenerateConfiguration));
        assert_eq!(solve_homography(&sq(1.0), &bad), Err(Error::DegenerateConfiguration));
    }

    #[test]
    fn singular_matrix_is_rejected() {
        assert_eq!(
            Homography::new([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]),
            Err(Error::SingularHomography)
        );
    }

    #[test]
    fn warp_identity_is_identity() {
        let img = Raster::from_fn(11, 8, |x, y| (x * 23 + y * 7) as u8);
        let out = warp_perspective(&img, &Homography::IDENTITY, (11, 8)).unwrap();
        assert_eq!(out, img);
        let padded = warp_perspective(&img, &Homography::IDENTITY, (14, 5)).unwrap();
        for y in 0..5 {
            for x in 0..14 {
                let e = if x < 11 { img.get(x, y) } else { 0 };
                assert_eq!(padded.get(x, y), e);
            }
        }
    }

    #[test]
    fn warp_scale_of_uniform_is_uniform() {
        let img = Raster::filled(10, 10, 180);
        let h = solve_homography(&sq(10.0), &sq(20.0)).unwrap();
        let out = warp_perspective(&img, &h, (20, 20)).unwrap();
        assert!(out.data().iter().all(|&v| v == 180));
    }

    #[test]
    fn min_area_rect_of_rotated_square_points() {
        let angle = 0.3f64;
        let (s, c) = (angle.sin(), angle.cos());
        let pts: Vec<Point> = [(-4.0, -1.0), (4.0, -1.0), (4.0, 1.0), (-4.0, 1.0), (0.0, 0.0)]
            .iter()
            .map(|&(u, v)| Point::new(10.0 + u * c - v * s, 20.0 + u * s + v * c))
            .collect();
        let r = min_area_rect(&pts).unwrap();
        assert!((r.width - 8.0).abs() < 1e-9);
        assert!((r.height - 2.0).abs() < 1e-9);
        assert!((r.angle - angle).abs() < 1e-9);
        assert!((r.center.x - 10.0).abs() < 1e-9 && (r.center.y - 20.0).abs() < 1e-9);
    }

    #[test]
    fn tall_rect_is_reported_wide() {
        let pts = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 6.0), Point::new(0.0, 6.0)];
        let r = min_area_rect(&pts).unwrap();
        assert_eq!((r.width, r.height), (6.0, 2.0));
        assert!(r.angle.abs() - core::f64::consts::FRAC_PI_2 < 1e-12);
    }

    #[test]
    fn corner_order_on_axis_aligned_rect() {
        let c = [Point::new(5.0, 9.0), Point::new(1.0, 1.0), Point::new(1.0, 9.0), Point::new(5.0, 1.0)];
        let o = order_corners(&c);
        assert_eq!(o, [Point::new(1.0, 1.0), Point::new(5.0, 1.0), Point::new(5.0, 9.0), Point::new(1.0, 9.0)]);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn quad() -> impl Strategy<Value = [Point; 4]> {
        // Perturbed rectangle corners keep the quad convex and non-degenerate.
        (10.0f64..400.0, 10.0f64..300.0, 20.0f64..200.0, 20.0f64..150.0, proptest::array::uniform8(-8.0f64..8.0))
            .prop_map(|(x, y, w, h, j)| {
                [
                    Point::new(x + j[0], y + j[1]),
                    Point::new(x + w + j[2], y + j[3]),
                    Point::new(x + w + j[4], y + h + j[5]),
                    Point::new(x + j[6], y + h + j[7]),
                ]
            })
    }

    proptest! {
        #[test]
        fn homography_maps_correspondences(src in quad(), dst in quad()) {
            let h = solve_homography(&src, &dst).unwrap();
            for i in 0..4 {
                let p = h.apply(src[i]).unwrap();
                prop_assert!(p.distance(&dst[i]) < 1e-6);
            }
        }

        #[test]
        fn corner_order_is_permutation_invariant(q in quad(), perm in Just([0usize,1,2,3]).prop_shuffle()) {
            let shuffled = [q[perm[0]], q[perm[1]], q[perm[2]], q[perm[3]]];
            prop_assert_eq!(order_corners(&q), order_corners(&shuffled));
            let o = order_corners(&q);
            // Clockwise on screen: positive shoelace sum with y down.
            let area: f64 = (0..4).map(|i| o[i].x * o[(i + 1) % 4].y - o[(i + 1) % 4].x * o[i].y).sum();
            prop_assert!(area > 0.0);
        }
    }
}
