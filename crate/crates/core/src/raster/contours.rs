use alloc::vec;
use alloc::vec::Vec;

use super::Raster;

/// Axis-aligned rectangle in pixel units: `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

/// Outer boundary of one 8-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Boundary pixels in tracing order, clockwise on screen (y down).
    pub points: Vec<(i32, i32)>,
    pub is_external: bool,
    /// Number of pixels in the component.
    pub area: usize,
    pub bounding_rect: Rect,
}

impl Contour {
    /// Area enclosed by the boundary polygon through pixel centers (shoelace).
    pub fn polygon_area(&self) -> f64 {
        let n = self.points.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0i64;
        for i in 0..n {
            let (x0, y0) = self.points[i];
            let (x1, y1) = self.points[(i + 1) % n];
            acc += x0 as i64 * y1 as i64 - x1 as i64 * y0 as i64;
        }
        (acc as f64 * 0.5).abs()
    }
}

/// Clockwise (on screen) neighbor offsets starting east.
const DIRS: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

const BACKGROUND: u8 = 0;
const UNVISITED: u8 = 1;
const VISITED: u8 = 2;

/// Outer borders of every 8-connected foreground component.
///
/// Components are found in raster order; each one's first pixel lies on its
/// outer border, which is then followed with Suzuki–Abe border following and
/// the component is flood-filled for its pixel count and bounds. Components
/// sitting inside a hole of another component are reported with
/// `is_external = false`.
pub fn find_contours(img: &Raster) -> Vec<Contour> {
    find_contours_min_rect(img, 0)
}

/// As [`find_contours`], skipping components whose bounding rectangle covers
/// fewer than `min_rect_area` pixels.
pub fn find_contours_min_rect(img: &Raster, min_rect_area: usize) -> Vec<Contour> {
    let (w, h) = (img.width(), img.height());
    let pw = w + 2;
    let mut grid = vec![BACKGROUND; pw * (h + 2)];
    for y in 0..h {
        let dst = &mut grid[(y + 1) * pw + 1..(y + 1) * pw + 1 + w];
        for (d, &v) in dst.iter_mut().zip(img.row(y)) {
            *d = (v != 0) as u8;
        }
    }
    let offs: [isize; 8] = DIRS.map(|(dx, dy)| dy as isize * pw as isize + dx as isize);
    let outside = outer_background(&grid, pw);

    let mut stack: Vec<usize> = Vec::new();
    let mut contours = Vec::new();
    for y in 1..=h {
        for x in 1..=w {
            let start = y * pw + x;
            if grid[start] != UNVISITED {
                continue;
            }
            let (mut min_x, mut min_y, mut max_x, mut max_y) = (x, y, x, y);
            let mut area = 0usize;
            grid[start] = VISITED;
            stack.push(start);
            while let Some(i) = stack.pop() {
                area += 1;
                let (px, py) = (i % pw, i / pw);
                min_x = min_x.min(px);
                max_x = max_x.max(px);
                min_y = min_y.min(py);
                max_y = max_y.max(py);
                for &o in &offs {
                    let n = (i as isize + o) as usize;
                    if grid[n] == UNVISITED {
                        grid[n] = VISITED;
                        stack.push(n);
                    }
                }
            }
            let bounding_rect = Rect { x: min_x - 1, y: min_y - 1, w: max_x - min_x + 1, h: max_y - min_y + 1 };
            if bounding_rect.area() < min_rect_area {
                continue;
            }
            contours.push(Contour {
                points: follow_border(&grid, start, &offs, pw),
                is_external: outside[start - 1],
                area,
                bounding_rect,
            });
        }
    }
    contours
}

/// Background cells 4-connected to the padding ring, found by union-find
/// over horizontal background runs.
fn outer_background(grid: &[u8], pw: usize) -> Vec<bool> {
    let rows = grid.len() / pw;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            let p = parent[i as usize];
            parent[i as usize] = parent[p as usize];
            i = p;
        }
        i
    }
    let mut prev = 0..0;
    for row in 0..rows {
        let line = &grid[row * pw..(row + 1) * pw];
        let first = runs.len();
        let mut cursor = prev.start;
        let mut x = 0;
        while x < pw {
            if line[x] != BACKGROUND {
                x += 1;
                continue;
            }
            let s = x;
            while x < pw && line[x] == BACKGROUND {
                x += 1;
            }
            let id = runs.len() as u32;
            runs.push((row * pw + s, row * pw + x));
            parent.push(id);
            while cursor < prev.end && runs[cursor].1 + pw <= row * pw + s {
                cursor += 1;
            }
            for j in cursor..prev.end {
                let ps = runs[j].0 + pw;
                if ps >= row * pw + x {
                    break;
                }
                let (a, b) = (find(&mut parent, id), find(&mut parent, j as u32));
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                }
            }
        }
        prev = first..runs.len();
    }
    let mut outside = vec![false; grid.len()];
    let root = find(&mut parent, 0);
    for (i, &(s, e)) in runs.iter().enumerate() {
        if find(&mut parent, i as u32) == root {
            outside[s..e].iter_mut().for_each(|o| *o = true);
        }
    }
    outside
}

/// Follows the outer border starting at the component's first raster-order
/// cell, whose west neighbor is background.
fn follow_border(grid: &[u8], start: usize, offs: &[isize; 8], pw: usize) -> Vec<(i32, i32)> {
    let coords = |i: usize| ((i % pw) as i32 - 1, (i / pw) as i32 - 1);
    let step = |i: usize, d: usize| (i as isize + offs[d]) as usize;
    // Search clockwise from the west neighbor for a foreground cell.
    const WEST: usize = 4;
    let Some(first_dir) = (0..8).map(|k| (WEST + k) % 8).find(|&d| grid[step(start, d)] != BACKGROUND) else {
        return vec![coords(start)];
    };
    let p1 = step(start, first_dir);

    let mut points = Vec::new();
    // Direction from the current cell back to the previous one.
    let mut back = first_dir;
    let mut cur = start;
    loop {
        points.push(coords(cur));
        // Counterclockwise from the element after the previous cell.
        let mut next = cur;
        let mut next_dir = back;
        for k in 1..=8 {
            let d = (back + 8 - k) % 8;
            let cand = step(cur, d);
            if grid[cand] != BACKGROUND {
                next = cand;
                next_dir = d;
                break;
            }
        }
        // Back at the start having arrived from the first neighbor.
        if next == start && cur == p1 {
            break;
        }
        back = (next_dir + 4) % 8;
        cur = next;
    }
    // Counterclockwise neighbor search walks the border counterclockwise on
    // screen; reverse into clockwise order keeping the start first.
    points[1..].reverse();
    points
}
