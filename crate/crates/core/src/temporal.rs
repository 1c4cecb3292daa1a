//! Constant-velocity Kalman filtering of range, optical-flow propagation of
//! the plate box across detection gaps, and closing-rate outputs.

use alloc::vec::Vec;

use crate::detection::PlateQuad;
use crate::raster::{lk_flow, LkConfig, Point, Raster};
use crate::stats::median;
use crate::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    /// Seconds per frame.
    pub dt: f64,
    pub q: Mat2,
    /// Measurement variance in m².
    pub r: f64,
    /// Initial velocity variance for a new track.
    pub initial_velocity_var: f64,
    /// Reject measurements whose innovation exceeds this many σ.
    pub gate_sigmas: Option<f64>,
    /// A track is dropped after this many frames without a measurement.
    pub max_coast_frames: u32,
}

impl KalmanConfig {
    /// Default noise levels scaled to the frame interval.
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            q: [[1e-3 * dt, 0.0], [0.0, 1e-2 * dt]],
            r: 0.05,
            initial_velocity_var: 1.0,
            gate_sigmas: None,
            max_coast_frames: 30,
        }
    }

    pub fn transition(&self) -> Mat2 {
        [[1.0, self.dt], [0.0, 1.0]]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::NonPositive("frame interval"));
        }
        if !(self.r > 0.0) {
            return Err(Error::NonPositive("measurement variance"));
        }
        let q = self.q;
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
        if q[0][1] != q[1][0] || q[0][0] < 0.0 || q[1][1] < 0.0 || det < 0.0 {
            return Err(Error::InvalidParameter("process noise must be symmetric positive semi-definite"));
        }
        Ok(())
    }
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self::with_dt(0.066)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    /// `[distance m, velocity m/s]`.
    pub x: [f64; 2],
    pub p: Mat2,
    /// Frame index of the latest predict or initialization.
    pub frame: u64,
    pub last_update: u64,
    pub coast_frames: u32,
}

impl TrackState {
    /// New track at distance `z` with zero velocity.
    pub fn init(z: f64, frame: u64, cfg: &KalmanConfig) -> Result<Self> {
        if !(z > 0.0) {
            return Err(Error::NonPositive("measurement"));
        }
        Ok(Self {
            x: [z, 0.0],
            p: [[cfg.r, 0.0], [0.0, cfg.initial_velocity_var]],
            frame,
            last_update: frame,
            coast_frames: 0,
        })
    }

    pub fn distance(&self) -> f64 {
        self.x[0]
    }

    pub fn velocity(&self) -> f64 {
        self.x[1]
    }

    pub fn is_lost(&self, cfg: &KalmanConfig) -> bool {
        self.coast_frames > cfg.max_coast_frames
    }

    pub fn trace(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }
}

fn symmetrize(p: Mat2) -> Mat2 {
    let off = 0.5 * (p[0][1] + p[1][0]);
    [[p[0][0], off], [off, p[1][1]]]
}

pub fn kf_predict(t: &TrackState, cfg: &KalmanConfig) -> TrackState {
    let dt = cfg.dt;
    let x = [t.x[0] + dt * t.x[1], t.x[1]];
    let p = t.p;
    // F P Fᵀ with F = [[1, dt], [0, 1]].
    let a = p[0][0] + dt * (p[1][0] + p[0][1]) + dt * dt * p[1][1];
    let b = p[0][1] + dt * p[1][1];
    let c = p[1][0] + dt * p[1][1];
    let d = p[1][1];
    let q = cfg.q;
    TrackState {
        x,
        p: symmetrize([[a + q[0][0], b + q[0][1]], [c + q[1][0], d + q[1][1]]]),
        frame: t.frame + 1,
        coast_frames: t.coast_frames.saturating_add(1),
        ..*t
    }
}

/// Whether `z` lies inside the configured innovation gate (always true when
/// gating is off).
pub fn innovation_accepted(t: &TrackState, z: f64, cfg: &KalmanConfig) -> bool {
    match cfg.gate_sigmas {
        None => true,
        Some(k) => {
            let s = t.p[0][0] + cfg.r;
            libm::fabs(z - t.x[0]) <= k * libm::sqrt(s)
        }
    }
}

/// Scalar distance measurement update in Joseph form.
pub fn kf_update(t: &TrackState, z: f64, cfg: &KalmanConfig) -> Result<TrackState> {
    if !(z > 0.0) {
        return Err(Error::NonPositive("measurement"));
    }
    let p = t.p;
    let s = p[0][0] + cfg.r;
    let k = [p[0][0] / s, p[1][0] / s];
    let y = z - t.x[0];
    let x = [t.x[0] + k[0] * y, t.x[1] + k[1] * y];
    // (I − K H) with H = [1, 0].
    let a = [[1.0 - k[0], 0.0], [-k[1], 1.0]];
    let mut ap = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ap[i][j] = a[i][0] * p[0][j] + a[i][1] * p[1][j];
        }
    }
    let mut np = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            np[i][j] = ap[i][0] * a[j][0] + ap[i][1] * a[j][1] + k[i] * cfg.r * k[j];
        }
    }
    Ok(TrackState { x, p: symmetrize(np), last_update: t.frame, coast_frames: 0, ..*t })
}

/// Closing rate below which no time-to-collision is reported, in m/s.
pub const MIN_CLOSING_RATE: f64 = 1e-6;

/// Range rate and time-to-collision (only while closing).
pub fn velocity_and_ttc(t: &TrackState) -> (f64, Option<f64>) {
    let v = t.x[1];
    let ttc = if v < -MIN_CLOSING_RATE { Some(-t.x[0] / v) } else { None };
    (v, ttc)
}

/// Minimum surviving flow points for a box prediction.
pub const MIN_TRACKED_POINTS: usize = 6;

/// Moves `quad` by the median optical-flow displacement of a 5×5 point
/// grid spanning its interior.
pub fn track_bbox(prev: &Raster, next: &Raster, quad: &PlateQuad, cfg: &LkConfig) -> Option<PlateQuad> {
    let [tl, tr, br, bl] = quad.corners;
    let lerp = |a: Point, b: Point, s: f64| Point::new(a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s);
    let mut pts = Vec::with_capacity(25);
    for j in 0..5 {
        let v = 0.1 + 0.2 * j as f64;
        for i in 0..5 {
            let u = 0.1 + 0.2 * i as f64;
            let p = lerp(lerp(tl, tr, u), lerp(bl, br, u), v);
            pts.push((p.x - 0.5, p.y - 0.5));
        }
    }
    let flow = lk_flow(prev, next, &pts, cfg).ok()?;
    let (dx, dy): (Vec<f64>, Vec<f64>) = flow
        .iter()
        .zip(&pts)
        .filter(|(f, _)| f.status)
        .map(|(f, p)| (f.x - p.0, f.y - p.1))
        .unzip();
    if dx.len() < MIN_TRACKED_POINTS {
        return None;
    }
    Some(quad.translated(median(&dx), median(&dy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::min_area_rect;

    fn state(x: [f64; 2], p: Mat2) -> TrackState {
        TrackState { x, p, frame: 0, last_update: 0, coast_frames: 0 }
    }

    #[test]
    fn predict_moves_distance_by_velocity() {
        let cfg = KalmanConfig::with_dt(0.1);
        let t = kf_predict(&state([10.0, -2.0], [[1.0, 0.0], [0.0, 1.0]]), &cfg);
        assert!((t.x[0] - 9.8).abs() < 1e-12 && t.x[1] == -2.0);
        assert_eq!(t.coast_frames, 1);
        let zero = KalmanConfig { q: [[0.0; 2]; 2], ..cfg };
        assert_eq!(kf_predict(&state([10.0, 0.0], [[0.0; 2]; 2]), &zero).p, [[0.0; 2]; 2]);
    }

    #[test]
    fn perfect_and_useless_measurements() {
        let prior = state([10.0, 1.0], [[2.0, 0.3], [0.3, 1.0]]);
        let sharp = KalmanConfig { r: 1e-12, ..KalmanConfig::default() };
        assert!((kf_update(&prior, 12.0, &sharp).unwrap().x[0] - 12.0).abs() < 1e-6);
        let vague = KalmanConfig { r: 1e12, ..KalmanConfig::default() };
        let post = kf_update(&prior, 12.0, &vague).unwrap();
        assert!((post.x[0] - 10.0).abs() < 1e-6 * 10.0);
        assert!((post.x[1] - 1.0).abs() < 1e-6);
        assert!(kf_update(&prior, 0.0, &sharp).is_err());
    }

    #[test]
    fn noise_free_constant_velocity_converges() {
        let cfg = KalmanConfig::default();
        let mut t = TrackState::init(20.0, 0, &cfg).unwrap();
        for k in 1..=50 {
            t = kf_predict(&t, &cfg);
            t = kf_update(&t, 20.0 - 0.5 * k as f64 * cfg.dt, &cfg).unwrap();
        }
        assert!((t.x[1] + 0.5).abs() < 1e-3, "{}", t.x[1]);
    }

    #[test]
    fn growing_plate_gives_matching_closing_rate() {
        // h(t) = 100·e^{0.05 t} at f·H = 1000 → D = 10·e^{−0.05 t}, Ḋ = −D·ḣ/h.
        let cfg = KalmanConfig::default();
        let h = |k: u64| 100.0 * libm::exp(0.05 * k as f64 * cfg.dt);
        let mut t = TrackState::init(1000.0 / h(0), 0, &cfg).unwrap();
        for k in 1..=60 {
            t = kf_predict(&t, &cfg);
            t = kf_update(&t, 1000.0 / h(k), &cfg).unwrap();
        }
        let expected = -t.x[0] * 0.05;
        assert!((t.x[1] - expected).abs() < 0.1 * expected.abs(), "{} vs {expected}", t.x[1]);
    }

    #[test]
    fn ttc_examples() {
        assert_eq!(velocity_and_ttc(&state([20.0, -4.0], [[0.0; 2]; 2])), (-4.0, Some(5.0)));
        assert_eq!(velocity_and_ttc(&state([20.0, 1.0], [[0.0; 2]; 2])), (1.0, None));
    }

    #[test]
    fn initialization_and_drop() {
        let cfg = KalmanConfig::default();
        let mut t = TrackState::init(12.0, 7, &cfg).unwrap();
        assert_eq!(t.p, [[cfg.r, 0.0], [0.0, 1.0]]);
        for _ in 0..30 {
            t = kf_predict(&t, &cfg);
        }
        assert!(!t.is_lost(&cfg));
        t = kf_predict(&t, &cfg);
        assert!(t.is_lost(&cfg));
        assert_eq!((t.frame, t.last_update), (38, 7));
    }

    #[test]
    fn gate_rejects_far_measurements() {
        let cfg = KalmanConfig { gate_sigmas: Some(3.0), ..KalmanConfig::default() };
        let t = TrackState::init(10.0, 0, &cfg).unwrap();
        assert!(innovation_accepted(&t, 10.5, &cfg));
        assert!(!innovation_accepted(&t, 15.0, &cfg));
        assert!(innovation_accepted(&t, 15.0, &KalmanConfig::default()));
    }

    fn textured(w: usize, h: usize, shift: f64) -> Raster {
        Raster::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64 - shift, y as f64);
            (128.0 + 60.0 * libm::sin(x * 0.31) * libm::cos(y * 0.23) + 30.0 * libm::sin((x + y) * 0.17)) as u8
        })
    }

    fn quad() -> PlateQuad {
        let c = [Point::new(60.0, 50.0), Point::new(140.0, 50.0), Point::new(140.0, 90.0), Point::new(60.0, 90.0)];
        PlateQuad { corners: c, rotated_rect: min_area_rect(&c).unwrap() }
    }

    #[test]
    fn bbox_static_and_shifted() {
        let a = textured(200, 150, 0.0);
        let q = quad();
        let same = track_bbox(&a, &a, &q, &LkConfig::default()).unwrap();
        for (p, r) in same.corners.iter().zip(&q.corners) {
            assert!(p.distance(r) <= 0.5);
        }
        let b = textured(200, 150, 3.0);
        let moved = track_bbox(&a, &b, &q, &LkConfig::default()).unwrap();
        for (p, r) in moved.corners.iter().zip(&q.corners) {
            assert!((p.x - r.x - 3.0).abs() <= 0.5 && (p.y - r.y).abs() <= 0.5);
        }
        assert!(track_bbox(&a, &Raster::filled(200, 150, 90), &q, &LkConfig::default()).is_none());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn min_eigenvalue(p: &Mat2) -> f64 {
        let tr = p[0][0] + p[1][1];
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        let disc = (tr * tr / 4.0 - det).max(0.0);
        tr / 2.0 - libm::sqrt(disc)
    }

    proptest! {
        #[test]
        fn covariance_stays_psd(ops in proptest::collection::vec((any::<bool>(), 0.5f64..50.0), 1..200)) {
            let cfg = KalmanConfig::default();
            let mut t = TrackState::init(20.0, 0, &cfg).unwrap();
            for (predict, z) in ops {
                t = if predict { kf_predict(&t, &cfg) } else { kf_update(&t, z, &cfg).unwrap() };
                prop_assert_eq!(t.p[0][1], t.p[1][0]);
                prop_assert!(min_eigenvalue(&t.p) >= -1e-9);
            }
        }

        #[test]
        fn repeated_measurement_never_grows_trace(z in 0.5f64..50.0, steps in 0usize..20) {
            let cfg = KalmanConfig::default();
            let mut t = TrackState::init(20.0, 0, &cfg).unwrap();
            for _ in 0..steps {
                t = kf_predict(&t, &cfg);
            }
            let once = kf_update(&t, z, &cfg).unwrap();
            let twice = kf_update(&once, z, &cfg).unwrap();
            prop_assert!(twice.trace() <= once.trace() + 1e-15);
        }

        #[test]
        fn coasting_grows_trace(steps in 1usize..50) {
            let cfg = KalmanConfig::default();
            let mut t = TrackState::init(20.0, 0, &cfg).unwrap();
            for _ in 0..steps {
                let next = kf_predict(&t, &cfg);
                prop_assert!(next.trace() > t.trace());
                t = next;
            }
        }
    }
}
