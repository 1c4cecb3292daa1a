//! Monocular distance estimation from license-plate typography.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. It is organized
//! the way a frame flows through the system:
//!
//! 1. [`raster`]: 8-bit image primitives: thresholding, CLAHE, morphology,
//!    contours, edges, Hough lines, homographies and Lucas-Kanade flow.
//! 2. [`detection`]: plate localization with strict/permissive mode switching.
//! 3. [`segmentation`]: dual-binarization character segmentation and the
//!    typographic measurements (character height, stroke, spacing, border).
//! 4. [`ranging`]: focal-length calibration, pinhole ranging, uncertainty
//!    propagation and inverse-variance fusion.
//! 5. [`pose`]: pitch/roll from lane lines and height correction.
//! 6. [`fusion`]: metric scale alignment of relative depth maps.
//! 7. [`temporal`]: constant-velocity Kalman filter, box tracking, TTC.
//! 8. [`synth`]: exact pinhole renderer used as a ground-truth oracle.
//! 9. [`pipeline`]: the per-stream frame loop tying the stages together.

#![no_std]

extern crate alloc;

pub mod detection;
pub mod error;
pub mod fusion;
pub mod pipeline;
pub mod pose;
pub mod ranging;
pub mod raster;
pub mod segmentation;
pub mod stats;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
