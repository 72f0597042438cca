// SPDX-License-Identifier: Apache-2.0

//! Ground-aware LiDAR preprocessing.
//!
//! The pipeline bins a point cloud into a bird's-eye-view height map, takes a
//! mask-aware sliding-window minimum to obtain a piecewise local ground
//! surface, and builds the ground-relative stages of a two-stage detector
//! front end on top of it: anchor placement and pruning, height-slice
//! features, and scene augmentation. A single-plane RANSAC fit is included
//! as the comparison baseline, together with a synthetic scene generator and
//! a timing harness.
//!
//! Conventions shared by every module:
//!
//! * Sensor frame, meters: x forward, y left, z up.
//! * Grid rows follow x, columns follow y. Cell `(i, j)` covers
//!   `[x_min + i*cell, x_min + (i+1)*cell) x [y_min + j*cell, y_min + (j+1)*cell)`.
//! * All intervals are half-open `[min, max)`.

pub mod anchors;
pub mod augment;
pub mod bench;
mod error;
pub mod features;
pub mod geometry;
pub mod grid;
pub mod ground;
pub mod io;
pub mod plane;
pub mod synth;

pub use error::{Error, Result};
