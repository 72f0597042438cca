// SPDX-License-Identifier: Apache-2.0

//! Anchor boxes seated on the local ground surface, pruned by point count.
//!
//! Anchors sit on a regular BEV lattice. Before placement the surface is
//! grown by [`interpolate_surface`] with `k` equal to half the largest
//! template diagonal, so anchors near the edge of the observed ground still
//! get a height. Pruning counts points in the cell-aligned bounding
//! rectangle of each footprint through an integral grid; for rotated boxes
//! that over-counts, which only ever keeps an anchor that an exact count
//! would drop.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geometry::Box3D;
use crate::grid::{cell_span, IntegralGrid};
use crate::ground::{interpolate_surface, GroundSurface};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorSize {
    pub l: f64,
    pub w: f64,
    pub h: f64,
}

impl AnchorSize {
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.l.hypot(self.w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorConfig {
    pub stride: f64,
    pub sizes: Vec<AnchorSize>,
    pub orientations: Vec<f64>,
    pub min_points: u64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self {
            stride: 0.5,
            sizes: vec![AnchorSize {
                l: 3.9,
                w: 1.6,
                h: 1.56,
            }],
            orientations: vec![0.0, FRAC_PI_2],
            min_points: 1,
        }
    }
}

impl AnchorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.stride.is_finite() && self.stride > 0.0) {
            return bad(format!("anchor stride {} must be positive", self.stride));
        }
        if self.sizes.is_empty() {
            return bad("at least one anchor size is required".into());
        }
        for s in &self.sizes {
            if !([s.l, s.w, s.h].iter().all(|v| v.is_finite() && *v > 0.0)) {
                return bad(format!("anchor size {s:?} must be positive"));
            }
        }
        if self.orientations.is_empty() || self.orientations.iter().any(|t| !t.is_finite()) {
            return bad("at least one finite orientation is required".into());
        }
        if self.min_points == 0 {
            return bad("min_points must be >= 1".into());
        }
        Ok(())
    }

    /// Interpolation radius: half the largest template diagonal.
    pub fn interpolation_radius(&self) -> f64 {
        self.sizes
            .iter()
            .map(AnchorSize::half_diagonal)
            .fold(0.0, f64::max)
    }
}

/// Candidate boxes with parallel per-anchor counts and keep flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub anchors: Vec<Box3D>,
    pub point_counts: Vec<u64>,
    pub kept: Vec<bool>,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn kept_anchors(&self) -> impl Iterator<Item = &Box3D> {
        self.anchors.iter().zip(&self.kept).filter(|(_, &k)| k).map(|(a, _)| a)
    }
}

/// Number of lattice points along an extent.
fn lattice_len(extent: f64, stride: f64) -> usize {
    (extent / stride + 1e-9).floor() as usize
}

/// One anchor per lattice point, size and orientation (in that nesting
/// order) wherever the interpolated ground is valid. All are marked kept
/// with a zero count until [`prune_anchors`] runs.
pub fn generate_anchors(gs: &GroundSurface, cfg: &AnchorConfig) -> Result<AnchorSet> {
    cfg.validate()?;
    let spec = gs.spec;
    let grown = interpolate_surface(gs, cfg.interpolation_radius());
    let nx = lattice_len(spec.x_max() - spec.x_min, cfg.stride);
    let ny = lattice_len(spec.y_max() - spec.y_min, cfg.stride);
    let mut anchors = Vec::new();
    for a in 0..nx {
        let x = spec.x_min + (a as f64 + 0.5) * cfg.stride;
        for b in 0..ny {
            let y = spec.y_min + (b as f64 + 0.5) * cfg.stride;
            let Some(g) = grown.ground_at(x, y) else {
                continue;
            };
            for s in &cfg.sizes {
                for &theta in &cfg.orientations {
                    anchors.push(Box3D::new(x, y, g + 0.5 * s.h, s.l, s.w, s.h, theta));
                }
            }
        }
    }
    let n = anchors.len();
    Ok(AnchorSet {
        anchors,
        point_counts: vec![0; n],
        kept: vec![true; n],
    })
}

/// Point count over the cells touched by the footprint's bounding
/// rectangle, clamped to the grid.
pub fn footprint_count(b: &Box3D, ig: &IntegralGrid) -> u64 {
    let s = ig.spec;
    let (hx, hy) = b.aabb_half_extents();
    let (i0, i1) = cell_span(b.x - hx, b.x + hx, s.x_min, s.cell_size, s.rows);
    let (j0, j1) = cell_span(b.y - hy, b.y + hy, s.y_min, s.cell_size, s.cols);
    ig.region_count(i0, i1, j0, j1)
        .expect("clamped span is in bounds")
}

pub fn prune_anchors(set: &AnchorSet, ig: &IntegralGrid, cfg: &AnchorConfig) -> AnchorSet {
    let point_counts: Vec<u64> = set.anchors.iter().map(|a| footprint_count(a, ig)).collect();
    let kept = point_counts.iter().map(|&c| c >= cfg.min_points).collect();
    AnchorSet {
        anchors: set.anchors.clone(),
        point_counts,
        kept,
    }
}
