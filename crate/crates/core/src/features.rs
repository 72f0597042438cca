// SPDX-License-Identifier: Apache-2.0

//! Ground-relative BEV height slices plus a density channel.
//!
//! Heights are measured from the local ground estimate of each cell, so the
//! same object yields the same slices on a hill as on the flat. Relative
//! heights are snapped to a 2^-20 m lattice before slicing; that makes the
//! features exactly invariant under a joint vertical shift of scene and
//! surface, where raw `z - g` could differ in the last bit. Rounding is
//! biased by a phase that is not a short dyadic fraction, so differences of
//! `f32` heights never land on a rounding tie.

use serde::{Deserialize, Serialize};

use crate::ground::GroundSurface;
use crate::grid::GridSpec;
use crate::io::PointCloud;
use crate::{Error, Result};

const SNAP: f64 = (1u64 << 20) as f64;
const SNAP_PHASE: f64 = 0.381_966_011_250_105;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub num_slices: usize,
    /// Lower edge of the first slice above ground, meters.
    pub span_min: f64,
    /// Upper edge of the last slice above ground, meters.
    pub span_max: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            num_slices: 5,
            span_min: 0.0,
            span_max: 2.5,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_slices == 0 {
            return Err(Error::InvalidConfig("num_slices must be >= 1".into()));
        }
        if !(self.span_min.is_finite() && self.span_max.is_finite() && self.span_max > self.span_min)
        {
            return Err(Error::InvalidConfig(format!(
                "slice span [{}, {}) is empty",
                self.span_min, self.span_max
            )));
        }
        Ok(())
    }

    /// `[lo, hi)` of slice `s`, relative to ground.
    pub fn slice_bounds(&self, s: usize) -> (f64, f64) {
        let step = (self.span_max - self.span_min) / self.num_slices as f64;
        (
            self.span_min + s as f64 * step,
            self.span_min + (s + 1) as f64 * step,
        )
    }
}

/// `M` slice channels then one density channel, each row-major over `spec`.
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatures {
    pub spec: GridSpec,
    pub slices: Vec<Vec<f32>>,
    pub density: Vec<f32>,
}

impl BevFeatures {
    pub fn channels(&self) -> usize {
        self.slices.len() + 1
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        if c < self.slices.len() {
            &self.slices[c]
        } else {
            &self.density
        }
    }
}

/// `min(1, ln(1 + n) / ln 64)`; reaches 1 at 63 points.
pub fn density_value(n: u32) -> f64 {
    ((n as f64).ln_1p() / 64f64.ln()).min(1.0)
}

fn snap(v: f64) -> f64 {
    (v * SNAP + SNAP_PHASE).round() / SNAP
}

pub fn extract_features(
    cloud: &PointCloud,
    gs: &GroundSurface,
    cfg: &FeatureConfig,
) -> Result<BevFeatures> {
    cfg.validate()?;
    let spec = gs.spec;
    let m = cfg.num_slices;
    let step = (cfg.span_max - cfg.span_min) / m as f64;
    let mut slices = vec![vec![0.0f64; spec.len()]; m];
    let mut counts = vec![0u32; spec.len()];

    for p in &cloud.points {
        let Some((i, j)) = spec.cell_of(p.x, p.y) else {
            continue;
        };
        let k = spec.index(i, j);
        let Some(g) = gs.get(i, j) else {
            continue;
        };
        counts[k] += 1;
        let rel = snap(p.z - g);
        if rel < cfg.span_min || rel >= cfg.span_max {
            continue;
        }
        let s = (((rel - cfg.span_min) / step) as usize).min(m - 1);
        // guard the lattice edge where the division rounds across a boundary
        let s = if rel < cfg.slice_bounds(s).0 {
            s - 1
        } else if rel >= cfg.slice_bounds(s).1 && s + 1 < m {
            s + 1
        } else {
            s
        };
        let (lo, hi) = cfg.slice_bounds(s);
        let v = ((rel - lo) / (hi - lo)).clamp(0.0, 1.0);
        if v > slices[s][k] {
            slices[s][k] = v;
        }
    }

    Ok(BevFeatures {
        spec,
        slices: slices
            .into_iter()
            .map(|ch| ch.into_iter().map(|v| v as f32).collect())
            .collect(),
        density: counts.iter().map(|&n| density_value(n) as f32).collect(),
    })
}
