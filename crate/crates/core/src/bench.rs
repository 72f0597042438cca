// SPDX-License-Identifier: Apache-2.0

//! Wall-clock comparison of the window-minimum surface against the RANSAC
//! plane on the same cloud, single-threaded.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::grid::{build_height_map, GridSpec};
use crate::ground::{estimate_surface, FilterConfig};
use crate::io::PointCloud;
use crate::plane::{fit_plane_ransac, RansacConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: String,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub reps: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundBench {
    pub surface: BenchReport,
    pub plane: BenchReport,
    /// `plane.median_ms / surface.median_ms`.
    pub speedup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub reps: usize,
    pub warmup: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { reps: 50, warmup: 5 }
    }
}

/// Median (mean of the middle pair for even counts) and nearest-rank p95.
pub fn summarize(samples_ms: &[f64]) -> (f64, f64) {
    let mut s = samples_ms.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    };
    let rank = (0.95 * n as f64).ceil() as usize;
    (median, s[rank.max(1) - 1])
}

/// Times `f` for `cfg.reps` runs after `cfg.warmup` untimed ones.
pub fn time_method<T>(
    method: &str,
    points: usize,
    cfg: &BenchConfig,
    mut f: impl FnMut() -> Result<T>,
) -> Result<BenchReport> {
    if cfg.reps == 0 {
        return Err(Error::InvalidConfig("bench reps must be >= 1".into()));
    }
    for _ in 0..cfg.warmup {
        black_box(f()?);
    }
    let mut samples = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let t0 = Instant::now();
        black_box(f()?);
        samples.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    let (median_ms, p95_ms) = summarize(&samples);
    Ok(BenchReport {
        method: method.to_string(),
        median_ms,
        p95_ms,
        reps: cfg.reps,
        points,
    })
}

/// Surface time covers height-map binning plus the window minimum.
pub fn bench_ground(
    cloud: &PointCloud,
    spec: &GridSpec,
    filter: &FilterConfig,
    ransac: &RansacConfig,
    cfg: &BenchConfig,
) -> Result<GroundBench> {
    filter.validate()?;
    ransac.validate()?;
    let n = cloud.len();
    let surface = time_method("surface", n, cfg, || {
        Ok(estimate_surface(&build_height_map(black_box(cloud), spec)?, filter))
    })?;
    let plane = time_method("plane", n, cfg, || fit_plane_ransac(black_box(cloud), ransac))?;
    let speedup = plane.median_ms / surface.median_ms;
    Ok(GroundBench {
        surface,
        plane,
        speedup,
    })
}
