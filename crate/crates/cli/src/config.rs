// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration. Every key is optional; a missing key keeps the
//! built-in default, and command-line flags override whatever the file says.
//!
//! ```toml
//! [roi]        # x_min x_max y_min y_max z_min z_max, meters
//! [grid]       # cell_size
//! [filter]     # half_window_x half_window_y, meters
//! [ground]     # tau_g, interpolate (radius in meters, surface only)
//! [ransac]     # iterations inlier_threshold seed
//! [anchors]    # stride min_points orientations sizes = [{ l, w, h }]
//! [features]   # num_slices span_min span_max
//! [augment]    # margin seed
//! [synth]      # point_density object_density noise_sigma seed
//! [bench]      # points reps warmup seed
//! ```

use std::path::Path;

use gal_core::anchors::AnchorConfig;
use gal_core::augment::TransplantConfig;
use gal_core::features::FeatureConfig;
use gal_core::ground::FilterConfig;
use gal_core::io::RoiConfig;
use gal_core::plane::RansacConfig;
use serde::Deserialize;

use crate::Failure;

pub const SEED_ENV: &str = "GAL_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub roi: RoiConfig,
    pub grid: GridSection,
    pub filter: FilterConfig,
    pub ground: GroundSection,
    pub ransac: RansacConfig,
    pub anchors: AnchorConfig,
    pub features: FeatureConfig,
    pub augment: TransplantConfig,
    pub synth: SynthSection,
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub cell_size: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { cell_size: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundSection {
    pub tau_g: f64,
    pub interpolate: Option<f64>,
}

impl Default for GroundSection {
    fn default() -> Self {
        Self {
            tau_g: 0.2,
            interpolate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub point_density: f64,
    pub object_density: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            point_density: 10.0,
            object_density: 50.0,
            noise_sigma: 0.02,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub points: usize,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            points: 120_000,
            reps: 50,
            warmup: 5,
            seed: 0,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::usage(format!("malformed config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }
}

/// Seed precedence: explicit flag, then `GAL_SEED`, then the config value.
pub fn resolve_seed(flag: Option<u64>, configured: u64) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(configured),
        Err(e) => Err(Failure::usage(format!("{SEED_ENV}: {e}"))),
    }
}
