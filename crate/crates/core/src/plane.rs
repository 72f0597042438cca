// SPDX-License-Identifier: Apache-2.0

//! Single-plane RANSAC ground model, the uniplanar comparator.
//!
//! Hypotheses are drawn from a ChaCha8 stream seeded by `RansacConfig::seed`,
//! so a seed reproduces the same model on every platform. The best hypothesis
//! (first one wins on equal inlier counts) is refined by least squares on its
//! inliers; the refined plane replaces it only if it keeps at least as many
//! inliers.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ground::GroundLabels;
use crate::io::PointCloud;
use crate::{Error, Result};

const MIN_TRIANGLE_AREA: f64 = 1e-9;
const MIN_VERTICAL_COMPONENT: f64 = 1e-9;

/// `a·x + b·y + c·z + d = 0` with a unit normal and `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PlaneModel {
    /// Normalizes `(a, b, c, d)`; `None` for a near-vertical plane.
    pub fn from_coefficients(a: f64, b: f64, c: f64, d: f64) -> Option<Self> {
        let norm = (a * a + b * b + c * c).sqrt();
        if !(norm > 0.0) || (c / norm).abs() < MIN_VERTICAL_COMPONENT {
            return None;
        }
        let s = c.signum() / norm;
        // `+ 0.0` folds negative zeros so that z = 0 prints as (0, 0, 1, 0).
        Some(Self {
            a: a * s + 0.0,
            b: b * s + 0.0,
            c: c * s + 0.0,
            d: d * s + 0.0,
        })
    }

    /// The plane `z = gx·x + gy·y + z0`.
    pub fn from_slopes(gx: f64, gy: f64, z0: f64) -> Self {
        Self::from_coefficients(-gx, -gy, 1.0, -z0).expect("c = 1 is never vertical")
    }

    pub fn signed_distance(&self, x: f64, y: f64, z: f64) -> f64 {
        self.a * x + self.b * y + self.c * z + self.d
    }
}

pub fn plane_z(p: &PlaneModel, x: f64, y: f64) -> f64 {
    -(p.a * x + p.b * y + p.d) / p.c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 512,
            inlier_threshold: 0.2,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("ransac iterations must be >= 1".into()));
        }
        if !(self.inlier_threshold.is_finite() && self.inlier_threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ransac inlier threshold {} must be positive",
                self.inlier_threshold
            )));
        }
        Ok(())
    }
}

/// Fitted plane plus its final inlier count, serialized flat as
/// `{a,b,c,d,inliers,iterations}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    #[serde(flatten)]
    pub model: PlaneModel,
    pub inliers: usize,
    pub iterations: usize,
}

/// One sampled hypothesis; `plane` is `None` for a rejected sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub plane: Option<PlaneModel>,
    pub inliers: usize,
}

/// Structure-of-arrays copy of the cloud for the counting loop.
struct Coords {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl Coords {
    fn new(cloud: &PointCloud) -> Self {
        let n = cloud.len();
        let mut c = Self {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
        };
        for p in &cloud.points {
            c.x.push(p.x);
            c.y.push(p.y);
            c.z.push(p.z);
        }
        c
    }

    fn count_inliers(&self, p: &PlaneModel, thr: f64) -> usize {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.z)
            .map(|((&x, &y), &z)| usize::from(p.signed_distance(x, y, z).abs() <= thr))
            .sum()
    }

    fn plane_through(&self, i: usize, j: usize, k: usize) -> Option<PlaneModel> {
        let p = |m: usize| [self.x[m], self.y[m], self.z[m]];
        let (p0, p1, p2) = (p(i), p(j), p(k));
        let u = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
        let v = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
        let n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let twice_area = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if twice_area / 2.0 < MIN_TRIANGLE_AREA {
            return None;
        }
        let d = -(n[0] * p0[0] + n[1] * p0[1] + n[2] * p0[2]);
        PlaneModel::from_coefficients(n[0], n[1], n[2], d)
    }

    /// Least-squares `z = gx·x + gy·y + z0` over the inliers of `p`.
    fn refine(&self, p: &PlaneModel, thr: f64) -> Option<PlaneModel> {
        let inlier = |m: usize| p.signed_distance(self.x[m], self.y[m], self.z[m]).abs() <= thr;
        let (mut n, mut mx, mut my, mut mz) = (0usize, 0.0, 0.0, 0.0);
        for m in 0..self.x.len() {
            if inlier(m) {
                n += 1;
                mx += self.x[m];
                my += self.y[m];
                mz += self.z[m];
            }
        }
        if n < 3 {
            return None;
        }
        let nf = n as f64;
        let (mx, my, mz) = (mx / nf, my / nf, mz / nf);
        let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for m in 0..self.x.len() {
            if inlier(m) {
                let (dx, dy, dz) = (self.x[m] - mx, self.y[m] - my, self.z[m] - mz);
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
                sxz += dx * dz;
                syz += dy * dz;
            }
        }
        let det = sxx * syy - sxy * sxy;
        if !(det.abs() > 1e-12 * (sxx * syy).max(f64::MIN_POSITIVE)) {
            return None;
        }
        let gx = (sxz * syy - syz * sxy) / det;
        let gy = (syz * sxx - sxz * sxy) / det;
        Some(PlaneModel::from_slopes(gx, gy, mz - gx * mx - gy * my))
    }
}

fn check_input(cloud: &PointCloud, cfg: &RansacConfig) -> Result<()> {
    cfg.validate()?;
    if cloud.len() < 3 {
        return Err(Error::TooFewPoints(cloud.len()));
    }
    Ok(())
}

fn hypotheses(coords: &Coords, cfg: &RansacConfig) -> Vec<Hypothesis> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = coords.x.len();
    (0..cfg.iterations)
        .map(|_| {
            let s = index::sample(&mut rng, n, 3);
            match coords.plane_through(s.index(0), s.index(1), s.index(2)) {
                Some(p) => Hypothesis {
                    plane: Some(p),
                    inliers: coords.count_inliers(&p, cfg.inlier_threshold),
                },
                None => Hypothesis {
                    plane: None,
                    inliers: 0,
                },
            }
        })
        .collect()
}

/// The hypothesis sequence `fit_plane_ransac` evaluates for this seed.
pub fn ransac_hypotheses(cloud: &PointCloud, cfg: &RansacConfig) -> Result<Vec<Hypothesis>> {
    check_input(cloud, cfg)?;
    Ok(hypotheses(&Coords::new(cloud), cfg))
}

pub fn fit_plane_ransac(cloud: &PointCloud, cfg: &RansacConfig) -> Result<PlaneFit> {
    check_input(cloud, cfg)?;
    let coords = Coords::new(cloud);
    let mut best: Option<(PlaneModel, usize)> = None;
    for h in hypotheses(&coords, cfg) {
        if let Some(p) = h.plane {
            if best.is_none_or(|(_, n)| h.inliers > n) {
                best = Some((p, h.inliers));
            }
        }
    }
    let (mut model, mut inliers) = best.ok_or(Error::DegenerateSamples)?;
    if let Some(refined) = coords.refine(&model, cfg.inlier_threshold) {
        let n = coords.count_inliers(&refined, cfg.inlier_threshold);
        if n >= inliers {
            model = refined;
            inliers = n;
        }
    }
    Ok(PlaneFit {
        model,
        inliers,
        iterations: cfg.iterations,
    })
}

/// Same rule as surface classification with the plane as ground.
pub fn classify_points_plane(cloud: &PointCloud, p: &PlaneModel, tau_g: f64) -> GroundLabels {
    let labels = cloud
        .points
        .iter()
        .map(|q| q.z <= plane_z(p, q.x, q.y) + tau_g)
        .collect();
    GroundLabels { labels, tau_g }
}
