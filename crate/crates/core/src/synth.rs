// SPDX-License-Identifier: Apache-2.0

//! Synthetic scenes with an analytic ground, used as the test oracle.
//!
//! All generated coordinates are rounded to `f32` so a scene equals its own
//! `.bin` serialization bit for bit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{iou_bev, Box3D};
use crate::ground::GroundSurface;
use crate::grid::GridSpec;
use crate::io::{Point3, PointCloud, RoiConfig};
use crate::plane::{plane_z, PlaneModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerrainKind {
    Flat { z0: f64 },
    Slope { gx: f64, gy: f64, z0: f64 },
    /// Road crown across y: `base + peak * max(0, 1 - (y / half_width)^2)`.
    Crown { base: f64, peak: f64, half_width: f64 },
    /// `z_low` for `x < step_x`, `z_high` from `step_x` on.
    Step { z_low: f64, z_high: f64, step_x: f64 },
    /// `z_inner` on the band `x_from <= x < x_to`, `z_outer` elsewhere.
    Terrace {
        z_inner: f64,
        z_outer: f64,
        x_from: f64,
        x_to: f64,
    },
}

impl TerrainKind {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        match *self {
            TerrainKind::Flat { z0 } => z0,
            TerrainKind::Slope { gx, gy, z0 } => gx * x + gy * y + z0,
            TerrainKind::Crown {
                base,
                peak,
                half_width,
            } => base + peak * (1.0 - (y / half_width).powi(2)).max(0.0),
            TerrainKind::Step {
                z_low,
                z_high,
                step_x,
            } => {
                if x < step_x {
                    z_low
                } else {
                    z_high
                }
            }
            TerrainKind::Terrace {
                z_inner,
                z_outer,
                x_from,
                x_to,
            } => {
                if (x_from..x_to).contains(&x) {
                    z_inner
                } else {
                    z_outer
                }
            }
        }
    }
}

/// Spinning-sensor style sampling: `beams` rays spread over the elevation
/// range, one sweep every `azimuth_step_deg` degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingSampling {
    pub beams: usize,
    pub azimuth_step_deg: f64,
    pub sensor_height: f64,
    pub min_elevation_deg: f64,
    pub max_elevation_deg: f64,
}

impl Default for RingSampling {
    fn default() -> Self {
        Self {
            beams: 64,
            azimuth_step_deg: 0.2,
            sensor_height: 0.0,
            min_elevation_deg: -24.8,
            max_elevation_deg: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainSpec {
    pub kind: TerrainKind,
    /// Ground points per square meter for uniform sampling.
    pub point_density: f64,
    /// Points per square meter on object surfaces.
    pub object_density: f64,
    pub ring: Option<RingSampling>,
    pub noise_sigma: f64,
    pub seed: u64,
    pub roi: RoiConfig,
}

impl TerrainSpec {
    pub fn new(kind: TerrainKind) -> Self {
        Self {
            kind,
            point_density: 10.0,
            object_density: 50.0,
            ring: None,
            noise_sigma: 0.02,
            seed: 0,
            roi: RoiConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.roi.validate()?;
        if !(self.point_density.is_finite() && self.point_density > 0.0) {
            return Err(Error::InvalidConfig("point density must be positive".into()));
        }
        if !(self.object_density.is_finite() && self.object_density >= 0.0) {
            return Err(Error::InvalidConfig("object density must be >= 0".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise sigma must be >= 0".into()));
        }
        if let Some(r) = self.ring {
            if r.beams == 0 || !(r.azimuth_step_deg > 0.0) || r.min_elevation_deg >= r.max_elevation_deg {
                return Err(Error::InvalidConfig(format!("bad ring sampling {r:?}")));
            }
        }
        Ok(())
    }

    fn area(&self) -> f64 {
        (self.roi.x_max - self.roi.x_min) * (self.roi.y_max - self.roi.y_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub cloud: PointCloud,
    pub terrain: TerrainKind,
    pub boxes: Vec<Box3D>,
    /// True for terrain returns, false for object returns.
    pub is_ground: Vec<bool>,
}

impl SyntheticScene {
    /// The analytic terrain sampled at the cell centers of `spec`.
    pub fn true_surface(&self, spec: &GridSpec) -> GroundSurface {
        GroundSurface::from_fn(spec, |x, y| self.terrain.height(x, y))
    }
}

/// Box with its bottom face resting on `terrain` at the box center.
pub fn seat_on_terrain(terrain: &TerrainKind, b: Box3D) -> Box3D {
    Box3D {
        z: terrain.height(b.x, b.y) + 0.5 * b.h,
        ..b
    }
}

/// `n` boxes of size `(l, w, h)` at random positions and yaws, fully inside
/// the ROI footprint, pairwise disjoint in BEV and seated on the terrain.
/// Rejection sampling on a random stream of `spec.seed` separate from the
/// one [`generate_scene`] draws points from.
pub fn scatter_objects(spec: &TerrainSpec, n: usize, size: (f64, f64, f64)) -> Result<Vec<Box3D>> {
    spec.validate()?;
    let (l, w, h) = size;
    Box3D::new(0.0, 0.0, 0.0, l, w, h, 0.0).validate()?;
    let reach = 0.5 * l.hypot(w);
    let roi = &spec.roi;
    if roi.x_max - roi.x_min <= 2.0 * reach || roi.y_max - roi.y_min <= 2.0 * reach {
        return Err(Error::InvalidConfig(format!("a {l} x {w} m object does not fit in the ROI")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut boxes: Vec<Box3D> = Vec::with_capacity(n);
    let budget = 1000 * n;
    let mut attempts = 0;
    while boxes.len() < n {
        if attempts == budget {
            return Err(Error::InvalidConfig(format!(
                "placed only {} of {n} disjoint objects in {budget} attempts",
                boxes.len()
            )));
        }
        attempts += 1;
        let x = rng.random_range(roi.x_min + reach..roi.x_max - reach);
        let y = rng.random_range(roi.y_min + reach..roi.y_max - reach);
        let theta = rng.random_range(-PI..PI);
        let b = seat_on_terrain(&spec.kind, Box3D::new(x, y, 0.0, l, w, h, theta));
        if boxes.iter().all(|o| iou_bev(&b, o) == 0.0) {
            boxes.push(b);
        }
    }
    Ok(boxes)
}

fn to_f32_grid(v: f64) -> f64 {
    v as f32 as f64
}

struct Sampler {
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Sampler {
    fn jitter(&mut self) -> f64 {
        match &self.noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }

    fn uniform_f32(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo as f32..hi as f32) as f64
    }
}

fn ring_ground(spec: &TerrainSpec, ring: &RingSampling, s: &mut Sampler) -> Vec<(f64, f64, f64)> {
    const MAX_RANGE: f64 = 150.0;
    const STEP: f64 = 0.25;
    let t = &spec.kind;
    let mut out = Vec::new();
    let az_n = (360.0 / ring.azimuth_step_deg).round() as usize;
    for beam in 0..ring.beams {
        let frac = if ring.beams == 1 {
            0.0
        } else {
            beam as f64 / (ring.beams - 1) as f64
        };
        let elev = (ring.min_elevation_deg + frac * (ring.max_elevation_deg - ring.min_elevation_deg)).to_radians();
        for a in 0..az_n {
            let az = (a as f64 * ring.azimuth_step_deg).to_radians();
            let dir = (elev.cos() * az.cos(), elev.cos() * az.sin(), elev.sin());
            let above = |r: f64| ring.sensor_height + r * dir.2 - t.height(r * dir.0, r * dir.1);
            // march to the first sign change, then bisect
            let mut r0 = 0.0;
            let mut hit = None;
            while r0 < MAX_RANGE {
                let r1 = r0 + STEP;
                if above(r1) <= 0.0 {
                    let (mut lo, mut hi) = (r0, r1);
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        if above(mid) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    hit = Some(hi);
                    break;
                }
                r0 = r1;
            }
            let roi = &spec.roi;
            if let Some(r) = hit {
                let (x, y) = (r * dir.0, r * dir.1);
                if !(roi.x_min..roi.x_max).contains(&x) || !(roi.y_min..roi.y_max).contains(&y) {
                    continue;
                }
                out.push((x, y, t.height(x, y) + s.jitter()));
            }
        }
    }
    out
}

fn object_surface(b: &Box3D, density: f64, t: &TerrainKind, s: &mut Sampler) -> Vec<(f64, f64, f64)> {
    let (sn, cs) = b.theta.sin_cos();
    let to_world = |u: f64, v: f64| (b.x + u * cs - v * sn, b.y + u * sn + v * cs);
    let (hl, hw, hh) = (0.5 * b.l, 0.5 * b.w, 0.5 * b.h);
    let count = |area: f64| (density * area).round() as usize;
    let mut out = Vec::new();
    // top face
    for _ in 0..count(b.l * b.w) {
        let u = s.rng.random_range(-hl..=hl);
        let v = s.rng.random_range(-hw..=hw);
        let (x, y) = to_world(u, v);
        out.push((x, y, b.top() + s.jitter()));
    }
    // four sides, as (fixed coordinate, along-side half length, is_u_fixed)
    for (fixed, half, u_fixed) in [(hl, hw, true), (-hl, hw, true), (hw, hl, false), (-hw, hl, false)] {
        for _ in 0..count(2.0 * half * b.h) {
            let along = s.rng.random_range(-half..=half);
            let dz = s.rng.random_range(-hh..=hh);
            let (u, v) = if u_fixed { (fixed, along) } else { (along, fixed) };
            let (x, y) = to_world(u, v);
            let z = b.z + dz + s.jitter();
            if z >= t.height(x, y) {
                out.push((x, y, z));
            }
        }
    }
    out
}

/// Samples ground on the analytic terrain and the visible surfaces of each
/// object. Ground samples inside an object footprint are dropped (the object
/// hides them). Deterministic per seed.
pub fn generate_scene(spec: &TerrainSpec, objects: &[Box3D]) -> Result<SyntheticScene> {
    spec.validate()?;
    for (i, b) in objects.iter().enumerate() {
        b.validate()?;
        for (j, o) in objects[..i].iter().enumerate() {
            if iou_bev(b, o) > 0.0 {
                return Err(Error::OverlappingObjects(j, i));
            }
        }
    }
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma checked"));
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        noise,
    };
    let roi = &spec.roi;

    let ground: Vec<(f64, f64, f64)> = match &spec.ring {
        Some(ring) => ring_ground(spec, ring, &mut s),
        None => {
            let n = (spec.point_density * spec.area()).round() as usize;
            (0..n)
                .map(|_| {
                    let x = s.uniform_f32(roi.x_min, roi.x_max);
                    let y = s.uniform_f32(roi.y_min, roi.y_max);
                    (x, y, spec.kind.height(x, y) + s.jitter())
                })
                .collect()
        }
    };

    let mut points = Vec::new();
    let mut is_ground = Vec::new();
    for (x, y, z) in ground {
        if objects.iter().any(|b| b.contains_bev(x, y)) {
            continue;
        }
        points.push(Point3::new(to_f32_grid(x), to_f32_grid(y), to_f32_grid(z), to_f32_grid(0.2)));
        is_ground.push(true);
    }
    for b in objects {
        for (x, y, z) in object_surface(b, spec.object_density, &spec.kind, &mut s) {
            points.push(Point3::new(to_f32_grid(x), to_f32_grid(y), to_f32_grid(z), to_f32_grid(0.6)));
            is_ground.push(false);
        }
    }
    Ok(SyntheticScene {
        cloud: PointCloud::new(points, format!("synthetic-{}", spec.seed)),
        terrain: spec.kind,
        boxes: objects.to_vec(),
        is_ground,
    })
}

/// A flat-ish road scene with `points` returns in total, laid out like a
/// single dense sensor sweep, for timing.
pub fn benchmark_scene(points: usize, seed: u64) -> Result<SyntheticScene> {
    let kind = TerrainKind::Slope {
        gx: 0.01,
        gy: -0.005,
        z0: -1.73,
    };
    let mut cars = Vec::new();
    for k in 0..12 {
        let x = -40.0 + 7.0 * k as f64;
        let y = if k % 2 == 0 { -4.0 } else { 5.0 };
        cars.push(seat_on_terrain(&kind, Box3D::new(x, y, 0.0, 3.9, 1.6, 1.56, 0.1 * k as f64)));
    }
    let mut spec = TerrainSpec::new(kind);
    spec.seed = seed;
    spec.object_density = 20.0;
    let object_points: f64 = cars
        .iter()
        .map(|b| spec.object_density * (b.l * b.w + 2.0 * (b.l + b.w) * b.h))
        .sum();
    let ground_points = (points as f64 - object_points).max(1.0);
    spec.point_density = ground_points / spec.area();
    let mut scene = generate_scene(&spec, &cars)?;

    // sensor order: azimuth columns of 0.2 degrees, near to far within each
    let key = |p: &Point3| {
        let col = (p.y.atan2(p.x).to_degrees() / 0.2).floor() as i64;
        (col, p.x.hypot(p.y))
    };
    let mut order: Vec<usize> = (0..scene.cloud.len()).collect();
    let keys: Vec<_> = scene.cloud.points.iter().map(key).collect();
    order.sort_by(|&a, &b| keys[a].0.cmp(&keys[b].0).then(keys[a].1.total_cmp(&keys[b].1)));
    scene.cloud.points = order.iter().map(|&k| scene.cloud.points[k]).collect();
    scene.is_ground = order.iter().map(|&k| scene.is_ground[k]).collect();
    Ok(scene)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub rms: f64,
    pub max: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub surface: ErrorStats,
    pub plane: ErrorStats,
}

/// Errors of the surface and of the plane against the analytic terrain, over
/// the valid cells of `gs` whose center `keep` accepts.
pub fn accuracy_report(
    gs: &GroundSurface,
    plane: &PlaneModel,
    terrain: &TerrainKind,
    keep: impl Fn(f64, f64) -> bool,
) -> AccuracyReport {
    let (mut ss, mut sm, mut ps, mut pm, mut n) = (0.0, 0.0f64, 0.0, 0.0f64, 0usize);
    let s = gs.spec;
    for i in 0..s.rows {
        for j in 0..s.cols {
            let Some(g) = gs.get(i, j) else {
                continue;
            };
            let (x, y) = s.cell_center(i, j);
            if !keep(x, y) {
                continue;
            }
            let truth = terrain.height(x, y);
            let (es, ep) = ((g - truth).abs(), (plane_z(plane, x, y) - truth).abs());
            ss += es * es;
            ps += ep * ep;
            sm = sm.max(es);
            pm = pm.max(ep);
            n += 1;
        }
    }
    let rms = |sum: f64| if n == 0 { 0.0 } else { (sum / n as f64).sqrt() };
    AccuracyReport {
        surface: ErrorStats {
            rms: rms(ss),
            max: sm,
            cells: n,
        },
        plane: ErrorStats {
            rms: rms(ps),
            max: pm,
            cells: n,
        },
    }
}
