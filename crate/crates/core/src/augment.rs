// SPDX-License-Identifier: Apache-2.0

//! Scene augmentation: mirror, yaw rotation, and transplanting annotated
//! objects onto unoccupied ground.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{iou_bev, normalize_angle, Box3D};
use crate::grid::{cell_span, integral, CountGrid, IntegralGrid};
use crate::ground::GroundSurface;
use crate::io::{Label, Point3, PointCloud};
use crate::{Error, Result};

/// Mirror about the x-z plane: `y -> -y`, `theta -> -theta`.
pub fn flip_scene(cloud: &PointCloud, boxes: &[Box3D]) -> (PointCloud, Vec<Box3D>) {
    let points = cloud
        .points
        .iter()
        .map(|p| Point3 { y: -p.y, ..*p })
        .collect();
    let boxes = boxes
        .iter()
        .map(|b| Box3D {
            y: -b.y,
            theta: normalize_angle(-b.theta),
            ..*b
        })
        .collect();
    (PointCloud::new(points, cloud.source_id.clone()), boxes)
}

/// Yaw rotation by `alpha` about the sensor origin.
pub fn rotate_scene(cloud: &PointCloud, boxes: &[Box3D], alpha: f64) -> (PointCloud, Vec<Box3D>) {
    let (s, c) = alpha.sin_cos();
    let rot = |x: f64, y: f64| (x * c - y * s, x * s + y * c);
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let (x, y) = rot(p.x, p.y);
            Point3 { x, y, ..*p }
        })
        .collect();
    let boxes = boxes
        .iter()
        .map(|b| {
            let (x, y) = rot(b.x, b.y);
            Box3D {
                x,
                y,
                theta: normalize_angle(b.theta + alpha),
                ..*b
            }
        })
        .collect();
    (PointCloud::new(points, cloud.source_id.clone()), boxes)
}

/// Axis-aligned window of `footprint` plus `margin` on every side, centered
/// on cell `(i, j)`.
fn window_box(gs: &GroundSurface, i: usize, j: usize, footprint: (f64, f64), margin: f64) -> Box3D {
    let (x, y) = gs.spec.cell_center(i, j);
    Box3D::new(
        x,
        y,
        0.0,
        footprint.0 + 2.0 * margin,
        footprint.1 + 2.0 * margin,
        1.0,
        0.0,
    )
}

/// Cells where a `footprint = (l, w)` object, padded by `margin`, could be
/// dropped: the cell has ground, the padded window lies inside the grid,
/// `above` counts no object points in the cells it touches, and its BEV IoU
/// with every existing box is zero. Row-major order.
pub fn find_free_cells(
    gs: &GroundSurface,
    above: &IntegralGrid,
    boxes: &[Box3D],
    footprint: (f64, f64),
    margin: f64,
) -> Vec<(usize, usize)> {
    let s = gs.spec;
    let (hx, hy) = (0.5 * footprint.0 + margin, 0.5 * footprint.1 + margin);
    let mut free = Vec::new();
    for i in 0..s.rows {
        for j in 0..s.cols {
            if gs.get(i, j).is_none() {
                continue;
            }
            let (x, y) = s.cell_center(i, j);
            if x - hx < s.x_min || x + hx > s.x_max() || y - hy < s.y_min || y + hy > s.y_max() {
                continue;
            }
            let (i0, i1) = cell_span(x - hx, x + hx, s.x_min, s.cell_size, s.rows);
            let (j0, j1) = cell_span(y - hy, y + hy, s.y_min, s.cell_size, s.cols);
            if above.region_count(i0, i1, j0, j1).expect("clamped span") > 0 {
                continue;
            }
            let w = window_box(gs, i, j, footprint, margin);
            if boxes.iter().all(|b| iou_bev(&w, b) == 0.0) {
                free.push((i, j));
            }
        }
    }
    free
}

/// An annotated object cut from another scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Donor {
    pub points: Vec<Point3>,
    pub label: Label,
}

impl Donor {
    /// Points of `cloud` inside `label`'s box.
    pub fn extract(cloud: &PointCloud, label: &Label) -> Self {
        let points = cloud
            .points
            .iter()
            .filter(|p| label.bbox.contains_point(p.x, p.y, p.z))
            .copied()
            .collect();
        Self {
            points,
            label: label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Placed { cell: (usize, usize), bbox: Box3D },
    NoFreeCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transplanted {
    pub cloud: PointCloud,
    pub labels: Vec<Label>,
    pub placements: Vec<Placement>,
}

impl Transplanted {
    pub fn placed_count(&self) -> usize {
        self.placements
            .iter()
            .filter(|p| matches!(p, Placement::Placed { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransplantConfig {
    pub margin: f64,
    pub seed: u64,
}

impl Default for TransplantConfig {
    fn default() -> Self {
        Self {
            margin: 0.5,
            seed: 0,
        }
    }
}

/// Places donors one after another on cells drawn from [`find_free_cells`].
///
/// Each donor is translated so its box center lands on the cell center and
/// its lowest point touches the cell's ground height. Every placement marks
/// its footprint as occupied for the donors after it. Original points keep
/// their order and come first in the output cloud.
pub fn transplant_objects(
    cloud: &PointCloud,
    labels: &[Label],
    gs: &GroundSurface,
    above: &CountGrid,
    donors: &[Donor],
    cfg: &TransplantConfig,
) -> Result<Transplanted> {
    if above.spec != gs.spec {
        return Err(Error::DimensionMismatch(
            "occupancy grid and ground surface differ in layout".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut occupied = above.clone();
    let mut points = cloud.points.clone();
    let mut labels = labels.to_vec();
    let mut placements = Vec::with_capacity(donors.len());

    for donor in donors {
        let b = donor.label.bbox;
        let (hx, hy) = b.aabb_half_extents();
        let boxes: Vec<Box3D> = labels.iter().map(|l| l.bbox).collect();
        let free = find_free_cells(gs, &integral(&occupied), &boxes, (2.0 * hx, 2.0 * hy), cfg.margin);
        if free.is_empty() {
            placements.push(Placement::NoFreeCell);
            continue;
        }
        let (i, j) = free[rng.random_range(0..free.len())];
        let (cx, cy) = gs.spec.cell_center(i, j);
        let g = gs.get(i, j).expect("free cells have ground");
        let low = donor
            .points
            .iter()
            .map(|p| p.z)
            .fold(f64::INFINITY, f64::min);
        let low = if low.is_finite() { low } else { b.bottom() };
        let (dx, dy, dz) = (cx - b.x, cy - b.y, g - low);

        for p in &donor.points {
            let q = Point3 {
                x: p.x + dx,
                y: p.y + dy,
                z: p.z + dz,
                ..*p
            };
            occupied.add(q.x, q.y);
            points.push(q);
        }
        let placed = Box3D {
            x: cx,
            y: cy,
            z: b.z + dz,
            ..b
        };
        labels.push(Label {
            bbox: placed,
            class: donor.label.class.clone(),
        });
        placements.push(Placement::Placed {
            cell: (i, j),
            bbox: placed,
        });
    }

    Ok(Transplanted {
        cloud: PointCloud::new(points, cloud.source_id.clone()),
        labels,
        placements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::{above_ground_counts, estimate_surface, surface_from_cloud, FilterConfig};
    use crate::grid::{build_height_map, GridSpec};
    use crate::io::Point3;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pc(pts: Vec<(f64, f64, f64)>) -> PointCloud {
        PointCloud::new(
            pts.into_iter()
                .enumerate()
                .map(|(k, (x, y, z))| Point3::new(x, y, z, k as f64 / 1000.0))
                .collect(),
            "a",
        )
    }

    fn label(b: Box3D) -> Label {
        Label {
            bbox: b,
            class: "Car".into(),
        }
    }

    #[test]
    fn flip_examples() {
        let c = pc(vec![(1.0, 2.0, 3.0), (4.0, -5.0, 6.0)]);
        let b = vec![Box3D::new(1.0, 2.0, 0.0, 4.0, 2.0, 1.5, FRAC_PI_2), Box3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, -PI)];
        let (fc, fb) = flip_scene(&c, &b);
        assert_eq!(fc.points[0].y, -2.0);
        assert_eq!(fc.points[1].intensity, c.points[1].intensity);
        assert_eq!(fb[0].theta, -FRAC_PI_2);
        assert_eq!(fb[0].y, -2.0);
        let (cc, bb) = flip_scene(&fc, &fb);
        assert_eq!(cc, c);
        assert_eq!(bb, b);
    }

    #[test]
    fn symmetric_set_is_fixed() {
        let pts = vec![(1.0, 2.0, 0.0), (1.0, -2.0, 0.0), (3.0, 0.0, 1.0), (-4.0, 0.5, 2.0), (-4.0, -0.5, 2.0)];
        let (f, _) = flip_scene(&pc(pts.clone()), &[]);
        let key = |p: &Point3| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        let mut a: Vec<_> = pc(pts).points.iter().map(key).collect();
        let mut b: Vec<_> = f.points.iter().map(key).collect();
        a.sort();
        b.sort();
        // 0.0 flips to -0.0; compare through the numeric value on that axis
        let norm = |v: Vec<(u64, u64, u64)>| {
            v.into_iter()
                .map(|(x, y, z)| (x, (f64::from_bits(y) + 0.0).to_bits(), z))
                .collect::<std::collections::BTreeSet<_>>()
        };
        assert_eq!(norm(a), norm(b));
    }

    #[test]
    fn rotation_examples() {
        let c = pc(vec![(1.0, 0.0, 0.0), (3.0, 4.0, 1.0)]);
        let b = vec![Box3D::new(10.0, 0.0, 0.0, 4.0, 2.0, 1.5, 3.0)];
        let (rc, rb) = rotate_scene(&c, &b, 0.0);
        assert_eq!((rc, rb.clone()), (c.clone(), b.clone()));
        let (rc, rb) = rotate_scene(&c, &b, FRAC_PI_2);
        assert!((rc.points[0].y - 1.0).abs() < 1e-12);
        assert!((rb[0].y - 10.0).abs() < 1e-12);
        assert!((rb[0].theta - normalize_angle(3.0 + FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn free_cells_on_empty_flat_scene() {
        let spec = GridSpec::new(0.0, 0.0, 0.1, 60, 40).unwrap();
        let gs = GroundSurface::from_fn(&spec, |_, _| 0.0);
        let ig = integral(&CountGrid::zeros(&spec));
        let free = find_free_cells(&gs, &ig, &[], (2.0, 1.0), 0.5);
        // window 3.0 x 2.0: centers in [1.5, 4.5] x [1.0, 3.0]
        assert_eq!(free.len(), 30 * 20);
        assert!(free.contains(&(15, 10)) && !free.contains(&(14, 10)));
        let blocker = Box3D::new(3.0, 2.0, 0.0, 0.4, 0.4, 1.0, 0.0);
        let free = find_free_cells(&gs, &ig, &[blocker], (2.0, 1.0), 0.5);
        assert!(!free.contains(&(30, 20)));
        assert!(free.iter().all(|&(i, j)| {
            let (x, y) = spec.cell_center(i, j);
            (x - 3.0).abs() > 1.7 || (y - 2.0).abs() > 1.2
        }));
    }

    /// Per-cell scan against raw points and boxes.
    fn brute_free(
        gs: &GroundSurface,
        cloud: &PointCloud,
        tau: f64,
        boxes: &[Box3D],
        fp: (f64, f64),
        margin: f64,
    ) -> usize {
        let s = gs.spec;
        let mut n = 0;
        for i in 0..s.rows {
            for j in 0..s.cols {
                if gs.get(i, j).is_none() {
                    continue;
                }
                let (x, y) = s.cell_center(i, j);
                let (hx, hy) = (0.5 * fp.0 + margin, 0.5 * fp.1 + margin);
                if x - hx < s.x_min || x + hx > s.x_max() || y - hy < s.y_min || y + hy > s.y_max() {
                    continue;
                }
                let blocked_by_point = cloud.points.iter().any(|p| {
                    let Some((a, b)) = s.cell_of(p.x, p.y) else {
                        return false;
                    };
                    let above = gs.get(a, b).is_some_and(|g| p.z > g + tau);
                    // cell (a, b) touches the closed window
                    let (cx0, cy0) = (s.x_min + a as f64 * 0.1, s.y_min + b as f64 * 0.1);
                    above
                        && cx0 <= x + hx
                        && cx0 + 0.1 > x - hx
                        && cy0 <= y + hy
                        && cy0 + 0.1 > y - hy
                });
                let w = Box3D::new(x, y, 0.0, fp.0 + 2.0 * margin, fp.1 + 2.0 * margin, 1.0, 0.0);
                if !blocked_by_point && boxes.iter().all(|b| iou_bev(&w, b) == 0.0) {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn free_count_matches_brute_force() {
        let spec = GridSpec::new(0.0, 0.0, 0.1, 80, 80).unwrap();
        let mut pts = Vec::new();
        for i in 0..80 {
            for j in 0..80 {
                pts.push((0.05 + 0.1 * i as f64, 0.05 + 0.1 * j as f64, 0.0));
            }
        }
        // a small object and a stray high point
        for k in 0..10 {
            pts.push((2.0 + 0.03 * k as f64, 5.0, 0.8));
        }
        pts.push((6.33, 1.27, 1.0));
        let cloud = pc(pts);
        let gs = surface_from_cloud(&cloud, &spec, &FilterConfig::square(0.5)).unwrap();
        let counts = above_ground_counts(&cloud, &gs, 0.2);
        let boxes = [Box3D::new(5.5, 6.0, 0.5, 1.2, 0.8, 1.0, 0.6)];
        // window edges fall strictly inside cells, away from float ties
        let fp = (1.44, 0.96);
        let free = find_free_cells(&gs, &integral(&counts), &boxes, fp, 0.3);
        assert_eq!(free.len(), brute_free(&gs, &cloud, 0.2, &boxes, fp, 0.3));
        assert!(!free.is_empty());
    }

    #[test]
    fn transplant_contract() {
        let spec = GridSpec::new(0.0, 0.0, 0.1, 200, 200).unwrap();
        let gs = GroundSurface::from_fn(&spec, |x, y| -1.7 + 0.01 * x - 0.02 * y);
        let base = pc(vec![(1.0, 1.0, -1.69)]);
        let existing = vec![label(Box3D::new(10.0, 10.0, -1.0, 4.0, 2.0, 1.5, 0.3))];
        let donor_box = Box3D::new(30.0, -4.0, 5.0, 3.0, 1.5, 1.4, 0.0);
        let donor_pts: Vec<_> = (0..50)
            .map(|k| Point3::new(29.0 + 0.04 * k as f64, -4.0 + 0.01 * k as f64, 4.4 + 0.02 * k as f64, 0.3))
            .collect();
        let donor = Donor {
            points: donor_pts,
            label: label(donor_box),
        };
        let counts = CountGrid::zeros(&spec);
        let out = transplant_objects(
            &base,
            &existing,
            &gs,
            &counts,
            &[donor.clone(), donor.clone(), donor],
            &TransplantConfig { margin: 0.5, seed: 3 },
        )
        .unwrap();
        assert_eq!(out.placed_count(), 3);
        assert_eq!(out.labels.len(), 1 + 3);
        assert_eq!(out.cloud.len(), 1 + 150);
        assert_eq!(out.cloud.points[0], base.points[0]);
        for (n, p) in out.placements.iter().enumerate() {
            let Placement::Placed { cell, bbox } = p else {
                panic!("not placed");
            };
            let g = gs.get(cell.0, cell.1).unwrap();
            let lowest = out.cloud.points[1 + 50 * n..1 + 50 * (n + 1)]
                .iter()
                .map(|p| p.z)
                .fold(f64::INFINITY, f64::min);
            assert!((lowest - g).abs() <= 0.02);
            for other in &out.labels[..1 + n] {
                assert_eq!(iou_bev(bbox, &other.bbox), 0.0);
            }
        }
    }

    #[test]
    fn transplant_reports_no_space() {
        let spec = GridSpec::new(0.0, 0.0, 0.1, 30, 30).unwrap();
        let gs = GroundSurface::from_fn(&spec, |_, _| 0.0);
        let donor = Donor {
            points: vec![Point3::new(0.0, 0.0, 0.0, 0.0)],
            label: label(Box3D::new(0.0, 0.0, 0.5, 4.0, 2.0, 1.0, 0.0)),
        };
        let out = transplant_objects(
            &pc(vec![]),
            &[],
            &gs,
            &CountGrid::zeros(&spec),
            &[donor],
            &TransplantConfig::default(),
        )
        .unwrap();
        assert_eq!(out.placements, vec![Placement::NoFreeCell]);
        assert!(out.labels.is_empty());
    }

    #[test]
    fn surface_of_flipped_scene_is_flipped_surface() {
        // symmetric grid about y = 0 so that mirrored cells line up
        let spec = GridSpec::new(-5.0, -4.0, 0.1, 100, 80).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<_> = (0..4000)
            .map(|_| {
                // cell centers avoid the shared boundary at y = 0
                let i = rng.random_range(0..100);
                let j = rng.random_range(0..80);
                let (x, y) = spec.cell_center(i, j);
                (x, y, rng.random_range(-2.0..1.0))
            })
            .collect();
        let cloud = pc(pts);
        let f = FilterConfig::square(0.7);
        let gs = estimate_surface(&build_height_map(&cloud, &spec).unwrap(), &f);
        let (flipped, _) = flip_scene(&cloud, &[]);
        let fgs = estimate_surface(&build_height_map(&flipped, &spec).unwrap(), &f);
        for i in 0..100 {
            for j in 0..80 {
                assert_eq!(gs.get(i, j), fgs.get(i, 79 - j));
            }
        }
    }

    proptest! {
        #[test]
        fn rotation_preserves_distances(
            pts in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -3.0..3.0f64), 2..40),
            alpha in -7.0..7.0f64,
        ) {
            let c = pc(pts);
            let (r, _) = rotate_scene(&c, &[], alpha);
            let (back, _) = rotate_scene(&r, &[], -alpha);
            prop_assert_eq!(r.len(), c.len());
            for (p, q) in c.points.iter().zip(&back.points) {
                prop_assert!((p.x - q.x).abs() < 1e-9 && (p.y - q.y).abs() < 1e-9 && p.z == q.z);
            }
            let d = |a: &Point3, b: &Point3| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt();
            for i in 0..c.len() {
                for j in 0..i {
                    prop_assert!((d(&c.points[i], &c.points[j]) - d(&r.points[i], &r.points[j])).abs() < 1e-9);
                }
            }
        }
    }
}
