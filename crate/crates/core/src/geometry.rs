// SPDX-License-Identifier: Apache-2.0

//! Oriented boxes and the overlap measures used for anchors, augmentation
//! and evaluation.
//!
//! Footprint intersection uses Sutherland-Hodgman clipping of one rotated
//! rectangle against the other, with the area from the shoelace formula.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::{Error, Result};

/// Intersection areas below this are treated as empty.
const SLIVER_AREA: f64 = 1e-12;
const AXIS_TOL: f64 = 1e-9;

/// Wraps an angle into `[-pi, pi)`. Angles already in range are returned
/// unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let mut r = theta - TAU * ((theta + PI) / TAU).floor();
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r += TAU;
    }
    r
}

/// Oriented 3D box: center, size, and yaw about +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl Box3D {
    pub fn new(x: f64, y: f64, z: f64, l: f64, w: f64, h: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            z,
            l,
            w,
            h,
            theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.x, self.y, self.z, self.l, self.w, self.h, self.theta];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("box has a non-finite field".into()));
        }
        if !(self.l > 0.0 && self.w > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "box size ({}, {}, {}) must be positive",
                self.l, self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn bottom(&self) -> f64 {
        self.z - 0.5 * self.h
    }

    pub fn top(&self) -> f64 {
        self.z + 0.5 * self.h
    }

    pub fn bev_area(&self) -> f64 {
        self.l * self.w
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    /// Footprint corners, counter-clockwise.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.theta.sin_cos();
        let (hl, hw) = (0.5 * self.l, 0.5 * self.w);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
            .map(|(u, v)| (self.x + u * c - v * s, self.y + u * s + v * c))
    }

    /// Half extents of the footprint's axis-aligned bounding rectangle.
    pub fn aabb_half_extents(&self) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (hl, hw) = (0.5 * self.l, 0.5 * self.w);
        (
            (hl * c).abs() + (hw * s).abs(),
            (hl * s).abs() + (hw * c).abs(),
        )
    }

    /// Whether `(x, y)` lies inside the closed footprint.
    pub fn contains_bev(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.x, y - self.y);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        u.abs() <= 0.5 * self.l && v.abs() <= 0.5 * self.w
    }

    pub fn contains_point(&self, x: f64, y: f64, z: f64) -> bool {
        self.contains_bev(x, y) && z >= self.bottom() && z <= self.top()
    }
}

/// Two footprint corners plus top (`h1`) and bottom (`h2`) heights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box4CA {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// `Some(true)` if the box length runs along x, `Some(false)` along y,
/// `None` for any other yaw.
fn axis_alignment(theta: f64) -> Option<bool> {
    let t = normalize_angle(theta);
    if t.abs() < AXIS_TOL || (t + PI).abs() < AXIS_TOL || (PI - t).abs() < AXIS_TOL {
        Some(true)
    } else if (t.abs() - FRAC_PI_2).abs() < AXIS_TOL {
        Some(false)
    } else {
        None
    }
}

pub fn box3d_to_4ca(b: &Box3D) -> Result<Box4CA> {
    let along_x = axis_alignment(b.theta).ok_or(Error::UnsupportedRepresentation(b.theta))?;
    let (ex, ey) = if along_x {
        (0.5 * b.l, 0.5 * b.w)
    } else {
        (0.5 * b.w, 0.5 * b.l)
    };
    Ok(Box4CA {
        x1: b.x - ex,
        y1: b.y - ey,
        x2: b.x + ex,
        y2: b.y + ey,
        h1: b.top(),
        h2: b.bottom(),
    })
}

/// Inverse of [`box3d_to_4ca`]; `theta` selects which footprint side is the
/// length.
pub fn ca4_to_box3d(c: &Box4CA, theta: f64) -> Result<Box3D> {
    let along_x = axis_alignment(theta).ok_or(Error::UnsupportedRepresentation(theta))?;
    let (dx, dy) = (c.x2 - c.x1, c.y2 - c.y1);
    let (l, w) = if along_x { (dx, dy) } else { (dy, dx) };
    Ok(Box3D::new(
        0.5 * (c.x1 + c.x2),
        0.5 * (c.y1 + c.y2),
        0.5 * (c.h1 + c.h2),
        l,
        w,
        c.h1 - c.h2,
        normalize_angle(theta),
    ))
}

/// Yaw as a unit vector plus a heading-direction bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationCode {
    pub cx: f64,
    pub cy: f64,
    /// Set for yaw in `(-pi/2, pi/2]`.
    pub dir: bool,
}

pub fn encode_orientation(theta: f64) -> OrientationCode {
    let t = normalize_angle(theta);
    let (s, c) = t.sin_cos();
    OrientationCode {
        cx: c,
        cy: s,
        dir: t > -FRAC_PI_2 && t <= FRAC_PI_2,
    }
}

pub fn decode_orientation(code: &OrientationCode) -> f64 {
    normalize_angle(code.cy.atan2(code.cx))
}

// ---------------------------------------------------------------------------
// Convex polygon clipping
// ---------------------------------------------------------------------------

type P2 = (f64, f64);

/// Fixed-capacity polygon; clipping a quad against a quad never exceeds 8
/// vertices.
#[derive(Clone, Copy)]
struct Poly {
    pts: [P2; 12],
    len: usize,
}

impl Poly {
    fn from_quad(q: &[P2; 4]) -> Self {
        let mut pts = [(0.0, 0.0); 12];
        pts[..4].copy_from_slice(q);
        Self { pts, len: 4 }
    }

    fn push(&mut self, p: P2) {
        self.pts[self.len] = p;
        self.len += 1;
    }

    fn area(&self) -> f64 {
        let mut twice = 0.0;
        for k in 0..self.len {
            let (x0, y0) = self.pts[k];
            let (x1, y1) = self.pts[(k + 1) % self.len];
            twice += x0 * y1 - x1 * y0;
        }
        0.5 * twice.abs()
    }
}

#[inline]
fn side(a: P2, b: P2, p: P2) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Clips `subject` against the counter-clockwise convex quad `clip`.
fn clip_convex(subject: &[P2; 4], clip: &[P2; 4]) -> Poly {
    let mut out = Poly::from_quad(subject);
    for k in 0..4 {
        if out.len == 0 {
            break;
        }
        let (a, b) = (clip[k], clip[(k + 1) % 4]);
        let input = out;
        out.len = 0;
        for idx in 0..input.len {
            let cur = input.pts[idx];
            let prev = input.pts[(idx + input.len - 1) % input.len];
            let (sc, sp) = (side(a, b, cur), side(a, b, prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(lerp(prev, cur, sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(lerp(prev, cur, sp / (sp - sc)));
            }
        }
    }
    out
}

#[inline]
fn lerp(p: P2, q: P2, t: f64) -> P2 {
    (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
}

/// Area of the intersection of the two footprints.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    let reach = 0.5 * (a.l.hypot(a.w) + b.l.hypot(b.w));
    if dx * dx + dy * dy > reach * reach {
        return 0.0;
    }
    let area = clip_convex(&a.corners(), &b.corners()).area();
    if area < SLIVER_AREA {
        0.0
    } else {
        area
    }
}

pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection_area(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.bev_area() + b.bev_area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let dz = a.top().min(b.top()) - a.bottom().max(b.bottom());
    if dz <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * dz;
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IouKind {
    Bev,
    ThreeD,
}

impl IouKind {
    pub fn iou(self, a: &Box3D, b: &Box3D) -> f64 {
        match self {
            IouKind::Bev => iou_bev(a, b),
            IouKind::ThreeD => iou_3d(a, b),
        }
    }
}

/// Greedy non-maximum suppression on footprint IoU.
///
/// Boxes are visited by descending score, equal scores in index order. A box
/// is dropped if its IoU with any kept box exceeds `iou_threshold`. At most
/// `top_n` indices are returned, in selection order.
pub fn nms(boxes: &[Box3D], scores: &[f64], iou_threshold: f64, top_n: usize) -> Result<Vec<usize>> {
    if boxes.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: boxes.len(),
            right: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::InvalidConfig(format!("score #{i} is NaN")));
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut kept: Vec<usize> = Vec::with_capacity(top_n.min(boxes.len()));
    for idx in order {
        if kept.len() == top_n {
            break;
        }
        let suppressed = kept
            .iter()
            .any(|&k| iou_bev(&boxes[k], &boxes[idx]) > iou_threshold);
        if !suppressed {
            kept.push(idx);
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub gt: Option<usize>,
    pub iou: f64,
    pub true_positive: bool,
}

/// One-to-one assignment of detections to ground truth, greedily by
/// descending IoU. A detection is a true positive iff it is matched with
/// IoU >= `tau`.
pub fn match_detections(dets: &[Box3D], gts: &[Box3D], tau: f64, kind: IouKind) -> Vec<Match> {
    let mut pairs = Vec::new();
    for (d, db) in dets.iter().enumerate() {
        for (g, gb) in gts.iter().enumerate() {
            let iou = kind.iou(db, gb);
            if iou > 0.0 {
                pairs.push((iou, d, g));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut out = vec![
        Match {
            gt: None,
            iou: 0.0,
            true_positive: false,
        };
        dets.len()
    ];
    let mut gt_taken = vec![false; gts.len()];
    for (iou, d, g) in pairs {
        if out[d].gt.is_some() || gt_taken[g] {
            continue;
        }
        gt_taken[g] = true;
        out[d] = Match {
            gt: Some(g),
            iou,
            true_positive: iou >= tau,
        };
    }
    out
}
