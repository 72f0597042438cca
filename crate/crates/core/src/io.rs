// SPDX-License-Identifier: Apache-2.0

//! Point cloud and label ingestion, region-of-interest cropping, and the
//! binary grid formats.
//!
//! # Grid file (`GAGR`)
//!
//! ```text
//! magic "GAGR" | rows:u32 | cols:u32 | x_min:f64 | y_min:f64 | cell_size:f64
//! rows*cols cell values, f32, row-major
//! ceil(rows*cols/8) validity bitmap bytes, row-major, LSB-first
//! ```
//!
//! All integers and floats are little-endian. Count grids use the same header
//! under magic `GAGC` with a `u32` payload and no bitmap. Feature tensors use
//! magic `GAGF` with an extra `channels:u32` after `cols`, followed by
//! `channels*rows*cols` f32 values, channel-major, and no bitmap.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::BevFeatures;
use crate::geometry::{normalize_angle, Box3D};
use crate::grid::{CountGrid, GridSpec, HeightMap};
use crate::ground::GroundSurface;
use crate::{Error, Result};

pub const GRID_MAGIC: [u8; 4] = *b"GAGR";
pub const COUNT_MAGIC: [u8; 4] = *b"GAGC";
pub const FEATURE_MAGIC: [u8; 4] = *b"GAGF";

const KITTI_RECORD: usize = 16;
const GRID_HEADER: usize = 4 + 4 + 4 + 3 * 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Reflectance in [0, 1]. Carried through every stage, read by none.
    pub intensity: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self { x, y, z, intensity }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub source_id: String,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, source_id: impl Into<String>) -> Self {
        Self {
            points,
            source_id: source_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned crop box, half-open on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for RoiConfig {
    /// 100 m forward extent, 60 m lateral, heights within 3 m of the sensor.
    fn default() -> Self {
        Self {
            x_min: -50.0,
            x_max: 50.0,
            y_min: -30.0,
            y_max: 30.0,
            z_min: -3.0,
            z_max: 3.0,
        }
    }
}

impl RoiConfig {
    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("x", self.x_min, self.x_max),
            ("y", self.y_min, self.y_max),
            ("z", self.z_min, self.z_max),
        ];
        for (name, lo, hi) in axes {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "roi {name} range [{lo}, {hi}) is empty or non-finite"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.x_min
            && p.x < self.x_max
            && p.y >= self.y_min
            && p.y < self.y_max
            && p.z >= self.z_min
            && p.z < self.z_max
    }
}

/// Keeps the points inside `roi`, in their original order.
pub fn crop_roi(cloud: &PointCloud, roi: &RoiConfig) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .filter(|p| roi.contains(p))
            .copied()
            .collect(),
        source_id: cloud.source_id.clone(),
    }
}

/// Per-point membership in `roi`, aligned with the cloud.
pub fn roi_mask(cloud: &PointCloud, roi: &RoiConfig) -> Vec<bool> {
    cloud.points.iter().map(|p| roi.contains(p)).collect()
}

// ---------------------------------------------------------------------------
// KITTI velodyne .bin
// ---------------------------------------------------------------------------

pub fn decode_kitti(bytes: &[u8]) -> Result<Vec<Point3>> {
    if !bytes.len().is_multiple_of(KITTI_RECORD) {
        return Err(Error::Truncated {
            offset: (bytes.len() - bytes.len() % KITTI_RECORD) as u64,
        });
    }
    let mut points = Vec::with_capacity(bytes.len() / KITTI_RECORD);
    for (r, rec) in bytes.chunks_exact(KITTI_RECORD).enumerate() {
        let mut v = [0f64; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            let f = f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    offset: (r * KITTI_RECORD + 4 * k) as u64,
                });
            }
            *slot = f as f64;
        }
        points.push(Point3::new(v[0], v[1], v[2], v[3]));
    }
    Ok(points)
}

pub fn encode_kitti(points: &[Point3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * KITTI_RECORD);
    for p in points {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_kitti_bin(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let points = decode_kitti(&bytes)?;
    Ok(PointCloud::new(points, path.display().to_string()))
}

pub fn write_kitti_bin(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    write_atomic(path, &encode_kitti(&cloud.points))
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub bbox: Box3D,
    pub class: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    x: f64,
    y: f64,
    z: f64,
    l: f64,
    w: f64,
    h: f64,
    theta: f64,
    class: String,
}

pub fn parse_labels_json(text: &str) -> Result<Vec<Label>> {
    let records: Vec<LabelRecord> = serde_json::from_str(text)?;
    records
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let invalid = |reason: String| Error::InvalidLabel { index, reason };
            let values = [r.x, r.y, r.z, r.l, r.w, r.h, r.theta];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(invalid("non-finite field".into()));
            }
            for (name, v) in [("l", r.l), ("w", r.w), ("h", r.h)] {
                if v <= 0.0 {
                    return Err(invalid(format!("{name} = {v} must be positive")));
                }
            }
            let theta = normalize_angle(r.theta);
            if theta != r.theta {
                log::warn!("label #{index}: theta {} normalized to {theta}", r.theta);
            }
            Ok(Label {
                bbox: Box3D::new(r.x, r.y, r.z, r.l, r.w, r.h, theta),
                class: r.class,
            })
        })
        .collect()
}

pub fn read_labels_json(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels_json(&text)
}

pub fn encode_labels_json(labels: &[Label]) -> String {
    let records: Vec<LabelRecord> = labels
        .iter()
        .map(|l| LabelRecord {
            x: l.bbox.x,
            y: l.bbox.y,
            z: l.bbox.z,
            l: l.bbox.l,
            w: l.bbox.w,
            h: l.bbox.h,
            theta: l.bbox.theta,
            class: l.class.clone(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&records).expect("label records serialize");
    s.push('\n');
    s
}

pub fn write_labels_json(path: impl AsRef<Path>, labels: &[Label]) -> Result<()> {
    write_atomic(path, encode_labels_json(labels).as_bytes())
}

/// One `0`/`1` line per point; `1` marks ground.
pub fn encode_ground_labels(labels: &[bool]) -> String {
    let mut s = String::with_capacity(labels.len() * 2);
    for &g in labels {
        s.push(if g { '1' } else { '0' });
        s.push('\n');
    }
    s
}

/// Detection/anchor line record: box-geometry fields plus optional extras.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kept: Option<bool>,
}

impl BoxRecord {
    pub fn from_box(b: &Box3D) -> Self {
        Self {
            x: b.x,
            y: b.y,
            z: b.z,
            l: b.l,
            w: b.w,
            h: b.h,
            theta: b.theta,
            score: None,
            count: None,
            kept: None,
        }
    }

    pub fn to_box(&self) -> Box3D {
        Box3D::new(self.x, self.y, self.z, self.l, self.w, self.h, self.theta)
    }
}

pub fn encode_json_lines<T: Serialize>(records: &[T]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// Grid files
// ---------------------------------------------------------------------------

/// A scalar grid with a validity mask, serializable as `GAGR`.
pub trait MaskedGrid: Sized {
    /// Value stored in cells whose mask bit is clear.
    const SENTINEL: f64;

    fn spec(&self) -> &GridSpec;
    fn values(&self) -> &[f64];
    fn mask(&self) -> &[bool];
    fn from_parts(spec: GridSpec, values: Vec<f64>, valid: Vec<bool>) -> Self;
}

impl MaskedGrid for HeightMap {
    const SENTINEL: f64 = f64::NEG_INFINITY;

    fn spec(&self) -> &GridSpec {
        &self.spec
    }
    fn values(&self) -> &[f64] {
        &self.max_z
    }
    fn mask(&self) -> &[bool] {
        &self.valid
    }
    fn from_parts(spec: GridSpec, max_z: Vec<f64>, valid: Vec<bool>) -> Self {
        HeightMap { spec, max_z, valid }
    }
}

impl MaskedGrid for GroundSurface {
    const SENTINEL: f64 = f64::INFINITY;

    fn spec(&self) -> &GridSpec {
        &self.spec
    }
    fn values(&self) -> &[f64] {
        &self.ground_z
    }
    fn mask(&self) -> &[bool] {
        &self.valid
    }
    fn from_parts(spec: GridSpec, ground_z: Vec<f64>, valid: Vec<bool>) -> Self {
        GroundSurface {
            spec,
            ground_z,
            valid,
        }
    }
}

fn put_header(out: &mut Vec<u8>, magic: [u8; 4], spec: &GridSpec, channels: Option<u32>) {
    out.extend_from_slice(&magic);
    out.extend_from_slice(&(spec.rows as u32).to_le_bytes());
    out.extend_from_slice(&(spec.cols as u32).to_le_bytes());
    if let Some(c) = channels {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&spec.x_min.to_le_bytes());
    out.extend_from_slice(&spec.y_min.to_le_bytes());
    out.extend_from_slice(&spec.cell_size.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::GridTruncated {
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses the common header. Returns the spec, optional channel count and the
/// remaining payload.
fn get_header(
    bytes: &[u8],
    magic: [u8; 4],
    with_channels: bool,
) -> Result<(GridSpec, u32, &[u8])> {
    let mut r = Reader { bytes, pos: 0 };
    let found: [u8; 4] = r.take(4)?.try_into().unwrap();
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let channels = if with_channels { r.u32()? } else { 1 };
    let x_min = r.f64()?;
    let y_min = r.f64()?;
    let cell_size = r.f64()?;
    let spec = GridSpec::new(x_min, y_min, cell_size, rows, cols)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    Ok((spec, channels, &bytes[r.pos..]))
}

fn check_payload(payload: &[u8], header: usize, expected: usize) -> Result<()> {
    match payload.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::GridTruncated {
            expected: header + expected,
            found: header + payload.len(),
        }),
        std::cmp::Ordering::Greater => Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after the declared payload",
            payload.len() - expected
        ))),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

pub fn encode_grid<G: MaskedGrid>(grid: &G) -> Vec<u8> {
    let spec = grid.spec();
    let n = spec.len();
    let mut out = Vec::with_capacity(GRID_HEADER + n * 4 + n.div_ceil(8));
    put_header(&mut out, GRID_MAGIC, spec, None);
    for &v in grid.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut bitmap = vec![0u8; n.div_ceil(8)];
    for (k, &ok) in grid.mask().iter().enumerate() {
        if ok {
            bitmap[k / 8] |= 1 << (k % 8);
        }
    }
    out.extend_from_slice(&bitmap);
    out
}

pub fn decode_grid<G: MaskedGrid>(bytes: &[u8]) -> Result<G> {
    let (spec, _, payload) = get_header(bytes, GRID_MAGIC, false)?;
    let n = spec.len();
    check_payload(payload, GRID_HEADER, n * 4 + n.div_ceil(8))?;
    let (cells, bitmap) = payload.split_at(n * 4);
    let valid: Vec<bool> = (0..n).map(|k| bitmap[k / 8] >> (k % 8) & 1 == 1).collect();
    let values = cells
        .chunks_exact(4)
        .zip(&valid)
        .map(|(c, &ok)| {
            if ok {
                f32::from_le_bytes(c.try_into().unwrap()) as f64
            } else {
                G::SENTINEL
            }
        })
        .collect();
    Ok(G::from_parts(spec, values, valid))
}

pub fn write_grid<G: MaskedGrid>(path: impl AsRef<Path>, grid: &G) -> Result<()> {
    write_atomic(path, &encode_grid(grid))
}

pub fn read_grid<G: MaskedGrid>(path: impl AsRef<Path>) -> Result<G> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes)
}

pub fn encode_count_grid(grid: &CountGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(GRID_HEADER + grid.counts.len() * 4);
    put_header(&mut out, COUNT_MAGIC, &grid.spec, None);
    for &c in &grid.counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_count_grid(bytes: &[u8]) -> Result<CountGrid> {
    let (spec, _, payload) = get_header(bytes, COUNT_MAGIC, false)?;
    check_payload(payload, GRID_HEADER, spec.len() * 4)?;
    let counts = payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(CountGrid { spec, counts })
}

pub fn encode_features(f: &BevFeatures) -> Vec<u8> {
    let channels = f.channels();
    let mut out = Vec::with_capacity(GRID_HEADER + 4 + channels * f.spec.len() * 4);
    put_header(&mut out, FEATURE_MAGIC, &f.spec, Some(channels as u32));
    for ch in f.slices.iter().chain(std::iter::once(&f.density)) {
        for &v in ch {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<BevFeatures> {
    let (spec, channels, payload) = get_header(bytes, FEATURE_MAGIC, true)?;
    if channels < 2 {
        return Err(Error::DimensionMismatch(format!(
            "feature tensor needs at least 2 channels, header says {channels}"
        )));
    }
    let n = spec.len();
    check_payload(payload, GRID_HEADER + 4, channels as usize * n * 4)?;
    let mut planes: Vec<Vec<f32>> = payload
        .chunks_exact(n * 4)
        .map(|plane| {
            plane
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
        .collect();
    let density = planes.pop().expect("at least two channels");
    Ok(BevFeatures {
        spec,
        slices: planes,
        density,
    })
}

/// 8-bit binary PGM, forward (+x) up and left (+y) on the left. Valid cells
/// are min-max scaled to 1..=255; invalid cells are 0.
pub fn encode_pgm(spec: &GridSpec, values: &[f64], valid: &[bool]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .zip(valid)
        .filter(|(_, &ok)| ok)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
            (lo.min(v), hi.max(v))
        });
    let mut out = format!("P5\n{} {}\n255\n", spec.cols, spec.rows).into_bytes();
    for i in (0..spec.rows).rev() {
        for j in (0..spec.cols).rev() {
            let k = spec.index(i, j);
            let px = if !valid[k] {
                0
            } else if hi > lo {
                1 + ((values[k] - lo) / (hi - lo) * 254.0).round() as u8
            } else {
                255
            };
            out.push(px);
        }
    }
    out
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    // temp files default to owner-only; outputs are ordinary data files
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(v: [f32; 4]) -> Vec<u8> {
        v.iter().flat_map(|f| f.to_le_bytes()).collect()
    }

    #[test]
    fn kitti_decodes_in_order() {
        let mut bytes = record([1.0, 2.0, 3.0, 0.5]);
        bytes.extend(record([4.0, 5.0, 6.0, 0.1]));
        let pts = decode_kitti(&bytes).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], Point3::new(1.0, 2.0, 3.0, 0.5));
        assert_eq!((pts[1].x, pts[1].y, pts[1].z), (4.0, 5.0, 6.0));
        assert_eq!(pts[1].intensity, 0.1f32 as f64);
    }

    #[test]
    fn kitti_empty_and_truncated() {
        assert!(decode_kitti(&[]).unwrap().is_empty());
        let bytes = vec![0u8; 17];
        match decode_kitti(&bytes) {
            Err(Error::Truncated { offset }) => assert_eq!(offset, 16),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn kitti_rejects_nan_with_offset() {
        let mut bytes = record([1.0, 2.0, 3.0, 0.5]);
        bytes.extend(record([4.0, f32::NAN, 6.0, 0.1]));
        match decode_kitti(&bytes) {
            Err(Error::NonFinite { offset }) => assert_eq!(offset, 20),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn kitti_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let cloud = PointCloud::new(vec![Point3::new(0.25, -1.5, 2.0, 1.0)], "x");
        write_kitti_bin(&path, &cloud).unwrap();
        let back = read_kitti_bin(&path).unwrap();
        assert_eq!(back.points, cloud.points);
    }

    proptest! {
        #[test]
        fn kitti_roundtrip_is_identity(
            raw in prop::collection::vec(prop::array::uniform4(-1e6f32..1e6f32), 0..64)
        ) {
            let pts: Vec<Point3> = raw
                .iter()
                .map(|v| Point3::new(v[0] as f64, v[1] as f64, v[2] as f64, v[3] as f64))
                .collect();
            prop_assert_eq!(decode_kitti(&encode_kitti(&pts)).unwrap(), pts);
        }
    }

    #[test]
    fn labels_parse() {
        let text = r#"[{"x":10,"y":0,"z":-0.9,"l":3.9,"w":1.6,"h":1.56,"theta":0,"class":"Car"}]"#;
        let labels = parse_labels_json(text).unwrap();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].class, "Car");
        assert_eq!(labels[0].bbox.l, 3.9);
        assert!(parse_labels_json("[]").unwrap().is_empty());
    }

    #[test]
    fn labels_reject_bad_entries() {
        let zero_l = r#"[{"x":0,"y":0,"z":0,"l":0,"w":1,"h":1,"theta":0,"class":"Car"}]"#;
        assert!(matches!(
            parse_labels_json(zero_l),
            Err(Error::InvalidLabel { index: 0, .. })
        ));
        let missing = r#"[{"x":0,"y":0,"z":0,"w":1,"h":1,"theta":0,"class":"Car"}]"#;
        assert!(matches!(parse_labels_json(missing), Err(Error::Json(_))));
    }

    #[test]
    fn labels_normalize_theta() {
        let text = r#"[{"x":0,"y":0,"z":0,"l":1,"w":1,"h":1,"theta":3.5,"class":"Car"}]"#;
        let labels = parse_labels_json(text).unwrap();
        let t = labels[0].bbox.theta;
        assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&t));
        assert!((t - (3.5 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn labels_json_roundtrip() {
        let labels = vec![Label {
            bbox: Box3D::new(1.0, 2.0, -0.5, 4.0, 1.5, 1.25, 0.5),
            class: "Van".into(),
        }];
        assert_eq!(
            parse_labels_json(&encode_labels_json(&labels)).unwrap(),
            labels
        );
    }

    #[test]
    fn crop_half_open() {
        let roi = RoiConfig::default();
        let cloud = PointCloud::new(
            vec![
                Point3::new(49.9, 0.0, 0.0, 0.0),
                Point3::new(50.0, 0.0, 0.0, 0.0),
                Point3::new(0.0, 0.0, 3.5, 0.0),
                Point3::new(-50.0, -30.0, -3.0, 0.0),
            ],
            "t",
        );
        let out = crop_roi(&cloud, &roi);
        assert_eq!(out.points, vec![cloud.points[0], cloud.points[3]]);
    }

    proptest! {
        #[test]
        fn crop_is_idempotent_and_bounded(
            raw in prop::collection::vec((-60.0..60.0f64, -40.0..40.0f64, -5.0..5.0f64), 0..200)
        ) {
            let cloud = PointCloud::new(
                raw.iter().map(|&(x, y, z)| Point3::new(x, y, z, 0.0)).collect(),
                "p",
            );
            let roi = RoiConfig::default();
            let once = crop_roi(&cloud, &roi);
            prop_assert!(once.len() <= cloud.len());
            prop_assert!(once.points.iter().all(|p| roi.contains(p)));
            prop_assert_eq!(crop_roi(&once, &roi), once);
        }
    }

    fn small_surface() -> GroundSurface {
        let spec = GridSpec::new(-1.0, 2.0, 0.5, 3, 3).unwrap();
        let mut valid = vec![true; 9];
        valid[4] = false;
        let mut z: Vec<f64> = (0..9).map(|k| -1.75 + k as f64 * 0.125).collect();
        z[4] = f64::INFINITY;
        GroundSurface::from_parts(spec, z, valid)
    }

    #[test]
    fn grid_roundtrip_3x3() {
        let gs = small_surface();
        let back: GroundSurface = decode_grid(&encode_grid(&gs)).unwrap();
        assert_eq!(back, gs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.gagr");
        write_grid(&path, &gs).unwrap();
        assert_eq!(read_grid::<GroundSurface>(&path).unwrap(), gs);
    }

    #[test]
    fn grid_layout_is_bit_exact() {
        let gs = small_surface();
        let bytes = encode_grid(&gs);
        assert_eq!(&bytes[0..4], b"GAGR");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), -1.0);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 0.5);
        assert_eq!(f32::from_le_bytes(bytes[36..40].try_into().unwrap()), -1.75);
        assert_eq!(bytes.len(), 36 + 9 * 4 + 2);
        // cells 0..=3 and 5..=7 set in byte 0, cell 8 in byte 1
        assert_eq!(bytes[72], 0b1110_1111);
        assert_eq!(bytes[73], 0b0000_0001);
    }

    #[test]
    fn grid_errors() {
        let mut bytes = encode_grid(&small_surface());
        bytes[0] = b'X';
        assert!(matches!(
            decode_grid::<GroundSurface>(&bytes),
            Err(Error::BadMagic { .. })
        ));

        let spec = GridSpec::new(-50.0, -30.0, 0.1, 1000, 600).unwrap();
        let mut short = Vec::new();
        put_header(&mut short, GRID_MAGIC, &spec, None);
        short.extend_from_slice(&[0u8; 100]);
        assert!(matches!(
            decode_grid::<HeightMap>(&short),
            Err(Error::GridTruncated { .. })
        ));

        let mut long = encode_grid(&small_surface());
        long.push(0);
        assert!(matches!(
            decode_grid::<GroundSurface>(&long),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn count_grid_roundtrip() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 3).unwrap();
        let g = CountGrid {
            spec,
            counts: vec![0, 1, 2, 3, 4, u32::MAX],
        };
        let back = decode_count_grid(&encode_count_grid(&g)).unwrap();
        assert_eq!(back, g);
        assert!(matches!(
            decode_grid::<HeightMap>(&encode_count_grid(&g)),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn pgm_header_and_invalid_cells() {
        let gs = small_surface();
        let pgm = encode_pgm(&gs.spec, &gs.ground_z, &gs.valid);
        let header = b"P5\n3 3\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        let px = &pgm[header.len()..];
        assert_eq!(px.len(), 9);
        assert_eq!(px[4], 0);
        // highest cell (2,2) lands at the top-left pixel
        assert_eq!(px[0], 255);
        assert_eq!(px[8], 1);
    }

    #[test]
    fn ground_label_lines() {
        assert_eq!(encode_ground_labels(&[true, false, true]), "1\n0\n1\n");
    }
}
