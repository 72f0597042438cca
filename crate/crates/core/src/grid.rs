// SPDX-License-Identifier: Apache-2.0

//! Bird's-eye-view binning: height map, per-cell counts and the integral
//! image used for constant-time rectangle counts.

use crate::io::{PointCloud, RoiConfig};
use crate::{Error, Result};

/// Slack used when converting lengths to whole cells, so that e.g. 100 m at
/// 0.1 m yields 1000 cells rather than 1001.
const CELL_EPS: f64 = 1e-9;

/// Number of whole cells needed to cover `length`, rounding up.
pub fn cells_covering(length: f64, cell_size: f64) -> usize {
    ((length / cell_size) - CELL_EPS).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub y_min: f64,
    pub cell_size: f64,
    /// Cells along x.
    pub rows: usize,
    /// Cells along y.
    pub cols: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, y_min: f64, cell_size: f64, rows: usize, cols: usize) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cell size {cell_size} must be positive"
            )));
        }
        if !(x_min.is_finite() && y_min.is_finite()) {
            return Err(Error::InvalidConfig("grid origin must be finite".into()));
        }
        if rows == 0 || cols == 0 || rows.checked_mul(cols).is_none() || rows > u32::MAX as usize
            || cols > u32::MAX as usize
        {
            return Err(Error::InvalidConfig(format!(
                "grid dimensions {rows}x{cols} are not representable"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            cell_size,
            rows,
            cols,
        })
    }

    /// Grid covering the x/y extent of `roi`.
    pub fn from_roi(roi: &RoiConfig, cell_size: f64) -> Result<Self> {
        roi.validate()?;
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cell size {cell_size} must be positive"
            )));
        }
        Self::new(
            roi.x_min,
            roi.y_min,
            cell_size,
            cells_covering(roi.x_max - roi.x_min, cell_size),
            cells_covering(roi.y_max - roi.y_min, cell_size),
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.rows as f64 * self.cell_size
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + self.cols as f64 * self.cell_size
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_min + (i as f64 + 0.5) * self.cell_size,
            self.y_min + (j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing `(x, y)`, or `None` outside the grid.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = axis_index(x, self.x_min, self.cell_size, self.rows)?;
        let j = axis_index(y, self.y_min, self.cell_size, self.cols)?;
        Some((i, j))
    }
}

#[inline]
fn axis_index(v: f64, min: f64, cell: f64, n: usize) -> Option<usize> {
    let f = ((v - min) / cell).floor();
    if !(f >= 0.0) {
        return None;
    }
    let k = f as usize;
    if k < n {
        Some(k)
    } else if k == n && v < min + n as f64 * cell {
        // floor rounded a point just inside the far edge onto it
        Some(n - 1)
    } else {
        None
    }
}

/// Cell `(i, j)` of every point, in cloud order.
pub fn bin_points(cloud: &PointCloud, spec: &GridSpec) -> Result<Vec<(usize, usize)>> {
    cloud
        .points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            spec.cell_of(p.x, p.y).ok_or(Error::OutOfGrid {
                index,
                x: p.x,
                y: p.y,
            })
        })
        .collect()
}

/// Per-cell maximum z. Empty cells hold `-inf` and a cleared mask bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub spec: GridSpec,
    pub max_z: Vec<f64>,
    pub valid: Vec<bool>,
}

impl HeightMap {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.spec.index(i, j);
        self.valid[k].then_some(self.max_z[k])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

pub fn build_height_map(cloud: &PointCloud, spec: &GridSpec) -> Result<HeightMap> {
    let mut max_z = vec![f64::NEG_INFINITY; spec.len()];
    for (index, p) in cloud.points.iter().enumerate() {
        let (i, j) = spec.cell_of(p.x, p.y).ok_or(Error::OutOfGrid {
            index,
            x: p.x,
            y: p.y,
        })?;
        let k = spec.index(i, j);
        if p.z > max_z[k] {
            max_z[k] = p.z;
        }
    }
    // point heights are finite, so any point lifts its cell above -inf
    let valid = max_z.iter().map(|&z| z > f64::NEG_INFINITY).collect();
    Ok(HeightMap {
        spec: *spec,
        max_z,
        valid,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountGrid {
    pub spec: GridSpec,
    pub counts: Vec<u32>,
}

impl CountGrid {
    pub fn zeros(spec: &GridSpec) -> Self {
        Self {
            spec: *spec,
            counts: vec![0; spec.len()],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[self.spec.index(i, j)]
    }

    /// Adds one count at the cell holding `(x, y)`. Returns false if the
    /// location is outside the grid.
    pub fn add(&mut self, x: f64, y: f64) -> bool {
        match self.spec.cell_of(x, y) {
            Some((i, j)) => {
                let k = self.spec.index(i, j);
                self.counts[k] += 1;
                true
            }
            None => false,
        }
    }
}

pub fn build_count_grid(cloud: &PointCloud, spec: &GridSpec) -> Result<CountGrid> {
    let mut grid = CountGrid::zeros(spec);
    for (index, p) in cloud.points.iter().enumerate() {
        if !grid.add(p.x, p.y) {
            return Err(Error::OutOfGrid {
                index,
                x: p.x,
                y: p.y,
            });
        }
    }
    Ok(grid)
}

/// Summed-area table over a [`CountGrid`]; `prefix` is `(rows+1) x (cols+1)`
/// with `prefix[i][j]` the count over cells `[0,i) x [0,j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralGrid {
    pub spec: GridSpec,
    pub prefix: Vec<u64>,
}

pub fn integral(counts: &CountGrid) -> IntegralGrid {
    let spec = counts.spec;
    let w = spec.cols + 1;
    let mut prefix = vec![0u64; (spec.rows + 1) * w];
    for i in 0..spec.rows {
        let mut row_sum = 0u64;
        for j in 0..spec.cols {
            row_sum += counts.counts[spec.index(i, j)] as u64;
            prefix[(i + 1) * w + j + 1] = prefix[i * w + j + 1] + row_sum;
        }
    }
    IntegralGrid { spec, prefix }
}

impl IntegralGrid {
    #[inline]
    fn at(&self, i: usize, j: usize) -> u64 {
        self.prefix[i * (self.spec.cols + 1) + j]
    }

    /// Count over cells `[i0, i1) x [j0, j1)`.
    pub fn region_count(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<u64> {
        if i0 > i1 || j0 > j1 || i1 > self.spec.rows || j1 > self.spec.cols {
            return Err(Error::RegionOutOfBounds {
                i0,
                i1,
                j0,
                j1,
                rows: self.spec.rows,
                cols: self.spec.cols,
            });
        }
        Ok(self.at(i1, j1) + self.at(i0, j0) - self.at(i0, j1) - self.at(i1, j0))
    }

    pub fn total(&self) -> u64 {
        self.at(self.spec.rows, self.spec.cols)
    }

    /// Count over the cells touched by the closed rectangle
    /// `[x0, x1] x [y0, y1]`, clamped to the grid.
    pub fn count_in_rect(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> u64 {
        let (i0, i1) = cell_span(x0, x1, self.spec.x_min, self.spec.cell_size, self.spec.rows);
        let (j0, j1) = cell_span(y0, y1, self.spec.y_min, self.spec.cell_size, self.spec.cols);
        self.region_count(i0, i1, j0, j1)
            .expect("clamped span is in bounds")
    }
}

/// Half-open cell span `[k0, k1)` of the cells touched by `[lo, hi]`, clamped
/// to `[0, n]`.
pub fn cell_span(lo: f64, hi: f64, min: f64, cell: f64, n: usize) -> (usize, usize) {
    let clamp = |f: f64| -> usize { f.clamp(0.0, n as f64) as usize };
    let k0 = clamp(((lo - min) / cell).floor());
    let k1 = clamp(((hi - min) / cell).floor() + 1.0);
    (k0, k1.max(k0))
}
