// SPDX-License-Identifier: Apache-2.0

//! Piecewise local ground surface.
//!
//! Every cell of the height map stores the highest return in that cell. On
//! the ground that is still the ground; on an object it is the object's top.
//! Taking the minimum of the height map over a rectangular window therefore
//! reaches past an object's footprint to the ground beside it, giving a local
//! ground height for every cell without fitting any model.
//!
//! The window minimum is mask-aware (empty cells take no part) and clamped at
//! the grid border. It is computed separably, one 1-D pass per axis, with the
//! van Herk/Gil-Werman block algorithm, so the cost per cell is independent of
//! the window size. The result is bit-identical to a direct 2-D window scan.

use serde::{Deserialize, Serialize};

use crate::grid::{build_height_map, cells_covering, CountGrid, GridSpec, HeightMap};
use crate::io::PointCloud;
use crate::{Error, Result};

/// Estimated ground height per cell. Cells without an estimate hold `+inf`
/// and a cleared mask bit.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSurface {
    pub spec: GridSpec,
    pub ground_z: Vec<f64>,
    pub valid: Vec<bool>,
}

impl GroundSurface {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.spec.index(i, j);
        self.valid[k].then_some(self.ground_z[k])
    }

    /// Ground height under `(x, y)`, if the cell exists and has an estimate.
    pub fn ground_at(&self, x: f64, y: f64) -> Option<f64> {
        let (i, j) = self.spec.cell_of(x, y)?;
        self.get(i, j)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Surface with every cell valid, sampled from `f` at cell centers.
    pub fn from_fn(spec: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut ground_z = Vec::with_capacity(spec.len());
        for i in 0..spec.rows {
            for j in 0..spec.cols {
                let (x, y) = spec.cell_center(i, j);
                ground_z.push(f(x, y));
            }
        }
        Self {
            spec: *spec,
            ground_z,
            valid: vec![true; spec.len()],
        }
    }

    /// Same surface moved up by `dz`.
    pub fn shifted(&self, dz: f64) -> Self {
        let ground_z = self
            .ground_z
            .iter()
            .zip(&self.valid)
            .map(|(&z, &ok)| if ok { z + dz } else { z })
            .collect();
        Self {
            ground_z,
            ..self.clone()
        }
    }
}

/// Half sizes of the min-filter window, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub half_window_x: f64,
    pub half_window_y: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            half_window_x: 1.5,
            half_window_y: 1.5,
        }
    }
}

impl FilterConfig {
    pub fn square(half_window: f64) -> Self {
        Self {
            half_window_x: half_window,
            half_window_y: half_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.half_window_x, self.half_window_y] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "filter half window {v} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Half window in whole cells `(along rows, along cols)`, rounded up.
    pub fn half_cells(&self, cell_size: f64) -> (usize, usize) {
        (
            cells_covering(self.half_window_x, cell_size),
            cells_covering(self.half_window_y, cell_size),
        )
    }
}

/// Smaller of two heights. Inputs are never NaN, so the plain comparison
/// matches `f64::min` and lets the loops below vectorize.
#[inline(always)]
fn min2(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

#[derive(Default)]
struct RowScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// `out[k] = min(src[k-r ..= k+r])`, clamped to the slice; `+inf` is the
/// identity.
///
/// The row is padded with `r` infinities on each side, then minima over
/// spans of 1, 2, 4, ... samples are built by doubling until the span `s`
/// exceeds half the window `w = 2r + 1`. Two overlapping spans then cover
/// each window exactly. Every step is an elementwise min of two shifted
/// slices, so it vectorizes along the row.
fn row_min(src: &[f64], r: usize, out: &mut [f64], s: &mut RowScratch) {
    let n = src.len();
    if r == 0 {
        out.copy_from_slice(src);
        return;
    }
    let w = 2 * r + 1;
    let m = n + 2 * r;
    s.a.clear();
    s.a.resize(m, f64::INFINITY);
    s.a[r..r + n].copy_from_slice(src);
    s.b.resize(m, f64::INFINITY);
    let mut span = 1;
    while 2 * span <= w {
        // a[p] holds min over [p, p + span) for every p <= m - span
        let len = m - 2 * span + 1;
        let (lo, hi) = (&s.a[..len], &s.a[span..span + len]);
        for ((o, &x), &y) in s.b[..len].iter_mut().zip(lo).zip(hi) {
            *o = min2(x, y);
        }
        std::mem::swap(&mut s.a, &mut s.b);
        span *= 2;
    }
    let (lo, hi) = (&s.a[..n], &s.a[w - span..w - span + n]);
    for ((o, &x), &y) in out.iter_mut().zip(lo).zip(hi) {
        *o = min2(x, y);
    }
}

/// Sliding minimum of radius `r` down the columns of a row-major
/// `rows x cols` grid, clamped, `+inf` as the identity.
///
/// Van Herk/Gil-Werman over whole rows: the padded column is cut into
/// blocks of `w = 2r + 1` rows; with `suf` the running minimum from the
/// bottom of a block and `pre` the one from its top, output row `k` (padded
/// window `[k, k + 2r]`) is `min(suf[k], pre[k + 2r])`. Only the current
/// block's suffixes and the next block's prefixes are kept, each `w` rows.
fn column_min(src: &[f64], rows: usize, cols: usize, r: usize, out: &mut [f64]) {
    if r == 0 {
        out.copy_from_slice(src);
        return;
    }
    let w = 2 * r + 1;
    let inf_row = vec![f64::INFINITY; cols];
    // padded row p is input row p - r
    let row = |p: usize| -> &[f64] {
        if p >= r && p - r < rows {
            &src[(p - r) * cols..(p - r + 1) * cols]
        } else {
            &inf_row
        }
    };
    let mut suf = vec![f64::INFINITY; w * cols];
    let mut pre = vec![f64::INFINITY; w * cols];
    let mut start = 0;
    while start < rows {
        for t in (0..w).rev() {
            let (head, tail) = suf.split_at_mut((t + 1) * cols);
            let dst = &mut head[t * cols..];
            let src_row = row(start + t);
            if t + 1 == w {
                dst.copy_from_slice(src_row);
            } else {
                for ((o, &x), &y) in dst.iter_mut().zip(src_row).zip(&tail[..cols]) {
                    *o = min2(x, y);
                }
            }
        }
        for t in 0..w {
            let (head, tail) = pre.split_at_mut(t * cols);
            let dst = &mut tail[..cols];
            let src_row = row(start + w + t);
            if t == 0 {
                dst.copy_from_slice(src_row);
            } else {
                for ((o, &x), &y) in dst.iter_mut().zip(src_row).zip(&head[(t - 1) * cols..]) {
                    *o = min2(x, y);
                }
            }
        }
        for t in 0..w.min(rows - start) {
            let k = start + t;
            let dst = &mut out[k * cols..(k + 1) * cols];
            let s_row = &suf[t * cols..(t + 1) * cols];
            if t == 0 {
                // window is exactly this block
                dst.copy_from_slice(s_row);
            } else {
                for ((o, &x), &y) in dst.iter_mut().zip(s_row).zip(&pre[(t - 1) * cols..t * cols]) {
                    *o = min2(x, y);
                }
            }
        }
        start += w;
    }
}

/// Window minimum of the height map over valid cells.
///
/// A cell's estimate is the minimum `max_z` over the valid cells in the
/// clamped window centered on it; it is valid iff that window holds at least
/// one valid cell.
pub fn estimate_surface(hm: &HeightMap, f: &FilterConfig) -> GroundSurface {
    let spec = hm.spec;
    let (rx, ry) = f.half_cells(spec.cell_size);
    let (rows, cols) = (spec.rows, spec.cols);

    let work: Vec<f64> = hm
        .max_z
        .iter()
        .zip(&hm.valid)
        .map(|(&z, &ok)| if ok { z } else { f64::INFINITY })
        .collect();

    let mut along_x = vec![0.0; spec.len()];
    column_min(&work, rows, cols, rx, &mut along_x);

    let mut ground_z = work;
    let mut scratch = RowScratch::default();
    for (row_in, row_out) in along_x.chunks_exact(cols).zip(ground_z.chunks_exact_mut(cols)) {
        row_min(row_in, ry, row_out, &mut scratch);
    }
    let valid = ground_z.iter().map(|z| z.is_finite()).collect();

    GroundSurface {
        spec,
        ground_z,
        valid,
    }
}

/// Height map plus window minimum, the full surface estimate for one frame.
pub fn surface_from_cloud(
    cloud: &PointCloud,
    spec: &GridSpec,
    f: &FilterConfig,
) -> Result<GroundSurface> {
    Ok(estimate_surface(&build_height_map(cloud, spec)?, f))
}

/// Grows the surface into invalid cells by 8-neighbor dilation.
///
/// Runs `ceil(k / cell_size)` steps. Each step fills every invalid cell that
/// touches a valid one, taking the minimum of those neighbors. The value a
/// cell receives therefore comes from its nearest valid cell in Chebyshev
/// distance, ties broken toward the lower height. Valid cells never change.
pub fn interpolate_surface(gs: &GroundSurface, k: f64) -> GroundSurface {
    let spec = gs.spec;
    let (rows, cols) = (spec.rows, spec.cols);
    let steps = if k > 0.0 {
        cells_covering(k, spec.cell_size)
    } else {
        0
    };
    let mut z: Vec<f64> = gs
        .ground_z
        .iter()
        .zip(&gs.valid)
        .map(|(&v, &ok)| if ok { v } else { f64::INFINITY })
        .collect();
    let mut valid = gs.valid.clone();

    let neighbors = |k: usize| {
        let (i, j) = ((k / cols) as isize, (k % cols) as isize);
        (-1isize..=1)
            .flat_map(move |di| (-1isize..=1).map(move |dj| (i + di, j + dj)))
            .filter(move |&(a, b)| {
                (a, b) != (i, j) && a >= 0 && b >= 0 && a < rows as isize && b < cols as isize
            })
            .map(move |(a, b)| a as usize * cols + b as usize)
    };

    let mut frontier: Vec<usize> = (0..spec.len())
        .filter(|&k| valid[k] && neighbors(k).any(|n| !valid[n]))
        .collect();
    for _ in 0..steps {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &f in &frontier {
            let zf = z[f];
            for n in neighbors(f) {
                if valid[n] {
                    continue;
                }
                if z[n] == f64::INFINITY {
                    next.push(n);
                }
                z[n] = z[n].min(zf);
            }
        }
        for &n in &next {
            valid[n] = true;
        }
        frontier = next;
    }

    GroundSurface {
        spec,
        ground_z: z,
        valid,
    }
}

/// Per-point ground flags and the tolerance that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundLabels {
    pub labels: Vec<bool>,
    pub tau_g: f64,
}

impl GroundLabels {
    pub fn ground_count(&self) -> usize {
        self.labels.iter().filter(|&&g| g).count()
    }
}

/// A point is ground iff its cell has an estimate and `z <= ground_z + tau_g`.
/// Points outside the grid are non-ground.
pub fn classify_points(cloud: &PointCloud, gs: &GroundSurface, tau_g: f64) -> GroundLabels {
    let labels = cloud
        .points
        .iter()
        .map(|p| gs.ground_at(p.x, p.y).is_some_and(|g| p.z <= g + tau_g))
        .collect();
    GroundLabels { labels, tau_g }
}

/// Per-cell count of the points classified non-ground, i.e. object returns.
pub fn above_ground_counts(cloud: &PointCloud, gs: &GroundSurface, tau_g: f64) -> CountGrid {
    let mut counts = CountGrid::zeros(&gs.spec);
    for p in &cloud.points {
        if let Some((i, j)) = gs.spec.cell_of(p.x, p.y) {
            if gs.get(i, j).is_some_and(|g| p.z > g + tau_g) {
                counts.counts[gs.spec.index(i, j)] += 1;
            }
        }
    }
    counts
}
