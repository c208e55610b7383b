//! Terrain derivatives from a DEM: slope and aspect by Horn's third-order
//! finite differences, D-infinity flow directions (Tarboton's eight
//! triangular facets), and weighted upslope flow length.
//!
//! No hydrological conditioning is performed: pits and flats are flagged
//! no-flow and simply terminate flow paths.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::raster::Raster;

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

/// Slope (radians, in `[0, π/2)`) and downslope aspect (radians,
/// counter-clockwise from east, in `[0, 2π)`; 0 on flat cells).
///
/// Each axis derivative is a 1-2-1 weighted mean of per-line differences:
/// central where both neighbors exist, one-sided at edges or next to
/// nodata, which keeps analytic planes exact everywhere. With a full 3x3
/// window this reduces exactly to Horn's formula. Cells with no usable
/// neighbor pair on either axis are masked.
pub fn slope_aspect(dem: &Raster) -> Result<(Raster, Raster)> {
    let (nrows, ncols) = (dem.nrows(), dem.ncols());
    if nrows < 3 || ncols < 3 {
        return Err(Error::GridTooSmall {
            need_rows: 3,
            need_cols: 3,
            rows: nrows,
            cols: ncols,
        });
    }
    let cellsize = dem.header().cellsize;
    let mut slope = dem.clone();
    let mut aspect = dem.clone();

    for row in 0..nrows {
        for col in 0..ncols {
            if dem.get(row, col).is_none() {
                slope.set_nodata(row, col);
                aspect.set_nodata(row, col);
                continue;
            }
            let (r, c) = (row as isize, col as isize);
            // dz/dx toward east: difference along each of the three rows.
            let dzdx = weighted_axis_derivative(cellsize, |off| {
                (
                    dem.get_signed(r + off, c + 1),
                    dem.get_signed(r + off, c),
                    dem.get_signed(r + off, c - 1),
                )
            });
            // dz/dy toward north: difference along each of the three columns.
            let dzdy = weighted_axis_derivative(cellsize, |off| {
                (
                    dem.get_signed(r - 1, c + off),
                    dem.get_signed(r, c + off),
                    dem.get_signed(r + 1, c + off),
                )
            });
            match (dzdx, dzdy) {
                (Some(p), Some(q)) => {
                    slope.set(row, col, fmath::atan(fmath::hypot(p, q)));
                    let az = if p == 0.0 && q == 0.0 {
                        0.0
                    } else {
                        normalize_angle(fmath::atan2(-q, -p))
                    };
                    aspect.set(row, col, az);
                }
                _ => {
                    slope.set_nodata(row, col);
                    aspect.set_nodata(row, col);
                }
            }
        }
    }
    Ok((slope, aspect))
}

/// 1-2-1 weighted mean of per-line derivatives. `line` yields the
/// (positive-side, center, negative-side) elevations for offsets -1, 0, 1.
fn weighted_axis_derivative<F>(cellsize: f64, line: F) -> Option<f64>
where
    F: Fn(isize) -> (Option<f64>, Option<f64>, Option<f64>),
{
    const WEIGHTS: [f64; 3] = [1.0, 2.0, 1.0];
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (off, w) in (-1..=1).zip(WEIGHTS) {
        let (pos, mid, neg) = line(off);
        let d = match (pos, mid, neg) {
            (Some(p), _, Some(n)) => (p - n) / (2.0 * cellsize),
            (Some(p), Some(m), None) => (p - m) / cellsize,
            (None, Some(m), Some(n)) => (m - n) / cellsize,
            _ => continue,
        };
        acc += w * d;
        wsum += w;
    }
    (wsum > 0.0).then(|| acc / wsum)
}

#[inline]
fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = a % two_pi;
    if a < 0.0 {
        a += two_pi;
    }
    if a >= two_pi {
        a = 0.0;
    }
    a
}

/// Where a cell sends its flow: at most the two neighbors bounding the
/// steepest facet, weights in `[0, 1]` summing to 1. Zero-weight links are
/// dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowTargets {
    /// Flat or pit cell (or nodata): sends nothing.
    None,
    One(usize, f64),
    Two((usize, f64), (usize, f64)),
}

/// D-infinity flow field: a continuous flow angle per cell plus the split
/// onto the two bounding neighbors.
#[derive(Debug, Clone)]
pub struct FlowField {
    /// Flow angle (radians CCW from east); masked on no-flow cells.
    pub angle: Raster,
    targets: Vec<FlowTargets>,
    /// DEM validity, kept so downstream passes know which cells exist at
    /// all (a no-flow cell is still a valid catchment cell).
    valid: Vec<bool>,
}

impl FlowField {
    pub fn targets(&self, index: usize) -> FlowTargets {
        self.targets[index]
    }

    pub fn is_valid_cell(&self, index: usize) -> bool {
        self.valid[index]
    }

    /// Iterate `(target index, weight)` pairs of a cell.
    pub fn outflow(&self, index: usize) -> impl Iterator<Item = (usize, f64)> {
        let (a, b) = match self.targets[index] {
            FlowTargets::None => (None, None),
            FlowTargets::One(i, w) => (Some((i, w)), None),
            FlowTargets::Two(p, q) => (Some(p), Some(q)),
        };
        a.into_iter().chain(b)
    }
}

/// One triangular facet: cardinal corner offset, diagonal corner offset,
/// and the (ac, af) terms mapping the in-facet angle to the global one via
/// `angle = af·r + ac·π/2`.
type Facet = ((isize, isize), (isize, isize), f64, f64);

const FACETS: [Facet; 8] = [
    ((0, 1), (-1, 1), 0.0, 1.0),    // E  / NE
    ((-1, 0), (-1, 1), 1.0, -1.0),  // N  / NE
    ((-1, 0), (-1, -1), 1.0, 1.0),  // N  / NW
    ((0, -1), (-1, -1), 2.0, -1.0), // W  / NW
    ((0, -1), (1, -1), 2.0, 1.0),   // W  / SW
    ((1, 0), (1, -1), 3.0, -1.0),   // S  / SW
    ((1, 0), (1, 1), 3.0, 1.0),     // S  / SE
    ((0, 1), (1, 1), 4.0, -1.0),    // E  / SE
];

/// Compute D-infinity flow directions.
///
/// For each cell the steepest downslope direction is sought among the eight
/// triangular facets spanned by a cardinal and a diagonal neighbor; flow is
/// split between those two neighbors in proportion to the angular proximity
/// of the facet direction. Facets touching nodata or the grid boundary are
/// skipped; cells with no downslope facet are flagged no-flow.
pub fn dinf_directions(dem: &Raster) -> FlowField {
    let (nrows, ncols) = (dem.nrows(), dem.ncols());
    let cellsize = dem.header().cellsize;
    let diag = cellsize * SQRT_2;
    let n = dem.header().cells();

    let mut angle = dem.clone();
    let mut targets = vec![FlowTargets::None; n];
    let mut valid = vec![false; n];

    for row in 0..nrows {
        for col in 0..ncols {
            let idx = row * ncols + col;
            let Some(e0) = dem.get(row, col) else {
                angle.set_nodata(row, col);
                continue;
            };
            valid[idx] = true;

            let (r, c) = (row as isize, col as isize);
            let mut best: Option<(f64, f64, usize)> = None; // (slope, r_in_facet, facet)
            for (k, &((dr1, dc1), (dr2, dc2), _, _)) in FACETS.iter().enumerate() {
                let (Some(e1), Some(e2)) = (
                    dem.get_signed(r + dr1, c + dc1),
                    dem.get_signed(r + dr2, c + dc2),
                ) else {
                    continue;
                };
                let s1 = (e0 - e1) / cellsize;
                let s2 = (e1 - e2) / cellsize;
                let (mut rr, ss);
                if s1 <= 0.0 && s2 <= 0.0 {
                    continue;
                }
                rr = fmath::atan2(s2, s1);
                if rr < 0.0 {
                    rr = 0.0;
                    ss = s1;
                } else if rr > FRAC_PI_4 {
                    rr = FRAC_PI_4;
                    ss = (e0 - e2) / diag;
                } else {
                    ss = fmath::hypot(s1, s2);
                }
                if ss > 0.0 && best.is_none_or(|(bs, _, _)| ss > bs) {
                    best = Some((ss, rr, k));
                }
            }

            match best {
                Some((_, rr, k)) => {
                    let ((dr1, dc1), (dr2, dc2), ac, af) = FACETS[k];
                    angle.set(row, col, normalize_angle(af * rr + ac * FRAC_PI_2));
                    let i1 = (r + dr1) as usize * ncols + (c + dc1) as usize;
                    let i2 = (r + dr2) as usize * ncols + (c + dc2) as usize;
                    let w2 = rr / FRAC_PI_4;
                    let w1 = 1.0 - w2;
                    targets[idx] = if w2 == 0.0 {
                        FlowTargets::One(i1, 1.0)
                    } else if w1 == 0.0 {
                        FlowTargets::One(i2, 1.0)
                    } else {
                        FlowTargets::Two((i1, w1), (i2, w2))
                    };
                }
                None => {
                    // Flat or pit: no outflow, angle undefined.
                    angle.set_nodata(row, col);
                }
            }
        }
    }

    FlowField {
        angle,
        targets,
        valid,
    }
}

/// How upslope path lengths combine at a confluence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowLengthMethod {
    /// Longest upstream path over positive-proportion links.
    #[default]
    Longest,
    /// Proportion-weighted mean of upstream path lengths.
    Mean,
}

/// Upslope flow length (m) per cell: headwater cells get 0; each link adds
/// the cell spacing along its geometric direction (`cellsize` cardinal,
/// `cellsize·√2` diagonal). Cells are processed in topological order of the
/// downslope DAG.
pub fn flow_length(field: &FlowField, cellsize: f64) -> Result<Raster> {
    flow_length_with(field, cellsize, FlowLengthMethod::Longest)
}

pub fn flow_length_with(
    field: &FlowField,
    cellsize: f64,
    method: FlowLengthMethod,
) -> Result<Raster> {
    let ncols = field.angle.ncols();
    let n = field.angle.header().cells();
    let diag = cellsize * SQRT_2;

    let mut indegree = vec![0u32; n];
    for i in 0..n {
        for (t, _) in field.outflow(i) {
            indegree[t] += 1;
        }
    }

    let mut longest = vec![0.0f64; n];
    let mut weighted = vec![0.0f64; n]; // Σ w·(L+step) for the mean method
    let mut inflow_w = vec![0.0f64; n]; // Σ w
    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&i| field.valid[i] && indegree[i] == 0)
        .collect();

    let mut out = field.angle.clone();
    let mut processed = 0usize;
    while let Some(i) = queue.pop_front() {
        processed += 1;
        let length = match method {
            FlowLengthMethod::Longest => longest[i],
            FlowLengthMethod::Mean => {
                if inflow_w[i] > 0.0 {
                    weighted[i] / inflow_w[i]
                } else {
                    0.0
                }
            }
        };
        let (row, col) = field.angle.row_col(i);
        out.set(row, col, length);

        for (t, w) in field.outflow(i) {
            let step = if is_diagonal(i, t, ncols) {
                diag
            } else {
                cellsize
            };
            let candidate = length + step;
            if candidate > longest[t] {
                longest[t] = candidate;
            }
            weighted[t] += w * candidate;
            inflow_w[t] += w;
            indegree[t] -= 1;
            if indegree[t] == 0 {
                queue.push_back(t);
            }
        }
    }

    let valid_cells = field.valid.iter().filter(|&&v| v).count();
    if processed != valid_cells {
        return Err(Error::FlowCycle);
    }

    // No-flow cells still got lengths above; nodata cells stay masked.
    for i in 0..n {
        if !field.valid[i] {
            let (row, col) = field.angle.row_col(i);
            out.set_nodata(row, col);
        }
    }
    Ok(out)
}

/// Contributing area per cell (same units as `cell_area`), the accumulation
/// companion used for mass-balance checks: each cell contributes its own
/// area plus the weighted inflow of its upstream neighbors.
pub fn contributing_area(field: &FlowField, cell_area: f64) -> Result<Raster> {
    let n = field.angle.header().cells();

    let mut indegree = vec![0u32; n];
    for i in 0..n {
        for (t, _) in field.outflow(i) {
            indegree[t] += 1;
        }
    }
    let mut acc = vec![0.0f64; n];
    for (slot, &valid) in acc.iter_mut().zip(field.valid.iter()) {
        if valid {
            *slot = cell_area;
        }
    }
    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&i| field.valid[i] && indegree[i] == 0)
        .collect();
    let mut processed = 0usize;
    while let Some(i) = queue.pop_front() {
        processed += 1;
        for (t, w) in field.outflow(i) {
            acc[t] += w * acc[i];
            indegree[t] -= 1;
            if indegree[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    if processed != field.valid.iter().filter(|&&v| v).count() {
        return Err(Error::FlowCycle);
    }

    let mut out = field.angle.clone();
    for (i, &value) in acc.iter().enumerate() {
        let (row, col) = out.row_col(i);
        if field.valid[i] {
            out.set(row, col, value);
        } else {
            out.set_nodata(row, col);
        }
    }
    Ok(out)
}

#[inline]
fn is_diagonal(from: usize, to: usize, ncols: usize) -> bool {
    let (r1, c1) = (from / ncols, from % ncols);
    let (r2, c2) = (to / ncols, to % ncols);
    r1 != r2 && c1 != c2
}
