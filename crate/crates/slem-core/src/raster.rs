//! Georeferenced raster grids with a validity mask and nodata-aware map
//! algebra.
//!
//! A [`Raster`] is immutable once built (construction helpers aside); every
//! operation returns a new grid. Invalid cells propagate: an output cell is
//! valid iff all contributing input cells are valid. There is no imputation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

/// Grid geometry and the nodata sentinel of the on-disk representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    /// X coordinate of the lower-left grid corner (m).
    pub xllcorner: f64,
    /// Y coordinate of the lower-left grid corner (m).
    pub yllcorner: f64,
    /// Cell edge length (m); cells are square.
    pub cellsize: f64,
    /// Sentinel marking invalid cells in file form.
    pub nodata_value: f64,
}

impl GridHeader {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xllcorner: f64,
        yllcorner: f64,
        cellsize: f64,
        nodata_value: f64,
    ) -> Result<Self> {
        let header = GridHeader {
            ncols,
            nrows,
            xllcorner,
            yllcorner,
            cellsize,
            nodata_value,
        };
        header.validate()?;
        Ok(header)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid dimensions must be at least 1x1, got {}x{}",
                self.nrows, self.ncols
            )));
        }
        if !(self.cellsize > 0.0) || !self.cellsize.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "cellsize must be positive and finite, got {}",
                self.cellsize
            )));
        }
        Ok(())
    }

    /// Number of cells in the grid.
    pub fn cells(&self) -> usize {
        self.ncols * self.nrows
    }

    /// Cell area in hectares (`cellsize² / 10_000`).
    pub fn cell_area_ha(&self) -> f64 {
        self.cellsize * self.cellsize / 10_000.0
    }

    /// Cell area in km² (`cellsize² / 10⁶`).
    pub fn cell_area_km2(&self) -> f64 {
        self.cellsize * self.cellsize / 1.0e6
    }

    /// True when `other` covers the same cells: identical dimensions, origin
    /// and cell size. The nodata sentinel is an encoding detail and is
    /// deliberately not compared, so grids loaded from files with different
    /// sentinels stay algebra-compatible.
    pub fn same_grid(&self, other: &GridHeader) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.xllcorner == other.xllcorner
            && self.yllcorner == other.yllcorner
            && self.cellsize == other.cellsize
    }
}

/// A 2-D grid of `f64` values in row-major order (row 0 = northernmost),
/// with a parallel validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    header: GridHeader,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl Raster {
    /// Build a raster from explicit values and mask.
    pub fn new(header: GridHeader, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        header.validate()?;
        if values.len() != header.cells() || mask.len() != header.cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} cells, got {} values and {} mask entries",
                header.cells(),
                values.len(),
                mask.len()
            )));
        }
        Ok(Raster {
            header,
            values,
            mask,
        })
    }

    /// Build a raster from values alone; cells equal to the header's nodata
    /// sentinel (or non-finite) are masked invalid.
    pub fn from_values(header: GridHeader, values: Vec<f64>) -> Result<Self> {
        let nodata = header.nodata_value;
        let mask = values
            .iter()
            .map(|&v| v != nodata && v.is_finite())
            .collect();
        Raster::new(header, values, mask)
    }

    /// A raster with every cell valid and equal to `value`.
    pub fn filled(header: GridHeader, value: f64) -> Result<Self> {
        let n = header.cells();
        Raster::new(header, vec![value; n], vec![true; n])
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    pub fn ncols(&self) -> usize {
        self.header.ncols
    }

    pub fn nrows(&self) -> usize {
        self.header.nrows
    }

    /// Flat row-major index of `(row, col)`.
    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.header.ncols + col
    }

    /// `(row, col)` of a flat index.
    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.header.ncols, index % self.header.ncols)
    }

    #[inline]
    pub fn is_valid(&self, index: usize) -> bool {
        self.mask[index]
    }

    /// Raw value at a flat index, meaningful only where the mask is true.
    #[inline]
    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Value at `(row, col)` if in bounds and valid.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if row >= self.header.nrows || col >= self.header.ncols {
            return None;
        }
        let i = self.index(row, col);
        self.mask[i].then(|| self.values[i])
    }

    /// Signed-coordinate variant of [`Raster::get`] for stencil code.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> Option<f64> {
        if row < 0 || col < 0 {
            return None;
        }
        self.get(row as usize, col as usize)
    }

    /// Overwrite one cell (construction only; rasters are treated as
    /// immutable once handed to an operation).
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = self.index(row, col);
        self.values[i] = value;
        self.mask[i] = true;
    }

    /// Mark one cell invalid (construction only).
    pub fn set_nodata(&mut self, row: usize, col: usize) {
        let i = self.index(row, col);
        self.values[i] = self.header.nodata_value;
        self.mask[i] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Iterator over `(flat index, value)` of valid cells in row-major order.
    pub fn valid_cells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.mask[*i])
            .map(|(i, &v)| (i, v))
    }

    /// Apply `f` cellwise; invalid cells stay invalid.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Raster {
        let values = self
            .values
            .iter()
            .zip(self.mask.iter())
            .map(|(&v, &m)| if m { f(v) } else { v })
            .collect();
        Raster {
            header: self.header,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Cellwise binary map algebra. The output cell is valid iff both input
    /// cells are; the grids must share geometry.
    pub fn map2<F: Fn(f64, f64) -> f64>(&self, other: &Raster, f: F) -> Result<Raster> {
        if !self.header.same_grid(&other.header) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} (cellsize {}) vs {}x{} (cellsize {})",
                self.header.nrows,
                self.header.ncols,
                self.header.cellsize,
                other.header.nrows,
                other.header.ncols,
                other.header.cellsize
            )));
        }
        let n = self.header.cells();
        let mut values = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for i in 0..n {
            let valid = self.mask[i] && other.mask[i];
            mask.push(valid);
            values.push(if valid {
                f(self.values[i], other.values[i])
            } else {
                self.header.nodata_value
            });
        }
        Ok(Raster {
            header: self.header,
            values,
            mask,
        })
    }

    /// Sum of `value × cell_area_ha` over valid cells, in the unit of
    /// `value × ha` (tonnes per year for an erosion-rate grid).
    ///
    /// Uses compensated summation in fixed row-major order. Valid negative
    /// values are an invariant violation for the erosion-rate role this
    /// total exists for.
    pub fn total(&self, cell_area_ha: f64) -> Result<f64> {
        if !(cell_area_ha > 0.0) {
            return Err(Error::Domain(format!(
                "cell area must be positive, got {cell_area_ha}"
            )));
        }
        for (i, v) in self.valid_cells() {
            if !(v >= 0.0) {
                let (row, col) = self.row_col(i);
                return Err(Error::ValueOutOfRange {
                    role: "erosion rate",
                    row,
                    col,
                    value: v,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        Ok(fmath::compensated_sum(
            self.valid_cells().map(|(_, v)| v * cell_area_ha),
        ))
    }

    /// Check that every valid cell is nonnegative (the erosion-rate and
    /// factor-grid invariant).
    pub fn validate_nonnegative(&self, role: &'static str) -> Result<()> {
        self.validate_range(role, 0.0, f64::INFINITY, true)
    }

    /// Check that every valid cell lies in `[0, 1]` (the proportion
    /// invariant for C factors and bare fractions).
    pub fn validate_proportion(&self, role: &'static str) -> Result<()> {
        self.validate_range(role, 0.0, 1.0, true)
    }

    /// Check that every valid cell lies in `(0, 1]` (P and stoniness
    /// factors).
    pub fn validate_unit_positive(&self, role: &'static str) -> Result<()> {
        self.validate_range(role, 0.0, 1.0, false)
    }

    fn validate_range(
        &self,
        role: &'static str,
        lo: f64,
        hi: f64,
        lo_inclusive: bool,
    ) -> Result<()> {
        for (i, v) in self.valid_cells() {
            let above_lo = if lo_inclusive { v >= lo } else { v > lo };
            if !(above_lo && v <= hi) {
                let (row, col) = self.row_col(i);
                return Err(Error::ValueOutOfRange {
                    role,
                    row,
                    col,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}
