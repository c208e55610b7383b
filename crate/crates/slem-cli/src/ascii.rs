//! ASCII grid reader and writer.
//!
//! The interchange format is the six-line ESRI-style header followed by
//! `nrows` lines of `ncols` whitespace-separated numbers, north row first:
//!
//! ```text
//! NCOLS 4
//! NROWS 3
//! XLLCORNER 0
//! YLLCORNER 0
//! CELLSIZE 5
//! NODATA_VALUE -9999
//! 1 2 3 4
//! ...
//! ```
//!
//! The reader accepts case-insensitive keys and arbitrary whitespace; the
//! writer is canonical (uppercase keys, single spaces, shortest round-trip
//! decimal representation), so reading and rewriting a canonical file
//! reproduces it byte for byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use slem_core::{GridHeader, Raster};

/// A parse failure, naming the file position that caused it.
#[derive(Debug, thiserror::Error)]
#[error("{path}:{line}:{col}: {message}")]
pub struct ParseError {
    pub path: String,
    /// 1-based line number.
    pub line: usize,
    /// 1-based character column of the offending token.
    pub col: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum GridIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Invalid(#[from] slem_core::Error),
}

/// Shortest decimal representation that round-trips through `f64` parsing —
/// Rust's default float formatting.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

const HEADER_KEYS: [&str; 6] = [
    "NCOLS",
    "NROWS",
    "XLLCORNER",
    "YLLCORNER",
    "CELLSIZE",
    "NODATA_VALUE",
];

/// Read an ASCII grid file.
pub fn read_grid(path: &Path) -> Result<Raster, GridIoError> {
    let text = fs::read_to_string(path)?;
    parse_grid(&text, &path.display().to_string()).map_err(GridIoError::from)
}

/// Parse grid text; `path` is used only in error messages.
pub fn parse_grid(text: &str, path: &str) -> Result<Raster, ParseError> {
    let err = |line: usize, col: usize, message: String| ParseError {
        path: path.to_string(),
        line,
        col,
        message,
    };

    let mut lines = text.lines().enumerate();
    let mut header_values = [0.0f64; 6];
    for (key_index, expected) in HEADER_KEYS.iter().enumerate() {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| err(key_index + 1, 1, format!("missing header line {expected}")))?;
        let mut tokens = tokens_with_cols(line);
        let (col, key) = tokens
            .next()
            .ok_or_else(|| err(line_no + 1, 1, format!("expected header key {expected}")))?;
        if !key.eq_ignore_ascii_case(expected) {
            return Err(err(
                line_no + 1,
                col,
                format!("malformed header key '{key}', expected {expected}"),
            ));
        }
        let (vcol, value) = tokens.next().ok_or_else(|| {
            err(
                line_no + 1,
                col + key.len(),
                format!("{expected} has no value"),
            )
        })?;
        let parsed: f64 = value.parse().map_err(|_| {
            err(
                line_no + 1,
                vcol,
                format!("non-numeric {expected} '{value}'"),
            )
        })?;
        if let Some((extra_col, extra)) = tokens.next() {
            return Err(err(
                line_no + 1,
                extra_col,
                format!("unexpected token '{extra}' after {expected}"),
            ));
        }
        header_values[key_index] = parsed;
    }

    let ncols_f = header_values[0];
    let nrows_f = header_values[1];
    if ncols_f.fract() != 0.0 || ncols_f < 1.0 || nrows_f.fract() != 0.0 || nrows_f < 1.0 {
        return Err(err(
            1,
            1,
            format!("NCOLS/NROWS must be positive integers, got {ncols_f} x {nrows_f}"),
        ));
    }
    let (ncols, nrows) = (ncols_f as usize, nrows_f as usize);
    let header = GridHeader::new(
        ncols,
        nrows,
        header_values[2],
        header_values[3],
        header_values[4],
        header_values[5],
    )
    .map_err(|e| err(1, 1, e.to_string()))?;

    let mut values = Vec::with_capacity(header.cells());
    for (line_no, line) in lines {
        for (col, token) in tokens_with_cols(line) {
            if values.len() == header.cells() {
                return Err(err(
                    line_no + 1,
                    col,
                    format!(
                        "unexpected extra cell '{token}': grid holds {} cells",
                        header.cells()
                    ),
                ));
            }
            let v: f64 = token.parse().map_err(|_| {
                err(
                    line_no + 1,
                    col,
                    format!("non-numeric cell value '{token}'"),
                )
            })?;
            values.push(v);
        }
    }
    if values.len() != header.cells() {
        let last_line = text.lines().count();
        return Err(err(
            last_line,
            1,
            format!("expected {} cells, found {}", header.cells(), values.len()),
        ));
    }
    Raster::from_values(header, values).map_err(|e| err(1, 1, e.to_string()))
}

/// Tokens of a line with their 1-based starting character columns.
fn tokens_with_cols(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        // Safe: tok is a subslice of line.
        let offset = tok.as_ptr() as usize - line.as_ptr() as usize;
        (offset + 1, tok)
    })
}

/// Serialize a raster in canonical form.
pub fn grid_to_string(raster: &Raster) -> String {
    let h = raster.header();
    let mut out = String::with_capacity(h.cells() * 8 + 128);
    out.push_str(&format!("NCOLS {}\n", h.ncols));
    out.push_str(&format!("NROWS {}\n", h.nrows));
    out.push_str(&format!("XLLCORNER {}\n", format_f64(h.xllcorner)));
    out.push_str(&format!("YLLCORNER {}\n", format_f64(h.yllcorner)));
    out.push_str(&format!("CELLSIZE {}\n", format_f64(h.cellsize)));
    out.push_str(&format!("NODATA_VALUE {}\n", format_f64(h.nodata_value)));
    for row in 0..h.nrows {
        for col in 0..h.ncols {
            if col > 0 {
                out.push(' ');
            }
            let i = raster.index(row, col);
            let v = if raster.is_valid(i) {
                raster.value(i)
            } else {
                h.nodata_value
            };
            out.push_str(&format_f64(v));
        }
        out.push('\n');
    }
    out
}

/// Write a raster to `path` in canonical form. Deterministic: equal rasters
/// produce byte-identical files.
pub fn write_grid(raster: &Raster, path: &Path) -> Result<(), GridIoError> {
    let mut file = fs::File::create(path)?;
    file.write_all(grid_to_string(raster).as_bytes())?;
    Ok(())
}
