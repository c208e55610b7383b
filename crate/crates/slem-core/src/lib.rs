//! Core algorithms for coupled landslide / soil-erosion Monte Carlo simulation.
//!
//! The crate is `no_std` (with `alloc`) and holds everything that does not
//! touch the filesystem:
//!
//! - [`raster`]: georeferenced grids with a nodata mask and nodata-aware
//!   map algebra,
//! - [`terrain`]: Horn slope/aspect, D-infinity flow directions and upslope
//!   flow length,
//! - [`rusle`]: the multiplicative soil-loss factors (S, L, C) and the
//!   per-cell erosion product,
//! - [`landslide`]: the three-parameter inverse-gamma frequency-area
//!   distribution, area sampling and footprint placement,
//! - [`montecarlo`]: one simulation iteration (sample landslides, patch the
//!   cover factor, update erosion totals) with reproducible RNG substreams,
//! - [`stats`]: bootstrap quantile tables and log-binned frequency densities.
//!
//! File formats, configuration, and the command line live in the companion
//! `slem-cli` crate.

#![no_std]
// Validation code uses `!(x > 0.0)`-style guards throughout: unlike
// `x <= 0.0`, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod fmath;
pub mod gamma;
pub mod landslide;
pub mod montecarlo;
pub mod raster;
pub mod rusle;
pub mod stats;
pub mod terrain;

pub use error::{Error, Result};
pub use raster::{GridHeader, Raster};

/// Re-exported so downstream crates construct the exact RNG the simulation
/// substreams use without tracking the `rand_chacha` version themselves.
pub use rand_chacha::ChaCha8Rng;
