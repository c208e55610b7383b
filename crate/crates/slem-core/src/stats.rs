//! Bootstrap uncertainty tables and log-binned frequency densities.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fmath;

/// The probability levels every bootstrap table reports.
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Statistic computed on each bootstrap resample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Statistic {
    Mean,
    #[default]
    Median,
    Total,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
            Statistic::Total => "total",
        }
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Statistic::Mean => mean(values),
            Statistic::Median => median(values),
            Statistic::Total => fmath::compensated_sum(values.iter().copied()),
        }
    }
}

impl core::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Statistic::Mean),
            "median" => Ok(Statistic::Median),
            "total" => Ok(Statistic::Total),
            other => Err(Error::Config(format!(
                "unknown statistic '{other}' (expected mean, median or total)"
            ))),
        }
    }
}

/// Arithmetic mean (compensated sum; 0 declared impossible by callers).
pub fn mean(values: &[f64]) -> f64 {
    fmath::compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Median with the usual midpoint convention for even lengths.
pub fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut buf: Vec<f64> = values.to_vec();
    let n = buf.len();
    let mid = n / 2;
    let (_, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = buf[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Nearest-rank quantile of an ascending-sorted slice: the smallest element
/// with at least `p·n` observations at or below it. Deterministic, no
/// interpolation.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    let rank = libm::ceil(p * n as f64) as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Bootstrap quantiles of a statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapTable {
    pub statistic: Statistic,
    pub n_resamples: u32,
    /// Values at [`QUANTILE_LEVELS`], non-decreasing.
    pub quantiles: [f64; 5],
}

impl BootstrapTable {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        QUANTILE_LEVELS
            .iter()
            .position(|&l| l == level)
            .map(|i| self.quantiles[i])
    }
}

/// Resample `values` with replacement `n_resamples` times, compute the
/// statistic on each resample, and report its empirical quantiles by
/// nearest rank.
pub fn bootstrap<R: Rng + ?Sized>(
    values: &[f64],
    statistic: Statistic,
    n_resamples: u32,
    rng: &mut R,
) -> Result<BootstrapTable> {
    if values.is_empty() {
        return Err(Error::Domain("bootstrap input must be non-empty".into()));
    }
    if n_resamples == 0 {
        return Err(Error::Config("n_resamples must be positive".into()));
    }
    let n = values.len();
    let mut stats = Vec::with_capacity(n_resamples as usize);
    let mut resample = vec![0.0f64; n];
    for _ in 0..n_resamples {
        for slot in resample.iter_mut() {
            *slot = values[rng.random_range(0..n)];
        }
        stats.push(statistic.apply(&resample));
    }
    stats.sort_unstable_by(f64::total_cmp);
    let quantiles = QUANTILE_LEVELS.map(|p| nearest_rank(&stats, p));
    Ok(BootstrapTable {
        statistic,
        n_resamples,
        quantiles,
    })
}

/// Landslide-area frequency density on log-spaced bins.
///
/// Bin edges sit at `10^(k / bins_per_decade)` for integer `k`, so two
/// binnings of the same data with nested resolutions cover identical
/// decades. Density is `count / (n_total · width)` with width in km² — the
/// normalization that makes the histogram comparable to a probability
/// density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBins {
    /// `len() == counts.len() + 1`, strictly increasing (km²).
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// km⁻², zero for empty bins.
    pub density: Vec<f64>,
}

impl DensityBins {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, bin: usize) -> f64 {
        self.edges[bin + 1] - self.edges[bin]
    }

    /// Σ density·width — the captured probability mass.
    pub fn mass(&self) -> f64 {
        fmath::compensated_sum(
            self.density
                .iter()
                .enumerate()
                .map(|(i, &d)| d * self.width(i)),
        )
    }
}

/// Bin positive areas (km²) into log-spaced classes.
pub fn density_bins(areas: &[f64], n_total: u64, bins_per_decade: u32) -> Result<DensityBins> {
    if areas.is_empty() {
        return Err(Error::Domain(
            "density binning needs at least one area".into(),
        ));
    }
    if n_total == 0 || bins_per_decade == 0 {
        return Err(Error::Config(
            "n_total and bins_per_decade must be positive".into(),
        ));
    }
    for &a in areas {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!(
                "areas must be positive and finite, got {a}"
            )));
        }
    }
    let bpd = bins_per_decade as f64;
    let k_of = |a: f64| fmath::floor(fmath::log10(a) * bpd) as i64;
    let (mut k_lo, mut k_hi) = (i64::MAX, i64::MIN);
    for &a in areas {
        let k = k_of(a);
        k_lo = k_lo.min(k);
        k_hi = k_hi.max(k);
    }
    let nbins = (k_hi - k_lo + 1) as usize;
    let edges: Vec<f64> = (k_lo..=k_hi + 1)
        .map(|k| fmath::powf(10.0, k as f64 / bpd))
        .collect();
    let mut counts = vec![0u64; nbins];
    for &a in areas {
        let mut bin = (k_of(a) - k_lo) as usize;
        // Guard the pathological edge hit where rounding pushes an area
        // onto its upper edge.
        if bin >= nbins {
            bin = nbins - 1;
        }
        counts[bin] += 1;
    }
    let density = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 / (n_total as f64 * (edges[i + 1] - edges[i])))
        .collect();
    Ok(DensityBins {
        edges,
        counts,
        density,
    })
}

/// Per-bin bootstrap envelope of the density (5% and 95% nearest-rank
/// quantiles over resamples of the area list, rebinned on fixed edges).
pub fn density_envelopes<R: Rng + ?Sized>(
    bins: &DensityBins,
    areas: &[f64],
    n_total: u64,
    n_resamples: u32,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if n_resamples == 0 {
        return Err(Error::Config("n_resamples must be positive".into()));
    }
    let nbins = bins.bin_count();
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::with_capacity(n_resamples as usize); nbins];
    let n = areas.len();
    let mut resample = vec![0.0f64; n];
    for _ in 0..n_resamples {
        for slot in resample.iter_mut() {
            *slot = areas[rng.random_range(0..n)];
        }
        let mut counts = vec![0u64; nbins];
        for &a in resample.iter() {
            // Clamp into the fixed edges of the observed binning.
            let mut bin = nbins;
            for i in 0..nbins {
                if a < bins.edges[i + 1] {
                    bin = i;
                    break;
                }
            }
            if bin == nbins {
                bin = nbins - 1;
            }
            counts[bin] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            per_bin[i].push(c as f64 / (n_total as f64 * bins.width(i)));
        }
    }
    Ok(per_bin
        .into_iter()
        .map(|mut densities| {
            densities.sort_unstable_by(f64::total_cmp);
            (
                nearest_rank(&densities, 0.05),
                nearest_rank(&densities, 0.95),
            )
        })
        .collect())
}
