//! Output files: per-iteration results CSV, the bootstrap summary table
//! with its headline block, the frequency-density CSV, and the run
//! metadata. All writers are deterministic — no timestamps, no map
//! iteration order, fixed float formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use slem_core::montecarlo::{self, IterationResult};
use slem_core::stats::{bootstrap, BootstrapTable, DensityBins, Statistic, QUANTILE_LEVELS};

/// Fixed 10-significant-digit formatting used in every report value.
pub fn sig10(v: f64) -> String {
    format!("{v:.9e}")
}

pub const RESULTS_HEADER: &str =
    "run,pre_total_t,post_total_t,union_area_ha,footprint_pre_t,footprint_post_t";

/// Serialize per-iteration results.
pub fn results_to_csv(results: &[IterationResult]) -> String {
    let mut out = String::with_capacity(results.len() * 96 + 80);
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.run_index,
            sig10(r.pre_total_t),
            sig10(r.post_total_t),
            sig10(r.union_area_ha),
            sig10(r.footprint_pre_t),
            sig10(r.footprint_post_t),
        );
    }
    out
}

pub fn write_results(results: &[IterationResult], path: &Path) -> Result<()> {
    fs::write(path, results_to_csv(results)).with_context(|| format!("writing {}", path.display()))
}

/// Parse a results CSV written by [`write_results`].
pub fn read_results(path: &Path) -> Result<Vec<IterationResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != RESULTS_HEADER {
        bail!(
            "{}: unexpected results header '{header}' (expected '{RESULTS_HEADER}')",
            path.display()
        );
    }
    let mut results = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("{}:{}: expected 6 fields", path.display(), line_no + 2);
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .with_context(|| format!("{}:{}: bad number '{s}'", path.display(), line_no + 2))
        };
        results.push(IterationResult {
            run_index: fields[0]
                .parse()
                .with_context(|| format!("{}:{}: bad run index", path.display(), line_no + 2))?,
            pre_total_t: parse(fields[1])?,
            post_total_t: parse(fields[2])?,
            union_area_ha: parse(fields[3])?,
            footprint_pre_t: parse(fields[4])?,
            footprint_post_t: parse(fields[5])?,
        });
    }
    if results.is_empty() {
        bail!("{}: no result rows", path.display());
    }
    Ok(results)
}

/// The numbers behind the summary report, kept for stdout echo and tests.
#[derive(Debug, Clone)]
pub struct SummaryStats {
    pub statistic: Statistic,
    pub n_resamples: u32,
    /// Bootstrap tables for the footprint-restricted pre and post losses
    /// and the landslide activity area, in that column order.
    pub footprint_pre: BootstrapTable,
    pub footprint_post: BootstrapTable,
    pub union_area: BootstrapTable,
    pub catchment_ha: Option<f64>,
    pub pre_total_median_t: f64,
    pub post_total_median_t: f64,
    pub post_total_mean_t: f64,
    pub median_total_ratio: f64,
    pub median_footprint_ratio: f64,
    pub median_increase_t: f64,
    /// Bootstrap 5% quantile of the increase statistic: the "at least this
    /// much, p ≤ 0.05" lower bound.
    pub increase_t_p05: f64,
}

/// Bootstrap the per-run series and derive the headline numbers.
///
/// The tabulated pre/post losses are the footprint-restricted totals (the
/// losses within the area affected by landslide activity); catchment-wide
/// totals appear in the headline block.
pub fn summarize(
    results: &[IterationResult],
    statistic: Statistic,
    n_resamples: u32,
    seed: u64,
    catchment_ha: Option<f64>,
) -> Result<SummaryStats> {
    if results.is_empty() {
        bail!("cannot summarize zero iteration results");
    }
    let series = |f: fn(&IterationResult) -> f64| -> Vec<f64> { results.iter().map(f).collect() };
    let pre_total = series(|r| r.pre_total_t);
    let post_total = series(|r| r.post_total_t);
    let footprint_pre = series(|r| r.footprint_pre_t);
    let footprint_post = series(|r| r.footprint_post_t);
    let union_area = series(|r| r.union_area_ha);
    let increase: Vec<f64> = results
        .iter()
        .map(|r| r.post_total_t - r.pre_total_t)
        .collect();

    let mut rng = montecarlo::substream_rng(seed, montecarlo::BOOTSTRAP_STREAM);
    let footprint_pre_table = bootstrap(&footprint_pre, statistic, n_resamples, &mut rng)?;
    let footprint_post_table = bootstrap(&footprint_post, statistic, n_resamples, &mut rng)?;
    let union_table = bootstrap(&union_area, statistic, n_resamples, &mut rng)?;
    let increase_table = bootstrap(&increase, statistic, n_resamples, &mut rng)?;

    let ratios: Vec<f64> = results
        .iter()
        .filter(|r| r.pre_total_t > 0.0)
        .map(|r| r.post_total_t / r.pre_total_t)
        .collect();
    let footprint_ratios: Vec<f64> = results
        .iter()
        .filter(|r| r.footprint_pre_t > 0.0)
        .map(|r| r.footprint_post_t / r.footprint_pre_t)
        .collect();
    let median_or_nan = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            slem_core::stats::median(v)
        }
    };

    Ok(SummaryStats {
        statistic,
        n_resamples,
        footprint_pre: footprint_pre_table,
        footprint_post: footprint_post_table,
        union_area: union_table,
        catchment_ha,
        pre_total_median_t: slem_core::stats::median(&pre_total),
        post_total_median_t: slem_core::stats::median(&post_total),
        post_total_mean_t: slem_core::stats::mean(&post_total),
        median_total_ratio: median_or_nan(&ratios),
        median_footprint_ratio: median_or_nan(&footprint_ratios),
        median_increase_t: median_or_nan(&increase),
        increase_t_p05: increase_table.quantiles[0],
    })
}

/// Render the summary: a 5-row × 4-column table mirroring the bootstrap
/// quantile layout, a blank line, then a `key = value` headline block.
pub fn summary_to_text(stats: &SummaryStats) -> String {
    let mut out = String::new();
    out.push_str(
        "quantile,pre_failure_soil_loss_t,post_failure_soil_loss_t,landslide_activity_area_ha\n",
    );
    for (i, level) in QUANTILE_LEVELS.iter().enumerate() {
        let area = stats.union_area.quantiles[i];
        let area_cell = match stats.catchment_ha {
            Some(catchment) if catchment > 0.0 => {
                format!("{} ({:.2}%)", sig10(area), 100.0 * area / catchment)
            }
            _ => sig10(area),
        };
        let _ = writeln!(
            out,
            "{}%,{},{},{}",
            (level * 100.0).round() as u32,
            sig10(stats.footprint_pre.quantiles[i]),
            sig10(stats.footprint_post.quantiles[i]),
            area_cell,
        );
    }
    out.push('\n');
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("bootstrap_statistic", stats.statistic.name().into());
    kv("bootstrap_resamples", stats.n_resamples.to_string());
    kv("quantile_method", "nearest-rank".into());
    if let Some(c) = stats.catchment_ha {
        kv("catchment_area_ha", sig10(c));
    }
    kv("pre_total_median_t", sig10(stats.pre_total_median_t));
    kv("post_total_median_t", sig10(stats.post_total_median_t));
    kv("post_total_mean_t", sig10(stats.post_total_mean_t));
    kv("median_total_ratio", sig10(stats.median_total_ratio));
    kv(
        "median_footprint_ratio",
        sig10(stats.median_footprint_ratio),
    );
    kv("median_increase_t", sig10(stats.median_increase_t));
    kv("increase_t_p05_lower", sig10(stats.increase_t_p05));
    kv(
        "union_area_ha_p05_lower",
        sig10(stats.union_area.quantiles[0]),
    );
    out
}

pub fn write_summary(stats: &SummaryStats, path: &Path) -> Result<()> {
    fs::write(path, summary_to_text(stats)).with_context(|| format!("writing {}", path.display()))
}

/// Render the density CSV; envelopes add the bootstrap 5–95% columns.
pub fn density_to_csv(bins: &DensityBins, envelopes: Option<&[(f64, f64)]>) -> String {
    let mut out = String::new();
    out.push_str(match envelopes {
        Some(_) => "bin_lo_km2,bin_hi_km2,count,density_km-2,env_lo,env_hi\n",
        None => "bin_lo_km2,bin_hi_km2,count,density_km-2\n",
    });
    for i in 0..bins.bin_count() {
        let _ = write!(
            out,
            "{},{},{},{}",
            sig10(bins.edges[i]),
            sig10(bins.edges[i + 1]),
            bins.counts[i],
            sig10(bins.density[i]),
        );
        if let Some(env) = envelopes {
            let _ = write!(out, ",{},{}", sig10(env[i].0), sig10(env[i].1));
        }
        out.push('\n');
    }
    out
}

pub fn write_density(
    bins: &DensityBins,
    envelopes: Option<&[(f64, f64)]>,
    path: &Path,
) -> Result<()> {
    fs::write(path, density_to_csv(bins, envelopes))
        .with_context(|| format!("writing {}", path.display()))
}

/// Run metadata: enough to reproduce the run and recognize when two runs
/// must agree. Two runs with equal metadata and equal input files produce
/// byte-identical outputs. `min_area_km2` is the sampler's truncation
/// threshold, present only for commands that sample.
pub fn run_metadata_text(
    config: &crate::config::RunConfig,
    seed: Option<u64>,
    min_area_km2: Option<f64>,
) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("config_hash", format!("{:016x}", config.hash()));
    kv(
        "seed",
        seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
    );
    kv(
        "min_area_km2",
        min_area_km2
            .map(|m| format!("{m}"))
            .unwrap_or_else(|| "-".into()),
    );
    kv("max_area_km2", format!("{}", config.max_area_km2));
    kv("quantile_method", "nearest-rank".into());
    kv("version", env!("CARGO_PKG_VERSION").into());
    out.push('\n');
    out.push_str("[config]\n");
    out.push_str(&config.canonical_text());
    out
}

pub fn write_run_metadata(
    config: &crate::config::RunConfig,
    seed: Option<u64>,
    min_area_km2: Option<f64>,
    path: &Path,
) -> Result<()> {
    fs::write(path, run_metadata_text(config, seed, min_area_km2))
        .with_context(|| format!("writing {}", path.display()))
}
