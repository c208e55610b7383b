//! Command-line interface: subcommands, flag-over-config resolution, and
//! the per-command drivers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use slem_core::montecarlo::{self, IterationResult};
use slem_core::rusle::erosion;
use slem_core::stats::{density_bins, density_envelopes};

use crate::ascii::write_grid;
use crate::config::RunConfig;
use crate::engine;
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "slem",
    version,
    about = "Coupled landslide / soil-erosion Monte Carlo simulator over raster catchments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive slope, aspect and upslope flow-length grids from a DEM.
    Terrain(CommonArgs),
    /// Compute the pre-failure erosion grid and print the catchment total.
    Erode(CommonArgs),
    /// Run the landslide Monte Carlo experiment and write results,
    /// summary and density files.
    Simulate(CommonArgs),
    /// Re-run the bootstrap analysis on an existing results CSV.
    Bootstrap(BootstrapArgs),
    /// Bin a list of landslide areas (km², one per line) into a frequency
    /// density.
    Density(DensityArgs),
}

/// Options shared by every subcommand. Values given here override the
/// config file named by `--config`.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// DEM grid (ASCII grid format).
    #[arg(long)]
    pub dem: Option<PathBuf>,
    /// Land-cover class grid.
    #[arg(long)]
    pub landcover: Option<PathBuf>,
    /// Rainfall-runoff erosivity grid.
    #[arg(long)]
    pub r: Option<PathBuf>,
    /// Soil erodibility grid.
    #[arg(long)]
    pub k: Option<PathBuf>,
    /// Support-practice factor grid (defaults to 1 everywhere).
    #[arg(long)]
    pub p: Option<PathBuf>,
    /// Stoniness factor grid (defaults to 1 everywhere).
    #[arg(long)]
    pub st: Option<PathBuf>,
    /// Binary mask restricting where landslides may start.
    #[arg(long)]
    pub eligibility: Option<PathBuf>,
    /// CSV mapping land-cover class to C factor.
    #[arg(long = "cover-table")]
    pub cover_table: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master RNG seed (required for stochastic commands; never implicit).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo iterations.
    #[arg(long)]
    pub iterations: Option<u32>,
    /// Landslides per iteration.
    #[arg(long = "n-landslides")]
    pub n_landslides: Option<u64>,
    /// Inverse-gamma decay exponent ρ.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Inverse-gamma scale a (km²).
    #[arg(long = "a-param")]
    pub a_param: Option<f64>,
    /// Inverse-gamma shift s (km²).
    #[arg(long = "s-param")]
    pub s_param: Option<f64>,
    /// Lower bound of the per-cell bare-soil fraction.
    #[arg(long = "bare-min")]
    pub bare_min: Option<f64>,
    /// Cover-management factor of bare soil.
    #[arg(long = "c-bare")]
    pub c_bare: Option<f64>,
    /// Worker threads (0 = all cores). Never affects the results.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Upper rejection bound for sampled areas (km²).
    #[arg(long = "max-area-km2")]
    pub max_area_km2: Option<f64>,
    /// Draw the per-iteration landslide count from a Poisson law.
    #[arg(long = "poisson-landslides")]
    pub poisson_landslides: bool,
    /// Flow-length combination at confluences: longest or mean.
    #[arg(long = "flow-length-method")]
    pub flow_length_method: Option<String>,
    /// Slope (degrees) where the S factor switches formulas.
    #[arg(long = "s-threshold-deg")]
    pub s_threshold_deg: Option<f64>,
    /// Slope-length exponent: 'mccool' or a fixed number.
    #[arg(long = "l-exponent")]
    pub l_exponent: Option<String>,
    /// Bootstrap resamples.
    #[arg(long = "bootstrap-resamples")]
    pub bootstrap_resamples: Option<u32>,
    /// Statistic bootstrapped over runs: mean, median or total.
    #[arg(long = "bootstrap-statistic")]
    pub bootstrap_statistic: Option<String>,
    /// Log-spaced density bins per decade.
    #[arg(long = "bins-per-decade")]
    pub bins_per_decade: Option<u32>,
}

impl CommonArgs {
    /// Config file first, then flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! override_path {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    config.$field = Some(v.clone());
                }
            };
        }
        override_path!(dem);
        override_path!(landcover);
        override_path!(r);
        override_path!(k);
        override_path!(p);
        override_path!(st);
        override_path!(eligibility);
        override_path!(cover_table);
        override_path!(out);
        if let Some(v) = self.seed {
            config.seed = Some(v);
        }
        if let Some(v) = self.iterations {
            config.iterations = v;
        }
        if let Some(v) = self.n_landslides {
            config.n_landslides = Some(v);
        }
        if let Some(v) = self.rho {
            config.rho = v;
        }
        if let Some(v) = self.a_param {
            config.a_param = v;
        }
        if let Some(v) = self.s_param {
            config.s_param = v;
        }
        if let Some(v) = self.bare_min {
            config.bare_min = v;
        }
        if let Some(v) = self.c_bare {
            config.c_bare = v;
        }
        if let Some(v) = self.threads {
            config.threads = v;
        }
        if let Some(v) = self.max_area_km2 {
            config.max_area_km2 = v;
        }
        if self.poisson_landslides {
            config.poisson_landslides = true;
        }
        if let Some(v) = &self.flow_length_method {
            config.set("flow_length_method", v)?;
        }
        if let Some(v) = self.s_threshold_deg {
            config.s_threshold_deg = v;
        }
        if let Some(v) = &self.l_exponent {
            config.set("l_exponent", v)?;
        }
        if let Some(v) = self.bootstrap_resamples {
            config.bootstrap_resamples = v;
        }
        if let Some(v) = &self.bootstrap_statistic {
            config.set("bootstrap_statistic", v)?;
        }
        if let Some(v) = self.bins_per_decade {
            config.bins_per_decade = v;
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Results CSV produced by `simulate`.
    #[arg(long)]
    pub results: PathBuf,
    /// Catchment area in hectares, for the %-of-catchment column.
    #[arg(long = "catchment-ha")]
    pub catchment_ha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Text file with one landslide area (km²) per line.
    #[arg(long)]
    pub areas: PathBuf,
    /// Also emit bootstrap 5–95% envelopes per bin (needs --seed).
    #[arg(long)]
    pub envelopes: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Terrain(args) => cmd_terrain(&args.resolve()?),
        Command::Erode(args) => cmd_erode(&args.resolve()?),
        Command::Simulate(args) => cmd_simulate(&args.resolve()?),
        Command::Bootstrap(args) => {
            let config = args.common.resolve()?;
            cmd_bootstrap(&config, &args.results, args.catchment_ha)
        }
        Command::Density(args) => {
            let config = args.common.resolve()?;
            cmd_density(&config, &args.areas, args.envelopes)
        }
    }
}

fn ensure_out(config: &RunConfig) -> Result<PathBuf> {
    let out = config.require_out()?.to_path_buf();
    fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    Ok(out)
}

/// `terrain`: slope.asc, aspect.asc and flowlen.asc from the DEM.
pub fn cmd_terrain(config: &RunConfig) -> Result<()> {
    let out = ensure_out(config)?;
    let dem_path = config.require_path("dem")?;
    let dem = crate::ascii::read_grid(dem_path)
        .with_context(|| format!("loading dem grid {}", dem_path.display()))?;
    let (slope, aspect) = slem_core::terrain::slope_aspect(&dem)?;
    let flow = slem_core::terrain::dinf_directions(&dem);
    let flowlen = slem_core::terrain::flow_length_with(
        &flow,
        dem.header().cellsize,
        config.flow_length_method,
    )?;
    write_grid(&slope, &out.join("slope.asc"))?;
    write_grid(&aspect, &out.join("aspect.asc"))?;
    write_grid(&flowlen, &out.join("flowlen.asc"))?;
    report::write_run_metadata(config, config.seed, None, &out.join("run_metadata.txt"))?;
    println!(
        "wrote slope.asc, aspect.asc, flowlen.asc to {}",
        out.display()
    );
    Ok(())
}

/// `erode`: the pre-failure erosion grid plus its catchment total.
pub fn cmd_erode(config: &RunConfig) -> Result<()> {
    let out = ensure_out(config)?;
    let pipeline = engine::build_pipeline(config)?;
    let erosion_pre = erosion(&pipeline.stack)?;
    write_grid(&erosion_pre, &out.join("erosion_pre.asc"))?;
    report::write_run_metadata(config, config.seed, None, &out.join("run_metadata.txt"))?;
    let total = erosion_pre.total(erosion_pre.header().cell_area_ha())?;
    println!("total_soil_loss_t_per_year = {total}");
    println!("catchment_area_ha = {}", pipeline.catchment_ha);
    Ok(())
}

/// `simulate`: the full experiment. Writes results.csv, summary.csv,
/// density.csv and run_metadata.txt; everything is a pure function of the
/// configuration and input files.
pub fn cmd_simulate(config: &RunConfig) -> Result<()> {
    let out = ensure_out(config)?;
    let seed = config.require_seed()?;
    if config.iterations == 0 {
        bail!("iterations must be at least 1");
    }
    let pipeline = engine::build_pipeline(config)?;
    let inputs = engine::simulation_inputs(config, &pipeline)?;
    let settings = engine::iteration_settings(config, &inputs)?;

    let outputs =
        engine::run_simulation(&inputs, &settings, seed, config.iterations, config.threads)?;
    let results: Vec<IterationResult> = outputs.iter().map(|o| o.result).collect();
    let mut areas: Vec<f64> = Vec::new();
    for o in &outputs {
        areas.extend_from_slice(&o.areas_km2);
    }

    report::write_results(&results, &out.join("results.csv"))?;

    let stats = report::summarize(
        &results,
        config.bootstrap_statistic,
        config.bootstrap_resamples,
        seed,
        Some(pipeline.catchment_ha),
    )?;
    report::write_summary(&stats, &out.join("summary.csv"))?;

    let bins = density_bins(&areas, areas.len() as u64, config.bins_per_decade)?;
    report::write_density(&bins, None, &out.join("density.csv"))?;

    report::write_run_metadata(
        config,
        Some(seed),
        Some(settings.min_area_km2),
        &out.join("run_metadata.txt"),
    )?;

    println!("iterations = {}", results.len());
    println!("pre_total_median_t = {}", stats.pre_total_median_t);
    println!("post_total_median_t = {}", stats.post_total_median_t);
    println!("median_total_ratio = {}", stats.median_total_ratio);
    println!("median_footprint_ratio = {}", stats.median_footprint_ratio);
    println!("union_area_ha_median = {}", stats.union_area.quantiles[2]);
    Ok(())
}

/// `bootstrap`: re-analyze an existing results CSV.
pub fn cmd_bootstrap(
    config: &RunConfig,
    results_path: &Path,
    catchment_ha: Option<f64>,
) -> Result<()> {
    let out = ensure_out(config)?;
    let seed = config.require_seed()?;
    let results = report::read_results(results_path)?;
    let stats = report::summarize(
        &results,
        config.bootstrap_statistic,
        config.bootstrap_resamples,
        seed,
        catchment_ha,
    )?;
    report::write_summary(&stats, &out.join("summary.csv"))?;
    report::write_run_metadata(config, Some(seed), None, &out.join("run_metadata.txt"))?;
    println!("rows = {}", results.len());
    println!("post_total_median_t = {}", stats.post_total_median_t);
    println!("median_increase_t = {}", stats.median_increase_t);
    Ok(())
}

/// `density`: bin an area list, optionally with bootstrap envelopes.
pub fn cmd_density(config: &RunConfig, areas_path: &Path, envelopes: bool) -> Result<()> {
    let out = ensure_out(config)?;
    let text = fs::read_to_string(areas_path)
        .with_context(|| format!("reading area list {}", areas_path.display()))?;
    let mut areas = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().with_context(|| {
            format!(
                "{}:{}: bad area '{line}'",
                areas_path.display(),
                line_no + 1
            )
        })?;
        areas.push(v);
    }
    if areas.is_empty() {
        bail!("{}: no areas found", areas_path.display());
    }
    let bins = density_bins(&areas, areas.len() as u64, config.bins_per_decade)?;
    let env = if envelopes {
        let seed = config.require_seed()?;
        let mut rng = montecarlo::substream_rng(seed, montecarlo::DENSITY_STREAM);
        Some(density_envelopes(
            &bins,
            &areas,
            areas.len() as u64,
            config.bootstrap_resamples,
            &mut rng,
        )?)
    } else {
        None
    };
    report::write_density(&bins, env.as_deref(), &out.join("density.csv"))?;
    report::write_run_metadata(config, config.seed, None, &out.join("run_metadata.txt"))?;
    println!("areas = {}", areas.len());
    println!("bins = {}", bins.bin_count());
    println!("captured_mass = {}", bins.mass());
    Ok(())
}
