//! Pipeline assembly: load the input grids, derive the terrain and factor
//! grids, and drive the Monte Carlo iterations (in parallel when asked —
//! the result vector is assembled by run index, so thread count can never
//! change the output).

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use slem_core::montecarlo::{run_iteration, IterationOutput, IterationSettings, SimulationInputs};
use slem_core::raster::Raster;
use slem_core::rusle::{c_factor, erosion, l_factor_with, s_factor_with_threshold, FactorStack};
use slem_core::terrain::{dinf_directions, flow_length_with, slope_aspect};

use crate::ascii::read_grid;
use crate::config::{read_cover_table, RunConfig};

/// The factor grids derived for one catchment.
pub struct Pipeline {
    pub stack: FactorStack,
    /// R·K·L·S·P·St — everything but the cover factor.
    pub base: Raster,
    /// Pre-failure erosion (base × C).
    pub erosion_pre: Raster,
    pub slope: Raster,
    pub aspect: Raster,
    pub flow_length: Raster,
    /// Total valid catchment area (ha) of the erosion grid.
    pub catchment_ha: f64,
}

fn load(path: &Path, what: &str) -> Result<Raster> {
    read_grid(path).with_context(|| format!("loading {what} grid {}", path.display()))
}

/// Build every factor grid the erosion model needs from the configured
/// inputs.
pub fn build_pipeline(config: &RunConfig) -> Result<Pipeline> {
    let dem = load(config.require_path("dem")?, "dem")?;
    let landcover = load(config.require_path("landcover")?, "landcover")?;
    let r = load(config.require_path("r")?, "r factor")?;
    let k = load(config.require_path("k")?, "k factor")?;
    let p = match &config.p {
        Some(path) => Some(load(path, "p factor")?),
        None => None,
    };
    let st = match &config.st {
        Some(path) => Some(load(path, "stoniness factor")?),
        None => None,
    };
    let table = read_cover_table(config.require_path("cover_table")?)?;

    let (slope, aspect) = slope_aspect(&dem)?;
    let flow = dinf_directions(&dem);
    let flow_length = flow_length_with(&flow, dem.header().cellsize, config.flow_length_method)?;

    let s = s_factor_with_threshold(&slope, config.s_threshold_deg)?;
    let l = l_factor_with(&flow_length, &slope, config.length_exponent())?;
    let c = c_factor(&landcover, &table)?;

    let stack = FactorStack::new(r, k, l, s, c, p, st)?;
    let base = stack.base()?;
    let erosion_pre = erosion(&stack)?;
    let catchment_ha = erosion_pre.valid_count() as f64 * erosion_pre.header().cell_area_ha();

    Ok(Pipeline {
        stack,
        base,
        erosion_pre,
        slope,
        aspect,
        flow_length,
        catchment_ha,
    })
}

/// Assemble the read-only simulation inputs from a built pipeline.
pub fn simulation_inputs(config: &RunConfig, pipeline: &Pipeline) -> Result<SimulationInputs> {
    let eligibility = match &config.eligibility {
        Some(path) => Some(load(path, "eligibility mask")?),
        None => None,
    };
    SimulationInputs::new(
        pipeline.base.clone(),
        pipeline.stack.c.clone(),
        eligibility.as_ref(),
    )
    .map_err(anyhow::Error::from)
}

/// Per-iteration settings from the configuration. The minimum sampleable
/// area is one cell (the rasterization floor).
pub fn iteration_settings(
    config: &RunConfig,
    inputs: &SimulationInputs,
) -> Result<IterationSettings> {
    let settings = IterationSettings {
        params: config.params()?,
        n_landslides: config
            .n_landslides
            .context("n_landslides is required (--n-landslides)")?,
        poisson_counts: config.poisson_landslides,
        c_bare: config.c_bare,
        bare_min: config.bare_min,
        min_area_km2: inputs.eligible.cell_area_km2(),
        max_area_km2: config.max_area_km2,
    };
    settings.validate()?;
    Ok(settings)
}

/// Run all iterations, optionally on a bounded thread pool. Results come
/// back ordered by run index regardless of scheduling.
pub fn run_simulation(
    inputs: &SimulationInputs,
    settings: &IterationSettings,
    seed: u64,
    n_iterations: u32,
    threads: usize,
) -> Result<Vec<IterationOutput>> {
    let run_all = || -> std::result::Result<Vec<IterationOutput>, slem_core::Error> {
        (0..n_iterations)
            .into_par_iter()
            .map(|i| run_iteration(inputs, settings, seed, i))
            .collect()
    };
    let outputs = if threads == 0 {
        run_all()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building thread pool")?;
        pool.install(run_all)?
    };
    Ok(outputs)
}
