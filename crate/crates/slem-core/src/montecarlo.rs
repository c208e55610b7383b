//! One Monte Carlo iteration of the coupled landslide / erosion experiment.
//!
//! Topography is frozen: landslides change only the cover-management
//! factor, so per-iteration erosion reduces to patching C on footprint
//! cells. With erosion defined as `base × C` (base = R·K·L·S·P·St), the
//! patched cells are bit-identical to a full recomputation and the totals
//! update in O(footprint) instead of O(grid).
//!
//! Reproducibility: iteration `i` draws from the ChaCha substream
//! `(master seed, stream = i)`, so results are a pure function of
//! `(config, run index)` and independent of execution order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::fmath;
use crate::landslide::{
    place_landslide, AreaSampler, EligibleCells, InverseGammaParams, LandslideEvent,
};
use crate::raster::Raster;

/// Substream used by bootstrap resampling. Iteration indices are `u32`, so
/// the top of the `u64` stream space can never collide with them.
pub const BOOTSTRAP_STREAM: u64 = u64::MAX - 1;
/// Substream used by the density-envelope bootstrap.
pub const DENSITY_STREAM: u64 = u64::MAX - 2;

/// The deterministic RNG for a given (seed, substream) pair.
pub fn substream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-iteration knobs, independent of the loaded grids.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSettings {
    pub params: InverseGammaParams,
    /// Landslides per iteration (the Poisson mean when `poisson_counts`).
    pub n_landslides: u64,
    /// Draw the per-iteration count from a Poisson law instead of fixing it.
    pub poisson_counts: bool,
    /// Cover-management factor of fully bare soil.
    pub c_bare: f64,
    /// Lower bound of the per-cell bare-soil fraction.
    pub bare_min: f64,
    /// Smallest sampleable area (km²); one cell area, the rasterization floor.
    pub min_area_km2: f64,
    /// Largest sampleable area (km²).
    pub max_area_km2: f64,
}

impl IterationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_landslides == 0 {
            return Err(Error::Config("n_landslides must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.c_bare) {
            return Err(Error::Config(alloc::format!(
                "c_bare must lie in [0, 1], got {}",
                self.c_bare
            )));
        }
        if !(0.0..=1.0).contains(&self.bare_min) {
            return Err(Error::Config(alloc::format!(
                "bare_min must lie in [0, 1], got {}",
                self.bare_min
            )));
        }
        // Sampler bounds are validated by AreaSampler::new.
        Ok(())
    }
}

/// Grids and constants shared read-only by every iteration.
#[derive(Debug, Clone)]
pub struct SimulationInputs {
    /// R·K·L·S·P·St — everything except the cover factor.
    pub base: Raster,
    /// Pre-failure cover-management factor.
    pub c_pre: Raster,
    /// Cells landslides may occupy.
    pub eligible: EligibleCells,
    /// Catchment-wide pre-failure soil loss (t yr⁻¹), computed once.
    pub pre_total_t: f64,
}

impl SimulationInputs {
    /// Assemble from the precomputed base and cover grids. Eligibility
    /// defaults to every cell where erosion is computable (base and C both
    /// valid); pass `eligibility` to restrict it further.
    pub fn new(base: Raster, c_pre: Raster, eligibility: Option<&Raster>) -> Result<Self> {
        base.validate_nonnegative("erosion base")?;
        c_pre.validate_proportion("c factor")?;
        let erosion_pre = base.map2(&c_pre, |b, c| b * c)?;
        let pre_total_t = erosion_pre.total(base.header().cell_area_ha())?;
        let eligible = match eligibility {
            Some(mask) => {
                if !mask.header().same_grid(base.header()) {
                    return Err(Error::ShapeMismatch(
                        "eligibility mask does not share the factor grid geometry".into(),
                    ));
                }
                // Intersect the mask with erosion validity so footprints
                // always land on computable cells.
                let gated = mask.map2(&erosion_pre, |m, _| m)?;
                EligibleCells::from_mask_raster(&gated)
            }
            None => EligibleCells::from_valid_cells(&erosion_pre),
        };
        if eligible.count() == 0 {
            return Err(Error::Placement(
                "no eligible cells in the catchment".into(),
            ));
        }
        Ok(SimulationInputs {
            base,
            c_pre,
            eligible,
            pre_total_t,
        })
    }
}

/// Totals of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationResult {
    pub run_index: u32,
    /// Catchment-wide pre-failure soil loss (t yr⁻¹).
    pub pre_total_t: f64,
    /// Catchment-wide post-failure soil loss (t yr⁻¹).
    pub post_total_t: f64,
    /// Area of the union of landslide footprints (ha).
    pub union_area_ha: f64,
    /// Pre-failure soil loss restricted to footprint cells (t yr⁻¹).
    pub footprint_pre_t: f64,
    /// Post-failure soil loss restricted to footprint cells (t yr⁻¹).
    pub footprint_post_t: f64,
}

/// One iteration's totals plus the sampled areas (for density binning).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutput {
    pub result: IterationResult,
    pub areas_km2: Vec<f64>,
}

/// Max bare-soil fraction per cell across overlapping footprints: the most
/// severe disturbance wins.
fn union_bare_fractions(events: &[LandslideEvent]) -> BTreeMap<usize, f64> {
    let mut union: BTreeMap<usize, f64> = BTreeMap::new();
    for event in events {
        for (&cell, &f) in event.footprint.iter().zip(event.bare_fraction.iter()) {
            union
                .entry(cell)
                .and_modify(|existing| {
                    if f > *existing {
                        *existing = f;
                    }
                })
                .or_insert(f);
        }
    }
    union
}

/// Post-failure cover factor on one cell: the pre-failure value pulled
/// toward `c_bare` by the bare fraction. Written as `c + f·(c_bare − c)` so
/// `c_bare == c` is exactly the identity and `c_bare ≥ c` can never lower
/// the value, even in floating point.
#[inline]
fn patched_c(c_pre: f64, f: f64, c_bare: f64) -> f64 {
    (c_pre + f * (c_bare - c_pre)).clamp(0.0, 1.0)
}

/// Apply landslide events to a cover-factor grid, returning the patched
/// grid. Footprint cells must be valid in `c_pre`.
pub fn patch_c_factor(c_pre: &Raster, events: &[LandslideEvent], c_bare: f64) -> Result<Raster> {
    let mut out = c_pre.clone();
    for (&cell, &f) in union_bare_fractions(events).iter() {
        if !c_pre.is_valid(cell) {
            let (row, col) = c_pre.row_col(cell);
            return Err(Error::Placement(alloc::format!(
                "footprint cell ({row}, {col}) is invalid in the cover grid"
            )));
        }
        let (row, col) = c_pre.row_col(cell);
        out.set(row, col, patched_c(c_pre.value(cell), f, c_bare));
    }
    Ok(out)
}

/// Run one Monte Carlo iteration: sample landslides, patch the cover
/// factor, and update the erosion totals incrementally.
///
/// Deterministic given `(seed, run_index)`; independent iterations may run
/// concurrently.
pub fn run_iteration(
    inputs: &SimulationInputs,
    settings: &IterationSettings,
    seed: u64,
    run_index: u32,
) -> Result<IterationOutput> {
    run_iteration_inner(inputs, settings, seed, run_index).map_err(|e| e.in_iteration(run_index))
}

fn run_iteration_inner(
    inputs: &SimulationInputs,
    settings: &IterationSettings,
    seed: u64,
    run_index: u32,
) -> Result<IterationOutput> {
    settings.validate()?;
    let mut rng = substream_rng(seed, run_index as u64);
    let sampler = AreaSampler::new(
        settings.params,
        settings.min_area_km2,
        settings.max_area_km2,
    )?;

    let count = if settings.poisson_counts {
        let poisson = Poisson::new(settings.n_landslides as f64)
            .map_err(|e| Error::Config(alloc::format!("poisson counts: {e}")))?;
        poisson.sample(&mut rng) as u64
    } else {
        settings.n_landslides
    };

    let mut events = Vec::with_capacity(count as usize);
    let mut areas = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let area = sampler.sample(&mut rng)?;
        let event = place_landslide(area, &inputs.eligible, settings.bare_min, &mut rng)?;
        areas.push(area);
        events.push(event);
    }

    let cell_area_ha = inputs.base.header().cell_area_ha();
    let union = union_bare_fractions(&events);

    // Footprint totals and the (nonnegative when c_bare ≥ C_pre) delta,
    // accumulated in ascending cell order for determinism.
    let mut delta = 0.0;
    let mut pre_terms = Vec::with_capacity(union.len());
    for (&cell, &f) in union.iter() {
        if !inputs.c_pre.is_valid(cell) || !inputs.base.is_valid(cell) {
            let (row, col) = inputs.c_pre.row_col(cell);
            return Err(Error::Placement(alloc::format!(
                "footprint cell ({row}, {col}) is invalid in the factor grids"
            )));
        }
        let base = inputs.base.value(cell);
        let c0 = inputs.c_pre.value(cell);
        let c1 = patched_c(c0, f, settings.c_bare);
        let e0 = base * c0 * cell_area_ha;
        let e1 = base * c1 * cell_area_ha;
        pre_terms.push(e0);
        delta += e1 - e0;
    }
    let footprint_pre = fmath::compensated_sum(pre_terms);

    let result = IterationResult {
        run_index,
        pre_total_t: inputs.pre_total_t,
        post_total_t: inputs.pre_total_t + delta,
        union_area_ha: union.len() as f64 * cell_area_ha,
        footprint_pre_t: footprint_pre,
        footprint_post_t: footprint_pre + delta,
    };
    Ok(IterationOutput {
        result,
        areas_km2: areas,
    })
}

/// Run `n_iterations` sequentially. The parallel driver in the companion
/// crate produces the identical result vector; both assemble by run index.
pub fn run_simulation_serial(
    inputs: &SimulationInputs,
    settings: &IterationSettings,
    seed: u64,
    n_iterations: u32,
) -> Result<Vec<IterationOutput>> {
    (0..n_iterations)
        .map(|i| run_iteration(inputs, settings, seed, i))
        .collect()
}

/// Mean and median of the pre- and post-failure totals over runs: the
/// Monte Carlo estimator and its outlier-robust companion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSummary {
    pub pre_mean_t: f64,
    pub pre_median_t: f64,
    pub post_mean_t: f64,
    pub post_median_t: f64,
}

pub fn summarize(results: &[IterationResult]) -> Result<SimulationSummary> {
    if results.is_empty() {
        return Err(Error::Domain("no iteration results to summarize".into()));
    }
    let pre: Vec<f64> = results.iter().map(|r| r.pre_total_t).collect();
    let post: Vec<f64> = results.iter().map(|r| r.post_total_t).collect();
    Ok(SimulationSummary {
        pre_mean_t: crate::stats::mean(&pre),
        pre_median_t: crate::stats::median(&pre),
        post_mean_t: crate::stats::mean(&post),
        post_median_t: crate::stats::median(&post),
    })
}
