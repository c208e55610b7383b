//! Landslide frequency-area distribution and footprint placement.
//!
//! Landslide areas follow a three-parameter inverse-gamma density: a
//! power-law tail for medium and large areas with an exponential rollover
//! for small ones. Sampling is exact through the transformation
//! `A = s + a / G` with `G` a unit-scale gamma variate of shape `rho`;
//! no tabulated inversion is involved.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::fmath;
use crate::gamma::{ln_gamma, reg_upper};
use crate::raster::Raster;

/// Parameters of the inverse-gamma frequency-area density.
///
/// `rho` controls the power-law decay for large areas, `a` (km²) positions
/// the density maximum, and `s` (km²) fits the exponential rollover for
/// small areas (`s` is typically negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaParams {
    pub rho: f64,
    pub a: f64,
    pub s: f64,
}

impl InverseGammaParams {
    /// The Malamud et al. fit reused across inventories:
    /// ρ = 1.4, a = 1.28×10⁻³ km², s = −1.32×10⁻⁴ km².
    pub const MALAMUD: InverseGammaParams = InverseGammaParams {
        rho: 1.4,
        a: 1.28e-3,
        s: -1.32e-4,
    };

    pub fn new(rho: f64, a: f64, s: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Config(format!("a must be positive, got {a}")));
        }
        if !s.is_finite() {
            return Err(Error::Config(format!("s must be finite, got {s}")));
        }
        let params = InverseGammaParams { rho, a, s };
        if !(params.mode() > 0.0) {
            return Err(Error::Config(format!(
                "mode s + a/(rho+1) = {} must be positive",
                params.mode()
            )));
        }
        Ok(params)
    }

    /// Area of maximum probability density: `s + a / (rho + 1)`.
    pub fn mode(&self) -> f64 {
        self.s + self.a / (self.rho + 1.0)
    }

    /// Mean area `s + a / (rho - 1)`, defined only for `rho > 1`.
    pub fn mean(&self) -> Option<f64> {
        (self.rho > 1.0).then(|| self.s + self.a / (self.rho - 1.0))
    }

    /// Probability density (km⁻²) at `area` (km²); defined for `area > s`.
    pub fn pdf(&self, area: f64) -> Result<f64> {
        let t = self.arg(area)?;
        // (1 / (a Γ(ρ))) · t^(ρ+1) · exp(−t), evaluated in log space so the
        // far tail underflows gracefully instead of producing inf · 0.
        let log_p = -fmath::ln(self.a) - ln_gamma(self.rho) + (self.rho + 1.0) * fmath::ln(t) - t;
        Ok(fmath::exp(log_p))
    }

    /// Cumulative distribution: the regularized upper incomplete gamma
    /// `Q(rho, a / (area - s))`.
    pub fn cdf(&self, area: f64) -> Result<f64> {
        let t = self.arg(area)?;
        reg_upper(self.rho, t)
    }

    fn arg(&self, area: f64) -> Result<f64> {
        if !(area > self.s) {
            return Err(Error::Domain(format!(
                "area {} outside distribution support (> {})",
                area, self.s
            )));
        }
        Ok(self.a / (area - self.s))
    }
}

impl Default for InverseGammaParams {
    fn default() -> Self {
        InverseGammaParams::MALAMUD
    }
}

/// Contiguous landslide-area classes: strictly increasing edges, class `h`
/// spanning `[edges[h], edges[h+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    edges: Vec<f64>,
}

impl ClassPartition {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Partition(format!(
                "need at least 2 edges, got {}",
                edges.len()
            )));
        }
        for w in edges.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Partition(format!(
                    "edges must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(ClassPartition { edges })
    }

    /// Log-spaced edges from `lo` to `hi` (km²) with `classes` classes.
    pub fn log_spaced(lo: f64, hi: f64, classes: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Partition(format!(
                "need 0 < lo < hi, got lo = {lo}, hi = {hi}"
            )));
        }
        if classes == 0 {
            return Err(Error::Partition("need at least one class".into()));
        }
        let (llo, lhi) = (fmath::log10(lo), fmath::log10(hi));
        let edges = (0..=classes)
            .map(|i| fmath::powf(10.0, llo + (lhi - llo) * i as f64 / classes as f64))
            .collect();
        ClassPartition::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn class_count(&self) -> usize {
        self.edges.len() - 1
    }
}

/// Expected number of landslides per class: `n_total · (F(A_{h+1}) − F(A_h))`.
pub fn class_counts(
    params: &InverseGammaParams,
    partition: &ClassPartition,
    n_total: u64,
) -> Result<Vec<f64>> {
    if n_total == 0 {
        return Err(Error::Config("n_total must be positive".into()));
    }
    let edges = partition.edges();
    if !(edges[0] > params.s) {
        return Err(Error::Partition(format!(
            "lowest edge {} must exceed the support bound s = {}",
            edges[0], params.s
        )));
    }
    let cdfs: Vec<f64> = edges
        .iter()
        .map(|&e| params.cdf(e))
        .collect::<Result<_>>()?;
    Ok(cdfs
        .windows(2)
        .map(|w| n_total as f64 * (w[1] - w[0]))
        .collect())
}

/// Exact area sampler with rejection bounds.
///
/// Samples `A = s + a / G`, redrawing until `A` lies in
/// `[min_area, max_area]`. The lower bound is the rasterization floor (one
/// cell area); the upper bound keeps draws placeable on a finite catchment.
#[derive(Debug, Clone)]
pub struct AreaSampler {
    params: InverseGammaParams,
    gamma: Gamma<f64>,
    min_area: f64,
    max_area: f64,
}

/// Rejection attempts before the sampler reports a configuration problem.
const MAX_SAMPLE_ATTEMPTS: u32 = 100_000;

impl AreaSampler {
    pub fn new(params: InverseGammaParams, min_area: f64, max_area: f64) -> Result<Self> {
        if !(min_area > params.s) || !(max_area > min_area) {
            return Err(Error::Config(format!(
                "need s < min_area < max_area, got s = {}, min = {min_area}, max = {max_area}",
                params.s
            )));
        }
        let mass = params.cdf(max_area)? - params.cdf(min_area)?;
        if !(mass > 1e-9) {
            return Err(Error::Config(format!(
                "truncation window [{min_area}, {max_area}] km² holds negligible probability mass ({mass:e})"
            )));
        }
        let gamma = Gamma::new(params.rho, 1.0)
            .map_err(|e| Error::Config(format!("gamma sampler: {e}")))?;
        Ok(AreaSampler {
            params,
            gamma,
            min_area,
            max_area,
        })
    }

    pub fn min_area(&self) -> f64 {
        self.min_area
    }

    pub fn max_area(&self) -> f64 {
        self.max_area
    }

    pub fn params(&self) -> &InverseGammaParams {
        &self.params
    }

    /// CDF of the truncated law the sampler actually draws from.
    pub fn truncated_cdf(&self, area: f64) -> Result<f64> {
        let lo = self.params.cdf(self.min_area)?;
        let hi = self.params.cdf(self.max_area)?;
        let a = area.clamp(self.min_area, self.max_area);
        Ok((self.params.cdf(a)? - lo) / (hi - lo))
    }

    /// Draw one landslide area (km²).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let g: f64 = self.gamma.sample(rng);
            if g <= 0.0 {
                continue;
            }
            let area = self.params.s + self.params.a / g;
            if area >= self.min_area && area <= self.max_area {
                return Ok(area);
            }
        }
        Err(Error::Sampling(format!(
            "no draw within [{}, {}] km² after {} attempts",
            self.min_area, self.max_area, MAX_SAMPLE_ATTEMPTS
        )))
    }
}

/// The cells a landslide may occupy, with O(1) uniform centroid draws.
#[derive(Debug, Clone)]
pub struct EligibleCells {
    nrows: usize,
    ncols: usize,
    cellsize: f64,
    flags: Vec<bool>,
    indices: Vec<usize>,
}

impl EligibleCells {
    /// Every valid cell of `raster` is eligible.
    pub fn from_valid_cells(raster: &Raster) -> Self {
        Self::build(raster, |_| true)
    }

    /// Valid cells with value > 0.5 are eligible (binary mask grids).
    pub fn from_mask_raster(raster: &Raster) -> Self {
        Self::build(raster, |v| v > 0.5)
    }

    fn build<F: Fn(f64) -> bool>(raster: &Raster, keep: F) -> Self {
        let n = raster.header().cells();
        let mut flags = Vec::with_capacity(n);
        let mut indices = Vec::new();
        for i in 0..n {
            let eligible = raster.is_valid(i) && keep(raster.value(i));
            flags.push(eligible);
            if eligible {
                indices.push(i);
            }
        }
        EligibleCells {
            nrows: raster.nrows(),
            ncols: raster.ncols(),
            cellsize: raster.header().cellsize,
            flags,
            indices,
        }
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn cell_area_km2(&self) -> f64 {
        self.cellsize * self.cellsize / 1.0e6
    }

    pub fn cell_area_ha(&self) -> f64 {
        self.cellsize * self.cellsize / 1.0e4
    }

    #[inline]
    fn contains(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.ncols + col]
    }
}

/// One sampled landslide: its exact area, the cell its centroid fell on,
/// the rasterized footprint, and the per-cell bare-soil fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct LandslideEvent {
    pub area_km2: f64,
    /// Flat index of the centroid cell.
    pub centroid: usize,
    /// Flat indices of footprint cells, nearest-first from the centroid.
    pub footprint: Vec<usize>,
    /// Bare-soil fraction per footprint cell, parallel to `footprint`.
    pub bare_fraction: Vec<f64>,
}

/// Place one landslide of the given area on the eligible region.
///
/// The centroid is uniform over eligible cells. The footprint is the
/// `round(area / cell_area)` eligible cells nearest the centroid (Euclidean
/// distance between cell centers, ties broken by row then column), a
/// discretized disk on an open plane. Bare-soil fractions are uniform in
/// `[bare_min, 1]` per footprint cell.
pub fn place_landslide<R: Rng + ?Sized>(
    area_km2: f64,
    eligible: &EligibleCells,
    bare_min: f64,
    rng: &mut R,
) -> Result<LandslideEvent> {
    if !(0.0..=1.0).contains(&bare_min) {
        return Err(Error::Config(format!(
            "bare_min must lie in [0, 1], got {bare_min}"
        )));
    }
    if eligible.count() == 0 {
        return Err(Error::Placement("no eligible cells".into()));
    }
    let cell_area = eligible.cell_area_km2();
    let n_cells = fmath::round(area_km2 / cell_area).max(1.0) as usize;
    if n_cells > eligible.count() {
        return Err(Error::Placement(format!(
            "landslide of {area_km2} km² needs {n_cells} cells but only {} are eligible",
            eligible.count()
        )));
    }

    let centroid = eligible.indices[rng.random_range(0..eligible.count())];
    let footprint = nearest_eligible(eligible, centroid, n_cells);
    debug_assert_eq!(footprint.len(), n_cells);

    let bare_fraction = (0..n_cells)
        .map(|_| rng.random_range(bare_min..=1.0))
        .collect();

    Ok(LandslideEvent {
        area_km2,
        centroid,
        footprint,
        bare_fraction,
    })
}

/// The `n` eligible cells nearest `centroid`, by (squared distance, row,
/// col). Scans outward in Chebyshev rings; ring `k` cannot contain a cell
/// closer than distance `k`, so the scan stops as soon as the next ring
/// cannot displace the current n-th candidate.
fn nearest_eligible(eligible: &EligibleCells, centroid: usize, n: usize) -> Vec<usize> {
    let r0 = (centroid / eligible.ncols) as isize;
    let c0 = (centroid % eligible.ncols) as isize;
    let max_ring = eligible.nrows.max(eligible.ncols) as isize;

    // (squared cell distance, row, col); tuple order gives the tie-break.
    let mut candidates: Vec<(u64, usize, usize)> = Vec::with_capacity(2 * n);
    let push = |row: isize, col: isize, candidates: &mut Vec<(u64, usize, usize)>| {
        if row < 0 || col < 0 || row >= eligible.nrows as isize || col >= eligible.ncols as isize {
            return;
        }
        let (row, col) = (row as usize, col as usize);
        if eligible.contains(row, col) {
            let dr = row as i64 - r0 as i64;
            let dc = col as i64 - c0 as i64;
            candidates.push(((dr * dr + dc * dc) as u64, row, col));
        }
    };

    let mut ring = 0isize;
    loop {
        if ring == 0 {
            push(r0, c0, &mut candidates);
        } else {
            for dc in -ring..=ring {
                push(r0 - ring, c0 + dc, &mut candidates);
                push(r0 + ring, c0 + dc, &mut candidates);
            }
            for dr in (-ring + 1)..ring {
                push(r0 + dr, c0 - ring, &mut candidates);
                push(r0 + dr, c0 + ring, &mut candidates);
            }
        }
        if candidates.len() >= n {
            let nth = {
                let (_, nth, _) = candidates.select_nth_unstable(n - 1);
                nth.0
            };
            // All cells at distance² ≤ nth live in rings ≤ floor(sqrt(nth)).
            let next_ring = (ring + 1) as u64;
            if next_ring * next_ring > nth {
                break;
            }
        }
        ring += 1;
        if ring > max_ring {
            break;
        }
    }

    candidates.sort_unstable();
    candidates.truncate(n);
    candidates
        .into_iter()
        .map(|(_, row, col)| row * eligible.ncols + col)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GridHeader, Raster};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn defaults() -> InverseGammaParams {
        InverseGammaParams::MALAMUD
    }

    #[test]
    fn params_validated() {
        assert!(InverseGammaParams::new(0.0, 1e-3, 0.0).is_err());
        assert!(InverseGammaParams::new(1.4, 0.0, 0.0).is_err());
        // Mode must be positive: s so negative the peak goes nonpositive.
        assert!(InverseGammaParams::new(1.4, 1.28e-3, -1.0).is_err());
        assert!(InverseGammaParams::new(1.4, 1.28e-3, -1.32e-4).is_ok());
    }

    #[test]
    fn mode_and_mean_closed_forms() {
        let p = defaults();
        assert_relative_eq!(p.mode(), 4.013_333_333_333_333_5e-4, max_relative = 1e-12);
        assert_relative_eq!(p.mean().unwrap(), 3.068e-3, max_relative = 1e-12);
        assert!(InverseGammaParams::new(0.9, 1e-3, 1e-5)
            .unwrap()
            .mean()
            .is_none());
    }

    #[test]
    fn pdf_at_mode_matches_scalar_oracle() {
        // At the mode, a/(A-s) = rho+1; frozen value from direct evaluation
        // of (1/(a Γ(1.4))) · 2.4^2.4 · e^(−2.4).
        let p = defaults();
        let pdf = p.pdf(p.mode()).unwrap();
        assert_relative_eq!(pdf, 653.036_540_026_43, max_relative = 1e-10);
    }

    #[test]
    fn pdf_vanishes_at_support_edge() {
        let p = defaults();
        let near = p.s + 1e-9;
        assert!(p.pdf(near).unwrap() < 1e-100);
        assert!(p.pdf(p.s).is_err());
        assert!(p.pdf(p.s - 1.0).is_err());
    }

    #[test]
    fn cdf_limits_and_monotonicity() {
        let p = defaults();
        assert!(p.cdf(p.s + 1e-12).unwrap() < 1e-100);
        assert!(p.cdf(1e9).unwrap() > 1.0 - 1e-9);
        let mut last = 0.0;
        for i in 1..200 {
            let area = p.s + 1e-6 * fmath::powf(1.12, i as f64);
            let c = p.cdf(area).unwrap();
            assert!(c >= last, "cdf not monotone at {area}");
            last = c;
        }
        // Frozen from the incomplete-gamma oracle.
        assert_relative_eq!(
            p.cdf(p.mode()).unwrap(),
            0.165_376_637_397_075_06,
            max_relative = 1e-11
        );
    }

    #[test]
    fn class_counts_total_probability() {
        let p = defaults();
        let whole = ClassPartition::new(alloc::vec![p.s + 1e-15, 1e12]).unwrap();
        let counts = class_counts(&p, &whole, 500).unwrap();
        assert_relative_eq!(counts[0], 500.0, max_relative = 1e-9);
    }

    #[test]
    fn class_counts_example_class() {
        // Class [3e-4, 5e-4] km² holds ≈ 12.87% of the mass (quadrature
        // oracle in the integration tests re-derives this).
        let p = defaults();
        let part = ClassPartition::new(alloc::vec![3e-4, 5e-4]).unwrap();
        let counts = class_counts(&p, &part, 1000).unwrap();
        assert_relative_eq!(counts[0], 128.717_380_628_115_05, max_relative = 1e-10);
    }

    #[test]
    fn class_counts_additive_under_refinement() {
        let p = defaults();
        let coarse = ClassPartition::new(alloc::vec![2e-4, 8e-4]).unwrap();
        let fine = ClassPartition::new(alloc::vec![2e-4, 3.7e-4, 8e-4]).unwrap();
        let c = class_counts(&p, &coarse, 1234).unwrap();
        let f = class_counts(&p, &fine, 1234).unwrap();
        assert_relative_eq!(c[0], f[0] + f[1], epsilon = 1e-12);
    }

    #[test]
    fn partition_rejects_disorder() {
        assert!(ClassPartition::new(alloc::vec![1e-4]).is_err());
        assert!(ClassPartition::new(alloc::vec![1e-4, 1e-4]).is_err());
        assert!(ClassPartition::new(alloc::vec![2e-4, 1e-4]).is_err());
        let p = defaults();
        let below = ClassPartition::new(alloc::vec![p.s - 1e-6, 1e-4]).unwrap();
        assert!(class_counts(&p, &below, 10).is_err());
    }

    #[test]
    fn sampler_respects_bounds_and_seed() {
        let p = defaults();
        let sampler = AreaSampler::new(p, 2.5e-5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..2000)
            .map(|_| sampler.sample(&mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|&a| (2.5e-5..=1.0).contains(&a)));
        assert!(draws.iter().all(|&a| a > p.s));

        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let again: Vec<f64> = (0..2000)
            .map(|_| sampler.sample(&mut rng2).unwrap())
            .collect();
        assert_eq!(draws, again);
    }

    #[test]
    fn sampler_rejects_empty_window() {
        let p = defaults();
        assert!(AreaSampler::new(p, 1.0, 0.5).is_err());
        // A window in the far tail holds ~no mass.
        assert!(AreaSampler::new(p, 1e8, 1e9).is_err());
    }

    fn open_plane(ncols: usize, nrows: usize) -> EligibleCells {
        let h = GridHeader::new(ncols, nrows, 0.0, 0.0, 5.0, -9999.0).unwrap();
        EligibleCells::from_valid_cells(&Raster::filled(h, 1.0).unwrap())
    }

    #[test]
    fn single_cell_footprint_is_centroid() {
        let elig = open_plane(21, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ev = place_landslide(elig.cell_area_km2(), &elig, 0.2, &mut rng).unwrap();
        assert_eq!(ev.footprint.len(), 1);
        assert_eq!(ev.footprint[0], ev.centroid);
    }

    #[test]
    fn nine_cell_footprint_is_compact_disk() {
        let elig = open_plane(21, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let area = 9.0 * elig.cell_area_km2();
        let ev = place_landslide(area, &elig, 0.2, &mut rng).unwrap();
        assert_eq!(ev.footprint.len(), 9);
        // Nearest 9 cells on an open plane: the centroid plus its 8-ring,
        // i.e. a 3x3 block (4 cardinals at d²=1 then 4 diagonals at d²=2).
        let (r0, c0) = (ev.centroid / 21, ev.centroid % 21);
        for &cell in &ev.footprint {
            let (r, c) = (cell / 21, cell % 21);
            assert!(r.abs_diff(r0) <= 1 && c.abs_diff(c0) <= 1);
        }
    }

    #[test]
    fn footprint_area_within_one_cell() {
        let elig = open_plane(101, 101);
        let sampler = AreaSampler::new(defaults(), elig.cell_area_km2(), 0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let area = sampler.sample(&mut rng).unwrap();
            let ev = place_landslide(area, &elig, 0.2, &mut rng).unwrap();
            let footprint_area = ev.footprint.len() as f64 * elig.cell_area_km2();
            assert!(
                (footprint_area - area).abs() <= elig.cell_area_km2(),
                "footprint {footprint_area} vs area {area}"
            );
            assert!(ev.bare_fraction.iter().all(|&f| (0.2..=1.0).contains(&f)));
        }
    }

    #[test]
    fn oversized_area_rejected() {
        let elig = open_plane(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let too_big = 17.0 * elig.cell_area_km2();
        assert!(matches!(
            place_landslide(too_big, &elig, 0.2, &mut rng),
            Err(Error::Placement(_))
        ));
    }

    #[test]
    fn footprint_avoids_ineligible_cells() {
        // Mask out a column; footprints must flow around it.
        let h = GridHeader::new(9, 9, 0.0, 0.0, 5.0, -9999.0).unwrap();
        let mut r = Raster::filled(h, 1.0).unwrap();
        for row in 0..9 {
            r.set_nodata(row, 4);
        }
        let elig = EligibleCells::from_valid_cells(&r);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let ev = place_landslide(12.0 * elig.cell_area_km2(), &elig, 0.2, &mut rng).unwrap();
            assert_eq!(ev.footprint.len(), 12);
            assert!(ev.footprint.iter().all(|&i| i % 9 != 4));
        }
    }

    #[test]
    fn tie_break_is_row_col_order() {
        // Area of 2 cells: the second cell is the tie at distance 1 — the
        // north neighbor (smaller row) must win over west/east/south.
        let elig = open_plane(5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        loop {
            let ev = place_landslide(2.0 * elig.cell_area_km2(), &elig, 0.2, &mut rng).unwrap();
            let (r0, c0) = (ev.centroid / 5, ev.centroid % 5);
            if (1..4).contains(&r0) && (1..4).contains(&c0) {
                assert_eq!(ev.footprint[0], ev.centroid);
                assert_eq!(ev.footprint[1], (r0 - 1) * 5 + c0);
                break;
            }
        }
    }
}
