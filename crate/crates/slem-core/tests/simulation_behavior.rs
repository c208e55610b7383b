//! Behavior of the coupled Monte Carlo experiment on small synthetic
//! catchments: estimator convergence, execution-order invariance, and the
//! analytic mixing expectation for the footprint erosion ratio.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slem_core::landslide::InverseGammaParams;
use slem_core::montecarlo::{
    run_iteration, run_simulation_serial, summarize, IterationSettings, SimulationInputs,
};
use slem_core::raster::{GridHeader, Raster};
use slem_core::stats::{bootstrap, Statistic};

fn catchment(ncols: usize, nrows: usize, c_pre: f64) -> SimulationInputs {
    let h = GridHeader::new(ncols, nrows, 0.0, 0.0, 5.0, -9999.0).unwrap();
    SimulationInputs::new(
        Raster::filled(h, 12.0).unwrap(),
        Raster::filled(h, c_pre).unwrap(),
        None,
    )
    .unwrap()
}

fn settings(inputs: &SimulationInputs, n_landslides: u64) -> IterationSettings {
    IterationSettings {
        params: InverseGammaParams::MALAMUD,
        n_landslides,
        poisson_counts: false,
        c_bare: 1.0,
        bare_min: 0.2,
        min_area_km2: inputs.eligible.cell_area_km2(),
        max_area_km2: 0.05,
    }
}

#[test]
fn results_independent_of_execution_order() {
    let inputs = catchment(80, 80, 0.2);
    let s = settings(&inputs, 10);
    let in_order = run_simulation_serial(&inputs, &s, 55, 16).unwrap();
    // Recompute the same runs shuffled; each must reproduce its slot.
    for &i in &[13u32, 2, 9, 0, 15, 7, 4, 11, 1, 14, 3, 10, 5, 12, 8, 6] {
        let redo = run_iteration(&inputs, &s, 55, i).unwrap();
        assert_eq!(redo, in_order[i as usize]);
    }
}

#[test]
fn footprint_ratio_matches_mixing_expectation() {
    // Uniform C_pre = 0.2 and c_bare = 1 with E[f] = 0.6 gives an expected
    // footprint post/pre erosion ratio of (0.6 + 0.4·0.2)/0.2 = 3.4.
    let inputs = catchment(100, 100, 0.2);
    let s = settings(&inputs, 20);
    let outputs = run_simulation_serial(&inputs, &s, 2024, 1000).unwrap();
    let ratios: Vec<f64> = outputs
        .iter()
        .map(|o| o.result.footprint_post_t / o.result.footprint_pre_t)
        .collect();
    let mean_ratio = slem_core::stats::mean(&ratios);
    assert!(
        (mean_ratio - 3.4).abs() < 0.1,
        "mean footprint ratio {mean_ratio} not within 3.4 ± 0.1"
    );
}

#[test]
fn median_stable_when_iterations_double() {
    let inputs = catchment(100, 100, 0.2);
    let s = settings(&inputs, 15);
    let half = run_simulation_serial(&inputs, &s, 99, 500).unwrap();
    let full = run_simulation_serial(&inputs, &s, 99, 1000).unwrap();
    let median_of = |outs: &[slem_core::montecarlo::IterationOutput]| {
        let post: Vec<f64> = outs.iter().map(|o| o.result.post_total_t).collect();
        slem_core::stats::median(&post)
    };
    let m_half = median_of(&half);
    let m_full = median_of(&full);
    let rel = ((m_full - m_half) / m_full).abs();
    assert!(
        rel < 0.01,
        "median moved {rel:.4} when doubling iterations ({m_half} vs {m_full})"
    );
}

#[test]
fn bootstrap_interval_shrinks_with_more_iterations() {
    // The 90% bootstrap interval of the mean post-failure total must be
    // narrower at n = 1000 than at n = 250.
    let inputs = catchment(100, 100, 0.2);
    let s = settings(&inputs, 15);
    let outputs = run_simulation_serial(&inputs, &s, 7, 1000).unwrap();
    let post: Vec<f64> = outputs.iter().map(|o| o.result.post_total_t).collect();

    let half_width = |values: &[f64], seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = bootstrap(values, Statistic::Mean, 2000, &mut rng).unwrap();
        0.5 * (table.quantiles[4] - table.quantiles[0])
    };
    let wide = half_width(&post[..250], 1);
    let narrow = half_width(&post, 1);
    assert!(
        narrow < wide,
        "interval did not shrink: n=250 → {wide}, n=1000 → {narrow}"
    );
}

#[test]
fn mean_estimator_equals_constant_for_degenerate_field() {
    // With c_bare == C_pre the integrand is constant across runs, so the
    // run-average estimator equals that constant for any n.
    let inputs = catchment(60, 60, 0.3);
    let mut s = settings(&inputs, 8);
    s.c_bare = 0.3;
    let outputs = run_simulation_serial(&inputs, &s, 4, 50).unwrap();
    let results: Vec<_> = outputs.iter().map(|o| o.result).collect();
    let summary = summarize(&results).unwrap();
    assert_eq!(summary.post_mean_t, inputs.pre_total_t);
    assert_eq!(summary.post_median_t, inputs.pre_total_t);
}

#[test]
fn union_area_counts_overlaps_once() {
    let inputs = catchment(60, 60, 0.2);
    let s = settings(&inputs, 25);
    let out = run_iteration(&inputs, &s, 21, 0).unwrap();
    let sum_of_areas_ha: f64 = out.areas_km2.iter().map(|a| a * 100.0).sum();
    // The union cannot exceed the sum of the individual areas (plus the
    // per-landslide half-cell rounding slack).
    let slack = out.areas_km2.len() as f64 * inputs.eligible.cell_area_km2() * 100.0;
    assert!(out.result.union_area_ha <= sum_of_areas_ha + slack);
    assert!(out.result.union_area_ha > 0.0);
}
