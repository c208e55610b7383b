//! Property tests for the grid algebra, terrain routing and statistics
//! invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slem_core::raster::{GridHeader, Raster};
use slem_core::rusle::{s_moore_burch, s_nearing, S_MERGE_THRESHOLD_DEG};
use slem_core::stats::{bootstrap, density_bins, Statistic};
use slem_core::terrain::{dinf_directions, flow_length, FlowTargets};

fn raster_strategy() -> impl Strategy<Value = Raster> {
    (2usize..8, 2usize..8).prop_flat_map(|(ncols, nrows)| {
        let n = ncols * nrows;
        (
            proptest::collection::vec(0.0f64..100.0, n),
            proptest::collection::vec(proptest::bool::weighted(0.8), n),
        )
            .prop_map(move |(values, mask)| {
                let header = GridHeader::new(ncols, nrows, 0.0, 0.0, 5.0, -9999.0).unwrap();
                Raster::new(header, values, mask).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn map2_mask_is_intersection(a in raster_strategy(), b in raster_strategy()) {
        if a.header().same_grid(b.header()) {
            let out = a.map2(&b, |x, y| x + y).unwrap();
            for i in 0..a.header().cells() {
                prop_assert_eq!(out.is_valid(i), a.is_valid(i) && b.is_valid(i));
            }
        } else {
            prop_assert!(a.map2(&b, |x, y| x + y).is_err());
        }
    }

    #[test]
    fn map2_with_ones_is_identity(a in raster_strategy()) {
        let ones = Raster::filled(*a.header(), 1.0).unwrap();
        let out = a.map2(&ones, |x, y| x * y).unwrap();
        for i in 0..a.header().cells() {
            prop_assert_eq!(out.is_valid(i), a.is_valid(i));
            if out.is_valid(i) {
                prop_assert_eq!(out.value(i), a.value(i));
            }
        }
    }

    #[test]
    fn total_scales_linearly(a in raster_strategy(), k in 0.5f64..4.0) {
        let area = a.header().cell_area_ha();
        let scaled = a.map(|v| k * v);
        let t1 = a.total(area).unwrap();
        let t2 = scaled.total(area).unwrap();
        prop_assert!((t2 - k * t1).abs() <= 1e-9 * t1.abs().max(1.0));
    }

    #[test]
    fn bootstrap_quantiles_monotone(
        values in proptest::collection::vec(-1e3f64..1e3, 1..60),
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for stat in [Statistic::Mean, Statistic::Median, Statistic::Total] {
            let table = bootstrap(&values, stat, 200, &mut rng).unwrap();
            for w in table.quantiles.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn bootstrap_median_within_input_range(
        values in proptest::collection::vec(-1e3f64..1e3, 1..40),
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = bootstrap(&values, Statistic::Median, 300, &mut rng).unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(table.quantiles[0] >= lo);
        prop_assert!(table.quantiles[4] <= hi);
    }

    #[test]
    fn density_mass_stable_under_refinement(
        areas in proptest::collection::vec(1e-5f64..1e-1, 1..200),
        bpd in 1u32..12,
    ) {
        let coarse = density_bins(&areas, areas.len() as u64, bpd).unwrap();
        let fine = density_bins(&areas, areas.len() as u64, 2 * bpd).unwrap();
        prop_assert!((coarse.mass() - fine.mass()).abs() < 1e-12);
        prop_assert!((coarse.mass() - 1.0).abs() < 1e-12);
        let total: u64 = coarse.counts.iter().sum();
        prop_assert_eq!(total, areas.len() as u64);
    }
}

fn random_dem(seed: u64, ncols: usize, nrows: usize) -> Raster {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let header = GridHeader::new(ncols, nrows, 0.0, 0.0, 5.0, -9999.0).unwrap();
    let mut dem = Raster::filled(header, 0.0).unwrap();
    for row in 0..nrows {
        for col in 0..ncols {
            // Tilted base plus noise keeps plenty of drainage structure.
            let z =
                0.4 * (nrows - row) as f64 * 5.0 + 0.1 * col as f64 + rng.random_range(0.0..3.0);
            dem.set(row, col, z);
        }
    }
    dem
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dinf_proportions_convex_on_random_dems(seed in 0u64..5000) {
        let dem = random_dem(seed, 12, 12);
        let field = dinf_directions(&dem);
        for i in 0..dem.header().cells() {
            let mut sum = 0.0;
            for (target, w) in field.outflow(i) {
                prop_assert!((0.0..=1.0).contains(&w));
                prop_assert!(w > 0.0);
                // Positive-weight links always point strictly downslope.
                prop_assert!(dem.value(target) < dem.value(i));
                sum += w;
            }
            if !matches!(field.targets(i), FlowTargets::None) {
                prop_assert_eq!(sum, 1.0);
            }
        }
    }

    #[test]
    fn flow_length_monotone_along_paths(seed in 0u64..5000) {
        let dem = random_dem(seed.wrapping_add(77), 12, 12);
        let field = dinf_directions(&dem);
        let len = flow_length(&field, 5.0).unwrap();
        for i in 0..dem.header().cells() {
            for (target, _) in field.outflow(i) {
                // Longest-path lengths can only grow along a flow link.
                prop_assert!(len.value(target) >= len.value(i));
            }
        }
    }
}

#[test]
fn s_factor_monotone_on_fine_grid() {
    // 0° to 60° in 0.1° steps across the branch switch.
    let mut last = -1.0;
    let mut step = 0;
    loop {
        let deg = step as f64 * 0.1;
        if deg > 60.0 {
            break;
        }
        let st = (deg.to_radians()).sin();
        let s = if deg < S_MERGE_THRESHOLD_DEG {
            s_moore_burch(st)
        } else {
            s_nearing(st)
        };
        assert!(s >= last, "S factor decreased at {deg}°: {s} < {last}");
        last = s;
        step += 1;
    }
}
