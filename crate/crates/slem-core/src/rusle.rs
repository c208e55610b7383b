//! The multiplicative soil-loss model: per-cell erosion
//! `E = R·K·L·S·C·P·St` (t ha⁻¹ yr⁻¹) with the slope-steepness, slope-length
//! and cover factors computed here. R, K, P and St arrive as input grids.

use alloc::collections::BTreeMap;
use alloc::format;

use crate::error::{Error, Result};
use crate::fmath;
use crate::raster::Raster;

/// Slope (degrees) where the steepness factor switches from the Moore-Burch
/// to the Nearing form. The two curves intersect there, which is what makes
/// the merged formula continuous.
pub const S_MERGE_THRESHOLD_DEG: f64 = 12.73;

/// Moore-Burch steepness factor `(sin θ / 0.0896)^1.3`; exact zero limit at
/// θ = 0. Preferred below the merge threshold.
pub fn s_moore_burch(sin_theta: f64) -> f64 {
    fmath::powf(sin_theta / 0.0896, 1.3)
}

/// Nearing steepness factor `−1.5 + 17 / (1 + exp(2.3 − 6.1 sin θ))`;
/// better behaved on steep slopes.
pub fn s_nearing(sin_theta: f64) -> f64 {
    -1.5 + 17.0 / (1.0 + fmath::exp(2.3 - 6.1 * sin_theta))
}

/// Slope-steepness factor with the default merge threshold.
pub fn s_factor(slope: &Raster) -> Result<Raster> {
    s_factor_with_threshold(slope, S_MERGE_THRESHOLD_DEG)
}

/// Slope-steepness factor from a slope grid in radians, merging the
/// Moore-Burch branch (below `threshold_deg`) with the Nearing branch.
pub fn s_factor_with_threshold(slope: &Raster, threshold_deg: f64) -> Result<Raster> {
    let threshold_rad = threshold_deg.to_radians();
    for (i, theta) in slope.valid_cells() {
        if !(theta >= 0.0) {
            let (row, col) = slope.row_col(i);
            return Err(Error::ValueOutOfRange {
                role: "slope",
                row,
                col,
                value: theta,
                lo: 0.0,
                hi: core::f64::consts::FRAC_PI_2,
            });
        }
    }
    Ok(slope.map(|theta| {
        let st = fmath::sin(theta);
        if theta < threshold_rad {
            s_moore_burch(st)
        } else {
            s_nearing(st)
        }
    }))
}

/// Exponent of the slope-length factor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LengthExponent {
    /// Variable exponent `m = β/(1+β)`, `β = (sin θ/0.0896)/(3 sin^0.8 θ + 0.56)`.
    #[default]
    McCool,
    /// A fixed exponent.
    Fixed(f64),
}

/// Slope-length factor `L = (λ'/22.13)^m` with `λ' = max(λ, cellsize)`.
///
/// The one-cell floor keeps headwater cells at the unit-plot semantics
/// instead of collapsing to zero.
pub fn l_factor(lambda: &Raster, slope: &Raster) -> Result<Raster> {
    l_factor_with(lambda, slope, LengthExponent::McCool)
}

pub fn l_factor_with(lambda: &Raster, slope: &Raster, exponent: LengthExponent) -> Result<Raster> {
    let cellsize = lambda.header().cellsize;
    lambda.map2(slope, |lam, theta| {
        let lam = lam.max(cellsize);
        let m = match exponent {
            LengthExponent::McCool => {
                let st = fmath::sin(theta);
                let beta = (st / 0.0896) / (3.0 * fmath::powf(st, 0.8) + 0.56);
                beta / (1.0 + beta)
            }
            LengthExponent::Fixed(m) => m,
        };
        fmath::powf(lam / 22.13, m)
    })
}

/// Land-cover class code → cover-management factor, `C ∈ [0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverTable {
    entries: BTreeMap<i64, f64>,
}

impl CoverTable {
    pub fn new() -> Self {
        CoverTable::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, f64)>>(pairs: I) -> Result<Self> {
        let mut table = CoverTable::new();
        for (class, c) in pairs {
            table.insert(class, c)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, class: i64, c: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Config(format!(
                "C factor for class {class} must lie in [0, 1], got {c}"
            )));
        }
        self.entries.insert(class, c);
        Ok(())
    }

    pub fn get(&self, class: i64) -> Option<f64> {
        self.entries.get(&class).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

/// Cover-management factor by class lookup. Land-cover cells carry integer
/// class codes; any valid code missing from the table is a configuration
/// error naming the code.
pub fn c_factor(landcover: &Raster, table: &CoverTable) -> Result<Raster> {
    // Validate all codes first so the error names the class, not a cell.
    for (i, v) in landcover.valid_cells() {
        let class = fmath::round(v) as i64;
        if fmath::abs(v - class as f64) > 1e-6 {
            let (row, col) = landcover.row_col(i);
            return Err(Error::InvalidGrid(format!(
                "land-cover cell ({row}, {col}) holds non-integer class code {v}"
            )));
        }
        if table.get(class).is_none() {
            return Err(Error::UnknownClass(class));
        }
    }
    let out = landcover.map(|v| {
        let class = fmath::round(v) as i64;
        table.get(class).unwrap_or(f64::NAN)
    });
    out.validate_proportion("c factor")?;
    Ok(out)
}

/// The full factor stack feeding the erosion product. All grids share one
/// geometry; P and St default to constant 1.
#[derive(Debug, Clone)]
pub struct FactorStack {
    pub r: Raster,
    pub k: Raster,
    pub l: Raster,
    pub s: Raster,
    pub c: Raster,
    pub p: Raster,
    pub st: Raster,
}

impl FactorStack {
    /// Build with P = St = 1 where not supplied.
    pub fn new(
        r: Raster,
        k: Raster,
        l: Raster,
        s: Raster,
        c: Raster,
        p: Option<Raster>,
        st: Option<Raster>,
    ) -> Result<Self> {
        let header = *r.header();
        let p = match p {
            Some(p) => p,
            None => Raster::filled(header, 1.0)?,
        };
        let st = match st {
            Some(st) => st,
            None => Raster::filled(header, 1.0)?,
        };
        let stack = FactorStack {
            r,
            k,
            l,
            s,
            c,
            p,
            st,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        let header = self.r.header();
        for (name, grid) in [
            ("K", &self.k),
            ("L", &self.l),
            ("S", &self.s),
            ("C", &self.c),
            ("P", &self.p),
            ("St", &self.st),
        ] {
            if !grid.header().same_grid(header) {
                return Err(Error::ShapeMismatch(format!(
                    "factor {name} does not share the R grid geometry"
                )));
            }
        }
        self.r.validate_nonnegative("r factor")?;
        self.k.validate_nonnegative("k factor")?;
        self.l.validate_nonnegative("l factor")?;
        self.s.validate_nonnegative("s factor")?;
        self.c.validate_proportion("c factor")?;
        self.p.validate_unit_positive("p factor")?;
        self.st.validate_unit_positive("st factor")?;
        Ok(())
    }

    /// Product of every factor except C. Erosion is `base × C`; per-cell
    /// cover patching multiplies the same base, so an incremental update is
    /// bit-identical to full recomputation.
    pub fn base(&self) -> Result<Raster> {
        let rk = self.r.map2(&self.k, |a, b| a * b)?;
        let rkl = rk.map2(&self.l, |a, b| a * b)?;
        let rkls = rkl.map2(&self.s, |a, b| a * b)?;
        let rklsp = rkls.map2(&self.p, |a, b| a * b)?;
        rklsp.map2(&self.st, |a, b| a * b)
    }
}

/// Per-cell soil loss (t ha⁻¹ yr⁻¹): the factor product, masked wherever any
/// factor is invalid. The result is checked nonnegative — the model's
/// explicit semantic constraint on the erosion matrix.
pub fn erosion(stack: &FactorStack) -> Result<Raster> {
    stack.validate()?;
    let out = stack.base()?.map2(&stack.c, |b, c| b * c)?;
    out.validate_nonnegative("erosion rate")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GridHeader;
    use approx::assert_relative_eq;

    fn header(n: usize) -> GridHeader {
        GridHeader::new(n, n, 0.0, 0.0, 5.0, -9999.0).unwrap()
    }

    #[test]
    fn s_factor_zero_slope_is_exactly_zero() {
        let slope = Raster::filled(header(3), 0.0).unwrap();
        let s = s_factor(&slope).unwrap();
        for (_, v) in s.valid_cells() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn s_branches_agree_at_merge_threshold() {
        let st = fmath::sin(S_MERGE_THRESHOLD_DEG.to_radians());
        let mb = s_moore_burch(st);
        let ne = s_nearing(st);
        // Frozen closed-form evaluations at 12.73°.
        assert_relative_eq!(mb, 3.221_546_458_966_648_3, max_relative = 1e-12);
        assert_relative_eq!(ne, 3.221_161_354_487_106, max_relative = 1e-12);
        assert!((mb - ne).abs() < 0.01);
    }

    #[test]
    fn s_factor_at_25_degrees_uses_nearing() {
        let slope = Raster::filled(header(2), 25.0_f64.to_radians()).unwrap();
        let s = s_factor(&slope).unwrap();
        assert_relative_eq!(
            s.get(0, 0).unwrap(),
            8.173_829_851_411_277,
            max_relative = 1e-12
        );
    }

    #[test]
    fn s_factor_rejects_negative_slope() {
        let slope = Raster::filled(header(2), -0.1).unwrap();
        assert!(matches!(
            s_factor(&slope),
            Err(Error::ValueOutOfRange { role: "slope", .. })
        ));
    }

    #[test]
    fn l_factor_unit_plot_length() {
        let lambda = Raster::filled(header(3), 22.13).unwrap();
        for angle in [0.0, 0.1, 0.4] {
            let slope = Raster::filled(header(3), angle).unwrap();
            let l = l_factor(&lambda, &slope).unwrap();
            for (_, v) in l.valid_cells() {
                assert_relative_eq!(v, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn l_factor_flat_slope_limit() {
        let lambda = Raster::filled(header(3), 500.0).unwrap();
        let slope = Raster::filled(header(3), 0.0).unwrap();
        let l = l_factor(&lambda, &slope).unwrap();
        for (_, v) in l.valid_cells() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn l_factor_scalar_oracle() {
        // λ' = 88.52 m (4 unit plots), sin θ = 0.0896 so β = 1/(3·0.0896^0.8 + 0.56):
        // frozen scalar evaluation m = 0.501132698538246, L = 4^m.
        let theta = libm::asin(0.0896);
        let lambda = Raster::filled(header(2), 88.52).unwrap();
        let slope = Raster::filled(header(2), theta).unwrap();
        let l = l_factor(&lambda, &slope).unwrap();
        assert_relative_eq!(
            l.get(0, 0).unwrap(),
            2.003_142_974_180_292,
            max_relative = 1e-12
        );
    }

    #[test]
    fn l_factor_headwater_floor() {
        // λ = 0 is floored to one cellsize, not L = 0.
        let lambda = Raster::filled(header(3), 0.0).unwrap();
        let slope = Raster::filled(header(3), 0.2).unwrap();
        let l = l_factor(&lambda, &slope).unwrap();
        let expected_base = 5.0 / 22.13;
        for (_, v) in l.valid_cells() {
            assert!(v > 0.0);
            assert!(v < 1.0);
            let st = fmath::sin(0.2);
            let beta = (st / 0.0896) / (3.0 * fmath::powf(st, 0.8) + 0.56);
            let m = beta / (1.0 + beta);
            assert_relative_eq!(v, fmath::powf(expected_base, m), epsilon = 1e-12);
        }
    }

    #[test]
    fn c_factor_lookup_and_errors() {
        let h = header(2);
        let landcover = Raster::from_values(h, alloc::vec![1.0, 2.0, 1.0, -9999.0]).unwrap();
        let table = CoverTable::from_pairs([(1, 0.2), (2, 0.0)]).unwrap();
        let c = c_factor(&landcover, &table).unwrap();
        assert_eq!(c.get(0, 0), Some(0.2));
        assert_eq!(c.get(0, 1), Some(0.0));
        assert_eq!(c.get(1, 1), None);

        let missing = Raster::from_values(h, alloc::vec![1.0, 7.0, 1.0, 2.0]).unwrap();
        assert_eq!(c_factor(&missing, &table), Err(Error::UnknownClass(7)));
    }

    #[test]
    fn cover_table_rejects_out_of_range() {
        assert!(CoverTable::from_pairs([(1, 1.2)]).is_err());
        assert!(CoverTable::from_pairs([(1, -0.1)]).is_err());
    }

    fn stack_with(r: f64, k: f64, c: f64) -> FactorStack {
        let h = header(4);
        FactorStack::new(
            Raster::filled(h, r).unwrap(),
            Raster::filled(h, k).unwrap(),
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(h, c).unwrap(),
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn erosion_identity_factors() {
        let e = erosion(&stack_with(5.0, 1.0, 1.0)).unwrap();
        for (_, v) in e.valid_cells() {
            assert_eq!(v, 5.0);
        }
    }

    #[test]
    fn erosion_zero_cover_absorbs() {
        let e = erosion(&stack_with(5.0, 2.0, 0.0)).unwrap();
        for (_, v) in e.valid_cells() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn erosion_linear_in_each_factor() {
        let h = header(4);
        let base = stack_with(3.0, 2.0, 0.5);
        let doubled = FactorStack {
            k: base.k.map(|v| 2.0 * v),
            ..base.clone()
        };
        let e1 = erosion(&base).unwrap();
        let e2 = erosion(&doubled).unwrap();
        for ((_, a), (_, b)) in e1.valid_cells().zip(e2.valid_cells()) {
            assert_relative_eq!(b, 2.0 * a, epsilon = 0.0);
        }
        let area = h.cell_area_ha();
        assert_relative_eq!(
            e2.total(area).unwrap(),
            2.0 * e1.total(area).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn erosion_masks_where_any_factor_invalid() {
        let h = header(3);
        let mut k = Raster::filled(h, 1.0).unwrap();
        k.set_nodata(1, 1);
        let stack = FactorStack::new(
            Raster::filled(h, 2.0).unwrap(),
            k,
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(h, 0.5).unwrap(),
            None,
            None,
        )
        .unwrap();
        let e = erosion(&stack).unwrap();
        assert_eq!(e.get(1, 1), None);
        assert_eq!(e.valid_count(), 8);
    }

    #[test]
    fn stack_rejects_shape_mismatch() {
        let h = header(3);
        let other = GridHeader::new(4, 3, 0.0, 0.0, 5.0, -9999.0).unwrap();
        let res = FactorStack::new(
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(other, 1.0).unwrap(),
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(h, 1.0).unwrap(),
            Raster::filled(h, 1.0).unwrap(),
            None,
            None,
        );
        assert!(matches!(res, Err(Error::ShapeMismatch(_))));
    }
}
