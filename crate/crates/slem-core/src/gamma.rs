//! Log-gamma and the regularized incomplete gamma functions.
//!
//! Self-contained so the distribution code works without `std`. Accuracy is
//! around 1e-13 relative over the parameter range the simulator uses
//! (shape ≈ 0.5 – 5, argument up to a few hundred); the test suite
//! cross-checks against an independent implementation and quadrature.

use crate::error::{Error, Result};
use crate::fmath;
use alloc::format;

/// Lanczos coefficients, g = 7, n = 9, transcribed verbatim from the
/// published table (a digit or two beyond f64 precision).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        let pi = core::f64::consts::PI;
        fmath::ln(pi / fmath::sin(pi * x)) - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        LN_SQRT_2PI + (x + 0.5) * fmath::ln(t) - t + fmath::ln(acc)
    }
}

/// Gamma function for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    fmath::exp(ln_gamma(x))
}

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn reg_lower(a: f64, x: f64) -> Result<f64> {
    check_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(lower_series(a, x))
    } else {
        Ok(1.0 - upper_continued_fraction(a, x))
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a) = 1 - P(a, x)`.
pub fn reg_upper(a: f64, x: f64) -> Result<f64> {
    check_args(a, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - lower_series(a, x))
    } else {
        Ok(upper_continued_fraction(a, x))
    }
}

fn check_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "incomplete gamma shape must be positive, got {a}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma argument must be nonnegative, got {x}"
        )));
    }
    Ok(())
}

/// Series expansion of P(a, x), converges fast for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if fmath::abs(del) < fmath::abs(sum) * EPS {
            break;
        }
    }
    sum * fmath::exp(-x + a * fmath::ln(x) - ln_gamma(a))
}

/// Modified Lentz continued fraction for Q(a, x), for x ≥ a + 1.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if fmath::abs(d) < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if fmath::abs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fmath::abs(del - 1.0) < EPS {
            break;
        }
    }
    fmath::exp(-x + a * fmath::ln(x) - ln_gamma(a)) * h
}
