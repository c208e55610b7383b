//! Shared oracle machinery for the integration tests: adaptive quadrature
//! and the Kolmogorov-Smirnov statistic. Deliberately independent of the
//! implementations under test — only `pdf`/`cdf` closures come in.

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_step(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 40)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Kolmogorov-Smirnov distance between an ascending-sorted sample and a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs());
        d = d.max((c - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Quadrature of a pdf over its whole support `(s, ∞)`, split at `s + 50a`
/// with the tail handled under the substitution `v = 1/(A - s)`. Uses only
/// pdf evaluations.
pub fn integrate_pdf_support<F: Fn(f64) -> f64 + Copy>(pdf: F, s: f64, a: f64, tol: f64) -> f64 {
    // Below a/(A-s) = 700 the density has underflowed to ~0.
    let lo = s + a / 700.0;
    let split = s + 50.0 * a;
    let head = adaptive_simpson(&pdf, lo, split, tol);
    let tail_fn = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            pdf(s + 1.0 / v) / (v * v)
        }
    };
    let tail = adaptive_simpson(&tail_fn, 0.0, 1.0 / (50.0 * a), tol);
    head + tail
}
