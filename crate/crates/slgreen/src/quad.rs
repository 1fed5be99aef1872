//! Quadrature kernels: adaptive Simpson for smooth one-dimensional integrals,
//! trapezoid sums on stored grids, and an exact cell rule for integrals of
//! (linear function) * exp(linear exponent) that never exponentiates anything
//! larger than its inputs.

/// Composite trapezoid over a stored grid.
pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    acc
}

/// Cumulative trapezoid: out[i] = integral from x[0] to x[i].
pub(crate) fn trapezoid_prefix(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// phi1(z) = (e^z - 1)/z, continuously extended by phi1(0) = 1.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z * (0.5 + z / 6.0)
    } else {
        z.exp_m1() / z
    }
}

/// phi2(z) = (z e^z - (e^z - 1))/z^2, continuously extended by phi2(0) = 1/2.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 + z * (1.0 / 3.0 + z / 8.0)
    } else {
        (z * z.exp() - z.exp_m1()) / (z * z)
    }
}

/// Exact integral over one cell of width h of
///   exp(a0 + (a1 - a0) s/h) * (f0 + (f1 - f0) s/h),  s in [0, h].
///
/// a0, a1 are the exponent values at the cell ends (in our use always <= 0 up
/// to rounding), so no overflow can occur; deep tails underflow to zero.
pub(crate) fn explin_cell(a0: f64, a1: f64, h: f64, f0: f64, f1: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let z = a1 - a0;
    a0.exp() * h * (f0 * phi1(z) + (f1 - f0) * phi2(z))
}

/// Adaptive Simpson integration of a smooth function with absolute tolerance.
/// `splits` lists interior points where the integrand has kinks; each smooth
/// piece is integrated independently so the error estimate stays reliable.
pub(crate) fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    splits: &[f64],
    tol: f64,
) -> f64 {
    debug_assert!(a <= b);
    if a == b {
        return 0.0;
    }
    let mut pieces: Vec<f64> = Vec::with_capacity(splits.len() + 2);
    pieces.push(a);
    for &s in splits {
        if s > a && s < b {
            pieces.push(s);
        }
    }
    pieces.push(b);
    let n = (pieces.len() - 1).max(1) as f64;
    let mut total = 0.0;
    for w in pieces.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let flo = f(lo);
        let fmid = f(0.5 * (lo + hi));
        let fhi = f(hi);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol / n, 60);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
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
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Rounding noise in `delta` scales with the panel magnitudes and with the
    // sampled function values times the panel width; below that floor further
    // refinement only chases noise and never converges.
    let fscale = fa.abs() + 4.0 * fm.abs() + fb.abs();
    let noise = 30.0
        * f64::EPSILON
        * (left.abs() + right.abs() + whole.abs() + (b - a) * fscale);
    if depth == 0 || delta.abs() <= (15.0 * tol).max(noise) {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
