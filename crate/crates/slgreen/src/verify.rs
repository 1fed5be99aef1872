//! Defensive numerical checks of the kernel construction.
//!
//! Every check evaluates an inequality the construction is supposed to
//! satisfy on a deterministic sample set and reports the worst slack-adjusted
//! margin together with the witness sample that attained it. A margin >= 0
//! means every sample passed. Checks run in `assert` mode (a failure is a
//! hard fault) or `report` mode (informational, with generous thresholds).
//!
//! Check identifiers are short stable strings ("2.4", "3.3", ...) intended
//! for consumption by scripts; they sort numerically via [`sort_checks`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dfuncs;
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::green::GreenKernel;
use crate::quad::trapezoid;

const PAIR_SEED: u64 = 20260818;
/// Floor applied to d-dependent quantities to keep bisection cost bounded.
const D_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// A negative margin is a hard failure.
    Assert,
    /// Informational; thresholds are generous sanity rails.
    Report,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub x: f64,
    pub t: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check_id: String,
    pub n_samples: usize,
    /// Minimum over samples of (tolerance-adjusted) inequality slack;
    /// negative means at least one sample violated the inequality.
    pub worst_margin: f64,
    pub witness: Witness,
    pub mode: CheckMode,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn from_samples(
        check_id: &str,
        mode: CheckMode,
        samples: impl IntoIterator<Item = (f64, Witness)>,
        note: impl Into<String>,
    ) -> CheckResult {
        let mut worst: Option<(f64, Witness)> = None;
        let mut count = 0usize;
        for (margin, wit) in samples {
            count += 1;
            if worst.as_ref().map_or(true, |(m, _)| margin < *m) {
                worst = Some((margin, wit));
            }
        }
        let (worst_margin, witness) = worst.expect("check evaluated no samples");
        CheckResult {
            check_id: check_id.to_string(),
            n_samples: count,
            worst_margin,
            witness,
            mode,
            pass: worst_margin >= 0.0,
            note: Some(note.into()),
        }
    }
}

/// Sort check results by their numeric identifier ("2.10" after "2.9").
pub fn sort_checks(checks: &mut [CheckResult]) {
    fn key(id: &str) -> (u32, u32, String) {
        let mut it = id.split('.');
        let major = it.next().and_then(|s| s.parse().ok()).unwrap_or(u32::MAX);
        let minor = it.next().and_then(|s| s.parse().ok()).unwrap_or(u32::MAX);
        (major, minor, id.to_string())
    }
    checks.sort_by_key(|c| key(&c.check_id));
}

/// Deterministic sample set shared by the suite's checks.
struct Samples {
    /// Values of the sampled grid nodes, ascending.
    pts: Vec<f64>,
    /// d at each sampled node.
    d: Vec<f64>,
    /// Index pairs (i, j) into pts with pts[i] <= pts[j].
    pairs: Vec<(usize, usize)>,
}

fn spread_indices(len: usize, n: usize) -> Vec<usize> {
    if n >= len {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..n).map(|i| i * (len - 1) / (n - 1)).collect();
    out.dedup();
    out
}

fn build_samples(kernel: &GreenKernel, n: usize) -> Result<Samples> {
    let g = kernel.pfss().grid();
    let idxs = spread_indices(g.len(), n);
    let pts: Vec<f64> = idxs.iter().map(|&i| g[i]).collect();
    let q = kernel.potential();
    let d: Vec<f64> = pts
        .par_iter()
        .map(|&x| dfuncs::solve_d(q, x, D_TOL))
        .collect::<Result<Vec<f64>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
    let m = pts.len();
    let mut pairs: Vec<(usize, usize)> = vec![(0, m - 1), (0, m / 2), (m / 2, m - 1)];
    for _ in 0..4 * n {
        let a = rng.random_range(0..m);
        let b = rng.random_range(0..m);
        pairs.push((a.min(b), a.max(b)));
    }
    Ok(Samples { pts, d, pairs })
}

/// Run the full inequality suite on a constructed kernel.
///
/// `n` controls the sample density (grid nodes are subsampled to about n
/// points; pair checks draw 4n deterministic pairs from them). With
/// `calibrated_assert` the window comparability check "5.1" runs in assert
/// mode with its calibrated threshold; otherwise it reports against a
/// generous rail.
pub fn run_inequality_suite(
    kernel: &GreenKernel,
    n: usize,
    calibrated_assert: bool,
) -> Result<Vec<CheckResult>> {
    if n < 8 {
        return Err(Error::InvalidWindow(format!(
            "need at least 8 suite samples, got {n}"
        )));
    }
    let s = build_samples(kernel, n)?;
    let mut checks = vec![
        check_log_derivative_branches(kernel)?,
        check_growth_rates(kernel, &s)?,
        check_rho_lipschitz(kernel, &s)?,
        check_d_equation_consistency(kernel, &s)?,
        check_row_mass(kernel)?,
        check_derivative_row_mass(kernel, &s)?,
        check_kernel_exponential_bound(kernel, &s)?,
        check_kernel_geometric_mean_bound(kernel, &s)?,
        check_rho_strictly_below_one(kernel)?,
        check_kernel_d_bound(kernel, &s, BoundSide::First)?,
        check_kernel_d_bound(kernel, &s, BoundSide::Second)?,
        check_window_comparability(kernel, &s, calibrated_assert)?,
    ];
    sort_checks(&mut checks);
    Ok(checks)
}

/// "2.4": both logarithmic derivative branches stay outside (-1, 1):
/// w_v >= 1 and w_u <= -1 at every grid node.
fn check_log_derivative_branches(kernel: &GreenKernel) -> Result<CheckResult> {
    let p = kernel.pfss();
    let samples = p.grid().iter().enumerate().map(|(i, &x)| {
        let mv = p.w_v()[i] - 1.0 + 1e-9;
        let mu = -p.w_u()[i] - 1.0 + 1e-9;
        if mv <= mu {
            (
                mv,
                Witness {
                    x,
                    t: None,
                    lhs: 1.0,
                    rhs: p.w_v()[i],
                },
            )
        } else {
            (
                mu,
                Witness {
                    x,
                    t: None,
                    lhs: 1.0,
                    rhs: -p.w_u()[i],
                },
            )
        }
    });
    Ok(CheckResult::from_samples(
        "2.4",
        CheckMode::Assert,
        samples,
        "lhs 1 <= rhs |w| for both branches at every node; slack 1e-9",
    ))
}

/// "2.6": v grows and u decays at least exponentially:
/// log v(x) - log v(t) >= x - t and log u(t) - log u(x) >= x - t for t <= x.
fn check_growth_rates(kernel: &GreenKernel, s: &Samples) -> Result<CheckResult> {
    let p = kernel.pfss();
    let mut samples = Vec::with_capacity(2 * s.pairs.len());
    for &(i, j) in &s.pairs {
        let (t, x) = (s.pts[i], s.pts[j]);
        let gap = x - t;
        let tol = 1e-9 + 1e-6 * gap;
        let gv = p.log_v_at(x)? - p.log_v_at(t)?;
        samples.push((
            gv - gap + tol,
            Witness {
                x,
                t: Some(t),
                lhs: gap,
                rhs: gv,
            },
        ));
        let gu = p.log_u_at(t)? - p.log_u_at(x)?;
        samples.push((
            gu - gap + tol,
            Witness {
                x,
                t: Some(t),
                lhs: gap,
                rhs: gu,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "2.6",
        CheckMode::Assert,
        samples,
        "lhs (x - t) <= rhs log-growth of v and log-decay of u; \
         slack 1e-9 + 1e-6 (x - t)",
    ))
}

/// "2.7": the product rho = u v is 1-Lipschitz.
fn check_rho_lipschitz(kernel: &GreenKernel, s: &Samples) -> Result<CheckResult> {
    let p = kernel.pfss();
    let mut samples = Vec::with_capacity(s.pairs.len());
    for &(i, j) in &s.pairs {
        let (t, x) = (s.pts[i], s.pts[j]);
        let gap = x - t;
        let diff = (p.rho_at(x)? - p.rho_at(t)?).abs();
        samples.push((
            gap - diff + 1e-9 + 1e-6 * gap,
            Witness {
                x,
                t: Some(t),
                lhs: diff,
                rhs: gap,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "2.7",
        CheckMode::Assert,
        samples,
        "lhs |rho(x) - rho(t)| <= rhs (x - t); slack 1e-9 + 1e-6 (x - t)",
    ))
}

/// "2.8": the tabulated scale d satisfies its defining equation
/// d(x) * integral_{x-d}^{x+d} q = 2 to bisection accuracy.
fn check_d_equation_consistency(kernel: &GreenKernel, s: &Samples) -> Result<CheckResult> {
    let q = kernel.potential();
    let mut samples = Vec::with_capacity(s.pts.len());
    for (k, &x) in s.pts.iter().enumerate() {
        let d = s.d[k];
        let prod = d * q.integrate(x - d, x + d)?;
        samples.push((
            1e-6 - (prod - 2.0).abs(),
            Witness {
                x,
                t: None,
                lhs: prod,
                rhs: 2.0,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "2.8",
        CheckMode::Assert,
        samples,
        "lhs d * window mass == rhs 2 within 1e-6",
    ))
}

/// "2.9": integral of G(x, t) q(t) dt <= 1 at every node (the kernel
/// applied to q never exceeds the constant solution of -y'' + q y = q).
fn check_row_mass(kernel: &GreenKernel) -> Result<CheckResult> {
    let p = kernel.pfss();
    let q = kernel.potential();
    let q_lo: Vec<f64> = p.grid().iter().map(|&x| q.eval(x)).collect();
    let q_hi: Vec<f64> = p.grid().iter().map(|&x| q.eval_left_limit(x)).collect();
    let (y, _) = kernel.apply_node_samples(&q_lo, &q_hi);
    // The exact row mass sits within e^{-(L-|x|)} of the bound, so the slack
    // must dominate the O(h^2) quadrature error of the row integral.
    let slack = 1e-8 + 2.0 * max_cell_width(p.grid()).powi(2);
    let samples = p.grid().iter().zip(&y).map(|(&x, &v)| {
        (
            1.0 + slack - v,
            Witness {
                x,
                t: None,
                lhs: v,
                rhs: 1.0,
            },
        )
    });
    Ok(CheckResult::from_samples(
        "2.9",
        CheckMode::Assert,
        samples,
        format!("lhs integral G(x, .) q <= rhs 1; slack {slack:.2e}"),
    ))
}

/// Widest cell of the quadrature grid, bounding its O(h^2) error terms.
fn max_cell_width(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// "2.10": integral of |dG/dx (x, t)| dt <= 1 at sampled nodes.
fn check_derivative_row_mass(kernel: &GreenKernel, s: &Samples) -> Result<CheckResult> {
    let slack = 1e-8 + 2.0 * max_cell_width(kernel.pfss().grid()).powi(2);
    let mut samples = Vec::with_capacity(s.pts.len());
    for &x in &s.pts {
        let (_, drow) = kernel.row_integral(x)?;
        samples.push((
            1.0 + slack - drow,
            Witness {
                x,
                t: None,
                lhs: drow,
                rhs: 1.0,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "2.10",
        CheckMode::Assert,
        samples,
        format!("lhs integral |dG/dx| <= rhs 1; slack {slack:.2e}"),
    ))
}

/// "3.1": G(x, t) <= e^{-|x - t|}, checked in log form.
fn check_kernel_exponential_bound(kernel: &GreenKernel, s: &Samples) -> Result<CheckResult> {
    let p = kernel.pfss();
    let mut samples = Vec::with_capacity(s.pairs.len());
    for &(i, j) in &s.pairs {
        let (t, x) = (s.pts[i], s.pts[j]);
        let gap = x - t;
        let log_g = p.log_u_at(x)? + p.log_v_at(t)?;
        samples.push((
            -gap - log_g + 1e-8 + 1e-4 * gap,
            Witness {
                x,
                t: Some(t),
                lhs: log_g,
                rhs: -gap,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "3.1",
        CheckMode::Assert,
        samples,
        "lhs log G <= rhs -|x - t|; slack 1e-8 + 1e-4 (x - t)",
    ))
}

/// "3.2": G(x, t) <= sqrt(rho(x) rho(t)) e^{-|x - t|}, in log form.
fn check_kernel_geometric_mean_bound(kernel: &GreenKernel, s: &Samples) -> Result<CheckResult> {
    let p = kernel.pfss();
    let mut samples = Vec::with_capacity(s.pairs.len());
    for &(i, j) in &s.pairs {
        let (t, x) = (s.pts[i], s.pts[j]);
        let gap = x - t;
        let log_g = p.log_u_at(x)? + p.log_v_at(t)?;
        let bound = 0.5 * (p.rho_at(x)?.ln() + p.rho_at(t)?.ln()) - gap;
        samples.push((
            bound - log_g + 1e-8 + 1e-4 * gap,
            Witness {
                x,
                t: Some(t),
                lhs: log_g,
                rhs: bound,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "3.2",
        CheckMode::Assert,
        samples,
        "lhs log G <= rhs log sqrt(rho(x) rho(t)) - (x - t); \
         slack 1e-8 + 1e-4 (x - t)",
    ))
}

/// "3.3": rho stays strictly below 1: 1 - rho >= 1e-9 at every node.
/// The honest construction keeps rho <= 1/2, so the strict margin can only
/// trip on a corrupted kernel.
fn check_rho_strictly_below_one(kernel: &GreenKernel) -> Result<CheckResult> {
    let p = kernel.pfss();
    let samples = p.grid().iter().zip(p.rho()).map(|(&x, &r)| {
        (
            1.0 - r - 1e-9,
            Witness {
                x,
                t: None,
                lhs: r,
                rhs: 1.0,
            },
        )
    });
    Ok(CheckResult::from_samples(
        "3.3",
        CheckMode::Assert,
        samples,
        "lhs rho < rhs 1 with strict margin 1e-9",
    ))
}

enum BoundSide {
    First,
    Second,
}

/// "3.6"/"3.7": G(x, t) <= (3/4) d(x) e^{-|x - t|} (and with d(t)),
/// checked in log form.
fn check_kernel_d_bound(
    kernel: &GreenKernel,
    s: &Samples,
    side: BoundSide,
) -> Result<CheckResult> {
    let p = kernel.pfss();
    let (id, note) = match side {
        BoundSide::First => ("3.6", "lhs log G <= rhs log(0.75 d(x)) - |x - t|; slack 1e-8 + 1e-4 (x - t)"),
        BoundSide::Second => ("3.7", "lhs log G <= rhs log(0.75 d(t)) - |x - t|; slack 1e-8 + 1e-4 (x - t)"),
    };
    let mut samples = Vec::with_capacity(s.pairs.len());
    for &(i, j) in &s.pairs {
        let (t, x) = (s.pts[i], s.pts[j]);
        let gap = x - t;
        let d = match side {
            BoundSide::First => s.d[j],
            BoundSide::Second => s.d[i],
        };
        let log_g = p.log_u_at(x)? + p.log_v_at(t)?;
        let bound = (0.75 * d).ln() - gap;
        samples.push((
            bound - log_g + 1e-8 + 1e-4 * gap,
            Witness {
                x,
                t: Some(t),
                lhs: log_g,
                rhs: bound,
            },
        ));
    }
    Ok(CheckResult::from_samples(id, CheckMode::Assert, samples, note))
}

/// "5.1": two-sided comparability of the kernel with its diagonal on the
/// local window |t - x| <= d(x)/2: the ratio G(x, t)/rho(x) stays within a
/// factor c = e^{1/2} (times enlargement 2 in calibrated assert mode, or a
/// generous rail of 10 in report mode).
fn check_window_comparability(
    kernel: &GreenKernel,
    s: &Samples,
    calibrated_assert: bool,
) -> Result<CheckResult> {
    let p = kernel.pfss();
    let l = p.domain_half_width();
    let (mode, threshold, note) = if calibrated_assert {
        (
            CheckMode::Assert,
            0.5 + std::f64::consts::LN_2,
            "lhs max |log G(x, t) - log rho(x)| over the d(x)/2 window <= \
             rhs 1/2 + ln 2 (factor e^{1/2}, enlargement 2)",
        )
    } else {
        (
            CheckMode::Report,
            10.0_f64.ln(),
            "lhs max |log G(x, t) - log rho(x)| over the d(x)/2 window <= \
             rhs ln 10 (report rail)",
        )
    };
    let mut samples = Vec::with_capacity(s.pts.len());
    for (k, &x) in s.pts.iter().enumerate() {
        let half = 0.5 * s.d[k];
        let log_rho = p.rho_at(x)?.ln();
        let mut worst = 0.0_f64;
        let mut worst_t = x;
        for j in 0..=16 {
            let t = (x - half + half * j as f64 / 8.0).clamp(-l, l);
            let log_g = p.log_u_at(x.max(t))? + p.log_v_at(x.min(t))?;
            let dev = (log_g - log_rho).abs();
            if dev > worst {
                worst = dev;
                worst_t = t;
            }
        }
        samples.push((
            threshold - worst + 1e-9,
            Witness {
                x,
                t: Some(worst_t),
                lhs: worst,
                rhs: threshold,
            },
        ));
    }
    Ok(CheckResult::from_samples("5.1", mode, samples, note))
}

/// "3.4": pointwise lower bound of the kernel diagonal against the local
/// scale: rho(x) = G(x, x) >= d(x)/4.
pub fn lower_bound_witness(kernel: &GreenKernel, n: usize) -> Result<CheckResult> {
    if n < 8 {
        return Err(Error::InvalidWindow(format!(
            "need at least 8 samples, got {n}"
        )));
    }
    let p = kernel.pfss();
    let q = kernel.potential();
    let g = p.grid();
    let idxs = spread_indices(g.len(), n);
    let mut samples = Vec::with_capacity(idxs.len());
    for i in idxs {
        let x = g[i];
        let d = dfuncs::solve_d(q, x, D_TOL)?;
        let rho = p.rho()[i];
        samples.push((
            rho - 0.25 * d + 1e-9,
            Witness {
                x,
                t: None,
                lhs: 0.25 * d,
                rhs: rho,
            },
        ));
    }
    Ok(CheckResult::from_samples(
        "3.4",
        CheckMode::Assert,
        samples,
        "lhs d(x)/4 <= rhs rho(x); slack 1e-9",
    ))
}

/// "4.2": local-mass probe of non-compactness in the p = 2 norm. For each
/// probe point x, apply the kernel to the indicator of the window
/// |t - x| <= d(x)/2 and integrate the square of the image over the same
/// window. The result scales like d(x)^5 with a universal positive floor;
/// dropping below the floor would contradict the two-sided window bounds.
pub fn kolmogorov_compactness_probe(
    kernel: &GreenKernel,
    n_list: &[usize],
    calibrated_assert: bool,
) -> Result<CheckResult> {
    if n_list.is_empty() || n_list.iter().any(|&n| n < 2 || n > 4096) {
        return Err(Error::InvalidWindow(
            "refinement list must be nonempty with entries in [2, 4096]".into(),
        ));
    }
    // Exact value of m / d^5 for constant q == 1 (d == 1, window [-1/2, 1/2],
    // image 1 - e^{-1/2} cosh t):
    //   m1 = 1 - 4 e^{-1/2} sinh(1/2) + e^{-1} (1/2 + sinh(1)/2).
    let e_half = (-0.5_f64).exp();
    let m1 = 1.0 - 4.0 * e_half * 0.5_f64.sinh() + (-1.0_f64).exp() * (0.5 + 1.0_f64.sinh() / 2.0);
    let (mode, floor) = if calibrated_assert {
        (CheckMode::Assert, 0.5 * m1)
    } else {
        (CheckMode::Report, 0.1 * m1)
    };

    let p = kernel.pfss();
    let q = kernel.potential();
    let l = p.domain_half_width();
    let inner = l - 1.0;
    if inner <= 0.0 {
        return Err(Error::InvalidWindow(
            "domain too small for the local-mass probe; need L > 1".into(),
        ));
    }
    let grid = p.grid();
    let mut samples = Vec::new();
    let mut level_minima = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut level_min = f64::INFINITY;
        for k in 0..n {
            let x = -inner + 2.0 * inner * k as f64 / (n - 1) as f64;
            let d = dfuncs::solve_d(q, x, D_TOL)?;
            let (a, b) = (x - 0.5 * d, x + 0.5 * d);
            let f = Forcing::indicator(a, b)?;
            let (f_lo, f_hi) = f.sample_cells(grid);
            let (y, _) = kernel.apply_node_samples(&f_lo, &f_hi);
            let m = window_square_mass(grid, &y, a, b);
            let ratio = m / d.powi(5);
            level_min = level_min.min(ratio);
            samples.push((
                ratio - floor,
                Witness {
                    x,
                    t: None,
                    lhs: floor,
                    rhs: ratio,
                },
            ));
        }
        level_minima.push(level_min);
    }

    let indicator =
        dfuncs::compactness_indicator(q, &dfuncs::DEFAULT_PROBES, dfuncs::DEFAULT_EPS)?;
    let note = format!(
        "lhs floor <= rhs local mass / d^5; floor = {} of the exact constant-potential \
         value {m1:.6}; min ratio per probe density {n_list:?}: {level_minima:?}; \
         compactness indicator: {:?}",
        if calibrated_assert { "half" } else { "a tenth" },
        indicator.verdict
    );
    Ok(CheckResult::from_samples("4.2", mode, samples, note))
}

/// integral over [a, b] of y^2, with y given at grid nodes (linear between
/// nodes, endpoints interpolated).
fn window_square_mass(grid: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut xs = vec![a];
    let mut ys = vec![crate::interp::lerp(grid, y, a)];
    let lo = grid.partition_point(|&v| v <= a);
    let hi = grid.partition_point(|&v| v < b);
    for i in lo..hi {
        xs.push(grid[i]);
        ys.push(y[i]);
    }
    xs.push(b);
    ys.push(crate::interp::lerp(grid, y, b));
    let sq: Vec<f64> = ys.iter().map(|v| v * v).collect();
    trapezoid(&xs, &sq)
}

/// "3.8"/"3.9": report the operator norm ratios ||(1/d) G f||_p / ||f||_p
/// over a fixed family of test functions, for p = 2 and p = infinity. The
/// two-sided window bounds cap these ratios at 1.5; the report rails at 10.
pub fn operator_bound_report(kernel: &GreenKernel) -> Result<Vec<CheckResult>> {
    let p = kernel.pfss();
    let q = kernel.potential();
    let grid = p.grid();
    let d: Vec<f64> = grid
        .par_iter()
        .map(|&x| dfuncs::solve_d(q, x, D_TOL))
        .collect::<Result<Vec<f64>>>()?;

    type Member = (&'static str, fn(f64) -> f64);
    let family: [Member; 12] = [
        ("1", |_| 1.0),
        ("x exp(-x^2)", |x| x * (-x * x).exp()),
        ("exp(-x^2)", |x| (-x * x).exp()),
        ("sin x", f64::sin),
        ("cos 2x", |x| (2.0 * x).cos()),
        ("1/(1+x^2)", |x| 1.0 / (1.0 + x * x)),
        ("ind[-1,1]", |x| ((-1.0..1.0).contains(&x)) as u8 as f64),
        ("ind[1,3]", |x| ((1.0..3.0).contains(&x)) as u8 as f64),
        ("sign(x) exp(-|x|)", |x| x.signum() * (-x.abs()).exp()),
        ("x^2 exp(-x^2)", |x| x * x * (-x * x).exp()),
        ("sin(3x)/(1+x^2)", |x| (3.0 * x).sin() / (1.0 + x * x)),
        ("ind[-0.1,0.1]", |x| {
            ((-0.1..0.1).contains(&x)) as u8 as f64
        }),
    ];

    let mut by_norm: Vec<Vec<(f64, Witness)>> = vec![Vec::new(), Vec::new()];
    for (idx, (_, f)) in family.iter().enumerate() {
        let fs: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let (y, _) = kernel.apply_node_samples(&fs, &fs);
        let scaled: Vec<f64> = y.iter().zip(&d).map(|(v, dd)| v / dd).collect();
        for (slot, inf_norm) in [(0usize, false), (1, true)] {
            let (num, den) = if inf_norm {
                (sup_norm(&scaled), sup_norm(&fs))
            } else {
                (l2_norm(grid, &scaled), l2_norm(grid, &fs))
            };
            let ratio = num / den;
            by_norm[slot].push((
                10.0 - ratio,
                Witness {
                    x: idx as f64,
                    t: None,
                    lhs: ratio,
                    rhs: 10.0,
                },
            ));
        }
    }

    let describe = |samples: &[(f64, Witness)]| {
        let worst = samples
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        family[worst.1.x as usize].0
    };
    let mut out = Vec::with_capacity(2);
    for (slot, (id, norm_name)) in [(0usize, ("3.8", "2")), (1, ("3.9", "inf"))] {
        let note = format!(
            "lhs ||(1/d) G f||_{norm_name} / ||f||_{norm_name} over a fixed 12-function \
             family <= rhs 10 (report rail; theory caps it at 1.5); worst member: {}; \
             witness.x is the family index",
            describe(&by_norm[slot])
        );
        out.push(CheckResult::from_samples(
            id,
            CheckMode::Report,
            by_norm[slot].clone(),
            note,
        ));
    }
    Ok(out)
}

fn l2_norm(grid: &[f64], vals: &[f64]) -> f64 {
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    trapezoid(grid, &sq).sqrt()
}

fn sup_norm(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;

    fn kernel(q: &Potential, l: f64) -> GreenKernel {
        GreenKernel::new(q, l, 1e-10).unwrap()
    }

    fn canonical_potentials() -> Vec<Potential> {
        vec![
            Potential::constant(1.0).unwrap(),
            Potential::polynomial(&[1.0, 0.0, 1.0]).unwrap(),
            Potential::sinusoid(2.0, 1.0, 1.0, 0.0).unwrap(),
        ]
    }

    #[test]
    fn suite_passes_on_canonical_potentials() {
        for q in canonical_potentials() {
            let k = kernel(&q, 10.0);
            let checks = run_inequality_suite(&k, 60, true).unwrap();
            assert_eq!(checks.len(), 12);
            for c in &checks {
                assert!(
                    c.pass,
                    "check {} failed with margin {} at x = {}",
                    c.check_id, c.worst_margin, c.witness.x
                );
            }
            let ids: Vec<&str> = checks.iter().map(|c| c.check_id.as_str()).collect();
            assert_eq!(
                ids,
                ["2.4", "2.6", "2.7", "2.8", "2.9", "2.10", "3.1", "3.2", "3.3", "3.6", "3.7", "5.1"]
            );
        }
    }

    #[test]
    fn corrupted_rho_fails_the_strict_bound() {
        let q = Potential::constant(1.0).unwrap();
        let mut p = crate::pfss::solve_pfss(&q, 10.0, 1e-10).unwrap();
        p.scale_rho_for_fault_injection(2.0);
        let k = GreenKernel::from_parts(q, p);
        let checks = run_inequality_suite(&k, 40, true).unwrap();
        let c33 = checks.iter().find(|c| c.check_id == "3.3").unwrap();
        assert!(!c33.pass, "corrupted kernel passed the strict rho bound");
        assert!(c33.worst_margin < 0.0);
        // The logarithmic-derivative check is untouched by the corruption.
        let c24 = checks.iter().find(|c| c.check_id == "2.4").unwrap();
        assert!(c24.pass);
    }

    #[test]
    fn normalization_shift_leaves_every_check_invariant() {
        let q = Potential::sinusoid(2.0, 1.0, 1.0, 0.0).unwrap();
        let p = crate::pfss::solve_pfss(&q, 8.0, 1e-10).unwrap();
        let shifted = p.shifted_normalization(7.5);
        let a = run_inequality_suite(&GreenKernel::from_parts(q.clone(), p), 40, true).unwrap();
        let b = run_inequality_suite(&GreenKernel::from_parts(q, shifted), 40, true).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            assert_eq!(ca.check_id, cb.check_id);
            assert_eq!(ca.pass, cb.pass);
            assert!(
                (ca.worst_margin - cb.worst_margin).abs() <= 1e-9,
                "check {} margin moved under renormalization",
                ca.check_id
            );
        }
    }

    #[test]
    fn suite_is_deterministic() {
        let q = Potential::polynomial(&[1.0, 0.0, 1.0]).unwrap();
        let k = kernel(&q, 8.0);
        let a = run_inequality_suite(&k, 40, false).unwrap();
        let b = run_inequality_suite(&k, 40, false).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn lower_bound_holds_with_clear_margin() {
        for q in canonical_potentials() {
            let k = kernel(&q, 10.0);
            let c = lower_bound_witness(&k, 50).unwrap();
            assert!(c.pass);
            // The margin rho - d/4 shrinks like 1/(4 sqrt(q)); for 1 + x^2
            // probed out to x = 10 that is about 0.025.
            assert!(c.worst_margin > 0.02, "margin {}", c.worst_margin);
        }
    }

    #[test]
    fn local_mass_probe_passes_and_reports_trend() {
        for q in canonical_potentials() {
            let k = kernel(&q, 10.0);
            let c = kolmogorov_compactness_probe(&k, &[4, 8], true).unwrap();
            assert!(c.pass, "probe failed: {:?}", c.note);
            assert_eq!(c.n_samples, 12);
            assert!(c.note.as_ref().unwrap().contains("compactness indicator"));
        }
    }

    #[test]
    fn constant_potential_probe_matches_exact_ratio() {
        // For q == 1 the ratio m/d^5 equals m1 exactly; the discrete probe
        // should land within a percent of it once tails are negligible.
        let q = Potential::constant(1.0).unwrap();
        let k = kernel(&q, 12.0);
        let c = kolmogorov_compactness_probe(&k, &[4], true).unwrap();
        let e_half = (-0.5_f64).exp();
        let m1 =
            1.0 - 4.0 * e_half * 0.5_f64.sinh() + (-1.0_f64).exp() * (0.5 + 1.0_f64.sinh() / 2.0);
        let ratio = c.witness.rhs;
        assert!(
            (ratio - m1).abs() / m1 < 0.01,
            "ratio {ratio} vs exact {m1}"
        );
    }

    #[test]
    fn operator_bounds_stay_under_the_rail() {
        let q = Potential::polynomial(&[1.0, 0.0, 1.0]).unwrap();
        let k = kernel(&q, 10.0);
        let reports = operator_bound_report(&k).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert!(r.pass);
            assert_eq!(r.mode, CheckMode::Report);
            assert_eq!(r.n_samples, 12);
            // Theory caps the ratio at 1.5.
            assert!(r.witness.lhs <= 1.5 + 0.1, "ratio {}", r.witness.lhs);
        }
    }

    #[test]
    fn sort_orders_ids_numerically() {
        let mk = |id: &str| CheckResult {
            check_id: id.to_string(),
            n_samples: 1,
            worst_margin: 0.0,
            witness: Witness {
                x: 0.0,
                t: None,
                lhs: 0.0,
                rhs: 0.0,
            },
            mode: CheckMode::Report,
            pass: true,
            note: None,
        };
        let mut v = vec![mk("3.1"), mk("2.10"), mk("2.9"), mk("2.4")];
        sort_checks(&mut v);
        let ids: Vec<&str> = v.iter().map(|c| c.check_id.as_str()).collect();
        assert_eq!(ids, ["2.4", "2.9", "2.10", "3.1"]);
    }

    #[test]
    fn report_mode_window_check_on_rough_potential() {
        // A strongly oscillating admissible potential keeps 5.1 within the
        // calibrated threshold too, but here we exercise the report rail.
        let q = Potential::sinusoid(3.0, 2.0, 4.0, 1.0).unwrap();
        let k = kernel(&q, 8.0);
        let checks = run_inequality_suite(&k, 40, false).unwrap();
        let c51 = checks.iter().find(|c| c.check_id == "5.1").unwrap();
        assert_eq!(c51.mode, CheckMode::Report);
        assert!(c51.pass);
    }
}
