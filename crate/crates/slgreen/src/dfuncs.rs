//! Local length scales of the potential and the compactness indicator
//! built on them.
//!
//! d(x) is the unique root in (0, 1] of d * integral_{x-d}^{x+d} q = 2.
//! d1(x) is the unique root in (0, 1] of
//!     integral_0^{sqrt(2) d} ( integral_{x-t}^{x} q ) dt = 1,
//! and d2 is its mirror image using windows to the right of x. All three
//! are 1-Lipschitz, bounded by 1, and tend to 0 exactly when the local mass
//! of q blows up. Their decay along both tails is what the compactness
//! indicator inspects.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad::adaptive_simpson;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_EPS: f64 = 0.05;
pub const DEFAULT_PROBES: [f64; 6] = [-1000.0, -100.0, -10.0, 10.0, 100.0, 1000.0];

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn validate_point_and_tol(x: f64, tol: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidWindow(format!(
            "evaluation point must be finite, got {x}"
        )));
    }
    if !(1e-15..=1e-2).contains(&tol) {
        return Err(Error::InvalidWindow(format!(
            "tolerance must lie in [1e-15, 1e-2], got {tol}"
        )));
    }
    Ok(())
}

/// Bisect the increasing function g on (0, 1]. Requires g(0+) < 0; the
/// caller guarantees g(1) >= 0 holds mathematically, and a clearly negative
/// g(1) is reported as an internal fault. A root within quadrature rounding
/// of the right endpoint snaps to exactly 1, so constant q == 1 yields
/// d == 1 with no rounding noise.
fn bisect_unit_interval(g: impl Fn(f64) -> f64, tol: f64, what: &str) -> Result<f64> {
    let g1 = g(1.0);
    if g1.abs() <= 1e-9 {
        return Ok(1.0);
    }
    if g1 < 0.0 {
        return Err(Error::InternalFault(format!(
            "{what}: defining function is negative at 1 ({g1}); the potential \
             lower bound must have been violated"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The primary length scale: root of d * integral_{x-d}^{x+d} q = 2.
pub fn solve_d(q: &Potential, x: f64, tol: f64) -> Result<f64> {
    validate_point_and_tol(x, tol)?;
    let g = |d: f64| d * q.integrate(x - d, x + d).expect("finite window") - 2.0;
    bisect_unit_interval(g, tol, "solve_d")
}

/// One-sided scale using mass accumulated to the left of x.
pub fn solve_d1(q: &Potential, x: f64, tol: f64) -> Result<f64> {
    validate_point_and_tol(x, tol)?;
    let g = |d: f64| iterated_left_mass(q, x, d) - 1.0;
    bisect_unit_interval(g, tol, "solve_d1")
}

/// One-sided scale using mass accumulated to the right of x.
pub fn solve_d2(q: &Potential, x: f64, tol: f64) -> Result<f64> {
    validate_point_and_tol(x, tol)?;
    let g = |d: f64| iterated_right_mass(q, x, d) - 1.0;
    bisect_unit_interval(g, tol, "solve_d2")
}

/// integral_0^{sqrt(2) d} integral_{x-t}^{x} q(s) ds dt. The inner integral
/// is exact (piecewise antiderivatives); the outer one is adaptive Simpson
/// with explicit splits at the kinks t = x - b for breakpoints b of q.
fn iterated_left_mass(q: &Potential, x: f64, d: f64) -> f64 {
    let upper = SQRT2 * d;
    let splits: Vec<f64> = q
        .breakpoints_in(x - upper, x)
        .into_iter()
        .map(|b| x - b)
        .collect();
    let inner = |t: f64| q.integrate(x - t, x).expect("finite window");
    adaptive_simpson(&inner, 0.0, upper, &splits, 1e-14)
}

fn iterated_right_mass(q: &Potential, x: f64, d: f64) -> f64 {
    let upper = SQRT2 * d;
    let splits: Vec<f64> = q
        .breakpoints_in(x, x + upper)
        .into_iter()
        .map(|b| b - x)
        .collect();
    let inner = |t: f64| q.integrate(x, x + t).expect("finite window");
    adaptive_simpson(&inner, 0.0, upper, &splits, 1e-14)
}

/// All three scales tabulated on a set of points.
#[derive(Clone, Debug, Serialize)]
pub struct DTable {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

pub fn tabulate(q: &Potential, xs: &[f64], tol: f64) -> Result<DTable> {
    let mut table = DTable {
        x: xs.to_vec(),
        d: Vec::with_capacity(xs.len()),
        d1: Vec::with_capacity(xs.len()),
        d2: Vec::with_capacity(xs.len()),
    };
    for &x in xs {
        table.d.push(solve_d(q, x, tol)?);
        table.d1.push(solve_d1(q, x, tol)?);
        table.d2.push(solve_d2(q, x, tol)?);
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compact,
    NotCompact,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRecord {
    pub x: f64,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    /// integral of q over [x-1, x+1]; large mass corroborates a small d.
    pub window_mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessVerdict {
    pub verdict: Verdict,
    pub eps: f64,
    pub probes: Vec<ProbeRecord>,
    pub note: String,
}

enum TailTrend {
    Vanishing,
    Floored,
    Mixed,
}

/// Classify one tail of one scale function. `vals` is ordered from the
/// innermost probe to the outermost, `outer_mass` is the unit-window mass
/// of q at the outermost probe.
fn tail_trend(vals: &[f64], outer_mass: f64, eps: f64) -> TailTrend {
    let outer = *vals.last().expect("tail has probes");
    let non_increasing = vals.windows(2).all(|p| p[1] <= p[0] * 1.1);
    if outer < eps && non_increasing && outer_mass > 2.0 / eps {
        return TailTrend::Vanishing;
    }
    if vals.iter().cloned().fold(f64::INFINITY, f64::min) >= eps {
        return TailTrend::Floored;
    }
    TailTrend::Mixed
}

fn verdict_of(neg: TailTrend, pos: TailTrend) -> Verdict {
    match (&neg, &pos) {
        (TailTrend::Vanishing, TailTrend::Vanishing) => Verdict::Compact,
        (TailTrend::Floored, _) | (_, TailTrend::Floored) => Verdict::NotCompact,
        _ => Verdict::Inconclusive,
    }
}

/// Finite-probe compactness heuristic.
///
/// The resolvent kernel construction is compact exactly when d(x) -> 0 as
/// |x| -> infinity; probing finitely many points can only ever produce
/// evidence, so the verdict is advisory: `compact` when every scale decays
/// cleanly along both tails with corroborating window mass, `not_compact`
/// when the primary scale is bounded away from zero along some tail, and
/// `inconclusive` otherwise (including when the three scales disagree).
pub fn compactness_indicator(
    q: &Potential,
    probes: &[f64],
    eps: f64,
) -> Result<CompactnessVerdict> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidProbes(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let mut neg: Vec<f64> = probes.iter().cloned().filter(|&x| x < 0.0).collect();
    let mut pos: Vec<f64> = probes.iter().cloned().filter(|&x| x > 0.0).collect();
    neg.sort_by(|a, b| b.partial_cmp(a).unwrap()); // innermost first
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (name, tail) in [("negative", &neg), ("positive", &pos)] {
        if tail.len() < 2 {
            return Err(Error::InvalidProbes(format!(
                "need at least two probes on the {name} axis"
            )));
        }
        let inner = tail.first().unwrap().abs();
        let outer = tail.last().unwrap().abs();
        if outer / inner < 100.0 {
            return Err(Error::InvalidProbes(format!(
                "{name}-axis probes must span a factor of 100 in |x|, got {:.3}",
                outer / inner
            )));
        }
    }

    let mut ordered: Vec<f64> = neg.iter().rev().cloned().collect();
    ordered.extend(pos.iter().cloned());
    let mut records = Vec::with_capacity(ordered.len());
    for &x in &ordered {
        records.push(ProbeRecord {
            x,
            d: solve_d(q, x, DEFAULT_TOL)?,
            d1: solve_d1(q, x, DEFAULT_TOL)?,
            d2: solve_d2(q, x, DEFAULT_TOL)?,
            window_mass: q.window_mass(x, 1.0)?,
        });
    }

    let by_x = |x: f64| records.iter().find(|r| r.x == x).unwrap();
    let mut verdicts = Vec::with_capacity(3);
    for pick in [
        (|r: &ProbeRecord| r.d) as fn(&ProbeRecord) -> f64,
        |r| r.d1,
        |r| r.d2,
    ] {
        let neg_vals: Vec<f64> = neg.iter().map(|&x| pick(by_x(x))).collect();
        let pos_vals: Vec<f64> = pos.iter().map(|&x| pick(by_x(x))).collect();
        let neg_mass = by_x(*neg.last().unwrap()).window_mass;
        let pos_mass = by_x(*pos.last().unwrap()).window_mass;
        verdicts.push(verdict_of(
            tail_trend(&neg_vals, neg_mass, eps),
            tail_trend(&pos_vals, pos_mass, eps),
        ));
    }

    let primary = verdicts[0];
    let (verdict, note) = if verdicts.iter().all(|v| *v == primary) {
        let note = match primary {
            Verdict::Compact => {
                "all three scales decay along both tails with growing window mass"
            }
            Verdict::NotCompact => "the primary scale stays bounded away from zero on a tail",
            Verdict::Inconclusive => "probe evidence is mixed",
        };
        (primary, note.to_string())
    } else {
        (
            Verdict::Inconclusive,
            "the three scales disagree at these probes; widen the probe set".to_string(),
        )
    };

    Ok(CompactnessVerdict {
        verdict,
        eps,
        probes: records,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadratic() -> Potential {
        Potential::polynomial(&[1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_potentials_have_inverse_sqrt_scale() {
        for c in [1.0, 2.0, 3.0, 5.0, 10.0] {
            let q = Potential::constant(c).unwrap();
            let expect = c.powf(-0.5);
            for x in [-3.0, 0.0, 7.5] {
                assert_relative_eq!(solve_d(&q, x, 1e-13).unwrap(), expect, epsilon = 1e-10);
                assert_relative_eq!(solve_d1(&q, x, 1e-13).unwrap(), expect, epsilon = 1e-10);
                assert_relative_eq!(solve_d2(&q, x, 1e-13).unwrap(), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn unit_potential_returns_exactly_one() {
        let q = Potential::constant(1.0).unwrap();
        assert_eq!(solve_d(&q, 0.3, 1e-12).unwrap(), 1.0);
        assert_eq!(solve_d1(&q, -2.0, 1e-12).unwrap(), 1.0);
        assert_eq!(solve_d2(&q, 5.0, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_origin_solves_known_quartic() {
        // At x = 0 with q = 1 + t^2 all three definitions reduce to
        // s^4 + 3 s^2 - 3 = 0 in s = d, whose positive root is
        // sqrt((sqrt(21) - 3) / 2).
        let expect = ((21.0_f64.sqrt() - 3.0) / 2.0).sqrt();
        let q = quadratic();
        assert_relative_eq!(solve_d(&q, 0.0, 1e-13).unwrap(), expect, epsilon = 1e-9);
        assert_relative_eq!(solve_d1(&q, 0.0, 1e-13).unwrap(), expect, epsilon = 1e-9);
        assert_relative_eq!(solve_d2(&q, 0.0, 1e-13).unwrap(), expect, epsilon = 1e-9);
    }

    /// Independent slow oracle: sample q pointwise (no antiderivatives) and
    /// solve the defining equation of d with plain bisection on a fine
    /// composite Simpson rule.
    fn oracle_d(q: &Potential, x: f64) -> f64 {
        let mass = |a: f64, b: f64| {
            let n = 4000;
            let h = (b - a) / n as f64;
            let mut acc = q.eval(a) + q.eval(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * q.eval(a + h * i as f64);
            }
            acc * h / 3.0
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid * mass(x - mid, x + mid) < 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_pointwise_sampling_oracle() {
        let q = Potential::sinusoid(2.0, 1.0, 1.0, 0.0).unwrap();
        for x in [-4.2, 0.7, 3.9] {
            let fast = solve_d(&q, x, 1e-13).unwrap();
            let slow = oracle_d(&q, x);
            assert_relative_eq!(fast, slow, epsilon = 1e-7);
        }
    }

    #[test]
    fn one_sided_scales_mirror_for_even_potentials() {
        let q = quadratic();
        for x in [0.4, 0.8, 2.5] {
            let d1_right = solve_d1(&q, x, 1e-13).unwrap();
            let d2_left = solve_d2(&q, -x, 1e-13).unwrap();
            assert_relative_eq!(d1_right, d2_left, epsilon = 1e-10);
        }
    }

    #[test]
    fn one_sided_scales_control_the_symmetric_one() {
        // 2 sqrt(2) min(d1, d2) >= d: a window of half-width sqrt(2) d1
        // already holds unit iterated mass, so the symmetric window cannot
        // need more than twice that on each side.
        let q = Potential::sinusoid(2.0, 1.0, 1.0, 0.3).unwrap();
        for x in [-2.0, 0.0, 1.3, 4.4] {
            let d = solve_d(&q, x, 1e-13).unwrap();
            let d1 = solve_d1(&q, x, 1e-13).unwrap();
            let d2 = solve_d2(&q, x, 1e-13).unwrap();
            assert!(2.0 * SQRT2 * d1 >= d - 1e-10, "x = {x}");
            assert!(2.0 * SQRT2 * d2 >= d - 1e-10, "x = {x}");
        }
    }

    #[test]
    fn scales_are_lipschitz() {
        let q = quadratic();
        let pts = [-3.0, -1.2, -0.3, 0.5, 1.1, 2.9, 6.0];
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                let da = solve_d(&q, a, 1e-13).unwrap();
                let db = solve_d(&q, b, 1e-13).unwrap();
                assert!(
                    (da - db).abs() <= (a - b).abs() + 1e-9,
                    "|d({a}) - d({b})| = {}",
                    (da - db).abs()
                );
            }
        }
    }

    #[test]
    fn quadratic_scale_decays_in_the_tails() {
        let q = quadratic();
        let d10 = solve_d(&q, 10.0, 1e-13).unwrap();
        let d1000 = solve_d(&q, 1000.0, 1e-13).unwrap();
        assert!(d10 < 0.1);
        assert!(d1000 < 1.1e-3);
        assert!(d1000 < d10);
    }

    #[test]
    fn piecewise_potential_with_kinks_is_handled() {
        let q = Potential::from_json_str(
            r#"{ "segments": [
                { "from": "-inf", "to": 0.0, "shape": "constant", "params": { "value": 1.0 } },
                { "from": 0.0, "to": 1.0, "shape": "constant", "params": { "value": 9.0 } },
                { "from": 1.0, "to": "+inf", "shape": "constant", "params": { "value": 1.0 } }
            ] }"#,
        )
        .unwrap();
        // At x = 0.5 the symmetric window stays inside the tall block until
        // d = 0.5, and d = 1/3 solves d * 9 * 2d = 2 within the block.
        assert_relative_eq!(solve_d(&q, 0.5, 1e-13).unwrap(), 1.0 / 3.0, epsilon = 1e-10);
        // Far from the block everything looks like q == 1.
        assert_relative_eq!(solve_d(&q, -50.0, 1e-13).unwrap(), 1.0, epsilon = 1e-10);
        // The one-sided scales differ just left of the block.
        let d1 = solve_d1(&q, 0.0, 1e-13).unwrap(); // mass from the left: q == 1 side
        let d2 = solve_d2(&q, 0.0, 1e-13).unwrap(); // mass from the right: q == 9 side
        assert!(d2 < d1);
        assert_relative_eq!(d1, 1.0, epsilon = 1e-10);
        assert_relative_eq!(d2, 1.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn verdict_constant_is_not_compact() {
        let q = Potential::constant(1.0).unwrap();
        let v = compactness_indicator(&q, &DEFAULT_PROBES, DEFAULT_EPS).unwrap();
        assert_eq!(v.verdict, Verdict::NotCompact);
        assert_eq!(v.probes.len(), 6);
    }

    #[test]
    fn verdict_quadratic_is_compact() {
        let q = quadratic();
        let v = compactness_indicator(&q, &DEFAULT_PROBES, DEFAULT_EPS).unwrap();
        assert_eq!(v.verdict, Verdict::Compact);
        for r in &v.probes {
            assert!(r.d <= 0.12, "d({}) = {}", r.x, r.d);
        }
    }

    #[test]
    fn verdict_bounded_oscillation_is_not_compact() {
        let q = Potential::sinusoid(2.0, 1.0, 1.0, 0.0).unwrap();
        let v = compactness_indicator(&q, &DEFAULT_PROBES, DEFAULT_EPS).unwrap();
        assert_eq!(v.verdict, Verdict::NotCompact);
    }

    #[test]
    fn probe_sets_must_straddle_and_spread() {
        let q = quadratic();
        assert!(matches!(
            compactness_indicator(&q, &[10.0, 1000.0], DEFAULT_EPS),
            Err(Error::InvalidProbes(_))
        ));
        assert!(matches!(
            compactness_indicator(&q, &[-20.0, -10.0, 10.0, 20.0], DEFAULT_EPS),
            Err(Error::InvalidProbes(_))
        ));
        assert!(matches!(
            compactness_indicator(&q, &DEFAULT_PROBES, 0.0),
            Err(Error::InvalidProbes(_))
        ));
    }

    #[test]
    fn tabulation_matches_point_solvers() {
        let q = quadratic();
        let xs = [-1.0, 0.0, 2.0];
        let t = tabulate(&q, &xs, 1e-12).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(t.d[i], solve_d(&q, x, 1e-12).unwrap());
            assert_eq!(t.d1[i], solve_d1(&q, x, 1e-12).unwrap());
            assert_eq!(t.d2[i], solve_d2(&q, x, 1e-12).unwrap());
        }
    }
}
