//! Adaptive embedded Runge-Kutta 5(4) integration of the scalar logarithmic
//! derivative equation w' = q(x) - w^2, with steps snapped to a caller-supplied
//! list of stop points so that no step straddles a potential breakpoint and
//! every requested output node is hit exactly.

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Hard cap on accepted + rejected steps per sweep.
const MAX_STEPS: usize = 20_000_000;
/// Step-size safety factor and growth clamps for the controller.
const SAFETY: f64 = 0.9;
const SHRINK_MIN: f64 = 0.2;
const GROW_MAX: f64 = 5.0;

pub(crate) struct SweepOutcome {
    /// Accepted step endpoints (x, w), starting point included.
    pub nodes: Vec<(f64, f64)>,
}

/// Integrate w' = q(x) - w^2 from (x0, w0) to x1 > x0.
///
/// `stops` must be sorted ascending and contain every finite breakpoint of q
/// inside (x0, x1); it may also contain output nodes. Each stop in (x0, x1]
/// terminates a step exactly, so the right-hand side seen within any single
/// step is one analytic segment shape.
pub(crate) fn sweep_riccati(
    q: &Potential,
    x0: f64,
    x1: f64,
    w0: f64,
    stops: &[f64],
    tol: f64,
) -> Result<SweepOutcome> {
    if !(x0 < x1) {
        return Err(Error::ArgumentOrder { a: x0, b: x1 });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidWindow(format!(
            "integration tolerance must be positive, got {tol}"
        )));
    }
    let mut stop_idx = stops.partition_point(|s| *s <= x0);
    let mut x = x0;
    let mut w = w0;
    let mut nodes = Vec::with_capacity(stops.len() + 64);
    nodes.push((x, w));
    let mut h = ((x1 - x0) / 16.0).min(0.1);
    let mut worst_err = 0.0_f64;
    let mut steps = 0usize;

    while x < x1 {
        let target = if stop_idx < stops.len() && stops[stop_idx] < x1 {
            stops[stop_idx]
        } else {
            x1
        };
        let mut h_try = h.min(target - x).max(0.0);
        if h_try <= 0.0 {
            // Landed exactly on a stop; move to the next one.
            stop_idx += 1;
            continue;
        }
        loop {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::RefinementFailure {
                    worst_residual: worst_err,
                    steps,
                });
            }
            let seg = q.segment_of(x + 0.5 * h_try);
            let rhs = |t: f64, y: f64| q.eval_segment(seg, t) - y * y;
            let (w_new, err_abs) = dopri_step(&rhs, x, w, h_try);
            if !w_new.is_finite() {
                return Err(Error::InternalFault(format!(
                    "logarithmic derivative diverged near x = {x:.6}"
                )));
            }
            let scale = tol * (1.0 + w.abs().max(w_new.abs()));
            let err_norm = err_abs / scale;
            if err_norm <= 1.0 {
                let hit_target = h_try >= target - x - 1e-14 * target.abs().max(1.0);
                x = if hit_target { target } else { x + h_try };
                w = w_new;
                nodes.push((x, w));
                worst_err = worst_err.max(err_abs);
                let factor = if err_norm == 0.0 {
                    GROW_MAX
                } else {
                    (SAFETY * err_norm.powf(-0.2)).clamp(SHRINK_MIN, GROW_MAX)
                };
                h = (h_try * factor).min(x1 - x0);
                if hit_target && target < x1 {
                    stop_idx += 1;
                }
                break;
            }
            let factor = (SAFETY * err_norm.powf(-0.2)).clamp(SHRINK_MIN, 1.0);
            h_try *= factor;
            if h_try < 1e-12 * x.abs().max(1.0) {
                return Err(Error::RefinementFailure {
                    worst_residual: err_abs,
                    steps,
                });
            }
        }
    }
    Ok(SweepOutcome { nodes })
}

/// One Dormand-Prince 5(4) step; returns the 5th-order value and |y5 - y4|.
fn dopri_step(rhs: &impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = rhs(x, y);
    let k2 = rhs(x + h / 5.0, y + h * (k1 / 5.0));
    let k3 = rhs(x + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = rhs(
        x + 4.0 * h / 5.0,
        y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
    );
    let k5 = rhs(
        x + 8.0 * h / 9.0,
        y + h
            * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
                - 212.0 / 729.0 * k4),
    );
    let k6 = rhs(
        x + h,
        y + h
            * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3
                + 49.0 / 176.0 * k4
                - 5103.0 / 18656.0 * k5),
    );
    let y5 = y
        + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
            - 2187.0 / 6784.0 * k5
            + 11.0 / 84.0 * k6);
    let k7 = rhs(x + h, y5);
    let err = h
        * (71.0 / 57_600.0 * k1 - 71.0 / 16_695.0 * k3 + 71.0 / 1_920.0 * k4
            - 17_253.0 / 339_200.0 * k5
            + 22.0 / 525.0 * k6
            - 1.0 / 40.0 * k7);
    (y5, err.abs())
}
