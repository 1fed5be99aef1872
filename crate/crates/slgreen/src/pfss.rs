//! Principal fundamental system for -y'' + q y = 0 with q >= 1, represented
//! entirely through logarithmic derivatives.
//!
//! The decaying solution u (u > 0, u' < 0) and the growing solution v (v > 0,
//! v' > 0) with Wronskian v'u - u'v = 1 both overflow double precision on
//! moderate domains, so they are never materialized. Instead the module
//! integrates the Riccati equation w' = q - w^2 for w_v = v'/v (left to
//! right) and w_u = u'/u (right to left, via reflection), seeded on the
//! attracting branch at sqrt(q) beyond a burn-in margin. The product
//! rho = u v follows pointwise from the Wronskian as 1/(w_v - w_u), and
//! log u, log v follow from rho and the cumulative integral of 1/rho,
//! normalized so that u(0) = v(0) = sqrt(rho(0)).

use crate::error::{Error, Result};
use crate::interp;
use crate::ode::sweep_riccati;
use crate::potential::Potential;
use crate::quad::trapezoid_prefix;

/// Integration margin beyond each end of the requested domain. Seeding the
/// Riccati sweeps at sqrt(q) is exact only asymptotically; the seed error
/// contracts like exp(-2 (integral of w)) <= exp(-2 BURN_IN) < 1e-13 across
/// the margin, which is below every tolerance this module accepts.
pub const BURN_IN: f64 = 15.0;

/// Nodes closer than this are merged when grids are unioned.
const MIN_NODE_SEP: f64 = 1e-9;

/// Principal pair on [-L, L] in logarithmic representation.
#[derive(Clone, Debug)]
pub struct Pfss {
    pub(crate) grid: Vec<f64>,
    pub(crate) w_v: Vec<f64>,
    pub(crate) w_u: Vec<f64>,
    pub(crate) rho: Vec<f64>,
    pub(crate) log_v: Vec<f64>,
    pub(crate) log_u: Vec<f64>,
    pub(crate) l: f64,
    pub(crate) tol: f64,
}

/// Build the principal pair for q on [-L, L] with integration tolerance tol.
///
/// The stored grid is the union of a uniform grid of spacing
/// min(0.01, tol^(1/4)), every potential breakpoint inside the domain, the
/// accepted integrator steps of both sweeps, the origin, and both endpoints.
pub fn solve_pfss(q: &Potential, l: f64, tol: f64) -> Result<Pfss> {
    solve_pfss_with_nodes(q, l, tol, &[])
}

/// Like `solve_pfss`, with caller-supplied nodes (for instance breakpoints
/// of a forcing function) forced into the grid.
pub fn solve_pfss_with_nodes(q: &Potential, l: f64, tol: f64, extra_nodes: &[f64]) -> Result<Pfss> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidWindow(format!(
            "domain half-width must be positive and finite, got {l}"
        )));
    }
    if !(1e-14..=1e-2).contains(&tol) {
        return Err(Error::InvalidWindow(format!(
            "tolerance must lie in [1e-14, 1e-2], got {tol}"
        )));
    }

    let h_uniform = 0.01_f64.min(tol.powf(0.25));
    let mut base = uniform_nodes(l, h_uniform);
    base.push(0.0);
    let mut seeds: Vec<f64> = q.breakpoints_in(-l, l);
    seeds.extend(extra_nodes.iter().filter(|x| x.is_finite()));
    seeds.append(&mut base);
    let base = merge_nodes(seeds, -l, l);

    let x_start = -l - BURN_IN;
    let x_end = l;
    let qr = q.reflected();

    // First pass discovers where the adaptive integrator actually steps.
    let sweep_v_a = run_sweep(q, x_start, x_end, &base, tol)?;
    let reflected_base: Vec<f64> = reflect_sorted(&base);
    let sweep_u_a = run_sweep(&qr, x_start, x_end, &reflected_base, tol)?;

    let mut all = base.clone();
    all.extend(
        sweep_v_a
            .iter()
            .map(|&(x, _)| x)
            .filter(|&x| (-l..=l).contains(&x)),
    );
    all.extend(
        sweep_u_a
            .iter()
            .map(|&(x, _)| -x)
            .filter(|&x| (-l..=l).contains(&x)),
    );
    let grid = merge_nodes(all, -l, l);

    // Second pass evaluates both sweeps on the final merged grid.
    let sweep_v = run_sweep(q, x_start, x_end, &grid, tol)?;
    let w_v = values_at(&grid, &sweep_v)?;
    let reflected_grid = reflect_sorted(&grid);
    let sweep_u = run_sweep(&qr, x_start, x_end, &reflected_grid, tol)?;
    let w_u_reflected = values_at(&reflected_grid, &sweep_u)?;
    let w_u: Vec<f64> = w_u_reflected.iter().rev().map(|w| -w).collect();

    assemble(grid, w_v, w_u, l, tol)
}

/// Run one left-to-right Riccati sweep seeded at sqrt(q) at the burn-in edge,
/// stopping at every breakpoint in range and every requested node.
fn run_sweep(
    q: &Potential,
    x_start: f64,
    x_end: f64,
    nodes: &[f64],
    tol: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut stops = q.breakpoints_in(x_start, x_end);
    stops.extend_from_slice(nodes);
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stops.dedup();
    let seed = q.eval(x_start).sqrt();
    let out = sweep_riccati(q, x_start, x_end, seed, &stops, tol)?;
    Ok(out.nodes)
}

fn uniform_nodes(l: f64, h: f64) -> Vec<f64> {
    let mut n = ((2.0 * l) / h).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let n = n.max(2);
    let step = 2.0 * l / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|i| -l + step * i as f64).collect();
    nodes[n] = l;
    nodes
}

/// Sort, clamp to [lo, hi], and merge nodes closer than MIN_NODE_SEP.
/// Earlier entries win a merge, so callers list must-keep nodes first.
fn merge_nodes(mut nodes: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    nodes.retain(|&x| x >= lo && x <= hi);
    let mut tagged: Vec<(f64, usize)> = nodes.into_iter().enumerate().map(|(i, x)| (x, i)).collect();
    tagged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(tagged.len());
    for (x, rank) in tagged {
        if let Some(last) = out.last_mut() {
            if (x - last.0).abs() < MIN_NODE_SEP {
                // Keep the position of the earlier-listed (higher-priority) node.
                if rank < last.1 {
                    *last = (x, rank);
                }
                continue;
            }
        }
        out.push((x, rank));
    }
    let mut merged: Vec<f64> = out.into_iter().map(|(x, _)| x).collect();
    if let Some(first) = merged.first_mut() {
        *first = lo;
    }
    if let Some(last) = merged.last_mut() {
        *last = hi;
    }
    merged
}

fn reflect_sorted(nodes: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = nodes.iter().map(|&x| -x).collect();
    out.reverse();
    out
}

/// Pull sweep values at each target node (targets sorted ascending); the
/// sweeps were forced to stop at these nodes, so a nearest match within the
/// merge radius always exists.
fn values_at(targets: &[f64], nodes: &[(f64, f64)]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(targets.len());
    let mut j = 0usize;
    for &t in targets {
        while j + 1 < nodes.len() && (nodes[j + 1].0 - t).abs() <= (nodes[j].0 - t).abs() {
            j += 1;
        }
        if (nodes[j].0 - t).abs() > 10.0 * MIN_NODE_SEP {
            return Err(Error::InternalFault(format!(
                "integrator did not report a value at node {t}"
            )));
        }
        out.push(nodes[j].1);
    }
    Ok(out)
}

fn assemble(grid: Vec<f64>, w_v: Vec<f64>, w_u: Vec<f64>, l: f64, tol: f64) -> Result<Pfss> {
    let slack = 1e-9_f64.max(10.0 * tol);
    let n = grid.len();
    if n < 3 {
        return Err(Error::InvalidWindow("grid has fewer than 3 nodes".into()));
    }
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        if !(w_v[i] >= 1.0 - slack) {
            return Err(Error::InternalFault(format!(
                "v-side logarithmic derivative {} below 1 at x = {}",
                w_v[i], grid[i]
            )));
        }
        if !(-w_u[i] >= 1.0 - slack) {
            return Err(Error::InternalFault(format!(
                "u-side logarithmic derivative {} above -1 at x = {}",
                w_u[i], grid[i]
            )));
        }
        let r = 1.0 / (w_v[i] - w_u[i]);
        if !(r > 0.0 && r <= 1.0 + slack) {
            return Err(Error::InternalFault(format!(
                "product u v = {r} out of (0, 1] at x = {}",
                grid[i]
            )));
        }
        rho.push(r);
    }
    for i in 1..n {
        let dx = grid[i] - grid[i - 1];
        if (rho[i] - rho[i - 1]).abs() >= dx * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InternalFault(format!(
                "slope of u v exceeds 1 on cell ending at x = {}",
                grid[i]
            )));
        }
    }

    // Cumulative integral of 1/rho = w_v - w_u, anchored at the origin.
    let integrand: Vec<f64> = (0..n).map(|i| w_v[i] - w_u[i]).collect();
    let prefix = trapezoid_prefix(&grid, &integrand);
    let i0 = nearest_index(&grid, 0.0);
    let s0 = prefix[i0];
    let mut log_v = Vec::with_capacity(n);
    let mut log_u = Vec::with_capacity(n);
    for i in 0..n {
        let log_rho = rho[i].ln();
        let s = prefix[i] - s0;
        log_v.push(0.5 * (log_rho + s));
        log_u.push(0.5 * (log_rho - s));
    }

    Ok(Pfss {
        grid,
        w_v,
        w_u,
        rho,
        log_v,
        log_u,
        l,
        tol,
    })
}

fn nearest_index(grid: &[f64], x: f64) -> usize {
    let mut i = grid.partition_point(|g| *g < x);
    if i == grid.len() || (i > 0 && (x - grid[i - 1]).abs() <= (grid[i] - x).abs()) {
        i -= 1;
    }
    i
}

impl Pfss {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn w_v(&self) -> &[f64] {
        &self.w_v
    }

    pub fn w_u(&self) -> &[f64] {
        &self.w_u
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn log_v(&self) -> &[f64] {
        &self.log_v
    }

    pub fn log_u(&self) -> &[f64] {
        &self.log_u
    }

    pub fn domain_half_width(&self) -> f64 {
        self.l
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x < -self.l - 1e-12 || x > self.l + 1e-12 {
            return Err(Error::OutOfDomain {
                x,
                lo: -self.l,
                hi: self.l,
            });
        }
        Ok(())
    }

    /// Interpolated rho(x) = u(x) v(x); linear between grid nodes, so the
    /// result inherits 0 < rho <= 1 from the nodes.
    pub fn rho_at(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(interp::lerp(&self.grid, &self.rho, x))
    }

    pub fn w_v_at(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(interp::lerp(&self.grid, &self.w_v, x))
    }

    pub fn w_u_at(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(interp::lerp(&self.grid, &self.w_u, x))
    }

    pub fn log_v_at(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(interp::lerp(&self.grid, &self.log_v, x))
    }

    pub fn log_u_at(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(interp::lerp(&self.grid, &self.log_u, x))
    }

    /// log v(t) - log v(x) for t <= x, always <= -(x - t) up to quadrature
    /// error; evaluated from stored cumulative integrals of w_v, never by
    /// exponentiating large numbers.
    pub fn log_ratio_v(&self, t: f64, x: f64) -> Result<f64> {
        if t > x {
            return Err(Error::ArgumentOrder { a: t, b: x });
        }
        Ok(self.log_v_at(t)? - self.log_v_at(x)?)
    }

    /// Mirror ratio: log u(t) - log u(x) for t >= x, always <= -(t - x).
    pub fn log_ratio_u(&self, t: f64, x: f64) -> Result<f64> {
        if t < x {
            return Err(Error::ArgumentOrder { a: x, b: t });
        }
        Ok(self.log_u_at(t)? - self.log_u_at(x)?)
    }

    /// Self-check: max over the grid of |rho (w_v - w_u) - 1|.
    pub fn wronskian_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.grid.len() {
            worst = worst.max((self.rho[i] * (self.w_v[i] - self.w_u[i]) - 1.0).abs());
        }
        worst
    }

    /// Fault-injection hook: scale the stored product u v by `factor`,
    /// shifting the logarithmic fields consistently. Downstream inequality
    /// checks are expected to flag the result; nothing else uses this.
    pub fn scale_rho_for_fault_injection(&mut self, factor: f64) {
        assert!(factor > 0.0, "scale factor must be positive");
        let half_log = 0.5 * factor.ln();
        for r in &mut self.rho {
            *r *= factor;
        }
        for lv in &mut self.log_v {
            *lv += half_log;
        }
        for lu in &mut self.log_u {
            *lu += half_log;
        }
    }

    /// Renormalization u -> u/c, v -> c v. Every observable quantity (rho,
    /// logarithmic derivatives, kernel values) is invariant under this shift.
    pub fn shifted_normalization(&self, c: f64) -> Pfss {
        assert!(c > 0.0, "normalization constant must be positive");
        let mut out = self.clone();
        let lc = c.ln();
        for lv in &mut out.log_v {
            *lv += lc;
        }
        for lu in &mut out.log_u {
            *lu -= lc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pfss_const(c: f64, l: f64) -> Pfss {
        solve_pfss(&Potential::constant(c).unwrap(), l, 1e-10).unwrap()
    }

    #[test]
    fn unit_potential_has_exact_fields() {
        let p = pfss_const(1.0, 10.0);
        for i in 0..p.grid().len() {
            assert!((p.w_v()[i] - 1.0).abs() <= 1e-13);
            assert!((p.w_u()[i] + 1.0).abs() <= 1e-13);
            assert!((p.rho()[i] - 0.5).abs() <= 1e-13);
        }
        // v(x) = e^x / sqrt(2): log v = x - ln 2 / 2.
        for &x in &[-7.5, -1.0, 0.0, 2.0, 9.99] {
            assert_relative_eq!(
                p.log_v_at(x).unwrap(),
                x - 0.5 * 2.0_f64.ln(),
                epsilon = 1e-10,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                p.log_u_at(x).unwrap(),
                -x - 0.5 * 2.0_f64.ln(),
                epsilon = 1e-10,
                max_relative = 1e-10
            );
        }
        assert!(p.wronskian_residual() <= 1e-8);
    }

    #[test]
    fn constant_four_scales_fields() {
        let p = pfss_const(4.0, 8.0);
        for i in 0..p.grid().len() {
            assert!((p.w_v()[i] - 2.0).abs() <= 1e-12);
            assert!((p.w_u()[i] + 2.0).abs() <= 1e-12);
            assert!((p.rho()[i] - 0.25).abs() <= 1e-12);
        }
        assert_relative_eq!(
            p.log_ratio_v(0.0, 1.0).unwrap(),
            -2.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn log_ratio_examples() {
        let p = pfss_const(1.0, 10.0);
        assert_relative_eq!(p.log_ratio_v(0.0, 3.0).unwrap(), -3.0, epsilon = 1e-9);
        assert_eq!(p.log_ratio_v(2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(
            p.log_ratio_v(3.0, 0.0),
            Err(Error::ArgumentOrder { .. })
        ));
    }

    #[test]
    fn logarithmic_derivative_approaches_wkb_limit() {
        let q = Potential::polynomial(&[1.0, 0.0, 1.0]).unwrap();
        let p = solve_pfss(&q, 10.0, 1e-10).unwrap();
        for &x in &[-8.0_f64, 8.0] {
            let wkb = (1.0 + x * x).sqrt();
            let ratio = p.w_v_at(x).unwrap() / wkb;
            assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio} at {x}");
        }
        assert!(p.wronskian_residual() <= 1e-6);
    }

    #[test]
    fn growth_of_v_is_at_least_exponential() {
        let q = Potential::sinusoid(2.0, 1.0, 1.0, 0.0).unwrap();
        let p = solve_pfss(&q, 10.0, 1e-10).unwrap();
        let g = p.grid();
        let lv = p.log_v();
        let lu = p.log_u();
        let step = g.len() / 37;
        for i in (0..g.len()).step_by(step.max(1)) {
            for j in (i..g.len()).step_by(2 * step.max(1)) {
                let gap = g[j] - g[i];
                assert!(
                    lv[j] - lv[i] >= gap - 1e-8 - 1e-4 * gap,
                    "v grew too slowly between {} and {}",
                    g[i],
                    g[j]
                );
                assert!(
                    lu[i] - lu[j] >= gap - 1e-8 - 1e-4 * gap,
                    "u decayed too slowly between {} and {}",
                    g[i],
                    g[j]
                );
            }
        }
    }

    #[test]
    fn representation_product_recovers_rho() {
        let q = Potential::polynomial(&[1.0, 0.0, 1.0]).unwrap();
        let p = solve_pfss(&q, 6.0, 1e-10).unwrap();
        for i in 0..p.grid().len() {
            let prod = (p.log_v()[i] + p.log_u()[i]).exp();
            assert_relative_eq!(prod, p.rho()[i], max_relative = 1e-10);
        }
    }

    #[test]
    fn normalization_shift_is_unobservable() {
        let q = Potential::sinusoid(3.0, 1.5, 0.7, 0.2).unwrap();
        let p = solve_pfss(&q, 6.0, 1e-10).unwrap();
        let shifted = p.shifted_normalization(std::f64::consts::E.powi(3));
        for &x in &[-5.0, -0.3, 1.7, 5.9] {
            assert_relative_eq!(
                p.rho_at(x).unwrap(),
                shifted.rho_at(x).unwrap(),
                max_relative = 1e-12
            );
            // Kernel-style combination log_u(x) + log_v(t) is invariant.
            let t = x - 0.7;
            let a = p.log_u_at(x).unwrap() + p.log_v_at(t).unwrap();
            let b = shifted.log_u_at(x).unwrap() + shifted.log_v_at(t).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn slope_of_rho_stays_below_one() {
        let q = Potential::sinusoid(2.0, 1.0, 1.0, 0.0).unwrap();
        let p = solve_pfss(&q, 12.0, 1e-10).unwrap();
        let g = p.grid();
        let r = p.rho();
        for i in 1..g.len() {
            let slope = (r[i] - r[i - 1]).abs() / (g[i] - g[i - 1]);
            assert!(slope < 1.0, "slope {slope} at cell {i}");
        }
    }

    #[test]
    fn grid_contains_breakpoints_and_endpoints() {
        let q = Potential::from_json_str(
            r#"{ "segments": [
                { "from": "-inf", "to": -0.755, "shape": "constant", "params": { "value": 2.0 } },
                { "from": -0.755, "to": 1.0, "shape": "constant", "params": { "value": 5.0 } },
                { "from": 1.0, "to": "+inf", "shape": "constant", "params": { "value": 2.0 } }
            ] }"#,
        )
        .unwrap();
        let p = solve_pfss(&q, 4.0, 1e-10).unwrap();
        let g = p.grid();
        assert_eq!(g[0], -4.0);
        assert_eq!(*g.last().unwrap(), 4.0);
        for target in [-0.755, 0.0, 1.0] {
            assert!(
                g.iter().any(|&x| (x - target).abs() < 1e-9),
                "missing node {target}"
            );
        }
        // Fields stay sane across the jumps.
        for i in 0..g.len() {
            assert!(p.w_v()[i] >= 1.0 - 1e-9);
            assert!(p.w_u()[i] <= -1.0 + 1e-9);
        }
    }

    #[test]
    fn out_of_domain_queries_fail() {
        let p = pfss_const(1.0, 5.0);
        assert!(matches!(p.rho_at(5.1), Err(Error::OutOfDomain { .. })));
        assert!(matches!(p.log_v_at(-5.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn fault_injection_scales_rho_consistently() {
        let mut p = pfss_const(1.0, 5.0);
        p.scale_rho_for_fault_injection(2.0);
        assert_relative_eq!(p.rho_at(0.0).unwrap(), 1.0, epsilon = 1e-12);
        // The logarithmic representation follows the corrupted rho.
        let prod = (p.log_v()[0] + p.log_u()[0]).exp();
        assert_relative_eq!(prod, p.rho()[0], max_relative = 1e-12);
    }
}
