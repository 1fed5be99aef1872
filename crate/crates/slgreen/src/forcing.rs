//! Piecewise forcing functions (right-hand sides).
//!
//! Same shape grammar as potentials, with two relaxations: segments may
//! leave gaps (the function is zero there) and the indicator shape is
//! admissible. No lower-bound audit applies.

use std::path::Path;

use crate::error::{Error, Result};
use crate::potential::{Bound, PiecewiseSpec, Segment, Shape};

#[derive(Clone, Debug)]
pub struct Forcing {
    segments: Vec<Segment>,
    /// Finite segment edges, sorted and deduplicated.
    breakpoints: Vec<f64>,
}

impl Forcing {
    pub fn from_spec(spec: PiecewiseSpec) -> Result<Forcing> {
        if spec.segments.is_empty() {
            return Err(Error::InvalidSpec(
                "forcing needs at least one segment".into(),
            ));
        }
        for (i, seg) in spec.segments.iter().enumerate() {
            if !seg.shape.params_finite() {
                return Err(Error::InvalidSpec(format!(
                    "forcing segment {i} has non-finite parameters"
                )));
            }
            if !(seg.from.0 < seg.to.0) {
                return Err(Error::InvalidSpec(format!(
                    "forcing segment {i} does not satisfy from < to"
                )));
            }
        }
        for (i, pair) in spec.segments.windows(2).enumerate() {
            if pair[0].to.0 > pair[1].from.0 {
                return Err(Error::InvalidSpec(format!(
                    "forcing segments {i} and {} overlap",
                    i + 1
                )));
            }
        }
        let mut breakpoints: Vec<f64> = spec
            .segments
            .iter()
            .flat_map(|s| [s.from.0, s.to.0])
            .filter(|b| b.is_finite())
            .collect();
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        Ok(Forcing {
            segments: spec.segments,
            breakpoints,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Forcing> {
        let spec: PiecewiseSpec = serde_json::from_str(text)?;
        Forcing::from_spec(spec)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Forcing> {
        let text = std::fs::read_to_string(path)?;
        Forcing::from_json_str(&text)
    }

    /// f == value everywhere.
    pub fn constant(value: f64) -> Result<Forcing> {
        Forcing::from_spec(PiecewiseSpec {
            segments: vec![Segment {
                from: Bound(f64::NEG_INFINITY),
                to: Bound(f64::INFINITY),
                shape: Shape::Constant { value },
            }],
        })
    }

    /// f == 1 on [a, b), 0 elsewhere.
    pub fn indicator(a: f64, b: f64) -> Result<Forcing> {
        Forcing::from_spec(PiecewiseSpec {
            segments: vec![Segment {
                from: Bound(a),
                to: Bound(b),
                shape: Shape::Indicator,
            }],
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn segment_containing(&self, x: f64, right_limit: bool) -> Option<&Segment> {
        // Segments are sorted and disjoint; find the last with from <= x.
        let i = self
            .segments
            .partition_point(|s| if right_limit { s.from.0 <= x } else { s.from.0 < x });
        if i == 0 {
            return None;
        }
        let seg = &self.segments[i - 1];
        let inside = if right_limit {
            x < seg.to.0
        } else {
            x <= seg.to.0
        };
        inside.then_some(seg)
    }

    /// Value at x using right limits at segment edges; 0 inside gaps.
    pub fn eval(&self, x: f64) -> f64 {
        self.segment_containing(x, true)
            .map_or(0.0, |s| s.shape.eval(x))
    }

    /// Value at x using left limits at segment edges; 0 inside gaps.
    pub fn eval_left_limit(&self, x: f64) -> f64 {
        self.segment_containing(x, false)
            .map_or(0.0, |s| s.shape.eval(x))
    }

    /// Samples for cell-wise quadrature on a node grid: `lo[i]` is the right
    /// limit at `grid[i]` and `hi[i]` the left limit, so the cell
    /// `[grid[i], grid[i+1]]` reads its endpoint values as
    /// `(lo[i], hi[i+1])`. Piecewise-linear data whose jumps sit on grid
    /// nodes is reproduced exactly; single-valued node sampling would smear
    /// each jump over its two (generally unequal) neighbor cells instead.
    pub fn sample_cells(&self, grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lo = grid.iter().map(|&x| self.eval(x)).collect();
        let hi = grid.iter().map(|&x| self.eval_left_limit(x)).collect();
        (lo, hi)
    }

    /// Radius of the support: sup of |x| over points where some segment with
    /// a not-identically-zero shape is defined. Infinite when such a segment
    /// is unbounded; 0 when every segment is identically zero.
    pub fn support_radius(&self) -> f64 {
        let mut r = 0.0_f64;
        for seg in &self.segments {
            if shape_is_zero(&seg.shape) {
                continue;
            }
            r = r.max(seg.from.0.abs()).max(seg.to.0.abs());
        }
        r
    }
}

fn shape_is_zero(shape: &Shape) -> bool {
    match shape {
        Shape::Constant { value } => *value == 0.0,
        Shape::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
        Shape::Sinusoid {
            offset, amplitude, ..
        } => *offset == 0.0 && *amplitude == 0.0,
        Shape::Indicator => false,
    }
}
