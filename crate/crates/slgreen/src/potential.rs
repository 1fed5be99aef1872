//! Piecewise-analytic potentials q(x) >= 1 on the whole real line.
//!
//! A potential is an ordered list of segments tiling R, each carrying a shape
//! (constant, polynomial, or sinusoid) with a closed-form antiderivative, so
//! every integral of q is evaluated exactly rather than by quadrature. The
//! lower bound q >= 1 is audited at construction: exactly for constants and
//! sinusoids, and on a dense grid plus an asymptotic leading-term check for
//! polynomials.

use crate::error::{Error, Result};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Number of sample points used per polynomial segment in the q >= 1 audit.
const AUDIT_POINTS: usize = 10_000;
/// Half-width of the audit window used for unbounded polynomial segments.
const AUDIT_SPAN: f64 = 1000.0;
/// Largest truncation radius probed when deriving `domain_hint`.
const HINT_SCAN_MAX: u32 = 20_000;
/// Window mass that marks a tail as strongly growing when deriving `domain_hint`.
const HINT_MASS: f64 = 1.0e3;
/// Fallback truncation radius for potentials whose window mass never reaches `HINT_MASS`.
const HINT_FALLBACK: f64 = 50.0;

/// An endpoint of a segment: a real number or an infinite end of the line.
///
/// Serializes as a JSON number when finite and as `"-inf"` / `"+inf"` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound(pub f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else if self.0 == f64::INFINITY {
            s.serialize_str("+inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

struct BoundVisitor;

impl Visitor<'_> for BoundVisitor {
    type Value = Bound;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a number or one of \"-inf\", \"+inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Bound, E> {
        Ok(Bound(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Bound, E> {
        Ok(Bound(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Bound, E> {
        Ok(Bound(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Bound, E> {
        match v.to_ascii_lowercase().as_str() {
            "-inf" | "-infinity" => Ok(Bound(f64::NEG_INFINITY)),
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(Bound(f64::INFINITY)),
            other => Err(E::custom(format!("unrecognized bound `{other}`"))),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Bound, D::Error> {
        d.deserialize_any(BoundVisitor)
    }
}

/// Analytic shape of one segment. Every variant has a closed-form
/// antiderivative so segment integrals are exact.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", content = "params", rename_all = "lowercase")]
pub enum Shape {
    /// q(x) = value.
    Constant { value: f64 },
    /// q(x) = coeffs[0] + coeffs[1] x + ... + coeffs[k] x^k.
    Polynomial { coeffs: Vec<f64> },
    /// q(x) = offset + amplitude * sin(frequency * x + phase).
    Sinusoid {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Value 1 on its segment. Only admissible in forcing functions, where
    /// segments may leave gaps; a potential rejects it.
    Indicator,
}

impl Shape {
    /// Value at x, treating the shape as defined on all of R.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Constant { value } => *value,
            Shape::Polynomial { coeffs } => horner(coeffs, x),
            Shape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (frequency * x + phase).sin(),
            Shape::Indicator => 1.0,
        }
    }

    /// Exact integral over [a, b], written in forms with no large-term
    /// cancellation: every product carries a factor (b - a), so the absolute
    /// rounding error scales with the integral itself rather than with an
    /// antiderivative evaluated far from the origin. (A naive F(b) - F(a)
    /// loses ~eps * |F| absolutely, which at |x| ~ 1e3 for a cubic F is many
    /// orders above the integral of a narrow window and poisons adaptive
    /// quadrature built on top of these values.)
    fn segment_integral(&self, a: f64, b: f64) -> f64 {
        let h = b - a;
        match self {
            Shape::Constant { value } => value * h,
            Shape::Polynomial { coeffs } => {
                // int_a^b x^k dx = (b - a) * (sum_{j<=k} a^j b^{k-j}) / (k+1)
                let mut total = 0.0;
                let mut pow_a = vec![1.0; coeffs.len()];
                let mut pow_b = vec![1.0; coeffs.len()];
                for k in 1..coeffs.len() {
                    pow_a[k] = pow_a[k - 1] * a;
                    pow_b[k] = pow_b[k - 1] * b;
                }
                for (k, c) in coeffs.iter().enumerate() {
                    let mut powsum = 0.0;
                    for j in 0..=k {
                        powsum += pow_a[j] * pow_b[k - j];
                    }
                    total += c * powsum / (k as f64 + 1.0);
                }
                total * h
            }
            Shape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                // cos(wa+p) - cos(wb+p) = 2 sin(w(a+b)/2 + p) sin(w(b-a)/2)
                let mid = frequency * 0.5 * (a + b) + phase;
                let half = frequency * 0.5 * h;
                offset * h + 2.0 * amplitude / frequency * mid.sin() * half.sin()
            }
            Shape::Indicator => h,
        }
    }

    /// The shape s(-x), used to run right-to-left sweeps with left-to-right code.
    fn reflected(&self) -> Shape {
        match self {
            Shape::Constant { value } => Shape::Constant { value: *value },
            Shape::Polynomial { coeffs } => Shape::Polynomial {
                coeffs: coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| if k % 2 == 0 { *a } else { -*a })
                    .collect(),
            },
            Shape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => Shape::Sinusoid {
                offset: *offset,
                amplitude: -*amplitude,
                frequency: *frequency,
                phase: -*phase,
            },
            Shape::Indicator => Shape::Indicator,
        }
    }

    /// The shape shifted up by a constant.
    fn plus_constant(&self, delta: f64) -> Shape {
        match self {
            Shape::Constant { value } => Shape::Constant {
                value: value + delta,
            },
            Shape::Polynomial { coeffs } => {
                let mut c = coeffs.clone();
                if c.is_empty() {
                    c.push(delta);
                } else {
                    c[0] += delta;
                }
                Shape::Polynomial { coeffs: c }
            }
            Shape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => Shape::Sinusoid {
                offset: offset + delta,
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
            },
            Shape::Indicator => Shape::Constant { value: 1.0 + delta },
        }
    }

    pub(crate) fn params_finite(&self) -> bool {
        match self {
            Shape::Constant { value } => value.is_finite(),
            Shape::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
            Shape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                offset.is_finite()
                    && amplitude.is_finite()
                    && frequency.is_finite()
                    && phase.is_finite()
            }
            Shape::Indicator => true,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for a in coeffs.iter().rev() {
        acc = acc * x + a;
    }
    acc
}

/// One piece of a piecewise definition: a shape on [from, to).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    pub from: Bound,
    pub to: Bound,
    #[serde(flatten)]
    pub shape: Shape,
}

/// On-disk format: `{ "segments": [ { "from": ..., "to": ..., "shape": ..., "params": ... } ] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub segments: Vec<Segment>,
}

/// A validated potential q >= 1 tiling the real line.
#[derive(Clone, Debug)]
pub struct Potential {
    segments: Vec<Segment>,
    /// Finite boundaries between consecutive segments, strictly increasing.
    breakpoints: Vec<f64>,
    domain_hint: f64,
}

impl Potential {
    /// Validate a parsed spec: segments must tile R in order, parameters must
    /// be finite, and q >= 1 must hold (audited per shape).
    pub fn from_spec(spec: PiecewiseSpec) -> Result<Potential> {
        let segments = spec.segments;
        if segments.is_empty() {
            return Err(Error::InvalidSpec("potential has no segments".into()));
        }
        if segments.first().unwrap().from.0 != f64::NEG_INFINITY {
            return Err(Error::InvalidSpec(
                "first segment must start at \"-inf\"".into(),
            ));
        }
        if segments.last().unwrap().to.0 != f64::INFINITY {
            return Err(Error::InvalidSpec("last segment must end at \"+inf\"".into()));
        }
        let mut breakpoints = Vec::with_capacity(segments.len() - 1);
        for (i, seg) in segments.iter().enumerate() {
            if !seg.shape.params_finite() {
                return Err(Error::InvalidSpec(format!(
                    "segment {i} has non-finite parameters"
                )));
            }
            if let Shape::Indicator = seg.shape {
                return Err(Error::InvalidSpec(
                    "indicator shape is only admissible in forcing functions".into(),
                ));
            }
            if let Shape::Sinusoid { frequency, .. } = seg.shape {
                if frequency == 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "segment {i}: sinusoid frequency must be nonzero"
                    )));
                }
            }
            if !(seg.from.0 < seg.to.0) {
                return Err(Error::InvalidSpec(format!(
                    "segment {i} is empty or reversed: [{}, {})",
                    seg.from.0, seg.to.0
                )));
            }
            if i + 1 < segments.len() {
                let next = &segments[i + 1];
                if seg.to.0 != next.from.0 {
                    return Err(Error::InvalidSpec(format!(
                        "segments {i} and {} do not meet: {} vs {}",
                        i + 1,
                        seg.to.0,
                        next.from.0
                    )));
                }
                if !seg.to.0.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "interior boundary after segment {i} must be finite"
                    )));
                }
                breakpoints.push(seg.to.0);
            }
        }
        for seg in &segments {
            audit_at_least_one(seg)?;
        }
        let mut q = Potential {
            segments,
            breakpoints,
            domain_hint: HINT_FALLBACK,
        };
        q.domain_hint = derive_domain_hint(&q);
        Ok(q)
    }

    pub fn from_json_str(s: &str) -> Result<Potential> {
        let spec: PiecewiseSpec = serde_json::from_str(s)?;
        Potential::from_spec(spec)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Potential> {
        let text = std::fs::read_to_string(path)?;
        Potential::from_json_str(&text)
    }

    /// q(x) = c on the whole line.
    pub fn constant(c: f64) -> Result<Potential> {
        Potential::from_spec(PiecewiseSpec {
            segments: vec![Segment {
                from: Bound(f64::NEG_INFINITY),
                to: Bound(f64::INFINITY),
                shape: Shape::Constant { value: c },
            }],
        })
    }

    /// A single polynomial segment on the whole line.
    pub fn polynomial(coeffs: &[f64]) -> Result<Potential> {
        Potential::from_spec(PiecewiseSpec {
            segments: vec![Segment {
                from: Bound(f64::NEG_INFINITY),
                to: Bound(f64::INFINITY),
                shape: Shape::Polynomial {
                    coeffs: coeffs.to_vec(),
                },
            }],
        })
    }

    /// q(x) = offset + amplitude sin(frequency x + phase) on the whole line.
    pub fn sinusoid(offset: f64, amplitude: f64, frequency: f64, phase: f64) -> Result<Potential> {
        Potential::from_spec(PiecewiseSpec {
            segments: vec![Segment {
                from: Bound(f64::NEG_INFINITY),
                to: Bound(f64::INFINITY),
                shape: Shape::Sinusoid {
                    offset,
                    amplitude,
                    frequency,
                    phase,
                },
            }],
        })
    }

    /// Segments in order (read-only view).
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Finite interior boundaries, strictly increasing.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Suggested truncation radius: the smallest integer L at which the
    /// unit-window mass exceeds 10^3 on both tails, or 50 when the mass never
    /// grows that far (bounded or oscillating potentials).
    pub fn domain_hint(&self) -> f64 {
        self.domain_hint
    }

    /// Index of the segment owning x under the right-limit convention
    /// (a breakpoint belongs to the segment on its right).
    pub fn segment_of(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|b| *b <= x)
    }

    /// Value at x; at a breakpoint this is the limit from the right.
    pub fn eval(&self, x: f64) -> f64 {
        self.segments[self.segment_of(x)].shape.eval(x)
    }

    /// Value at x; at a breakpoint this is the limit from the left.
    pub fn eval_left_limit(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|b| *b < x);
        self.segments[idx].shape.eval(x)
    }

    /// Evaluate the analytic shape of segment `idx` at x, ignoring the
    /// segment's own bounds. Integrator steps that are known to stay inside
    /// one segment use this to see a smooth right-hand side.
    pub fn eval_segment(&self, idx: usize, x: f64) -> f64 {
        self.segments[idx].shape.eval(x)
    }

    /// Exact integral of q over [a, b] via closed-form segment integrals.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidWindow("integration bounds must be finite".into()));
        }
        if a > b {
            return Err(Error::ArgumentOrder { a, b });
        }
        let mut total = 0.0;
        for seg in &self.segments {
            let lo = a.max(seg.from.0);
            let hi = b.min(seg.to.0);
            if lo < hi {
                total += seg.shape.segment_integral(lo, hi);
            }
        }
        Ok(total)
    }

    /// Mass of q over the window [x - a, x + a]; requires a > 0.
    pub fn window_mass(&self, x: f64, a: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::InvalidWindow(format!(
                "window half-width must be positive, got {a}"
            )));
        }
        self.integrate(x - a, x + a)
    }

    /// Finite breakpoints strictly inside (a, b).
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.breakpoints
            .iter()
            .copied()
            .filter(|&t| t > a && t < b)
            .collect()
    }

    /// The reflected potential r(s) = q(-s). Validity (tiling, q >= 1) is
    /// preserved exactly; breakpoint values move from right-limits to
    /// left-limits, which no integral or interior evaluation can see.
    pub fn reflected(&self) -> Potential {
        let segments: Vec<Segment> = self
            .segments
            .iter()
            .rev()
            .map(|seg| Segment {
                from: Bound(-seg.to.0),
                to: Bound(-seg.from.0),
                shape: seg.shape.reflected(),
            })
            .collect();
        let mut breakpoints: Vec<f64> = self.breakpoints.iter().map(|b| -b).collect();
        breakpoints.reverse();
        Potential {
            segments,
            breakpoints,
            domain_hint: self.domain_hint,
        }
    }

    /// The potential q + delta for delta >= 0 (preserves q >= 1).
    pub fn plus_constant(&self, delta: f64) -> Result<Potential> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidSpec(
                "only non-negative constant shifts preserve the lower bound".into(),
            ));
        }
        let segments: Vec<Segment> = self
            .segments
            .iter()
            .map(|seg| Segment {
                from: seg.from,
                to: seg.to,
                shape: seg.shape.plus_constant(delta),
            })
            .collect();
        let mut q = Potential {
            segments,
            breakpoints: self.breakpoints.clone(),
            domain_hint: self.domain_hint,
        };
        q.domain_hint = derive_domain_hint(&q);
        Ok(q)
    }

    /// Serialize back to the on-disk spec.
    pub fn to_spec(&self) -> PiecewiseSpec {
        PiecewiseSpec {
            segments: self.segments.clone(),
        }
    }
}

/// Verify q >= 1 on one segment: exactly for constants and sinusoids, by a
/// dense grid plus an asymptotic leading-term check for polynomials.
fn audit_at_least_one(seg: &Segment) -> Result<()> {
    match &seg.shape {
        Shape::Constant { value } => {
            if *value < 1.0 {
                return Err(Error::BelowOne {
                    x: seg.from.0.max(0.0).min(seg.to.0),
                    value: *value,
                });
            }
        }
        Shape::Sinusoid {
            offset, amplitude, ..
        } => {
            if offset - amplitude.abs() < 1.0 {
                // The extremum may sit outside the segment, but a bound that
                // only holds by phase accident is rejected as unsafe.
                return Err(Error::BelowOne {
                    x: seg.from.0.max(0.0).min(seg.to.0),
                    value: offset - amplitude.abs(),
                });
            }
        }
        Shape::Polynomial { coeffs } => {
            let trimmed = trim_trailing_zeros(coeffs);
            if trimmed.is_empty() {
                return Err(Error::BelowOne {
                    x: seg.from.0.max(0.0).min(seg.to.0),
                    value: 0.0,
                });
            }
            let deg = trimmed.len() - 1;
            let lead = trimmed[deg];
            if seg.to.0 == f64::INFINITY && deg >= 1 && lead <= 0.0 {
                return Err(Error::BelowOne {
                    x: f64::MAX,
                    value: f64::NEG_INFINITY,
                });
            }
            if seg.from.0 == f64::NEG_INFINITY && deg >= 1 {
                let lead_left = if deg % 2 == 0 { lead } else { -lead };
                if lead_left <= 0.0 {
                    return Err(Error::BelowOne {
                        x: f64::MIN,
                        value: f64::NEG_INFINITY,
                    });
                }
            }
            let lo = if seg.from.0.is_finite() {
                seg.from.0
            } else {
                (seg.to.0 - AUDIT_SPAN).min(-AUDIT_SPAN)
            };
            let hi = if seg.to.0.is_finite() {
                seg.to.0
            } else {
                (seg.from.0 + AUDIT_SPAN).max(AUDIT_SPAN)
            };
            for i in 0..=AUDIT_POINTS {
                let x = lo + (hi - lo) * (i as f64) / (AUDIT_POINTS as f64);
                let v = horner(&trimmed, x);
                if v < 1.0 {
                    return Err(Error::BelowOne { x, value: v });
                }
            }
        }
        Shape::Indicator => unreachable!("indicator rejected before audit"),
    }
    Ok(())
}

fn trim_trailing_zeros(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    if c.len() == 1 && c[0] == 0.0 {
        c.clear();
    }
    c
}

fn derive_domain_hint(q: &Potential) -> f64 {
    for l in 1..=HINT_SCAN_MAX {
        let l = f64::from(l);
        let right = q.window_mass(l, 1.0).unwrap_or(0.0);
        let left = q.window_mass(-l, 1.0).unwrap_or(0.0);
        if right >= HINT_MASS && left >= HINT_MASS {
            return l;
        }
    }
    HINT_FALLBACK
}
