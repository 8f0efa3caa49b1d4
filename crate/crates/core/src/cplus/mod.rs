//! Strictly positive continuous functions (the ε's and δ's).
//!
//! A [`CPlusFn`] is an expression tree over the point variable. Every node
//! kind is continuous, so continuity holds by construction; positivity is
//! checked at each evaluation. Values that fall below the double range are
//! handled by [`CPlusFn::magnitude`], which falls back to a `log2`
//! representation so `2^(−‖x‖)` stays meaningful for any `‖x‖`.

mod construct;
mod delta;
pub(crate) mod ext;
mod json;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};
use crate::maps::Diffeo;

use ext::Ext;

pub use construct::{
    decaying_epsilon, epsilon_from_neighborhood, inf_convolution_brute_force, saddle_adversarial_epsilon,
    NeighborhoodSpec, RegularGrid, SampleSet, TabulatedEpsilon,
};
pub use delta::{synthesize_delta_homothety, ConditionCheck, DeltaSynthesis, SynthesizedDelta};

/// Piecewise-linear profile in the radius. Values are clamped to the
/// first/last knot outside the tabulated range.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    knots: Vec<(f64, f64)>,
}

impl RadialTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("radial table needs at least one knot"));
        }
        if knots.iter().any(|(r, v)| !r.is_finite() || !v.is_finite() || *r < 0.0) {
            return Err(Error::invalid("radial table knots must be finite with radius ≥ 0"));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("radial table radii must be strictly increasing"));
        }
        Ok(RadialTable { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn segment(&self, r: f64) -> Option<usize> {
        // Index i with knots[i].0 ≤ r < knots[i+1].0.
        let idx = self.knots.partition_point(|(k, _)| *k <= r);
        if idx == 0 || idx >= self.knots.len() {
            None
        } else {
            Some(idx - 1)
        }
    }

    pub fn interpolate(&self, r: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if r <= first.0 {
            return first.1;
        }
        if r >= last.0 {
            return last.1;
        }
        let i = self.segment(r).expect("inside table range");
        let (r0, v0) = self.knots[i];
        let (r1, v1) = self.knots[i + 1];
        let t = (r - r0) / (r1 - r0);
        v0 + t * (v1 - v0)
    }

    /// Linear interpolation, continued past the last knot with the final
    /// segment's slope (used for tables holding `log2` values).
    fn interpolate_with_tail(&self, r: f64) -> f64 {
        let n = self.knots.len();
        let last = self.knots[n - 1];
        if r > last.0 && n >= 2 {
            let prev = self.knots[n - 2];
            let slope = (last.1 - prev.1) / (last.0 - prev.0);
            return last.1 + slope * (r - last.0);
        }
        self.interpolate(r)
    }
}

/// Expression tree node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// `‖x‖` in the given metric.
    Norm(Metric),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    /// Subtraction; the result must stay positive.
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    /// `2^(−u)`.
    Exp2Neg(Box<Expr>),
    /// `1/u`; `u` must be positive.
    Recip(Box<Expr>),
    /// Piecewise-linear in `‖x‖`.
    Radial { metric: Metric, table: RadialTable },
    /// `2^T(‖x‖)` with `T` piecewise-linear (and linearly continued past
    /// the last knot). Positive for every input.
    RadialLog2 { metric: Metric, table: RadialTable },
    Clamp { arg: Box<Expr>, lo: f64, hi: f64 },
    /// `min_j (v_j + d(x, s_j))` over tabulated sites.
    InfConv {
        metric: Metric,
        sites: Vec<Point>,
        values: Vec<f64>,
    },
    /// `base(c⁻¹(x)) · M(c⁻¹(x))` where `M` bounds how much the change `c`
    /// stretches sup-balls of radius `base(c⁻¹(x))`.
    Transport { change: Diffeo, base: Box<Expr> },
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn norm(metric: Metric) -> Expr {
        Expr::Norm(metric)
    }

    pub fn exp2_neg(self) -> Expr {
        Expr::Exp2Neg(Box::new(self))
    }

    pub fn recip(self) -> Expr {
        Expr::Recip(Box::new(self))
    }

    pub fn min(self, other: Expr) -> Expr {
        Expr::Min(Box::new(self), Box::new(other))
    }

    pub fn max(self, other: Expr) -> Expr {
        Expr::Max(Box::new(self), Box::new(other))
    }

    pub fn clamp(self, lo: f64, hi: f64) -> Expr {
        Expr::Clamp {
            arg: Box::new(self),
            lo,
            hi,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Expr::Const(_) => "const",
            Expr::Norm(_) => "norm",
            Expr::Coord(_) => "coord",
            Expr::Add(..) => "add",
            Expr::Sub(..) => "sub",
            Expr::Mul(..) => "mul",
            Expr::Min(..) => "min",
            Expr::Max(..) => "max",
            Expr::Exp2Neg(_) => "exp2neg",
            Expr::Recip(_) => "recip",
            Expr::Radial { .. } => "radial",
            Expr::RadialLog2 { .. } => "radial_log2",
            Expr::Clamp { .. } => "clamp",
            Expr::InfConv { .. } => "infconv",
            Expr::Transport { .. } => "transport",
        }
    }

    /// Plain double evaluation. Sets `underflow` when an intermediate
    /// result lost range, in which case the caller retries in `log2`.
    fn plain(&self, p: &Point, underflow: &mut bool) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Norm(m) => m.norm(p)?,
            Expr::Coord(i) => *p.coords().get(*i).ok_or(Error::DimensionMismatch {
                expected: i + 1,
                got: p.dim(),
            })?,
            Expr::Add(a, b) => a.plain(p, underflow)? + b.plain(p, underflow)?,
            Expr::Sub(a, b) => {
                let v = a.plain(p, underflow)? - b.plain(p, underflow)?;
                if !(v > 0.0) && !*underflow {
                    return Err(Error::NonPositive { node: "sub", value: v });
                }
                v
            }
            Expr::Mul(a, b) => {
                let (x, y) = (a.plain(p, underflow)?, b.plain(p, underflow)?);
                let v = x * y;
                if (v == 0.0 || v.abs() < f64::MIN_POSITIVE || !v.is_finite()) && x != 0.0 && y != 0.0 {
                    *underflow = true;
                }
                v
            }
            Expr::Min(a, b) => a.plain(p, underflow)?.min(b.plain(p, underflow)?),
            Expr::Max(a, b) => a.plain(p, underflow)?.max(b.plain(p, underflow)?),
            Expr::Exp2Neg(u) => {
                let v = (-u.plain(p, underflow)?).exp2();
                if v < f64::MIN_POSITIVE || !v.is_finite() {
                    *underflow = true;
                }
                v
            }
            Expr::Recip(u) => {
                let x = u.plain(p, underflow)?;
                if !(x > 0.0) && !*underflow {
                    return Err(Error::NonPositive { node: "recip", value: x });
                }
                let v = 1.0 / x;
                if !v.is_finite() || v < f64::MIN_POSITIVE {
                    *underflow = true;
                }
                v
            }
            Expr::Radial { metric, table } => table.interpolate(metric.norm(p)?),
            Expr::RadialLog2 { metric, table } => {
                let v = table.interpolate_with_tail(metric.norm(p)?).exp2();
                if v < f64::MIN_POSITIVE || !v.is_finite() {
                    *underflow = true;
                }
                v
            }
            Expr::Clamp { arg, lo, hi } => arg.plain(p, underflow)?.clamp(*lo, *hi),
            Expr::InfConv { metric, sites, values } => {
                let mut best = f64::INFINITY;
                for (s, v) in sites.iter().zip(values) {
                    best = best.min(v + metric.distance(p, s)?);
                }
                best
            }
            Expr::Transport { change, base } => {
                let x = change.apply_inverse(p)?;
                let e = base.plain(&x, underflow)?;
                let m = change.sup_modulus(&x, e.max(0.0))?;
                let v = e * m;
                if (v == 0.0 || v < f64::MIN_POSITIVE) && e != 0.0 {
                    *underflow = true;
                }
                v
            }
        })
    }

    fn ext(&self, p: &Point) -> Result<Ext> {
        Ok(match self {
            Expr::Const(_) | Expr::Norm(_) | Expr::Coord(_) | Expr::Radial { .. } | Expr::InfConv { .. } => {
                let mut uf = false;
                Ext::from_f64(self.plain(p, &mut uf)?)
            }
            Expr::Add(a, b) => a.ext(p)?.add(b.ext(p)?),
            Expr::Sub(a, b) => {
                let v = a.ext(p)?.add(b.ext(p)?.neg());
                if v.sign <= 0 {
                    return Err(Error::NonPositive {
                        node: "sub",
                        value: v.to_f64(),
                    });
                }
                v
            }
            Expr::Mul(a, b) => a.ext(p)?.mul(b.ext(p)?),
            Expr::Min(a, b) => a.ext(p)?.min(b.ext(p)?),
            Expr::Max(a, b) => a.ext(p)?.max(b.ext(p)?),
            Expr::Exp2Neg(u) => Ext::positive_log2(-u.ext(p)?.to_f64()),
            Expr::Recip(u) => {
                let x = u.ext(p)?;
                if x.sign <= 0 {
                    return Err(Error::NonPositive {
                        node: "recip",
                        value: x.to_f64(),
                    });
                }
                x.recip()
            }
            Expr::RadialLog2 { metric, table } => Ext::positive_log2(table.interpolate_with_tail(metric.norm(p)?)),
            Expr::Clamp { arg, lo, hi } => {
                let v = arg.ext(p)?;
                v.max(Ext::from_f64(*lo)).min(Ext::from_f64(*hi))
            }
            Expr::Transport { change, base } => {
                let x = change.apply_inverse(p)?;
                let e = base.ext(&x)?;
                let m = change.sup_modulus(&x, e.to_f64().max(0.0))?;
                e.mul(Ext::from_f64(m))
            }
        })
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

/// A strictly positive value, kept as `log2` when it is not representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Magnitude {
    pub log2: f64,
    /// `2^log2` when representable as a normal double, else `0.0`.
    pub value: f64,
}

impl Magnitude {
    pub fn from_value(v: f64) -> Magnitude {
        Magnitude { log2: v.log2(), value: v }
    }

    pub fn from_log2(log2: f64) -> Magnitude {
        let v = log2.exp2();
        Magnitude {
            log2,
            value: if v >= f64::MIN_POSITIVE && v.is_finite() { v } else { 0.0 },
        }
    }

    pub fn is_representable(&self) -> bool {
        self.value >= f64::MIN_POSITIVE
    }

    /// `d < self`.
    pub fn exceeds(&self, d: f64) -> bool {
        if self.is_representable() {
            d < self.value
        } else {
            d == 0.0 || d.log2() < self.log2
        }
    }

    /// `d ≤ self`.
    pub fn covers(&self, d: f64) -> bool {
        if self.is_representable() {
            d <= self.value
        } else {
            d == 0.0 || d.log2() <= self.log2
        }
    }

    /// `(self − d)/self`; positive exactly when `d < self` (up to rounding
    /// of the ratio in the non-representable case).
    pub fn relative_slack(&self, d: f64) -> f64 {
        if self.is_representable() {
            (self.value - d) / self.value
        } else if d == 0.0 {
            1.0
        } else {
            1.0 - (d.log2() - self.log2).exp2()
        }
    }

    pub fn scale(&self, factor: f64) -> Magnitude {
        Magnitude::from_log2(self.log2 + factor.log2())
    }

    pub fn cmp_log2(&self, other: &Magnitude) -> Ordering {
        if self.is_representable() && other.is_representable() {
            self.value.total_cmp(&other.value)
        } else {
            self.log2.total_cmp(&other.log2)
        }
    }
}

/// A strictly positive continuous function ℝ^d → ℝ⁺.
#[derive(Clone, Debug, PartialEq)]
pub struct CPlusFn {
    expr: Expr,
}

impl CPlusFn {
    pub fn new(expr: Expr) -> Self {
        CPlusFn { expr }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::NonPositive { node: "const", value: c });
        }
        Ok(CPlusFn::new(Expr::Const(c)))
    }

    /// Radial piecewise-linear function of the sup norm.
    pub fn radial_table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((_, v)) = knots.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::NonPositive { node: "radial", value: *v });
        }
        Ok(CPlusFn::new(Expr::Radial {
            metric: Metric::Sup,
            table: RadialTable::new(knots)?,
        }))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }

    /// Evaluates to a positive double.
    ///
    /// Returns [`Error::Underflow`] when the value is positive but below the
    /// double range; [`CPlusFn::magnitude`] handles that case.
    pub fn eval(&self, p: &Point) -> Result<f64> {
        let m = self.magnitude(p)?;
        if m.is_representable() {
            Ok(m.value)
        } else {
            Err(Error::Underflow { log2: m.log2 })
        }
    }

    pub fn magnitude(&self, p: &Point) -> Result<Magnitude> {
        let mut underflow = false;
        let v = self.expr.plain(p, &mut underflow)?;
        if v >= f64::MIN_POSITIVE && v.is_finite() {
            return Ok(Magnitude::from_value(v));
        }
        if !underflow {
            return Err(Error::NonPositive {
                node: self.expr.name(),
                value: v,
            });
        }
        let e = self.expr.ext(p)?;
        if e.sign <= 0 || e.log2.is_nan() {
            return Err(Error::NonPositive {
                node: self.expr.name(),
                value: e.to_f64(),
            });
        }
        Ok(Magnitude::from_log2(e.log2))
    }

    pub fn eval_log2(&self, p: &Point) -> Result<f64> {
        Ok(self.magnitude(p)?.log2)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json::expr_to_json(&self.expr)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        Ok(CPlusFn::new(json::expr_from_json(v)?))
    }
}

impl serde::Serialize for CPlusFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for CPlusFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        CPlusFn::from_json(&v).map_err(serde::de::Error::custom)
    }
}
