//! Points of ℝ^d and the metrics used for shadowing comparisons.
//!
//! Three metrics are available. [`Metric::SupNorm`] is the default for
//! every comparison (balls are axis-aligned boxes, which is what makes the
//! exact feasibility computation possible). [`Metric::PolarWarp`] is the
//! planar metric `d'(p, q) = ‖H(p) − H(q)‖₂` where `H` rescales the
//! Euclidean radius by `h(r) = r + r²`; it induces the usual topology but a
//! different uniform structure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℝ^d with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    /// Planar point. Panics on non-finite input.
    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(vec![x, y]).expect("finite planar point")
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Point(vec![0.0; dim])
    }

    /// Builds a point without the finiteness check; callers guarantee it.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn sub(&self, other: &Point) -> Result<Point> {
        check_dims(self, other)?;
        Ok(Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &Point) -> Result<Point> {
        check_dims(self, other)?;
        Ok(Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn check_dims(p: &Point, q: &Point) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    Ok(())
}

/// `max_j |p_j|`.
pub fn sup_norm(p: &Point) -> f64 {
    p.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

pub fn euclidean_norm(p: &Point) -> f64 {
    p.0.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// The radial warp `h(r) = r + r²`.
pub fn warp_radius(r: f64) -> f64 {
    r + r * r
}

/// Inverse of [`warp_radius`] on `[0, ∞)`.
pub fn unwarp_radius(s: f64) -> f64 {
    // r = (−1 + √(1 + 4s)) / 2, written to avoid cancellation for small s.
    2.0 * s / (1.0 + (1.0 + 4.0 * s).sqrt())
}

/// `H(p) = h(‖p‖₂) · p / ‖p‖₂`, with `H(0) = 0`.
pub fn polar_warp(p: &Point) -> Result<Point> {
    if p.dim() != 2 {
        return Err(Error::contract(format!(
            "polar warp is defined only in the plane (got d = {})",
            p.dim()
        )));
    }
    let r = euclidean_norm(p);
    if r == 0.0 {
        return Ok(p.clone());
    }
    // h(r)/r = 1 + r
    Ok(p.scale(1.0 + r))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    #[serde(alias = "sup_norm")]
    Sup,
    Euclidean,
    PolarWarp,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Sup => "sup",
            Metric::Euclidean => "euclidean",
            Metric::PolarWarp => "polar_warp",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sup" | "sup_norm" => Ok(Metric::Sup),
            "euclidean" => Ok(Metric::Euclidean),
            "polar_warp" => Ok(Metric::PolarWarp),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }

    /// Distance to the origin.
    pub fn norm(self, p: &Point) -> Result<f64> {
        match self {
            Metric::Sup => Ok(sup_norm(p)),
            Metric::Euclidean => Ok(euclidean_norm(p)),
            Metric::PolarWarp => {
                if p.dim() != 2 {
                    return Err(Error::contract("polar warp is defined only in the plane"));
                }
                Ok(warp_radius(euclidean_norm(p)))
            }
        }
    }

    pub fn distance(self, p: &Point, q: &Point) -> Result<f64> {
        check_dims(p, q)?;
        if self == Metric::PolarWarp && p.dim() != 2 {
            return Err(Error::contract(format!(
                "polar warp is defined only in the plane (got d = {})",
                p.dim()
            )));
        }
        Ok(self.distance_slices(&p.0, &q.0))
    }

    /// [`Metric::distance`] on raw coordinates of equal length (planar for
    /// `PolarWarp`).
    pub(crate) fn distance_slices(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Metric::Sup => p.iter().zip(q).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
            Metric::Euclidean => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Metric::PolarWarp => {
                let sp = 1.0 + (p[0] * p[0] + p[1] * p[1]).sqrt();
                let sq = 1.0 + (q[0] * q[0] + q[1] * q[1]).sqrt();
                let dx = p[0] * sp - q[0] * sq;
                let dy = p[1] * sp - q[1] * sq;
                (dx * dx + dy * dy).sqrt()
            }
        }
    }

    /// Largest `t ≥ 0` with `norm(t·u) = s`, for a nonzero direction `u`.
    pub(crate) fn scale_to_norm(self, u: &Point, s: f64) -> Result<f64> {
        match self {
            Metric::Sup => Ok(s / sup_norm(u)),
            Metric::Euclidean => Ok(s / euclidean_norm(u)),
            Metric::PolarWarp => Ok(unwarp_radius(s) / euclidean_norm(u)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Free-function form of [`Metric::distance`].
pub fn distance(metric: Metric, p: &Point, q: &Point) -> Result<f64> {
    metric.distance(p, q)
}

/// Closed interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn entire() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + 0.5 * (self.hi - self.lo)
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&Point::xy(0.0, 0.0)), 0.0);
        assert_eq!(sup_norm(&Point::xy(2.0, -5.0)), 5.0);
        assert_eq!(sup_norm(&Point::new(vec![1.0, 1.0, -7.0]).unwrap()), 7.0);
    }

    #[test]
    fn distance_examples() {
        let o = Point::xy(0.0, 0.0);
        assert_eq!(Metric::Sup.distance(&Point::xy(3.0, -1.0), &o).unwrap(), 3.0);
        assert_eq!(Metric::PolarWarp.distance(&Point::xy(1.0, 0.0), &o).unwrap(), 2.0);
        // h(2) = 2 + 4
        let direct = warp_radius(2.0);
        let d = Metric::PolarWarp.distance(&Point::xy(0.0, 2.0), &o).unwrap();
        assert_eq!(d, 6.0);
        assert_eq!(d, direct);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = Metric::Sup
            .distance(&Point::xy(0.0, 0.0), &Point::new(vec![1.0]).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let p3 = Point::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(Metric::PolarWarp.distance(&p3, &p3).is_err());
    }

    #[test]
    fn point_rejects_non_finite() {
        assert!(Point::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(serde_json::from_str::<Point>("[1.0, 2.0]").is_ok());
        assert!(serde_json::from_str::<Point>("[]").is_err());
    }

    #[test]
    fn unwarp_inverts_warp() {
        for r in [0.0, 1e-9, 0.3, 1.0, 17.5, 1e6] {
            let back = unwarp_radius(warp_radius(r));
            assert!((back - r).abs() <= 1e-12 * r.max(1.0), "{r} -> {back}");
        }
    }

    fn planar() -> impl Strategy<Value = Point> {
        (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(x, y)| Point::xy(x, y))
    }

    proptest! {
        #[test]
        fn metric_axioms(p in planar(), q in planar(), r in planar()) {
            for m in [Metric::Sup, Metric::Euclidean, Metric::PolarWarp] {
                let pq = m.distance(&p, &q).unwrap();
                let qp = m.distance(&q, &p).unwrap();
                let pr = m.distance(&p, &r).unwrap();
                let rq = m.distance(&r, &q).unwrap();
                let scale = 4.0 * f64::EPSILON * (pq + pr + rq).max(1.0);
                prop_assert_eq!(m.distance(&p, &p).unwrap(), 0.0);
                prop_assert!((pq - qp).abs() <= scale);
                prop_assert!(pq <= pr + rq + scale);
            }
        }

        #[test]
        fn warp_distance_to_origin_is_h_of_radius(p in planar()) {
            let r = euclidean_norm(&p);
            let d = Metric::PolarWarp.distance(&p, &Point::origin(2)).unwrap();
            let expected = r + r * r;
            prop_assert!((d - expected).abs() <= 1e-12 * expected.max(1e-300));
        }

        #[test]
        fn warp_is_strictly_monotone_in_radius(a in 0.0f64..1e3, b in 0.0f64..1e3) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(warp_radius(lo) < warp_radius(hi));
        }
    }

    #[test]
    fn warped_balls_nest_with_euclidean_balls() {
        // Same topology: B_E(p, r) ⊂ B_W(p, s(r)) and B_W(p, r) ⊂ B_E(p, r)
        // for points sampled around p at shrinking radii.
        let p = Point::xy(1.5, -0.5);
        for k in 1..12 {
            let r = 0.5_f64.powi(k);
            for i in 0..32 {
                let th = i as f64 * std::f64::consts::TAU / 32.0;
                let q = Point::xy(p.coords()[0] + r * th.cos(), p.coords()[1] + r * th.sin());
                let dw = Metric::PolarWarp.distance(&p, &q).unwrap();
                let de = Metric::Euclidean.distance(&p, &q).unwrap();
                // Warp expands distances (Jacobian ≥ identity) but only by a bounded factor locally.
                assert!(dw >= de * (1.0 - 1e-12));
                assert!(dw <= de * (1.0 + 2.0 * (euclidean_norm(&p) + r)) * (1.0 + 1e-12));
            }
        }
    }
}
