//! Homeomorphisms of ℝ^d with exact forward/inverse evaluation.
//!
//! Diagonal-affine maps `y ↦ a ⊙ y + t` are iterated in closed form,
//! `fⁿ(y)_j = a_jⁿ y_j + t_j (a_jⁿ − 1)/(a_j − 1)` (or `n t_j` when
//! `a_j = 1`), for positive and negative `n` alike. Conjugated maps go
//! through the change of coordinates and iterate the inner map exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_norm, Point};

/// Strictly increasing radial profile `h` with `h(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `h(r) = r + coeff·r²`, `coeff ≥ 0`.
    Quadratic { coeff: f64 },
    /// `h(r) = r^exponent`, `exponent > 0`.
    Power { exponent: f64 },
}

impl RadialProfile {
    pub fn h(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Quadratic { coeff } => r + coeff * r * r,
            RadialProfile::Power { exponent } => r.powf(exponent),
        }
    }

    pub fn h_inv(&self, s: f64) -> f64 {
        match *self {
            RadialProfile::Quadratic { coeff } => {
                if coeff == 0.0 {
                    s
                } else {
                    2.0 * s / (1.0 + (1.0 + 4.0 * coeff * s).sqrt())
                }
            }
            RadialProfile::Power { exponent } => s.powf(1.0 / exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RadialProfile::Quadratic { coeff } if !(coeff >= 0.0 && coeff.is_finite()) => {
                Err(Error::invalid(format!("quadratic profile needs coeff ≥ 0, got {coeff}")))
            }
            RadialProfile::Power { exponent } if !(exponent > 0.0 && exponent.is_finite()) => {
                Err(Error::invalid(format!("power profile needs exponent > 0, got {exponent}")))
            }
            _ => Ok(()),
        }
    }
}

/// Invertible affine change `p ↦ L p + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineDef", into = "AffineDef")]
pub struct AffineChange {
    linear: Vec<Vec<f64>>,
    offset: Vec<f64>,
    inverse: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct AffineDef {
    linear: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl TryFrom<AffineDef> for AffineChange {
    type Error = Error;

    fn try_from(def: AffineDef) -> Result<Self> {
        AffineChange::new(def.linear, def.offset)
    }
}

impl From<AffineChange> for AffineDef {
    fn from(a: AffineChange) -> Self {
        AffineDef {
            linear: a.linear,
            offset: a.offset,
        }
    }
}

impl AffineChange {
    pub fn new(linear: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        if d == 0 || linear.len() != d || linear.iter().any(|row| row.len() != d) {
            return Err(Error::invalid("affine change needs a d×d matrix and a d-vector"));
        }
        if linear.iter().flatten().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::invalid("affine change entries must be finite"));
        }
        let m = DMatrix::from_fn(d, d, |i, j| linear[i][j]);
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::invalid("affine change matrix is singular"))?;
        let inverse = (0..d).map(|i| (0..d).map(|j| inv[(i, j)]).collect()).collect();
        Ok(AffineChange {
            linear,
            offset,
            inverse,
        })
    }

    pub fn shift(offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        let linear = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        AffineChange::new(linear, offset)
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn forward(&self, p: &Point) -> Point {
        let c = p.coords();
        Point::from_vec_unchecked(
            self.linear
                .iter()
                .zip(&self.offset)
                .map(|(row, b)| row.iter().zip(c).map(|(l, x)| l * x).sum::<f64>() + b)
                .collect(),
        )
    }

    fn backward(&self, p: &Point) -> Point {
        let shifted: Vec<f64> = p.coords().iter().zip(&self.offset).map(|(x, b)| x - b).collect();
        Point::from_vec_unchecked(
            self.inverse
                .iter()
                .map(|row| row.iter().zip(&shifted).map(|(l, x)| l * x).sum())
                .collect(),
        )
    }

    /// Operator norm of the linear part with respect to the sup norm.
    fn sup_operator_norm(&self) -> f64 {
        self.linear
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Change of coordinates used for conjugation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffeo {
    Identity,
    Affine(AffineChange),
    /// `p ↦ h(‖p‖₂) p / ‖p‖₂`, fixing the origin.
    Radial(RadialProfile),
    /// `outer ∘ inner`.
    Compose { outer: Box<Diffeo>, inner: Box<Diffeo> },
}

impl Diffeo {
    pub fn radial_quadratic(coeff: f64) -> Result<Self> {
        let p = RadialProfile::Quadratic { coeff };
        p.validate()?;
        Ok(Diffeo::Radial(p))
    }

    pub fn compose(outer: Diffeo, inner: Diffeo) -> Self {
        Diffeo::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    /// Required dimension, if the change is dimension-specific.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Diffeo::Identity | Diffeo::Radial(_) => None,
            Diffeo::Affine(a) => Some(a.dim()),
            Diffeo::Compose { outer, inner } => outer.dim().or(inner.dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Diffeo::Identity | Diffeo::Affine(_) => Ok(()),
            Diffeo::Radial(p) => p.validate(),
            Diffeo::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
                if let (Some(a), Some(b)) = (outer.dim(), inner.dim()) {
                    if a != b {
                        return Err(Error::DimensionMismatch { expected: a, got: b });
                    }
                }
                Ok(())
            }
        }
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        match self.dim() {
            Some(d) if d != p.dim() => Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            }),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.check_point(p)?;
        let out = match self {
            Diffeo::Identity => p.clone(),
            Diffeo::Affine(a) => a.forward(p),
            Diffeo::Radial(prof) => radial(p, |r| prof.h(r)),
            Diffeo::Compose { outer, inner } => outer.apply(&inner.apply(p)?)?,
        };
        finite_or_range(out, 1)
    }

    pub fn apply_inverse(&self, p: &Point) -> Result<Point> {
        self.check_point(p)?;
        let out = match self {
            Diffeo::Identity => p.clone(),
            Diffeo::Affine(a) => a.backward(p),
            Diffeo::Radial(prof) => radial(p, |s| prof.h_inv(s)),
            Diffeo::Compose { outer, inner } => inner.apply_inverse(&outer.apply_inverse(p)?)?,
        };
        finite_or_range(out, -1)
    }

    /// Upper bound for `sup { ‖D(z) − D(x)‖_∞ : ‖z − x‖_∞ ≤ radius } / radius`.
    pub fn sup_modulus(&self, x: &Point, radius: f64) -> Result<f64> {
        self.check_point(x)?;
        let d = x.dim() as f64;
        match self {
            Diffeo::Identity => Ok(1.0),
            Diffeo::Affine(a) => Ok(a.sup_operator_norm()),
            Diffeo::Radial(prof) => {
                // Euclidean ball of radius √d·radius contains the sup ball.
                let reach = d.sqrt() * radius;
                let r_max = euclidean_norm(x) + reach;
                match *prof {
                    RadialProfile::Quadratic { coeff } => Ok(d.sqrt() * (1.0 + 2.0 * coeff * r_max)),
                    RadialProfile::Power { exponent } if exponent >= 1.0 => {
                        Ok(d.sqrt() * exponent * r_max.powf(exponent - 1.0))
                    }
                    RadialProfile::Power { exponent } => {
                        let r_min = euclidean_norm(x) - reach;
                        if r_min <= 0.0 {
                            return Err(Error::contract(
                                "power profile with exponent < 1 is not Lipschitz near the origin",
                            ));
                        }
                        Ok(d.sqrt() * r_min.powf(exponent - 1.0))
                    }
                }
            }
            Diffeo::Compose { outer, inner } => {
                let m_in = inner.sup_modulus(x, radius)?;
                let m_out = outer.sup_modulus(&inner.apply(x)?, m_in * radius)?;
                Ok(m_in * m_out)
            }
        }
    }
}

fn radial(p: &Point, h: impl Fn(f64) -> f64) -> Point {
    let r = euclidean_norm(p);
    if r == 0.0 {
        return p.clone();
    }
    p.scale(h(r) / r)
}

fn finite_or_range(p: Point, n: i64) -> Result<Point> {
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::IterateRange { n })
    }
}

/// A homeomorphism of ℝ^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    DiagonalAffine { scales: Vec<f64>, translation: Vec<f64> },
    /// `z ↦ c·z̄` in the plane, i.e. `(x, y) ↦ (c x, −c y)`.
    ReverseHomothety { factor: f64 },
    /// `change ∘ inner ∘ change⁻¹`.
    Conjugated { inner: Box<MapSpec>, change: Diffeo },
    Power { inner: Box<MapSpec>, k: i64 },
}

impl MapSpec {
    pub fn diagonal_affine(scales: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let m = MapSpec::DiagonalAffine { scales, translation };
        m.validate()?;
        Ok(m)
    }

    /// `(x, y) ↦ (2x, y/2)`.
    pub fn saddle() -> Self {
        MapSpec::DiagonalAffine {
            scales: vec![2.0, 0.5],
            translation: vec![0.0, 0.0],
        }
    }

    /// `x ↦ k x` on ℝ^d.
    pub fn homothety(dim: usize, factor: f64) -> Result<Self> {
        if factor.abs() == 1.0 {
            return Err(Error::invalid("homothety factor must satisfy |k| ≠ 1"));
        }
        MapSpec::diagonal_affine(vec![factor; dim], vec![0.0; dim])
    }

    /// `x ↦ x + e₁` on ℝ^d.
    pub fn translation(dim: usize) -> Self {
        let mut t = vec![0.0; dim];
        t[0] = 1.0;
        MapSpec::DiagonalAffine {
            scales: vec![1.0; dim],
            translation: t,
        }
    }

    pub fn reverse_homothety(factor: f64) -> Result<Self> {
        let m = MapSpec::ReverseHomothety { factor };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapSpec::DiagonalAffine { scales, translation } => {
                if scales.is_empty() || scales.len() != translation.len() {
                    return Err(Error::invalid("scales and translation must have equal positive length"));
                }
                if scales.iter().any(|a| *a == 0.0 || !a.is_finite())
                    || translation.iter().any(|t| !t.is_finite())
                {
                    return Err(Error::invalid("diagonal scales must be finite and nonzero"));
                }
                Ok(())
            }
            MapSpec::ReverseHomothety { factor } => {
                if !factor.is_finite() || factor.abs() == 1.0 || *factor == 0.0 {
                    return Err(Error::invalid("reverse homothety factor must satisfy |c| ∉ {0, 1}"));
                }
                Ok(())
            }
            MapSpec::Conjugated { inner, change } => {
                inner.validate()?;
                change.validate()?;
                match change.dim() {
                    Some(d) if d != inner.dim() => Err(Error::DimensionMismatch {
                        expected: inner.dim(),
                        got: d,
                    }),
                    _ => Ok(()),
                }
            }
            MapSpec::Power { inner, k } => {
                if *k == 0 {
                    return Err(Error::invalid("power k must be nonzero"));
                }
                inner.validate()
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MapSpec::DiagonalAffine { scales, .. } => scales.len(),
            MapSpec::ReverseHomothety { .. } => 2,
            MapSpec::Conjugated { inner, .. } | MapSpec::Power { inner, .. } => inner.dim(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MapSpec::DiagonalAffine { scales, translation } => {
                format!("diagonal_affine(scales={scales:?}, translation={translation:?})")
            }
            MapSpec::ReverseHomothety { factor } => format!("reverse_homothety({factor})"),
            MapSpec::Conjugated { inner, .. } => format!("conjugated({})", inner.describe()),
            MapSpec::Power { inner, k } => format!("power({}, {k})", inner.describe()),
        }
    }

    /// `(scales, translation)` when the map acts coordinatewise affinely.
    pub fn diagonal_form(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            MapSpec::DiagonalAffine { scales, translation } => Some((scales.clone(), translation.clone())),
            MapSpec::ReverseHomothety { factor } => Some((vec![*factor, -factor], vec![0.0, 0.0])),
            MapSpec::Power { inner, k } => {
                let (a, t) = match inner.as_ref() {
                    MapSpec::DiagonalAffine { .. } | MapSpec::ReverseHomothety { .. } => inner.diagonal_form()?,
                    _ => return None,
                };
                diagonal_power(&a, &t, *k).ok()
            }
            MapSpec::Conjugated { .. } => None,
        }
    }

    pub fn is_diagonal_affine(&self) -> bool {
        self.diagonal_form().is_some()
    }

    /// `|k|` when the map is `x ↦ A x` with `A` diagonal and `|a_j| = k` for all j.
    pub fn conformal_factor(&self) -> Option<f64> {
        let (a, t) = self.diagonal_form()?;
        if t.iter().any(|v| *v != 0.0) {
            return None;
        }
        let k = a[0].abs();
        a.iter().all(|v| v.abs() == k).then_some(k)
    }

    fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.iterate(p, 1)
    }

    pub fn apply_inverse(&self, p: &Point) -> Result<Point> {
        self.iterate(p, -1)
    }

    /// `fⁿ(p)`; negative `n` iterates the inverse.
    pub fn iterate(&self, p: &Point, n: i64) -> Result<Point> {
        self.check(p)?;
        if n == 0 {
            return Ok(p.clone());
        }
        match self {
            MapSpec::DiagonalAffine { scales, translation } => diagonal_iterate(scales, translation, p, n),
            MapSpec::ReverseHomothety { factor } => {
                diagonal_iterate(&[*factor, -factor], &[0.0, 0.0], p, n)
            }
            MapSpec::Conjugated { inner, change } => {
                let q = change.apply_inverse(p)?;
                change.apply(&inner.iterate(&q, n)?)
            }
            MapSpec::Power { inner, k } => {
                let total = k.checked_mul(n).ok_or(Error::IterateRange { n })?;
                inner.iterate(p, total)
            }
        }
    }
}

/// `aⁿ`, failing when the result leaves the normal double range.
pub(crate) fn checked_pow(a: f64, n: i64) -> Result<f64> {
    let v = if let Ok(n32) = i32::try_from(n) {
        a.powi(n32)
    } else {
        a.powf(n as f64)
    };
    if !v.is_finite() || v == 0.0 || v.abs() < f64::MIN_POSITIVE {
        return Err(Error::IterateRange { n });
    }
    Ok(v)
}

/// `τ(n) = t (aⁿ − 1)/(a − 1)`, the affine drift after `n` steps.
pub(crate) fn drift(a: f64, t: f64, a_n: f64, n: i64) -> f64 {
    if t == 0.0 {
        0.0
    } else if a == 1.0 {
        n as f64 * t
    } else {
        t * (a_n - 1.0) / (a - 1.0)
    }
}

fn diagonal_iterate(scales: &[f64], translation: &[f64], p: &Point, n: i64) -> Result<Point> {
    let mut out = Vec::with_capacity(p.dim());
    for ((a, t), y) in scales.iter().zip(translation).zip(p.coords()) {
        let a_n = checked_pow(*a, n)?;
        let v = a_n * y + drift(*a, *t, a_n, n);
        if !v.is_finite() {
            return Err(Error::IterateRange { n });
        }
        out.push(v);
    }
    Ok(Point::from_vec_unchecked(out))
}

fn diagonal_power(a: &[f64], t: &[f64], k: i64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut scales = Vec::with_capacity(a.len());
    let mut shift = Vec::with_capacity(a.len());
    for (aj, tj) in a.iter().zip(t) {
        let a_k = checked_pow(*aj, k)?;
        scales.push(a_k);
        shift.push(drift(*aj, *tj, a_k, k));
    }
    Ok((scales, shift))
}

/// `g = change ∘ inner ∘ change⁻¹`.
pub fn conjugate_map(inner: MapSpec, change: Diffeo) -> Result<MapSpec> {
    let m = MapSpec::Conjugated {
        inner: Box::new(inner),
        change,
    };
    m.validate()?;
    Ok(m)
}

/// `inner^k`. Diagonal-affine inners are normalized to a diagonal-affine
/// result so the exact feasibility path stays available.
pub fn power_map(inner: MapSpec, k: i64) -> Result<MapSpec> {
    if k == 0 {
        return Err(Error::invalid("power k must be nonzero"));
    }
    inner.validate()?;
    if let Some((a, t)) = inner.diagonal_form() {
        let (scales, translation) = diagonal_power(&a, &t, k)?;
        return Ok(MapSpec::DiagonalAffine { scales, translation });
    }
    Ok(MapSpec::Power {
        inner: Box::new(inner),
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(p: &Point, q: &Point, tol: f64) -> bool {
        p.coords().iter().zip(q.coords()).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn catalog() -> Vec<MapSpec> {
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        vec![
            MapSpec::saddle(),
            hom.clone(),
            MapSpec::translation(2),
            MapSpec::reverse_homothety(0.5).unwrap(),
            conjugate_map(hom.clone(), Diffeo::radial_quadratic(1.0).unwrap()).unwrap(),
            conjugate_map(
                MapSpec::saddle(),
                Diffeo::Affine(AffineChange::new(vec![vec![1.0, 0.5], vec![0.0, 2.0]], vec![1.0, -1.0]).unwrap()),
            )
            .unwrap(),
            power_map(hom, 2).unwrap(),
        ]
    }

    #[test]
    fn apply_examples() {
        assert_eq!(MapSpec::saddle().apply(&Point::xy(1.0, 4.0)).unwrap(), Point::xy(2.0, 2.0));
        assert_eq!(MapSpec::translation(2).apply(&Point::xy(0.0, 0.0)).unwrap(), Point::xy(1.0, 0.0));
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        assert_eq!(hom.apply(&Point::xy(0.0, 0.0)).unwrap(), Point::xy(0.0, 0.0));
    }

    #[test]
    fn apply_inverse_examples() {
        assert_eq!(MapSpec::saddle().apply_inverse(&Point::xy(2.0, 2.0)).unwrap(), Point::xy(1.0, 4.0));
        assert_eq!(
            MapSpec::translation(2).apply_inverse(&Point::xy(1.0, 0.0)).unwrap(),
            Point::xy(0.0, 0.0)
        );
        // Fixed point of a conjugate: change(0) = h(0) = 0 for a radial change.
        let change = Diffeo::radial_quadratic(0.7).unwrap();
        let fixed = change.apply(&Point::origin(2)).unwrap();
        let g = conjugate_map(MapSpec::homothety(2, 2.0).unwrap(), change).unwrap();
        assert_eq!(g.apply_inverse(&fixed).unwrap(), fixed);
        assert_eq!(g.apply(&fixed).unwrap(), fixed);
    }

    #[test]
    fn iterate_examples() {
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        assert_eq!(hom.iterate(&Point::xy(1.0, 0.0), 10).unwrap(), Point::xy(1024.0, 0.0));
        assert_eq!(
            MapSpec::translation(2).iterate(&Point::xy(0.0, 0.0), -3).unwrap(),
            Point::xy(-3.0, 0.0)
        );
        let saddle = MapSpec::saddle();
        let closed = saddle.iterate(&Point::xy(1.0, 1.0), 20).unwrap();
        let mut repeated = Point::xy(1.0, 1.0);
        for _ in 0..20 {
            repeated = saddle.apply(&repeated).unwrap();
        }
        assert_eq!(closed, repeated);
        assert_eq!(closed, Point::xy(2f64.powi(20), 2f64.powi(-20)));
    }

    #[test]
    fn iterate_overflow_reports_n() {
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        match hom.iterate(&Point::xy(1.0, 0.0), 5000) {
            Err(Error::IterateRange { n }) => assert_eq!(n, 5000),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_on_catalog() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for map in catalog() {
            for _ in 0..1000 {
                let p = Point::xy(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
                let back = map.apply_inverse(&map.apply(&p).unwrap()).unwrap();
                assert!(close(&back, &p, 1e-9), "{} at {p}: {back}", map.describe());
            }
        }
    }

    #[test]
    fn closed_form_matches_repeated_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let maps = [
            MapSpec::saddle(),
            MapSpec::diagonal_affine(vec![1.5, -0.75], vec![0.3, -2.0]).unwrap(),
            MapSpec::diagonal_affine(vec![1.0, 1.1], vec![0.5, 0.25]).unwrap(),
        ];
        for map in &maps {
            let p = Point::xy(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (mut fwd, mut bwd) = (p.clone(), p.clone());
            for n in 1..=30i64 {
                fwd = map.apply(&fwd).unwrap();
                bwd = map.apply_inverse(&bwd).unwrap();
                for (step, want) in [(n, &fwd), (-n, &bwd)] {
                    let got = map.iterate(&p, step).unwrap();
                    for (g, w) in got.coords().iter().zip(want.coords()) {
                        assert!((g - w).abs() <= 1e-6 * w.abs().max(1.0), "n={step}: {g} vs {w}");
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_tag() {
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        assert!(hom.is_diagonal_affine());
        assert!(MapSpec::Power { inner: Box::new(hom.clone()), k: 3 }.is_diagonal_affine());
        assert!(!conjugate_map(hom.clone(), Diffeo::Identity).unwrap().is_diagonal_affine());
        let conj = conjugate_map(hom, Diffeo::Identity).unwrap();
        assert!(!MapSpec::Power { inner: Box::new(conj), k: 2 }.is_diagonal_affine());
    }

    #[test]
    fn conjugation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        let same = conjugate_map(hom.clone(), Diffeo::Identity).unwrap();
        for _ in 0..100 {
            let p = Point::xy(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            assert_eq!(same.apply(&p).unwrap(), hom.apply(&p).unwrap());
        }

        let s = Diffeo::Affine(AffineChange::shift(vec![3.0, -1.0]).unwrap());
        let shifted = conjugate_map(hom.clone(), s.clone()).unwrap();
        let fp = s.apply(&Point::origin(2)).unwrap();
        assert!(close(&shifted.apply(&fp).unwrap(), &fp, 1e-12));

        // Saddle conjugated by a radial change: iterating g equals
        // transporting iterates of f.
        let change = Diffeo::radial_quadratic(0.5).unwrap();
        let g = conjugate_map(MapSpec::saddle(), change.clone()).unwrap();
        for start in [Point::xy(0.3, 0.0), Point::xy(0.0, 2.0), Point::xy(0.4, -0.7)] {
            let mut via_g = change.apply(&start).unwrap();
            let mut via_f = start.clone();
            for _ in 0..10 {
                via_g = g.apply(&via_g).unwrap();
                via_f = MapSpec::saddle().apply(&via_f).unwrap();
                let transported = change.apply(&via_f).unwrap();
                for (a, b) in via_g.coords().iter().zip(transported.coords()) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn conjugated_fixed_points_are_transported() {
        let inner = MapSpec::diagonal_affine(vec![2.0, 3.0], vec![1.0, -4.0]).unwrap();
        // Fixed point of inner: t/(1 − a).
        let fixed = Point::xy(-1.0, 2.0);
        assert!(close(&inner.apply(&fixed).unwrap(), &fixed, 1e-12));
        let change = Diffeo::compose(
            Diffeo::radial_quadratic(0.25).unwrap(),
            Diffeo::Affine(AffineChange::new(vec![vec![2.0, 1.0], vec![1.0, 1.0]], vec![0.5, 0.0]).unwrap()),
        );
        let g = conjugate_map(inner, change.clone()).unwrap();
        let moved = change.apply(&fixed).unwrap();
        assert!(close(&g.apply(&moved).unwrap(), &moved, 1e-9));
    }

    #[test]
    fn power_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hom = MapSpec::homothety(2, 2.0).unwrap();
        let sq = power_map(hom.clone(), 2).unwrap();
        let four = MapSpec::homothety(2, 4.0).unwrap();
        for _ in 0..100 {
            let p = Point::xy(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            assert_eq!(sq.apply(&p).unwrap(), four.apply(&p).unwrap());
        }
        let back = power_map(MapSpec::translation(2), -1).unwrap();
        assert_eq!(
            back,
            MapSpec::DiagonalAffine { scales: vec![1.0, 1.0], translation: vec![-1.0, 0.0] }
        );
        let cube = power_map(MapSpec::saddle(), 3).unwrap();
        let (scales, _) = cube.diagonal_form().unwrap();
        assert_eq!(scales, vec![8.0, 0.125]);
        let p = Point::xy(0.7, -1.3);
        let mut thrice = p.clone();
        for _ in 0..3 {
            thrice = MapSpec::saddle().apply(&thrice).unwrap();
        }
        assert!(close(&cube.apply(&p).unwrap(), &thrice, 1e-12));
        assert!(power_map(hom, 0).is_err());
    }

    #[test]
    fn power_of_conjugated_iterates_inner() {
        let g = conjugate_map(MapSpec::homothety(2, 2.0).unwrap(), Diffeo::radial_quadratic(1.0).unwrap()).unwrap();
        let g3 = power_map(g.clone(), 3).unwrap();
        let p = Point::xy(0.2, 0.1);
        let want = g.iterate(&p, 3).unwrap();
        assert!(close(&g3.apply(&p).unwrap(), &want, 1e-9));
    }

    #[test]
    fn diffeo_round_trip_and_serde() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let change = Diffeo::compose(
            Diffeo::Radial(RadialProfile::Power { exponent: 1.5 }),
            Diffeo::Affine(AffineChange::new(vec![vec![1.0, 2.0], vec![0.0, 1.0]], vec![0.0, 1.0]).unwrap()),
        );
        for _ in 0..200 {
            let p = Point::xy(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let back = change.apply_inverse(&change.apply(&p).unwrap()).unwrap();
            assert!(close(&back, &p, 1e-9));
        }
        let json = serde_json::to_string(&change).unwrap();
        let parsed: Diffeo = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, change);
        let bad = r#"{"kind":"affine","linear":[[1,2],[2,4]],"offset":[0,0]}"#;
        assert!(serde_json::from_str::<Diffeo>(bad).is_err());
    }

    #[test]
    fn sup_modulus_bounds_displacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let changes = [
            Diffeo::radial_quadratic(0.8).unwrap(),
            Diffeo::Affine(AffineChange::new(vec![vec![1.0, -2.0], vec![0.5, 1.0]], vec![1.0, 1.0]).unwrap()),
        ];
        for change in &changes {
            for _ in 0..200 {
                let x = Point::xy(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let rad = rng.gen_range(0.01..1.0);
                let m = change.sup_modulus(&x, rad).unwrap();
                let z = Point::xy(
                    x.coords()[0] + rng.gen_range(-rad..rad),
                    x.coords()[1] + rng.gen_range(-rad..rad),
                );
                let d = crate::geometry::Metric::Sup
                    .distance(&change.apply(&z).unwrap(), &change.apply(&x).unwrap())
                    .unwrap();
                assert!(d <= m * rad * (1.0 + 1e-12));
            }
        }
    }
}
