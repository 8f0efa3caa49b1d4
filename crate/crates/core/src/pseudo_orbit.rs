//! δ-pseudo-orbits over finite windows.
//!
//! A bi-infinite sequence is stored as a finite window of points; outside
//! the window it continues as the exact orbit of the first point (backward)
//! and of the last point (forward). Every adversarial sequence used here
//! has exact orbit tails, so nothing is lost.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cplus::CPlusFn;
use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};
use crate::maps::MapSpec;

/// Inclusive index range `n_min ≤ 0 ≤ n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub n_min: i64,
    pub n_max: i64,
}

impl Window {
    pub fn new(n_min: i64, n_max: i64) -> Result<Self> {
        let w = Window { n_min, n_max };
        w.validate()?;
        Ok(w)
    }

    pub fn symmetric(n: i64) -> Result<Self> {
        Window::new(-n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min > 0 || self.n_max < 0 {
            return Err(Error::invalid(format!(
                "window [{}, {}] must contain 0",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        self.n_min <= n && n <= self.n_max
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitRule {
    /// `points[i]` sits at index `start + i`.
    Explicit { start: i64, points: Vec<Point> },
    /// `fⁿ(forward_seed)` for `n ≥ splice_index`, `fⁿ(backward_seed)` below.
    Spliced {
        forward_seed: Point,
        backward_seed: Point,
        #[serde(default)]
        splice_index: i64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbitSpec {
    pub rule: OrbitRule,
    pub window: Window,
    pub map: MapSpec,
}

impl PseudoOrbitSpec {
    pub fn spliced(map: MapSpec, forward_seed: Point, backward_seed: Point, splice_index: i64, window: Window) -> Self {
        PseudoOrbitSpec {
            rule: OrbitRule::Spliced {
                forward_seed,
                backward_seed,
                splice_index,
            },
            window,
            map,
        }
    }

    pub fn explicit(map: MapSpec, start: i64, points: Vec<Point>, window: Window) -> Self {
        PseudoOrbitSpec {
            rule: OrbitRule::Explicit { start, points },
            window,
            map,
        }
    }

    pub fn with_window(&self, window: Window) -> Self {
        PseudoOrbitSpec {
            window,
            ..self.clone()
        }
    }

    pub fn validate_shape(&self) -> Result<()> {
        self.window.validate()?;
        self.map.validate()?;
        let d = self.map.dim();
        let dims_ok = |p: &Point| {
            if p.dim() == d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                })
            }
        };
        match &self.rule {
            OrbitRule::Explicit { points, .. } => {
                if points.is_empty() {
                    return Err(Error::invalid("explicit pseudo-orbit has no points"));
                }
                points.iter().try_for_each(dims_ok)
            }
            OrbitRule::Spliced {
                forward_seed,
                backward_seed,
                ..
            } => {
                dims_ok(forward_seed)?;
                dims_ok(backward_seed)
            }
        }
    }

    /// `x_n` for any `n`, following the exact tails outside the data.
    pub fn point_at(&self, n: i64) -> Result<Point> {
        match &self.rule {
            OrbitRule::Spliced {
                forward_seed,
                backward_seed,
                splice_index,
            } => {
                let seed = if n >= *splice_index { forward_seed } else { backward_seed };
                self.map.iterate(seed, n)
            }
            OrbitRule::Explicit { start, points } => {
                let last = start + points.len() as i64 - 1;
                if n < *start {
                    self.map.iterate(&points[0], n - start)
                } else if n > last {
                    self.map.iterate(&points[points.len() - 1], n - last)
                } else {
                    Ok(points[(n - start) as usize].clone())
                }
            }
        }
    }
}

/// `x_n` for every `n` in a window, plus the map that extends it.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedOrbit {
    pub window: Window,
    pub points: Vec<Point>,
    pub map: MapSpec,
}

impl RealizedOrbit {
    pub fn get(&self, n: i64) -> Option<&Point> {
        if self.window.contains(n) {
            self.points.get((n - self.window.n_min) as usize)
        } else {
            None
        }
    }

    /// `x_n` with exact orbit tails outside the window.
    pub fn point_at(&self, n: i64) -> Result<Point> {
        if let Some(p) = self.get(n) {
            return Ok(p.clone());
        }
        if n < self.window.n_min {
            self.map.iterate(&self.points[0], n - self.window.n_min)
        } else {
            self.map.iterate(&self.points[self.points.len() - 1], n - self.window.n_max)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Point)> {
        self.window.indices().zip(&self.points)
    }

    pub fn to_spec(&self) -> PseudoOrbitSpec {
        PseudoOrbitSpec::explicit(self.map.clone(), self.window.n_min, self.points.clone(), self.window)
    }

    /// Index-shifted copy `z_n = x_{n+shift}` with window `w`.
    pub fn shifted(&self, shift: i64, w: Window) -> Result<RealizedOrbit> {
        let points = w.indices().map(|n| self.point_at(n + shift)).collect::<Result<Vec<_>>>()?;
        Ok(RealizedOrbit {
            window: w,
            points,
            map: self.map.clone(),
        })
    }

    pub fn validate(&self, delta: &CPlusFn, metric: Metric) -> Result<ValidationReport> {
        let mut steps = Vec::with_capacity(self.points.len().saturating_sub(1));
        for (i, w) in self.points.windows(2).enumerate() {
            let n = self.window.n_min + i as i64;
            let image = self.map.apply(&w[0])?;
            let jump = metric.distance(&image, &w[1])?;
            let bound = delta.magnitude(&image)?;
            steps.push(StepCheck {
                n,
                jump,
                delta: bound.value,
                delta_log2: bound.log2,
                ok: bound.exceeds(jump),
            });
        }
        let pass = steps.iter().all(|s| s.ok);
        Ok(ValidationReport { pass, steps })
    }
}

/// `x_n` for every `n` in the spec's window.
pub fn realize(spec: &PseudoOrbitSpec) -> Result<RealizedOrbit> {
    spec.validate_shape()?;
    let points = spec
        .window
        .indices()
        .map(|n| spec.point_at(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(RealizedOrbit {
        window: spec.window,
        points,
        map: spec.map.clone(),
    })
}

/// Check of `d(f(x_n), x_{n+1}) < δ(f(x_n))` for one transition `n → n+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub n: i64,
    pub jump: f64,
    /// `δ(f(x_n))`, or 0 when below double range (see `delta_log2`).
    pub delta: f64,
    pub delta_log2: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub steps: Vec<StepCheck>,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&StepCheck> {
        self.steps.iter().find(|s| !s.ok)
    }
}

/// Realizes and validates in one go. Failures are data, not errors.
pub fn validate(spec: &PseudoOrbitSpec, delta: &CPlusFn, metric: Metric) -> Result<ValidationReport> {
    realize(spec)?.validate(delta, metric)
}

/// Largest jump `q` along `backward_seed − forward_seed` keeping a spliced
/// sequence a δ-pseudo-orbit, times 0.99.
///
/// Returns the magnitude `q` such that `forward_seed + q·u` is admissible as
/// backward seed, with `u` the direction normalized to unit `metric` length.
pub fn max_splice_jump(spec: &PseudoOrbitSpec, delta: &CPlusFn, metric: Metric) -> Result<f64> {
    let OrbitRule::Spliced {
        forward_seed,
        backward_seed,
        splice_index,
    } = &spec.rule
    else {
        return Err(Error::invalid("max_splice_jump needs a spliced pseudo-orbit"));
    };
    let dir = backward_seed.sub(forward_seed)?;
    let len = metric.distance(backward_seed, forward_seed)?;
    if !(len > 0.0) {
        return Err(Error::invalid("splice seeds coincide; the jump direction is undefined"));
    }
    let u = dir.scale(1.0 / len);
    let admissible = |q: f64| -> Result<bool> {
        let trial = PseudoOrbitSpec::spliced(
            spec.map.clone(),
            forward_seed.clone(),
            forward_seed.add(&u.scale(q))?,
            *splice_index,
            spec.window,
        );
        Ok(validate(&trial, delta, metric)?.pass)
    };
    let mut hi = 1.0;
    let mut grow = 0;
    while admissible(hi)? {
        hi *= 2.0;
        grow += 1;
        if grow > 1000 {
            return Err(Error::contract("splice jump unbounded: δ does not constrain the splice"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if admissible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(lo > 0.0) {
        return Err(Error::contract("no admissible splice jump found"));
    }
    Ok(0.99 * lo)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum OrbitClass {
    /// Every window point lies in `B̄(0, r0)`.
    Bounded { r0: f64 },
    /// First window index outside `B̄(0, r0)`; from there on norms grow by
    /// more than `ratio` per step.
    Escaping { first_index: i64, ratio: f64 },
    Unclassified,
}

/// Factor-2 homothety classification under the sup norm.
pub fn classify_pseudo_orbit(points: &RealizedOrbit, r0: f64) -> Result<OrbitClass> {
    classify_with(points, r0, Metric::Sup, 1.5)
}

/// Growth ratio `(|k|+1)/2` guaranteed for factor `k` homotheties.
pub fn escape_ratio(factor: f64) -> f64 {
    (factor.abs() + 1.0) / 2.0
}

pub fn classify_with(points: &RealizedOrbit, r0: f64, metric: Metric, ratio: f64) -> Result<OrbitClass> {
    let norms = points.points.iter().map(|p| metric.norm(p)).collect::<Result<Vec<_>>>()?;
    let Some(i0) = norms.iter().position(|r| *r > r0) else {
        return Ok(OrbitClass::Bounded { r0 });
    };
    if norms[i0..].windows(2).all(|w| w[1] > ratio * w[0]) {
        Ok(OrbitClass::Escaping {
            first_index: points.window.n_min + i0 as i64,
            ratio,
        })
    } else {
        Ok(OrbitClass::Unclassified)
    }
}

/// Which of the two homothety pseudo-orbit kinds to generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Bounded,
    Escaping,
}

/// Random δ-pseudo-orbits with perturbations drawn uniformly from the ball
/// of radius `0.99·δ(f(x_n))`.
#[derive(Clone, Debug)]
pub struct PseudoOrbitGenerator {
    pub map: MapSpec,
    pub delta: CPlusFn,
    pub metric: Metric,
    pub window: Window,
}

impl PseudoOrbitGenerator {
    pub fn new(map: MapSpec, delta: CPlusFn, metric: Metric, window: Window) -> Result<Self> {
        map.validate()?;
        window.validate()?;
        Ok(PseudoOrbitGenerator {
            map,
            delta,
            metric,
            window,
        })
    }

    fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Uniform point of the metric ball `B(center, radius)` by rejection
    /// from the enclosing coordinate box.
    fn ball_point(&self, rng: &mut ChaCha8Rng, center: &Point, radius: f64) -> Result<Option<Point>> {
        for _ in 0..64 {
            let v: Vec<f64> = center
                .coords()
                .iter()
                .map(|c| c + radius * rng.gen_range(-1.0..1.0))
                .collect();
            let p = Point::new(v)?;
            if self.metric.distance(&p, center)? < radius {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    /// Radius `c` such that any sequence inside `B(0, c)` is a δ-pseudo-orbit:
    /// starts at `0.2·δ(0)` and halves until `(1+k)c < 0.99·δ` at radius `kc`.
    pub fn bounded_radius(&self) -> Result<f64> {
        let k = self
            .map
            .conformal_factor()
            .ok_or_else(|| Error::invalid("bounded pseudo-orbits need a homothety"))?;
        let d = self.dim();
        let mut c = 0.2 * self.delta.eval(&Point::origin(d))?;
        for _ in 0..200 {
            let mut e = vec![0.0; d];
            e[0] = 1.0;
            let u = Point::new(e)?;
            let probe = u.scale(self.metric.scale_to_norm(&u, k * c)?);
            if (1.0 + k) * c < 0.99 * self.delta.magnitude(&probe)?.value {
                return Ok(c);
            }
            c *= 0.5;
        }
        Err(Error::contract("δ too small near the origin to fit a bounded pseudo-orbit"))
    }

    pub fn bounded(&self, seed: u64) -> Result<RealizedOrbit> {
        let c = self.bounded_radius()?;
        let origin = Point::origin(self.dim());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = self
            .window
            .indices()
            .map(|_| Ok(self.ball_point(&mut rng, &origin, c)?.unwrap_or_else(|| origin.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(RealizedOrbit {
            window: self.window,
            points,
            map: self.map.clone(),
        })
    }

    /// Starts near the origin and follows `x_{n+1} = f(x_n) + r_n`.
    pub fn escaping(&self, seed: u64) -> Result<RealizedOrbit> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let origin = Point::origin(self.dim());
        let c = self.bounded_radius().unwrap_or(1.0);
        let mut x = self.ball_point(&mut rng, &origin, c)?.unwrap_or(origin);
        let mut points = Vec::with_capacity(self.window.len());
        points.push(x.clone());
        for _ in 1..self.window.len() {
            let image = self.map.apply(&x)?;
            x = self.perturb(&mut rng, &image)?;
            points.push(x.clone());
        }
        Ok(RealizedOrbit {
            window: self.window,
            points,
            map: self.map.clone(),
        })
    }

    /// A point `z` with `d(image, z) < δ(image)` verified after rounding.
    fn perturb(&self, rng: &mut ChaCha8Rng, image: &Point) -> Result<Point> {
        let bound = self.delta.magnitude(image)?;
        if !bound.is_representable() {
            return Ok(image.clone());
        }
        for _ in 0..16 {
            if let Some(z) = self.ball_point(rng, image, 0.99 * bound.value)? {
                if bound.exceeds(self.metric.distance(image, &z)?) {
                    return Ok(z);
                }
            }
        }
        Ok(image.clone())
    }

    pub fn generate(&self, kind: OrbitKind, seed: u64) -> Result<RealizedOrbit> {
        match kind {
            OrbitKind::Bounded => self.bounded(seed),
            OrbitKind::Escaping => self.escaping(seed),
        }
    }

    /// `count` orbits with seeds `base_seed + i`, generated in parallel.
    pub fn batch(&self, kind: OrbitKind, count: usize, base_seed: u64) -> Result<Vec<RealizedOrbit>> {
        (0..count)
            .into_par_iter()
            .map(|i| self.generate(kind, base_seed.wrapping_add(i as u64)))
            .collect()
    }
}

/// Writes `n, x1, …, xd` rows preceded by `#` metadata lines.
pub fn write_csv<W: Write>(mut out: W, orbit: &RealizedOrbit, rule: &str) -> Result<()> {
    writeln!(out, "# map: {}", orbit.map.describe())?;
    writeln!(out, "# rule: {rule}")?;
    writeln!(out, "# window: {} {}", orbit.window.n_min, orbit.window.n_max)?;
    let mut w = csv::Writer::from_writer(out);
    let d = orbit.map.dim();
    let mut header = vec!["n".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (n, p) in orbit.iter() {
        let mut row = vec![n.to_string()];
        row.extend(p.coords().iter().map(|c| format!("{c:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the rows written by [`write_csv`]; indices must be consecutive.
pub fn read_csv<R: Read>(input: R, map: MapSpec) -> Result<RealizedOrbit> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut start = None;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let n: i64 = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("bad index in CSV row {rec:?}")))?;
        let s = *start.get_or_insert(n);
        if n != s + points.len() as i64 {
            return Err(Error::Config(format!("non-consecutive index {n} in CSV")));
        }
        let coords = rec
            .iter()
            .skip(1)
            .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad coordinate `{c}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        points.push(Point::new(coords)?);
    }
    let n_min = start.ok_or_else(|| Error::Config("CSV has no rows".into()))?;
    let window = Window {
        n_min,
        n_max: n_min + points.len() as i64 - 1,
    };
    let orbit = RealizedOrbit { window, points, map };
    orbit.to_spec().validate_shape()?;
    Ok(orbit)
}
