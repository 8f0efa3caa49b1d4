//! Shadowing: reports, exact feasibility for diagonal-affine maps, the
//! homothety shadow series, the forward-to-full limit, and a grid oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cplus::ext::Ext;
use crate::cplus::{CPlusFn, Magnitude};
use crate::error::{Error, Result};
use crate::geometry::{Interval, Metric, Point};
use crate::maps::{checked_pow, drift, MapSpec};
use crate::pseudo_orbit::{realize, PseudoOrbitSpec, RealizedOrbit, Window};

const EPS: f64 = f64::EPSILON;

/// One index of a [`ShadowReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackEntry {
    pub n: i64,
    /// `d(fⁿ(y), x_n)`.
    pub distance: f64,
    /// `ε(x_n)`, or 0 when below double range.
    pub epsilon: f64,
    pub log2_epsilon: f64,
    /// `ε(x_n) − d`.
    pub slack: f64,
    /// `(ε(x_n) − d)/ε(x_n)`; its sign decides the index.
    pub relative_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub entries: Vec<SlackEntry>,
    pub pass: bool,
    /// Index with the smallest relative slack.
    pub worst_index: i64,
}

impl ShadowReport {
    pub fn min_relative_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.relative_slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn entry(&self, n: i64) -> Option<&SlackEntry> {
        self.entries.iter().find(|e| e.n == n)
    }
}

fn slack_entry(n: i64, distance: f64, eps: Magnitude) -> SlackEntry {
    // exceeds() is the authoritative strict test; relative slack mirrors it.
    let mut rel = eps.relative_slack(distance);
    if eps.exceeds(distance) {
        if !(rel > 0.0) {
            rel = f64::MIN_POSITIVE;
        }
    } else if rel > 0.0 {
        rel = 0.0;
    }
    SlackEntry {
        n,
        distance,
        epsilon: eps.value,
        log2_epsilon: eps.log2,
        slack: eps.value - distance,
        relative_slack: rel,
    }
}

fn assemble(entries: Vec<SlackEntry>) -> ShadowReport {
    let pass = entries.iter().all(|e| e.relative_slack > 0.0);
    let worst_index = entries
        .iter()
        .min_by(|a, b| a.relative_slack.total_cmp(&b.relative_slack))
        .map(|e| e.n)
        .unwrap_or(0);
    ShadowReport {
        entries,
        pass,
        worst_index,
    }
}

/// Compares `f^{n−anchor}(y)` with `x_n` at every window index.
pub fn shadow_report(
    points: &RealizedOrbit,
    anchor: i64,
    y: &Point,
    map: &MapSpec,
    epsilon: &CPlusFn,
    metric: Metric,
) -> Result<ShadowReport> {
    let entries = points
        .iter()
        .map(|(n, x)| {
            let fy = map.iterate(y, n - anchor)?;
            Ok(slack_entry(n, metric.distance(&fy, x)?, epsilon.magnitude(x)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(entries))
}

/// `d(fⁿ(y), x_n) < ε(x_n)` at every window index, with `y` at index 0.
pub fn is_shadowed_by(
    points: &RealizedOrbit,
    y: &Point,
    map: &MapSpec,
    epsilon: &CPlusFn,
    metric: Metric,
) -> Result<ShadowReport> {
    shadow_report(points, 0, y, map, epsilon, metric)
}

/// Running intersection for one coordinate after processing index `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibilityOutcome {
    /// `witness` (the center of `inner`) passes every window constraint.
    NonEmpty { inner: Vec<Interval>, witness: Point },
    /// The outer (rounding-widened) box became empty at index `n` in
    /// `coordinate`; `|n|` is minimal among the processed indices.
    Empty { emptiness_window: i64, n: i64, coordinate: usize },
    /// Neither conclusion is robust to rounding; defer to [`sampled_search`].
    Indeterminate { outer: Vec<Interval> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub outcome: FeasibilityOutcome,
    pub window_limit: i64,
    pub margin: f64,
    /// Per coordinate, the outer box after each processed index.
    pub trace: Vec<Vec<TraceStep>>,
}

impl FeasibilityCertificate {
    pub fn is_empty(&self) -> bool {
        matches!(self.outcome, FeasibilityOutcome::Empty { .. })
    }

    pub fn is_nonempty(&self) -> bool {
        matches!(self.outcome, FeasibilityOutcome::NonEmpty { .. })
    }

    /// Width of each coordinate's outer interval after each index, in
    /// processing order (`0, 1, −1, 2, −2, …`).
    pub fn widths(&self) -> Vec<(i64, Vec<f64>)> {
        let steps = self.trace.first().map_or(0, Vec::len);
        (0..steps)
            .map(|i| {
                let n = self.trace[0][i].n;
                (n, self.trace.iter().map(|t| t[i].hi - t[i].lo).collect())
            })
            .collect()
    }
}

/// `0, 1, −1, 2, −2, …` restricted to `window ∩ [−limit, limit]`.
pub fn outward_order(window: Window, limit: i64) -> Vec<i64> {
    let mut out = vec![0];
    for k in 1..=limit {
        for n in [k, -k] {
            if window.contains(n) {
                out.push(n);
            }
        }
    }
    out
}

/// Decides whether some `y` satisfies `|f^n(y) − x_n|_∞ < ε(x_n)` for every
/// window index with `|n| ≤ window_limit`.
///
/// For `f(y) = a ⊙ y + t` each constraint is a per-coordinate interval for
/// `y`. Two boxes are intersected: an outer one widened by a bound on the
/// rounding error of its endpoints (its emptiness proves infeasibility) and
/// an inner one shrunk by `margin·ε` and the same bound (its center is then
/// re-verified directly). `margin` is relative and must lie in `[0, 1)`.
pub fn box_feasibility(
    spec: &PseudoOrbitSpec,
    epsilon: &CPlusFn,
    window_limit: i64,
    margin: f64,
) -> Result<FeasibilityCertificate> {
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::DegenerateMargin { margin });
    }
    if window_limit < 0 {
        return Err(Error::invalid("window_limit must be nonnegative"));
    }
    let (a, t) = spec
        .map
        .diagonal_form()
        .ok_or_else(|| Error::UnsupportedMap(spec.map.describe()))?;
    spec.validate_shape()?;
    let d = a.len();
    let order = outward_order(spec.window, window_limit);

    // Per-index constraint intervals are independent; compute in parallel
    // and intersect in order afterwards.
    let constraints = order
        .par_iter()
        .map(|&n| -> Result<Vec<(Interval, Interval)>> {
            let x = spec.point_at(n)?;
            let e = epsilon.magnitude(&x)?;
            let e_up = if e.is_representable() { e.value } else { f64::MIN_POSITIVE };
            let e_in = e.value * (1.0 - margin);
            (0..d)
                .map(|j| {
                    let a_n = checked_pow(a[j], n)?;
                    let tau = drift(a[j], t[j], a_n, n);
                    let xj = x.coords()[j];
                    let c = (xj - tau) / a_n;
                    let scale = a_n.abs();
                    let round = 4.0 * EPS * (xj.abs() + tau.abs()) / scale + 4.0 * EPS * c.abs();
                    let h_up = e_up / scale * (1.0 + 4.0 * EPS) + round;
                    let h_in = e_in / scale * (1.0 - 4.0 * EPS) - round;
                    Ok((Interval::new(c - h_up, c + h_up), Interval::new(c - h_in, c + h_in)))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outer = vec![Interval::entire(); d];
    let mut inner = vec![Interval::entire(); d];
    let mut trace = vec![Vec::with_capacity(order.len()); d];
    for (&n, per) in order.iter().zip(&constraints) {
        for j in 0..d {
            outer[j] = outer[j].intersect(&per[j].0);
            inner[j] = inner[j].intersect(&per[j].1);
            trace[j].push(TraceStep {
                n,
                lo: outer[j].lo,
                hi: outer[j].hi,
            });
        }
        if let Some(j) = outer.iter().position(Interval::is_empty) {
            return Ok(FeasibilityCertificate {
                outcome: FeasibilityOutcome::Empty {
                    emptiness_window: n.abs(),
                    n,
                    coordinate: j,
                },
                window_limit,
                margin,
                trace,
            });
        }
    }

    let outcome = if inner.iter().all(|i| !i.is_empty()) {
        let witness = Point::new(inner.iter().map(Interval::midpoint).collect())?;
        let lo = order.iter().copied().min().unwrap_or(0);
        let hi = order.iter().copied().max().unwrap_or(0);
        let pts = realize(&spec.with_window(Window::new(lo, hi)?))?;
        let report = is_shadowed_by(&pts, &witness, &spec.map, epsilon, Metric::Sup)?;
        if report.pass {
            FeasibilityOutcome::NonEmpty { inner, witness }
        } else {
            FeasibilityOutcome::Indeterminate { outer }
        }
    } else {
        FeasibilityOutcome::Indeterminate { outer }
    };
    Ok(FeasibilityCertificate {
        outcome,
        window_limit,
        margin,
        trace,
    })
}

/// Shadow point for a pseudo-orbit of an affine diagonal map, anchored at
/// the window start `n₋`: `w = x_{n₋} + Σ_{i=1}^{L} A^{−i} r_i` with
/// `r_i = x_{n₋+i} − f(x_{n₋+i−1})`.
///
/// The series telescopes to `f^{−L}(x_{n₋+L})`, which is what is evaluated;
/// for power-of-two factors every step is exact.
pub fn homothety_shadow_point(points: &RealizedOrbit) -> Result<(i64, Point)> {
    if !points.map.is_diagonal_affine() {
        return Err(Error::UnsupportedMap(points.map.describe()));
    }
    let l = points.points.len() as i64 - 1;
    if l < 1 {
        return Err(Error::invalid("window too short for a shadow series (need at least 2 points)"));
    }
    let last = &points.points[points.points.len() - 1];
    Ok((points.window.n_min, points.map.iterate(last, -l)?))
}

/// Direct partial sum `x_{n₋} + Σ A^{−i} r_i` (reference form of
/// [`homothety_shadow_point`]).
pub fn shadow_series(points: &RealizedOrbit) -> Result<Point> {
    let mut acc = points.points[0].clone();
    for (i, w) in points.points.windows(2).enumerate() {
        let r = w[1].sub(&points.map.apply(&w[0])?)?;
        let lin = points.map.iterate(&r, -(i as i64 + 1))?;
        let origin_shift = points.map.iterate(&Point::origin(r.dim()), -(i as i64 + 1))?;
        acc = acc.add(&lin.sub(&origin_shift)?)?;
    }
    Ok(acc)
}

/// `log2` of `Σ_{l<i≤n_max} δ(f(x_{i−1}))·k^{l−i}` for every window index
/// `l`; `−∞` at the last index.
pub fn tail_bound_log2(points: &RealizedOrbit, delta: &CPlusFn, factor: f64) -> Result<Vec<f64>> {
    let k = Ext::from_f64(factor.abs()).recip();
    let mut out = vec![f64::NEG_INFINITY; points.points.len()];
    let mut acc = Ext::ZERO;
    for i in (0..points.points.len().saturating_sub(1)).rev() {
        let image = points.map.apply(&points.points[i])?;
        let d = Ext::positive_log2(delta.eval_log2(&image)?);
        acc = acc.add(d).mul(k);
        out[i] = acc.log2;
    }
    Ok(out)
}

/// Limit of `f^k(y_{−k})` where `y_{−k}` forward-shadows `z_n = x_{n−k}`.
///
/// `shadower` receives the shifted sequence on `[0, n_max + k]` and returns
/// the point at its index 0. Each iterate must stay in `B̄(x_0, ε(x_0))`;
/// the sequence must be Cauchy within `tol` over its last quarter.
pub fn forward_to_full_shadow<F>(
    points: &RealizedOrbit,
    epsilon: &CPlusFn,
    metric: Metric,
    shadower: F,
    depth: usize,
    tol: f64,
) -> Result<Point>
where
    F: Fn(&RealizedOrbit) -> Result<Point>,
{
    if depth == 0 || !(tol > 0.0) {
        return Err(Error::invalid("depth and tol must be positive"));
    }
    let x0 = points.point_at(0)?;
    let e0 = epsilon.magnitude(&x0)?;
    let mut iterates = Vec::with_capacity(depth + 1);
    for k in 0..=depth as i64 {
        let shifted = points.shifted(-k, Window::new(0, points.window.n_max + k)?)?;
        let y = shadower(&shifted)?;
        let p = points.map.iterate(&y, k)?;
        let dist = metric.distance(&p, &x0)?;
        if !e0.covers(dist) {
            return Err(Error::contract(format!(
                "f^{k}(y_-{k}) lies at distance {dist:e} from x_0, outside B̄(x_0, ε(x_0)); the forward shadower is wrong"
            )));
        }
        iterates.push(p);
    }
    let steps = iterates
        .windows(2)
        .map(|w| metric.distance(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let tail = ((depth + 1) / 4).max(2).min(iterates.len());
    let last = &iterates[iterates.len() - tail..];
    let mut diam = 0.0f64;
    for p in last {
        for q in last {
            diam = diam.max(metric.distance(p, q)?);
        }
    }
    if diam <= tol {
        Ok(iterates.pop().expect("depth ≥ 1"))
    } else {
        Err(Error::NonConvergence { diameters: steps })
    }
}

/// A grid point that failed, ranked by how far down the constraint order
/// it got and by its relative slack at the failing index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub point: Point,
    pub satisfied: usize,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub found: Option<Point>,
    pub grid_points: u64,
    pub near_misses: Vec<NearMiss>,
    pub refined: bool,
}

const MAX_GRID: u128 = 100_000_000;
const KEEP: usize = 8;

/// Per-target data for the grid oracle. For diagonal-affine maps `fⁿ(y)`
/// is `aⁿ ⊙ y + τ(n)`, evaluated without allocation.
struct Target {
    n: i64,
    x: Vec<f64>,
    eps: Magnitude,
    /// `(aⁿ, τ(n))` per coordinate; `None` if `aⁿ` is out of range.
    affine: Option<Vec<(f64, f64)>>,
}

struct Checker<'a> {
    map: &'a MapSpec,
    metric: Metric,
    diagonal: bool,
    targets: Vec<Target>,
}

impl<'a> Checker<'a> {
    fn new(map: &'a MapSpec, metric: Metric, pts: &RealizedOrbit, order: &[i64], epsilon: &CPlusFn) -> Result<Self> {
        if metric == Metric::PolarWarp && map.dim() != 2 {
            return Err(Error::contract("polar warp is defined only in the plane"));
        }
        let diag = map.diagonal_form();
        let targets = order
            .iter()
            .map(|&n| {
                let x = pts.get(n).expect("order lies in the window");
                let affine = diag.as_ref().and_then(|(a, t)| {
                    a.iter()
                        .zip(t)
                        .map(|(aj, tj)| checked_pow(*aj, n).ok().map(|a_n| (a_n, drift(*aj, *tj, a_n, n))))
                        .collect::<Option<Vec<_>>>()
                });
                Ok(Target {
                    n,
                    x: x.coords().to_vec(),
                    eps: epsilon.magnitude(x)?,
                    affine,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Checker {
            map,
            metric,
            diagonal: diag.is_some(),
            targets,
        })
    }

    /// `Ok(None)` if `y` shadows, else how many constraints held and the
    /// relative slack at the first failure.
    fn check(&self, y: &[f64], scratch: &mut Vec<f64>) -> Result<Option<(usize, f64)>> {
        for (k, t) in self.targets.iter().enumerate() {
            let dist = if self.diagonal {
                let Some(aff) = &t.affine else {
                    return Ok(Some((k, f64::NEG_INFINITY)));
                };
                if self.metric == Metric::Sup {
                    // Inline sup distance; a non-finite coordinate fails the index.
                    let mut d = 0.0f64;
                    for ((&(a_n, tau), &yj), &xj) in aff.iter().zip(y).zip(&t.x) {
                        let c = a_n * yj + tau;
                        if !c.is_finite() {
                            return Ok(Some((k, f64::NEG_INFINITY)));
                        }
                        d = d.max((c - xj).abs());
                    }
                    d
                } else {
                    scratch.clear();
                    scratch.extend(aff.iter().zip(y).map(|((a_n, tau), yj)| a_n * yj + tau));
                    if scratch.iter().any(|c| !c.is_finite()) {
                        return Ok(Some((k, f64::NEG_INFINITY)));
                    }
                    self.metric.distance_slices(scratch, &t.x)
                }
            } else {
                scratch.clear();
                match self.map.iterate(&Point::from_vec_unchecked(y.to_vec()), t.n) {
                    Ok(p) => scratch.extend_from_slice(p.coords()),
                    Err(Error::IterateRange { .. }) => return Ok(Some((k, f64::NEG_INFINITY))),
                    Err(e) => return Err(e),
                }
                if scratch.iter().any(|c| !c.is_finite()) {
                    return Ok(Some((k, f64::NEG_INFINITY)));
                }
                self.metric.distance_slices(scratch, &t.x)
            };
            if !t.eps.exceeds(dist) {
                return Ok(Some((k, t.eps.relative_slack(dist))));
            }
        }
        Ok(None)
    }
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
}

fn rank(a: &NearMiss, b: &NearMiss) -> std::cmp::Ordering {
    b.satisfied.cmp(&a.satisfied).then(b.slack.total_cmp(&a.slack))
}

fn grid_axes(search_box: &[Interval], step: f64) -> Result<Vec<Vec<f64>>> {
    let mut total: u128 = 1;
    let axes = search_box
        .iter()
        .map(|iv| {
            if iv.is_empty() || !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(Error::invalid("search box must be bounded and nonempty"));
            }
            let count = (iv.width() / step + 1e-9).floor() as u128 + 1;
            total = total.saturating_mul(count);
            if total > MAX_GRID {
                return Err(Error::GridTooLarge(total));
            }
            Ok((0..count).map(|i| iv.lo + step * i as f64).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(axes)
}

type ScanResult = (Option<Point>, Vec<NearMiss>, u64);

fn scan(checker: &Checker, axes: &[Vec<f64>]) -> Result<ScanResult> {
    let total: u64 = axes.iter().map(|a| a.len() as u64).product();
    let digits = |mut idx: u64, out: &mut Vec<usize>| {
        out.clear();
        out.resize(axes.len(), 0);
        for (slot, a) in out.iter_mut().zip(axes).rev() {
            *slot = (idx % a.len() as u64) as usize;
            idx /= a.len() as u64;
        }
    };
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);
    let per_chunk = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(Option<Point>, Vec<NearMiss>)> {
            let mut misses: Vec<NearMiss> = Vec::new();
            let mut idx = Vec::new();
            digits(c * CHUNK, &mut idx);
            let mut y: Vec<f64> = idx.iter().zip(axes).map(|(i, a)| a[*i]).collect();
            let mut scratch = Vec::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(total) {
                if i > c * CHUNK {
                    // Odometer step, last axis fastest.
                    for j in (0..axes.len()).rev() {
                        idx[j] += 1;
                        if idx[j] < axes[j].len() {
                            y[j] = axes[j][idx[j]];
                            break;
                        }
                        idx[j] = 0;
                        y[j] = axes[j][0];
                    }
                }
                match checker.check(&y, &mut scratch)? {
                    None => return Ok((Some(Point::new(y.clone())?), misses)),
                    Some(score) => {
                        let worst = misses.last().map(|m| (m.satisfied, m.slack));
                        if misses.len() < KEEP || worst.is_some_and(|w| better(score, w)) {
                            misses.push(NearMiss {
                                point: Point::from_vec_unchecked(y.clone()),
                                satisfied: score.0,
                                slack: score.1,
                            });
                            misses.sort_by(rank);
                            misses.truncate(KEEP);
                        }
                    }
                }
            }
            Ok((None, misses))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut found = None;
    let mut misses = Vec::new();
    for (f, m) in per_chunk {
        if found.is_none() {
            found = f;
        }
        misses.extend(m);
    }
    misses.sort_by(rank);
    misses.truncate(KEEP);
    Ok((found, misses, total))
}

/// Grid search for a shadowing point at index 0 over `search_box`.
///
/// Returns the first passing grid point in lexicographic order; if none
/// passes, the best near-misses are re-searched once at half the step.
pub fn sampled_search(
    spec: &PseudoOrbitSpec,
    epsilon: &CPlusFn,
    metric: Metric,
    search_box: &[Interval],
    grid_step: f64,
) -> Result<SearchResult> {
    if !(grid_step > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    if search_box.len() != spec.map.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.map.dim(),
            got: search_box.len(),
        });
    }
    let pts = realize(spec)?;
    let order = outward_order(spec.window, spec.window.n_max.max(-spec.window.n_min));
    let checker = Checker::new(&spec.map, metric, &pts, &order, epsilon)?;
    let axes = grid_axes(search_box, grid_step)?;
    let (found, near_misses, grid_points) = scan(&checker, &axes)?;
    if let Some(p) = found {
        return Ok(SearchResult {
            found: Some(p),
            grid_points,
            near_misses,
            refined: false,
        });
    }
    let half = grid_step / 2.0;
    for miss in &near_misses {
        let local: Vec<Interval> = miss
            .point
            .coords()
            .iter()
            .map(|c| Interval::new(c - grid_step, c + grid_step))
            .collect();
        let axes = grid_axes(&local, half)?;
        let (f, _, _) = scan(&checker, &axes)?;
        if let Some(p) = f {
            return Ok(SearchResult {
                found: Some(p),
                grid_points,
                near_misses,
                refined: true,
            });
        }
    }
    Ok(SearchResult {
        found: None,
        grid_points,
        near_misses,
        refined: true,
    })
}
