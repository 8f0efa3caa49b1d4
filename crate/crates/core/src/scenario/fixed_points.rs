//! Fixed points against finite-window shadowing evidence over the map catalog.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::homothety::{assess, HomothetyConfig};
use super::{Artifacts, NamedFn, Outcome, Verdict};
use crate::cplus::{decaying_epsilon, saddle_adversarial_epsilon, CPlusFn, Expr};
use crate::error::Result;
use crate::geometry::{Interval, Metric, Point};
use crate::maps::{conjugate_map, power_map, AffineChange, Diffeo, MapSpec};
use crate::pseudo_orbit::{
    max_splice_jump, OrbitClass, OrbitKind, PseudoOrbitGenerator, PseudoOrbitSpec, RealizedOrbit, Window,
};
use crate::shadowing::{box_feasibility, homothety_shadow_point, shadow_report};

/// Finite-window evidence gathered for one map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvidenceRule {
    /// Spliced pseudo-orbit; `q` defaults to the largest jump under δ ≡ `delta`.
    Splice {
        epsilon: NamedFn,
        forward_seed: Point,
        direction: Point,
        q: Option<f64>,
        delta: f64,
        window: i64,
    },
    /// Random pseudo-orbits of a homothety, or of one conjugated to it,
    /// shadowed as in the homothety experiment.
    Shadowing { epsilon: NamedFn, orbits: usize, window: Window },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Shadowed,
    Counterexample,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub map: MapSpec,
    pub evidence: EvidenceRule,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub catalog: Vec<CatalogEntry>,
    pub search_box: Vec<Interval>,
    /// Grid nodes per axis before refinement.
    pub grid: usize,
    /// Residual `‖f(p) − p‖∞` below which a refined point counts as fixed.
    pub tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        let homothety = MapSpec::homothety(2, 2.0).expect("valid");
        let shear = Diffeo::Affine(
            AffineChange::new(vec![vec![1.0, 0.5], vec![0.0, 1.0]], vec![0.3, -0.2]).expect("invertible"),
        );
        let one = || NamedFn::new("constant 1", CPlusFn::constant(1.0).expect("positive"));
        let shadowing = || EvidenceRule::Shadowing {
            epsilon: one(),
            orbits: 40,
            window: Window::new(-10, 20).expect("contains 0"),
        };
        let splice = |epsilon: NamedFn, q: Option<f64>| EvidenceRule::Splice {
            epsilon,
            forward_seed: Point::xy(if q.is_some() { 0.0 } else { 1.0 }, 0.0),
            direction: Point::xy(0.0, 1.0),
            q,
            delta: 0.1,
            window: 24,
        };
        FixedPointConfig {
            catalog: vec![
                CatalogEntry {
                    name: "saddle".into(),
                    map: MapSpec::saddle(),
                    evidence: splice(NamedFn::new("2^(-|x|)", saddle_adversarial_epsilon()), None),
                },
                CatalogEntry {
                    name: "homothety".into(),
                    map: homothety.clone(),
                    evidence: shadowing(),
                },
                CatalogEntry {
                    name: "reverse homothety".into(),
                    map: MapSpec::Power {
                        inner: Box::new(MapSpec::reverse_homothety(0.5).expect("valid")),
                        k: -1,
                    },
                    evidence: shadowing(),
                },
                CatalogEntry {
                    name: "translation".into(),
                    map: MapSpec::translation(2),
                    evidence: splice(
                        NamedFn::new("min(1, 1/(1+|x|))", decaying_epsilon(1.0).expect("positive rate")),
                        Some(0.5),
                    ),
                },
                CatalogEntry {
                    name: "conjugated homothety".into(),
                    map: conjugate_map(homothety.clone(), shear).expect("valid"),
                    evidence: shadowing(),
                },
                CatalogEntry {
                    name: "homothety squared".into(),
                    map: power_map(homothety, 2).expect("valid"),
                    evidence: shadowing(),
                },
            ],
            search_box: vec![Interval::new(-4.0, 4.0), Interval::new(-4.0, 4.0)],
            grid: 81,
            tol: 1e-10,
        }
    }
}

/// `None` when the orientation cannot be read off the map description.
pub fn orientation_preserving(map: &MapSpec) -> Option<bool> {
    match map {
        MapSpec::ReverseHomothety { .. } => Some(false),
        MapSpec::Conjugated { inner, .. } => orientation_preserving(inner),
        MapSpec::Power { inner, k } => {
            if k % 2 == 0 {
                Some(true)
            } else {
                orientation_preserving(inner)
            }
        }
        MapSpec::DiagonalAffine { scales, .. } => Some(scales.iter().filter(|s| **s < 0.0).count() % 2 == 0),
    }
}

fn residual(map: &MapSpec, p: &Point) -> f64 {
    match map.apply(p) {
        Ok(q) => Metric::Sup.distance(&q, p).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

/// Compass search on `‖f(p) − p‖∞` from `start` with initial step `h`.
fn refine(map: &MapSpec, start: Point, h: f64) -> Point {
    let mut p = start;
    let mut r = residual(map, &p);
    let mut step = h;
    let d = p.dim();
    for _ in 0..4000 {
        if r == 0.0 || step < 1e-300 {
            break;
        }
        let mut moved = false;
        for i in 0..d {
            for s in [step, -step] {
                let mut c = p.coords().to_vec();
                c[i] += s;
                let Ok(q) = Point::new(c) else { continue };
                let rq = residual(map, &q);
                if rq < r {
                    p = q;
                    r = rq;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    p
}

impl FixedPointConfig {
    /// Refined fixed points found from the grid, deduplicated.
    pub fn fixed_points(&self, map: &MapSpec) -> Vec<Point> {
        let n = self.grid.max(2);
        let axis = |iv: &Interval, i: usize| iv.lo + (iv.hi - iv.lo) * i as f64 / (n - 1) as f64;
        let h = (self.search_box[0].width()).max(self.search_box[1].width()) / (n - 1) as f64;
        let grid: Vec<Point> = (0..n * n)
            .map(|k| Point::xy(axis(&self.search_box[0], k % n), axis(&self.search_box[1], k / n)))
            .collect();
        let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(k, p)| (residual(map, p), k)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let candidates: Vec<Point> = scored.iter().take(8).map(|(_, k)| grid[*k].clone()).collect();
        let refined: Vec<Point> = candidates.into_par_iter().map(|p| refine(map, p, h)).collect();
        let mut out: Vec<Point> = Vec::new();
        for p in refined {
            let inside = p.coords().iter().zip(&self.search_box).all(|(c, iv)| iv.contains(*c));
            if inside && residual(map, &p) <= self.tol * (1.0 + Metric::Sup.norm(&p).unwrap_or(0.0)) {
                let dup = out.iter().any(|q| Metric::Sup.distance(&p, q).is_ok_and(|d| d < 1e-6));
                if !dup {
                    out.push(p);
                }
            }
        }
        out
    }

    fn evidence(&self, entry: &CatalogEntry, seed: u64) -> Result<Evidence> {
        match &entry.evidence {
            EvidenceRule::Splice {
                epsilon,
                forward_seed,
                direction,
                q,
                delta,
                window,
            } => {
                let w = Window::symmetric(*window)?;
                let u = direction.scale(1.0 / Metric::Sup.norm(direction)?);
                let probe = PseudoOrbitSpec::spliced(entry.map.clone(), forward_seed.clone(), forward_seed.add(&u)?, 0, w);
                let q = match q {
                    Some(q) => *q,
                    None => max_splice_jump(&probe, &CPlusFn::constant(*delta)?, Metric::Sup)?,
                };
                let spec = PseudoOrbitSpec::spliced(
                    entry.map.clone(),
                    forward_seed.clone(),
                    forward_seed.add(&u.scale(q))?,
                    0,
                    w,
                );
                let cert = box_feasibility(&spec, &epsilon.function, *window, 1e-9)?;
                Ok(if cert.is_empty() { Evidence::Counterexample } else { Evidence::None })
            }
            EvidenceRule::Shadowing { epsilon, orbits, window } => {
                let (base, change) = match &entry.map {
                    MapSpec::Conjugated { inner, change } => ((**inner).clone(), Some(change.clone())),
                    m => (m.clone(), None),
                };
                let cfg = HomothetyConfig {
                    map: base.clone(),
                    metric: Metric::Sup,
                    epsilons: vec![epsilon.clone()],
                    sphere_samples: 32,
                    rho_max: 65536.0,
                    verify_points: 0,
                    orbits: *orbits,
                    window: *window,
                };
                let synth = cfg.synthesize(&epsilon.function)?;
                let gen = PseudoOrbitGenerator::new(base.clone(), synth.delta.clone(), Metric::Sup, *window)?;
                let mut all = gen.batch(OrbitKind::Bounded, orbits / 2, seed)?;
                all.extend(gen.batch(OrbitKind::Escaping, orbits - orbits / 2, seed.wrapping_add(*orbits as u64))?);
                let eps_t = change.as_ref().map(|c| {
                    CPlusFn::new(Expr::Transport {
                        change: c.clone(),
                        base: Box::new(epsilon.function.expr().clone()),
                    })
                });
                let ok = all
                    .par_iter()
                    .map(|o| {
                        let a = assess(o, &synth, &epsilon.function, Metric::Sup, synth.factor.abs())?;
                        let Some(report) = a.report else { return Ok(false) };
                        let (Some(c), Some(e)) = (&change, &eps_t) else {
                            return Ok(report.pass && a.valid);
                        };
                        let (anchor, w) = match a.class {
                            OrbitClass::Escaping { .. } => homothety_shadow_point(o)?,
                            _ => (0, Point::origin(2)),
                        };
                        let moved = RealizedOrbit {
                            window: o.window,
                            points: o.points.iter().map(|p| c.apply(p)).collect::<Result<_>>()?,
                            map: entry.map.clone(),
                        };
                        Ok(a.valid && report.pass && shadow_report(&moved, anchor, &c.apply(&w)?, &entry.map, e, Metric::Sup)?.pass)
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Ok(if ok.iter().all(|b| *b) { Evidence::Shadowed } else { Evidence::None })
            }
        }
    }

    pub(crate) fn run(&self, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
        let mut rows = Vec::new();
        let mut table = Vec::new();
        let mut verdict = Verdict::MatchesPaper;
        for (i, entry) in self.catalog.iter().enumerate() {
            let fixed = self.fixed_points(&entry.map);
            let evidence = self.evidence(entry, seed.wrapping_add(i as u64))?;
            let preserving = orientation_preserving(&entry.map);
            let flag = evidence == Evidence::Shadowed && fixed.is_empty() && preserving == Some(true);
            if flag {
                verdict = Verdict::ContradictsPaper;
            }
            table.push(vec![
                entry.name.clone(),
                fixed.len().to_string(),
                serde_json::to_string(&evidence)?.trim_matches('"').to_string(),
                preserving.map_or("unknown".into(), |b| b.to_string()),
                flag.to_string(),
            ]);
            rows.push(json!({
                "map": entry.name,
                "description": entry.map.describe(),
                "fixed_points": fixed,
                "evidence": evidence,
                "orientation_preserving": preserving,
                "contradiction": flag,
            }));
        }
        art.table(
            "scan.csv",
            &["map", "fixed_points", "evidence", "orientation_preserving", "contradiction"],
            &table,
        )?;
        Ok(Outcome {
            verdict,
            summary: format!(
                "{} map(s) scanned; {}",
                self.catalog.len(),
                if verdict == Verdict::MatchesPaper {
                    "every shadowed orientation-preserving map has a fixed point"
                } else {
                    "a shadowed orientation-preserving map has no fixed point"
                }
            ),
            details: json!({ "maps": rows }),
        })
    }
}
