//! Shadowing transported through a change of coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::homothety::{assess, HomothetyConfig};
use super::{Artifacts, NamedFn, Outcome, Verdict};
use crate::cplus::{CPlusFn, Expr};
use crate::error::Result;
use crate::geometry::{Metric, Point};
use crate::maps::{conjugate_map, AffineChange, Diffeo, MapSpec};
use crate::pseudo_orbit::{OrbitClass, OrbitKind, PseudoOrbitGenerator, RealizedOrbit, Window};
use crate::shadowing::{homothety_shadow_point, shadow_report, ShadowReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedChange {
    pub name: String,
    pub change: Diffeo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugacyConfig {
    /// Homothety being conjugated; shadowing runs under the sup metric.
    pub base: MapSpec,
    pub epsilons: Vec<NamedFn>,
    pub changes: Vec<NamedChange>,
    pub orbits: usize,
    pub window: Window,
    pub sphere_samples: usize,
    pub rho_max: f64,
}

impl ConjugacyConfig {
    /// Bounded-below ε only: the round trip `c⁻¹(c(w))` loses about
    /// `2^window` ulps before it reaches the comparison.
    pub fn default_changes() -> Result<Self> {
        Ok(ConjugacyConfig {
            base: MapSpec::homothety(2, 2.0)?,
            epsilons: vec![
                NamedFn::new("constant 1", CPlusFn::constant(1.0)?),
                NamedFn::new(
                    "radial table",
                    CPlusFn::radial_table(vec![(0.0, 0.5), (1.0, 1.0), (4.0, 0.25), (16.0, 0.05)])?,
                ),
            ],
            changes: vec![
                NamedChange {
                    name: "affine shear".into(),
                    change: Diffeo::Affine(AffineChange::new(
                        vec![vec![1.0, 0.5], vec![0.0, 1.0]],
                        vec![0.3, -0.2],
                    )?),
                },
                NamedChange {
                    name: "radial rescale".into(),
                    change: Diffeo::radial_quadratic(0.25)?,
                },
            ],
            orbits: 100,
            window: Window::new(-10, 20)?,
            sphere_samples: 64,
            rho_max: 65536.0,
        })
    }

    fn base_config(&self) -> HomothetyConfig {
        HomothetyConfig {
            map: self.base.clone(),
            metric: Metric::Sup,
            epsilons: self.epsilons.clone(),
            sphere_samples: self.sphere_samples,
            rho_max: self.rho_max,
            verify_points: 0,
            orbits: self.orbits,
            window: self.window,
        }
    }

    pub(crate) fn run(&self, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
        let base_cfg = self.base_config();
        let mut verdict = Verdict::MatchesPaper;
        let mut rows = Vec::new();
        let mut sample: Option<(RealizedOrbit, ShadowReport)> = None;
        for (idx, eps) in self.epsilons.iter().enumerate() {
            let synth = base_cfg.synthesize(&eps.function)?;
            let k = synth.factor.abs();
            let gen = PseudoOrbitGenerator::new(self.base.clone(), synth.delta.clone(), Metric::Sup, self.window)?;
            let s = seed.wrapping_add((idx as u64) << 32);
            let half = self.orbits / 2;
            let mut orbits = gen.batch(OrbitKind::Bounded, half, s)?;
            orbits.extend(gen.batch(OrbitKind::Escaping, self.orbits - half, s.wrapping_add(half as u64))?);

            for ch in &self.changes {
                let map = conjugate_map(self.base.clone(), ch.change.clone())?;
                let eps_t = CPlusFn::new(Expr::Transport {
                    change: ch.change.clone(),
                    base: Box::new(eps.function.expr().clone()),
                });
                let results = orbits
                    .par_iter()
                    .map(|o| {
                        let base = assess(o, &synth, &eps.function, Metric::Sup, k)?;
                        let (anchor, w) = match base.class {
                            OrbitClass::Escaping { .. } => homothety_shadow_point(o)?,
                            _ => (0, Point::origin(o.map.dim())),
                        };
                        let moved = RealizedOrbit {
                            window: o.window,
                            points: o.points.iter().map(|p| ch.change.apply(p)).collect::<Result<_>>()?,
                            map: map.clone(),
                        };
                        let cw = ch.change.apply(&w)?;
                        let report = shadow_report(&moved, anchor, &cw, &map, &eps_t, Metric::Sup)?;
                        Ok((base.report.is_some_and(|r| r.pass), moved, report))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let base_pass = results.iter().filter(|r| r.0).count();
                let moved_pass = results.iter().filter(|r| r.0 && r.2.pass).count();
                let min_slack = results
                    .iter()
                    .map(|r| r.2.min_relative_slack())
                    .fold(f64::INFINITY, f64::min);
                let v = if base_pass < results.len() {
                    Verdict::Inconclusive
                } else if moved_pass < base_pass {
                    Verdict::ContradictsPaper
                } else {
                    Verdict::MatchesPaper
                };
                verdict = verdict.and(v);
                if sample.is_none() {
                    if let Some((_, m, r)) = results.into_iter().next_back() {
                        sample = Some((m, r));
                    }
                }
                rows.push(json!({
                    "epsilon": eps.name,
                    "change": ch.name,
                    "orbits": orbits.len(),
                    "base_shadowed": base_pass,
                    "transported_shadowed": moved_pass,
                    "min_relative_slack": min_slack,
                    "verdict": v,
                }));
            }
        }
        if let Some((orbit, report)) = sample {
            art.orbit_csv("orbit.csv", &orbit, "transported δ-pseudo-orbit")?;
            art.plot("orbit.csv", crate::plot::PlotKind::Orbit2d)?;
            let table: Vec<Vec<String>> = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.n.to_string(),
                        super::f(e.distance),
                        super::f(e.distance.log2()),
                        super::f(e.log2_epsilon),
                    ]
                })
                .collect();
            art.table("slack.csv", &["n", "distance", "log2_distance", "log2_epsilon"], &table)?;
            art.plot("slack.csv", crate::plot::PlotKind::Slack)?;
        }
        Ok(Outcome {
            verdict,
            summary: format!(
                "{} change(s) × {} ε: transported shadow points {}",
                self.changes.len(),
                self.epsilons.len(),
                if verdict == Verdict::MatchesPaper { "all pass" } else { "do not all pass" }
            ),
            details: json!({ "base": self.base.describe(), "runs": rows }),
        })
    }
}
