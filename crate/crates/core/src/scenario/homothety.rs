//! Homothety-type maps: synthesized δ, random pseudo-orbits, shadowing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{f, Artifacts, NamedFn, Outcome, Verdict};
use crate::cplus::{saddle_adversarial_epsilon, CPlusFn, DeltaSynthesis, SynthesizedDelta};
use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};
use crate::maps::{power_map, MapSpec};
use crate::plot::PlotKind;
use crate::pseudo_orbit::{
    classify_with, escape_ratio, OrbitClass, OrbitKind, PseudoOrbitGenerator, RealizedOrbit, Window,
};
use crate::shadowing::{homothety_shadow_point, is_shadowed_by, shadow_report, tail_bound_log2, ShadowReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomothetyConfig {
    pub map: MapSpec,
    #[serde(default)]
    pub metric: Metric,
    pub epsilons: Vec<NamedFn>,
    pub sphere_samples: usize,
    pub rho_max: f64,
    /// Random points for checking the δ conditions.
    pub verify_points: usize,
    /// Pseudo-orbits per ε, half of each kind.
    pub orbits: usize,
    pub window: Window,
}

pub(crate) fn default_epsilons() -> Result<Vec<NamedFn>> {
    Ok(vec![
        NamedFn::new("constant 1", CPlusFn::constant(1.0)?),
        NamedFn::new("2^(-|x|)", saddle_adversarial_epsilon()),
        NamedFn::new(
            "radial table",
            CPlusFn::radial_table(vec![(0.0, 0.5), (1.0, 1.0), (4.0, 0.25), (16.0, 0.01)])?,
        ),
    ])
}

impl HomothetyConfig {
    fn with_map(map: MapSpec) -> Result<Self> {
        Ok(HomothetyConfig {
            map,
            metric: Metric::Sup,
            epsilons: default_epsilons()?,
            sphere_samples: 64,
            rho_max: 65536.0,
            verify_points: 100_000,
            orbits: 1000,
            window: Window::new(-20, 40)?,
        })
    }

    pub fn homothety() -> Result<Self> {
        Self::with_map(MapSpec::homothety(2, 2.0)?)
    }

    /// `z ↦ z̄/2` through its expanding inverse `(x, y) ↦ (2x, −2y)`.
    pub fn reverse_homothety() -> Result<Self> {
        Self::with_map(MapSpec::Power {
            inner: Box::new(MapSpec::reverse_homothety(0.5)?),
            k: -1,
        })
    }

    pub fn power() -> Result<Self> {
        Self::with_map(power_map(MapSpec::homothety(2, 2.0)?, 2)?)
    }

    fn factor(&self) -> Result<f64> {
        self.map
            .conformal_factor()
            .filter(|k| *k > 1.0)
            .ok_or_else(|| Error::Config(format!("map {} is not an expanding homothety", self.map.describe())))
    }

    pub(crate) fn synthesize(&self, eps: &CPlusFn) -> Result<SynthesizedDelta> {
        DeltaSynthesis {
            factor: self.factor()?,
            metric: self.metric,
            dim: self.map.dim(),
            sphere_samples: self.sphere_samples,
            rho_max: self.rho_max,
        }
        .run(eps)
    }

    pub(crate) fn run(&self, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
        let k = self.factor()?;
        let mut verdict = Verdict::MatchesPaper;
        let mut per_eps = Vec::new();
        for (idx, eps) in self.epsilons.iter().enumerate() {
            let synth = self.synthesize(&eps.function)?;
            let check = synth.verify(&eps.function, self.verify_points, seed)?;
            let gen = PseudoOrbitGenerator::new(self.map.clone(), synth.delta.clone(), self.metric, self.window)?;
            let base = seed.wrapping_add((idx as u64) << 32);
            let half = self.orbits / 2;
            let mut orbits = gen.batch(OrbitKind::Bounded, half, base)?;
            orbits.extend(gen.batch(OrbitKind::Escaping, self.orbits - half, base.wrapping_add(half as u64))?);
            let outcomes = orbits
                .par_iter()
                .map(|o| assess(o, &synth, &eps.function, self.metric, k))
                .collect::<Result<Vec<_>>>()?;

            let count = |p: &dyn Fn(&OrbitOutcome) -> bool| outcomes.iter().filter(|o| p(o)).count();
            let invalid = count(&|o| !o.valid);
            let bounded = count(&|o| matches!(o.class, OrbitClass::Bounded { .. }));
            let escaping = count(&|o| matches!(o.class, OrbitClass::Escaping { .. }));
            let unclassified = count(&|o| o.class == OrbitClass::Unclassified);
            let shadowed = count(&|o| o.report.as_ref().is_some_and(|r| r.pass));
            let tail_violations = count(&|o| o.tail_violations > 0);
            let min_slack = outcomes
                .iter()
                .filter_map(|o| o.report.as_ref())
                .map(ShadowReport::min_relative_slack)
                .fold(f64::INFINITY, f64::min);

            let v = if !check.passed() || invalid > 0 || unclassified > 0 || tail_violations > 0 {
                Verdict::Inconclusive
            } else if shadowed < outcomes.len() {
                Verdict::ContradictsPaper
            } else {
                Verdict::MatchesPaper
            };
            verdict = verdict.and(v);

            if idx == 0 {
                let pick = outcomes
                    .iter()
                    .position(|o| matches!(o.class, OrbitClass::Escaping { .. }))
                    .unwrap_or(0);
                write_slack(art, &outcomes[pick], &orbits[pick])?;
            }
            per_eps.push(json!({
                "epsilon": eps.name,
                "r0": synth.r0,
                "m": synth.m,
                "delta_check": check,
                "orbits": outcomes.len(),
                "invalid": invalid,
                "bounded": bounded,
                "escaping": escaping,
                "unclassified": unclassified,
                "shadowed": shadowed,
                "tail_bound_violations": tail_violations,
                "min_relative_slack": min_slack,
                "verdict": v,
            }));
        }
        let total: usize = self.orbits * self.epsilons.len();
        Ok(Outcome {
            verdict,
            summary: format!(
                "{} ε choice(s), {total} pseudo-orbits on [{}, {}], factor {k}: {}",
                self.epsilons.len(),
                self.window.n_min,
                self.window.n_max,
                verdict.name()
            ),
            details: json!({ "map": self.map.describe(), "metric": self.metric, "epsilons": per_eps }),
        })
    }
}

pub(crate) struct OrbitOutcome {
    pub valid: bool,
    pub class: OrbitClass,
    pub report: Option<ShadowReport>,
    /// `log2` tail bound per window index (escaping orbits only).
    pub tail: Option<Vec<f64>>,
    pub tail_violations: usize,
}

/// Classifies one pseudo-orbit and shadows it by the origin or by the
/// series point.
pub(crate) fn assess(
    orbit: &RealizedOrbit,
    synth: &SynthesizedDelta,
    eps: &CPlusFn,
    metric: Metric,
    k: f64,
) -> Result<OrbitOutcome> {
    let valid = orbit.validate(&synth.delta, metric)?.pass;
    let class = classify_with(orbit, synth.r0, metric, escape_ratio(k))?;
    let (report, tail) = match class {
        OrbitClass::Bounded { .. } => (
            Some(is_shadowed_by(orbit, &Point::origin(orbit.map.dim()), &orbit.map, eps, metric)?),
            None,
        ),
        OrbitClass::Escaping { .. } => {
            let (anchor, w) = homothety_shadow_point(orbit)?;
            let r = shadow_report(orbit, anchor, &w, &orbit.map, eps, metric)?;
            (Some(r), Some(tail_bound_log2(orbit, &synth.delta, k)?))
        }
        OrbitClass::Unclassified => (None, None),
    };
    let tail_violations = match (&report, &tail) {
        (Some(r), Some(t)) => r
            .entries
            .iter()
            .zip(t)
            .filter(|(e, b)| e.distance > 0.0 && e.distance.log2() > **b + 1e-9)
            .count(),
        _ => 0,
    };
    Ok(OrbitOutcome {
        valid,
        class,
        report,
        tail,
        tail_violations,
    })
}

pub(crate) fn write_slack(art: &mut Artifacts, outcome: &OrbitOutcome, orbit: &RealizedOrbit) -> Result<()> {
    art.orbit_csv("orbit.csv", orbit, "random δ-pseudo-orbit")?;
    if orbit.map.dim() == 2 {
        art.plot("orbit.csv", PlotKind::Orbit2d)?;
    }
    let Some(report) = &outcome.report else {
        return Ok(());
    };
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let tail = outcome.tail.as_ref().map_or(f64::NAN, |t| t[i]);
            vec![
                e.n.to_string(),
                f(e.distance),
                f(e.distance.log2()),
                f(e.log2_epsilon),
                f(tail),
            ]
        })
        .collect();
    art.table(
        "slack.csv",
        &["n", "distance", "log2_distance", "log2_epsilon", "log2_tail_bound"],
        &rows,
    )?;
    art.plot("slack.csv", PlotKind::Slack)
}
