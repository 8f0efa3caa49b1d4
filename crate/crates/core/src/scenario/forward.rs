//! Forward shadows of shifted pseudo-orbits and their limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::homothety::{default_epsilons, HomothetyConfig};
use super::{f, Artifacts, NamedFn, Outcome, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};
use crate::maps::MapSpec;
use crate::pseudo_orbit::{OrbitKind, PseudoOrbitGenerator, RealizedOrbit, Window};
use crate::shadowing::{forward_to_full_shadow, homothety_shadow_point};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForwardConfig {
    pub map: MapSpec,
    pub epsilon: NamedFn,
    pub orbits: usize,
    pub depth: usize,
    /// Cauchy tolerance of the limit.
    pub tol: f64,
    /// Allowed sup distance between the limit and the direct shadow point.
    pub match_tol: f64,
    pub window: Window,
    pub sphere_samples: usize,
    pub rho_max: f64,
}

impl ForwardConfig {
    pub fn default_config() -> Result<Self> {
        Ok(ForwardConfig {
            map: MapSpec::homothety(2, 2.0)?,
            epsilon: default_epsilons()?.remove(0),
            orbits: 100,
            depth: 30,
            tol: 1e-9,
            match_tol: 1e-8,
            window: Window::new(-20, 40)?,
            sphere_samples: 64,
            rho_max: 65536.0,
        })
    }

    /// Limit point and the direct shadow point at index 0, or `None` when
    /// the limit does not converge.
    pub fn limit_and_direct(&self, orbit: &RealizedOrbit) -> Result<Option<(Point, Point)>> {
        let shadower = |z: &RealizedOrbit| Ok(homothety_shadow_point(z)?.1);
        let limit = match forward_to_full_shadow(orbit, &self.epsilon.function, Metric::Sup, shadower, self.depth, self.tol) {
            Ok(p) => p,
            Err(Error::NonConvergence { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let depth = self.depth as i64;
        let full = orbit.shifted(0, Window::new(-depth, orbit.window.n_max)?)?;
        let (anchor, w) = homothety_shadow_point(&full)?;
        let direct = orbit.map.iterate(&w, -anchor)?;
        Ok(Some((limit, direct)))
    }

    pub(crate) fn run(&self, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
        let synth = HomothetyConfig {
            map: self.map.clone(),
            metric: Metric::Sup,
            epsilons: vec![self.epsilon.clone()],
            sphere_samples: self.sphere_samples,
            rho_max: self.rho_max,
            verify_points: 0,
            orbits: self.orbits,
            window: self.window,
        }
        .synthesize(&self.epsilon.function)?;
        let gen = PseudoOrbitGenerator::new(self.map.clone(), synth.delta, Metric::Sup, self.window)?;
        let orbits = gen.batch(OrbitKind::Escaping, self.orbits, seed)?;
        let results = orbits
            .par_iter()
            .map(|o| self.limit_and_direct(o))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        let (mut converged, mut matched, mut worst) = (0, 0, 0.0f64);
        for (i, r) in results.iter().enumerate() {
            match r {
                Some((limit, direct)) => {
                    let d = Metric::Sup.distance(limit, direct)?;
                    converged += 1;
                    if d <= self.match_tol {
                        matched += 1;
                    }
                    worst = worst.max(d);
                    let mut row = vec![i.to_string(), "true".into(), f(d)];
                    row.extend(limit.coords().iter().map(|v| f(*v)));
                    rows.push(row);
                }
                None => {
                    let mut row = vec![i.to_string(), "false".into()];
                    row.extend(std::iter::repeat_n(f(f64::NAN), self.map.dim() + 1));
                    rows.push(row);
                }
            }
        }
        if let Some(o) = orbits.first() {
            art.orbit_csv("orbit.csv", o, "random escaping δ-pseudo-orbit")?;
            if o.map.dim() == 2 {
                art.plot("orbit.csv", crate::plot::PlotKind::Orbit2d)?;
            }
        }
        let dim = self.map.dim();
        let mut header = vec!["orbit".to_string(), "converged".into(), "distance_to_direct".into()];
        header.extend((1..=dim).map(|j| format!("limit_x{j}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        art.table("limits.csv", &header, &rows)?;
        let verdict = if converged == orbits.len() && matched == converged {
            Verdict::MatchesPaper
        } else {
            Verdict::Inconclusive
        };
        Ok(Outcome {
            verdict,
            summary: format!(
                "{converged}/{} limits converged, {matched} within {:e} of the direct shadow point",
                orbits.len(),
                self.match_tol
            ),
            details: json!({
                "orbits": orbits.len(),
                "depth": self.depth,
                "converged": converged,
                "matched": matched,
                "max_distance": worst,
            }),
        })
    }
}
