//! Saddle splice with constant ε under the polar-warp metric and the sup norm.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Artifacts, NamedFn, Outcome, Verdict};
use crate::cplus::CPlusFn;
use crate::error::{Error, Result};
use crate::geometry::{Interval, Metric, Point};
use crate::maps::MapSpec;
use crate::plot::PlotKind;
use crate::pseudo_orbit::{realize, PseudoOrbitSpec, Window};
use crate::shadowing::sampled_search;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WarpConfig {
    /// Splice jump: backward seed `(1, q)`, forward seed `(1, 0)`.
    pub q: f64,
    /// Symmetric window `[−window, window]`.
    pub window: i64,
    pub epsilon: NamedFn,
    pub search_box: Vec<Interval>,
    pub step: f64,
}

impl Default for WarpConfig {
    fn default() -> Self {
        WarpConfig {
            q: 0.01 - 1e-9,
            window: 24,
            epsilon: NamedFn::new("constant 1", CPlusFn::constant(1.0).expect("positive")),
            search_box: vec![Interval::new(0.0, 4.0), Interval::new(-2.0, 2.0)],
            step: 5e-3,
        }
    }
}

impl WarpConfig {
    pub fn spec(&self) -> Result<PseudoOrbitSpec> {
        if !(self.q > 0.0) {
            return Err(Error::Config("q must be positive".into()));
        }
        Ok(PseudoOrbitSpec::spliced(
            MapSpec::saddle(),
            Point::xy(1.0, 0.0),
            Point::xy(1.0, self.q),
            0,
            Window::symmetric(self.window)?,
        ))
    }

    pub(crate) fn run(&self, art: &mut Artifacts) -> Result<Outcome> {
        let spec = self.spec()?;
        let warped = sampled_search(&spec, &self.epsilon.function, Metric::PolarWarp, &self.search_box, self.step)?;
        let flat = sampled_search(&spec, &self.epsilon.function, Metric::Sup, &self.search_box, self.step)?;
        let verdict = if warped.found.is_none() && flat.found.is_some() {
            Verdict::MatchesPaper
        } else {
            Verdict::Inconclusive
        };
        art.orbit_csv(
            "orbit.csv",
            &realize(&spec)?,
            &format!("spliced forward=(1, 0) backward=(1, {}) at 0", self.q),
        )?;
        art.plot("orbit.csv", PlotKind::Orbit2d)?;
        art.json("search.json", &json!({ "polar_warp": warped, "sup": flat }))?;
        let describe = |m: &str, found: &Option<Point>| match found {
            Some(p) => format!("{m}: shadowed by {p}"),
            None => format!("{m}: no grid point shadows"),
        };
        Ok(Outcome {
            verdict,
            summary: format!(
                "{}; {}",
                describe("polar warp", &warped.found),
                describe("sup norm", &flat.found)
            ),
            details: json!({
                "q": self.q,
                "window": self.window,
                "step": self.step,
                "polar_warp": { "found": warped.found, "grid_points": warped.grid_points, "refined": warped.refined },
                "sup": { "found": flat.found, "grid_points": flat.grid_points, "refined": flat.refined },
            }),
        })
    }
}
