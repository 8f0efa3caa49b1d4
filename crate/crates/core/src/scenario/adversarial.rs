//! Spliced pseudo-orbits that no true orbit shadows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{f, Artifacts, NamedFn, Outcome, Verdict};
use crate::cplus::{decaying_epsilon, saddle_adversarial_epsilon, CPlusFn, Expr};
use crate::error::{Error, Result};
use crate::geometry::{Interval, Metric, Point};
use crate::maps::MapSpec;
use crate::plot::PlotKind;
use crate::pseudo_orbit::{max_splice_jump, realize, PseudoOrbitSpec, Window};
use crate::shadowing::{box_feasibility, sampled_search, FeasibilityCertificate, FeasibilityOutcome, SearchResult};

/// How the splice jump `q` is chosen.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum JumpRule {
    Fixed { q: f64 },
    /// Largest admissible jump under each of `count` random δ's.
    MaxUnderRandomDeltas { count: usize },
    MaxUnder { delta: NamedFn },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleConfig {
    pub search_box: Vec<Interval>,
    pub step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdversarialConfig {
    pub map: MapSpec,
    pub epsilon: NamedFn,
    pub forward_seed: Point,
    /// Backward seed is `forward_seed + q·direction/‖direction‖∞`.
    pub direction: Point,
    #[serde(default)]
    pub splice_index: i64,
    pub jump: JumpRule,
    /// Symmetric window `[−window, window]`.
    pub window: i64,
    pub window_limit: i64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub oracle: Option<OracleConfig>,
}

fn default_margin() -> f64 {
    1e-9
}

/// `c`, `c·2^(−a‖x‖∞)` or `c/(1 + a‖x‖∞)` with `c ∈ [0.01, 1]`, `a ∈ [0.1, 2]`.
pub(crate) fn random_delta(rng: &mut ChaCha8Rng) -> NamedFn {
    let c: f64 = rng.gen_range(0.01..=1.0);
    let a: f64 = rng.gen_range(0.1..=2.0);
    let norm = || Expr::norm(Metric::Sup);
    match rng.gen_range(0..3) {
        0 => NamedFn::new(&format!("const({c:.6})"), CPlusFn::new(Expr::Const(c))),
        1 => NamedFn::new(
            &format!("{c:.6}*2^(-{a:.6}|x|)"),
            CPlusFn::new(Expr::Const(c) * (Expr::Const(a) * norm()).exp2_neg()),
        ),
        _ => NamedFn::new(
            &format!("{c:.6}/(1+{a:.6}|x|)"),
            CPlusFn::new(Expr::Const(c) * (Expr::Const(1.0) + Expr::Const(a) * norm()).recip()),
        ),
    }
}

impl AdversarialConfig {
    pub fn saddle() -> Result<Self> {
        Ok(AdversarialConfig {
            map: MapSpec::saddle(),
            epsilon: NamedFn::new("2^(-|x|)", saddle_adversarial_epsilon()),
            forward_seed: Point::xy(1.0, 0.0),
            direction: Point::xy(0.0, 1.0),
            splice_index: 0,
            jump: JumpRule::MaxUnderRandomDeltas { count: 5 },
            window: 32,
            window_limit: 32,
            margin: default_margin(),
            oracle: Some(OracleConfig {
                search_box: vec![Interval::new(0.0, 2.0), Interval::new(-1.0, 1.0)],
                step: 1e-3,
            }),
        })
    }

    pub fn translation() -> Result<Self> {
        Ok(AdversarialConfig {
            map: MapSpec::translation(2),
            epsilon: NamedFn::new("min(1, 1/(1+|x|))", decaying_epsilon(1.0)?),
            forward_seed: Point::xy(0.0, 0.0),
            direction: Point::xy(0.0, 1.0),
            splice_index: 0,
            jump: JumpRule::Fixed { q: 0.5 },
            window: 64,
            window_limit: 64,
            margin: default_margin(),
            oracle: Some(OracleConfig {
                search_box: vec![Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)],
                step: 1e-3,
            }),
        })
    }

    fn spec(&self, q: f64) -> Result<PseudoOrbitSpec> {
        let u = self.direction.scale(1.0 / Metric::Sup.norm(&self.direction)?);
        Ok(PseudoOrbitSpec::spliced(
            self.map.clone(),
            self.forward_seed.clone(),
            self.forward_seed.add(&u.scale(q))?,
            self.splice_index,
            Window::symmetric(self.window)?,
        ))
    }

    /// `(δ used, q)` pairs.
    fn jumps(&self, seed: u64) -> Result<Vec<(Option<NamedFn>, f64)>> {
        let probe = self.spec(1.0)?;
        match &self.jump {
            JumpRule::Fixed { q } => {
                if !(*q > 0.0) {
                    return Err(Error::Config("jump q must be positive".into()));
                }
                Ok(vec![(None, *q)])
            }
            JumpRule::MaxUnder { delta } => {
                let q = max_splice_jump(&probe, &delta.function, Metric::Sup)?;
                Ok(vec![(Some(delta.clone()), q)])
            }
            JumpRule::MaxUnderRandomDeltas { count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..*count)
                    .map(|_| {
                        let d = random_delta(&mut rng);
                        let q = max_splice_jump(&probe, &d.function, Metric::Sup)?;
                        Ok((Some(d), q))
                    })
                    .collect()
            }
        }
    }

    pub(crate) fn run(&self, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
        let mut verdict = Verdict::MatchesPaper;
        let mut cases = Vec::new();
        let mut certificates = Vec::new();
        for (i, (delta, q)) in self.jumps(seed)?.into_iter().enumerate() {
            let spec = self.spec(q)?;
            let valid = match &delta {
                Some(d) => crate::pseudo_orbit::validate(&spec, &d.function, Metric::Sup)?.pass,
                None => true,
            };
            let cert = box_feasibility(&spec, &self.epsilon.function, self.window_limit, self.margin)?;
            let search = match &self.oracle {
                Some(o) => Some(sampled_search(&spec, &self.epsilon.function, Metric::Sup, &o.search_box, o.step)?),
                None => None,
            };
            verdict = verdict.and(case_verdict(valid, &cert, search.as_ref()));
            if i == 0 {
                let rule = format!(
                    "spliced forward={} backward={} at {}",
                    self.forward_seed,
                    self.forward_seed.add(&self.direction.scale(q / Metric::Sup.norm(&self.direction)?))?,
                    self.splice_index
                );
                art.orbit_csv("orbit.csv", &realize(&spec)?, &rule)?;
                art.plot("orbit.csv", PlotKind::Orbit2d)?;
                write_boxwidth(art, &cert)?;
            }
            cases.push(json!({
                "delta": delta.as_ref().map(|d| d.name.clone()),
                "q": q,
                "delta_pseudo_orbit": valid,
                "certificate": outcome_summary(&cert.outcome),
                "oracle": search.as_ref().map(|s| json!({
                    "found": s.found,
                    "grid_points": s.grid_points,
                    "refined": s.refined,
                })),
            }));
            certificates.push(cert);
        }
        art.json("certificate.json", &certificates)?;
        let summary = match verdict {
            Verdict::MatchesPaper => format!(
                "{} splice(s): every certificate Empty and no grid point shadows",
                cases.len()
            ),
            Verdict::ContradictsPaper => "a spliced pseudo-orbit admits a shadowing point".to_string(),
            Verdict::Inconclusive => "some certificate is indeterminate or some δ check failed".to_string(),
        };
        Ok(Outcome {
            verdict,
            summary,
            details: json!({ "epsilon": self.epsilon.name, "cases": cases }),
        })
    }
}

fn case_verdict(valid: bool, cert: &FeasibilityCertificate, search: Option<&SearchResult>) -> Verdict {
    let found = search.is_some_and(|s| s.found.is_some());
    if cert.is_nonempty() || found {
        Verdict::ContradictsPaper
    } else if cert.is_empty() && valid {
        Verdict::MatchesPaper
    } else {
        Verdict::Inconclusive
    }
}

fn outcome_summary(o: &FeasibilityOutcome) -> serde_json::Value {
    match o {
        FeasibilityOutcome::Empty {
            emptiness_window,
            n,
            coordinate,
        } => json!({"kind": "empty", "emptiness_window": emptiness_window, "n": n, "coordinate": coordinate}),
        FeasibilityOutcome::NonEmpty { witness, .. } => json!({"kind": "non_empty", "witness": witness}),
        FeasibilityOutcome::Indeterminate { .. } => json!({"kind": "indeterminate"}),
    }
}

pub(crate) fn write_boxwidth(art: &mut Artifacts, cert: &FeasibilityCertificate) -> Result<()> {
    let widths = cert.widths();
    let dim = widths.first().map_or(0, |w| w.1.len());
    let mut header = vec!["step".to_string(), "n".to_string()];
    header.extend((1..=dim).map(|j| format!("width_{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = widths
        .iter()
        .enumerate()
        .map(|(i, (n, w))| {
            let mut r = vec![i.to_string(), n.to_string()];
            r.extend(w.iter().map(|v| f(*v)));
            r
        })
        .collect();
    art.table("boxwidth.csv", &header, &rows)?;
    art.plot("boxwidth.csv", PlotKind::Boxwidth)
}
