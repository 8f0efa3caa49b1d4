//! Named, configured experiments with JSON/CSV/SVG artifacts.

mod adversarial;
mod conjugacy;
mod fixed_points;
mod forward;
mod homothety;
mod neighborhood;
mod warp;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cplus::CPlusFn;
use crate::error::{Error, Result};
use crate::plot::{render_svg, PlotKind};
use crate::pseudo_orbit::{write_csv, RealizedOrbit};

pub use adversarial::{AdversarialConfig, JumpRule, OracleConfig};
pub use conjugacy::{ConjugacyConfig, NamedChange};
pub use fixed_points::FixedPointConfig;
pub use forward::ForwardConfig;
pub use homothety::HomothetyConfig;
pub use neighborhood::NeighborhoodConfig;
pub use warp::WarpConfig;

/// A C⁺ function with a display name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFn {
    pub name: String,
    #[serde(rename = "expr")]
    pub function: CPlusFn,
}

impl NamedFn {
    pub fn new(name: &str, function: CPlusFn) -> Self {
        NamedFn {
            name: name.to_string(),
            function,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Adversarial(AdversarialConfig),
    Homothety(HomothetyConfig),
    Conjugacy(ConjugacyConfig),
    MetricWarp(WarpConfig),
    ForwardToFull(ForwardConfig),
    Neighborhood(NeighborhoodConfig),
    FixedPointScan(FixedPointConfig),
}

impl Experiment {
    fn kind(&self) -> &'static str {
        match self {
            Experiment::Adversarial(_) => "adversarial",
            Experiment::Homothety(_) => "homothety",
            Experiment::Conjugacy(_) => "conjugacy",
            Experiment::MetricWarp(_) => "metric_warp",
            Experiment::ForwardToFull(_) => "forward_to_full",
            Experiment::Neighborhood(_) => "neighborhood",
            Experiment::FixedPointScan(_) => "fixed_point_scan",
        }
    }
}

/// One scenario: a single JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Replaces the scenario's window by `[−n, n]` (and any window limit by `n`).
    pub fn set_window(&mut self, n: i64) -> Result<()> {
        if n < 1 {
            return Err(Error::Config("--window must be at least 1".into()));
        }
        let w = crate::pseudo_orbit::Window::symmetric(n)?;
        match &mut self.experiment {
            Experiment::Adversarial(c) => {
                c.window = n;
                c.window_limit = n;
            }
            Experiment::Homothety(c) => c.window = w,
            Experiment::Conjugacy(c) => c.window = w,
            Experiment::MetricWarp(c) => c.window = n,
            Experiment::ForwardToFull(c) => c.window = w,
            Experiment::Neighborhood(_) | Experiment::FixedPointScan(_) => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MatchesPaper,
    ContradictsPaper,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::MatchesPaper => 0,
            Verdict::ContradictsPaper => 2,
            Verdict::Inconclusive => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::MatchesPaper => "matches-paper",
            Verdict::ContradictsPaper => "contradicts-paper",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Worst of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (ContradictsPaper, _) | (_, ContradictsPaper) => ContradictsPaper,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => MatchesPaper,
        }
    }
}

/// Result of [`run_scenario`]. `report.json` holds everything but the wall
/// time, so reruns are byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub experiment: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub summary: String,
    pub artifacts: Vec<String>,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

pub(crate) struct Outcome {
    pub verdict: Verdict,
    pub summary: String,
    pub details: serde_json::Value,
}

/// Collects files written into a scenario's output directory.
pub(crate) struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir, files: Vec::new() })
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn orbit_csv(&mut self, name: &str, orbit: &RealizedOrbit, rule: &str) -> Result<()> {
        let mut buf = Vec::new();
        write_csv(&mut buf, orbit, rule)?;
        self.text(name, &String::from_utf8(buf).expect("CSV is UTF-8"))
    }

    /// Writes `rows` under `header` as CSV.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.text(name, &String::from_utf8(bytes).expect("CSV is UTF-8"))
    }

    /// Renders an already written CSV artifact.
    pub fn plot(&mut self, csv_name: &str, kind: PlotKind) -> Result<()> {
        let text = std::fs::read_to_string(self.dir.join(csv_name))?;
        let stem = csv_name.trim_end_matches(".csv");
        self.text(&format!("{stem}.{}.svg", kind.name()), &render_svg(kind, &text)?)
    }
}

/// Formats a float for CSV output; `{:e}` round-trips exactly.
pub(crate) fn f(v: f64) -> String {
    format!("{v:e}")
}

struct Builtin {
    name: &'static str,
    description: &'static str,
    build: fn() -> Result<Experiment>,
}

fn catalog() -> [Builtin; 10] {
    [
        Builtin {
            name: "saddle-not-tsp",
            description: "Saddle (2x, y/2) with ε = 2^(−‖x‖): spliced pseudo-orbits admit no shadowing orbit (empty certificate).",
            build: || Ok(Experiment::Adversarial(AdversarialConfig::saddle()?)),
        },
        Builtin {
            name: "homothety-tsp",
            description: "Homothety x ↦ 2x: synthesized δ, random pseudo-orbits classified and shadowed.",
            build: || Ok(Experiment::Homothety(HomothetyConfig::homothety()?)),
        },
        Builtin {
            name: "reverse-homothety-tsp",
            description: "Reverse homothety z ↦ z̄/2 through its inverse (x, y) ↦ (2x, −2y): same pipeline as homothety-tsp.",
            build: || Ok(Experiment::Homothety(HomothetyConfig::reverse_homothety()?)),
        },
        Builtin {
            name: "translation-adversarial",
            description: "Translation x ↦ x + e₁ with vanishing ε: the spliced pseudo-orbit with jump 0.5 is not shadowed.",
            build: || Ok(Experiment::Adversarial(AdversarialConfig::translation()?)),
        },
        Builtin {
            name: "metric-warp",
            description: "Saddle with constant ε = 1 under the polar-warp metric versus the sup norm (grid oracle).",
            build: || Ok(Experiment::MetricWarp(WarpConfig::default())),
        },
        Builtin {
            name: "conjugacy-invariance",
            description: "Homothety shadowing transported through an affine and a radial change of coordinates.",
            build: || Ok(Experiment::Conjugacy(ConjugacyConfig::default_changes()?)),
        },
        Builtin {
            name: "power-invariance",
            description: "Square of the homothety (factor 4): synthesized δ and shadowing as in homothety-tsp.",
            build: || Ok(Experiment::Homothety(HomothetyConfig::power()?)),
        },
        Builtin {
            name: "forward-to-full",
            description: "Limit of forward shadows f^k(y_−k) against the directly computed full-window shadow point.",
            build: || Ok(Experiment::ForwardToFull(ForwardConfig::default_config()?)),
        },
        Builtin {
            name: "neighborhood-equivalence",
            description: "Infimal convolution turning ball neighborhoods of the diagonal into 1-Lipschitz ε.",
            build: || Ok(Experiment::Neighborhood(NeighborhoodConfig::default_config()?)),
        },
        Builtin {
            name: "fixed-point-scan",
            description: "Fixed points versus finite-window shadowing evidence across the map catalog.",
            build: || Ok(Experiment::FixedPointScan(FixedPointConfig::default())),
        },
    ]
}

/// Catalog entry as printed by `list --json`.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub experiment: &'static str,
    pub description: &'static str,
}

pub fn list_scenarios() -> Vec<ScenarioInfo> {
    catalog()
        .iter()
        .map(|b| ScenarioInfo {
            name: b.name,
            experiment: (b.build)().map(|e| e.kind()).unwrap_or("?"),
            description: b.description,
        })
        .collect()
}

/// Default configuration of a built-in scenario.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let b = catalog()
        .into_iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{name}` (see `shadowlab list`)")))?;
    Ok(ScenarioConfig {
        name: b.name.to_string(),
        seed: 0,
        output_dir: None,
        experiment: (b.build)()?,
    })
}

/// Output directory: explicit argument, then `OUTPUT_DIR`, then the
/// config's `output_dir`, then `shadowlab-out`.
pub fn resolve_output_root(explicit: Option<&Path>, config: &ScenarioConfig) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("OUTPUT_DIR") {
        return PathBuf::from(p);
    }
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("shadowlab-out"))
}

/// Runs one scenario, writing artifacts to `<root>/<name>/`.
pub fn run_scenario(config: &ScenarioConfig, root: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let dir = root.join(&config.name);
    let mut art = Artifacts::new(dir.clone())?;
    let seed = config.seed;
    let outcome = match &config.experiment {
        Experiment::Adversarial(c) => c.run(seed, &mut art)?,
        Experiment::Homothety(c) => c.run(seed, &mut art)?,
        Experiment::Conjugacy(c) => c.run(seed, &mut art)?,
        Experiment::MetricWarp(c) => c.run(&mut art)?,
        Experiment::ForwardToFull(c) => c.run(seed, &mut art)?,
        Experiment::Neighborhood(c) => c.run(&mut art)?,
        Experiment::FixedPointScan(c) => c.run(seed, &mut art)?,
    };
    art.json("config.json", config)?;
    let mut artifacts = art.files.clone();
    artifacts.push("report.json".to_string());
    let report = RunReport {
        scenario: config.name.clone(),
        experiment: config.experiment.kind().to_string(),
        seed,
        verdict: outcome.verdict,
        summary: outcome.summary,
        artifacts,
        details: outcome.details,
        wall_time: Duration::ZERO,
        output_dir: dir,
    };
    art.json("report.json", &report)?;
    Ok(RunReport {
        wall_time: start.elapsed(),
        ..report
    })
}

/// Runs several scenarios, concurrently if `parallel`. Results keep the
/// input order.
pub fn run_many(configs: &[ScenarioConfig], root: &Path, parallel: bool) -> Vec<Result<RunReport>> {
    if parallel {
        configs.par_iter().map(|c| run_scenario(c, root)).collect()
    } else {
        configs.iter().map(|c| run_scenario(c, root)).collect()
    }
}
