//! Numerical experiments on the topological shadowing property of planar
//! homeomorphisms: C⁺ functions, pseudo-orbits, exact feasibility boxes,
//! and a scenario runner.

// `!(a < b)` is used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cplus;
pub mod error;
pub mod geometry;
pub mod maps;
pub mod plot;
pub mod pseudo_orbit;
pub mod scenario;
pub mod shadowing;

pub use cplus::{CPlusFn, Expr, Magnitude};
pub use error::{Error, Result};
pub use geometry::{Interval, Metric, Point};
pub use maps::{conjugate_map, power_map, Diffeo, MapSpec};
pub use pseudo_orbit::{realize, PseudoOrbitSpec, RealizedOrbit, Window};
pub use scenario::{run_scenario, ScenarioConfig, Verdict};
