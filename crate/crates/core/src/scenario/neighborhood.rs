//! Ball neighborhoods of the diagonal turned into 1-Lipschitz ε.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{f, Artifacts, NamedFn, Outcome, Verdict};
use crate::cplus::{epsilon_from_neighborhood, CPlusFn, Expr, NeighborhoodSpec, RegularGrid, SampleSet, TabulatedEpsilon};
use crate::error::Result;
use crate::geometry::Metric;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    pub radii: Vec<NamedFn>,
    pub grid: RegularGrid,
}

/// Violation counts; all zero means the table passed.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NeighborhoodCheck {
    pub edges: usize,
    pub lipschitz_violations: usize,
    pub above_rho: usize,
    pub pairs: u64,
    /// Grid pairs with `d(x, y) < ε̂(x)` but `d(x, y) ≥ ρ(x)`.
    pub outside_neighborhood: u64,
    /// For constant ρ: sites where `ε̂ ≠ ρ`.
    pub constant_mismatch: Option<usize>,
}

impl NeighborhoodCheck {
    pub fn passed(&self) -> bool {
        self.lipschitz_violations == 0
            && self.above_rho == 0
            && self.outside_neighborhood == 0
            && self.constant_mismatch.unwrap_or(0) == 0
    }
}

impl NeighborhoodConfig {
    pub fn default_config() -> Result<Self> {
        let spike = CPlusFn::new(Expr::Radial {
            metric: Metric::Sup,
            table: crate::cplus::RadialTable::new(vec![(0.0, 0.1), (0.5, 1.0)])?,
        });
        let bump = CPlusFn::new(Expr::Const(0.02) + (Expr::Const(2.0) * Expr::norm(Metric::Euclidean)).exp2_neg());
        Ok(NeighborhoodConfig {
            radii: vec![
                NamedFn::new("constant 0.7", CPlusFn::constant(0.7)?),
                NamedFn::new("spike", spike),
                NamedFn::new("0.02 + 2^(-2|x|_2)", bump),
            ],
            grid: RegularGrid::square(-10.0, 10.0, 201),
        })
    }

    pub(crate) fn run(&self, art: &mut Artifacts) -> Result<Outcome> {
        let samples = SampleSet::Grid(self.grid);
        let mut results = Vec::new();
        let mut tables = Vec::new();
        for rho in &self.radii {
            let tab = epsilon_from_neighborhood(&NeighborhoodSpec::new(rho.function.clone()), &samples, Metric::Sup)?;
            let constant = match rho.function.expr() {
                Expr::Const(c) => Some(*c),
                _ => None,
            };
            let check = check_table(&tab, constant)?;
            results.push(json!({ "rho": rho.name, "check": check, "passed": check.passed() }));
            tables.push((tab, check));
        }
        let j = self.grid.ny / 2;
        let mut header = vec!["x1".to_string()];
        for k in 0..self.radii.len() {
            header.push(format!("rho_{}", k + 1));
            header.push(format!("epsilon_{}", k + 1));
        }
        let rows: Vec<Vec<String>> = (0..self.grid.nx)
            .map(|i| {
                let idx = self.grid.index(i, j);
                let mut r = vec![f(self.grid.point(i, j).coords()[0])];
                for (t, _) in &tables {
                    r.push(f(t.rho[idx]));
                    r.push(f(t.values[idx]));
                }
                r
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        art.table("profile.csv", &header, &rows)?;
        let all = tables.iter().all(|(_, c)| c.passed());
        Ok(Outcome {
            verdict: if all { Verdict::MatchesPaper } else { Verdict::Inconclusive },
            summary: format!(
                "{} radius function(s) on a {}×{} grid: {}",
                self.radii.len(),
                self.grid.nx,
                self.grid.ny,
                if all { "1-Lipschitz, below ρ, U ⊂ E" } else { "some check failed" }
            ),
            details: json!({ "grid": self.grid, "results": results }),
        })
    }
}

/// Checks a tabulated ε̂ against its ρ on the grid.
pub fn check_table(tab: &TabulatedEpsilon, constant: Option<f64>) -> Result<NeighborhoodCheck> {
    let mut out = NeighborhoodCheck::default();
    let Some(grid) = tab.grid else {
        return Err(crate::error::Error::invalid("check_table needs a gridded table"));
    };
    let edges = grid.edges();
    out.edges = edges.len();
    for (a, b) in edges {
        let d = tab.metric.distance(&tab.sites[a], &tab.sites[b])?;
        if (tab.values[a] - tab.values[b]).abs() > d {
            out.lipschitz_violations += 1;
        }
    }
    out.above_rho = tab.values.iter().zip(&tab.rho).filter(|(e, r)| e > r).count();
    out.constant_mismatch = constant.map(|c| tab.values.iter().filter(|v| **v != c).count());

    // Pairs with d < ε̂(x) lie within ⌈ε̂/h⌉ cells of x.
    let h = ((grid.x.1 - grid.x.0) / (grid.nx.max(2) - 1) as f64)
        .min((grid.y.1 - grid.y.0) / (grid.ny.max(2) - 1) as f64);
    let (pairs, outside) = (0..grid.ny)
        .into_par_iter()
        .map(|j| {
            let mut pairs = 0u64;
            let mut outside = 0u64;
            for i in 0..grid.nx {
                let a = grid.index(i, j);
                let x = &tab.sites[a];
                let reach = (tab.values[a] / h).ceil() as usize + 1;
                for jj in j.saturating_sub(reach)..(j + reach + 1).min(grid.ny) {
                    for ii in i.saturating_sub(reach)..(i + reach + 1).min(grid.nx) {
                        let b = grid.index(ii, jj);
                        let d = tab.metric.distance(x, &tab.sites[b]).unwrap_or(f64::INFINITY);
                        if d < tab.values[a] {
                            pairs += 1;
                            if d >= tab.rho[a] {
                                outside += 1;
                            }
                        }
                    }
                }
            }
            (pairs, outside)
        })
        .reduce(|| (0, 0), |p, q| (p.0 + q.0, p.1 + q.1));
    out.pairs = pairs;
    out.outside_neighborhood = outside;
    Ok(out)
}
