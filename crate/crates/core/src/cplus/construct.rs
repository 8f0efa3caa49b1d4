use rayon::prelude::*;

use super::{CPlusFn, Expr};
use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};

/// `ε(x) = 2^(−‖x‖_∞)`, the ε that defeats the saddle.
pub fn saddle_adversarial_epsilon() -> CPlusFn {
    CPlusFn::new(Expr::Norm(Metric::Sup).exp2_neg())
}

/// `ε(x) = min(1, rate / (1 + ‖x‖_∞))`, vanishing at infinity.
pub fn decaying_epsilon(rate: f64) -> Result<CPlusFn> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(format!("decay rate must be positive, got {rate}")));
    }
    Ok(CPlusFn::new(
        Expr::Const(1.0).min(Expr::Const(rate) * (Expr::Const(1.0) + Expr::Norm(Metric::Sup)).recip()),
    ))
}

/// Ball-type neighborhood of the diagonal: `E[x] = B(x, ρ(x))`.
#[derive(Clone, Debug)]
pub struct NeighborhoodSpec {
    pub radius: CPlusFn,
}

impl NeighborhoodSpec {
    pub fn new(radius: CPlusFn) -> Self {
        NeighborhoodSpec { radius }
    }
}

/// Uniform planar grid `[x_lo, x_hi] × [y_lo, y_hi]` with `nx × ny` nodes.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularGrid {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl RegularGrid {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        RegularGrid { x: (lo, hi), y: (lo, hi), nx: n, ny: n }
    }

    fn coord(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n == 1 {
            range.0
        } else {
            range.0 + (range.1 - range.0) * (i as f64) / ((n - 1) as f64)
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::xy(Self::coord(self.x, self.nx, i), Self::coord(self.y, self.ny, j))
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    fn spacing(&self) -> (f64, f64) {
        let sx = if self.nx > 1 { (self.x.1 - self.x.0) / (self.nx - 1) as f64 } else { 0.0 };
        let sy = if self.ny > 1 { (self.y.1 - self.y.0) / (self.ny - 1) as f64 } else { 0.0 };
        (sx, sy)
    }

    /// Index pairs of 8-neighbour grid edges, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let a = self.index(i, j);
                if i + 1 < self.nx {
                    out.push((a, self.index(i + 1, j)));
                }
                if j + 1 < self.ny {
                    out.push((a, self.index(i, j + 1)));
                    if i + 1 < self.nx {
                        out.push((a, self.index(i + 1, j + 1)));
                    }
                    if i > 0 {
                        out.push((a, self.index(i - 1, j + 1)));
                    }
                }
            }
        }
        out
    }
}

/// Finite sample set over which the infimum is taken.
#[derive(Clone, Debug)]
pub enum SampleSet {
    Grid(RegularGrid),
    Points(Vec<Point>),
}

impl SampleSet {
    pub fn points(&self) -> Vec<Point> {
        match self {
            SampleSet::Grid(g) => g.points(),
            SampleSet::Points(p) => p.clone(),
        }
    }
}

/// Sampled infimal convolution `ε̂(x) = min_y (ρ(y) + d(x, y))`.
#[derive(Clone, Debug)]
pub struct TabulatedEpsilon {
    pub metric: Metric,
    pub sites: Vec<Point>,
    pub rho: Vec<f64>,
    pub values: Vec<f64>,
    pub grid: Option<RegularGrid>,
}

impl TabulatedEpsilon {
    /// Evaluable form: `x ↦ min_j (ε̂_j + d(x, s_j))`, which agrees with the
    /// table on the sites and extends it 1-Lipschitz everywhere else.
    pub fn to_cplus(&self) -> CPlusFn {
        CPlusFn::new(Expr::InfConv {
            metric: self.metric,
            sites: self.sites.clone(),
            values: self.values.clone(),
        })
    }
}

/// Reference `O(N²)` evaluation of `min_j (ρ_j + d(s_i, s_j))`.
pub fn inf_convolution_brute_force(sites: &[Point], rho: &[f64], metric: Metric) -> Result<Vec<f64>> {
    sites
        .par_iter()
        .map(|x| {
            let mut best = f64::INFINITY;
            for (y, r) in sites.iter().zip(rho) {
                best = best.min(r + metric.distance(x, y)?);
            }
            Ok(best)
        })
        .collect()
}

/// Converts a ball neighborhood of the diagonal into a C⁺ function whose
/// uniform neighborhood `U_ε = {(x, y): d(x, y) < ε(x)}` sits inside it.
///
/// For ball-type `E[x] = B(x, ρ(x))` the distance from `x` to the
/// complement of `E[x]` is `ρ(x)`, so the infimal convolution is taken
/// over `ρ` directly. On uniform square grids with the sup metric the
/// minimum is computed by forward/backward chamfer sweeps (the sup distance
/// between grid nodes is exactly the king-move path length); otherwise by
/// direct minimization.
pub fn epsilon_from_neighborhood(
    nbhd: &NeighborhoodSpec,
    samples: &SampleSet,
    metric: Metric,
) -> Result<TabulatedEpsilon> {
    let sites = samples.points();
    if sites.is_empty() {
        return Err(Error::invalid("sample grid is empty"));
    }
    let rho = sites
        .par_iter()
        .map(|p| nbhd.radius.eval(p))
        .collect::<Result<Vec<_>>>()?;

    let (values, grid) = match samples {
        SampleSet::Grid(g) if metric == Metric::Sup && square_cells(g) => {
            let mut v = rho.clone();
            chamfer(g, &sites, &mut v)?;
            repair_edges(g, &sites, &mut v)?;
            (v, Some(*g))
        }
        SampleSet::Grid(g) => {
            let mut v = inf_convolution_brute_force(&sites, &rho, metric)?;
            repair_edges(g, &sites, &mut v)?;
            (v, Some(*g))
        }
        SampleSet::Points(_) => (inf_convolution_brute_force(&sites, &rho, metric)?, None),
    };
    Ok(TabulatedEpsilon {
        metric,
        sites,
        rho,
        values,
        grid,
    })
}

fn square_cells(g: &RegularGrid) -> bool {
    let (sx, sy) = g.spacing();
    g.nx > 1 && g.ny > 1 && (sx - sy).abs() <= 1e-12 * sx.abs().max(sy.abs())
}

fn chamfer(g: &RegularGrid, sites: &[Point], v: &mut [f64]) -> Result<()> {
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    // Causal half of the 8-neighbourhood for the forward raster.
    const FWD: [(isize, isize); 4] = [(-1, 0), (-1, -1), (0, -1), (1, -1)];
    let relax = |v: &mut [f64], i: isize, j: isize, offs: &[(isize, isize)]| -> Result<bool> {
        let a = g.index(i as usize, j as usize);
        let mut changed = false;
        for (di, dj) in offs {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                continue;
            }
            let b = g.index(ni as usize, nj as usize);
            let cand = v[b] + Metric::Sup.distance(&sites[a], &sites[b])?;
            if cand < v[a] {
                v[a] = cand;
                changed = true;
            }
        }
        Ok(changed)
    };
    let bwd: Vec<(isize, isize)> = FWD.iter().map(|(a, b)| (-a, -b)).collect();
    loop {
        let mut changed = false;
        for j in 0..ny {
            for i in 0..nx {
                changed |= relax(v, i, j, &FWD)?;
            }
        }
        for j in (0..ny).rev() {
            for i in (0..nx).rev() {
                changed |= relax(v, i, j, &bwd)?;
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Lowers values by single ulps until `|v_a − v_b| ≤ d(a, b)` holds in
/// floating point on every grid edge. Only ever decreases values.
fn repair_edges(g: &RegularGrid, sites: &[Point], v: &mut [f64]) -> Result<()> {
    let edges = g.edges();
    let dists = edges
        .iter()
        .map(|(a, b)| Metric::Sup.distance(&sites[*a], &sites[*b]))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..64 {
        let mut changed = false;
        for ((a, b), d) in edges.iter().zip(&dists) {
            let (hi, lo) = if v[*a] >= v[*b] { (*a, *b) } else { (*b, *a) };
            while v[hi] - v[lo] > *d {
                v[hi] = next_down(v[hi]);
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
    Err(Error::contract("Lipschitz repair did not settle"))
}

fn next_down(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    f64::from_bits(x.to_bits() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_epsilon_examples() {
        let e = saddle_adversarial_epsilon();
        assert_eq!(e.eval(&Point::xy(0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(e.eval(&Point::xy(1.0, 0.0)).unwrap(), 0.5);
        // ε(2ⁿ(x₀, 0)) = 2^(−2ⁿ) with x₀ = 1, n = 3.
        assert_eq!(e.eval(&Point::xy(8.0, 0.0)).unwrap(), 2f64.powi(-8));
    }

    #[test]
    fn decaying_epsilon_examples() {
        let e = decaying_epsilon(1.0).unwrap();
        assert_eq!(e.eval(&Point::xy(0.0, 0.0)).unwrap(), 1.0);
        assert!((e.eval(&Point::xy(9.0, 0.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!(decaying_epsilon(0.0).is_err());
        // Shadowing the translation orbit at x_l = l e₁ forces ‖ȳ‖ < ε(x_l).
        for l in [1.0, 10.0, 1000.0] {
            let bound = e.eval(&Point::xy(l, 0.0)).unwrap();
            assert!((bound - 1.0 / (1.0 + l)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_radius_is_reproduced_exactly() {
        let nb = NeighborhoodSpec::new(CPlusFn::constant(0.7).unwrap());
        let t = epsilon_from_neighborhood(&nb, &SampleSet::Grid(RegularGrid::square(-2.0, 2.0, 21)), Metric::Sup)
            .unwrap();
        assert!(t.values.iter().all(|v| *v == 0.7));
    }

    #[test]
    fn spike_radius_gives_cone() {
        // ρ = 1 except near the origin where it dips to 0.1; the envelope is
        // min(1, 0.1 + ‖x‖) on the grid.
        let rho = CPlusFn::radial_table(vec![(0.0, 0.1), (0.5, 1.0)]).unwrap();
        let grid = RegularGrid::square(-3.0, 3.0, 61);
        let t = epsilon_from_neighborhood(&NeighborhoodSpec::new(rho), &SampleSet::Grid(grid), Metric::Sup).unwrap();
        for (p, v) in t.sites.iter().zip(&t.values) {
            let want = 1f64.min(0.1 + crate::geometry::sup_norm(p));
            assert!((v - want).abs() < 1e-12, "{p}: {v} vs {want}");
        }
    }

    #[test]
    fn lipschitz_radius_is_unchanged() {
        let rho = CPlusFn::new(Expr::Norm(Metric::Sup) + Expr::Const(1.0));
        let pts: Vec<Point> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                Point::xy(5.0 * t.sin(), 3.0 * (1.3 * t).cos())
            })
            .collect();
        let t = epsilon_from_neighborhood(&NeighborhoodSpec::new(rho.clone()), &SampleSet::Points(pts), Metric::Sup)
            .unwrap();
        // Equal up to rounding of ρ(y) + d(x, y).
        for (v, r) in t.values.iter().zip(&t.rho) {
            assert!((v - r).abs() <= 1e-12 * r, "{v} vs {r}");
        }
    }

    #[test]
    fn chamfer_matches_brute_force() {
        let rho = CPlusFn::new(Expr::Const(0.02) + (Expr::Const(2.0) * Expr::Norm(Metric::Euclidean)).exp2_neg());
        let grid = RegularGrid::square(-4.0, 4.0, 41);
        let t = epsilon_from_neighborhood(&NeighborhoodSpec::new(rho), &SampleSet::Grid(grid), Metric::Sup).unwrap();
        let brute = inf_convolution_brute_force(&t.sites, &t.rho, Metric::Sup).unwrap();
        for (a, b) in t.values.iter().zip(&brute) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let nb = NeighborhoodSpec::new(CPlusFn::constant(1.0).unwrap());
        assert!(epsilon_from_neighborhood(&nb, &SampleSet::Points(vec![]), Metric::Sup).is_err());
    }

    #[test]
    fn evaluable_form_agrees_on_sites() {
        let rho = CPlusFn::radial_table(vec![(0.0, 0.2), (1.0, 2.0)]).unwrap();
        let grid = RegularGrid::square(-1.0, 1.0, 9);
        let t = epsilon_from_neighborhood(&NeighborhoodSpec::new(rho), &SampleSet::Grid(grid), Metric::Sup).unwrap();
        let f = t.to_cplus();
        for (p, v) in t.sites.iter().zip(&t.values) {
            assert!((f.eval(p).unwrap() - v).abs() < 1e-15);
        }
    }
}
