//! δ for homotheties `x ↦ kx`, |k| > 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Ordering;

use super::{CPlusFn, Expr, Magnitude, RadialTable};
use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};

/// Parameters of the δ construction.
#[derive(Clone, Debug)]
pub struct DeltaSynthesis {
    pub factor: f64,
    pub metric: Metric,
    pub dim: usize,
    pub sphere_samples: usize,
    /// Last tabulated radius; beyond it the table continues with its final
    /// log-slope.
    pub rho_max: f64,
}

impl Default for DeltaSynthesis {
    fn default() -> Self {
        DeltaSynthesis {
            factor: 2.0,
            metric: Metric::Sup,
            dim: 2,
            sphere_samples: 64,
            rho_max: 65536.0,
        }
    }
}

/// A synthesized δ together with the constants it was built from.
#[derive(Clone, Debug)]
pub struct SynthesizedDelta {
    pub delta: CPlusFn,
    /// `ε(0)`.
    pub r0: f64,
    /// `0.9 · min ε` over the closed ball of radius `r0`.
    pub m: f64,
    pub factor: f64,
    pub metric: Metric,
    pub dim: usize,
    pub rho_max: f64,
}

/// Violation counts from [`SynthesizedDelta::verify`]; all zero means pass.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct ConditionCheck {
    pub samples: usize,
    /// `δ(x) < ε(x)` failed.
    pub below_epsilon: usize,
    /// `δ(x) < m` on the ball, `δ(x) < ‖x‖(k−1)/(2k)` outside it.
    pub ball_split: usize,
    /// `δ(x) < m` failed.
    pub below_m: usize,
    /// `‖x‖ < ‖x′‖` but `δ(x) ≤ δ(x′)`.
    pub strict_decrease: usize,
}

impl ConditionCheck {
    pub fn passed(&self) -> bool {
        self.below_epsilon + self.ball_split + self.below_m + self.strict_decrease == 0
    }
}

/// Factor-2 synthesis with the default radial range.
pub fn synthesize_delta_homothety(eps: &CPlusFn, metric: Metric, sphere_samples: usize) -> Result<SynthesizedDelta> {
    DeltaSynthesis {
        metric,
        sphere_samples,
        ..DeltaSynthesis::default()
    }
    .run(eps)
}

impl DeltaSynthesis {
    /// `‖x‖(k−1)/(2k)`, which is `‖x‖/4` for `k = 2`.
    fn outer_bound(&self, s: f64) -> f64 {
        let k = self.factor.abs();
        s * (k - 1.0) / (2.0 * k)
    }

    fn kappa(&self) -> f64 {
        (self.factor.abs() - 1.0).min(1.0)
    }

    fn directions(&self) -> Vec<Point> {
        if self.dim == 2 {
            let n = self.sphere_samples;
            return (0..n)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n as f64;
                    Point::xy(t.cos(), t.sin())
                })
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut out = Vec::with_capacity(self.sphere_samples + 2 * self.dim);
        for j in 0..self.dim {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; self.dim];
                v[j] = s;
                out.push(Point::from_vec_unchecked(v));
            }
        }
        while out.len() < self.sphere_samples.max(2 * self.dim) {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().any(|c| c.abs() > 1e-3) {
                out.push(Point::from_vec_unchecked(v));
            }
        }
        out
    }

    fn radii(&self, r0: f64) -> Vec<f64> {
        let mut rs = Vec::new();
        let fine_end = self.rho_max.min(64.0);
        let mut i = 0u32;
        loop {
            let r = i as f64 / 8.0;
            if r > fine_end {
                break;
            }
            rs.push(r);
            i += 1;
        }
        let mut r = *rs.last().expect("radius 0 is always present");
        while r < self.rho_max {
            r = (r * 1.01).min(self.rho_max);
            rs.push(r);
        }
        if let Err(pos) = rs.binary_search_by(|x| x.total_cmp(&r0)) {
            rs.insert(pos, r0);
        }
        rs
    }

    /// `min` of `log2 ε` over the sampled sphere of radius `s`.
    fn sphere_min_log2(&self, eps: &CPlusFn, dirs: &[Point], s: f64) -> Result<f64> {
        let mut best = f64::INFINITY;
        for u in dirs {
            let t = self.metric.scale_to_norm(u, s)?;
            let p = u.scale(t);
            best = best.min(eps.eval_log2(&p)?);
        }
        Ok(best)
    }

    pub fn run(&self, eps: &CPlusFn) -> Result<SynthesizedDelta> {
        if self.sphere_samples < 4 {
            return Err(Error::invalid(format!(
                "sphere_samples must be at least 4, got {}",
                self.sphere_samples
            )));
        }
        if !(self.factor.abs() > 1.0 && self.factor.is_finite()) {
            return Err(Error::invalid(format!("homothety factor must satisfy |k| > 1, got {}", self.factor)));
        }
        if !(self.rho_max > 1.0 && self.rho_max.is_finite()) {
            return Err(Error::invalid("rho_max must be a finite radius above 1"));
        }
        if self.dim == 0 || (self.metric == Metric::PolarWarp && self.dim != 2) {
            return Err(Error::invalid("dimension incompatible with metric"));
        }
        let r0 = eps.eval(&Point::origin(self.dim))?;
        let dirs = self.directions();

        let ball_min = (0..=64)
            .into_par_iter()
            .map(|i| self.sphere_min_log2(eps, &dirs, r0 * i as f64 / 64.0))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let m_log2 = ball_min + 0.9f64.log2();
        let m = m_log2.exp2();
        if !(m >= f64::MIN_POSITIVE) {
            return Err(Error::contract("ε is not representable on the ball B̄(0, r0)"));
        }

        let half_kappa = 0.5 * self.kappa();
        let radii = self.radii(r0);
        let g = radii
            .par_iter()
            .map(|&s| {
                let mut v = self.sphere_min_log2(eps, &dirs, s)?.min(m_log2);
                if s > r0 {
                    v = v.min(self.outer_bound(s).log2());
                }
                if s >= r0 {
                    // δ = ½κG/(1+s) must already sit below the outer bound at
                    // the boundary sphere itself.
                    v = v.min((0.99 * self.outer_bound(s) * (1.0 + s) / half_kappa).log2());
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut knots = Vec::with_capacity(radii.len());
        let mut running = f64::INFINITY;
        for (s, v) in radii.iter().zip(g) {
            running = running.min(v);
            knots.push((*s, running));
        }
        let delta = CPlusFn::new(
            Expr::Const(half_kappa)
                * Expr::RadialLog2 {
                    metric: self.metric,
                    table: RadialTable::new(knots)?,
                }
                * (Expr::Const(1.0) + Expr::Norm(self.metric)).recip(),
        );
        Ok(SynthesizedDelta {
            delta,
            r0,
            m,
            factor: self.factor,
            metric: self.metric,
            dim: self.dim,
            rho_max: self.rho_max,
        })
    }
}

fn less(a: &Magnitude, b: &Magnitude) -> bool {
    a.cmp_log2(b) == Ordering::Less
}

impl SynthesizedDelta {
    fn outer_bound(&self, s: f64) -> f64 {
        let k = self.factor.abs();
        s * (k - 1.0) / (2.0 * k)
    }

    /// Random point: half near the ball, half log-uniform out past `rho_max`.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<(Point, f64)> {
        let s = if rng.gen_bool(0.5) {
            rng.gen_range(0.0..3.0 * self.r0.max(1.0))
        } else {
            rng.gen_range(-4.0..(4.0 * self.rho_max).log2()).exp2()
        };
        let u = loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().any(|c| c.abs() > 1e-6) {
                break Point::from_vec_unchecked(v);
            }
        };
        let p = u.scale(self.metric.scale_to_norm(&u, s)?);
        let s = self.metric.norm(&p)?;
        Ok((p, s))
    }

    /// Re-checks the four conditions at `samples` independent random points
    /// (and as many random pairs for strict decrease), with no tolerance.
    pub fn verify(&self, eps: &CPlusFn, samples: usize, seed: u64) -> Result<ConditionCheck> {
        let m = Magnitude::from_value(self.m);
        let per = (0..samples)
            .into_par_iter()
            .map(|i| -> Result<[usize; 4]> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let (p, s) = self.sample(&mut rng)?;
                let d = self.delta.magnitude(&p)?;
                let e = eps.magnitude(&p)?;
                let c1 = !less(&d, &e);
                let c2 = if s <= self.r0 {
                    !less(&d, &m)
                } else {
                    !less(&d, &Magnitude::from_value(self.outer_bound(s)))
                };
                let c5 = !less(&d, &m);
                let (q, t) = self.sample(&mut rng)?;
                let dq = self.delta.magnitude(&q)?;
                let c6 = match s.total_cmp(&t) {
                    Ordering::Less => !less(&dq, &d),
                    Ordering::Greater => !less(&d, &dq),
                    Ordering::Equal => false,
                };
                Ok([c1 as usize, c2 as usize, c5 as usize, c6 as usize])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = ConditionCheck {
            samples,
            ..ConditionCheck::default()
        };
        for v in per {
            out.below_epsilon += v[0];
            out.ball_split += v[1];
            out.below_m += v[2];
            out.strict_decrease += v[3];
        }
        Ok(out)
    }
}
