//! End-to-end acceptance checks. Every library result is compared against a
//! closed-form oracle written here, independent of the library internals.
//! Prints one PASS/FAIL line per criterion; fails if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shadowlab::cplus::{
    decaying_epsilon, epsilon_from_neighborhood, saddle_adversarial_epsilon, DeltaSynthesis, NeighborhoodSpec,
    RadialTable, RegularGrid, SampleSet,
};
use shadowlab::maps::AffineChange;
use shadowlab::pseudo_orbit::{max_splice_jump, OrbitKind, PseudoOrbitGenerator};
use shadowlab::scenario::{builtin, list_scenarios, run_scenario};
use shadowlab::shadowing::{
    box_feasibility, forward_to_full_shadow, homothety_shadow_point, sampled_search, shadow_report,
    FeasibilityOutcome,
};
use shadowlab::{
    conjugate_map, power_map, CPlusFn, Diffeo, Expr, Interval, MapSpec, Metric, Point, PseudoOrbitSpec,
    RealizedOrbit, Verdict, Window,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: shadowlab::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("library error: {e}"))
}

fn sup(p: [f64; 2]) -> f64 {
    p[0].abs().max(p[1].abs())
}

fn sup_dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).abs().max((p[1] - q[1]).abs())
}

/// `d < 2^log2_eps`, with the comparison done in log2 so tiny ε stay exact.
fn below(d: f64, log2_eps: f64) -> bool {
    d == 0.0 || d.log2() < log2_eps
}

fn xy(p: &Point) -> [f64; 2] {
    [p.coords()[0], p.coords()[1]]
}

/// `0, 1, −1, 2, −2, …` up to `limit`.
fn order(limit: i64) -> Vec<i64> {
    let mut v = vec![0];
    for k in 1..=limit {
        v.push(k);
        v.push(-k);
    }
    v
}

/// Grid scan `lo + i·step` over a box; returns the first point passing
/// `accept`, in row-major order.
fn grid_scan(bx: [(f64, f64); 2], step: f64, accept: impl Fn([f64; 2]) -> bool) -> Option<[f64; 2]> {
    let count = |(lo, hi): (f64, f64)| ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let (nx, ny) = (count(bx[0]), count(bx[1]));
    for i in 0..nx {
        let x = bx[0].0 + step * i as f64;
        for j in 0..ny {
            let y = bx[1].0 + step * j as f64;
            if accept([x, y]) {
                return Some([x, y]);
            }
        }
    }
    None
}

// ---------------------------------------------------------------- 1

/// Random δ shapes as closed forms and as library expressions.
struct RandomDelta {
    kind: u32,
    c: f64,
    a: f64,
}

impl RandomDelta {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        RandomDelta {
            kind: rng.gen_range(0..3),
            c: rng.gen_range(0.01..=1.0),
            a: rng.gen_range(0.1..=2.0),
        }
    }

    fn eval(&self, p: [f64; 2]) -> f64 {
        let r = sup(p);
        match self.kind {
            0 => self.c,
            1 => self.c * (-(self.a * r)).exp2(),
            _ => self.c / (1.0 + self.a * r),
        }
    }

    fn cplus(&self) -> CPlusFn {
        let norm = || Expr::norm(Metric::Sup);
        CPlusFn::new(match self.kind {
            0 => Expr::Const(self.c),
            1 => Expr::Const(self.c) * (Expr::Const(self.a) * norm()).exp2_neg(),
            _ => Expr::Const(self.c) * (Expr::Const(1.0) + Expr::Const(self.a) * norm()).recip(),
        })
    }
}

/// Saddle splice constraint at index `n` for candidate `y`.
fn saddle_ok(y: [f64; 2], q: f64, n: i64) -> bool {
    let s = (n as f64).exp2();
    let fy = [s * y[0], y[1] / s];
    let x = if n >= 0 { [s, 0.0] } else { [s, q / s] };
    below(sup_dist(fy, x), -sup(x))
}

fn criterion_1() -> Outcome {
    let eps = saddle_adversarial_epsilon();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let window = Window::symmetric(32).unwrap();
    let bx = [Interval::new(0.0, 2.0), Interval::new(-1.0, 1.0)];
    let mut lib_time = Duration::ZERO;
    let mut notes = Vec::new();
    for case in 0..5 {
        let d = RandomDelta::draw(&mut rng);
        let probe = PseudoOrbitSpec::spliced(MapSpec::saddle(), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0), 0, window);
        let t = Instant::now();
        let q = lib(max_splice_jump(&probe, &d.cplus(), Metric::Sup))?;
        let spec = PseudoOrbitSpec::spliced(MapSpec::saddle(), Point::xy(1.0, 0.0), Point::xy(1.0, q), 0, window);
        let cert = lib(box_feasibility(&spec, &eps, 32, 1e-9))?;
        let search = lib(sampled_search(&spec, &eps, Metric::Sup, &bx, 1e-3))?;
        lib_time += t.elapsed();

        // The only nontrivial jump is |(1, q) − (1, 0)|∞ = q against δ((1, q)).
        let (mut lo, mut hi) = (0.0, 1.0);
        while q_admissible(&d, hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_admissible(&d, mid) {
                lo = mid
            } else {
                hi = mid
            }
        }
        ensure(q_admissible(&d, q), || format!("case {case}: q = {q} is not admissible"))?;
        ensure((q / 0.99 - lo).abs() <= 1e-9 * lo, || {
            format!("case {case}: q = {q} is not 0.99 × the maximal jump {lo}")
        })?;
        let FeasibilityOutcome::Empty { emptiness_window, .. } = cert.outcome else {
            return Err(format!("case {case}: certificate is not Empty: {:?}", cert.outcome));
        };
        ensure(emptiness_window <= 32, || format!("emptiness window {emptiness_window}"))?;
        ensure(search.found.is_none(), || format!("library oracle found {:?}", search.found))?;
        let found = grid_scan([(0.0, 2.0), (-1.0, 1.0)], 1e-3, |y| {
            order(32).into_iter().all(|n| saddle_ok(y, q, n))
        });
        ensure(found.is_none(), || format!("case {case}: test oracle found {found:?}"))?;
        notes.push(format!("q={q:.4}/empty@{emptiness_window}"));
    }
    ensure(lib_time < Duration::from_secs(1), || format!("runtime {lib_time:?}"))?;
    Ok(format!("{} in {:.2}s", notes.join(", "), lib_time.as_secs_f64()))
}

fn q_admissible(d: &RandomDelta, q: f64) -> bool {
    q < d.eval([1.0, q])
}

// ---------------------------------------------------------------- 2

fn translation_ok(y: [f64; 2], n: i64) -> bool {
    let fy = [y[0] + n as f64, y[1]];
    let x = if n >= 0 { [n as f64, 0.0] } else { [n as f64, 0.5] };
    sup_dist(fy, x) < (1.0f64).min(1.0 / (1.0 + sup(x)))
}

fn criterion_2() -> Outcome {
    let eps = lib(decaying_epsilon(1.0))?;
    let spec = PseudoOrbitSpec::spliced(
        MapSpec::translation(2),
        Point::xy(0.0, 0.0),
        Point::xy(0.0, 0.5),
        0,
        Window::symmetric(64).unwrap(),
    );
    let bx = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
    let t = Instant::now();
    let cert = lib(box_feasibility(&spec, &eps, 64, 1e-9))?;
    let search = lib(sampled_search(&spec, &eps, Metric::Sup, &bx, 1e-3))?;
    let elapsed = t.elapsed();
    let FeasibilityOutcome::Empty { emptiness_window, .. } = cert.outcome else {
        return Err(format!("certificate is not Empty: {:?}", cert.outcome));
    };
    ensure(emptiness_window <= 64, || format!("emptiness window {emptiness_window}"))?;
    ensure(search.found.is_none(), || format!("library oracle found {:?}", search.found))?;
    let found = grid_scan([(-1.0, 1.0), (-1.0, 1.0)], 1e-3, |y| {
        order(64).into_iter().all(|n| translation_ok(y, n))
    });
    ensure(found.is_none(), || format!("test oracle found {found:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"))?;
    Ok(format!("empty@{emptiness_window}, oracles agree, {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 3, 6

/// Closed-form `log2 ε` for the three test choices, plus `min ε` on the
/// closed ball of radius `ε(0)`.
#[derive(Clone, Copy)]
enum Eps {
    One,
    Exp,
    Table,
}

const TABLE: [(f64, f64); 4] = [(0.0, 0.5), (1.0, 1.0), (4.0, 0.25), (16.0, 0.01)];

impl Eps {
    fn log2(self, p: [f64; 2]) -> f64 {
        let r = sup(p);
        match self {
            Eps::One => 0.0,
            Eps::Exp => -r,
            Eps::Table => {
                let v = if r >= TABLE[3].0 {
                    TABLE[3].1
                } else {
                    let i = TABLE.windows(2).position(|w| r <= w[1].0).unwrap();
                    let ((r0, v0), (r1, v1)) = (TABLE[i], TABLE[i + 1]);
                    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                };
                v.log2()
            }
        }
    }

    fn ball_min(self) -> f64 {
        match self {
            Eps::One => 1.0,
            Eps::Exp => 0.5,
            Eps::Table => 0.5,
        }
    }

    fn cplus(self) -> CPlusFn {
        match self {
            Eps::One => CPlusFn::constant(1.0).unwrap(),
            Eps::Exp => saddle_adversarial_epsilon(),
            Eps::Table => CPlusFn::radial_table(TABLE.to_vec()).unwrap(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Eps::One => "1",
            Eps::Exp => "2^-|x|",
            Eps::Table => "table",
        }
    }
}

fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// Checks the δ conditions at random points; returns the number of samples.
fn check_delta(delta: &CPlusFn, eps: Eps, k: f64, samples: usize, seed: u64) -> Result<usize, String> {
    let r0 = eps.log2([0.0, 0.0]).exp2();
    let m = eps.ball_min();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let r: f64 = if rng.gen_bool(0.5) {
            rng.gen_range(0.0..3.0 * r0.max(1.0))
        } else {
            rng.gen_range(-4.0f64..20.0).exp2()
        };
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (c, s) = (t.cos(), t.sin());
        let scale = r / c.abs().max(s.abs());
        [c * scale, s * scale]
    };
    let ld = |p: [f64; 2]| delta.eval_log2(&Point::xy(p[0], p[1])).map_err(|e| e.to_string());
    for i in 0..samples {
        let p = draw(&mut rng);
        let d = ld(p)?;
        let r = sup(p);
        ensure(d < eps.log2(p), || format!("δ ≥ ε at {p:?}"))?;
        ensure(d < m.log2(), || format!("δ ≥ m at {p:?}"))?;
        if r > r0 {
            ensure(d < (r * (k - 1.0) / (2.0 * k)).log2(), || format!("δ ≥ |x|(k−1)/2k at {p:?}"))?;
        }
        if i % 2 == 0 {
            let q = draw(&mut rng);
            let (rp, rq) = (r, sup(q));
            if rp != rq {
                let (near, far) = if rp < rq { (p, q) } else { (q, p) };
                ensure(ld(near)? > ld(far)?, || format!("δ not decreasing between {near:?} and {far:?}"))?;
            }
        }
    }
    Ok(samples)
}

enum Class {
    Bounded,
    Escaping,
    Unclassified,
}

fn classify(points: &[[f64; 2]], r0: f64, ratio: f64) -> Class {
    let norms: Vec<f64> = points.iter().map(|p| sup(*p)).collect();
    match norms.iter().position(|r| *r > r0) {
        None => Class::Bounded,
        Some(i) if norms[i..].windows(2).all(|w| w[1] > ratio * w[0]) => Class::Escaping,
        Some(_) => Class::Unclassified,
    }
}

#[derive(Default)]
struct Tally {
    bounded: usize,
    escaping: usize,
    checked_points: usize,
}

/// Shadows each pseudo-orbit of `x ↦ k·x` (or of `(x, y) ↦ (kx, −ky)` when
/// `reflect`) with closed forms: the origin for bounded ones and
/// `x_last·k^{−L}` (exact for powers of two) for escaping ones.
fn shadow_homothety_orbits(
    map: &MapSpec,
    k: f64,
    reflect: bool,
    eps: Eps,
    orbits: usize,
    window: Window,
    seed: u64,
) -> Result<Tally, String> {
    let synth = lib(DeltaSynthesis {
        factor: k,
        ..DeltaSynthesis::default()
    }
    .run(&eps.cplus()))?;
    check_delta(&synth.delta, eps, k, 100_000, seed)?;
    let gen = lib(PseudoOrbitGenerator::new(map.clone(), synth.delta.clone(), Metric::Sup, window))?;
    let mut all = lib(gen.batch(OrbitKind::Bounded, orbits / 2, seed))?;
    all.extend(lib(gen.batch(OrbitKind::Escaping, orbits - orbits / 2, seed + orbits as u64))?);
    let r0 = eps.log2([0.0, 0.0]).exp2();
    let step = |p: [f64; 2], n: i64| {
        let s = k.powi(n as i32);
        let sign = if reflect && n.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        [s * p[0], sign * s * p[1]]
    };
    let mut tally = Tally::default();
    for (o, orbit) in all.iter().enumerate() {
        let pts: Vec<[f64; 2]> = orbit.points.iter().map(xy).collect();
        for (i, w) in pts.windows(2).enumerate() {
            let image = step(w[0], 1);
            let jump = sup_dist(image, w[1]);
            let bound = lib(synth.delta.eval_log2(&Point::xy(image[0], image[1])))?;
            ensure(below(jump, bound), || format!("orbit {o}: jump {i} is not below δ"))?;
        }
        match classify(&pts, r0, (k + 1.0) / 2.0) {
            Class::Unclassified => return Err(format!("{} orbit {o} unclassified", eps.name())),
            Class::Bounded => {
                tally.bounded += 1;
                for (i, x) in pts.iter().enumerate() {
                    ensure(below(sup(*x), eps.log2(*x)), || format!("orbit {o}: origin fails at {i}"))?;
                }
            }
            Class::Escaping => {
                tally.escaping += 1;
                let l = pts.len() as i64 - 1;
                let w = step(pts[pts.len() - 1], -l);
                // Tail bound Σ_{i>l} δ(f(x_{i−1}))·k^{l−i}, accumulated backwards.
                let mut tail = vec![f64::NEG_INFINITY; pts.len()];
                for i in (0..pts.len() - 1).rev() {
                    let image = step(pts[i], 1);
                    let d = lib(synth.delta.eval_log2(&Point::xy(image[0], image[1])))?;
                    tail[i] = log2_add(tail[i + 1], d) - k.log2();
                }
                for (i, x) in pts.iter().enumerate() {
                    let d = sup_dist(step(w, i as i64), *x);
                    ensure(below(d, eps.log2(*x)), || format!("orbit {o}: series point fails at {i}"))?;
                    ensure(d == 0.0 || d.log2() <= tail[i] + 1e-9, || {
                        format!("orbit {o}: distance exceeds the tail bound at {i}")
                    })?;
                }
                let (_, lw) = lib(homothety_shadow_point(orbit))?;
                ensure(xy(&lw) == w, || format!("orbit {o}: library shadow point {lw} differs"))?;
            }
        }
        tally.checked_points += pts.len();
    }
    Ok(tally)
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let map = MapSpec::homothety(2, 2.0).unwrap();
    let window = Window::new(-20, 40).unwrap();
    let mut notes = Vec::new();
    for (i, eps) in [Eps::One, Eps::Exp, Eps::Table].into_iter().enumerate() {
        let tally = shadow_homothety_orbits(&map, 2.0, false, eps, 1000, window, 100 + i as u64)?;
        ensure(tally.bounded + tally.escaping == 1000, || "orbit count".into())?;
        notes.push(format!("ε={}: {}B/{}E", eps.name(), tally.bounded, tally.escaping));
    }
    let report = lib(run_scenario(&lib(builtin("homothety-tsp"))?, tempfile::tempdir().unwrap().path()))?;
    ensure(report.verdict == Verdict::MatchesPaper, || format!("scenario verdict {:?}", report.verdict))?;
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("runtime {elapsed:?}"))?;
    Ok(format!("{}; {:.1}s", notes.join(", "), elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let eps = CPlusFn::constant(1.0).unwrap();
    let map = MapSpec::homothety(2, 2.0).unwrap();
    let synth = lib(DeltaSynthesis::default().run(&eps))?;
    let gen = lib(PseudoOrbitGenerator::new(map, synth.delta, Metric::Sup, Window::new(-20, 40).unwrap()))?;
    let orbits = lib(gen.batch(OrbitKind::Escaping, 100, 4040))?;
    let mut worst = 0.0f64;
    for (o, orbit) in orbits.iter().enumerate() {
        let y = lib(forward_to_full_shadow(
            orbit,
            &eps,
            Metric::Sup,
            |z| Ok(homothety_shadow_point(z)?.1),
            30,
            1e-9,
        ))
        .map_err(|e| format!("orbit {o}: {e}"))?;
        // Direct shadow point of the window [−30, n_max] at index 0.
        let n_max = orbit.window.n_max;
        let last = xy(&orbit.points[orbit.points.len() - 1]);
        let direct = [last[0] / (n_max as f64).exp2(), last[1] / (n_max as f64).exp2()];
        let d = sup_dist(xy(&y), direct);
        worst = worst.max(d);
        ensure(d <= 1e-8, || format!("orbit {o}: limit {y} is {d:e} from the direct point"))?;
    }
    Ok(format!("100/100 converged, max distance {worst:e}"))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let grid = RegularGrid::square(-10.0, 10.0, 201);
    let spike = CPlusFn::new(Expr::Radial {
        metric: Metric::Sup,
        table: RadialTable::new(vec![(0.0, 0.1), (0.5, 1.0)]).unwrap(),
    });
    let bump = CPlusFn::new(Expr::Const(0.02) + (Expr::Const(2.0) * Expr::norm(Metric::Euclidean)).exp2_neg());
    type ClosedForm = Box<dyn Fn([f64; 2]) -> f64>;
    let closed: [(&str, CPlusFn, ClosedForm); 3] = [
        ("const", CPlusFn::constant(0.7).unwrap(), Box::new(|_| 0.7)),
        ("spike", spike, Box::new(|p| (0.1 + 1.8 * sup(p)).min(1.0))),
        ("bump", bump, Box::new(|p: [f64; 2]| 0.02 + (-2.0 * p[0].hypot(p[1])).exp2())),
    ];
    let idx = |i: usize, j: usize| j * 201 + i;
    let site = |i: usize, j: usize| [-10.0 + 20.0 * i as f64 / 200.0, -10.0 + 20.0 * j as f64 / 200.0];
    let mut notes = Vec::new();
    for (name, rho_fn, rho) in closed.iter() {
        let tab = lib(epsilon_from_neighborhood(
            &NeighborhoodSpec::new(rho_fn.clone()),
            &SampleSet::Grid(grid),
            Metric::Sup,
        ))?;
        let v = &tab.values;
        let mut edges = 0;
        for j in 0..201 {
            for i in 0..201 {
                let a = idx(i, j);
                // Exact against the tabulated ρ, up to rounding against the closed form.
                ensure(v[a] <= tab.rho[a], || format!("{name}: ε̂ > ρ at {:?}", site(i, j)))?;
                let r = rho(site(i, j));
                ensure((tab.rho[a] - r).abs() <= 1e-14 * r, || format!("{name}: ρ {} vs {r}", tab.rho[a]))?;
                for (di, dj) in [(1i64, 0i64), (0, 1), (1, 1), (-1, 1)] {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if !(0..201).contains(&ii) || !(0..201).contains(&jj) {
                        continue;
                    }
                    let b = idx(ii as usize, jj as usize);
                    let d = sup_dist(site(i, j), site(ii as usize, jj as usize));
                    ensure((v[a] - v[b]).abs() <= d, || format!("{name}: not 1-Lipschitz at {:?}", site(i, j)))?;
                    edges += 1;
                }
                // Every grid y with d(x, y) < ε̂(x) lies in E[x] = B(x, ρ(x)).
                let reach = (v[a] / 0.1).ceil() as i64 + 1;
                for jj in (j as i64 - reach).max(0)..=(j as i64 + reach).min(200) {
                    for ii in (i as i64 - reach).max(0)..=(i as i64 + reach).min(200) {
                        let d = sup_dist(site(i, j), site(ii as usize, jj as usize));
                        if d < v[a] {
                            ensure(d < tab.rho[a], || format!("{name}: U ⊄ E at {:?}", site(i, j)))?;
                        }
                    }
                }
            }
        }
        // Brute-force infimal convolution on every 97th site.
        for a in (0..v.len()).step_by(97) {
            let x = site(a % 201, a / 201);
            let mut best = f64::INFINITY;
            for b in 0..v.len() {
                let y = site(b % 201, b / 201);
                best = best.min(rho(y) + sup_dist(x, y));
            }
            ensure((v[a] - best).abs() <= 1e-12 * best, || format!("{name}: ε̂ {} vs {best} at {x:?}", v[a]))?;
        }
        if *name == "const" {
            ensure(v.iter().all(|e| *e == 0.7), || "constant ρ not reproduced exactly".into())?;
        }
        notes.push(format!("{name}: {edges} edges ok"));
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let base = MapSpec::homothety(2, 2.0).unwrap();
    let eps = CPlusFn::constant(1.0).unwrap();
    let synth = lib(DeltaSynthesis::default().run(&eps))?;
    let window = Window::new(-10, 20).unwrap();
    let gen = lib(PseudoOrbitGenerator::new(base.clone(), synth.delta.clone(), Metric::Sup, window))?;
    let mut orbits = lib(gen.batch(OrbitKind::Bounded, 50, 66))?;
    orbits.extend(lib(gen.batch(OrbitKind::Escaping, 50, 166))?);
    let changes = [
        ("affine", Diffeo::Affine(AffineChange::new(vec![vec![1.0, 0.5], vec![0.0, 1.0]], vec![0.3, -0.2]).unwrap())),
        ("radial", Diffeo::radial_quadratic(0.25).unwrap()),
    ];
    let mut passed = 0;
    for (name, change) in &changes {
        let g = lib(conjugate_map(base.clone(), change.clone()))?;
        let eps_t = CPlusFn::new(Expr::Transport {
            change: change.clone(),
            base: Box::new(eps.expr().clone()),
        });
        for (o, orbit) in orbits.iter().enumerate() {
            let pts: Vec<[f64; 2]> = orbit.points.iter().map(xy).collect();
            let escaping = pts.iter().any(|p| sup(*p) > synth.r0);
            let (anchor, w) = if escaping {
                let l = pts.len() as i64 - 1;
                let last = pts[pts.len() - 1];
                (orbit.window.n_min, Point::xy(last[0] / (l as f64).exp2(), last[1] / (l as f64).exp2()))
            } else {
                (0, Point::xy(0.0, 0.0))
            };
            let base_report = lib(shadow_report(orbit, anchor, &w, &base, &eps, Metric::Sup))?;
            ensure(base_report.pass, || format!("orbit {o} not shadowed in base coordinates"))?;
            let moved = RealizedOrbit {
                window: orbit.window,
                points: lib(orbit.points.iter().map(|p| change.apply(p)).collect())?,
                map: g.clone(),
            };
            let report = lib(shadow_report(&moved, anchor, &lib(change.apply(&w))?, &g, &eps_t, Metric::Sup))?;
            ensure(report.pass, || format!("{name}: transported orbit {o} not shadowed"))?;
            // Transported distances computed without the conjugated map.
            for e in &report.entries {
                let fw = lib(base.iterate(&w, e.n - anchor))?;
                let d = sup_dist(xy(&lib(change.apply(&fw))?), xy(&moved.points[(e.n - orbit.window.n_min) as usize]));
                // c⁻¹(c(w)) rounding grows like 2^|n|; compare at the scale of x_n.
                let scale = 1.0 + sup(xy(&moved.points[(e.n - orbit.window.n_min) as usize]));
                ensure((d - e.distance).abs() <= 1e-9 * scale, || {
                    format!("{name}: orbit {o} distance {} vs {d} at {}", e.distance, e.n)
                })?;
            }
            passed += 1;
        }
    }
    let map4 = lib(power_map(base, 2))?;
    ensure(map4.conformal_factor() == Some(4.0), || "power map is not a factor-4 homothety".into())?;
    let mut notes = Vec::new();
    for (i, eps) in [Eps::One, Eps::Exp, Eps::Table].into_iter().enumerate() {
        let tally = shadow_homothety_orbits(&map4, 4.0, false, eps, 1000, Window::new(-20, 40).unwrap(), 600 + i as u64)?;
        notes.push(format!("{}B/{}E", tally.bounded, tally.escaping));
    }
    let rev = MapSpec::Power {
        inner: Box::new(lib(MapSpec::reverse_homothety(0.5))?),
        k: -1,
    };
    let tally = shadow_homothety_orbits(&rev, 2.0, true, Eps::Exp, 200, Window::new(-20, 40).unwrap(), 700)?;
    Ok(format!(
        "{passed} transported reports pass; factor 4: {}; reverse homothety: {}B/{}E",
        notes.join(" "),
        tally.bounded,
        tally.escaping
    ))
}

// ---------------------------------------------------------------- 7

fn warp(p: [f64; 2]) -> [f64; 2] {
    let s = 1.0 + p[0].hypot(p[1]);
    [s * p[0], s * p[1]]
}

fn criterion_7() -> Outcome {
    let q = 0.01 - 1e-9;
    let ok = |y: [f64; 2], metric: Metric| {
        order(24).into_iter().all(|n| {
            let s = (n as f64).exp2();
            let fy = [s * y[0], y[1] / s];
            let x = if n >= 0 { [s, 0.0] } else { [s, q / s] };
            let d = match metric {
                Metric::PolarWarp => {
                    let (a, b) = (warp(fy), warp(x));
                    (a[0] - b[0]).hypot(a[1] - b[1])
                }
                _ => sup_dist(fy, x),
            };
            d < 1.0
        })
    };
    let bx = [(0.0, 4.0), (-2.0, 2.0)];
    let warped = grid_scan(bx, 5e-3, |y| ok(y, Metric::PolarWarp));
    let flat = grid_scan(bx, 5e-3, |y| ok(y, Metric::Sup));
    ensure(warped.is_none(), || format!("polar warp admits {warped:?}"))?;
    let flat = flat.ok_or("sup norm admits no grid point")?;

    let spec = PseudoOrbitSpec::spliced(MapSpec::saddle(), Point::xy(1.0, 0.0), Point::xy(1.0, q), 0, Window::symmetric(24).unwrap());
    let eps = CPlusFn::constant(1.0).unwrap();
    let region = [Interval::new(0.0, 4.0), Interval::new(-2.0, 2.0)];
    let lw = lib(sampled_search(&spec, &eps, Metric::PolarWarp, &region, 5e-3))?;
    let ls = lib(sampled_search(&spec, &eps, Metric::Sup, &region, 5e-3))?;
    ensure(lw.found.is_none(), || format!("library warp search found {:?}", lw.found))?;
    ensure(ls.found.is_some(), || "library sup search found nothing".into())?;
    Ok(format!("warp: none; sup: ({}, {})", flat[0], flat[1]))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut files = 0;
    for s in list_scenarios() {
        let cfg = lib(builtin(s.name))?;
        let ra = lib(run_scenario(&cfg, a.path()))?;
        let rb = lib(run_scenario(&cfg, b.path()))?;
        for name in &ra.artifacts {
            let x = std::fs::read(ra.output_dir.join(name)).map_err(|e| e.to_string())?;
            let y = std::fs::read(rb.output_dir.join(name)).map_err(|e| e.to_string())?;
            ensure(x == y, || format!("{}/{name} differs between runs", s.name))?;
            files += 1;
        }
        ensure(ra.artifacts == rb.artifacts, || format!("{}: artifact lists differ", s.name))?;
    }
    Ok(format!("{files} artifacts byte-identical across reruns"))
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("saddle counterexample", criterion_1),
        ("translation counterexample", criterion_2),
        ("homothety shadowing", criterion_3),
        ("forward-to-full limit", criterion_4),
        ("neighborhood equivalence", criterion_5),
        ("conjugacy and power invariance", criterion_6),
        ("metric warp", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {} [{name}]: PASS ({msg})", i + 1),
            Err(msg) => {
                println!("criterion {} [{name}]: FAIL ({msg})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
