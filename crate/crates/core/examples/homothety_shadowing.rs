//! Shadowing an escaping pseudo-orbit of x ↦ 2x and comparing with the tail bound.

use shadowlab::cplus::DeltaSynthesis;
use shadowlab::pseudo_orbit::{OrbitKind, PseudoOrbitGenerator};
use shadowlab::shadowing::{homothety_shadow_point, shadow_report, tail_bound_log2};
use shadowlab::{CPlusFn, MapSpec, Metric, Window};

fn main() -> shadowlab::Result<()> {
    let eps = CPlusFn::constant(1.0)?;
    let synth = DeltaSynthesis::default().run(&eps)?;
    let map = MapSpec::homothety(2, 2.0)?;
    let gen = PseudoOrbitGenerator::new(map.clone(), synth.delta.clone(), Metric::Sup, Window::new(-4, 12)?)?;
    let orbit = gen.generate(OrbitKind::Escaping, 3)?;

    let (anchor, w) = homothety_shadow_point(&orbit)?;
    let report = shadow_report(&orbit, anchor, &w, &map, &eps, Metric::Sup)?;
    let tail = tail_bound_log2(&orbit, &synth.delta, 2.0)?;
    println!("shadow point at index {anchor}: {w}, shadowed: {}", report.pass);
    for (e, t) in report.entries.iter().zip(&tail) {
        println!("n = {:>3}  log2 d = {:>9.3}  log2 bound = {:>9.3}", e.n, e.distance.log2(), t);
    }
    Ok(())
}
