//! Full shadow point as the limit of forward shadows of shifted pseudo-orbits.

use shadowlab::cplus::DeltaSynthesis;
use shadowlab::pseudo_orbit::{OrbitKind, PseudoOrbitGenerator};
use shadowlab::shadowing::{forward_to_full_shadow, homothety_shadow_point, is_shadowed_by};
use shadowlab::{CPlusFn, MapSpec, Metric, Window};

fn main() -> shadowlab::Result<()> {
    let eps = CPlusFn::constant(1.0)?;
    let synth = DeltaSynthesis::default().run(&eps)?;
    let map = MapSpec::homothety(2, 2.0)?;
    let gen = PseudoOrbitGenerator::new(map.clone(), synth.delta, Metric::Sup, Window::new(-10, 20)?)?;
    let orbit = gen.generate(OrbitKind::Escaping, 11)?;

    let y = forward_to_full_shadow(&orbit, &eps, Metric::Sup, |z| Ok(homothety_shadow_point(z)?.1), 30, 1e-9)?;
    let report = is_shadowed_by(&orbit, &y, &map, &eps, Metric::Sup)?;
    println!("limit point {y}: shadows the window = {}", report.pass);
    println!("smallest relative slack {:.4} at n = {}", report.min_relative_slack(), report.worst_index);
    Ok(())
}
