//! Spliced and random pseudo-orbits: realization, validation, classification, CSV.

use shadowlab::pseudo_orbit::{
    classify_with, escape_ratio, max_splice_jump, validate, write_csv, OrbitKind, PseudoOrbitGenerator,
};
use shadowlab::cplus::DeltaSynthesis;
use shadowlab::{realize, CPlusFn, MapSpec, Metric, Point, PseudoOrbitSpec, Window};

fn main() -> shadowlab::Result<()> {
    let window = Window::symmetric(4)?;
    let spec = PseudoOrbitSpec::spliced(MapSpec::saddle(), Point::xy(1.0, 0.0), Point::xy(1.0, 0.3), 0, window);
    for (n, x) in realize(&spec)?.iter() {
        println!("x_{n} = {x}");
    }
    let delta = CPlusFn::constant(0.5)?;
    println!("δ ≡ 0.5 pseudo-orbit: {}", validate(&spec, &delta, Metric::Sup)?.pass);
    println!("largest admissible jump: {}", max_splice_jump(&spec, &delta, Metric::Sup)?);

    let map = MapSpec::homothety(2, 2.0)?;
    let synth = DeltaSynthesis::default().run(&CPlusFn::constant(1.0)?)?;
    let gen = PseudoOrbitGenerator::new(map, synth.delta.clone(), Metric::Sup, Window::new(-5, 10)?)?;
    for kind in [OrbitKind::Bounded, OrbitKind::Escaping] {
        let orbit = gen.generate(kind, 1)?;
        let class = classify_with(&orbit, synth.r0, Metric::Sup, escape_ratio(2.0))?;
        println!("{kind:?}: valid = {}, class = {class:?}", orbit.validate(&synth.delta, Metric::Sup)?.pass);
        if kind == OrbitKind::Escaping {
            write_csv(std::io::stdout(), &orbit, "escaping example")?;
        }
    }
    Ok(())
}
