//! Synthesizing δ for the homothety x ↦ 2x and checking its conditions.

use shadowlab::cplus::{saddle_adversarial_epsilon, DeltaSynthesis};
use shadowlab::{CPlusFn, Point};

fn main() -> shadowlab::Result<()> {
    let synth = DeltaSynthesis::default();
    for (name, eps) in [
        ("constant 1", CPlusFn::constant(1.0)?),
        ("2^(-|x|)", saddle_adversarial_epsilon()),
    ] {
        let d = synth.run(&eps)?;
        let check = d.verify(&eps, 20_000, 7)?;
        println!("{name}: r0 = {}, m = {}, conditions pass: {}", d.r0, d.m, check.passed());
        for r in [0.0, 1.0, 8.0, 100.0] {
            println!("  log2 δ at radius {r}: {:.4}", d.delta.eval_log2(&Point::xy(r, 0.0))?);
        }
    }
    Ok(())
}
