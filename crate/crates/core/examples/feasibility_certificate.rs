//! Exact feasibility boxes: the true orbit is shadowed, the saddle splice is not.

use shadowlab::cplus::saddle_adversarial_epsilon;
use shadowlab::shadowing::{box_feasibility, FeasibilityOutcome};
use shadowlab::{MapSpec, Point, PseudoOrbitSpec, Window};

fn main() -> shadowlab::Result<()> {
    let eps = saddle_adversarial_epsilon();
    for q in [0.0, 0.1] {
        let spec = PseudoOrbitSpec::spliced(
            MapSpec::saddle(),
            Point::xy(1.0, 0.0),
            Point::xy(1.0, q),
            0,
            Window::symmetric(32)?,
        );
        let cert = box_feasibility(&spec, &eps, 5, 1e-9)?;
        match &cert.outcome {
            FeasibilityOutcome::NonEmpty { witness, .. } => println!("q = {q}: shadowed by {witness}"),
            FeasibilityOutcome::Empty { emptiness_window, n, coordinate } => println!(
                "q = {q}: empty after window {emptiness_window} (index {n}, coordinate {coordinate})"
            ),
            FeasibilityOutcome::Indeterminate { .. } => println!("q = {q}: indeterminate"),
        }
        for (n, w) in cert.widths().iter().take(6) {
            println!("  after n = {n:>3}: widths {w:?}");
        }
    }
    Ok(())
}
