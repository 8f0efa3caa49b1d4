//! Grid search for shadowing points, usable for any map and metric.

use shadowlab::cplus::decaying_epsilon;
use shadowlab::shadowing::sampled_search;
use shadowlab::{Interval, MapSpec, Metric, Point, PseudoOrbitSpec, Window};

fn main() -> shadowlab::Result<()> {
    let eps = decaying_epsilon(1.0)?;
    let region = [Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)];
    for q in [0.0, 0.5] {
        let spec = PseudoOrbitSpec::spliced(
            MapSpec::translation(2),
            Point::xy(0.0, 0.0),
            Point::xy(0.0, q),
            0,
            Window::symmetric(16)?,
        );
        let res = sampled_search(&spec, &eps, Metric::Sup, &region, 1e-2)?;
        match res.found {
            Some(p) => println!("jump {q}: shadowed by {p} ({} grid points)", res.grid_points),
            None => {
                let best = res.near_misses.first().map(|m| m.satisfied).unwrap_or(0);
                println!("jump {q}: no grid point shadows; best near-miss satisfies {best} constraints");
            }
        }
    }
    Ok(())
}
