//! Transporting a shadowing orbit through a change of coordinates.

use shadowlab::maps::AffineChange;
use shadowlab::shadowing::{homothety_shadow_point, shadow_report};
use shadowlab::{conjugate_map, CPlusFn, Diffeo, Expr, MapSpec, Metric, Point, RealizedOrbit, Window};

fn main() -> shadowlab::Result<()> {
    let base = MapSpec::homothety(2, 2.0)?;
    let orbit = RealizedOrbit {
        window: Window::new(0, 3)?,
        points: vec![Point::xy(1.0, 0.0), Point::xy(2.1, 0.0), Point::xy(4.1, 0.05), Point::xy(8.3, 0.1)],
        map: base.clone(),
    };
    let (anchor, w) = homothety_shadow_point(&orbit)?;
    let eps = CPlusFn::constant(1.0)?;

    for change in [
        Diffeo::Affine(AffineChange::new(vec![vec![1.0, 0.5], vec![0.0, 1.0]], vec![0.3, -0.2])?),
        Diffeo::radial_quadratic(0.25)?,
    ] {
        let g = conjugate_map(base.clone(), change.clone())?;
        let moved = RealizedOrbit {
            window: orbit.window,
            points: orbit.points.iter().map(|p| change.apply(p)).collect::<shadowlab::Result<_>>()?,
            map: g.clone(),
        };
        let eps_t = CPlusFn::new(Expr::Transport {
            change: change.clone(),
            base: Box::new(eps.expr().clone()),
        });
        let report = shadow_report(&moved, anchor, &change.apply(&w)?, &g, &eps_t, Metric::Sup)?;
        println!("{}: transported shadow passes = {}", g.describe(), report.pass);
    }
    Ok(())
}
