//! From a ball neighborhood of the diagonal to a 1-Lipschitz ε.

use shadowlab::cplus::{epsilon_from_neighborhood, NeighborhoodSpec, RegularGrid, SampleSet};
use shadowlab::{CPlusFn, Metric, Point};

fn main() -> shadowlab::Result<()> {
    let rho = CPlusFn::radial_table(vec![(0.0, 0.1), (0.5, 1.0)])?;
    let grid = RegularGrid::square(-2.0, 2.0, 41);
    let tab = epsilon_from_neighborhood(&NeighborhoodSpec::new(rho.clone()), &SampleSet::Grid(grid), Metric::Sup)?;
    let eps = tab.to_cplus();
    for x in [0.0, 0.25, 0.5, 1.0, 1.5] {
        let p = Point::xy(x, 0.0);
        println!("x = {x:<4}  rho = {:.3}  eps = {:.3}", rho.eval(&p)?, eps.eval(&p)?);
    }
    Ok(())
}
