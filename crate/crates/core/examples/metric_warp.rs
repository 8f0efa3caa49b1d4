//! The same splice under the sup norm and under the polar-warp metric.

use shadowlab::scenario::WarpConfig;
use shadowlab::shadowing::sampled_search;
use shadowlab::Metric;

fn main() -> shadowlab::Result<()> {
    let cfg = WarpConfig::default();
    let spec = cfg.spec()?;
    for metric in [Metric::Sup, Metric::PolarWarp] {
        let res = sampled_search(&spec, &cfg.epsilon.function, metric, &cfg.search_box, cfg.step)?;
        match res.found {
            Some(p) => println!("{metric}: shadowed by {p}"),
            None => println!("{metric}: no shadowing point among {} grid points", res.grid_points),
        }
    }
    Ok(())
}
