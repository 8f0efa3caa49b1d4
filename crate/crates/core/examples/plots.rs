//! Rendering SVG figures from CSV traces.

use shadowlab::plot::{render_svg, PlotKind};
use shadowlab::pseudo_orbit::write_csv;
use shadowlab::{realize, MapSpec, Point, PseudoOrbitSpec, Window};

fn main() -> shadowlab::Result<()> {
    let spec = PseudoOrbitSpec::spliced(MapSpec::saddle(), Point::xy(1.0, 0.0), Point::xy(1.0, 0.2), 0, Window::symmetric(6)?);
    let mut csv = Vec::new();
    write_csv(&mut csv, &realize(&spec)?, "saddle splice")?;
    let svg = render_svg(PlotKind::Orbit2d, std::str::from_utf8(&csv).expect("utf-8"))?;
    let path = std::env::temp_dir().join("saddle.orbit2d.svg");
    std::fs::write(&path, svg)?;
    println!("wrote {}", path.display());
    Ok(())
}
