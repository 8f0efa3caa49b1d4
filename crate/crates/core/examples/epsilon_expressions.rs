//! Building and evaluating C⁺ functions, including values below f64 range.

use shadowlab::cplus::{decaying_epsilon, saddle_adversarial_epsilon};
use shadowlab::{CPlusFn, Expr, Metric, Point};

fn main() -> shadowlab::Result<()> {
    let eps = saddle_adversarial_epsilon();
    for x in [0.0, 1.0, 10.0, 1e4] {
        let m = eps.magnitude(&Point::xy(x, 0.0))?;
        println!("2^(-|x|) at ({x}, 0): log2 = {}, value = {:e}", m.log2, m.value);
    }

    let decay = decaying_epsilon(1.0)?;
    println!("min(1, 1/(1+|x|)) at (3, -1): {}", decay.eval(&Point::xy(3.0, -1.0))?);

    let custom = CPlusFn::new(Expr::Const(0.5) * (Expr::Const(1.0) + Expr::norm(Metric::Euclidean)).recip());
    let json = serde_json::to_string(&custom)?;
    println!("serialized: {json}");
    let back: CPlusFn = serde_json::from_str(&json)?;
    println!("round trip at (3, 4): {}", back.eval(&Point::xy(3.0, 4.0))?);
    Ok(())
}
