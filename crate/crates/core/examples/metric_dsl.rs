//! Metrics written as expressions, and the metric file format.

use microlocal::cli::metric_file::parse_metric_file;
use microlocal::dsl::{eval_jet, parse};
use microlocal::tensor::{all_invariants, ricci_scalar};

const HYPERBOLIC: &str = "\
# Poincaré ball, curvature -1
dim = 3
g[1][1] = \"4/(1 - x1^2 - x2^2 - x3^2)^2\"
g[2][2] = \"4/(1 - x1^2 - x2^2 - x3^2)^2\"
g[3][3] = \"4/(1 - x1^2 - x2^2 - x3^2)^2\"
";

fn main() -> microlocal::Result<()> {
    let e = parse("exp(x1) * sin(x1 + x2) / sqrt(1 + x2^2)")?;
    println!("parsed: {e}");
    println!("value at (0.1, 0.2): {:.12}", e.eval(&[0.1, 0.2])?);
    let j = eval_jet(&e, 2, 3)?;
    for (alpha, c) in j.terms().filter(|(_, c)| *c != 0.0) {
        println!("  x^{alpha:?}: {c:+.6}");
    }

    // syntax errors carry a byte offset
    if let Err(err) = parse("1 + * x1") {
        println!("error: {err}");
    }

    let file = parse_metric_file(HYPERBOLIC)?;
    let g = file.jet(4)?;
    println!("hyperbolic 3-ball, scalar curvature {:+.10}", ricci_scalar(&g)?.1.constant_term());
    for inv in all_invariants(&g)? {
        println!("  {:<12} = {:+.10}", inv.name.to_string(), inv.value);
    }
    Ok(())
}
