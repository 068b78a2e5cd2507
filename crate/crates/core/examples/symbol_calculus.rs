//! Full symbols of differential operators and their composition.

use microlocal::operators::laplacian_symbol;
use microlocal::oracles::{model_metric, random_scalar_jet, ModelKind};
use microlocal::symbol::{compose, mult_operator_symbol};

fn main() -> microlocal::Result<()> {
    let n = 3;
    let g = model_metric(&ModelKind::RandomPolynomial { seed: 3, magnitude: 0.2, order: 4 }, n)?.metric;
    let lap = laplacian_symbol(&g, 2)?;
    println!("Laplacian symbol: leading degree {}, {} parts", lap.leading_degree(), lap.parts().len());
    for p in lap.parts() {
        println!("  degree {:>2}: {} terms", p.degree(), p.len());
    }

    // [Δ, f] has order 1: the degree 2 parts of Δ∘f and f∘Δ cancel
    let f = random_scalar_jet(n, 4, 5, 0.5);
    let mf = mult_operator_symbol(&f);
    let left = compose(&lap, &mf, 2)?;
    let right = compose(&mf, &lap, 2)?;
    let xi = [0.3, -1.1, 0.7];
    for (a, b) in left.parts().iter().zip(right.parts()) {
        let d = a.eval(&[0.0; 3], &xi) - b.eval(&[0.0; 3], &xi);
        println!("  commutator part of degree {:>2} at (0, xi): {:+.6} {:+.6}i", a.degree(), d.re, d.im);
    }
    Ok(())
}
