//! A parametrix for the conformal Laplacian and its residual.

use microlocal::operators::yamabe_symbol;
use microlocal::oracles::{model_metric, ModelKind};
use microlocal::parametrix::{distance_from_identity, parametrix, required_jet_order};
use microlocal::symbol::compose;

fn main() -> microlocal::Result<()> {
    let n = 4;
    let depth = 3;
    let order = required_jet_order(2, n)?.max(depth + 2);
    let g = model_metric(&ModelKind::RandomPolynomial { seed: 2, magnitude: 0.2, order }, n)?.metric;
    let p = yamabe_symbol(&g, depth)?;
    let q = parametrix(&p, -2 - depth as i32)?;
    for part in q.parts() {
        println!("q part of degree {:>2}: {:>4} terms", part.degree(), part.len());
    }
    println!("|q∘p - 1| = {:.2e}", distance_from_identity(&compose(&q, &p, depth)?, depth)?);
    println!("|p∘q - 1| = {:.2e}", distance_from_identity(&compose(&p, &q, depth)?, depth)?);
    Ok(())
}
