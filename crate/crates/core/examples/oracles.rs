//! Independent checks: brute-force contractions, Monte-Carlo sphere integrals
//! and finite differences.

use microlocal::logsing::sphere_integral_at_origin;
use microlocal::operators::laplacian_symbol;
use microlocal::oracles::{fd_metric_jet, mc_sphere_integral, model_metric, naive_contract, ModelKind};
use microlocal::parametrix::parametrix;
use microlocal::tensor::{contract_full, riemann, Slot};

fn main() -> microlocal::Result<()> {
    let n = 4;
    let model = model_metric(&ModelKind::Sphere { order: 4 }, n)?;
    let g = model.metric;

    // |R|^2 through the contraction engine and through nested loops
    let r = riemann(&g)?;
    let pairs: Vec<(Slot, Slot)> = (0..4).map(|s| (Slot { tensor: 0, slot: s }, Slot { tensor: 1, slot: s })).collect();
    let fast = contract_full(&[&r, &r], &pairs, &g)?.constant_term();
    let slow = naive_contract(&[&r, &r], &pairs, &g)?;
    println!("|R|^2: engine {fast:.12}, loops {slow:.12}");

    // a parametrix part of a random metric, integrated exactly and by Monte Carlo
    let gr = model_metric(&ModelKind::RandomPolynomial { seed: 4, magnitude: 0.2, order: 4 }, n)?.metric;
    let q = parametrix(&laplacian_symbol(&gr, 2)?, -4)?;
    let part = &q.parts()[2];
    let exact = sphere_integral_at_origin(part)?;
    let (mc, se) = mc_sphere_integral(part, 200_000, 9)?;
    println!("sphere integral of q_-4: exact {:+.6}, Monte Carlo {:+.6} ± {:.6}", exact.re, mc.re, se.re);

    // jets against finite differences of the sampled metric
    let eval = model.evaluator.expect("sphere has a closed form");
    let fd = fd_metric_jet(&*eval, n, &[0.0; 4], 2, 1e-3)?;
    let worst = g.entries().iter().zip(fd.entries()).map(|(a, b)| (&a.truncate(2) - b).max_abs()).fold(0.0, f64::max);
    println!("largest jet vs finite-difference gap: {worst:.2e}");
    Ok(())
}
