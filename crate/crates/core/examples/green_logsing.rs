//! Logarithmic singularity of Green kernels, with closed-form comparisons.

use std::f64::consts::PI;

use microlocal::logsing::{critical_constant, green_logsing};
use microlocal::operators::OperatorSpec;
use microlocal::oracles::{model_metric, ModelKind};
use microlocal::tensor::{ricci_scalar, weyl_norm_sq};

fn random(n: usize, seed: u64, order: usize) -> microlocal::Result<microlocal::metric::MetricJet> {
    Ok(model_metric(&ModelKind::RandomPolynomial { seed, magnitude: 0.2, order }, n)?.metric)
}

fn main() -> microlocal::Result<()> {
    // the critical power of the Laplacian has a universal constant
    for n in [2, 4, 6] {
        let flat = model_metric(&ModelKind::Flat { order: n }, n)?.metric;
        let k = (n / 2) as u32;
        let gamma = green_logsing(OperatorSpec::gjms_stub(k), &flat)?.scalar_invariant;
        println!("n = {n}, Δ^{k}: γ = {gamma:.15}  (closed form {:.15})", critical_constant(n));
    }

    // 4D Laplacian: γ = (4π)^-2 κ / 3
    let g = random(4, 1, 4)?;
    let gamma = green_logsing(OperatorSpec::LAPLACIAN, &g)?.scalar_invariant;
    let kappa = ricci_scalar(&g)?.1.constant_term();
    println!("n = 4, Δ: γ = {gamma:+.12}, κ/(48π²) = {:+.12}", kappa / (48.0 * PI * PI));

    // 4D Yamabe operator: γ vanishes
    let gamma = green_logsing(OperatorSpec::YAMABE, &g)?.scalar_invariant;
    println!("n = 4, Yamabe: γ = {gamma:.2e}");

    // 6D Yamabe operator: γ is a multiple of |W|^2
    let g = random(6, 1, 6)?;
    let gamma = green_logsing(OperatorSpec::YAMABE, &g)?.scalar_invariant;
    let w2 = weyl_norm_sq(&g)?.value;
    println!("n = 6, Yamabe: γ = {gamma:+.6e}, γ/|W|^2 = {:.12e}, (4π)^-3/90 = {:.12e}", gamma / w2, (4.0 * PI).powi(-3) / 90.0);
    Ok(())
}
