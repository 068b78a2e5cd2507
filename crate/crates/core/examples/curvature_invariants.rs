//! Curvature invariants at the origin of model and random metrics.

use microlocal::oracles::{model_metric, ModelKind};
use microlocal::tensor::{all_invariants, weyl_norm_sq};

fn main() -> microlocal::Result<()> {
    for n in [3, 4, 6] {
        let sphere = model_metric(&ModelKind::Sphere { order: 4 }, n)?.metric;
        println!("unit sphere S^{n}:");
        for inv in all_invariants(&sphere)? {
            println!("  {:<12} (weight {}) = {:+.12}", inv.name.to_string(), inv.weight, inv.value);
        }
    }

    let g = model_metric(&ModelKind::RandomPolynomial { seed: 7, magnitude: 0.2, order: 4 }, 4)?.metric;
    println!("random metric in dimension 4:");
    for inv in all_invariants(&g)? {
        println!("  {:<12} = {:+.12}", inv.name.to_string(), inv.value);
    }

    // |W|^2 is pointwise conformally invariant with weight -2
    let f = microlocal::oracles::random_scalar_jet(4, 4, 11, 0.3);
    let gh = g.conformal_rescale(&f, 2)?;
    let (w, wh) = (weyl_norm_sq(&g)?.value, weyl_norm_sq(&gh)?.value);
    println!("|W|^2 e^(4f) after rescaling: {:.12} vs {:.12}", wh * (4.0 * f.constant_term()).exp(), w);
    Ok(())
}
