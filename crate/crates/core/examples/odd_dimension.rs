//! In odd dimensions the Yamabe Green kernel has no logarithmic term.

use microlocal::logsing::parity_vanishing_check;
use microlocal::operators::OperatorSpec;
use microlocal::oracles::{model_metric, ModelKind};

fn main() -> microlocal::Result<()> {
    for n in [3, 5] {
        for seed in 1..=2 {
            let g = model_metric(&ModelKind::RandomPolynomial { seed, magnitude: 0.2, order: n + 1 }, n)?.metric;
            let r = parity_vanishing_check(OperatorSpec::YAMABE, &g)?;
            println!(
                "n = {n}, seed {seed}: |γ| = {:.1e}, {} terms of q_-n checked, odd under ξ -> -ξ: {}",
                r.gamma_abs, r.terms_checked, r.parity_ok
            );
        }
    }
    Ok(())
}
