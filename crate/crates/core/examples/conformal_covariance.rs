//! Conformal covariance of the Yamabe Green singularity under g -> e^{2f} g.

use microlocal::logsing::conformal_check;
use microlocal::operators::OperatorSpec;
use microlocal::oracles::{model_metric, random_scalar_jet, ModelKind};

fn main() -> microlocal::Result<()> {
    for (n, seed) in [(4, 1), (6, 2), (6, 3)] {
        let g = model_metric(&ModelKind::RandomPolynomial { seed, magnitude: 0.2, order: n }, n)?.metric;
        let f = random_scalar_jet(n, n, seed + 100, 0.3);
        let r = conformal_check(OperatorSpec::YAMABE, &g, &f)?;
        println!(
            "n = {n}: rescaled {:+.6e}, predicted {:+.6e} (rel {:.1e}); opposite exponent rel {:.1e}; matched {}",
            r.lhs, r.rhs, r.rel_error, r.rel_error_opposite, r.matched_exponent
        );
    }
    Ok(())
}
