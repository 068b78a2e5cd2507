//! Truncated Taylor jets: arithmetic, analytic functions and differentiation.
//!
//! Run with `cargo run --example jets_basics`.

use microlocal::jet::{Analytic, ScalarJet};

fn show(label: &str, j: &ScalarJet) {
    print!("{label:>14} =");
    for (alpha, c) in j.terms() {
        if c != 0.0 {
            print!(" {c:+.6} x^{alpha:?}");
        }
    }
    println!();
}

fn main() -> microlocal::Result<()> {
    let (n, order) = (2, 4);
    let x = ScalarJet::variable(n, order, 0);
    let y = ScalarJet::variable(n, order, 1);

    // u = exp(x) * sin(x + y), expanded to order 4 around the origin
    let u = &x.exp() * &(&x + &y).compose(Analytic::Sin)?;
    show("u", &u);

    let ux = u.diff(0)?;
    show("du/dx", &ux);
    println!("order drops on differentiation: {} -> {}", u.order(), ux.order());

    // 1/(1 - x) is a geometric series
    let one = ScalarJet::constant(n, order, 1.0);
    show("1/(1-x)", &(&one - &x).inv()?);

    // sqrt and its square agree to the jet's order
    let s = (&one + &(&x * &y)).sqrt()?;
    let back = &s * &s;
    println!("|sqrt(1+xy)^2 - (1+xy)| = {:.2e}", (&back - &(&one + &(&x * &y))).max_abs());

    println!("u(0.1, 0.2) from the jet: {:.10}", u.eval(&[0.1, 0.2]));
    println!("exact value:              {:.10}", 0.1f64.exp() * 0.3f64.sin());
    Ok(())
}
