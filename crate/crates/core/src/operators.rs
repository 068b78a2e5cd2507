//! Full symbols of the Laplacian, the Yamabe operator and powers of the
//! Laplacian, built from a normalized metric jet.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{short, Error, Result};
use crate::metric::MetricJet;
use crate::symbol::{compose, HomogeneousSymbol, QuadForm, SymbolExpansion};
use crate::tensor::ricci_scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Laplacian,
    Yamabe,
    LaplacianPower(u32),
    /// `Δ^k` standing in for the GJMS operator of order `2k`. Only quantities
    /// that depend on the principal symbol alone may be computed from it.
    GjmsPrincipalStub(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
}

impl OperatorSpec {
    pub const LAPLACIAN: OperatorSpec = OperatorSpec {
        kind: OperatorKind::Laplacian,
    };
    pub const YAMABE: OperatorSpec = OperatorSpec {
        kind: OperatorKind::Yamabe,
    };

    pub fn laplacian_power(k: u32) -> Self {
        OperatorSpec {
            kind: OperatorKind::LaplacianPower(k),
        }
    }

    pub fn gjms_stub(k: u32) -> Self {
        OperatorSpec {
            kind: OperatorKind::GjmsPrincipalStub(k),
        }
    }

    /// Half the differential order.
    pub fn k(&self) -> u32 {
        match self.kind {
            OperatorKind::Laplacian | OperatorKind::Yamabe => 1,
            OperatorKind::LaplacianPower(k) | OperatorKind::GjmsPrincipalStub(k) => k,
        }
    }

    pub fn order(&self) -> i32 {
        2 * self.k() as i32
    }

    /// `(w, w')` with `P_{e^f g} = e^{w' f} P_g e^{-w f}`; only the
    /// conformally covariant operators have one.
    pub fn biweight(&self, n: usize) -> Option<(f64, f64)> {
        let k = self.k() as f64;
        let n = n as f64;
        match self.kind {
            OperatorKind::Yamabe | OperatorKind::GjmsPrincipalStub(_) => Some(((2.0 * k - n) / 4.0, -(n + 2.0 * k) / 4.0)),
            _ => None,
        }
    }

    /// Riemannian weight of the operator: `P_{tg} = t^{-k} P_g`.
    pub fn weight(&self) -> i32 {
        self.k() as i32
    }

    /// Builds the full symbol expansion to the given depth.
    pub fn symbol(&self, g: &MetricJet, depth: usize) -> Result<SymbolExpansion> {
        match self.kind {
            OperatorKind::Laplacian => laplacian_symbol(g, depth),
            OperatorKind::Yamabe => yamabe_symbol(g, depth),
            OperatorKind::LaplacianPower(k) => laplacian_power_symbol(g, k, depth),
            OperatorKind::GjmsPrincipalStub(k) => gjms_principal_stub(g, k, depth),
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OperatorKind::Laplacian => write!(f, "laplacian"),
            OperatorKind::Yamabe => write!(f, "yamabe"),
            OperatorKind::LaplacianPower(k) => write!(f, "lap-power:{k}"),
            OperatorKind::GjmsPrincipalStub(k) => write!(f, "gjms-stub:{k}"),
        }
    }
}

impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let power = |rest: &str| -> Result<u32> {
            match rest.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(Error::Input(format!("bad power '{rest}' in operator '{s}'"))),
            }
        };
        match s {
            "laplacian" => Ok(Self::LAPLACIAN),
            "yamabe" => Ok(Self::YAMABE),
            _ => {
                if let Some(rest) = s.strip_prefix("lap-power:") {
                    Ok(Self::laplacian_power(power(rest)?))
                } else if let Some(rest) = s.strip_prefix("gjms-stub:") {
                    Ok(Self::gjms_stub(power(rest)?))
                } else {
                    Err(Error::Input(format!(
                        "unknown operator '{s}' (expected yamabe, laplacian, lap-power:k or gjms-stub:k)"
                    )))
                }
            }
        }
    }
}

fn pad(parts: &mut Vec<HomogeneousSymbol>, depth: usize, q: &std::sync::Arc<QuadForm>, leading: i32) {
    while parts.len() <= depth {
        let d = leading - parts.len() as i32;
        parts.push(HomogeneousSymbol::zero(q, d));
    }
}

/// Left symbol of the positive Laplacian `Δ = -(1/√g) ∂_i (√g g^{ij} ∂_j)`:
/// `p_2 = g^{ij} ξ_i ξ_j`, `p_1 = -i (∂_i g^{ij} + g^{ij} ∂_i log √g) ξ_j`, `p_0 = 0`.
pub fn laplacian_symbol(g: &MetricJet, depth: usize) -> Result<SymbolExpansion> {
    if !g.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if g.order() < 1 {
        return Err(short("Laplacian symbol (metric jet)", 1, g.order()));
    }
    let n = g.dim();
    let q = QuadForm::from_metric(g)?;
    let p2 = HomogeneousSymbol::q_power(&q, 1);
    let ginv = g.inverse_entries()?;
    let log_sqrt = g.log_sqrt_det()?;
    let dlog: Vec<_> = (0..n).map(|i| log_sqrt.diff(i)).collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        let mut b = ginv[j].diff(0)?;
        for i in 1..n {
            b.add_scaled(&ginv[i * n + j].diff(i)?, 1.0);
        }
        for i in 0..n {
            b.add_product(&ginv[i * n + j], &dlog[i], 1.0);
        }
        let mut beta = vec![0u8; n];
        beta[j] = 1;
        terms.push((beta, 0, b.to_complex().scale(Complex64::new(0.0, -1.0))));
    }
    let p1 = HomogeneousSymbol::from_terms(&q, 1, terms)?;
    let mut parts = vec![p2, p1];
    pad(&mut parts, depth, &q, 2);
    SymbolExpansion::new(parts, true)
}

/// `Δ + (n-2) κ / (4(n-1))`.
pub fn yamabe_symbol(g: &MetricJet, depth: usize) -> Result<SymbolExpansion> {
    let n = g.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall {
            what: "Yamabe operator",
            n,
            min: 3,
        });
    }
    if g.order() < 2 {
        return Err(short("Yamabe symbol (metric jet)", 2, g.order()));
    }
    let lap = laplacian_symbol(g, depth.max(2))?;
    let (_, kappa) = ricci_scalar(g)?;
    let c = (n as f64 - 2.0) / (4.0 * (n as f64 - 1.0));
    let q = lap.principal().quad_form().clone();
    let p0 = HomogeneousSymbol::scalar(&q, &kappa.scale_real(c).to_complex());
    let mut parts = lap.parts().to_vec();
    parts[2] = p0;
    parts.truncate(depth.max(2) + 1);
    SymbolExpansion::new(parts, true)
}

/// `Δ^k` by repeated composition.
pub fn laplacian_power_symbol(g: &MetricJet, k: u32, depth: usize) -> Result<SymbolExpansion> {
    if k == 0 {
        return Err(Error::Input("Laplacian power must be at least 1".into()));
    }
    let lap = laplacian_symbol(g, depth)?;
    let mut acc = lap.clone();
    for _ in 1..k {
        acc = compose(&lap, &acc, depth)?;
    }
    if acc.depth() < depth {
        acc = acc.padded(depth)?;
    }
    Ok(acc)
}

/// Principal-part stand-in for the GJMS operator of order `2k`.
pub fn gjms_principal_stub(g: &MetricJet, k: u32, depth: usize) -> Result<SymbolExpansion> {
    Ok(laplacian_power_symbol(g, k, depth)?.mark_principal_only())
}

/// `(g^{ij} ξ_i ξ_j)^k`, the principal symbol of `Δ^k`.
pub fn principal_power(g: &MetricJet, k: u32) -> Result<HomogeneousSymbol> {
    let q = QuadForm::from_metric(g)?;
    Ok(HomogeneousSymbol::q_power(&q, k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{ComplexJet, ScalarJet};
    use crate::oracles::{apply_differential_symbol, fd_laplace_beltrami, model_metric, ModelKind};
    use crate::symbol::mult_operator_symbol;

    fn random(n: usize, seed: u64, order: usize) -> MetricJet {
        model_metric(&ModelKind::RandomPolynomial { seed, magnitude: 0.2, order }, n).unwrap().metric
    }

    #[test]
    fn parse_and_print_specs() {
        for s in ["yamabe", "laplacian", "lap-power:3", "gjms-stub:2"] {
            assert_eq!(s.parse::<OperatorSpec>().unwrap().to_string(), s);
        }
        assert!("lap-power:0".parse::<OperatorSpec>().is_err());
        assert!("paneitz".parse::<OperatorSpec>().is_err());
        assert_eq!(OperatorSpec::YAMABE.biweight(4), Some((-0.5, -1.5)));
        assert_eq!(OperatorSpec::gjms_stub(3).order(), 6);
        assert_eq!(OperatorSpec::LAPLACIAN.biweight(4), None);
    }

    #[test]
    fn flat_laplacian_is_xi_squared() {
        let p = laplacian_symbol(&MetricJet::identity(3, 2), 3).unwrap();
        assert_eq!(p.depth(), 3);
        let poly = p.principal().polynomial_terms().unwrap();
        assert_eq!(poly.len(), 3);
        for (b, c) in poly {
            assert_eq!(b.iter().filter(|&&v| v == 2).count(), 1);
            assert_eq!(c.constant_term(), Complex64::new(1.0, 0.0));
            assert!(c.is_constant());
        }
        assert!(p.parts()[1..].iter().all(|s| s.canonical_max_abs() == 0.0));
    }

    #[test]
    fn non_normalized_metric_rejected() {
        let g = MetricJet::identity(2, 2).scale(2.0).unwrap();
        assert_eq!(laplacian_symbol(&g, 1).unwrap_err(), Error::NotNormalized);
    }

    #[test]
    fn quantized_laplacian_sign() {
        let n = 2;
        let p = laplacian_symbol(&MetricJet::identity(n, 2), 2).unwrap();
        let x1 = ScalarJet::variable(n, 3, 0);
        let u = (&x1 * &x1).to_complex();
        let out = apply_differential_symbol(p.parts(), &u).unwrap();
        assert_eq!(out.constant_term(), Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn quantized_laplacian_matches_fd_on_sphere() {
        let n = 3;
        let model = model_metric(&ModelKind::Sphere { order: 6 }, n).unwrap();
        // the sphere patch has g(0) = 4I, so normalized coordinates are y = 2x
        let (g, l) = model.metric.normalize().unwrap();
        let scale = l[(0, 0)];
        let p = laplacian_symbol(&g, 2).unwrap();
        let eval = model.evaluator.unwrap();
        // u = x1² + x1 x2 + x3, pulled back to y
        let u_x = |x: &[f64]| x[0] * x[0] + x[0] * x[1] + x[2];
        let y = |i| ScalarJet::variable(n, 6, i).scale_real(scale);
        let u_y = &(&(&y(0) * &y(0)) + &(&y(0) * &y(1))) + &y(2);
        let out = apply_differential_symbol(p.parts(), &u_y.to_complex()).unwrap();
        let fd = fd_laplace_beltrami(eval.as_ref(), &u_x, &[0.0; 3], 1e-4);
        assert!((out.constant_term().re - fd).abs() < 1e-6, "{} vs {fd}", out.constant_term().re);
        assert!(out.constant_term().im.abs() < 1e-14);
    }

    #[test]
    fn yamabe_examples() {
        let flat = yamabe_symbol(&MetricJet::identity(4, 2), 2).unwrap();
        assert!(flat.parts()[2].canonical_max_abs() == 0.0);
        let (g, _) = model_metric(&ModelKind::Sphere { order: 4 }, 4).unwrap().metric.normalize().unwrap();
        let y = yamabe_symbol(&g, 2).unwrap();
        let c = y.parts()[2].terms()[0].2.constant_term();
        assert!((c.re - 2.0).abs() < 1e-12);
        assert_eq!(
            yamabe_symbol(&MetricJet::identity(2, 2), 2).unwrap_err(),
            Error::DimensionTooSmall {
                what: "Yamabe operator",
                n: 2,
                min: 3
            }
        );
    }

    fn polynomial_map(s: &HomogeneousSymbol) -> Vec<(Vec<u8>, ComplexJet)> {
        s.polynomial_terms().unwrap()
    }

    fn poly_diff(a: &HomogeneousSymbol, b: &HomogeneousSymbol) -> f64 {
        let pa = polynomial_map(a);
        let pb = polynomial_map(b);
        let mut worst: f64 = 0.0;
        for (beta, ca) in &pa {
            match pb.iter().find(|(bb, _)| bb == beta) {
                Some((_, cb)) => worst = worst.max((ca - cb).max_abs()),
                None => worst = worst.max(ca.max_abs()),
            }
        }
        for (beta, cb) in &pb {
            if !pa.iter().any(|(ba, _)| ba == beta) {
                worst = worst.max(cb.max_abs());
            }
        }
        worst
    }

    #[test]
    fn yamabe_conformal_covariance_at_symbol_level() {
        let n = 4;
        let order = 4;
        let g = random(n, 12, order);
        let x = |i| ScalarJet::variable(n, order, i);
        let f = &(&x(0).scale_real(0.3) + &(&x(1) * &x(2)).scale_real(-0.4)) + &(&x(3) * &x(3)).scale_real(0.2);
        let gh = g.conformal_rescale(&f, 2).unwrap();
        let nf = n as f64;
        let left = mult_operator_symbol(&f.scale_real(-(nf / 2.0 + 1.0)).exp());
        let right = mult_operator_symbol(&f.scale_real(nf / 2.0 - 1.0).exp());
        let depth = 2;
        let lhs = compose(&left, &compose(&yamabe_symbol(&g, depth).unwrap(), &right, depth).unwrap(), depth).unwrap();
        let rhs = yamabe_symbol(&gh, depth).unwrap();
        for j in 0..=depth {
            let a = lhs.parts()[j].truncate(order - 2 - j);
            let b = rhs.parts()[j].truncate(order - 2 - j);
            assert!(poly_diff(&a, &b) < 1e-9, "part {j}: {}", poly_diff(&a, &b));
        }
    }

    #[test]
    fn laplacian_powers() {
        let flat = laplacian_power_symbol(&MetricJet::identity(3, 3), 3, 2).unwrap();
        let poly = flat.principal().polynomial_terms().unwrap();
        // |ξ|^6 in three variables: multinomial coefficients
        let c = |b: [u8; 3]| poly.iter().find(|(p, _)| p[..] == b).map(|(_, c)| c.constant_term().re).unwrap_or(0.0);
        assert_eq!(c([6, 0, 0]), 1.0);
        assert_eq!(c([2, 2, 2]), 6.0);
        assert_eq!(c([4, 2, 0]), 3.0);
        assert!(flat.parts()[1..].iter().all(|p| p.canonical_max_abs() == 0.0));

        let g = random(3, 4, 3);
        let one = laplacian_power_symbol(&g, 1, 2).unwrap();
        let lap = laplacian_symbol(&g, 2).unwrap();
        for (a, b) in one.parts().iter().zip(lap.parts()) {
            assert_eq!(a.sub(b).unwrap().canonical_max_abs(), 0.0);
        }
        let sq = laplacian_power_symbol(&g, 2, 1).unwrap();
        let want = principal_power(&g, 2).unwrap();
        assert!(poly_diff(sq.principal(), &want) < 1e-12);
    }

    #[test]
    fn stub_shares_principal_part() {
        let g = random(4, 6, 3);
        let stub = gjms_principal_stub(&g, 1, 2).unwrap();
        let y = yamabe_symbol(&g, 2).unwrap();
        assert!(stub.is_principal_only());
        assert_eq!(stub.principal().sub(y.principal()).unwrap().canonical_max_abs(), 0.0);
    }
}
