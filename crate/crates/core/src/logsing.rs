//! Logarithmic singularities of Schwartz and Green kernels.
//!
//! The logarithmic singularity of an operator with symbol `p` is the density
//!
//! ```text
//! c_P(x) = (2π)^{-n} ∫_{S^{n-1}} p_{-n}(x, ξ) dσ(ξ),
//! ```
//!
//! and the Green kernel singularity `γ_P` is `c_Q` for a parametrix `Q` of `P`.
//! Symbols are kept as sums of `c_β ξ^β Q^{-d}` with `Q(0, ξ) = |ξ|²`, so the
//! sphere integral at the origin reduces to exact monomial integrals.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{short, Error, Result};
use crate::jet::ScalarJet;
use crate::metric::MetricJet;
use crate::operators::{OperatorKind, OperatorSpec};
use crate::parametrix::{parametrix, required_jet_order};
use crate::symbol::{HomogeneousSymbol, SymbolExpansion};

/// Largest imaginary part tolerated in a reported density.
pub const IMAGINARY_TOL: f64 = 1e-10;

/// `Γ(m/2)` for a positive integer `m`, exactly as far as f64 allows.
fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    if m % 2 == 0 {
        (1..m / 2).map(|v| v as f64).product()
    } else {
        // Γ(k + 1/2) = √π Π_{i<k} (i + 1/2)
        let k = (m - 1) / 2;
        PI.sqrt() * (0..k).map(|i| i as f64 + 0.5).product::<f64>()
    }
}

/// `∫_{S^{n-1}} ξ^β dσ = 2 Π Γ((β_i + 1)/2) / Γ((|β| + n)/2)`, zero when any
/// exponent is odd.
pub fn sphere_monomial_integral(beta: &[u8], n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::DimensionTooSmall {
            what: "sphere integral",
            n,
            min: 2,
        });
    }
    if beta.len() != n {
        return Err(Error::DimensionMismatch { left: beta.len(), right: n });
    }
    if beta.iter().any(|b| b % 2 == 1) {
        return Ok(0.0);
    }
    let total: usize = beta.iter().map(|&b| b as usize).sum();
    let num: f64 = beta.iter().map(|&b| gamma_half(b as usize + 1)).product();
    Ok(2.0 * num / gamma_half(total + n))
}

/// `∫_{S^{n-1}} s(0, ξ) dσ` for a homogeneous symbol.
pub fn sphere_integral_at_origin(s: &HomogeneousSymbol) -> Result<Complex64> {
    let n = s.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for (beta, _, c) in s.terms() {
        let w = sphere_monomial_integral(&beta, n)?;
        if w != 0.0 {
            acc += c.constant_term() * w;
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularityKind {
    /// `c_P` of the operator itself.
    Schwartz,
    /// `γ_P = c_Q` for a parametrix `Q`.
    Green,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogSingularity {
    pub n: usize,
    /// Coefficient of `dx` in the chart the metric was given in.
    pub c_density: f64,
    /// Density per Riemannian volume, `c / √det g(x₀)`.
    pub scalar_invariant: f64,
    pub kind: SingularityKind,
    /// `m γ` for Green singularities, the heat coefficient `a_{n-m}` under the
    /// relation `a_{n-m} = m γ`. A direct Mellin transform of the heat trace
    /// gives `a_{n-m} = γ / m` instead (with `(4π)^{-n/2}` stripped from the
    /// heat expansion); the field keeps the former so callers can compare
    /// against formulas written with it.
    pub heat_coefficient: Option<f64>,
    pub operator: Option<OperatorSpec>,
    /// Imaginary part discarded from the density.
    pub imaginary_residue: f64,
}

/// `c_P(x₀)` from the degree `-n` part of an expansion whose quadratic form
/// is `|ξ|²` at the origin.
pub fn logsing_density(p: &SymbolExpansion, n: usize) -> Result<LogSingularity> {
    if p.dim() != n {
        return Err(Error::DimensionMismatch { left: p.dim(), right: n });
    }
    let part = p.part(-(n as i32)).ok_or(Error::MissingDegree(-(n as i32)))?;
    let integral = sphere_integral_at_origin(part)?;
    let c = integral / (2.0 * PI).powi(n as i32);
    if c.im.abs() > IMAGINARY_TOL {
        return Err(Error::ImaginaryResidue(c.im));
    }
    Ok(LogSingularity {
        n,
        c_density: c.re,
        scalar_invariant: c.re,
        kind: SingularityKind::Schwartz,
        heat_coefficient: None,
        operator: None,
        imaginary_residue: c.im,
    })
}

/// Everything computed on the way to a Green kernel singularity.
pub struct GreenComputation {
    pub logsing: LogSingularity,
    /// Metric in coordinates with `g(x₀) = I`.
    pub normalized: MetricJet,
    /// `x = L y` takes normalized coordinates `y` to the input chart.
    pub l: DMatrix<f64>,
    pub symbol: SymbolExpansion,
    pub parametrix: SymbolExpansion,
}

/// `γ_P(x₀)` for one of the built-in operators.
pub fn green_logsing(spec: OperatorSpec, g: &MetricJet) -> Result<LogSingularity> {
    Ok(green_logsing_detailed(spec, g)?.logsing)
}

pub fn green_logsing_detailed(spec: OperatorSpec, g: &MetricJet) -> Result<GreenComputation> {
    let n = g.dim();
    let m = spec.order();
    if let OperatorKind::GjmsPrincipalStub(k) = spec.kind {
        if 2 * k as usize != n {
            return Err(Error::PrincipalOnly(format!(
                "the GJMS stub of order {m} only has its principal part; in dimension {n} the \
                 Green kernel singularity depends on lower-order terms, use yamabe for k = 1"
            )));
        }
    }
    let need = required_jet_order(m, n)?;
    if g.order() < need {
        return Err(short(format!("metric jet for {spec} in dimension {n}"), need, g.order()));
    }
    let depth = n - m as usize;
    let (normalized, l) = g.normalize()?;
    // deeper metric coefficients cannot reach the degree -n part at the origin
    let normalized = normalized.truncate(depth.max(2));
    let symbol = spec.symbol(&normalized, depth)?;
    let q = parametrix(&symbol, -(n as i32))?;
    let mut ls = logsing_density(&q, n)?;
    let sqrt_det = g.value_at_origin().determinant().sqrt();
    ls.c_density = ls.scalar_invariant * sqrt_det;
    ls.kind = SingularityKind::Green;
    ls.heat_coefficient = Some(m as f64 * ls.scalar_invariant);
    ls.operator = Some(spec);
    Ok(GreenComputation {
        logsing: ls,
        normalized,
        l,
        symbol,
        parametrix: q,
    })
}

/// `n (4π)^{-n/2} / (n/2)!`, the critical GJMS value for even `n`.
pub fn critical_constant(n: usize) -> f64 {
    let half: f64 = (1..=n / 2).map(|v| v as f64).product();
    n as f64 * (4.0 * PI).powf(-(n as f64) / 2.0) / half
}

/// Weight of the scalar `γ / vol` under `g ↦ t g`: `n/2 - k`.
pub fn scalar_weight(spec: OperatorSpec, n: usize) -> f64 {
    n as f64 / 2.0 - spec.weight() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalReport {
    pub n: usize,
    pub operator: OperatorSpec,
    /// The metric compared against `g` is `e^{factor_exponent f} g`.
    pub factor_exponent: i32,
    /// `γ` density of the rescaled metric in the input chart.
    pub lhs: f64,
    /// `e^{-(w' - w) h(x₀)} γ_g` with `h = factor_exponent · f`.
    pub rhs: f64,
    pub rel_error: f64,
    /// Same comparison with the opposite exponent `e^{-(w - w') h(x₀)}`.
    pub rhs_opposite: f64,
    pub rel_error_opposite: f64,
    /// Which exponent reproduced the rescaled density more closely.
    pub matched_exponent: &'static str,
}

/// `|a - b| / max(|a|, |b|)`, or the absolute difference when both are tiny.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale > 1e-10 {
        (a - b).abs() / scale
    } else {
        (a - b).abs()
    }
}

/// Compares `γ` of `ĝ = e^{2f} g` with the transformation law
/// `γ_{P_{e^h g}} = e^{-(w'-w) h} γ_{P_g}` (here `h = 2f`), both densities in
/// the chart of `g`.
pub fn conformal_check(spec: OperatorSpec, g: &MetricJet, f: &ScalarJet) -> Result<ConformalReport> {
    let n = g.dim();
    let (w, w2) = spec
        .biweight(n)
        .ok_or_else(|| Error::Input(format!("{spec} has no conformal biweight")))?;
    let factor_exponent = 2;
    let gh = g.conformal_rescale(f, factor_exponent)?;
    let h0 = factor_exponent as f64 * f.constant_term();
    let gamma_g = green_logsing(spec, g)?.c_density;
    let gamma_h = green_logsing(spec, &gh)?.c_density;
    let rhs = (-(w2 - w) * h0).exp() * gamma_g;
    let rhs_opposite = (-(w - w2) * h0).exp() * gamma_g;
    let rel_error = relative_error(gamma_h, rhs);
    let rel_error_opposite = relative_error(gamma_h, rhs_opposite);
    let matched_exponent = if rel_error <= rel_error_opposite {
        "-(w'-w)"
    } else {
        "-(w-w')"
    };
    Ok(ConformalReport {
        n,
        operator: spec,
        factor_exponent,
        lhs: gamma_h,
        rhs,
        rel_error,
        rhs_opposite,
        rel_error_opposite,
        matched_exponent,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityReport {
    pub n: usize,
    pub gamma_abs: f64,
    /// Every term of `q_{-n}` changes sign under `ξ ↦ -ξ`.
    pub parity_ok: bool,
    pub terms_checked: usize,
}

/// Odd-dimensional vanishing of the Yamabe Green singularity.
pub fn parity_vanishing_check(spec: OperatorSpec, g: &MetricJet) -> Result<ParityReport> {
    let n = g.dim();
    if n % 2 == 0 {
        return Err(Error::Input(format!("parity check needs an odd dimension, got {n}")));
    }
    if spec.kind != OperatorKind::Yamabe {
        return Err(Error::Input(format!("parity check is defined for the Yamabe operator, got {spec}")));
    }
    let comp = green_logsing_detailed(spec, g)?;
    let q_n = comp
        .parametrix
        .part(-(n as i32))
        .ok_or(Error::MissingDegree(-(n as i32)))?;
    Ok(ParityReport {
        n,
        gamma_abs: comp.logsing.scalar_invariant.abs(),
        parity_ok: q_n.has_degree_parity() && q_n.degree() % 2 != 0,
        terms_checked: q_n.len(),
    })
}
