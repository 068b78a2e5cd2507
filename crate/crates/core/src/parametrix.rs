//! Left parametrices of elliptic symbol expansions.
//!
//! With `q_{-m} = p_m^{-1}`, the left parametrix `q ∘ p = 1` is determined
//! part by part from
//!
//! ```text
//! q_{-m-j} = -q_{-m} Σ (1/α!) ∂_ξ^α q_{-m-k} D_x^α p_{m-l},   |α| + k + l = j, k < j.
//! ```
//!
//! Each `q_{-m-k}` is pushed into the pending sums of all later parts as soon
//! as it is known, so `∂_ξ^α q_{-m-k}` is computed once per `α` and reused
//! for every `l`. Only the jet degrees that can still reach the last part are
//! kept: to produce `q_{-m-J}` at the origin, `q_{-m-k}` is needed to order
//! `J - k`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbol::{invert_principal, minus_i_pow, walk_multi_indices, HomogeneousSymbol, SymbolExpansion};

/// Metric jet order that [`crate::logsing::green_logsing`] demands for an
/// operator of order `m` in dimension `n`.
pub fn required_jet_order(m: i32, n: usize) -> Result<usize> {
    if m > n as i32 {
        return Err(Error::Input(format!(
            "operator order {m} exceeds the dimension {n}: there is no degree -{n} part to compute"
        )));
    }
    if m <= 0 || m % 2 != 0 {
        return Err(Error::Input(format!("operator order {m} must be positive and even")));
    }
    Ok(n - m as usize + 2)
}

/// Parametrix parts `q_{-m}, …, q_{target}`; part `j` carries jet order `J - j`
/// where `J = -m - target`.
pub fn parametrix(p: &SymbolExpansion, target_degree: i32) -> Result<SymbolExpansion> {
    let m = p.leading_degree();
    let depth = -m - target_degree;
    if depth < 0 {
        return Err(Error::Input(format!(
            "target degree {target_degree} lies above the parametrix's leading degree {}",
            -m
        )));
    }
    let depth = depth as usize;
    if p.is_principal_only() && depth > 0 {
        return Err(Error::PrincipalOnly(format!(
            "the parametrix down to degree {target_degree} needs {depth} lower-order parts, \
             which a principal-only stub does not have"
        )));
    }
    let pp: Vec<HomogeneousSymbol> = (0..=depth).map(|l| p.part_at(l)).collect::<Result<_>>()?;
    for (l, part) in pp.iter().enumerate() {
        let need = depth - l;
        if !part.is_empty() && part.order() < need {
            return Err(Error::InsufficientJetOrder {
                what: format!("symbol part of degree {}", part.degree()),
                required: need,
                available: part.order(),
            });
        }
    }
    let pp: Vec<HomogeneousSymbol> = pp.iter().enumerate().map(|(l, s)| s.truncate(depth - l)).collect();

    let q0 = invert_principal(&pp[0])?.truncate(depth);
    let form = q0.quad_form().clone();
    let mut pending: Vec<HomogeneousSymbol> = (0..=depth)
        .map(|j| HomogeneousSymbol::zero(&form, -(j as i32)))
        .collect();
    let mut parts: Vec<HomogeneousSymbol> = vec![q0.clone()];
    let minus = Complex64::new(-1.0, 0.0);
    for k in 0..=depth {
        if k > 0 {
            let mut qk = q0.mul_trunc(&pending[k], depth - k)?.scale(minus);
            qk.prune();
            parts.push(qk);
        }
        if k == depth {
            break;
        }
        let qk = parts[k].clone();
        if qk.is_empty() {
            continue;
        }
        for l in 1..=depth - k {
            if !pp[l].is_empty() {
                let term = qk.mul_trunc(&pp[l], depth - k - l)?;
                pending[k + l].add_scaled(&term, Complex64::new(1.0, 0.0))?;
            }
        }
        let budget = depth - k;
        let root = (qk, pp[..=budget].to_vec());
        let mut visit = |_: &[u8], len: usize, fact: f64, st: &(HomogeneousSymbol, Vec<HomogeneousSymbol>), v: usize| {
            // every use below is truncated to these orders, so jets that vanish
            // to their order contribute nothing and can be dropped
            let mut dq = st.0.xi_derivative(v).truncate(budget - len);
            dq.prune();
            if dq.is_empty() {
                return Ok(None);
            }
            let mut dps = Vec::with_capacity(budget - len + 1);
            for l in 0..=budget - len {
                let mut dp = st.1[l].x_derivative(v)?.truncate(budget - len - l);
                dp.prune();
                if !dp.is_empty() {
                    let j = k + len + l;
                    let term = dq.mul_trunc(&dp, depth - j)?.scale(minus_i_pow(len) / fact);
                    pending[j].add_scaled(&term, Complex64::new(1.0, 0.0))?;
                }
                dps.push(dp);
            }
            if dps.iter().all(|d| d.is_empty()) {
                return Ok(None);
            }
            Ok(Some((dq, dps)))
        };
        walk_multi_indices(p.dim(), budget, root, &mut visit)?;
    }
    SymbolExpansion::new(parts, false)
}

/// Largest canonical coefficient among the parts of `r - 1` with degree in
/// `[leading - depth, leading]`. Used for the parametrix self-checks.
pub fn distance_from_identity(r: &SymbolExpansion, depth: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..=depth.min(r.depth()) {
        let mut part = r.parts()[j].clone();
        if j == 0 {
            let one = HomogeneousSymbol::one(part.quad_form());
            part = part.sub(&one)?;
        }
        let v = part.canonical_max_abs();
        worst = worst.max(v);
    }
    Ok(worst)
}
