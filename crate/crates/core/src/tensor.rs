//! Tensor calculus on metric jets: Levi-Civita connection, curvature,
//! covariant derivatives, complete contractions and the named scalar
//! invariants of weights 2 and 3.
//!
//! Conventions:
//! - `R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_[X,Y]` and `R_ijkl = ⟨R(∂_i, ∂_j) ∂_k, ∂_l⟩`,
//!   so the unit sphere has `R_ijkl = g_il g_jk - g_ik g_jl` and `κ = n(n-1)`;
//! - `ρ_jk = g^{il} R_ijkl`, `κ = g^{jk} ρ_jk`;
//! - the Laplacian is the positive one, `Δ = -g^{ij} ∇_i ∇_j`;
//! - a covariant derivative adds its slot in front: `(∇T)_{s a b …} = ∇_s T_{a b …}`.

use std::fmt;

use crate::error::{short, Error, Result};
use crate::jet::ScalarJet;
use crate::metric::MetricJet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Co,
    Contra,
}

/// Dense tensor of jets, slot 0 most significant in the flat layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorJet {
    n: usize,
    variance: Vec<Variance>,
    entries: Vec<ScalarJet>,
}

impl TensorJet {
    pub fn new(n: usize, variance: Vec<Variance>, entries: Vec<ScalarJet>) -> Result<Self> {
        let want = n.pow(variance.len() as u32);
        if entries.len() != want {
            return Err(Error::SlotMismatch(format!(
                "rank {} tensor in dimension {n} needs {want} entries, got {}",
                variance.len(),
                entries.len()
            )));
        }
        Ok(TensorJet { n, variance, entries })
    }

    pub fn from_fn(n: usize, variance: Vec<Variance>, mut f: impl FnMut(&[usize]) -> ScalarJet) -> Self {
        let rank = variance.len();
        let mut idx = vec![0usize; rank];
        let total = n.pow(rank as u32);
        let mut entries = Vec::with_capacity(total);
        for flat in 0..total {
            decode(flat, n, &mut idx);
            entries.push(f(&idx));
        }
        TensorJet { n, variance, entries }
    }

    pub fn covariant(n: usize, rank: usize, f: impl FnMut(&[usize]) -> ScalarJet) -> Self {
        Self::from_fn(n, vec![Variance::Co; rank], f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn entries(&self) -> &[ScalarJet] {
        &self.entries
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarJet {
        &self.entries[self.flat_index(idx)]
    }

    /// Smallest order among the entries.
    pub fn order(&self) -> usize {
        self.entries.iter().map(|e| e.order()).min().unwrap_or(0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        TensorJet {
            n: self.n,
            variance: self.variance.clone(),
            entries: self.entries.iter().map(|e| e.truncate(order)).collect(),
        }
    }

    /// Values at the base point.
    pub fn constant_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.constant_term()).collect()
    }

    /// Largest coefficient magnitude over all entries.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_at_origin(&self) -> f64 {
        self.entries.iter().map(|e| e.constant_term().abs()).fold(0.0, f64::max)
    }

    /// Applies a metric factor on one slot, flipping its variance.
    /// `factor` is `g^{ab}` when raising, `g_ab` when lowering.
    fn reindex_slot(&self, slot: usize, factor: &[ScalarJet], to: Variance) -> Self {
        let n = self.n;
        let rank = self.rank();
        let order = self.order().min(factor.iter().map(|f| f.order()).min().unwrap_or(0));
        let mut variance = self.variance.clone();
        variance[slot] = to;
        let mut idx = vec![0usize; rank];
        let mut src = vec![0usize; rank];
        let entries = (0..self.entries.len())
            .map(|flat| {
                decode(flat, n, &mut idx);
                src.copy_from_slice(&idx);
                let mut acc = ScalarJet::zero(n, order);
                for b in 0..n {
                    src[slot] = b;
                    let (f, e) = (&factor[idx[slot] * n + b], &self.entries[self.flat_index(&src)]);
                    if !f.is_zero() && !e.is_zero() {
                        acc.add_product(f, e, 1.0);
                    }
                }
                acc
            })
            .collect();
        TensorJet { n, variance, entries }
    }

    pub fn raise(&self, slot: usize, ginv: &[ScalarJet]) -> Self {
        self.reindex_slot(slot, ginv, Variance::Contra)
    }

    pub fn lower(&self, slot: usize, g: &[ScalarJet]) -> Self {
        self.reindex_slot(slot, g, Variance::Co)
    }
}

fn decode(mut flat: usize, n: usize, idx: &mut [usize]) {
    for p in (0..idx.len()).rev() {
        idx[p] = flat % n;
        flat /= n;
    }
}

/// Metric data shared by the curvature computations.
pub struct Geometry {
    pub g: MetricJet,
    pub ginv: Vec<ScalarJet>,
    /// `Γ^k_ij` stored as `[k][i][j]`.
    pub christoffel: TensorJet,
}

impl Geometry {
    pub fn new(g: &MetricJet) -> Result<Self> {
        let n = g.dim();
        if g.order() < 1 {
            return Err(short("Christoffel symbols (metric jet)", 1, g.order()));
        }
        let ginv = g.inverse_entries()?;
        let mut dg = Vec::with_capacity(n * n * n);
        for s in 0..n {
            for e in g.entries() {
                dg.push(e.diff(s)?);
            }
        }
        let d = |s: usize, i: usize, j: usize| &dg[s * n * n + i * n + j];
        let order = g.order() - 1;
        // first kind, last index lowered: Γ_{ij,l}
        let first: Vec<ScalarJet> = (0..n * n * n)
            .map(|f| {
                let (i, j, l) = (f / (n * n), (f / n) % n, f % n);
                let mut acc = d(i, j, l) + d(j, i, l);
                acc.add_scaled(d(l, i, j), -1.0);
                acc.scale_real(0.5)
            })
            .collect();
        let christoffel = TensorJet::from_fn(n, vec![Variance::Contra, Variance::Co, Variance::Co], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            let mut acc = ScalarJet::zero(n, order);
            for l in 0..n {
                acc.add_product(&ginv[k * n + l], &first[i * n * n + j * n + l], 1.0);
            }
            acc
        });
        Ok(Geometry {
            g: g.clone(),
            ginv,
            christoffel,
        })
    }

    fn gamma(&self, k: usize, i: usize, j: usize) -> &ScalarJet {
        let n = self.g.dim();
        &self.christoffel.entries[k * n * n + i * n + j]
    }

    /// `R_ijkl`, all covariant.
    pub fn riemann(&self) -> Result<TensorJet> {
        let n = self.g.dim();
        if self.g.order() < 2 {
            return Err(short("Riemann tensor (metric jet)", 2, self.g.order()));
        }
        let order = self.g.order() - 2;
        let mut dgamma = Vec::with_capacity(n * n * n * n);
        for s in 0..n {
            for e in &self.christoffel.entries {
                dgamma.push(e.diff(s)?);
            }
        }
        let dga = |s: usize, m: usize, i: usize, j: usize| &dgamma[((s * n + m) * n + i) * n + j];
        // R^m_ijk = ∂_i Γ^m_jk - ∂_j Γ^m_ik + Γ^p_jk Γ^m_ip - Γ^p_ik Γ^m_jp
        let mixed = TensorJet::from_fn(n, vec![Variance::Contra, Variance::Co, Variance::Co, Variance::Co], |ix| {
            let (m, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = dga(i, m, j, k).truncate(order);
            acc.add_scaled(dga(j, m, i, k), -1.0);
            for p in 0..n {
                acc.add_product(self.gamma(p, j, k), self.gamma(m, i, p), 1.0);
                acc.add_product(self.gamma(p, i, k), self.gamma(m, j, p), -1.0);
            }
            acc
        });
        Ok(TensorJet::covariant(n, 4, |ix| {
            let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = ScalarJet::zero(n, order);
            for m in 0..n {
                acc.add_product(self.g.get(l, m), mixed.get(&[m, i, j, k]), 1.0);
            }
            acc
        }))
    }

    /// `∇T` with the new covariant slot first.
    pub fn covariant_derivative(&self, t: &TensorJet) -> Result<TensorJet> {
        let n = self.g.dim();
        if t.dim() != n {
            return Err(Error::DimensionMismatch { left: t.dim(), right: n });
        }
        if t.order() < 1 {
            return Err(short("covariant derivative (tensor jet)", 1, t.order()));
        }
        let order = t.order() - 1;
        let mut partials = Vec::with_capacity(n);
        for s in 0..n {
            let d: Result<Vec<ScalarJet>> = t.entries.iter().map(|e| e.diff(s)).collect();
            partials.push(d?);
        }
        let rank = t.rank();
        let mut variance = vec![Variance::Co];
        variance.extend_from_slice(&t.variance);
        let mut src = vec![0usize; rank];
        Ok(TensorJet::from_fn(n, variance, |ix| {
            let s = ix[0];
            let rest = &ix[1..];
            let mut acc = partials[s][t.flat_index(rest)].truncate(order);
            for p in 0..rank {
                src.copy_from_slice(rest);
                for c in 0..n {
                    src[p] = c;
                    let te = &t.entries[t.flat_index(&src)];
                    match t.variance[p] {
                        Variance::Co => acc.add_product(self.gamma(c, s, rest[p]), te, -1.0),
                        Variance::Contra => acc.add_product(self.gamma(rest[p], s, c), te, 1.0),
                    }
                }
            }
            acc
        }))
    }
}

/// `Γ^k_ij` of the Levi-Civita connection, stored `[k][i][j]`.
pub fn christoffel(g: &MetricJet) -> Result<TensorJet> {
    Ok(Geometry::new(g)?.christoffel)
}

pub fn riemann(g: &MetricJet) -> Result<TensorJet> {
    Geometry::new(g)?.riemann()
}

/// Ricci tensor and scalar curvature.
pub fn ricci_scalar(g: &MetricJet) -> Result<(TensorJet, ScalarJet)> {
    let geo = Geometry::new(g)?;
    let r = geo.riemann()?;
    Ok(ricci_from(&geo, &r))
}

fn ricci_from(geo: &Geometry, r: &TensorJet) -> (TensorJet, ScalarJet) {
    let n = geo.g.dim();
    let order = r.order();
    let ricci = TensorJet::covariant(n, 2, |ix| {
        let (j, k) = (ix[0], ix[1]);
        let mut acc = ScalarJet::zero(n, order);
        for i in 0..n {
            for l in 0..n {
                acc.add_product(&geo.ginv[i * n + l], r.get(&[i, j, k, l]), 1.0);
            }
        }
        acc
    });
    let mut kappa = ScalarJet::zero(n, order);
    for j in 0..n {
        for k in 0..n {
            kappa.add_product(&geo.ginv[j * n + k], ricci.get(&[j, k]), 1.0);
        }
    }
    (ricci, kappa)
}

pub fn covariant_derivative(t: &TensorJet, g: &MetricJet) -> Result<TensorJet> {
    let geo = Geometry::new(&g.truncate(t.order() + 1))?;
    geo.covariant_derivative(t)
}

/// One slot of one factor in a complete contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Slot {
    pub tensor: usize,
    pub slot: usize,
}

pub const fn slot(tensor: usize, slot: usize) -> Slot {
    Slot { tensor, slot }
}

/// Complete contraction of a product of tensors. Each pair in `pairing` is
/// summed over; pairs of equal variance get a metric factor. The contraction
/// folds the factors left to right.
pub fn contract_full(tensors: &[&TensorJet], pairing: &[(Slot, Slot)], g: &MetricJet) -> Result<ScalarJet> {
    let n = g.dim();
    check_pairing(tensors, pairing, n)?;
    let order = tensors.iter().map(|t| t.order()).min().unwrap_or(0).min(g.order());
    let mut owned: Vec<TensorJet> = tensors.iter().map(|t| t.truncate(order)).collect();
    let mut ginv: Option<Vec<ScalarJet>> = None;
    for (a, b) in pairing {
        let va = owned[a.tensor].variance[a.slot];
        let vb = owned[b.tensor].variance[b.slot];
        if va == vb {
            let t = &owned[a.tensor];
            owned[a.tensor] = match va {
                Variance::Co => {
                    if ginv.is_none() {
                        let inv = g.truncate(order).inverse_entries()?;
                        ginv = Some(inv);
                    }
                    t.raise(a.slot, ginv.as_ref().unwrap())
                }
                Variance::Contra => {
                    let lower: Vec<ScalarJet> = g.entries().iter().map(|e| e.truncate(order)).collect();
                    t.lower(a.slot, &lower)
                }
            };
        }
    }

    // label every slot by its pair id
    let mut labels: Vec<Vec<usize>> = owned.iter().map(|t| vec![usize::MAX; t.rank()]).collect();
    for (p, (a, b)) in pairing.iter().enumerate() {
        labels[a.tensor][a.slot] = p;
        labels[b.tensor][b.slot] = p;
    }
    let mut current = Labelled {
        tensor: owned[0].clone(),
        labels: labels[0].clone(),
    }
    .self_trace(n);
    for (t, l) in owned.iter().zip(&labels).skip(1) {
        let next = Labelled {
            tensor: t.clone(),
            labels: l.clone(),
        }
        .self_trace(n);
        current = current.contract(&next, n);
    }
    debug_assert_eq!(current.tensor.rank(), 0);
    Ok(current.tensor.entries[0].clone())
}

fn check_pairing(tensors: &[&TensorJet], pairing: &[(Slot, Slot)], n: usize) -> Result<()> {
    if tensors.is_empty() {
        return Err(Error::SlotMismatch("no tensors to contract".into()));
    }
    let mut seen: Vec<Vec<bool>> = tensors.iter().map(|t| vec![false; t.rank()]).collect();
    for s in pairing.iter().flat_map(|(a, b)| [a, b]) {
        let t = tensors
            .get(s.tensor)
            .ok_or_else(|| Error::SlotMismatch(format!("no tensor {}", s.tensor)))?;
        if t.dim() != n {
            return Err(Error::DimensionMismatch { left: t.dim(), right: n });
        }
        if s.slot >= t.rank() || seen[s.tensor][s.slot] {
            return Err(Error::SlotMismatch(format!(
                "slot {} of tensor {} missing or used twice",
                s.slot, s.tensor
            )));
        }
        seen[s.tensor][s.slot] = true;
    }
    if seen.iter().flatten().any(|b| !b) {
        return Err(Error::SlotMismatch("pairing leaves free slots".into()));
    }
    Ok(())
}

struct Labelled {
    tensor: TensorJet,
    labels: Vec<usize>,
}

impl Labelled {
    /// Traces out labels that occur twice within this factor.
    fn self_trace(self, n: usize) -> Self {
        let mut me = self;
        loop {
            let dup = (0..me.labels.len()).find_map(|a| {
                (a + 1..me.labels.len())
                    .find(|&b| me.labels[a] == me.labels[b])
                    .map(|b| (a, b))
            });
            let Some((a, b)) = dup else { return me };
            let keep: Vec<usize> = (0..me.labels.len()).filter(|&p| p != a && p != b).collect();
            let order = me.tensor.order();
            let variance = keep.iter().map(|&p| me.tensor.variance[p]).collect();
            let mut src = vec![0usize; me.labels.len()];
            let t = &me.tensor;
            let tensor = TensorJet::from_fn(n, variance, |ix| {
                for (q, &p) in keep.iter().enumerate() {
                    src[p] = ix[q];
                }
                let mut acc = ScalarJet::zero(n, order);
                for c in 0..n {
                    src[a] = c;
                    src[b] = c;
                    acc.add_scaled(t.get(&src), 1.0);
                }
                acc
            });
            let labels = keep.iter().map(|&p| me.labels[p]).collect();
            me = Labelled { tensor, labels };
        }
    }

    fn contract(&self, other: &Labelled, n: usize) -> Labelled {
        let shared: Vec<usize> = self
            .labels
            .iter()
            .copied()
            .filter(|l| other.labels.contains(l))
            .collect();
        let free_a: Vec<usize> = (0..self.labels.len())
            .filter(|&p| !shared.contains(&self.labels[p]))
            .collect();
        let free_b: Vec<usize> = (0..other.labels.len())
            .filter(|&p| !shared.contains(&other.labels[p]))
            .collect();
        let order = self.tensor.order().min(other.tensor.order());
        let mut variance: Vec<Variance> = free_a.iter().map(|&p| self.tensor.variance[p]).collect();
        variance.extend(free_b.iter().map(|&p| other.tensor.variance[p]));
        let mut labels: Vec<usize> = free_a.iter().map(|&p| self.labels[p]).collect();
        labels.extend(free_b.iter().map(|&p| other.labels[p]));

        let pos_a: Vec<usize> = shared
            .iter()
            .map(|l| self.labels.iter().position(|x| x == l).unwrap())
            .collect();
        let pos_b: Vec<usize> = shared
            .iter()
            .map(|l| other.labels.iter().position(|x| x == l).unwrap())
            .collect();
        let mut ia = vec![0usize; self.labels.len()];
        let mut ib = vec![0usize; other.labels.len()];
        let mut sh = vec![0usize; shared.len()];
        let inner = n.pow(shared.len() as u32);
        let tensor = TensorJet::from_fn(n, variance, |ix| {
            for (q, &p) in free_a.iter().enumerate() {
                ia[p] = ix[q];
            }
            for (q, &p) in free_b.iter().enumerate() {
                ib[p] = ix[free_a.len() + q];
            }
            let mut acc = ScalarJet::zero(n, order);
            for flat in 0..inner {
                decode(flat, n, &mut sh);
                for (q, &v) in sh.iter().enumerate() {
                    ia[pos_a[q]] = v;
                    ib[pos_b[q]] = v;
                }
                let (x, y) = (self.tensor.get(&ia), other.tensor.get(&ib));
                if !x.is_zero() && !y.is_zero() {
                    acc.add_product(x, y, 1.0);
                }
            }
            acc
        });
        Labelled { tensor, labels }
    }
}

/// Named scalar invariants with their weights, `I(t g) = t^{-w} I(g)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantName {
    RiemannNormSq,
    RicciNormSq,
    ScalarSq,
    LaplacianScalar,
    WeylNormSq,
    WeylCubicA,
    WeylCubicB,
    FeffermanGrahamPhi,
}

impl InvariantName {
    pub const ALL: [InvariantName; 8] = [
        InvariantName::RiemannNormSq,
        InvariantName::RicciNormSq,
        InvariantName::ScalarSq,
        InvariantName::LaplacianScalar,
        InvariantName::WeylNormSq,
        InvariantName::WeylCubicA,
        InvariantName::WeylCubicB,
        InvariantName::FeffermanGrahamPhi,
    ];

    pub fn weight(self) -> i32 {
        use InvariantName::*;
        match self {
            RiemannNormSq | RicciNormSq | ScalarSq | LaplacianScalar | WeylNormSq => 2,
            WeylCubicA | WeylCubicB | FeffermanGrahamPhi => 3,
        }
    }

    pub fn label(self) -> &'static str {
        use InvariantName::*;
        match self {
            RiemannNormSq => "|R|^2",
            RicciNormSq => "|Ric|^2",
            ScalarSq => "kappa^2",
            LaplacianScalar => "Delta kappa",
            WeylNormSq => "|W|^2",
            WeylCubicA => "W3a",
            WeylCubicB => "W3b",
            FeffermanGrahamPhi => "Phi",
        }
    }
}

impl fmt::Display for InvariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantValue {
    pub name: InvariantName,
    pub weight: i32,
    pub value: f64,
}

impl InvariantValue {
    pub fn new(name: InvariantName, value: f64) -> Self {
        InvariantValue {
            name,
            weight: name.weight(),
            value,
        }
    }
}

const R_NORM: [(Slot, Slot); 4] = [
    (slot(0, 0), slot(1, 0)),
    (slot(0, 1), slot(1, 1)),
    (slot(0, 2), slot(1, 2)),
    (slot(0, 3), slot(1, 3)),
];

/// `W_ij^kl W_lk^pq W_pq^ij`
pub const WEYL_CUBIC_A: [(Slot, Slot); 6] = [
    (slot(0, 0), slot(2, 2)),
    (slot(0, 1), slot(2, 3)),
    (slot(0, 2), slot(1, 1)),
    (slot(0, 3), slot(1, 0)),
    (slot(1, 2), slot(2, 0)),
    (slot(1, 3), slot(2, 1)),
];

/// `W_i^jk_l W^i_pk^q W_j^pl_q`
pub const WEYL_CUBIC_B: [(Slot, Slot); 6] = [
    (slot(0, 0), slot(1, 0)),
    (slot(0, 1), slot(2, 0)),
    (slot(0, 2), slot(1, 2)),
    (slot(0, 3), slot(2, 2)),
    (slot(1, 1), slot(2, 1)),
    (slot(1, 3), slot(2, 3)),
];

fn full_norm_pairs(rank: usize) -> Vec<(Slot, Slot)> {
    (0..rank).map(|s| (slot(0, s), slot(1, s))).collect()
}

fn value_at_origin(tensors: &[&TensorJet], pairing: &[(Slot, Slot)], g: &MetricJet) -> Result<f64> {
    let g0 = g.truncate(0);
    let t0: Vec<TensorJet> = tensors.iter().map(|t| t.truncate(0)).collect();
    let refs: Vec<&TensorJet> = t0.iter().collect();
    Ok(contract_full(&refs, pairing, &g0)?.constant_term())
}

/// `|R|²`, `|ρ|²`, `κ²` and `Δκ` at the base point.
pub fn weight2_invariants(g: &MetricJet) -> Result<Vec<InvariantValue>> {
    if g.order() < 4 {
        return Err(short("weight-2 invariants (metric jet)", 4, g.order()));
    }
    let g = g.truncate(4);
    let n = g.dim();
    let geo = Geometry::new(&g)?;
    let r = geo.riemann()?;
    let (ricci, kappa) = ricci_from(&geo, &r);
    let rr = value_at_origin(&[&r, &r], &R_NORM, &g)?;
    let rho = value_at_origin(&[&ricci, &ricci], &full_norm_pairs(2), &g)?;
    let k0 = kappa.constant_term();
    // Δκ = -g^{ij} (∂_i ∂_j κ - Γ^k_ij ∂_k κ)
    let mut lap = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut h = kappa.diff(i)?.diff(j)?.constant_term();
            for k in 0..n {
                h -= geo.gamma(k, i, j).constant_term() * kappa.diff(k)?.constant_term();
            }
            lap -= geo.ginv[i * n + j].constant_term() * h;
        }
    }
    Ok(vec![
        InvariantValue::new(InvariantName::RiemannNormSq, rr),
        InvariantValue::new(InvariantName::RicciNormSq, rho),
        InvariantValue::new(InvariantName::ScalarSq, k0 * k0),
        InvariantValue::new(InvariantName::LaplacianScalar, lap),
    ])
}

/// Weyl and Schouten tensors from an already computed geometry.
fn weyl_schouten_from(geo: &Geometry, r: &TensorJet) -> (TensorJet, TensorJet) {
    let n = geo.g.dim();
    let (ricci, kappa) = ricci_from(geo, r);
    let order = r.order();
    let g = |i: usize, j: usize| geo.g.get(i, j).truncate(order);
    let c = 1.0 / (n as f64 - 2.0);
    let kc = kappa.scale_real(1.0 / (2.0 * (n as f64 - 1.0)));
    let schouten = TensorJet::covariant(n, 2, |ix| {
        let mut p = ricci.get(ix).clone();
        p.add_product(&kc, &g(ix[0], ix[1]), -1.0);
        p.scale_real(c)
    });
    let weyl = TensorJet::covariant(n, 4, |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut w = r.get(ix).clone();
        w.add_product(schouten.get(&[j, k]), &g(i, l), -1.0);
        w.add_product(schouten.get(&[i, l]), &g(j, k), -1.0);
        w.add_product(schouten.get(&[j, l]), &g(i, k), 1.0);
        w.add_product(schouten.get(&[i, k]), &g(j, l), 1.0);
        w
    });
    (weyl, schouten)
}

/// `(W_ijkl, P_jk)`.
pub fn weyl_schouten(g: &MetricJet) -> Result<(TensorJet, TensorJet)> {
    if g.dim() < 3 {
        return Err(Error::DimensionTooSmall {
            what: "Weyl and Schouten tensors",
            n: g.dim(),
            min: 3,
        });
    }
    let geo = Geometry::new(g)?;
    let r = geo.riemann()?;
    Ok(weyl_schouten_from(&geo, &r))
}

/// `|W|²` at the base point.
pub fn weyl_norm_sq(g: &MetricJet) -> Result<InvariantValue> {
    let (w, _) = weyl_schouten(&g.truncate(2))?;
    let v = value_at_origin(&[&w, &w], &R_NORM, g)?;
    Ok(InvariantValue::new(InvariantName::WeylNormSq, v))
}

/// Cotton tensor, the tensors `V` and `U`, and the invariant
/// `Φ = |V|² + 16 ⟨W, U⟩ + 16 |C|²`.
#[derive(Clone, Debug)]
pub struct ConformalTensors {
    pub weyl: TensorJet,
    pub schouten: TensorJet,
    pub cotton: TensorJet,
    pub v: TensorJet,
    pub u: TensorJet,
    pub phi: InvariantValue,
}

pub fn cotton_v_u_phi(g: &MetricJet) -> Result<ConformalTensors> {
    let n = g.dim();
    if n < 4 {
        return Err(Error::DimensionTooSmall {
            what: "Cotton tensor and Φ",
            n,
            min: 4,
        });
    }
    if g.order() < 4 {
        return Err(short("Φ invariant (metric jet)", 4, g.order()));
    }
    let g = g.truncate(4);
    let geo = Geometry::new(&g)?;
    let r = geo.riemann()?;
    let (weyl, schouten) = weyl_schouten_from(&geo, &r);
    let dp = geo.covariant_derivative(&schouten)?;
    // C_jkl = ∇_l P_jk - ∇_k P_jl
    let cotton = TensorJet::covariant(n, 3, |ix| {
        let (j, k, l) = (ix[0], ix[1], ix[2]);
        dp.get(&[l, j, k]) - dp.get(&[k, j, l])
    });
    let dw = geo.covariant_derivative(&weyl.truncate(1))?;
    let dc = geo.covariant_derivative(&cotton)?;
    let order = 0;
    let gl = |i: usize, j: usize| g.get(i, j).truncate(order);
    let v = TensorJet::covariant(n, 5, |ix| {
        let (s, i, j, k, l) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut acc = dw.get(ix).truncate(order);
        acc.add_product(&gl(i, s), cotton.get(&[j, k, l]), -1.0);
        acc.add_product(&gl(j, s), cotton.get(&[i, k, l]), 1.0);
        acc.add_product(&gl(k, s), cotton.get(&[l, i, j]), -1.0);
        acc.add_product(&gl(l, s), cotton.get(&[k, i, j]), 1.0);
        acc
    });
    let ginv0: Vec<ScalarJet> = geo.ginv.iter().map(|e| e.truncate(order)).collect();
    let u = TensorJet::covariant(n, 4, |ix| {
        let (s, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = dc.get(ix).truncate(order);
        for p in 0..n {
            for q in 0..n {
                let pq = &ginv0[p * n + q];
                if pq.is_zero() {
                    continue;
                }
                let a = pq * &schouten.get(&[s, p]).truncate(order);
                acc.add_product(&a, weyl.get(&[q, j, k, l]), 1.0);
            }
        }
        acc
    });
    let vv = value_at_origin(&[&v, &v], &full_norm_pairs(5), &g)?;
    let wu = value_at_origin(&[&weyl, &u], &full_norm_pairs(4), &g)?;
    let cc = value_at_origin(&[&cotton, &cotton], &full_norm_pairs(3), &g)?;
    let phi = InvariantValue::new(InvariantName::FeffermanGrahamPhi, vv + 16.0 * wu + 16.0 * cc);
    Ok(ConformalTensors {
        weyl,
        schouten,
        cotton,
        v,
        u,
        phi,
    })
}

/// The two cubic Weyl contractions at the base point.
pub fn weight3_weyl_invariants(g: &MetricJet) -> Result<Vec<InvariantValue>> {
    if g.dim() < 4 {
        return Err(Error::DimensionTooSmall {
            what: "cubic Weyl invariants",
            n: g.dim(),
            min: 4,
        });
    }
    if g.order() < 2 {
        return Err(short("cubic Weyl invariants (metric jet)", 2, g.order()));
    }
    let (w, _) = weyl_schouten(&g.truncate(2))?;
    let a = value_at_origin(&[&w, &w, &w], &WEYL_CUBIC_A, g)?;
    let b = value_at_origin(&[&w, &w, &w], &WEYL_CUBIC_B, g)?;
    Ok(vec![
        InvariantValue::new(InvariantName::WeylCubicA, a),
        InvariantValue::new(InvariantName::WeylCubicB, b),
    ])
}

/// Every registered invariant that the metric's dimension and order allow.
pub fn all_invariants(g: &MetricJet) -> Result<Vec<InvariantValue>> {
    let mut out = weight2_invariants(g)?;
    if g.dim() >= 3 {
        out.push(weyl_norm_sq(g)?);
    }
    if g.dim() >= 4 {
        out.extend(weight3_weyl_invariants(g)?);
        out.push(cotton_v_u_phi(g)?.phi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{model_metric, naive_contract, ModelKind};

    fn random(n: usize, seed: u64, order: usize) -> MetricJet {
        model_metric(&ModelKind::RandomPolynomial { seed, magnitude: 0.2, order }, n)
            .unwrap()
            .metric
    }

    fn sphere(n: usize, order: usize) -> MetricJet {
        model_metric(&ModelKind::Sphere { order }, n).unwrap().metric
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let g = MetricJet::identity(4, 4);
        assert_eq!(christoffel(&g).unwrap().max_abs(), 0.0);
        assert_eq!(riemann(&g).unwrap().max_abs(), 0.0);
        let (rho, k) = ricci_scalar(&g).unwrap();
        assert_eq!(rho.max_abs(), 0.0);
        assert!(k.is_zero());
        for inv in weight2_invariants(&g).unwrap() {
            assert_eq!(inv.value, 0.0);
        }
    }

    #[test]
    fn conformally_flat_christoffel() {
        // e^{2 ε x1} δ: Γ^1_11(0) = ε
        let n = 3;
        let eps = 0.37;
        let f = ScalarJet::variable(n, 2, 0).scale_real(eps);
        let g = MetricJet::identity(n, 2).conformal_rescale(&f, 2).unwrap();
        let gam = christoffel(&g).unwrap();
        assert!((gam.get(&[0, 0, 0]).constant_term() - eps).abs() < 1e-15);
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let g = random(4, 11, 3);
        let gam = christoffel(&g).unwrap();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let d = gam.get(&[k, i, j]) - gam.get(&[k, j, i]);
                    assert!(d.max_abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn sphere_patch_has_constant_curvature_one() {
        for n in [2usize, 3, 4] {
            let g = sphere(n, 2);
            let r = riemann(&g).unwrap();
            let g0 = g.value_at_origin();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let want = g0[(i, l)] * g0[(j, k)] - g0[(i, k)] * g0[(j, l)];
                            let got = r.get(&[i, j, k, l]).constant_term();
                            assert!((got - want).abs() < 1e-12, "n={n} R{i}{j}{k}{l}: {got} vs {want}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_curvature_examples() {
        let (_, k) = ricci_scalar(&sphere(6, 2)).unwrap();
        assert!((k.constant_term() - 30.0).abs() < 1e-11);

        // round S² patch times flat R²
        let s2 = sphere(2, 2);
        let n = 4;
        let lift = |j: &ScalarJet| {
            let terms: Vec<(Vec<u8>, f64)> = j.terms().map(|(e, c)| (vec![e[0], e[1], 0, 0], c)).collect();
            ScalarJet::from_terms(n, 2, &terms).unwrap()
        };
        let g = MetricJet::from_fn(n, |i, j| match (i < 2, j < 2) {
            (true, true) => lift(s2.get(i, j)),
            _ => ScalarJet::constant(n, 2, if i == j { 1.0 } else { 0.0 }),
        })
        .unwrap();
        let (_, k) = ricci_scalar(&g).unwrap();
        assert!((k.constant_term() - 2.0).abs() < 1e-12);
    }

    fn assert_riemann_symmetries(g: &MetricJet, tol: f64) {
        let n = g.dim();
        let r = riemann(g).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let e = r.get(&[i, j, k, l]);
                        assert!((e + r.get(&[j, i, k, l])).max_abs() < tol);
                        assert!((e + r.get(&[i, j, l, k])).max_abs() < tol);
                        assert!((e - r.get(&[k, l, i, j])).max_abs() < tol);
                        let bianchi = &(e + r.get(&[j, k, i, l])) + r.get(&[k, i, j, l]);
                        assert!(bianchi.max_abs() < tol);
                    }
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries_random_jets() {
        for n in 3..=5 {
            for seed in 0..3 {
                assert_riemann_symmetries(&random(n, seed, 3), 1e-12);
            }
        }
    }

    #[test]
    fn metric_is_parallel() {
        let g = random(4, 5, 3);
        let gt = TensorJet::covariant(4, 2, |ix| g.get(ix[0], ix[1]).clone());
        let dg = covariant_derivative(&gt, &g).unwrap();
        assert!(dg.max_abs() < 1e-12);

        let flat = MetricJet::identity(3, 3);
        let f = ScalarJet::variable(3, 3, 0).exp();
        let t = TensorJet::covariant(3, 1, |ix| if ix[0] == 1 { f.clone() } else { ScalarJet::zero(3, 3) });
        let d = covariant_derivative(&t, &flat).unwrap();
        assert_eq!(d.get(&[0, 1]), &f.diff(0).unwrap());
    }

    #[test]
    fn second_bianchi_identity() {
        let g = random(4, 9, 4);
        let geo = Geometry::new(&g).unwrap();
        let r = geo.riemann().unwrap();
        let dr = geo.covariant_derivative(&r).unwrap();
        let n = 4;
        for s in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let sum = &(dr.get(&[s, i, j, k, l]) + dr.get(&[i, j, s, k, l])) + dr.get(&[j, s, i, k, l]);
                            assert!(sum.max_abs() < 1e-11);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn contractions_match_closed_forms() {
        let n = 4;
        let g = MetricJet::identity(n, 2);
        let gt = TensorJet::covariant(n, 2, |ix| g.get(ix[0], ix[1]).clone());
        let ginv = g.inverse().unwrap();
        let tr = contract_full(&[&gt, &ginv], &[(slot(0, 0), slot(1, 0)), (slot(0, 1), slot(1, 1))], &g).unwrap();
        assert_eq!(tr, ScalarJet::constant(n, 2, 4.0));

        let w2 = weight2_invariants(&sphere(4, 4)).unwrap();
        let want = [24.0, 36.0, 144.0, 0.0];
        for (v, w) in w2.iter().zip(want) {
            assert!((v.value - w).abs() < 1e-9, "{}: {} vs {w}", v.name, v.value);
        }
    }

    #[test]
    fn contraction_pairing_errors() {
        let g = MetricJet::identity(3, 1);
        let t = TensorJet::covariant(3, 2, |_| ScalarJet::zero(3, 1));
        let e = contract_full(&[&t], &[(slot(0, 0), slot(0, 0))], &g).unwrap_err();
        assert!(matches!(e, Error::SlotMismatch(_)));
        let e = contract_full(&[&t, &t], &[(slot(0, 0), slot(1, 0))], &g).unwrap_err();
        assert!(matches!(e, Error::SlotMismatch(_)));
    }

    #[test]
    fn contract_full_agrees_with_naive_loops() {
        for seed in 0..4 {
            let g = random(4, seed, 2);
            let r = riemann(&g).unwrap();
            let fast = contract_full(&[&r, &r], &R_NORM, &g).unwrap().constant_term();
            let slow = naive_contract(&[&r, &r], &R_NORM, &g).unwrap();
            assert!((fast - slow).abs() < 1e-12 * (1.0 + slow.abs()));
        }
    }

    #[test]
    fn weyl_vanishes_for_conformally_flat() {
        let n = 5;
        let x = |i| ScalarJet::variable(n, 3, i);
        let f = &(&x(0).scale_real(0.3) + &(&x(1) * &x(2)).scale_real(0.5)) + &(&x(3) * &x(3)).scale_real(-0.2);
        let g = MetricJet::identity(n, 3).conformal_rescale(&f, 2).unwrap();
        let (w, _) = weyl_schouten(&g).unwrap();
        assert!(w.max_abs() < 1e-11);
        let (w, p) = weyl_schouten(&MetricJet::identity(n, 2)).unwrap();
        assert_eq!(w.max_abs() + p.max_abs(), 0.0);
    }

    #[test]
    fn weyl_is_trace_free() {
        let n = 6;
        let g = random(n, 2, 3);
        let (w, _) = weyl_schouten(&g).unwrap();
        let ginv = g.inverse_entries().unwrap();
        for j in 0..n {
            for k in 0..n {
                let mut acc = ScalarJet::zero(n, w.order());
                for i in 0..n {
                    for l in 0..n {
                        acc.add_product(&ginv[i * n + l], w.get(&[i, j, k, l]), 1.0);
                    }
                }
                assert!(acc.max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn weyl_needs_three_dimensions() {
        let e = weyl_schouten(&MetricJet::identity(2, 2)).unwrap_err();
        assert!(matches!(e, Error::DimensionTooSmall { .. }));
    }

    #[test]
    fn phi_flat_and_conformally_flat() {
        let t = cotton_v_u_phi(&MetricJet::identity(4, 4)).unwrap();
        assert_eq!(t.phi.value, 0.0);
        assert_eq!(t.cotton.max_abs() + t.v.max_abs() + t.u.max_abs(), 0.0);

        let n = 4;
        let x = |i| ScalarJet::variable(n, 4, i);
        let f = &(&x(0) * &x(1)).scale_real(0.4) + &(&(&x(2) * &x(2)) * &x(3)).scale_real(0.3);
        let g = MetricJet::identity(n, 4).conformal_rescale(&f, 2).unwrap();
        let t = cotton_v_u_phi(&g).unwrap();
        assert!(t.phi.value.abs() < 1e-9);
        let c = t.cotton.truncate(0);
        let cc = naive_contract(&[&c, &c], &full_norm_pairs(3), &g).unwrap();
        assert!(cc.abs() < 1e-20);
    }

    #[test]
    fn cubic_weyl_flat_and_conformally_flat() {
        for inv in weight3_weyl_invariants(&MetricJet::identity(4, 2)).unwrap() {
            assert_eq!(inv.value, 0.0);
        }
        for inv in weight3_weyl_invariants(&sphere(5, 2)).unwrap() {
            assert!(inv.value.abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_weyl_matches_naive_loops() {
        let g = random(4, 21, 2);
        let (w, _) = weyl_schouten(&g).unwrap();
        let got = weight3_weyl_invariants(&g).unwrap();
        let a = naive_contract(&[&w, &w, &w], &WEYL_CUBIC_A, &g).unwrap();
        let b = naive_contract(&[&w, &w, &w], &WEYL_CUBIC_B, &g).unwrap();
        assert!((got[0].value - a).abs() < 1e-12);
        assert!((got[1].value - b).abs() < 1e-12);
    }

    #[test]
    fn invariants_scale_with_their_weight() {
        let g = random(4, 4, 4);
        let base = all_invariants(&g).unwrap();
        for t in [0.5, 2.0, 3.0] {
            let scaled = all_invariants(&g.scale(t).unwrap()).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                let want = a.value * t.powi(-a.weight);
                assert!((b.value - want).abs() < 1e-10 * (1.0 + want.abs()), "{} t={t}", a.name);
            }
        }
    }
}
