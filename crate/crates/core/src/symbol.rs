//! Classical homogeneous symbols with jet coefficients.
//!
//! A [`HomogeneousSymbol`] of degree `m` is a finite sum
//! `Σ c_β(x) ξ^β Q(x, ξ)^{-d}` with `|β| - 2d = m`, where `Q` is a quadratic
//! form in `ξ` whose value at the origin is `|ξ|²`. Two flavours of `Q` are
//! supported:
//!
//! - Euclidean, `Q = |ξ|²` independent of `x`;
//! - metric, `Q = g^{ij}(x) ξ_i ξ_j` for a normalized metric jet.
//!
//! Keeping the metric form unexpanded is what makes parametrices in
//! dimension 8 affordable: expanding `(g^{ij} ξ_i ξ_j)^{-1}` around `|ξ|^{-2}`
//! multiplies the number of terms by the number of monomials in `ξ` at every
//! jet degree. Both flavours integrate over the unit sphere identically at
//! the origin, because `Q(0, ξ) = |ξ|²`. [`HomogeneousSymbol::to_euclidean`]
//! converts one into the other, which the tests use as a second route.
//!
//! Since `d` is determined by `β` and the degree, terms are keyed by `β`
//! alone, packed eight bits per coordinate.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{short, Error, Result};
use crate::jet::{ComplexJet, ScalarJet};
use crate::metric::MetricJet;

/// Order given to symbols that are exactly zero: differentiating them never
/// runs out of jet order.
pub const EXACT: usize = 1 << 20;

pub const MAX_DIM: usize = 8;

type Key = u64;

fn pack(beta: &[u8]) -> Key {
    beta.iter().enumerate().fold(0, |k, (i, &b)| k | (b as u64) << (8 * i))
}

#[inline]
fn exponent(key: Key, i: usize) -> u8 {
    (key >> (8 * i)) as u8
}

#[inline]
fn unit(i: usize) -> Key {
    1 << (8 * i)
}

fn key_degree(key: Key, n: usize) -> i32 {
    (0..n).map(|i| exponent(key, i) as i32).sum()
}

fn unpack(key: Key, n: usize) -> Vec<u8> {
    (0..n).map(|i| exponent(key, i)).collect()
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The quadratic form `Q(x, ξ) = A^{ij}(x) ξ_i ξ_j` in the denominators.
pub struct QuadForm {
    n: usize,
    euclidean: bool,
    order: usize,
    a: Vec<ComplexJet>,
    /// `da[s][i * n + j] = ∂_s A^{ij}`
    da: Vec<Vec<ComplexJet>>,
}

impl fmt::Debug for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.euclidean {
            write!(f, "|ξ|²")
        } else {
            write!(f, "g^ij(x) ξ_i ξ_j (n = {}, order {})", self.n, self.order)
        }
    }
}

impl QuadForm {
    pub fn euclidean(n: usize) -> Arc<Self> {
        assert!((1..=MAX_DIM).contains(&n), "symbols support dimensions 1..=8");
        Arc::new(QuadForm {
            n,
            euclidean: true,
            order: EXACT,
            a: Vec::new(),
            da: Vec::new(),
        })
    }

    /// `Q = g^{ij} ξ_i ξ_j` for a normalized metric.
    pub fn from_metric(g: &MetricJet) -> Result<Arc<Self>> {
        let n = g.dim();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::Input(format!("symbols support dimensions 1..=8, got {n}")));
        }
        if !g.is_normalized() {
            return Err(Error::NotNormalized);
        }
        let inv = g.inverse_entries()?;
        let a: Vec<ComplexJet> = inv.iter().map(|e| e.to_complex()).collect();
        let order = g.order();
        let da = if order == 0 {
            Vec::new()
        } else {
            (0..n)
                .map(|s| a.iter().map(|e| e.diff(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Arc::new(QuadForm {
            n,
            euclidean: false,
            order,
            a,
            da,
        }))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_euclidean(&self) -> bool {
        self.euclidean
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Equal as far as both jets reach.
    fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        if Arc::ptr_eq(a, b) {
            return true;
        }
        if a.n != b.n || a.euclidean != b.euclidean {
            return false;
        }
        let order = a.order.min(b.order);
        a.a.iter().zip(&b.a).all(|(x, y)| {
            let k = x.basis().count(order);
            x.coeffs()[..k] == y.coeffs()[..k]
        })
    }

    /// `Q(x, ξ)` at a point.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let n = self.n;
        if self.euclidean {
            return xi.iter().map(|v| v * v).sum();
        }
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += self.a[i * n + j].eval(x).re * xi[i] * xi[j];
            }
        }
        q
    }

    /// `Q^m` as a polynomial in `ξ` (coefficients at jet order `order`).
    fn power(&self, m: usize, order: usize) -> FxHashMap<Key, ComplexJet> {
        let n = self.n;
        let order = order.min(self.order);
        let mut acc: FxHashMap<Key, ComplexJet> = FxHashMap::default();
        let jet_order = if order == EXACT { 0 } else { order };
        acc.insert(0, ComplexJet::constant(n, jet_order, ONE));
        for _ in 0..m {
            let mut next: FxHashMap<Key, ComplexJet> = FxHashMap::default();
            for (&k, c) in &acc {
                for i in 0..n {
                    for j in i..n {
                        let key = k + unit(i) + unit(j);
                        let w = if i == j { 1.0 } else { 2.0 };
                        if self.euclidean {
                            if i != j {
                                continue;
                            }
                            add_into(&mut next, key, c, ONE);
                        } else {
                            let a = &self.a[i * n + j];
                            if a.is_zero() {
                                continue;
                            }
                            let prod = c.mul_trunc(a, order);
                            add_into(&mut next, key, &prod, Complex64::new(w, 0.0));
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }
}

fn add_into(map: &mut FxHashMap<Key, ComplexJet>, key: Key, c: &ComplexJet, s: Complex64) {
    match map.get_mut(&key) {
        Some(e) => e.add_scaled(c, s),
        None => {
            map.insert(key, if s == ONE { c.clone() } else { c.scale(s) });
        }
    }
}

fn add_product_into(map: &mut FxHashMap<Key, ComplexJet>, key: Key, a: &ComplexJet, b: &ComplexJet, s: Complex64, cap: usize) {
    match map.get_mut(&key) {
        Some(e) => e.add_product(a, b, s),
        None => {
            let mut p = a.mul_trunc(b, cap);
            if s != ONE {
                p = p.scale(s);
            }
            map.insert(key, p);
        }
    }
}

/// Homogeneous symbol of a fixed degree.
#[derive(Clone)]
pub struct HomogeneousSymbol {
    n: usize,
    degree: i32,
    q: Arc<QuadForm>,
    order: usize,
    terms: FxHashMap<Key, ComplexJet>,
}

impl fmt::Debug for HomogeneousSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HomogeneousSymbol(degree {}, {} terms, order {}, Q = {:?})", self.degree, self.terms.len(), self.order_label(), self.q)
    }
}

impl HomogeneousSymbol {
    /// The exact zero symbol of the given degree.
    pub fn zero(q: &Arc<QuadForm>, degree: i32) -> Self {
        HomogeneousSymbol {
            n: q.n,
            degree,
            q: Arc::clone(q),
            order: EXACT,
            terms: FxHashMap::default(),
        }
    }

    /// `c(x) ξ^β Q^{-d}` summed over `(β, d, c)`; every term must satisfy
    /// `|β| - 2d = degree`.
    pub fn from_terms(q: &Arc<QuadForm>, degree: i32, terms: Vec<(Vec<u8>, i32, ComplexJet)>) -> Result<Self> {
        let mut s = Self::zero(q, degree);
        for (beta, d, c) in terms {
            if beta.len() != q.n || c.dim() != q.n {
                return Err(Error::DimensionMismatch { left: beta.len().max(c.dim()), right: q.n });
            }
            let b: i32 = beta.iter().map(|&v| v as i32).sum();
            if b - 2 * d != degree {
                return Err(Error::Homogeneity(format!(
                    "term ξ^{beta:?} Q^{} has degree {}, expected {degree}",
                    -d,
                    b - 2 * d
                )));
            }
            s.order = s.order.min(c.order());
            add_into(&mut s.terms, pack(&beta), &c, ONE);
        }
        s.clamp_order();
        Ok(s)
    }

    /// A `ξ`-independent symbol `f(x)`.
    pub fn scalar(q: &Arc<QuadForm>, f: &ComplexJet) -> Self {
        let mut s = Self::zero(q, 0);
        s.order = f.order();
        s.terms.insert(0, f.clone());
        s
    }

    /// The exactly known symbol `1`.
    pub fn one(q: &Arc<QuadForm>) -> Self {
        Self::scalar(q, &ComplexJet::constant(q.n, 0, ONE)).with_exact_order()
    }

    /// `Q^{k}` as a single term (`k` may be negative).
    pub fn q_power(q: &Arc<QuadForm>, k: i32) -> Self {
        let mut s = Self::zero(q, 2 * k);
        let (order, jet_order) = if q.euclidean { (EXACT, 0) } else { (q.order, q.order) };
        s.order = order;
        s.terms.insert(0, ComplexJet::constant(q.n, jet_order, ONE));
        s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn quad_form(&self) -> &Arc<QuadForm> {
        &self.q
    }

    /// Jet order of the coefficients; [`EXACT`] for the zero symbol.
    pub fn order(&self) -> usize {
        self.order
    }

    fn order_label(&self) -> String {
        if self.order == EXACT {
            "exact".into()
        } else {
            self.order.to_string()
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Half-power `d` of the denominator for a given `ξ` exponent.
    fn d_of(&self, key: Key) -> i32 {
        (key_degree(key, self.n) - self.degree) / 2
    }

    /// Terms as `(β, d, coefficient)`, sorted by `β` for reproducible output.
    pub fn terms(&self) -> Vec<(Vec<u8>, i32, &ComplexJet)> {
        let mut keys: Vec<&Key> = self.terms.keys().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| (unpack(*k, self.n), self.d_of(*k), &self.terms[k]))
            .collect()
    }

    fn clamp_order(&mut self) {
        if self.terms.is_empty() {
            self.order = EXACT;
            return;
        }
        if !self.q.euclidean && self.terms.keys().any(|&k| self.d_of(k) != 0) {
            self.order = self.order.min(self.q.order);
        }
        let o = self.order;
        for c in self.terms.values_mut() {
            if c.order() > o {
                *c = c.truncate(o);
            }
        }
    }

    /// An exactly known symbol carries order-zero constant jets. Before it
    /// meets a jet-valued symbol those are padded to `order`.
    fn lifted(&self, order: usize) -> Cow<'_, Self> {
        if self.order != EXACT || order >= EXACT || self.terms.is_empty() {
            return Cow::Borrowed(self);
        }
        let mut s = self.clone();
        s.order = order;
        for c in s.terms.values_mut() {
            let mut padded = ComplexJet::zero(self.n, order);
            let k = c.coeffs().len().min(padded.coeffs().len());
            padded.coeffs_mut()[..k].copy_from_slice(&c.coeffs()[..k]);
            *c = padded;
        }
        Cow::Owned(s)
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let mut s = self.clone();
        s.order = order;
        for c in s.terms.values_mut() {
            *c = c.truncate(order);
        }
        s
    }

    fn check(&self, other: &Self) -> Result<Arc<QuadForm>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        if QuadForm::same(&self.q, &other.q) {
            let q = if other.q.order < self.q.order { &other.q } else { &self.q };
            return Ok(Arc::clone(q));
        }
        // a side without denominators can adopt the other's quadratic form
        let free = |s: &Self| s.terms.keys().all(|&k| s.d_of(k) == 0);
        if free(other) {
            Ok(Arc::clone(&self.q))
        } else if free(self) {
            Ok(Arc::clone(&other.q))
        } else {
            Err(Error::DenominatorMismatch)
        }
    }

    /// Same symbol with `Q` replaced, allowed only when no term has a denominator.
    fn with_form(&self, q: &Arc<QuadForm>) -> Self {
        if Arc::ptr_eq(&self.q, q) {
            return self.clone();
        }
        let mut s = self.clone();
        s.q = Arc::clone(q);
        s.clamp_order();
        s
    }

    /// `self + s·other`.
    pub fn add_scaled(&mut self, other: &Self, s: Complex64) -> Result<()> {
        if other.degree != self.degree {
            return Err(Error::Homogeneity(format!(
                "cannot add degree {} to degree {}",
                other.degree, self.degree
            )));
        }
        if other.terms.is_empty() {
            return Ok(());
        }
        let q = self.check(other)?;
        if !Arc::ptr_eq(&q, &self.q) {
            *self = self.with_form(&q);
        }
        let order = self.order.min(other.order);
        if self.order == EXACT && order < EXACT {
            *self = self.lifted(order).into_owned();
        }
        let other = other.lifted(order);
        for (&k, c) in &other.terms {
            add_into(&mut self.terms, k, c, s);
        }
        self.order = order;
        self.clamp_order();
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut s = self.clone();
        s.add_scaled(other, ONE)?;
        Ok(s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut s = self.clone();
        s.add_scaled(other, -ONE)?;
        Ok(s)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.scale(s);
        }
        out
    }

    /// `∂_{ξ_i}`, degree lowered by one.
    pub fn xi_derivative(&self, i: usize) -> Self {
        let n = self.n;
        let mut out = Self::zero(&self.q, self.degree - 1);
        out.order = self.order;
        for (&k, c) in &self.terms {
            let b = exponent(k, i);
            if b > 0 {
                add_into(&mut out.terms, k - unit(i), c, Complex64::new(b as f64, 0.0));
            }
            let d = self.d_of(k);
            if d != 0 {
                let f = Complex64::new(-2.0 * d as f64, 0.0);
                if self.q.euclidean {
                    add_into(&mut out.terms, k + unit(i), c, f);
                } else {
                    for j in 0..n {
                        let a = &self.q.a[i * n + j];
                        if !a.is_zero() {
                            add_product_into(&mut out.terms, k + unit(j), c, a, f, self.order);
                        }
                    }
                }
            }
        }
        out.clamp_order();
        out
    }

    /// `∂_{x_s}` (the plain derivative; the composition formula supplies the
    /// `-i` of `D_x`). The jet order drops by one.
    pub fn x_derivative(&self, s: usize) -> Result<Self> {
        let n = self.n;
        let mut out = Self::zero(&self.q, self.degree);
        // exactly known symbols have constant coefficients
        if self.terms.is_empty() || self.order == EXACT {
            return Ok(out);
        }
        if self.order == 0 {
            return Err(short(format!("x-derivative of a degree {} symbol", self.degree), 1, 0));
        }
        let order = self.order - 1;
        out.order = order;
        for (&k, c) in &self.terms {
            add_into(&mut out.terms, k, &c.diff(s)?, ONE);
            let d = self.d_of(k);
            if d != 0 && !self.q.euclidean {
                let f = Complex64::new(-d as f64, 0.0);
                let da = &self.q.da[s];
                for i in 0..n {
                    for j in i..n {
                        let a = &da[i * n + j];
                        if a.is_zero() {
                            continue;
                        }
                        let w = if i == j { f } else { f * 2.0 };
                        add_product_into(&mut out.terms, k + unit(i) + unit(j), c, a, w, order);
                    }
                }
            }
        }
        out.clamp_order();
        Ok(out)
    }

    /// Pointwise product, truncated at jet order `cap`.
    pub fn mul_trunc(&self, other: &Self, cap: usize) -> Result<Self> {
        let q = self.check(other)?;
        let mut out = Self::zero(&q, self.degree + other.degree);
        if self.terms.is_empty() || other.terms.is_empty() {
            return Ok(out);
        }
        out.order = self.order.min(other.order).min(cap);
        // multiplying by Q^k only relabels the degree
        let (lhs, rhs) = (self.lifted(out.order), other.lifted(out.order));
        for (a, b) in [(&*lhs, &*rhs), (&*rhs, &*lhs)] {
            if b.is_unit_q_power() {
                out.terms = a.terms.clone();
                out.clamp_order();
                return Ok(out);
            }
        }
        for (&ka, ca) in &lhs.terms {
            for (&kb, cb) in &rhs.terms {
                add_product_into(&mut out.terms, ka + kb, ca, cb, ONE, out.order);
            }
        }
        out.clamp_order();
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_trunc(other, EXACT)
    }

    /// True for `Q^k` with coefficient exactly one.
    fn is_unit_q_power(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&0)
                .is_some_and(|c| c.constant_term() == ONE && c.is_constant())
    }

    /// `Σ_j ξ_j ∂_{ξ_j}`.
    pub fn euler(&self) -> Result<Self> {
        let mut out = Self::zero(&self.q, self.degree);
        for j in 0..self.n {
            let xj = Self::from_terms(&self.q, 1, vec![(unit_vec(self.n, j), 0, ComplexJet::constant(self.n, 0, ONE))])?;
            out.add_scaled(&xj.mul(&self.xi_derivative(j))?, ONE)?;
        }
        Ok(out)
    }

    /// Value at `(x, ξ)`.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        let q = self.q.eval(x, xi);
        let mut acc = ZERO;
        for (&k, c) in &self.terms {
            let mut m = 1.0;
            for (i, &v) in xi.iter().enumerate() {
                m *= v.powi(exponent(k, i) as i32);
            }
            acc += c.eval(x) * m * q.powi(-self.d_of(k));
        }
        acc
    }

    /// The degree `m` numerator: `self = N(x, ξ) Q^{-D}` with `D` the largest
    /// half-power present (at least zero) and `N` a polynomial in `ξ`.
    /// Unique for a given `D`.
    pub fn canonical_numerator(&self) -> (i32, Vec<(Vec<u8>, ComplexJet)>) {
        let dmax = self.terms.keys().map(|&k| self.d_of(k)).max().unwrap_or(0).max(0);
        let mut powers: FxHashMap<i32, FxHashMap<Key, ComplexJet>> = FxHashMap::default();
        let mut num: FxHashMap<Key, ComplexJet> = FxHashMap::default();
        for (&k, c) in &self.terms {
            let e = dmax - self.d_of(k);
            let p = powers.entry(e).or_insert_with(|| self.q.power(e as usize, self.order));
            for (&kp, cp) in p.iter() {
                add_product_into(&mut num, k + kp, c, cp, ONE, self.order);
            }
        }
        let mut keys: Vec<Key> = num.keys().copied().collect();
        keys.sort_unstable();
        (dmax, keys.into_iter().map(|k| (unpack(k, self.n), num.remove(&k).unwrap())).collect())
    }

    /// Largest coefficient of the canonical numerator; zero iff the symbol
    /// vanishes to its jet order.
    pub fn canonical_max_abs(&self) -> f64 {
        self.canonical_numerator().1.iter().map(|(_, c)| c.max_abs()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude over all stored terms.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Re-expands every `Q^{-d}` around `|ξ|^{-2d}`:
    /// `Q^{-d} = Σ_r binom(-d, r) E^r |ξ|^{-2(d+r)}` with `E = Q - |ξ|²`,
    /// which vanishes at the origin, so the sum stops at the jet order.
    pub fn to_euclidean(&self) -> Self {
        let n = self.n;
        let eu = QuadForm::euclidean(n);
        let mut out = Self::zero(&eu, self.degree);
        out.order = self.order;
        if self.q.euclidean || self.terms.is_empty() {
            out.terms = self.terms.clone();
            return out;
        }
        let order = self.order;
        // E as a polynomial in ξ
        let mut e: FxHashMap<Key, ComplexJet> = FxHashMap::default();
        for i in 0..n {
            for j in i..n {
                let mut c = self.q.a[i * n + j].truncate(order);
                if i == j {
                    c.coeffs_mut()[0] -= ONE;
                }
                if c.is_zero() {
                    continue;
                }
                let w = if i == j { ONE } else { Complex64::new(2.0, 0.0) };
                add_into(&mut e, unit(i) + unit(j), &c, w);
            }
        }
        let mut e_pows = vec![{
            let mut m = FxHashMap::default();
            m.insert(0, ComplexJet::constant(n, order, ONE));
            m
        }];
        for _ in 0..order {
            let last = e_pows.last().unwrap();
            let mut next: FxHashMap<Key, ComplexJet> = FxHashMap::default();
            for (&ka, ca) in last {
                for (&kb, cb) in &e {
                    add_product_into(&mut next, ka + kb, ca, cb, ONE, order);
                }
            }
            e_pows.push(next);
        }
        for (&k, c) in &self.terms {
            let d = self.d_of(k);
            let mut binom = 1.0;
            for (r, pw) in e_pows.iter().enumerate() {
                if r > 0 {
                    binom *= (-d as f64 - (r as f64 - 1.0)) / r as f64;
                }
                if binom == 0.0 {
                    break;
                }
                for (&kp, cp) in pw {
                    add_product_into(&mut out.terms, k + kp, c, cp, Complex64::new(binom, 0.0), order);
                }
            }
        }
        out.clamp_order();
        out
    }

    /// Polynomial expansion `Σ c_β(x) ξ^β`; fails if a term has a genuine
    /// denominator (`d > 0`).
    pub fn polynomial_terms(&self) -> Result<Vec<(Vec<u8>, ComplexJet)>> {
        if self.terms.keys().any(|&k| self.d_of(k) > 0) {
            return Err(Error::Homogeneity(format!(
                "degree {} symbol has a |ξ| denominator and is not a polynomial",
                self.degree
            )));
        }
        Ok(self.canonical_numerator().1)
    }

    /// Removes terms whose coefficients are exactly zero.
    pub fn prune(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
        if self.terms.is_empty() {
            self.order = EXACT;
        }
    }

    /// Every term satisfies `|β| ≡ degree (mod 2)`, i.e. the symbol has
    /// parity `(-1)^degree` under `ξ ↦ -ξ`.
    pub fn has_degree_parity(&self) -> bool {
        self.terms.keys().all(|&k| (key_degree(k, self.n) - self.degree).rem_euclid(2) == 0)
    }

    /// Applies `f` to every coefficient jet.
    pub fn map_coeffs(&self, f: impl Fn(&ComplexJet) -> ComplexJet) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = f(c);
        }
        out.order = out.terms.values().map(|c| c.order()).min().unwrap_or(EXACT).min(self.order);
        out.clamp_order();
        out
    }
}

fn unit_vec(n: usize, j: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    v[j] = 1;
    v
}

/// Principal inverse `p_m^{-1}` for `p_m = Q^k (1 + N)` with `N` vanishing at
/// the origin: `Q^{-k} Σ_r (-N)^r`, the sum ending at the jet order.
pub fn invert_principal(p: &HomogeneousSymbol) -> Result<HomogeneousSymbol> {
    if p.degree % 2 != 0 {
        return Err(Error::NotAdmissible(format!("principal symbol of odd degree {}", p.degree)));
    }
    let k = p.degree / 2;
    let q = Arc::clone(&p.q);
    let r_inv = HomogeneousSymbol::q_power(&q, -k);
    let mut n_sym = p.mul(&r_inv)?;
    n_sym.add_scaled(&HomogeneousSymbol::one(&q), -ONE)?;
    n_sym.prune();
    if n_sym.is_empty() {
        return Ok(r_inv.truncate(p.order));
    }
    let order = p.order;
    // rewrite N over a single denominator so every coefficient vanishes at 0
    let (dmax, num) = n_sym.canonical_numerator();
    let scale = num.iter().map(|(_, c)| c.max_abs()).fold(1.0, f64::max);
    for (beta, c) in &num {
        if c.constant_term().norm() > 1e-12 * scale {
            return Err(Error::NotAdmissible(format!(
                "principal symbol differs from Q^{k} at the base point (ξ^{beta:?} coefficient {})",
                c.constant_term()
            )));
        }
    }
    let terms: Vec<(Vec<u8>, i32, ComplexJet)> = num
        .into_iter()
        .map(|(beta, mut c)| {
            c.coeffs_mut()[0] = ZERO;
            (beta, dmax, c)
        })
        .collect();
    let minus_n = HomogeneousSymbol::from_terms(&q, 0, terms)?.scale(-ONE);
    let mut sum = HomogeneousSymbol::scalar(&q, &ComplexJet::constant(p.n, order, ONE));
    let mut power = sum.clone();
    for _ in 0..order {
        power = power.mul_trunc(&minus_n, order)?;
        sum.add_scaled(&power, ONE)?;
    }
    r_inv.mul_trunc(&sum, order)
}

/// Asymptotic expansion `p ~ Σ_j p_{m-j}`.
#[derive(Clone, Debug)]
pub struct SymbolExpansion {
    leading: i32,
    parts: Vec<HomogeneousSymbol>,
    /// The expansion is a differential operator's full symbol: every part
    /// past the stored ones is exactly zero.
    finite: bool,
    principal_only: bool,
}

impl SymbolExpansion {
    pub fn new(parts: Vec<HomogeneousSymbol>, finite: bool) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Input("a symbol expansion needs at least one part".into()))?;
        let leading = first.degree;
        for (j, p) in parts.iter().enumerate() {
            if p.degree != leading - j as i32 {
                return Err(Error::Homogeneity(format!(
                    "part {j} has degree {}, expected {}",
                    p.degree,
                    leading - j as i32
                )));
            }
            if p.n != first.n {
                return Err(Error::DimensionMismatch { left: p.n, right: first.n });
            }
        }
        Ok(SymbolExpansion {
            leading,
            parts,
            finite,
            principal_only: false,
        })
    }

    /// The symbol of the identity operator.
    pub fn identity(q: &Arc<QuadForm>) -> Self {
        let one = HomogeneousSymbol::one(q);
        SymbolExpansion {
            leading: 0,
            parts: vec![one],
            finite: true,
            principal_only: false,
        }
    }

    pub fn leading_degree(&self) -> i32 {
        self.leading
    }

    pub fn dim(&self) -> usize {
        self.parts[0].n
    }

    pub fn depth(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn parts(&self) -> &[HomogeneousSymbol] {
        &self.parts
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }

    pub fn is_principal_only(&self) -> bool {
        self.principal_only
    }

    pub fn mark_principal_only(mut self) -> Self {
        self.principal_only = true;
        self
    }

    pub fn principal(&self) -> &HomogeneousSymbol {
        &self.parts[0]
    }

    /// Part of the given degree, if stored.
    pub fn part(&self, degree: i32) -> Option<&HomogeneousSymbol> {
        let j = self.leading - degree;
        if j < 0 {
            return None;
        }
        self.parts.get(j as usize)
    }

    /// Part `p_{m-j}`; past the stored depth only finite expansions answer.
    pub fn part_at(&self, j: usize) -> Result<HomogeneousSymbol> {
        match self.parts.get(j) {
            Some(p) => Ok(p.clone()),
            None if self.finite => Ok(HomogeneousSymbol::zero(&self.parts[0].q, self.leading - j as i32)),
            None => Err(Error::InsufficientDepth {
                required: j,
                available: self.depth(),
            }),
        }
    }

    /// Extends with explicit zero parts up to `depth` (finite expansions only).
    pub fn padded(&self, depth: usize) -> Result<Self> {
        let mut out = self.clone();
        for j in self.parts.len()..=depth {
            out.parts.push(self.part_at(j)?);
        }
        Ok(out)
    }

    pub fn truncated_depth(&self, depth: usize) -> Self {
        let mut out = self.clone();
        out.parts.truncate(depth + 1);
        out.finite = false;
        out
    }

    /// Smallest jet order among the parts.
    pub fn order(&self) -> usize {
        self.parts.iter().map(|p| p.order).min().unwrap_or(EXACT)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.leading != other.leading {
            return Err(Error::Homogeneity(format!(
                "cannot add expansions of orders {} and {}",
                self.leading, other.leading
            )));
        }
        let depth = self.depth().max(other.depth());
        let mut parts = Vec::with_capacity(depth + 1);
        for j in 0..=depth {
            parts.push(self.part_at(j)?.add(&other.part_at(j)?)?);
        }
        Self::new(parts, self.finite && other.finite)
    }
}

impl HomogeneousSymbol {
    fn with_exact_order(mut self) -> Self {
        let depends_on_x = !self.q.euclidean && self.terms.keys().any(|&k| self.d_of(k) != 0);
        if !depends_on_x && self.terms.values().all(|c| c.is_constant()) {
            self.order = EXACT;
            let n = self.n;
            for c in self.terms.values_mut() {
                let v = c.constant_term();
                *c = ComplexJet::constant(n, 0, v);
            }
        }
        self
    }
}

/// Symbol of multiplication by `f`. Constant `f` gives an exactly known
/// symbol; otherwise the jet order of `f` applies.
pub fn mult_operator_symbol(f: &ScalarJet) -> SymbolExpansion {
    let n = f.dim();
    let q = QuadForm::euclidean(n);
    let part = HomogeneousSymbol::scalar(&q, &f.to_complex());
    let part = if f.is_constant() { part.with_exact_order() } else { part };
    SymbolExpansion {
        leading: 0,
        parts: vec![part],
        finite: true,
        principal_only: false,
    }
}

/// Multi-indices visited by a depth-first walk over non-decreasing variable
/// sequences, so each `α` appears once. `visit` gets `(α, |α|, α!)` along with
/// the parent's state and returns the child's state, or `None` to prune.
pub(crate) fn walk_multi_indices<S>(
    n: usize,
    max_len: usize,
    root: S,
    visit: &mut dyn FnMut(&[u8], usize, f64, &S, usize) -> Result<Option<S>>,
) -> Result<()> {
    fn rec<S>(
        n: usize,
        max_len: usize,
        start: usize,
        alpha: &mut Vec<u8>,
        len: usize,
        fact: f64,
        state: &S,
        visit: &mut dyn FnMut(&[u8], usize, f64, &S, usize) -> Result<Option<S>>,
    ) -> Result<()> {
        if len == max_len {
            return Ok(());
        }
        for v in start..n {
            alpha[v] += 1;
            let f = fact * alpha[v] as f64;
            if let Some(child) = visit(alpha, len + 1, f, state, v)? {
                rec(n, max_len, v, alpha, len + 1, f, &child, visit)?;
            }
            alpha[v] -= 1;
        }
        Ok(())
    }
    let mut alpha = vec![0u8; n];
    rec(n, max_len, 0, &mut alpha, 0, 1.0, &root, visit)
}

/// `(-i)^k`
pub(crate) fn minus_i_pow(k: usize) -> Complex64 {
    [ONE, Complex64::new(0.0, -1.0), -ONE, Complex64::new(0.0, 1.0)][k % 4]
}

/// Left-symbol composition `r_{m+m'-j} = Σ_{|α|+k+l=j} (1/α!) ∂_ξ^α p_{m-k} D_x^α q_{m'-l}`
/// for `j = 0..=depth`.
pub fn compose(p: &SymbolExpansion, q: &SymbolExpansion, depth: usize) -> Result<SymbolExpansion> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { left: p.dim(), right: q.dim() });
    }
    let n = p.dim();
    let pp: Vec<HomogeneousSymbol> = (0..=depth).map(|j| p.part_at(j)).collect::<Result<_>>()?;
    let qq: Vec<HomogeneousSymbol> = (0..=depth).map(|j| q.part_at(j)).collect::<Result<_>>()?;
    let form = pp[0].check(&qq[0])?;
    let degree = p.leading + q.leading;
    let mut out: Vec<HomogeneousSymbol> = (0..=depth)
        .map(|j| HomogeneousSymbol::zero(&form, degree - j as i32))
        .collect();
    for k in 0..=depth {
        for l in 0..=depth - k {
            let (a, b) = (&pp[k], &qq[l]);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            out[k + l].add_scaled(&a.mul(b)?, ONE)?;
            let budget = depth - k - l;
            let mut visit = |alpha: &[u8], len: usize, fact: f64, st: &(HomogeneousSymbol, HomogeneousSymbol), v: usize| -> Result<Option<(HomogeneousSymbol, HomogeneousSymbol)>> {
                let _ = alpha;
                let da = st.0.xi_derivative(v);
                if da.is_empty() {
                    return Ok(None);
                }
                let db = st.1.x_derivative(v)?;
                if db.is_empty() {
                    return Ok(None);
                }
                let term = da.mul(&db)?.scale(minus_i_pow(len) / fact);
                out[k + l + len].add_scaled(&term, ONE)?;
                Ok(Some((da, db)))
            };
            walk_multi_indices(n, budget, (a.clone(), b.clone()), &mut visit)?;
        }
    }
    let mut result = SymbolExpansion::new(out, false)?;
    // a polynomial of degree m has at most m nonvanishing ξ-derivatives, so
    // the product of two differential operators ends at a known depth
    let polynomial = p.parts.iter().all(|s| s.terms.keys().all(|&k| s.d_of(k) <= 0));
    result.finite = p.finite && q.finite && polynomial && depth >= p.depth() + q.depth() + p.leading.max(0) as usize;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{model_metric, ModelKind};

    fn c(n: usize, order: usize, v: f64) -> ComplexJet {
        ComplexJet::constant(n, order, Complex64::new(v, 0.0))
    }

    fn xi_sq(q: &Arc<QuadForm>) -> HomogeneousSymbol {
        let n = q.dim();
        let terms = (0..n)
            .map(|i| {
                let mut b = vec![0u8; n];
                b[i] = 2;
                (b, 0, c(n, 0, 1.0))
            })
            .collect();
        HomogeneousSymbol::from_terms(q, 2, terms).unwrap()
    }

    #[test]
    fn homogeneity_checked_on_construction() {
        let q = QuadForm::euclidean(2);
        let e = HomogeneousSymbol::from_terms(&q, 1, vec![(vec![2, 0], 0, c(2, 0, 1.0))]).unwrap_err();
        assert!(matches!(e, Error::Homogeneity(_)));
    }

    #[test]
    fn xi_derivative_examples() {
        let q = QuadForm::euclidean(2);
        let s = HomogeneousSymbol::from_terms(&q, 2, vec![(vec![2, 0], 0, c(2, 0, 1.0))]).unwrap();
        let d = s.xi_derivative(0);
        let t = d.terms();
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].0.clone(), t[0].1, t[0].2.constant_term()), (vec![1, 0], 0, Complex64::new(2.0, 0.0)));

        let inv = HomogeneousSymbol::q_power(&q, -1);
        let t = inv.xi_derivative(0);
        let t = t.terms();
        assert_eq!((t[0].0.clone(), t[0].1, t[0].2.constant_term()), (vec![1, 0], 2, Complex64::new(-2.0, 0.0)));
    }

    #[test]
    fn x_derivative_examples() {
        let n = 2;
        let q = QuadForm::euclidean(n);
        let k = HomogeneousSymbol::from_terms(&q, 1, vec![(vec![0, 1], 0, c(n, 2, 3.0))]).unwrap();
        assert!(k.x_derivative(0).unwrap().is_empty() || k.x_derivative(0).unwrap().canonical_max_abs() == 0.0);
        let x1 = ScalarJet::variable(n, 1, 0).to_complex();
        let s = HomogeneousSymbol::from_terms(&q, 1, vec![(vec![0, 1], 0, x1)]).unwrap();
        let d = s.x_derivative(0).unwrap();
        let t = d.terms();
        assert_eq!(t[0].2.constant_term(), ONE);
        let zero = HomogeneousSymbol::zero(&q, 3);
        assert!(zero.x_derivative(1).unwrap().is_empty());
    }

    #[test]
    fn metric_x_derivative_matches_euclidean_route() {
        let g = model_metric(&ModelKind::RandomPolynomial { seed: 3, magnitude: 0.2, order: 3 }, 3).unwrap().metric;
        let q = QuadForm::from_metric(&g).unwrap();
        let s = HomogeneousSymbol::q_power(&q, -1).xi_derivative(1);
        for v in 0..3 {
            let a = s.x_derivative(v).unwrap().to_euclidean();
            let b = s.to_euclidean().x_derivative(v).unwrap();
            assert!(a.sub(&b).unwrap().canonical_max_abs() < 1e-13);
        }
    }

    #[test]
    fn euler_identity() {
        let g = model_metric(&ModelKind::RandomPolynomial { seed: 5, magnitude: 0.2, order: 2 }, 3).unwrap().metric;
        let q = QuadForm::from_metric(&g).unwrap();
        let s = HomogeneousSymbol::q_power(&q, -1).xi_derivative(0).xi_derivative(2);
        let e = s.euler().unwrap();
        let diff = e.sub(&s.scale(Complex64::new(s.degree() as f64, 0.0))).unwrap();
        assert!(diff.canonical_max_abs() < 1e-13);
    }

    #[test]
    fn product_examples() {
        let q = QuadForm::euclidean(2);
        let one = HomogeneousSymbol::scalar(&q, &c(2, 0, 1.0));
        let x = HomogeneousSymbol::from_terms(&q, 1, vec![(vec![1, 0], 0, c(2, 0, 1.0))]).unwrap();
        let y = HomogeneousSymbol::from_terms(&q, 0, vec![(vec![1, 0], 1, c(2, 0, 1.0)); 1]);
        assert!(y.is_err());
        let y = HomogeneousSymbol::from_terms(&q, -1, vec![(vec![1, 0], 1, c(2, 0, 1.0))]).unwrap();
        let p = x.mul(&y).unwrap();
        let t = p.terms();
        assert_eq!((t[0].0.clone(), t[0].1), (vec![2, 0], 1));
        assert_eq!(x.mul(&one).unwrap().sub(&x).unwrap().canonical_max_abs(), 0.0);
    }

    #[test]
    fn invert_principal_examples() {
        let q = QuadForm::euclidean(2);
        let inv = invert_principal(&xi_sq(&q)).unwrap();
        let prod = inv.mul(&xi_sq(&q)).unwrap();
        let one = HomogeneousSymbol::scalar(&q, &c(2, 0, 1.0));
        assert!(prod.sub(&one).unwrap().canonical_max_abs() < 1e-15);

        // A^{ij} = I + x1 E11 written out as a polynomial in ξ
        let n = 2;
        let x1 = ScalarJet::variable(n, 1, 0).to_complex();
        let p = HomogeneousSymbol::from_terms(
            &q,
            2,
            vec![(vec![2, 0], 0, &c(n, 1, 1.0) + &x1), (vec![0, 2], 0, c(n, 1, 1.0))],
        )
        .unwrap();
        let inv = invert_principal(&p).unwrap();
        let want = HomogeneousSymbol::from_terms(
            &q,
            -2,
            vec![(vec![0, 0], 1, c(n, 1, 1.0)), (vec![2, 0], 2, -&x1)],
        )
        .unwrap();
        assert!(inv.sub(&want).unwrap().canonical_max_abs() < 1e-15);
    }

    #[test]
    fn invert_principal_rejects_non_laplace_type() {
        let q = QuadForm::euclidean(2);
        let p = HomogeneousSymbol::from_terms(&q, 2, vec![(vec![2, 0], 0, c(2, 1, 2.0)), (vec![0, 2], 0, c(2, 1, 1.0))]).unwrap();
        assert!(matches!(invert_principal(&p), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn invert_principal_random_metric() {
        let g = model_metric(&ModelKind::RandomPolynomial { seed: 9, magnitude: 0.2, order: 4 }, 3).unwrap().metric;
        let qm = QuadForm::from_metric(&g).unwrap();
        let p = HomogeneousSymbol::q_power(&qm, 1).to_euclidean();
        let inv = invert_principal(&p).unwrap();
        let one = HomogeneousSymbol::scalar(&p.q, &c(3, 4, 1.0));
        let r = p.mul(&inv).unwrap().sub(&one).unwrap();
        assert!(r.canonical_max_abs() < 1e-12);
    }

    #[test]
    fn compose_identity_and_flat_laplacian() {
        let q = QuadForm::euclidean(2);
        let lap = SymbolExpansion::new(vec![xi_sq(&q)], true).unwrap();
        let one = SymbolExpansion::identity(&q);
        let r = compose(&lap, &one, 3).unwrap();
        assert!(r.parts()[0].sub(&xi_sq(&q)).unwrap().canonical_max_abs() == 0.0);
        assert!(r.parts()[1..].iter().all(|p| p.canonical_max_abs() == 0.0));

        let inv = SymbolExpansion::new(vec![HomogeneousSymbol::q_power(&q, -1)], true).unwrap();
        let r = compose(&lap, &inv, 2).unwrap();
        let one_sym = HomogeneousSymbol::scalar(&q, &c(2, 0, 1.0));
        assert!(r.parts()[0].sub(&one_sym).unwrap().canonical_max_abs() < 1e-15);
        assert!(r.parts()[1..].iter().all(|p| p.canonical_max_abs() == 0.0));
    }

    #[test]
    fn compose_d1_with_x1() {
        // D_1 ∘ x_1 = x_1 D_1 - i
        let n = 1;
        let q = QuadForm::euclidean(n);
        let d1 = SymbolExpansion::new(vec![HomogeneousSymbol::from_terms(&q, 1, vec![(vec![1], 0, c(n, 0, 1.0))]).unwrap().with_exact_order()], true).unwrap();
        let x1 = mult_operator_symbol(&ScalarJet::variable(n, 3, 0));
        let r = compose(&d1, &x1, 1).unwrap();
        let p0 = &r.parts()[0];
        let t = p0.terms();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].2.coeff(&[1]), ONE);
        let p1 = &r.parts()[1];
        assert_eq!(p1.terms()[0].2.constant_term(), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn multiplication_symbols_commute() {
        let n = 3;
        let x = |i| ScalarJet::variable(n, 3, i);
        let f = &x(0).scale_real(0.3) + &(&x(1) * &x(2));
        let h = x(2).scale_real(-0.7).exp();
        let r = compose(&mult_operator_symbol(&f), &mult_operator_symbol(&h), 2).unwrap();
        let want = mult_operator_symbol(&(&f * &h));
        assert!(r.parts()[0].sub(want.principal()).unwrap().canonical_max_abs() < 1e-15);
        assert!(r.parts()[1..].iter().all(|p| p.is_empty()));

        let e = compose(&mult_operator_symbol(&f.exp()), &mult_operator_symbol(&(-&f).exp()), 2).unwrap();
        let one = HomogeneousSymbol::scalar(e.principal().quad_form(), &c(n, 3, 1.0));
        assert!(e.principal().sub(&one).unwrap().canonical_max_abs() < 1e-14);
    }

    #[test]
    fn to_euclidean_is_consistent_pointwise() {
        let g = model_metric(&ModelKind::RandomPolynomial { seed: 2, magnitude: 0.1, order: 4 }, 2).unwrap().metric;
        let qm = QuadForm::from_metric(&g).unwrap();
        let s = HomogeneousSymbol::q_power(&qm, -2).xi_derivative(0);
        let e = s.to_euclidean();
        // agreement to fourth order in x
        for t in [1e-2, 5e-3] {
            let x = [t, -0.5 * t];
            let xi = [0.6, 0.8];
            let gap = (s.eval(&x, &xi) - e.eval(&x, &xi)).norm();
            assert!(gap < 50.0 * t.powi(5), "gap {gap} at {t}");
        }
    }
}
