//! Truncated multivariate Taylor jets at the coordinate origin.
//!
//! A [`Jet`] of order `N` in `n` variables stores the Taylor coefficients
//! `∂^α f(0) / α!` for every multi-index with `|α| ≤ N`. Multiplication is a
//! plain truncated convolution. Differentiation lowers the order by one, so
//! the order of a jet is always the highest degree whose coefficients are
//! trusted.
//!
//! Monomials are laid out by total degree, then in descending lexicographic
//! order inside a degree. The layout does not depend on the truncation order,
//! so a jet of order `a` is a prefix of the same function's jet of order
//! `b > a`. All arithmetic relies on that.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{short, Error, Result};

/// Scalar types a jet can carry.
pub trait Coeff:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Monomial layout and the multiplication / differentiation tables for one
/// dimension, up to some maximal order.
pub struct MonomialBasis {
    dim: usize,
    order: usize,
    exps: Vec<u8>,
    degrees: Vec<u8>,
    /// `counts[d]` = number of monomials of degree `≤ d`.
    counts: Vec<usize>,
    /// Row `i` lists the product index `k` of monomial `i` with every `j`
    /// in `0..counts[order - deg(i)]`.
    mul_offsets: Vec<usize>,
    mul: Vec<u32>,
    /// `up[k * dim + v]` is the index of `k + e_v`, or `u32::MAX` past the order.
    up: Vec<u32>,
    index: HashMap<Vec<u8>, usize>,
}

const NONE: u32 = u32::MAX;

impl MonomialBasis {
    fn build(dim: usize, order: usize) -> Self {
        assert!(dim >= 1, "jets need at least one variable");
        let mut exps = Vec::new();
        let mut degrees = Vec::new();
        let mut counts = Vec::with_capacity(order + 1);
        let mut current = vec![0u8; dim];
        for d in 0..=order {
            push_compositions(d, 0, &mut current, &mut exps, &mut degrees);
            counts.push(degrees.len());
        }
        let len = degrees.len();
        let mut index = HashMap::with_capacity(len);
        for k in 0..len {
            index.insert(exps[k * dim..(k + 1) * dim].to_vec(), k);
        }

        let mut up = vec![NONE; len * dim];
        let mut scratch = vec![0u8; dim];
        for k in 0..len {
            if degrees[k] as usize == order {
                continue;
            }
            for v in 0..dim {
                scratch.copy_from_slice(&exps[k * dim..(k + 1) * dim]);
                scratch[v] += 1;
                up[k * dim + v] = index[&scratch] as u32;
            }
        }

        // every j > 0 is some earlier monomial times x_v, so row entries
        // follow from the `up` table without hashing
        let mut parent = vec![(0usize, 0usize); len];
        for (j, p) in parent.iter_mut().enumerate().skip(1) {
            scratch.copy_from_slice(&exps[j * dim..(j + 1) * dim]);
            let v = scratch.iter().position(|&e| e > 0).expect("nonconstant monomial");
            scratch[v] -= 1;
            *p = (index[&scratch], v);
        }
        let mut mul_offsets = Vec::with_capacity(len + 1);
        let mut mul: Vec<u32> = Vec::new();
        for i in 0..len {
            let start = mul.len();
            mul_offsets.push(start);
            let room = order - degrees[i] as usize;
            mul.push(i as u32);
            for &(pj, v) in &parent[1..counts[room]] {
                let base = mul[start + pj] as usize;
                mul.push(up[base * dim + v]);
            }
        }
        mul_offsets.push(mul.len());

        MonomialBasis {
            dim,
            order,
            exps,
            degrees,
            counts,
            mul_offsets,
            mul,
            up,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of monomials of total degree at most `order`.
    pub fn count(&self, order: usize) -> usize {
        self.counts[order]
    }

    pub fn exponent(&self, k: usize) -> &[u8] {
        &self.exps[k * self.dim..(k + 1) * self.dim]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.degrees[k] as usize
    }

    pub fn index_of(&self, exponent: &[u8]) -> Option<usize> {
        self.index.get(exponent).copied()
    }

    fn mul_row(&self, i: usize) -> &[u32] {
        &self.mul[self.mul_offsets[i]..self.mul_offsets[i + 1]]
    }

    fn up(&self, k: usize, v: usize) -> u32 {
        self.up[k * self.dim + v]
    }
}

fn push_compositions(left: usize, slot: usize, cur: &mut [u8], exps: &mut Vec<u8>, degs: &mut Vec<u8>) {
    let dim = cur.len();
    if slot == dim - 1 {
        cur[slot] = left as u8;
        exps.extend_from_slice(cur);
        degs.push(cur.iter().map(|&e| e as usize).sum::<usize>() as u8);
        return;
    }
    for e in (0..=left).rev() {
        cur[slot] = e as u8;
        push_compositions(left - e, slot + 1, cur, exps, degs);
    }
    cur[slot] = 0;
}

type BasisCache = RwLock<HashMap<usize, Arc<MonomialBasis>>>;

fn cache() -> &'static BasisCache {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared basis for `dim` variables covering at least `order`.
pub fn basis(dim: usize, order: usize) -> Arc<MonomialBasis> {
    if let Some(b) = cache().read().unwrap().get(&dim) {
        if b.order >= order {
            return Arc::clone(b);
        }
    }
    let mut w = cache().write().unwrap();
    if let Some(b) = w.get(&dim) {
        if b.order >= order {
            return Arc::clone(b);
        }
    }
    // Grow a little past the request so repeated small bumps do not rebuild.
    let target = order.max(w.get(&dim).map_or(0, |b| b.order + 1)).max(4);
    let b = Arc::new(MonomialBasis::build(dim, target));
    w.insert(dim, Arc::clone(&b));
    b
}

/// Truncated Taylor expansion at the origin.
#[derive(Clone)]
pub struct Jet<T> {
    basis: Arc<MonomialBasis>,
    order: usize,
    coeffs: Vec<T>,
}

/// Real jet: metric entries, curvature components, conformal factors.
pub type ScalarJet = Jet<f64>;
/// Complex jet: symbol coefficients (the `D_x = -i ∂_x` convention makes them complex).
pub type ComplexJet = Jet<Complex64>;

impl<T: Coeff> Jet<T> {
    pub fn zero(dim: usize, order: usize) -> Self {
        let basis = basis(dim, order);
        let len = basis.count(order);
        Jet {
            basis,
            order,
            coeffs: vec![T::zero(); len],
        }
    }

    pub fn constant(dim: usize, order: usize, c: T) -> Self {
        let mut j = Self::zero(dim, order);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `x_i` (0-based `i`).
    pub fn variable(dim: usize, order: usize, i: usize) -> Self {
        assert!(i < dim, "variable index {i} out of range for dimension {dim}");
        let mut j = Self::zero(dim, order);
        if order >= 1 {
            let k = j.basis.up(0, i) as usize;
            j.coeffs[k] = T::one();
        }
        j
    }

    /// Builds a jet from `(exponent, coefficient)` pairs. Terms above `order`
    /// are dropped; exponents of the wrong length are an error.
    pub fn from_terms(dim: usize, order: usize, terms: &[(Vec<u8>, T)]) -> Result<Self> {
        let mut j = Self::zero(dim, order);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: e.len(),
                    right: dim,
                });
            }
            let deg: usize = e.iter().map(|&x| x as usize).sum();
            if deg > order {
                continue;
            }
            let k = j.basis.index_of(e).expect("exponent within order");
            j.coeffs[k] += *c;
        }
        Ok(j)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    /// Highest trusted degree.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Alias of [`Jet::order`]: coefficients above it are never stored.
    pub fn valid_order(&self) -> usize {
        self.order
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn constant_term(&self) -> T {
        self.coeffs[0]
    }

    pub fn coeff(&self, exponent: &[u8]) -> T {
        match self.basis.index_of(exponent) {
            Some(k) if k < self.coeffs.len() => self.coeffs[k],
            _ => T::zero(),
        }
    }

    /// Nonzero `(exponent, coefficient)` pairs in layout order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], T)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != T::zero())
            .map(move |(k, c)| (self.basis.exponent(k), *c))
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            basis: Arc::clone(&self.basis),
            order,
            coeffs: self.coeffs[..self.basis.count(order)].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }

    /// True when only the constant coefficient may be nonzero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|c| *c == T::zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Jet {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| c.scale(s)).collect(),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.mul_trunc(other, usize::MAX))
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let order = self.order.min(other.order);
        let len = self.basis.count(order).min(other.basis.count(order));
        let basis = if self.basis.order >= order { &self.basis } else { &other.basis };
        Jet {
            basis: Arc::clone(basis),
            order,
            coeffs: (0..len).map(|k| f(self.coeffs[k], other.coeffs[k])).collect(),
        }
    }

    /// `self += s * other`, truncating `self` to the common order.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        debug_assert_eq!(self.dim(), other.dim());
        if other.order < self.order {
            self.order = other.order;
            self.coeffs.truncate(self.basis.count(self.order));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += *b * s;
        }
    }

    /// Product truncated at `min(self.order, other.order, cap)`.
    pub fn mul_trunc(&self, other: &Self, cap: usize) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        let order = self.order.min(other.order).min(cap);
        let mut out = Jet {
            basis: self.pick_basis(other, order),
            order,
            coeffs: vec![T::zero(); 0],
        };
        out.coeffs = vec![T::zero(); out.basis.count(order)];
        mul_acc(&mut out.coeffs, &out.basis, &self.coeffs, &other.coeffs, order, T::one());
        out
    }

    /// `self += s * a * b`, truncated at `self.order`.
    pub fn add_product(&mut self, a: &Self, b: &Self, s: T) {
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            self.order = order;
            self.coeffs.truncate(self.basis.count(order));
        }
        let basis = self.pick_basis(a, order);
        mul_acc(&mut self.coeffs, &basis, &a.coeffs, &b.coeffs, order, s);
    }

    fn pick_basis(&self, other: &Self, order: usize) -> Arc<MonomialBasis> {
        if self.basis.order >= order {
            Arc::clone(&self.basis)
        } else {
            Arc::clone(&other.basis)
        }
    }

    /// Partial derivative in variable `i`; the order drops by one.
    pub fn diff(&self, i: usize) -> Result<Self> {
        if i >= self.dim() {
            return Err(Error::Input(format!("no coordinate {i} in dimension {}", self.dim())));
        }
        if self.order == 0 {
            return Err(short("jet derivative", 1, 0));
        }
        let order = self.order - 1;
        let len = self.basis.count(order);
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            let u = self.basis.up(k, i) as usize;
            let factor = self.basis.exponent(k)[i] as f64 + 1.0;
            coeffs.push(self.coeffs[u].scale(factor));
        }
        Ok(Jet {
            basis: Arc::clone(&self.basis),
            order,
            coeffs,
        })
    }

    /// Multiply by the linear form `Σ_v w[v] x_v`, keeping the order (the top
    /// degree is lost past the truncation, so the result is valid to `order`).
    pub fn mul_linear(&self, w: &[f64]) -> Self {
        let mut out = Self::zero(self.dim(), self.order);
        let top = if self.order == 0 { 0 } else { self.basis.count(self.order - 1) };
        for k in 0..top {
            let c = self.coeffs[k];
            if c == T::zero() {
                continue;
            }
            for (v, &wv) in w.iter().enumerate() {
                if wv != 0.0 {
                    out.coeffs[self.basis.up(k, v) as usize] += c.scale(wv);
                }
            }
        }
        out
    }

    /// Evaluates the truncated polynomial at a point.
    pub fn eval(&self, x: &[f64]) -> T {
        assert_eq!(x.len(), self.dim());
        let mut acc = T::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == T::zero() {
                continue;
            }
            let mut m = 1.0;
            for (v, &e) in self.basis.exponent(k).iter().enumerate() {
                if e > 0 {
                    m *= x[v].powi(e as i32);
                }
            }
            acc += c.scale(m);
        }
        acc
    }

    /// Pull back through `x = diag(s) y`.
    pub fn scale_variables(&self, s: &[f64]) -> Self {
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            let mut m = 1.0;
            for (v, &e) in self.basis.exponent(k).iter().enumerate() {
                m *= s[v].powi(e as i32);
            }
            *c = c.scale(m);
        }
        out
    }

    /// Pull back through the linear map `x = L y` (`l` row-major, `n × n`).
    pub fn linear_change(&self, l: &[f64]) -> Self {
        let n = self.dim();
        assert_eq!(l.len(), n * n);
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || l[i * n + j] == 0.0));
        if diagonal {
            let s: Vec<f64> = (0..n).map(|i| l[i * n + i]).collect();
            return self.scale_variables(&s);
        }
        // x_i as linear forms in y
        let rows: Vec<Vec<f64>> = (0..n).map(|i| l[i * n..(i + 1) * n].to_vec()).collect();
        let mut out = Self::zero(n, self.order);
        let mut exp = vec![0u8; n];
        let one = Self::constant(n, self.order, T::one());
        self.substitute_rec(0, 0, &one, &rows, &mut exp, &mut out);
        out
    }

    fn substitute_rec(
        &self,
        var: usize,
        deg: usize,
        prod: &Self,
        rows: &[Vec<f64>],
        exp: &mut [u8],
        out: &mut Self,
    ) {
        let n = self.dim();
        if var == n {
            let k = self.basis.index_of(exp).expect("in range");
            let c = self.coeffs[k];
            if c != T::zero() {
                out.add_scaled(prod, c);
            }
            return;
        }
        let mut p = prod.clone();
        let mut e = 0usize;
        loop {
            exp[var] = e as u8;
            self.substitute_rec(var + 1, deg + e, &p, rows, exp, out);
            if deg + e >= self.order {
                break;
            }
            p = p.mul_linear(&rows[var]);
            e += 1;
        }
        exp[var] = 0;
    }

    /// Horner evaluation of `Σ_k series[k] h^k` where `h = self - self(0)`.
    fn compose_series(&self, series: &[T]) -> Self {
        let mut h = self.clone();
        h.coeffs[0] = T::zero();
        let mut acc = Self::constant(self.dim(), self.order, series[series.len() - 1]);
        for k in (0..series.len() - 1).rev() {
            acc = acc.mul_trunc(&h, usize::MAX);
            acc.coeffs[0] += series[k];
        }
        acc
    }
}

fn mul_acc<T: Coeff>(out: &mut [T], basis: &MonomialBasis, a: &[T], b: &[T], order: usize, s: T) {
    let na = basis.count(order).min(a.len());
    for i in 0..na {
        let ai = a[i];
        if ai == T::zero() {
            continue;
        }
        let ai = ai * s;
        let room = order - basis.degree(i);
        let nb = basis.count(room).min(b.len());
        let row = basis.mul_row(i);
        for j in 0..nb {
            let bj = b[j];
            if bj != T::zero() {
                out[row[j] as usize] += ai * bj;
            }
        }
    }
}

/// Analytic functions that may be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analytic {
    Exp,
    Log,
    Inv,
    Sqrt,
    Sin,
    Cos,
    /// `t ↦ t^p` for real `p`
    Pow(f64),
}

impl ScalarJet {
    /// Composition `fn ∘ self`, exact to the jet's order.
    pub fn compose(&self, f: Analytic) -> Result<Self> {
        let c = self.constant_term();
        let n = self.order;
        let mut series = vec![0.0; n + 1];
        match f {
            Analytic::Exp => {
                let e = c.exp();
                let mut fact = 1.0;
                for (k, s) in series.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *s = e / fact;
                }
            }
            Analytic::Log => {
                if c <= 0.0 {
                    return Err(Error::Domain { op: "log", value: c });
                }
                series[0] = c.ln();
                for k in 1..=n {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    series[k] = sign / (k as f64 * c.powi(k as i32));
                }
            }
            Analytic::Inv => {
                if c == 0.0 {
                    return Err(Error::Domain { op: "inv", value: c });
                }
                for (k, s) in series.iter_mut().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    *s = sign / c.powi(k as i32 + 1);
                }
            }
            Analytic::Sqrt => {
                if c <= 0.0 {
                    return Err(Error::Domain { op: "sqrt", value: c });
                }
                binomial_series(&mut series, c, 0.5);
            }
            Analytic::Pow(p) => {
                if c <= 0.0 {
                    return Err(Error::Domain { op: "pow", value: c });
                }
                binomial_series(&mut series, c, p);
            }
            Analytic::Sin | Analytic::Cos => {
                let shift = if f == Analytic::Cos { 1 } else { 0 };
                let (s, co) = c.sin_cos();
                let cycle = [s, co, -s, -co];
                let mut fact = 1.0;
                for (k, out) in series.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *out = cycle[(k + shift) % 4] / fact;
                }
            }
        }
        Ok(self.compose_series(&series))
    }

    pub fn exp(&self) -> Self {
        self.compose(Analytic::Exp).expect("exp is entire")
    }

    pub fn ln(&self) -> Result<Self> {
        self.compose(Analytic::Log)
    }

    pub fn inv(&self) -> Result<Self> {
        self.compose(Analytic::Inv)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.compose(Analytic::Sqrt)
    }

    /// Integer power by repeated squaring; negative powers go through `inv`.
    pub fn powi(&self, p: i32) -> Result<Self> {
        let base = if p < 0 { self.inv()? } else { self.clone() };
        let mut e = p.unsigned_abs();
        let mut acc = Self::constant(self.dim(), self.order, 1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_trunc(&sq, usize::MAX);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_trunc(&sq, usize::MAX);
            }
        }
        Ok(acc)
    }

    pub fn to_complex(&self) -> ComplexJet {
        Jet {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }
}

fn binomial_series(series: &mut [f64], c: f64, p: f64) {
    // (c + h)^p = c^p Σ binom(p, k) (h / c)^k
    let mut b = c.powf(p);
    for (k, s) in series.iter_mut().enumerate() {
        *s = b;
        b *= (p - k as f64) / ((k as f64 + 1.0) * c);
    }
}

impl ComplexJet {
    pub fn re(&self) -> ScalarJet {
        Jet {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.re).collect(),
        }
    }

    pub fn im(&self) -> ScalarJet {
        Jet {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl<T: Coeff> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl<T: Coeff> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, N={}; ", self.dim(), self.order)?;
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}·x^{e:?}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl<'a, T: Coeff> Add<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.checked_add(rhs).expect("jet dimensions agree")
    }
}

impl<'a, T: Coeff> Sub<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.checked_sub(rhs).expect("jet dimensions agree")
    }
}

impl<'a, T: Coeff> Mul<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.checked_mul(rhs).expect("jet dimensions agree")
    }
}

impl<T: Coeff> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        Jet {
            basis: Arc::clone(&self.basis),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}
