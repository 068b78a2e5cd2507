//! Riemannian metric jets: inverse, determinant, normalization and
//! conformal rescaling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use crate::tensor::{TensorJet, Variance};

const SYMMETRY_TOL: f64 = 1e-12;
const NORMALIZED_TOL: f64 = 1e-12;

/// Symmetric matrix of jets `g_ij` with a positive definite constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    n: usize,
    entries: Vec<ScalarJet>,
    normalized: bool,
}

impl MetricJet {
    /// Validates symmetry and positive definiteness at the origin. The
    /// `normalized` flag is set when `g(0)` is the identity.
    pub fn new(n: usize, entries: Vec<ScalarJet>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Input(format!(
                "metric of dimension {n} needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for e in &entries {
            if e.dim() != n {
                return Err(Error::DimensionMismatch { left: e.dim(), right: n });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&entries[i * n + j], &entries[j * n + i]);
                if a.order() != b.order() || (a - b).max_abs() > SYMMETRY_TOL {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        let mut g = MetricJet {
            n,
            entries,
            normalized: false,
        };
        g.value_at_origin()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        g.normalized = g.is_identity_at_origin(0.0);
        Ok(g)
    }

    /// Builds a symmetric metric from its upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> ScalarJet) -> Result<Self> {
        let mut entries = vec![ScalarJet::zero(n, 0); n * n];
        for i in 0..n {
            for j in i..n {
                let e = f(i, j);
                entries[i * n + j] = e.clone();
                entries[j * n + i] = e;
            }
        }
        Self::new(n, entries)
    }

    /// The flat metric `δ_ij`.
    pub fn identity(n: usize, order: usize) -> Self {
        Self::from_fn(n, |i, j| ScalarJet::constant(n, order, if i == j { 1.0 } else { 0.0 }))
            .expect("identity is a metric")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest order among the entries.
    pub fn order(&self) -> usize {
        self.entries.iter().map(|e| e.order()).min().unwrap_or(0)
    }

    pub fn valid_order(&self) -> usize {
        self.order()
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarJet {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[ScalarJet] {
        &self.entries
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn truncate(&self, order: usize) -> Self {
        MetricJet {
            n: self.n,
            entries: self.entries.iter().map(|e| e.truncate(order)).collect(),
            normalized: self.normalized,
        }
    }

    /// `g(x0)` as a dense matrix.
    pub fn value_at_origin(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).constant_term())
    }

    fn is_identity_at_origin(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let want = if i == j { 1.0 } else { 0.0 };
                (self.get(i, j).constant_term() - want).abs() <= tol
            })
        })
    }

    /// Gauss-Jordan elimination over jets. No pivoting is needed because the
    /// constant term is positive definite.
    fn eliminate(&self) -> Result<(ScalarJet, Vec<ScalarJet>)> {
        let n = self.n;
        let order = self.order();
        let mut a: Vec<ScalarJet> = self.entries.iter().map(|e| e.truncate(order)).collect();
        let mut b: Vec<ScalarJet> = (0..n * n)
            .map(|k| ScalarJet::constant(n, order, if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        let mut det = ScalarJet::constant(n, order, 1.0);
        for k in 0..n {
            let pivot = a[k * n + k].clone();
            if pivot.constant_term().abs() < 1e-300 {
                return Err(Error::Singular);
            }
            det = &det * &pivot;
            let pinv = pivot.inv()?;
            for j in 0..n {
                a[k * n + j] = &a[k * n + j] * &pinv;
                b[k * n + j] = &b[k * n + j] * &pinv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[i * n + k].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let (ak, bk) = (a[k * n + j].clone(), b[k * n + j].clone());
                    a[i * n + j].add_product(&f, &ak, -1.0);
                    b[i * n + j].add_product(&f, &bk, -1.0);
                }
            }
        }
        Ok((det, b))
    }

    /// Entries of `g^{-1}` as a flat row-major vector.
    pub fn inverse_entries(&self) -> Result<Vec<ScalarJet>> {
        let (_, inv) = self.eliminate()?;
        // restore exact symmetry lost to roundoff
        let n = self.n;
        let mut out = inv;
        for i in 0..n {
            for j in i + 1..n {
                let avg = (&out[i * n + j] + &out[j * n + i]).scale_real(0.5);
                out[i * n + j] = avg.clone();
                out[j * n + i] = avg;
            }
        }
        Ok(out)
    }

    /// `g^{ij}` as a contravariant rank-2 tensor jet.
    pub fn inverse(&self) -> Result<TensorJet> {
        TensorJet::new(self.n, vec![Variance::Contra; 2], self.inverse_entries()?)
    }

    pub fn det(&self) -> Result<ScalarJet> {
        Ok(self.eliminate()?.0)
    }

    /// `√det g`, the coefficient of the Riemannian density.
    pub fn sqrt_det(&self) -> Result<ScalarJet> {
        self.det()?.sqrt()
    }

    /// `log √det g`.
    pub fn log_sqrt_det(&self) -> Result<ScalarJet> {
        Ok(self.det()?.ln()?.scale_real(0.5))
    }

    /// Pull back through `x = L y`: `g'_ab(y) = L_ia L_jb g_ij(L y)`.
    pub fn pull_back_linear(&self, l: &DMatrix<f64>) -> Result<Self> {
        let n = self.n;
        if l.nrows() != n || l.ncols() != n {
            return Err(Error::DimensionMismatch { left: l.nrows(), right: n });
        }
        let flat: Vec<f64> = (0..n * n).map(|k| l[(k / n, k % n)]).collect();
        let moved: Vec<ScalarJet> = self.entries.iter().map(|e| e.linear_change(&flat)).collect();
        let order = self.order();
        Self::from_fn(n, |a, b| {
            let mut acc = ScalarJet::zero(n, order);
            for i in 0..n {
                for j in 0..n {
                    let w = l[(i, a)] * l[(j, b)];
                    if w != 0.0 {
                        acc.add_scaled(&moved[i * n + j], w);
                    }
                }
            }
            acc
        })
    }

    /// Returns the metric in coordinates where `g(x0) = I`, together with the
    /// linear map `L` (`x = L y`). `L` is the inverse transpose of the
    /// Cholesky factor of `g(x0)`.
    pub fn normalize(&self) -> Result<(MetricJet, DMatrix<f64>)> {
        let n = self.n;
        if self.normalized {
            return Ok((self.clone(), DMatrix::identity(n, n)));
        }
        let chol = self
            .value_at_origin()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let c = chol.l();
        let l = c
            .transpose()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite)?;
        let mut out = self.pull_back_linear(&l)?;
        if !out.is_identity_at_origin(NORMALIZED_TOL) {
            return Err(Error::NotPositiveDefinite);
        }
        for i in 0..n {
            for j in 0..n {
                out.entries[i * n + j].coeffs_mut()[0] = if i == j { 1.0 } else { 0.0 };
            }
        }
        out.normalized = true;
        Ok((out, l))
    }

    /// `e^{factor_exponent · f} g`.
    pub fn conformal_rescale(&self, f: &ScalarJet, factor_exponent: i32) -> Result<Self> {
        if f.dim() != self.n {
            return Err(Error::DimensionMismatch { left: f.dim(), right: self.n });
        }
        let w = f.scale_real(factor_exponent as f64).exp();
        let entries = self.entries.iter().map(|e| e * &w).collect();
        Self::new(self.n, entries)
    }

    /// Constant rescaling `t g`.
    pub fn scale(&self, t: f64) -> Result<Self> {
        Self::new(self.n, self.entries.iter().map(|e| e.scale_real(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{model_metric, ModelKind};

    fn var(n: usize, order: usize, i: usize) -> ScalarJet {
        ScalarJet::variable(n, order, i)
    }

    #[test]
    fn flat_inverse_is_identity() {
        let g = MetricJet::identity(3, 2);
        let inv = g.inverse_entries().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(inv[i * 3 + j], ScalarJet::constant(3, 2, want));
            }
        }
    }

    #[test]
    fn diagonal_inverse_is_geometric_series() {
        let n = 2;
        let g = MetricJet::from_fn(n, |i, j| match (i, j) {
            (0, 0) => &ScalarJet::constant(n, 2, 1.0) + &var(n, 2, 0),
            (1, 1) => ScalarJet::constant(n, 2, 1.0),
            _ => ScalarJet::zero(n, 2),
        })
        .unwrap();
        let inv = g.inverse_entries().unwrap();
        assert_eq!(inv[0].coeffs()[..], [1.0, -1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(inv[3], ScalarJet::constant(n, 2, 1.0));
        assert!(inv[1].is_zero());
    }

    #[test]
    fn random_inverse_multiplies_back() {
        for seed in 0..5 {
            let g = model_metric(&ModelKind::RandomPolynomial { seed, magnitude: 0.2, order: 4 }, 4)
                .unwrap()
                .metric;
            let inv = g.inverse_entries().unwrap();
            let n = 4;
            for i in 0..n {
                for k in 0..n {
                    let mut acc = ScalarJet::zero(n, 4);
                    for j in 0..n {
                        acc.add_product(g.get(i, j), &inv[j * n + k], 1.0);
                    }
                    let want = ScalarJet::constant(n, 4, if i == k { 1.0 } else { 0.0 });
                    assert!((&acc - &want).max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn singular_and_indefinite_metrics_rejected() {
        let e = MetricJet::from_fn(2, |i, j| {
            ScalarJet::constant(2, 1, if i == j { if i == 0 { 1.0 } else { -1.0 } } else { 0.0 })
        });
        assert_eq!(e.unwrap_err(), Error::NotPositiveDefinite);
        let asym = MetricJet::new(
            2,
            vec![
                ScalarJet::constant(2, 1, 1.0),
                ScalarJet::constant(2, 1, 0.1),
                ScalarJet::constant(2, 1, 0.2),
                ScalarJet::constant(2, 1, 1.0),
            ],
        );
        assert_eq!(asym.unwrap_err(), Error::NotSymmetric(0, 1));
    }

    #[test]
    fn normalize_examples() {
        let g = MetricJet::identity(3, 2);
        let (h, l) = g.normalize().unwrap();
        assert_eq!(h, g);
        assert_eq!(l, DMatrix::identity(3, 3));

        let d = MetricJet::from_fn(2, |i, j| {
            ScalarJet::constant(2, 2, if i != j { 0.0 } else if i == 0 { 4.0 } else { 1.0 })
        })
        .unwrap();
        let (h, l) = d.normalize().unwrap();
        assert!(h.is_normalized());
        assert_eq!(h, MetricJet::identity(2, 2));
        assert!((l[(0, 0)] - 0.5).abs() < 1e-15 && (l[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_random_constant_term() {
        let n = 3;
        let base = model_metric(&ModelKind::RandomPolynomial { seed: 3, magnitude: 0.2, order: 3 }, n)
            .unwrap()
            .metric;
        // a non-diagonal congruence of the random metric
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.0, 1.3, -0.2, 0.1, 0.0, 0.8]);
        let g = base.pull_back_linear(&m).unwrap();
        assert!(!g.is_normalized());
        let (h, l) = g.normalize().unwrap();
        let unsnapped = g.pull_back_linear(&l).unwrap();
        assert!(unsnapped.is_identity_at_origin(1e-14));
        assert!(h.is_normalized());
        let (again, l2) = h.normalize().unwrap();
        assert_eq!(again, h);
        assert_eq!(l2, DMatrix::identity(3, 3));
    }

    #[test]
    fn conformal_rescale_examples() {
        let n = 3;
        let g = model_metric(&ModelKind::RandomPolynomial { seed: 1, magnitude: 0.2, order: 3 }, n)
            .unwrap()
            .metric;
        assert_eq!(g.conformal_rescale(&ScalarJet::zero(n, 3), 2).unwrap(), g);

        let flat = MetricJet::identity(n, 2);
        let c = ScalarJet::constant(n, 2, 0.3);
        let r = flat.conformal_rescale(&c, 2).unwrap();
        assert!((r.get(0, 0).constant_term() - (0.6f64).exp()).abs() < 1e-15);
        assert!(r.get(0, 1).is_zero());

        let f = &var(n, 3, 0).scale_real(0.2) + &(&var(n, 3, 1) * &var(n, 3, 2)).scale_real(0.5);
        let back = g
            .conformal_rescale(&f, 1)
            .unwrap()
            .conformal_rescale(&(-&f), 1)
            .unwrap();
        for (a, b) in back.entries().iter().zip(g.entries()) {
            assert!((a - b).max_abs() < 1e-12);
        }
    }
}
