//! Slow, independent reference implementations. Each one exists to check a
//! faster pipeline stage and shares as little code with it as possible.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use crate::metric::MetricJet;
use crate::symbol::HomogeneousSymbol;
use crate::tensor::{Slot, TensorJet, Variance};

/// Closed-form metric evaluator: point → row-major `n × n` matrix.
pub type MetricFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Flat { order: usize },
    /// Round unit sphere in stereographic coordinates, `4 δ / (1 + |x|²)²`.
    Sphere { order: usize },
    /// `e^{2f} δ`.
    ConformallyFlat { f: ScalarJet },
    /// `δ + h` with `h` symmetric, `h(0) = 0`, and coefficients of `x^α`
    /// drawn from `U(-magnitude, magnitude) / α!`.
    RandomPolynomial { seed: u64, magnitude: f64, order: usize },
}

pub struct ModelMetric {
    pub metric: MetricJet,
    /// Exact evaluator where the model has a closed form.
    pub evaluator: Option<MetricFn>,
}

pub fn model_metric(kind: &ModelKind, n: usize) -> Result<ModelMetric> {
    if n == 0 {
        return Err(Error::Input("dimension must be positive".into()));
    }
    match kind {
        ModelKind::Flat { order } => Ok(ModelMetric {
            metric: MetricJet::identity(n, *order),
            evaluator: Some(Arc::new(move |_: &[f64]| {
                (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect()
            })),
        }),
        ModelKind::Sphere { order } => {
            let mut s = ScalarJet::constant(n, *order, 1.0);
            for i in 0..n {
                let x = ScalarJet::variable(n, *order, i);
                s.add_product(&x, &x, 1.0);
            }
            let factor = s.powi(-2)?.scale_real(4.0);
            let metric = MetricJet::from_fn(n, |i, j| {
                if i == j {
                    factor.clone()
                } else {
                    ScalarJet::zero(n, *order)
                }
            })?;
            Ok(ModelMetric {
                metric,
                evaluator: Some(Arc::new(move |x: &[f64]| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let c = 4.0 / ((1.0 + r2) * (1.0 + r2));
                    (0..n * n).map(|k| if k / n == k % n { c } else { 0.0 }).collect()
                })),
            })
        }
        ModelKind::ConformallyFlat { f } => {
            if f.dim() != n {
                return Err(Error::DimensionMismatch { left: f.dim(), right: n });
            }
            let metric = MetricJet::identity(n, f.order()).conformal_rescale(f, 2)?;
            let fj = f.clone();
            Ok(ModelMetric {
                metric,
                evaluator: Some(Arc::new(move |x: &[f64]| {
                    let c = (2.0 * fj.eval(x)).exp();
                    (0..n * n).map(|k| if k / n == k % n { c } else { 0.0 }).collect()
                })),
            })
        }
        ModelKind::RandomPolynomial { seed, magnitude, order } => {
            if !(0.0..=0.2).contains(magnitude) {
                return Err(Error::Input(format!(
                    "random metric magnitude {magnitude} outside [0, 0.2]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let template = ScalarJet::zero(n, *order);
            let len = template.coeffs().len();
            let mut entries = vec![ScalarJet::zero(n, *order); n * n];
            for i in 0..n {
                for j in i..n {
                    let mut e = ScalarJet::constant(n, *order, if i == j { 1.0 } else { 0.0 });
                    for k in 1..len {
                        let damp: f64 = template.basis().exponent(k).iter().map(|&a| factorial(a as usize)).product();
                        let u: f64 = rng.random_range(-*magnitude..*magnitude);
                        e.coeffs_mut()[k] = u / damp;
                    }
                    entries[j * n + i] = e.clone();
                    entries[i * n + j] = e;
                }
            }
            Ok(ModelMetric {
                metric: MetricJet::new(n, entries)?,
                evaluator: None,
            })
        }
    }
}

/// Random scalar jet with coefficients of `x^α` drawn from
/// `U(-magnitude, magnitude) / α!`, constant term included. Used for
/// conformal factors.
pub fn random_scalar_jet(n: usize, order: usize, seed: u64, magnitude: f64) -> ScalarJet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ScalarJet::zero(n, order);
    for k in 0..f.coeffs().len() {
        let damp: f64 = f.basis().exponent(k).iter().map(|&a| factorial(a as usize)).product();
        let u: f64 = rng.random_range(-magnitude..magnitude);
        f.coeffs_mut()[k] = u / damp;
    }
    f
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Complete contraction of the values at the origin by plain nested loops.
/// Equal-variance pairs carry an explicit `g^{ab}(0)` or `g_ab(0)` factor.
pub fn naive_contract(tensors: &[&TensorJet], pairing: &[(Slot, Slot)], g: &MetricJet) -> Result<f64> {
    let n = g.dim();
    let mut covered: Vec<Vec<bool>> = tensors.iter().map(|t| vec![false; t.rank()]).collect();
    for (a, b) in pairing {
        for s in [a, b] {
            let c = covered
                .get_mut(s.tensor)
                .and_then(|v| v.get_mut(s.slot))
                .ok_or_else(|| Error::SlotMismatch(format!("no slot {} on tensor {}", s.slot, s.tensor)))?;
            if *c {
                return Err(Error::SlotMismatch(format!("slot {} on tensor {} used twice", s.slot, s.tensor)));
            }
            *c = true;
        }
    }
    if covered.iter().flatten().any(|c| !c) {
        return Err(Error::SlotMismatch("pattern leaves free slots".into()));
    }
    let g0 = g.value_at_origin();
    let ginv0 = g0.clone().try_inverse().ok_or(Error::Singular)?;
    let values: Vec<Vec<f64>> = tensors.iter().map(|t| t.constant_values()).collect();

    // per pair: the index pairs it runs over and their weights
    let delta: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
    let entries = |m: &DMatrix<f64>| -> Vec<(usize, usize, f64)> {
        (0..n * n)
            .map(|k| (k / n, k % n, m[(k / n, k % n)]))
            .filter(|e| e.2 != 0.0)
            .collect()
    };
    let couplers: Vec<Vec<(usize, usize, f64)>> = pairing
        .iter()
        .map(|(a, b)| {
            let va = tensors[a.tensor].variance()[a.slot];
            let vb = tensors[b.tensor].variance()[b.slot];
            match (va, vb) {
                (Variance::Co, Variance::Co) => entries(&ginv0),
                (Variance::Contra, Variance::Contra) => entries(&g0),
                _ => delta.clone(),
            }
        })
        .collect();
    let mut counter = vec![0usize; pairing.len()];
    let mut idx: Vec<Vec<usize>> = tensors.iter().map(|t| vec![0; t.rank()]).collect();
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for (p, (a, b)) in pairing.iter().enumerate() {
            let (ia, ib, c) = couplers[p][counter[p]];
            w *= c;
            idx[a.tensor][a.slot] = ia;
            idx[b.tensor][b.slot] = ib;
        }
        for (ti, t) in tensors.iter().enumerate() {
            w *= values[ti][t.flat_index(&idx[ti])];
        }
        total += w;
        for p in (0..counter.len()).rev() {
            counter[p] += 1;
            if counter[p] < couplers[p].len() {
                continue 'outer;
            }
            counter[p] = 0;
        }
        break;
    }
    Ok(total)
}

/// Monte-Carlo estimate of `∫_{S^{n-1}} f dσ` from normalized Gaussian
/// samples. Returns `(mean, standard error)`.
pub fn mc_sphere_integral_fn(f: impl Fn(&[f64]) -> f64, n: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 10_000 {
        return Err(Error::Input(format!("Monte-Carlo needs at least 10^4 samples, got {samples}")));
    }
    if n < 2 {
        return Err(Error::DimensionTooSmall { what: "sphere integral", n, min: 2 });
    }
    let area = sphere_area(n);
    // fixed-size chunks on separate ChaCha streams keep results independent of chunking
    const CHUNK: usize = 1 << 16;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut xi = vec![0.0; n];
    let mut done = 0usize;
    let mut stream = 0u64;
    while done < samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let take = CHUNK.min(samples - done);
        for _ in 0..take {
            let mut r2 = 0.0f64;
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
                r2 += *v * *v;
            }
            let r = r2.sqrt();
            for v in xi.iter_mut() {
                *v /= r;
            }
            let y = f(&xi);
            sum += y;
            sum_sq += y * y;
        }
        done += take;
        stream += 1;
    }
    let m = sum / samples as f64;
    let var = (sum_sq / samples as f64 - m * m).max(0.0);
    Ok((area * m, area * (var / samples as f64).sqrt()))
}

/// Monte-Carlo sphere integral of a symbol's value at the origin (real part
/// and imaginary part are integrated separately).
pub fn mc_sphere_integral(part: &HomogeneousSymbol, samples: usize, seed: u64) -> Result<(Complex64, Complex64)> {
    let n = part.dim();
    let (re, se_re) = mc_sphere_integral_fn(|xi| part.eval(&vec![0.0; n], xi).re, n, samples, seed)?;
    let (im, se_im) = mc_sphere_integral_fn(|xi| part.eval(&vec![0.0; n], xi).im, n, samples, seed)?;
    Ok((Complex64::new(re, im), Complex64::new(se_re, se_im)))
}

/// `|S^{n-1}| = 2 π^{n/2} / Γ(n/2)` by the two-step recurrence.
fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    let mut a = if n % 2 == 0 { 2.0 * PI } else { 4.0 * PI };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k < n {
        a *= 2.0 * PI / k as f64;
        k += 2;
    }
    if n == 1 {
        2.0
    } else {
        a
    }
}

/// Taylor jet of a closed-form metric by central finite differences with one
/// Richardson step. Degrees above two use a larger step, since roundoff grows
/// like `h^{-k}`.
pub fn fd_metric_jet(gfun: &dyn Fn(&[f64]) -> Vec<f64>, n: usize, x0: &[f64], order: usize, h: f64) -> Result<MetricJet> {
    if order > 4 {
        return Err(Error::Input(format!("finite-difference jets are limited to order 4, got {order}")));
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { left: x0.len(), right: n });
    }
    let template = ScalarJet::zero(n, order);
    let len = template.coeffs().len();
    let mut entries = vec![ScalarJet::zero(n, order); n * n];
    for k in 0..len {
        let alpha: Vec<usize> = template.basis().exponent(k).iter().map(|&a| a as usize).collect();
        let deg: usize = alpha.iter().sum();
        let step = if deg <= 2 { h } else { h * 10f64.powf((deg as f64 - 2.0) / 2.0) };
        let d1 = mixed_central(gfun, n, x0, &alpha, step);
        let d2 = mixed_central(gfun, n, x0, &alpha, step / 2.0);
        let fact: f64 = alpha.iter().map(|&a| factorial(a)).product();
        for (e, (a, b)) in entries.iter_mut().zip(d1.iter().zip(&d2)) {
            e.coeffs_mut()[k] = ((4.0 * b - a) / 3.0) / fact;
        }
    }
    // symmetric up to finite-difference noise
    let sym = (0..n * n)
        .map(|f| {
            let (i, j) = (f / n, f % n);
            (&entries[i * n + j] + &entries[j * n + i]).scale_real(0.5)
        })
        .collect();
    MetricJet::new(n, sym)
}

/// `∂^α` of every matrix entry by the tensor product of central differences.
fn mixed_central(gfun: &dyn Fn(&[f64]) -> Vec<f64>, n: usize, x0: &[f64], alpha: &[usize], h: f64) -> Vec<f64> {
    // stencil per variable: offsets (k/2 - j) h with weights (-1)^j C(k, j) / h^k
    let stencils: Vec<Vec<(f64, f64)>> = alpha
        .iter()
        .map(|&k| {
            (0..=k)
                .map(|j| {
                    let w = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(k, j) / h.powi(k as i32);
                    ((k as f64 / 2.0 - j as f64) * h, w)
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; n * n];
    let mut pick = vec![0usize; n];
    let mut x = x0.to_vec();
    loop {
        let mut w = 1.0;
        for v in 0..n {
            let (off, wv) = stencils[v][pick[v]];
            x[v] = x0[v] + off;
            w *= wv;
        }
        for (o, val) in out.iter_mut().zip(gfun(&x)) {
            *o += w * val;
        }
        let mut v = 0;
        loop {
            if v == n {
                return out;
            }
            pick[v] += 1;
            if pick[v] < stencils[v].len() {
                break;
            }
            pick[v] = 0;
            v += 1;
        }
    }
}

fn binomial(k: usize, j: usize) -> f64 {
    factorial(k) / (factorial(j) * factorial(k - j))
}

/// Positive Laplace-Beltrami operator `-(1/√g) ∂_i (√g g^{ij} ∂_j u)` at a
/// point, by nested central differences of a closed-form metric.
pub fn fd_laplace_beltrami(gfun: &dyn Fn(&[f64]) -> Vec<f64>, u: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let n = x.len();
    let flux = |y: &[f64], i: usize| -> f64 {
        let g = DMatrix::from_row_slice(n, n, &gfun(y));
        let sq = g.determinant().sqrt();
        let ginv = g.try_inverse().expect("metric evaluator must be invertible");
        let mut acc = 0.0;
        for j in 0..n {
            let mut p = y.to_vec();
            let mut m = y.to_vec();
            p[j] += h;
            m[j] -= h;
            acc += ginv[(i, j)] * (u(&p) - u(&m)) / (2.0 * h);
        }
        sq * acc
    };
    let g = DMatrix::from_row_slice(n, n, &gfun(x));
    let sq = g.determinant().sqrt();
    let mut div = 0.0;
    for i in 0..n {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[i] += h;
        m[i] -= h;
        div += (flux(&p, i) - flux(&m, i)) / (2.0 * h);
    }
    -div / sq
}

/// Polynomial test function `Σ c_α x^α` stored as a jet.
pub type Polynomial = crate::jet::ComplexJet;

/// Left quantization of a polynomial-in-ξ symbol applied to a polynomial:
/// `Op(p) u = Σ_β c_β(x) D^β u` with `D = -i ∂`. Only terms without a `|ξ|`
/// denominator can act this way; anything else is rejected.
pub fn apply_differential_symbol(parts: &[HomogeneousSymbol], u: &Polynomial) -> Result<Polynomial> {
    let n = u.dim();
    let mut out = Polynomial::zero(n, u.order());
    for part in parts {
        for (beta, coeff) in part.polynomial_terms()? {
            let mut du = u.clone();
            let mut factor = Complex64::new(1.0, 0.0);
            let mut ok = true;
            for (v, &b) in beta.iter().enumerate() {
                for _ in 0..b {
                    if du.order() == 0 {
                        du = Polynomial::zero(n, 0);
                        ok = false;
                        break;
                    }
                    du = du.diff(v)?;
                    factor *= Complex64::new(0.0, -1.0);
                }
            }
            if !ok {
                continue;
            }
            let mut term = Polynomial::zero(n, u.order());
            term.add_product(&coeff, &du, factor);
            // keep the output at the input order by padding with zeros
            let mut padded = Polynomial::zero(n, u.order());
            for (k, c) in term.coeffs().iter().enumerate() {
                padded.coeffs_mut()[k] = *c;
            }
            out.add_scaled(&padded, Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::slot;
    use std::f64::consts::PI;

    #[test]
    fn models_are_deterministic_and_positive() {
        let a = model_metric(&ModelKind::RandomPolynomial { seed: 7, magnitude: 0.2, order: 3 }, 4).unwrap();
        let b = model_metric(&ModelKind::RandomPolynomial { seed: 7, magnitude: 0.2, order: 3 }, 4).unwrap();
        assert_eq!(a.metric, b.metric);
        assert!(a.metric.is_normalized());
        assert!(a.metric.value_at_origin().cholesky().is_some());
        let flat = model_metric(&ModelKind::Flat { order: 2 }, 3).unwrap();
        assert_eq!(flat.metric, MetricJet::identity(3, 2));
        assert!(model_metric(&ModelKind::RandomPolynomial { seed: 1, magnitude: 0.5, order: 2 }, 2).is_err());
    }

    #[test]
    fn naive_trace_of_delta() {
        let n = 4;
        let g = MetricJet::identity(n, 0);
        let d = TensorJet::covariant(n, 2, |ix| ScalarJet::constant(n, 0, if ix[0] == ix[1] { 1.0 } else { 0.0 }));
        let v = naive_contract(&[&d, &d], &[(slot(0, 0), slot(1, 0)), (slot(0, 1), slot(1, 1))], &g).unwrap();
        assert_eq!(v, 4.0);
        let err = naive_contract(&[&d], &[(slot(0, 0), slot(0, 2))], &g).unwrap_err();
        assert!(matches!(err, Error::SlotMismatch(_)));
    }

    #[test]
    fn naive_contract_with_nontrivial_metric() {
        let n = 2;
        let g = MetricJet::from_fn(n, |i, j| ScalarJet::constant(n, 0, if i == j { 2.0 } else { 0.0 })).unwrap();
        let v = TensorJet::covariant(n, 1, |ix| ScalarJet::constant(n, 0, [3.0, 4.0][ix[0]]));
        let norm = naive_contract(&[&v, &v], &[(slot(0, 0), slot(1, 0))], &g).unwrap();
        assert!((norm - 12.5).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_sphere_examples() {
        let (m, se) = mc_sphere_integral_fn(|_| 1.0, 2, 1_000_000, 1).unwrap();
        assert!((m - 2.0 * PI).abs() <= 3.0 * se + 1e-12);
        let (m, se) = mc_sphere_integral_fn(|x| x[0] * x[0], 4, 200_000, 2).unwrap();
        assert!((m - PI * PI / 2.0).abs() < 3.0 * se);
        let (m, se) = mc_sphere_integral_fn(|x| x[0] * x[1] * x[1], 3, 200_000, 3).unwrap();
        assert!(m.abs() < 3.0 * se);
        assert!(mc_sphere_integral_fn(|_| 1.0, 2, 10, 1).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn fd_jets_of_model_metrics() {
        let flat = model_metric(&ModelKind::Flat { order: 2 }, 3).unwrap();
        let fd = fd_metric_jet(flat.evaluator.as_ref().unwrap().as_ref(), 3, &[0.0; 3], 2, 1e-3).unwrap();
        for (a, b) in fd.entries().iter().zip(flat.metric.entries()) {
            assert!((a - b).max_abs() < 1e-10);
        }
        let s = model_metric(&ModelKind::Sphere { order: 4 }, 3).unwrap();
        let fd = fd_metric_jet(s.evaluator.as_ref().unwrap().as_ref(), 3, &[0.0; 3], 4, 1e-3).unwrap();
        for (a, b) in fd.entries().iter().zip(s.metric.entries()) {
            assert!((a - b).max_abs() < 2e-5, "{}", (a - b).max_abs());
        }
    }

    #[test]
    fn fd_laplacian_of_flat_quadratic() {
        let flat = |_: &[f64]| vec![1.0, 0.0, 0.0, 1.0];
        let v = fd_laplace_beltrami(&flat, &|x: &[f64]| x[0] * x[0], &[0.1, 0.2], 1e-3);
        assert!((v + 2.0).abs() < 1e-6);
    }
}
