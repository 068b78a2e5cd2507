//! The metric file format and the named model metrics accepted by `--metric`.
//!
//! ```text
//! # round sphere patch in dimension 2
//! dim = 2
//! g[1][1] = "4/(1 + x1^2 + x2^2)^2"
//! g[2][2] = "4/(1 + x1^2 + x2^2)^2"
//! ```
//!
//! Indices are 1-based. Entries left out default to `δ_ij`, and an entry given
//! on one side of the diagonal only is mirrored to the other.

use crate::dsl::{eval_jet, parse, Expr};
use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use crate::metric::MetricJet;
use crate::oracles::{model_metric, ModelKind};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricFile {
    pub dim: usize,
    /// `(i, j, expr)` with zero-based indices, in file order.
    pub entries: Vec<(usize, usize, Expr)>,
}

fn line_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("metric file line {line}: {msg}"))
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i - 1),
        _ => Err(line_error(line, format!("bad index '{s}' (indices start at 1)"))),
    }
}

pub fn parse_metric_file(text: &str) -> Result<MetricFile> {
    let mut dim = None;
    let mut entries: Vec<(usize, usize, Expr)> = vec![];
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = match raw.find('#') {
            // a '#' inside the quoted expression is not a comment, but the
            // expression language has no '#', so cutting is safe either way
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| line_error(line_no, "expected 'key = value'"))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if lhs == "dim" {
            if dim.is_some() {
                return Err(line_error(line_no, "dim given twice"));
            }
            let n: usize = rhs.parse().map_err(|_| line_error(line_no, format!("bad dimension '{rhs}'")))?;
            if n == 0 {
                return Err(line_error(line_no, "dimension must be positive"));
            }
            dim = Some(n);
            continue;
        }
        let rest = lhs
            .strip_prefix("g[")
            .ok_or_else(|| line_error(line_no, format!("unknown key '{lhs}'")))?;
        let (i, rest) = rest
            .split_once("][")
            .ok_or_else(|| line_error(line_no, "expected g[i][j]"))?;
        let j = rest.strip_suffix(']').ok_or_else(|| line_error(line_no, "expected g[i][j]"))?;
        let (i, j) = (parse_index(i, line_no)?, parse_index(j, line_no)?);
        let body = rhs
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| line_error(line_no, "entry values are double-quoted expressions"))?;
        let expr = parse(body).map_err(|e| line_error(line_no, e))?;
        if entries.iter().any(|(a, b, _)| (*a, *b) == (i, j)) {
            return Err(line_error(line_no, format!("g[{}][{}] given twice", i + 1, j + 1)));
        }
        entries.push((i, j, expr));
    }
    let dim = dim.ok_or_else(|| Error::Input("metric file has no 'dim = n' line".into()))?;
    for (i, j, e) in &entries {
        if *i >= dim || *j >= dim {
            return Err(Error::Input(format!("g[{}][{}] is outside dimension {dim}", i + 1, j + 1)));
        }
        if e.dim_needed() > dim {
            return Err(Error::Input(format!("g[{}][{}] uses x{} in dimension {dim}", i + 1, j + 1, e.dim_needed())));
        }
    }
    Ok(MetricFile { dim, entries })
}

impl MetricFile {
    /// Taylor jet of the metric at the origin.
    pub fn jet(&self, order: usize) -> Result<MetricJet> {
        let n = self.dim;
        let mut g: Vec<Option<ScalarJet>> = vec![None; n * n];
        for (i, j, e) in &self.entries {
            g[i * n + j] = Some(eval_jet(e, n, order)?);
        }
        let entries = (0..n * n)
            .map(|f| {
                let (i, j) = (f / n, f % n);
                g[f].clone()
                    .or_else(|| g[j * n + i].clone())
                    .unwrap_or_else(|| ScalarJet::constant(n, order, if i == j { 1.0 } else { 0.0 }))
            })
            .collect();
        MetricJet::new(n, entries)
    }

    /// Pointwise metric, for the finite-difference oracles.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut out: Vec<Option<f64>> = vec![None; n * n];
        for (i, j, e) in &self.entries {
            out[i * n + j] = Some(e.eval(x)?);
        }
        Ok((0..n * n)
            .map(|f| {
                let (i, j) = (f / n, f % n);
                out[f].or(out[j * n + i]).unwrap_or(if i == j { 1.0 } else { 0.0 })
            })
            .collect())
    }
}

/// What `--metric` named.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSource {
    Flat,
    Sphere,
    Random(Option<u64>),
    File(String),
}

impl MetricSource {
    pub fn parse(s: &str) -> MetricSource {
        match s {
            "flat" => MetricSource::Flat,
            "sphere" => MetricSource::Sphere,
            "random" => MetricSource::Random(None),
            _ => match s.strip_prefix("random:").map(str::parse::<u64>) {
                Some(Ok(seed)) => MetricSource::Random(Some(seed)),
                _ => MetricSource::File(s.to_string()),
            },
        }
    }

    /// Builds the jet; files fix the dimension, the named models take `dim`.
    pub fn load(&self, dim: Option<usize>, order: usize, seed: u64) -> Result<MetricJet> {
        let need_dim = || dim.ok_or_else(|| Error::Input("--dim is required with a named metric".into()));
        match self {
            MetricSource::Flat => Ok(model_metric(&ModelKind::Flat { order }, need_dim()?)?.metric),
            MetricSource::Sphere => Ok(model_metric(&ModelKind::Sphere { order }, need_dim()?)?.metric),
            MetricSource::Random(s) => Ok(model_metric(
                &ModelKind::RandomPolynomial {
                    seed: s.unwrap_or(seed),
                    magnitude: 0.2,
                    order,
                },
                need_dim()?,
            )?
            .metric),
            MetricSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read metric file '{path}': {e}")))?;
                let file = parse_metric_file(&text)?;
                if let Some(d) = dim {
                    if d != file.dim {
                        return Err(Error::Input(format!("--dim {d} disagrees with dim = {} in '{path}'", file.dim)));
                    }
                }
                file.jet(order)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            MetricSource::Flat => "flat".into(),
            MetricSource::Sphere => "sphere".into(),
            MetricSource::Random(None) => "random".into(),
            MetricSource::Random(Some(s)) => format!("random:{s}"),
            MetricSource::File(p) => p.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE2: &str = r#"
# round sphere patch
dim = 2
g[1][1] = "4/(1 + x1^2 + x2^2)^2"   # conformal factor
g[2][2] = "4/(1 + x1^2 + x2^2)^2"
"#;

    #[test]
    fn sphere_file_matches_model() {
        let f = parse_metric_file(SPHERE2).unwrap();
        let g = f.jet(4).unwrap();
        let model = model_metric(&ModelKind::Sphere { order: 4 }, 2).unwrap().metric;
        for (a, b) in g.entries().iter().zip(model.entries()) {
            assert!((a - b).max_abs() < 1e-14);
        }
        assert_eq!(f.eval(&[0.0, 0.0]).unwrap(), vec![4.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn defaults_and_mirroring() {
        let f = parse_metric_file("dim = 3\ng[1][2] = \"0.1*x3\"\n").unwrap();
        let g = f.jet(1).unwrap();
        assert_eq!(g.get(1, 0).coeff(&[0, 0, 1]), 0.1);
        assert_eq!(g.get(2, 2).constant_term(), 1.0);
    }

    #[test]
    fn malformed_files() {
        assert!(parse_metric_file("g[1][1] = \"1\"").is_err());
        assert!(parse_metric_file("dim = 2\ng[3][1] = \"1\"").is_err());
        assert!(parse_metric_file("dim = 2\ng[0][1] = \"1\"").is_err());
        assert!(parse_metric_file("dim = 2\ng[1][1] = 1").is_err());
        assert!(parse_metric_file("dim = 2\ng[1][1] = \"x3\"").is_err());
        assert!(parse_metric_file("dim = 2\nh = \"1\"").is_err());
        let e = parse_metric_file("dim = 2\ng[1][1] = \"1 +\"").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_metric_file("dim = 2\ng[1][2] = \"x1\"\ng[2][1] = \"x2\"").unwrap().jet(1).unwrap_err();
        assert!(matches!(e, Error::NotSymmetric(..)));
    }

    #[test]
    fn sources() {
        assert_eq!(MetricSource::parse("random:7"), MetricSource::Random(Some(7)));
        assert_eq!(MetricSource::parse("metric.txt"), MetricSource::File("metric.txt".into()));
        assert!(MetricSource::Flat.load(None, 2, 1).is_err());
        assert_eq!(MetricSource::Sphere.load(Some(3), 2, 1).unwrap().dim(), 3);
    }
}
