//! Command-line front end. [`run`] parses arguments, runs one check and
//! returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | internal error |
//! | 2 | a check missed its tolerance |
//! | 3 | bad input (arguments, metric file, expression) |
//! | 4 | metric jet order too small for the request |

pub mod metric_file;
pub mod report;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::dsl::{eval_jet, parse};
use crate::error::Error;
use crate::logsing::{conformal_check, critical_constant, green_logsing, parity_vanishing_check, relative_error};
use crate::metric::MetricJet;
use crate::operators::{OperatorKind, OperatorSpec};
use crate::oracles::random_scalar_jet;
use crate::parametrix::required_jet_order;
use crate::tensor::{all_invariants, contract_full, cotton_v_u_phi, slot, weight3_weyl_invariants, weyl_norm_sq};

use metric_file::MetricSource;
use report::{num, render, Format, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_JET_ORDER: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "microlocal", version, about = "Logarithmic singularities of Green kernels from metric jets")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Add the remaining tolerance margin to every report.
    #[arg(long, global = true)]
    tolerance_report: bool,

    /// Leave `runtime_ms` out so that repeated runs are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(Args, Debug, Clone)]
struct MetricArgs {
    #[arg(long)]
    dim: Option<usize>,

    /// Defaults to the order the request needs.
    #[arg(long)]
    jet_order: Option<usize>,

    /// `flat`, `sphere`, `random`, `random:SEED` or a metric file path.
    #[arg(long, default_value = "random")]
    metric: String,

    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Curvature invariants of weight 2 and 3 at the base point.
    Invariants {
        #[command(flatten)]
        m: MetricArgs,
    },
    /// Logarithmic singularity of the Green kernel of an operator.
    Logsing {
        #[command(flatten)]
        m: MetricArgs,
        #[arg(long, default_value = "yamabe")]
        operator: String,
    },
    /// Compare the singularity before and after a conformal change e^{2f} g.
    ConformalCheck {
        #[command(flatten)]
        m: MetricArgs,
        #[arg(long, default_value = "yamabe")]
        operator: String,
        /// Expression for f in x1..xn; a seeded random jet when absent.
        #[arg(long)]
        conformal_factor: Option<String>,
    },
    /// Vanishing and term parity of the singularity in odd dimension.
    OddDimCheck {
        #[command(flatten)]
        m: MetricArgs,
        #[arg(long, default_value = "yamabe")]
        operator: String,
    },
    /// Run one oracle comparison: contract, dsl-fd or sphere-mc.
    Oracle { name: String },
    /// The full acceptance battery.
    PaperSuite {
        /// Include the dimension 8 check (several minutes per metric).
        #[arg(long)]
        slow: bool,
    },
}

/// Runs the command line `argv` (program name first), printing reports on
/// stdout and structured errors on stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let timing = !cli.no_timing;
    let start = Instant::now();
    let reports = match execute(&cli.command, timing) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}", report::to_json(&error_json(&e)));
            return exit_code(&e);
        }
    };
    let single = reports.len() == 1;
    let reports: Vec<Report> = reports
        .into_iter()
        .map(|mut r| {
            if timing && single && r.runtime_ms.is_none() {
                r.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            r
        })
        .collect();
    let out = render(&reports, cli.format, cli.tolerance_report);
    let mut stdout = std::io::stdout().lock();
    if writeln!(stdout, "{}", out.trim_end()).is_err() {
        return EXIT_INTERNAL;
    }
    if reports.iter().any(Report::failed) {
        EXIT_TOLERANCE
    } else {
        EXIT_OK
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InsufficientJetOrder { .. } | Error::InsufficientDepth { .. } => EXIT_JET_ORDER,
        Error::Input(_)
        | Error::Syntax { .. }
        | Error::UnknownIdentifier { .. }
        | Error::Arity { .. }
        | Error::Domain { .. }
        | Error::NotPositiveDefinite
        | Error::NotSymmetric(..)
        | Error::DimensionTooSmall { .. }
        | Error::PrincipalOnly(_)
        | Error::NotAdmissible(_) => EXIT_INPUT,
        _ => EXIT_INTERNAL,
    }
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::InsufficientJetOrder { .. } | Error::InsufficientDepth { .. } => "insufficient_jet_order",
        _ if exit_code(e) == EXIT_INPUT => "input",
        _ => "internal",
    };
    let mut obj = Map::new();
    obj.insert("kind".into(), kind.into());
    obj.insert("message".into(), e.to_string().into());
    match e {
        Error::InsufficientJetOrder { required, available, .. } => {
            obj.insert("required_order".into(), (*required).into());
            obj.insert("available_order".into(), (*available).into());
        }
        Error::Syntax { offset, .. } | Error::UnknownIdentifier { offset, .. } => {
            obj.insert("offset".into(), (*offset).into());
        }
        _ => {}
    }
    json!({ "schema_version": report::SCHEMA_VERSION, "error": obj })
}

fn parse_operator(s: &str) -> crate::Result<OperatorSpec> {
    s.parse()
}

/// Loads the metric at `--jet-order`, or at `need` when absent. An explicit
/// order below `need` is refused up front so the error names `need`.
fn load_metric(m: &MetricArgs, need: usize, what: &str) -> crate::Result<MetricJet> {
    let order = m.jet_order.unwrap_or(need);
    if order < need {
        return Err(Error::InsufficientJetOrder {
            what: what.to_string(),
            required: need,
            available: order,
        });
    }
    MetricSource::parse(&m.metric).load(m.dim, order, m.seed)
}

fn file_dim(m: &MetricArgs) -> crate::Result<usize> {
    match (m.dim, MetricSource::parse(&m.metric)) {
        (Some(d), _) => Ok(d),
        (None, MetricSource::File(path)) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Input(format!("cannot read metric file '{path}': {e}")))?;
            Ok(metric_file::parse_metric_file(&text)?.dim)
        }
        (None, _) => Err(Error::Input("--dim is required with a named metric".into())),
    }
}

fn base_report(check: &str, m: &MetricArgs, n: usize, g: &MetricJet) -> Report {
    let mut r = Report::new(check)
        .input("dim", n)
        .input("jet_order", g.order())
        .input("metric", MetricSource::parse(&m.metric).label());
    if matches!(MetricSource::parse(&m.metric), MetricSource::Random(None)) {
        r = r.input("seed", m.seed);
    }
    r
}

fn execute(cmd: &Command, timing: bool) -> crate::Result<Vec<Report>> {
    match cmd {
        Command::Invariants { m } => invariants(m).map(|r| vec![r]),
        Command::Logsing { m, operator } => logsing(m, &parse_operator(operator)?).map(|r| vec![r]),
        Command::ConformalCheck {
            m,
            operator,
            conformal_factor,
        } => conformal(m, &parse_operator(operator)?, conformal_factor.as_deref()).map(|r| vec![r]),
        Command::OddDimCheck { m, operator } => odd_dim(m, &parse_operator(operator)?).map(|r| vec![r]),
        Command::Oracle { name } => suite::run_oracle(name, timing).map(|r| vec![r]),
        Command::PaperSuite { slow } => Ok(suite::paper_suite(suite::SuiteOptions { slow: *slow, timing })),
    }
}

fn invariants(m: &MetricArgs) -> crate::Result<Report> {
    let n = file_dim(m)?;
    let g = load_metric(m, 4, "curvature invariants")?;
    let mut values = Map::new();
    for v in all_invariants(&g)? {
        values.insert(v.name.label().into(), num(v.value));
    }
    let mut r = base_report("invariants", m, n, &g);
    if n >= 3 {
        r = r.detail("|W|^2", num(weyl_norm_sq(&g)?.value));
    }
    if n >= 4 {
        let ct = cotton_v_u_phi(&g)?;
        let pairs: Vec<_> = (0..3).map(|s| (slot(0, s), slot(1, s))).collect();
        let c2 = contract_full(&[&ct.cotton, &ct.cotton], &pairs, &g.truncate(0))?.constant_term();
        r = r
            .detail("|C|^2", num(c2))
            .detail("weyl_max_abs", num(ct.weyl.max_abs_at_origin()))
            .detail("cotton_max_abs", num(ct.cotton.max_abs_at_origin()));
    }
    Ok(r.value(Value::Object(values)))
}

/// Closed-form value for γ where one is known, with its tolerance and
/// whether the tolerance is relative.
fn expected_gamma(spec: &OperatorSpec, g: &MetricJet) -> crate::Result<Option<(f64, f64, bool)>> {
    let n = g.dim();
    Ok(match spec.kind {
        OperatorKind::GjmsPrincipalStub(k) if 2 * k as usize == n => Some((critical_constant(n), 1e-8, true)),
        _ if n % 2 == 1 => Some((0.0, 1e-10, false)),
        OperatorKind::Yamabe if n == 4 => Some((0.0, 1e-8, false)),
        OperatorKind::Yamabe if n == 6 => {
            let w2 = weyl_norm_sq(g)?.value;
            Some((w2 / 360.0, if w2 < 1e-4 { 1e-10 } else { 1e-6 }, w2 >= 1e-4))
        }
        OperatorKind::Yamabe if n == 8 => {
            let phi = cotton_v_u_phi(g)?.phi.value;
            let w3 = weight3_weyl_invariants(g)?;
            Some(((81.0 * phi + 352.0 * w3[0].value + 64.0 * w3[1].value) / 90720.0, 1e-5, true))
        }
        _ => None,
    })
}

fn logsing(m: &MetricArgs, spec: &OperatorSpec) -> crate::Result<Report> {
    let n = file_dim(m)?;
    let mut need = required_jet_order(spec.order(), n)?;
    if matches!(spec.kind, OperatorKind::Yamabe) && n >= 6 && n % 2 == 0 {
        // the closed forms use curvature derivatives up to order n - 2
        need = need.max(n);
    }
    let g = load_metric(m, need, &format!("metric jet for {spec} in dimension {n}"))?;
    let ls = green_logsing(*spec, &g)?;
    let mut r = base_report("logsing", m, n, &g)
        .input("operator", spec.to_string())
        .detail("c_density", num(ls.c_density))
        .detail("imaginary_residue", num(ls.imaginary_residue));
    if let Some(h) = ls.heat_coefficient {
        r = r.detail("heat_coefficient", num(h));
    }
    Ok(match expected_gamma(spec, &g)? {
        Some((want, tol, relative)) => {
            let err = if relative { relative_error(ls.scalar_invariant, want) } else { (ls.scalar_invariant - want).abs() };
            r.judged(ls.scalar_invariant, want, err, tol)
                .detail("error_kind", if relative { "relative" } else { "absolute" })
        }
        None => r.value(num(ls.scalar_invariant)),
    })
}

fn conformal(m: &MetricArgs, spec: &OperatorSpec, factor: Option<&str>) -> crate::Result<Report> {
    let n = file_dim(m)?;
    let need = required_jet_order(spec.order(), n)?;
    let g = load_metric(m, need, &format!("metric jet for {spec} in dimension {n}"))?;
    let order = g.order();
    let (f, label) = match factor {
        Some(src) => (eval_jet(&parse(src)?, n, order)?, src.to_string()),
        None => (random_scalar_jet(n, order, m.seed + 500, 0.2), format!("random:{}", m.seed + 500)),
    };
    let c = conformal_check(*spec, &g, &f)?;
    let err = if c.matched_exponent == "-(w'-w)" { c.rel_error } else { c.rel_error_opposite };
    let expected = if c.matched_exponent == "-(w'-w)" { c.rhs } else { c.rhs_opposite };
    Ok(base_report("conformal-check", m, n, &g)
        .input("operator", spec.to_string())
        .input("conformal_factor", label)
        .judged(c.lhs, expected, err, 1e-8)
        .detail("matched_exponent", c.matched_exponent)
        .detail("rel_error", num(c.rel_error))
        .detail("rel_error_opposite", num(c.rel_error_opposite)))
}

fn odd_dim(m: &MetricArgs, spec: &OperatorSpec) -> crate::Result<Report> {
    let n = file_dim(m)?;
    let need = required_jet_order(spec.order(), n)?;
    let g = load_metric(m, need, &format!("metric jet for {spec} in dimension {n}"))?;
    let p = parity_vanishing_check(*spec, &g)?;
    let mut r = base_report("odd-dim-check", m, n, &g)
        .input("operator", spec.to_string())
        .judged(p.gamma_abs, 0.0, p.gamma_abs, 1e-10)
        .detail("term_parity", p.parity_ok)
        .detail("terms_checked", p.terms_checked);
    if !p.parity_ok {
        r.passed = Some(false);
    }
    Ok(r)
}
