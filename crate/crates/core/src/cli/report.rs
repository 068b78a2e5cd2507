//! Machine-readable check reports.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// One check result. Field order is the serialization order.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub schema_version: u32,
    pub check: String,
    pub inputs: Map<String, Value>,
    pub value: Value,
    pub expected: Option<Value>,
    pub tolerance: Option<f64>,
    pub passed: Option<bool>,
    pub runtime_ms: Option<f64>,
    pub details: Map<String, Value>,
}

impl Report {
    pub fn new(check: impl Into<String>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            check: check.into(),
            inputs: Map::new(),
            value: Value::Null,
            expected: None,
            tolerance: None,
            passed: None,
            runtime_ms: None,
            details: Map::new(),
        }
    }

    pub fn input(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.inputs.insert(key.into(), v.into());
        self
    }

    pub fn detail(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.details.insert(key.into(), v.into());
        self
    }

    pub fn value(mut self, v: impl Into<Value>) -> Self {
        self.value = v.into();
        self
    }

    /// Scalar comparison; `error` is whatever distance the check uses.
    pub fn judged(mut self, value: f64, expected: f64, error: f64, tolerance: f64) -> Self {
        self.value = num(value);
        self.expected = Some(num(expected));
        self.tolerance = Some(tolerance);
        self.passed = Some(error <= tolerance);
        self.details.insert("error".into(), num(error));
        self
    }

    pub fn failed(&self) -> bool {
        self.passed == Some(false)
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Compact JSON with every float written to 17 significant digits, so equal
/// inputs give byte-identical output.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", fixed(v))
    }
}

fn fixed(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser).expect("reports serialize");
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => fixed(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => to_json(other),
    }
}

/// Writes the reports; `tolerance_report` adds the margin column or line.
pub fn render(reports: &[Report], format: Format, tolerance_report: bool) -> String {
    match format {
        Format::Json => {
            let mut s = if reports.len() == 1 {
                to_json(&reports[0])
            } else {
                to_json(&reports)
            };
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(vec![]);
            let mut header = vec!["check", "value", "expected", "tolerance", "passed", "runtime_ms", "inputs"];
            if tolerance_report {
                header.push("margin");
            }
            w.write_record(&header).expect("in-memory write");
            for r in reports {
                let mut row = vec![
                    r.check.clone(),
                    cell(&r.value),
                    r.expected.as_ref().map(cell).unwrap_or_default(),
                    r.tolerance.map(fixed).unwrap_or_default(),
                    r.passed.map(|p| p.to_string()).unwrap_or_default(),
                    r.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
                    to_json(&r.inputs),
                ];
                if tolerance_report {
                    row.push(margin(r).map(fixed).unwrap_or_default());
                }
                w.write_record(&row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("CSV is UTF-8")
        }
        Format::Text => {
            let mut s = String::new();
            for r in reports {
                let status = match r.passed {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "INFO",
                };
                s.push_str(&format!("{status} {}: value {}", r.check, cell(&r.value)));
                if let Some(e) = &r.expected {
                    s.push_str(&format!(", expected {}", cell(e)));
                }
                if let Some(t) = r.tolerance {
                    s.push_str(&format!(", tolerance {t:e}"));
                }
                if let Some(ms) = r.runtime_ms {
                    s.push_str(&format!(" ({ms:.1} ms)"));
                }
                s.push('\n');
                if tolerance_report {
                    if let Some(m) = margin(r) {
                        s.push_str(&format!("    margin {m:e} (error {})\n", cell(&r.details["error"])));
                    }
                }
                for (k, v) in &r.details {
                    s.push_str(&format!("    {k}: {}\n", cell(v)));
                }
            }
            s
        }
    }
}

/// `tolerance - error`; positive means the check passed with room to spare.
pub fn margin(r: &Report) -> Option<f64> {
    let err = r.details.get("error")?.as_f64()?;
    Some(r.tolerance? - err)
}
